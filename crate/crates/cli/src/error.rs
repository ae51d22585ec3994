//! Error categories and the exit codes they map to.

use std::fmt;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Bad flags, config files, or mismatched inputs.
    Config,
    Io,
    /// Malformed input files.
    Format,
    /// A search or generation budget ran out.
    Resource,
    Numeric,
    /// Inputs that violate an operation's preconditions.
    Input,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Io => 3,
            Category::Format => 4,
            Category::Resource => 5,
            Category::Numeric => 6,
            Category::Input => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Io => "io",
            Category::Format => "format",
            Category::Resource => "resource",
            Category::Numeric => "numeric",
            Category::Input => "input",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(Category::Io, format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with a file name.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<plsk_core::Error> for CliError {
    fn from(err: plsk_core::Error) -> Self {
        use plsk_core::Error as E;
        let category = match &err {
            E::Range(_) | E::Shape { .. } => Category::Config,
            E::Encoding(_) | E::Precondition(_) => Category::Input,
            E::Numeric(_) => Category::Numeric,
            E::Resource(_) => Category::Resource,
            E::Parse { .. } | E::Format(_) => Category::Format,
            E::Io(_) => Category::Io,
        };
        Self::new(category, err.to_string())
    }
}
