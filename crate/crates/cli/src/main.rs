use clap::Parser;
use plsk_cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(err) = plsk_cli::run(cli) {
        eprintln!("{err}");
        std::process::exit(err.category.exit_code());
    }
}
