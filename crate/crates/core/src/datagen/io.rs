//! Pool text files and the binary dataset format.
//!
//! Dataset layout, all integers little-endian:
//!
//! ```text
//! "PLSD" | version u8 = 1 | n u16 | count u64
//! count x ( k u16 | k x pair u32, ascending | target u32 )
//! ```

use std::io::{BufRead, Read, Write};

use super::{Dataset, SolutionPool};
use crate::error::{Error, Result};
use crate::grid::{Example, Grid, GridShape, PairIndex, PartialAssignment};

pub const DATASET_MAGIC: &[u8; 4] = b"PLSD";
pub const DATASET_VERSION: u8 = 0x01;

pub fn write_pool<W: Write>(pool: &SolutionPool, mut w: W) -> Result<()> {
    writeln!(w, "n={}", pool.shape().n())?;
    for g in pool.solutions() {
        writeln!(w, "{}", g.to_line())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pool<R: BufRead>(r: R) -> Result<SolutionPool> {
    let mut lines = r.lines().enumerate();
    let shape = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                msg: "missing `n=<N>` header".into(),
            });
        };
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let n = line
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `n=<N>` header, found {line:?}"),
            })?;
        break GridShape::new(n).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
    };

    let mut solutions = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
        let g = Grid::parse_line(shape, &line).map_err(|e| parse_err(e.to_string()))?;
        if !g.is_latin_square() {
            return Err(parse_err("not a Latin square".into()));
        }
        solutions.push(g);
    }
    SolutionPool::new(shape, solutions)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut w: W) -> Result<()> {
    let shape = dataset.shape();
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&[DATASET_VERSION])?;
    w.write_all(&(shape.n() as u16).to_le_bytes())?;
    w.write_all(&(dataset.len() as u64).to_le_bytes())?;
    for e in dataset.examples() {
        let k = e.x.fill_level();
        w.write_all(&(k as u16).to_le_bytes())?;
        for p in e.x.iter_ones() {
            w.write_all(&(p.index() as u32).to_le_bytes())?;
        }
        w.write_all(&(e.y.index() as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format(format!("bad dataset magic {magic:?}")));
    }
    let [version] = read_exact(&mut r)?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let n = u16::from_le_bytes(read_exact(&mut r)?) as usize;
    let shape = GridShape::new(n).map_err(|e| Error::Format(e.to_string()))?;
    let count = u64::from_le_bytes(read_exact(&mut r)?);
    let m = shape.m();

    let mut examples = Vec::with_capacity(count.min(1 << 24) as usize);
    for i in 0..count {
        let k = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut x = PartialAssignment::empty(shape);
        let mut prev: Option<usize> = None;
        for _ in 0..k {
            let j = u32::from_le_bytes(read_exact(&mut r)?) as usize;
            if j >= m || prev.is_some_and(|p| p >= j) {
                return Err(Error::Format(format!("example {i}: pair indices not ascending in range")));
            }
            prev = Some(j);
            x.set(PairIndex::new(j));
        }
        let y = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let e = Example::new(x, PairIndex::new(y)).map_err(|e| Error::Format(format!("example {i}: {e}")))?;
        examples.push(e);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after the last example".into()));
    }
    Dataset::new(shape, examples)
}
