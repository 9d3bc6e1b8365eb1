//! Plain-text QUBO dump for debugging.
//!
//! First line `n`, then one line `i j Q_ij` per nonzero entry with `i <= j`
//! (0-indexed, `%.17g`). Values are entries of the symmetric matrix, so the
//! reader mirrors each off-diagonal entry to `(j, i)`.

use std::io::{BufRead, Write};

use super::QuboInstance;
use crate::error::{Error, Result};
use crate::fmt::format_g;

pub fn write_dump<W: Write>(instance: &QuboInstance, mut out: W) -> Result<()> {
    let n = instance.num_vars();
    writeln!(out, "{n}")?;
    for i in 0..n {
        for j in i..n {
            let v = instance.get(i, j);
            if v != 0.0 {
                writeln!(out, "{i} {j} {}", format_g(v, 17))?;
            }
        }
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(input: R) -> Result<QuboInstance> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty QUBO dump".into()))??;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad size line {header:?}")))?;
    if n == 0 {
        return Err(Error::Parse("QUBO dump declares zero variables".into()));
    }
    let mut data = vec![0.0; n * n];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("line {}: expected `i j value`, got {line:?}", lineno + 2));
        let mut parts = line.split_whitespace();
        let i: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() || i > j || j >= n {
            return Err(bad());
        }
        data[i * n + j] = v;
        data[j * n + i] = v;
    }
    Ok(QuboInstance::from_symmetric_unchecked(n, data))
}
