use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::format_g;
use crate::linreg::min_bits;

/// Qubit requirement of an explicit precision-vector encoding versus the
/// freely chosen number of rows `n` used per QCQO iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitRow {
    pub epsilon: f64,
    pub bits_per_value: u32,
    pub total_bits: usize,
    pub qcqo_n: usize,
}

pub fn compare_qubit_counts(d: usize, epsilons: &[f64], qcqo_n: usize) -> Result<Vec<QubitRow>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    epsilons
        .iter()
        .map(|&epsilon| {
            if !(epsilon > 0.0 && epsilon <= 0.5) {
                return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 0.5], got {epsilon}")));
            }
            let bits_per_value = min_bits(epsilon)?;
            Ok(QubitRow { epsilon, bits_per_value, total_bits: d * bits_per_value as usize, qcqo_n })
        })
        .collect()
}

pub fn write_qubit_table<W: Write>(rows: &[QubitRow], mut out: W) -> Result<()> {
    writeln!(out, "epsilon,bits_per_value,total_bits,qcqo_n")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", format_g(r.epsilon, 10), r.bits_per_value, r.total_bits, r.qcqo_n)?;
    }
    Ok(())
}
