use super::{bits_from_code, QuboInstance, QuboSolver, SolveResult};
use crate::error::{Error, Result};

/// Default hard cap on the number of variables for full enumeration.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 25;

// Recompute the high-bit energy and fields from scratch every this many
// high-bit flips so rounding drift cannot accumulate.
const RESYNC_INTERVAL: u64 = 1 << 10;

/// Exact solver enumerating all `2^n` assignments in Gray-code order.
///
/// Each Gray-code step flips one bit and updates the energy and the local
/// fields `g_i = Σ_j Q_ij z_j` in `O(n)`; see [`gray_code_argmin`]. Ties are broken towards the smallest
/// assignment read as an unsigned integer with `z_1` as least significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Exhaustive {
    pub max_vars: usize,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Self { max_vars: DEFAULT_EXHAUSTIVE_CAP }
    }
}

impl Exhaustive {
    pub fn with_cap(max_vars: usize) -> Self {
        Self { max_vars }
    }
}

impl QuboSolver for Exhaustive {
    fn solve(&self, instance: &QuboInstance, _seed: u64) -> Result<SolveResult> {
        let n = instance.num_vars();
        // u64 codes and the shift below need n < 64 regardless of the cap
        if n > self.max_vars || n >= 63 {
            return Err(Error::TooLarge { n, cap: self.max_vars.min(62) });
        }
        let (code, evaluations) = gray_code_argmin(instance);
        Ok(SolveResult::finish(instance, bits_from_code(code, n), self.id(), evaluations))
    }

    fn id(&self) -> &'static str {
        "exhaustive"
    }
}

// Low variables enumerated as a dense block per high-bit assignment.
const BLOCK_BITS: usize = 10;
const NIBBLE: usize = 6;

/// Enumerates all assignments as `2^(n-m)` blocks of `2^m` low-bit states.
///
/// The high bits follow a Gray code with incremental energy and field
/// updates. Within a block the energy splits into the high-only part, the
/// low-only part (tabulated once) and a cross term linear in the low bits,
/// which is tabulated per nibble. The block scan is then two adds per
/// state over contiguous tables.
fn gray_code_argmin(instance: &QuboInstance) -> (u64, u64) {
    let n = instance.num_vars();
    let m = n.min(BLOCK_BITS);
    let high = n - m;
    let lo_bits = m.min(NIBBLE);
    let lo_len = 1usize << lo_bits;
    let block = 1usize << m;

    let low_energy: Vec<f64> = (0..block)
        .map(|z| {
            let bits = bits_from_code(z as u64, m);
            let mut e = 0.0;
            for i in (0..m).filter(|&i| bits[i] == 1) {
                e += instance.get(i, i);
                for j in (i + 1..m).filter(|&j| bits[j] == 1) {
                    e += 2.0 * instance.get(i, j);
                }
            }
            e
        })
        .collect();

    // fields[i] = Σ_{j high} Q_ij z_j, for every variable i
    let mut fields = vec![0.0f64; n];
    let mut high_energy = 0.0f64;
    let mut high_code = 0u64;

    let mut lo_table = vec![0.0f64; lo_len];
    let mut hi_table = vec![0.0f64; 1 << (m - lo_bits)];
    let mut values = vec![0.0f64; block];

    let mut best_energy = 0.0f64;
    let mut best_code = 0u64;

    for step in 0..(1u64 << high) {
        if step > 0 {
            let k = m + step.trailing_zeros() as usize;
            let bit = 1u64 << (k - m);
            let sign = if high_code & bit == 0 { 1.0 } else { -1.0 };
            high_energy += instance.get(k, k) + 2.0 * sign * fields[k];
            high_code ^= bit;
            for (g, &q) in fields.iter_mut().zip(instance.row(k)) {
                *g += sign * q;
            }
            if step % RESYNC_INTERVAL == 0 {
                high_energy = resync(instance, m, high_code, &mut fields);
            }
        }

        fill_subset_sums(&mut lo_table, &fields[..lo_bits]);
        fill_subset_sums(&mut hi_table, &fields[lo_bits..m]);
        let rows = values.chunks_exact_mut(lo_len).zip(low_energy.chunks_exact(lo_len));
        for ((out, low), &hi) in rows.zip(&hi_table) {
            let base = high_energy + hi;
            for ((v, &e), &lo) in out.iter_mut().zip(low).zip(&lo_table) {
                *v = base + (e + lo);
            }
        }
        let block_min = lane_min(&values);
        if block_min > best_energy {
            continue;
        }
        let z = values.iter().position(|&v| v == block_min).expect("min is attained");
        let code = (high_code << m) | z as u64;
        if block_min < best_energy || code < best_code {
            best_energy = block_min;
            best_code = code;
        }
    }
    (best_code, 1u64 << n)
}

fn lane_min(values: &[f64]) -> f64 {
    let mut lanes = [f64::INFINITY; 4];
    let chunks = values.chunks_exact(4);
    let tail = chunks.remainder().iter().copied().fold(f64::INFINITY, f64::min);
    for chunk in chunks {
        for (acc, &v) in lanes.iter_mut().zip(chunk) {
            if v < *acc {
                *acc = v;
            }
        }
    }
    lanes.into_iter().fold(tail, f64::min)
}

/// `table[s] = Σ_{k ∈ s} 2·cross[k]` for every subset `s` of the low block.
fn fill_subset_sums(table: &mut [f64], cross: &[f64]) {
    table[0] = 0.0;
    for s in 1..table.len() {
        let k = s.trailing_zeros() as usize;
        table[s] = table[s & (s - 1)] + 2.0 * cross[k];
    }
}

/// Recomputes the high-bit fields and high-only energy from scratch.
fn resync(instance: &QuboInstance, m: usize, high_code: u64, fields: &mut [f64]) -> f64 {
    let n = instance.num_vars();
    let is_set = |j: usize| j >= m && (high_code >> (j - m)) & 1 == 1;
    let mut energy = 0.0;
    for (i, g) in fields.iter_mut().enumerate() {
        let row = instance.row(i);
        *g = (0..n).filter(|&j| is_set(j)).map(|j| row[j]).sum();
        if is_set(i) {
            energy += *g;
        }
    }
    energy
}
