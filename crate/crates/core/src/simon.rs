//! Simon's period-finding subroutine, simulated exactly over truth tables.
//!
//! One call to [`SimonSampler::sample`] reproduces the measurement statistics
//! of a single run of the circuit: measuring the output register picks a
//! value `v` with probability `|f^-1(v)| / 2^n`, which is the same as drawing
//! `x0` uniformly and setting `v = f(x0)`. The input register then holds the
//! uniform superposition over `S = f^-1(v)`, and after the final Hadamard
//! layer `y` is observed with probability
//!
//! ```text
//! Pr[y | v] = (sum_{x in S} (-1)^{x.y})^2 / (2^n |S|)
//! ```
//!
//! The amplitude sum is the Walsh-Hadamard transform of the indicator of `S`.
//! Small preimages are sampled by rejection instead, which is exact as well
//! since the squared amplitude never exceeds `|S|^2`.
//!
//! Building the truth table is simulation overhead. Only samples count as
//! superposition queries.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};

/// Number of fresh random points used to confirm a candidate period.
pub const VERIFY_CHECKS: usize = 16;

/// Constant from the success bound `1 - 2^n * 0.6454^(cn)`.
pub const SIMON_FAILURE_BASE: f64 = 0.6454;

/// Explicit truth table of a map `{0,1}^n -> {0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanFunctionTable {
    width: u32,
    table: Vec<u32>,
}

impl BooleanFunctionTable {
    pub fn new(width: u32, table: Vec<u32>) -> Result<Self> {
        if width == 0 || width > 16 {
            return Err(Error::WidthOutOfRange(width));
        }
        let expected = 1usize << width;
        if table.len() != expected {
            return Err(Error::TableLength { got: table.len(), expected });
        }
        if let Some(&bad) = table.iter().find(|&&v| v as usize >= expected) {
            return Err(Error::ValueOutOfRange { value: bad, width });
        }
        Ok(Self { width, table })
    }

    /// Evaluates `f` on every input.
    pub fn from_fn(width: u32, f: impl FnMut(u32) -> u32) -> Result<Self> {
        Self::new(width, (0..1u32 << width).map(f).collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u32 {
        self.table[x as usize]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.table
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }

    /// `true` iff `f(x ^ s) == f(x)` for every `x`.
    pub fn has_period(&self, s: u32) -> bool {
        self.table.iter().enumerate().all(|(x, &v)| self.table[x ^ s as usize] == v)
    }
}

/// A perfectly 2-to-1 function with hidden period `s != 0`: each coset
/// `{x, x ^ s}` gets its own output, drawn without repetition.
pub fn planted_period_table<R: Rng + ?Sized>(
    width: u32,
    s: u32,
    rng: &mut R,
) -> Result<BooleanFunctionTable> {
    let n = 1u32 << width;
    if s == 0 || s >= n {
        return Err(Error::ValueOutOfRange { value: s, width });
    }
    let mut outputs: Vec<u32> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(outputs.as_mut_slice(), rng);
    let mut table = vec![u32::MAX; n as usize];
    let mut next = 0;
    for x in 0..n {
        if table[x as usize] == u32::MAX {
            table[x as usize] = outputs[next];
            table[(x ^ s) as usize] = outputs[next];
            next += 1;
        }
    }
    BooleanFunctionTable::new(width, table)
}

fn parity(x: u32) -> u32 {
    x.count_ones() & 1
}

/// In-place unnormalized fast Walsh-Hadamard transform.
pub fn walsh_hadamard(data: &mut [i32]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for chunk in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Exact Simon measurement sampler for one truth table. Preimage classes are
/// indexed once at construction.
pub struct SimonSampler<'a> {
    f: &'a BooleanFunctionTable,
    class_start: Vec<u32>,
    members: Vec<u32>,
    scratch: Vec<i32>,
}

impl<'a> SimonSampler<'a> {
    pub fn new(f: &'a BooleanFunctionTable) -> Self {
        let n = f.table.len();
        let mut counts = vec![0u32; n + 1];
        for &v in &f.table {
            counts[v as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let class_start = counts.clone();
        let mut fill = counts;
        let mut members = vec![0u32; n];
        for (x, &v) in f.table.iter().enumerate() {
            members[fill[v as usize] as usize] = x as u32;
            fill[v as usize] += 1;
        }
        Self { f, class_start, members, scratch: Vec::new() }
    }

    pub fn preimage(&self, v: u32) -> &[u32] {
        let lo = self.class_start[v as usize] as usize;
        let hi = self.class_start[v as usize + 1] as usize;
        &self.members[lo..hi]
    }

    /// Draws one measurement outcome `y`.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let width = self.f.width;
        let size = 1u32 << width;
        let x0 = rng.gen_range(0..size);
        let v = self.f.eval(x0);
        let lo = self.class_start[v as usize] as usize;
        let hi = self.class_start[v as usize + 1] as usize;
        let class_len = hi - lo;
        if class_len == 1 {
            return rng.gen_range(0..size);
        }
        if (class_len * class_len) as u64 <= width as u64 * size as u64 {
            let set = &self.members[lo..hi];
            let bound = (class_len * class_len) as u64;
            loop {
                let y = rng.gen_range(0..size);
                let amp: i64 = set.iter().map(|&x| 1 - 2 * parity(x & y) as i64).sum();
                if rng.gen_range(0..bound) < (amp * amp) as u64 {
                    return y;
                }
            }
        }
        self.scratch.clear();
        self.scratch.resize(size as usize, 0);
        for &x in &self.members[lo..hi] {
            self.scratch[x as usize] = 1;
        }
        walsh_hadamard(&mut self.scratch);
        // Parseval: sum of squares is 2^n |S|
        let total = size as u64 * class_len as u64;
        let mut r = rng.gen_range(0..total);
        for (y, &w) in self.scratch.iter().enumerate() {
            let weight = (w as i64 * w as i64) as u64;
            if r < weight {
                return y as u32;
            }
            r -= weight;
        }
        unreachable!("weights sum to 2^n |S|")
    }
}

/// Draws a single Simon measurement from `f`.
pub fn simon_sample<R: Rng + ?Sized>(f: &BooleanFunctionTable, rng: &mut R) -> u32 {
    SimonSampler::new(f).sample(rng)
}

/// Linearly independent vectors over GF(2), kept in echelon form keyed by
/// leading bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Basis {
    width: u32,
    // rows[p] has leading bit p, or is 0 when no such row exists
    rows: Vec<u32>,
    rank: usize,
}

impl Gf2Basis {
    pub fn new(width: u32) -> Self {
        Self { width, rows: vec![0; width as usize], rank: 0 }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The stored rows, highest leading bit first.
    pub fn rows(&self) -> Vec<u32> {
        self.rows.iter().rev().copied().filter(|&r| r != 0).collect()
    }

    /// Reduces `y` against the basis and inserts the remainder if nonzero.
    /// Returns whether the rank grew.
    pub fn add_row(&mut self, y: u32) -> bool {
        let mut y = y & ((1u64 << self.width) - 1) as u32;
        while y != 0 {
            let lead = 31 - y.leading_zeros();
            let row = self.rows[lead as usize];
            if row == 0 {
                self.rows[lead as usize] = y;
                self.rank += 1;
                return true;
            }
            y ^= row;
        }
        false
    }

    /// The unique nonzero `s` orthogonal to every row, when rank is `n - 1`.
    pub fn nullspace_1d(&self) -> Result<u32> {
        let needed = self.width as usize - 1;
        if self.rank != needed {
            return Err(Error::RankDeficient { rank: self.rank, needed });
        }
        let mut rows = self.rows.clone();
        // back-substitute into reduced echelon form
        for p in 0..rows.len() {
            if rows[p] == 0 {
                continue;
            }
            for q in 0..rows.len() {
                if q != p && rows[q] >> p & 1 == 1 {
                    rows[q] ^= rows[p];
                }
            }
        }
        let free = rows.iter().position(|&r| r == 0).expect("exactly one free column");
        let mut s = 1u32 << free;
        for (p, &r) in rows.iter().enumerate() {
            if r != 0 && r >> free & 1 == 1 {
                s |= 1 << p;
            }
        }
        Ok(s)
    }
}

/// Outcome of a period search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodResult {
    pub s: Option<u32>,
    /// Simon samples consumed.
    pub queries: usize,
    pub verified: bool,
    /// Rank reached by the samples; 0 means every sample was the zero vector.
    pub rank: usize,
}

/// Samples until the basis has rank `n - 1` or `max_queries` runs out, solves
/// for the period and confirms it classically at [`VERIFY_CHECKS`] random
/// points.
pub fn recover_period<R: Rng + ?Sized>(
    f: &BooleanFunctionTable,
    rng: &mut R,
    max_queries: usize,
) -> PeriodResult {
    let width = f.width();
    let mut sampler = SimonSampler::new(f);
    let mut basis = Gf2Basis::new(width);
    let mut queries = 0;
    while basis.rank() + 1 < width as usize && queries < max_queries {
        basis.add_row(sampler.sample(rng));
        queries += 1;
    }
    let rank = basis.rank();
    let Ok(s) = basis.nullspace_1d() else {
        return PeriodResult { s: None, queries, verified: false, rank };
    };
    let size = 1u32 << width;
    let verified = (0..VERIFY_CHECKS).all(|_| {
        let x = rng.gen_range(0..size);
        f.eval(x) == f.eval(x ^ s)
    });
    PeriodResult { s: verified.then_some(s), queries, verified, rank }
}

/// Every nonzero `s` with `f(x ^ s) = f(x)` for all `x`, by exhaustive scan.
pub fn brute_force_periods(f: &BooleanFunctionTable) -> BTreeSet<u32> {
    (1..1u32 << f.width()).filter(|&s| f.has_period(s)).collect()
}

/// `log2` of the failure term `2^n * 0.6454^(cn)`.
pub fn failure_log2(n: u32, c: f64) -> f64 {
    n as f64 + c * n as f64 * SIMON_FAILURE_BASE.log2()
}

/// Lower bound `1 - 2^n * 0.6454^(cn)` on the success probability of `cn`
/// Simon queries, clamped to `[0, 1]`.
pub fn prob_lower_bound(n: u32, c: f64) -> f64 {
    (1.0 - failure_log2(n, c).exp2()).clamp(0.0, 1.0)
}
