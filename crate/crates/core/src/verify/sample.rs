//! Node tuples `a <= x_0 < ... < x_k <= b` drawn from the ordered simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::VerifyError;

/// Tuples per strategy in the default sample.
pub const STRATIFIED_TUPLES: usize = 512;
pub const RANDOM_TUPLES: usize = 512;
/// Coarse grid whose full set of `(k+1)`-subsets joins the default sample.
pub const COARSE_GRID_POINTS: usize = 12;
const COARSE_SUBSET_LIMIT: usize = 4096;
/// Random and stratified tuples with a gap below this fraction of `b - a`
/// are skipped; the determinant loses all significant digits there.
const MIN_GAP: f64 = 1e-6;

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// All subsets of a uniform grid.
    Grid {
        points: usize,
    },
    Random {
        seed: u64,
    },
    /// Halton points sorted coordinate-wise.
    Stratified,
    /// Stratified + random + coarse-grid subsets.
    Default {
        seed: u64,
    },
    /// Caller-supplied tuples.
    Explicit,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplexSample {
    pub tuples: Vec<Vec<f64>>,
    pub strategy: Strategy,
}

impl SimplexSample {
    /// Validates that every tuple is strictly increasing inside `[a, b]`.
    pub fn from_tuples(a: f64, b: f64, tuples: Vec<Vec<f64>>) -> Result<Self, VerifyError> {
        for t in &tuples {
            check_tuple(a, b, t)?;
        }
        Ok(SimplexSample { tuples, strategy: Strategy::Explicit })
    }

    pub fn grid(a: f64, b: f64, k: usize, points: usize) -> Self {
        let nodes = uniform(a, b, points);
        let mut tuples = Vec::new();
        subsets(&nodes, k + 1, &mut Vec::new(), 0, &mut tuples);
        SimplexSample { tuples, strategy: Strategy::Grid { points } }
    }

    pub fn random(a: f64, b: f64, k: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32));
        let mut tuples = Vec::with_capacity(count);
        while tuples.len() < count {
            let mut t: Vec<f64> = (0..=k).map(|_| rng.gen_range(a..=b)).collect();
            t.sort_by(f64::total_cmp);
            if well_separated(a, b, &t) {
                tuples.push(t);
            }
        }
        SimplexSample { tuples, strategy: Strategy::Random { seed } }
    }

    pub fn stratified(a: f64, b: f64, k: usize, count: usize) -> Self {
        let dim = k + 1;
        assert!(dim <= PRIMES.len(), "stratified sampling supports up to {} nodes", PRIMES.len());
        let mut tuples = Vec::with_capacity(count);
        let mut index = 1u64;
        while tuples.len() < count {
            let mut t: Vec<f64> = PRIMES[..dim].iter().map(|&p| a + (b - a) * radical_inverse(index, p)).collect();
            t.sort_by(f64::total_cmp);
            if well_separated(a, b, &t) {
                tuples.push(t);
            }
            index += 1;
        }
        SimplexSample { tuples, strategy: Strategy::Stratified }
    }

    /// Default sample for tuples of `k + 1` nodes: 512 stratified, 512 seeded
    /// random, and every subset of a 12-point grid when there are at most
    /// 4096 of them.
    pub fn default_for(a: f64, b: f64, k: usize, seed: u64) -> Self {
        let mut tuples = Self::stratified(a, b, k, STRATIFIED_TUPLES).tuples;
        tuples.extend(Self::random(a, b, k, RANDOM_TUPLES, seed).tuples);
        if binomial(COARSE_GRID_POINTS, k + 1) <= COARSE_SUBSET_LIMIT {
            tuples.extend(Self::grid(a, b, k, COARSE_GRID_POINTS).tuples);
        }
        SimplexSample { tuples, strategy: Strategy::Default { seed } }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        match self.strategy {
            Strategy::Random { seed } | Strategy::Default { seed } => Some(seed),
            _ => None,
        }
    }
}

pub(crate) fn check_tuple(a: f64, b: f64, t: &[f64]) -> Result<(), VerifyError> {
    let inside = t.iter().all(|x| *x >= a && *x <= b);
    let increasing = t.windows(2).all(|w| w[0] < w[1]);
    if t.is_empty() || !inside || !increasing {
        return Err(VerifyError::BadNodes(t.to_vec()));
    }
    Ok(())
}

fn well_separated(a: f64, b: f64, t: &[f64]) -> bool {
    t.windows(2).all(|w| w[1] - w[0] > MIN_GAP * (b - a))
}

pub(crate) fn uniform(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    (0..points).map(|j| if j + 1 == points { b } else { a + (b - a) * j as f64 / (points - 1) as f64 }).collect()
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn subsets(nodes: &[f64], size: usize, cur: &mut Vec<f64>, start: usize, out: &mut Vec<Vec<f64>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for i in start..nodes.len() {
        if nodes.len() - i < size - cur.len() {
            break;
        }
        cur.push(nodes[i]);
        subsets(nodes, size, cur, i + 1, out);
        cur.pop();
    }
}
