//! Madow's systematic sampling: a `k`-subset whose inclusion probabilities
//! are exactly the coordinates of a hypersimplex point.
//!
//! Lay the `p_i` end to end on `[0, k)` and select the items whose intervals
//! contain one of the `k` points `u, u + 1, ..., u + k - 1`. Each interval has
//! length at most one, so no item is hit twice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersimplex::HypersimplexPoint;

/// Largest tolerated gap between the raw prefix total and `k`.
pub const PREFIX_DRIFT_TOL: f64 = 1e-6;

/// A sorted set of distinct 0-based item indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampledSet(Vec<usize>);

impl SampledSet {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

fn prefix_sums(p: &HypersimplexPoint) -> Result<Vec<f64>> {
    let k = p.k() as f64;
    let mut pi = Vec::with_capacity(p.n() + 1);
    pi.push(0.0);
    let mut acc = 0.0;
    for &x in p.as_slice() {
        acc += x.clamp(0.0, 1.0);
        pi.push(acc);
    }
    if (acc - k).abs() > PREFIX_DRIFT_TOL {
        return Err(Error::Contract(format!(
            "prefix sums end at {acc}, expected {k}"
        )));
    }
    // Pin the total so the last point u + k - 1 < k always lands.
    for v in pi.iter_mut() {
        *v = v.min(k);
    }
    *pi.last_mut().unwrap() = k;
    Ok(pi)
}

fn scan(pi: &[f64], k: usize, u: f64) -> Vec<usize> {
    let n = pi.len() - 1;
    let mut out = Vec::with_capacity(k);
    let mut j = 0;
    for i in 0..k {
        let target = u + i as f64;
        while j < n && pi[j + 1] <= target {
            j += 1;
        }
        // Rounding can leave two targets inside one interval; take the next
        // unselected item with positive mass instead.
        if out.last() == Some(&j) {
            j += 1;
            while j < n - 1 && pi[j + 1] <= pi[j] {
                j += 1;
            }
        }
        out.push(j.min(n - 1));
    }
    out
}

/// Selects item `j` iff `Pi_j <= u + i < Pi_{j+1}` for some `i < k`.
pub fn madow_sample(p: &HypersimplexPoint, u: f64) -> Result<SampledSet> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidInput(format!("u = {u} outside [0, 1)")));
    }
    let pi = prefix_sums(p)?;
    let picked = scan(&pi, p.k(), u);
    debug_assert!(picked.windows(2).all(|w| w[0] < w[1]));
    Ok(SampledSet(picked))
}

/// Draws `u ~ U[0, 1)` from `rng` and samples; `u` is returned for replay.
pub fn draw<R: Rng + ?Sized>(p: &HypersimplexPoint, rng: &mut R) -> Result<(SampledSet, f64)> {
    let u: f64 = rng.gen();
    Ok((madow_sample(p, u)?, u))
}

/// Every outcome of [`madow_sample`] with its probability under `u ~ U[0, 1)`.
///
/// The selected set only changes where `u` crosses the fractional part of a
/// prefix sum, so evaluating one point per breakpoint interval is exact.
pub fn enumerate_outcomes(p: &HypersimplexPoint) -> Result<Vec<(SampledSet, f64)>> {
    let pi = prefix_sums(p)?;
    let mut cuts: Vec<f64> = pi.iter().map(|x| x - x.floor()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<(SampledSet, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let set = SampledSet(scan(&pi, p.k(), 0.5 * (w[0] + w[1])));
        match out.iter_mut().find(|(s, _)| *s == set) {
            Some((_, mass)) => *mass += len,
            None => out.push((set, len)),
        }
    }
    Ok(out)
}

/// Exact inclusion probability of each item, from [`enumerate_outcomes`].
pub fn exact_inclusion_measure(p: &HypersimplexPoint) -> Result<Vec<f64>> {
    let mut incl = vec![0.0; p.n()];
    for (set, mass) in enumerate_outcomes(p)? {
        for &i in set.indices() {
            incl[i] += mass;
        }
    }
    Ok(incl)
}
