//! Linear surrogates from the alpha-core of a reward function.
//!
//! A vector `g` is alpha-admissible for `f` when `sum_i g_i = f([n])` and
//! `sum_{i in S} g_i <= alpha f(S)` for every `S`. This module builds such
//! vectors (marginal, dictator, Shapley, matching duals) and verifies them by
//! enumeration on small ground sets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::setfn::{ensure_enumerable, value_table, SetFunction, N_ENUM_MAX};

/// Default absolute tolerance for core checks.
pub const CORE_TOL: f64 = 1e-7;
/// Guard for [`avg_submodular_shapley_check`].
pub const N_AVG_SUBMOD_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Marginal,
    Dictator,
    Shapley,
    MatchingDual,
    External,
}

/// A candidate core vector together with the admissibility level it claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleVector {
    pub g: Vec<f64>,
    pub alpha: Option<f64>,
    pub provenance: Provenance,
}

impl AdmissibleVector {
    pub fn norm(&self) -> f64 {
        self.g.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidInput(format!(
            "permutation of length {} for n = {n}",
            perm.len()
        )));
    }
    for &i in perm {
        if i >= n || seen[i] {
            return Err(Error::InvalidInput(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Greedy marginal gains along `perm`: `g_{perm[i]} = f(perm[..=i]) - f(perm[..i])`.
///
/// `alpha` is whatever the caller knows: 1 for submodular `f`, `1/rho` for
/// rho-submodular `f`.
pub fn marginal_vector(
    f: &dyn SetFunction,
    perm: &[usize],
    alpha: Option<f64>,
) -> Result<AdmissibleVector> {
    let n = f.n();
    check_permutation(perm, n)?;
    let mut g = vec![0.0; n];
    let mut prev = 0.0;
    for len in 1..=n {
        let v = f.eval(&perm[..len]);
        g[perm[len - 1]] = v - prev;
        prev = v;
    }
    Ok(AdmissibleVector {
        g,
        alpha,
        provenance: Provenance::Marginal,
    })
}

/// Monte-Carlo Shapley value from `num_perms` uniform permutations.
pub fn shapley_mc<R: Rng + ?Sized>(
    f: &dyn SetFunction,
    num_perms: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if num_perms == 0 {
        return Err(Error::InvalidInput("num_perms must be positive".into()));
    }
    let n = f.n();
    let mut acc = vec![0.0; n];
    for _ in 0..num_perms {
        let perm = random_permutation(n, rng);
        let m = marginal_vector(f, &perm, None)?;
        for (a, x) in acc.iter_mut().zip(m.g) {
            *a += x;
        }
    }
    let scale = 1.0 / num_perms as f64;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

// Weight of a coalition of size s not containing i: s! (n-s-1)! / n!.
fn shapley_weights(n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    let mut binom = 1.0;
    for s in 0..n {
        w.push(1.0 / (n as f64 * binom));
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    w
}

/// Exact Shapley value by the subset formula.
pub fn shapley_exact(f: &dyn SetFunction) -> Result<Vec<f64>> {
    let n = f.n();
    let t = value_table(f)?;
    let w = shapley_weights(n);
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for s in 0..1usize << n {
            if s & bit == 0 {
                *p += w[s.count_ones() as usize] * (t[s | bit] - t[s]);
            }
        }
    }
    Ok(phi)
}

/// Lowest index `i` with `f({i}) >= m`.
pub fn find_dictator(f: &dyn SetFunction, m: f64) -> Option<usize> {
    (0..f.n()).find(|&i| f.eval(&[i]) >= m)
}

/// All mass `f([n])` on the dictator; claims `alpha = f([n]) / m`.
pub fn dictator_vector(f: &dyn SetFunction, i_star: usize, m: f64) -> Result<AdmissibleVector> {
    let n = f.n();
    if i_star >= n {
        return Err(Error::InvalidInput(format!(
            "dictator {i_star} outside ground set of {n}"
        )));
    }
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "dictator level m = {m} must be positive"
        )));
    }
    let full = f.full_value();
    let mut g = vec![0.0; n];
    g[i_star] = full;
    Ok(AdmissibleVector {
        g,
        alpha: Some((full / m).max(1.0)),
        provenance: Provenance::Dictator,
    })
}

fn ensure_len(g: &[f64], n: usize) -> Result<()> {
    if g.len() != n {
        return Err(Error::InvalidInput(format!(
            "vector of length {} for n = {n}",
            g.len()
        )));
    }
    ensure_finite(g, "g")
}

// Sums of g over every bitmask.
fn subset_sums(g: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; 1 << g.len()];
    for mask in 1..s.len() {
        s[mask] = s[mask & (mask - 1)] + g[mask.trailing_zeros() as usize];
    }
    s
}

/// Whether `g` is in the alpha-core of `f`, checking every feasible nonempty `S`.
pub fn core_membership(g: &[f64], f: &dyn SetFunction, alpha: f64, tol: f64) -> Result<bool> {
    let n = f.n();
    ensure_enumerable(n, N_ENUM_MAX)?;
    ensure_len(g, n)?;
    let sums = subset_sums(g);
    let full = (1usize << n) - 1;
    if (sums[full] - f.eval_mask(full as u64)).abs() > tol {
        return Ok(false);
    }
    for mask in 1..full {
        if f.is_feasible(mask as u64) && sums[mask] > alpha * f.eval_mask(mask as u64) + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest `alpha >= 1` for which the packing constraints hold.
///
/// Returns `+inf` when `g` puts more than `tol` mass on a set where `f` is 0.
/// The efficiency constraint is not part of this number.
pub fn tightest_alpha(g: &[f64], f: &dyn SetFunction) -> Result<f64> {
    let n = f.n();
    ensure_enumerable(n, N_ENUM_MAX)?;
    ensure_len(g, n)?;
    let sums = subset_sums(g);
    let mut alpha: f64 = 1.0;
    for mask in 1..1usize << n {
        if !f.is_feasible(mask as u64) {
            continue;
        }
        let v = f.eval_mask(mask as u64);
        if v > 0.0 {
            alpha = alpha.max(sums[mask] / v);
        } else if sums[mask] > CORE_TOL {
            return Ok(f64::INFINITY);
        }
    }
    Ok(alpha)
}

/// Optimal assignment and dual potentials of a square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingDuals {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `assignment[i]` is the column matched to row `i`.
    pub assignment: Vec<usize>,
    pub value: f64,
    /// False when no shift makes both `u` and `v` nonnegative; the duals are
    /// then centred to minimise their norm.
    pub nonnegative: bool,
}

// O(m^3) shortest augmenting path with potentials. Returns (u, v, assignment).
fn hungarian_core(w: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = w.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = w[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), assignment)
}

/// Minimum-cost perfect matching without input validation.
pub(crate) fn min_cost_matching(w: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let (_, _, a) = hungarian_core(w);
    let value = a.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
    (a, value)
}

/// Minimum-cost perfect matching with dual potentials.
///
/// The potentials satisfy `u_i + v_j <= w_ij`, with equality on matched
/// pairs, and `sum u + sum v = value`. They are then shifted by a constant
/// (`u + d`, `v - d`) toward nonnegativity, which keeps every balanced
/// subset sum unchanged.
pub fn hungarian_duals(w: &[Vec<f64>]) -> Result<MatchingDuals> {
    let m = w.len();
    if m == 0 || w.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput(
            "cost matrix must be nonempty and square".into(),
        ));
    }
    for row in w {
        ensure_finite(row, "w")?;
    }
    if w.iter().flatten().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput("costs must be nonnegative".into()));
    }
    let (mut u, mut v, assignment) = hungarian_core(w);
    let value = assignment.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_v = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let nonnegative = min_u + min_v >= -1e-12;
    let d = if !nonnegative {
        log::debug!(
            "no nonnegative dual shift exists (min u + min v = {})",
            min_u + min_v
        );
        (v.iter().sum::<f64>() - u.iter().sum::<f64>()) / (2 * m) as f64
    } else if min_u < 0.0 {
        -min_u
    } else if min_v < 0.0 {
        min_v
    } else {
        0.0
    };
    for x in u.iter_mut() {
        *x += d;
    }
    for x in v.iter_mut() {
        *x -= d;
    }
    if nonnegative {
        // absorb rounding left over from the shift
        for x in u.iter_mut().chain(v.iter_mut()) {
            *x = x.max(0.0);
        }
    }
    Ok(MatchingDuals {
        u,
        v,
        assignment,
        value,
        nonnegative,
    })
}

/// The dual vector `(u, v)` over the ground set `U` then `V`.
pub fn matching_core_vector(w: &[Vec<f64>]) -> Result<AdmissibleVector> {
    let d = hungarian_duals(w)?;
    let mut g = d.u;
    g.extend(d.v);
    Ok(AdmissibleVector {
        g,
        alpha: Some(1.0),
        provenance: Provenance::MatchingDual,
    })
}

/// Izawa-Takahashi criterion: true iff the Shapley value lies in the 1-core.
pub fn avg_submodular_shapley_check(f: &dyn SetFunction, tol: f64) -> Result<bool> {
    let n = f.n();
    ensure_enumerable(n, N_AVG_SUBMOD_MAX)?;
    let t = value_table(f)?;
    // weight for |S| = s is (s-1)! (n-s)! / n!, i.e. the Shapley weight of s - 1
    let w = shapley_weights(n);
    let full = (1usize << n) - 1;
    for tt in 0..=full {
        let mut total = 0.0;
        for s in 1..=full {
            let st = s & tt;
            let weight = w[s.count_ones() as usize - 1];
            let mut rest = st;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                total += weight * ((t[s] - t[s ^ bit]) - (t[st] - t[st ^ bit]));
                rest ^= bit;
            }
        }
        if total > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
