//! Geometry of the capped simplex `{p in [0,1]^n : sum p = k}`.
//!
//! The (k, n)-hypersimplex is exactly the set of marginal inclusion
//! probability vectors realisable by sampling `k` of `n` items without
//! replacement. Every solver here returns a [`HypersimplexPoint`] that has
//! been passed through [`repair`], so downstream samplers never see a vector
//! that violates the box or the sum constraint by more than rounding noise.

mod afw;

pub use afw::{afw_minimize, ActiveSet, AfwOptions, AfwOutcome, AfwStart, QuadraticObjective};

use crate::error::{ensure_budget, ensure_finite, Error, Result};

/// Feasibility tolerance used when validating points.
pub const FEAS_TOL: f64 = 1e-9;

/// A marginal inclusion probability vector: `0 <= p_i <= 1`, `sum p_i = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersimplexPoint {
    k: usize,
    p: Vec<f64>,
}

impl HypersimplexPoint {
    /// Validates `p` against the box and sum constraints (tolerance
    /// [`FEAS_TOL`]).
    pub fn new(p: Vec<f64>, k: usize) -> Result<Self> {
        ensure_budget(p.len(), k)?;
        ensure_finite(&p, "p")?;
        if let Some(i) = p
            .iter()
            .position(|&x| !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&x))
        {
            return Err(Error::Infeasible(format!(
                "p[{i}] = {} outside [0, 1]",
                p[i]
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - k as f64).abs() > FEAS_TOL * (1.0 + k as f64) {
            return Err(Error::Infeasible(format!("sum p = {sum}, expected {k}")));
        }
        Ok(Self { k, p })
    }

    /// The barycentre `(k/n, ..., k/n)`.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        ensure_budget(n, k)?;
        Ok(Self {
            k,
            p: vec![k as f64 / n as f64; n],
        })
    }

    pub fn from_vertex(vertex: &Vertex, n: usize) -> Result<Self> {
        Self::new(vertex.indicator(n), vertex.len())
    }

    // Internal constructor for solver outputs that are feasible by construction.
    fn from_repaired(mut p: Vec<f64>, k: usize) -> Self {
        repair(&mut p, k);
        Self { k, p }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        dot(&self.p, v)
    }

    pub fn distance(&self, other: &HypersimplexPoint) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A vertex of the hypersimplex, stored as its sorted support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vertex(Vec<usize>);

impl Vertex {
    pub fn new(mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        Self(support)
    }

    pub fn support(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &i in &self.0 {
            out[i] = 1.0;
        }
        out
    }

    /// `<v, 1_self>`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().map(|&i| v[i]).sum()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clamps `p` into `[0, 1]` and spreads the residual `k - sum p` over the
/// coordinates that still have room, in proportion to that room.
pub fn repair(p: &mut [f64], k: usize) {
    for x in p.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    let residual = k as f64 - p.iter().sum::<f64>();
    if residual > 0.0 {
        let room: f64 = p.iter().map(|x| 1.0 - x).sum();
        if room > 0.0 {
            let scale = (residual / room).min(1.0);
            for x in p.iter_mut() {
                *x += scale * (1.0 - *x);
            }
        }
    } else if residual < 0.0 {
        let mass: f64 = p.iter().sum();
        if mass > 0.0 {
            let scale = (-residual / mass).min(1.0);
            for x in p.iter_mut() {
                *x -= scale * *x;
            }
        }
    }
    for x in p.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Maximiser of `<theta, p> - (1/eta) sum p_i ln p_i` over the hypersimplex.
///
/// The optimum has the form `p_i = min(1, c * exp(eta * theta_i))`. Sorting
/// `theta` in descending order, the number of capped coordinates `j` is the
/// smallest value for which the largest uncapped coordinate does not exceed
/// one. The suffix sums are kept relative to the current breakpoint, so no
/// exponential ever exceeds one.
pub fn entropic_ftrl_argmax(theta: &[f64], eta: f64, k: usize) -> Result<HypersimplexPoint> {
    let n = theta.len();
    ensure_budget(n, k)?;
    ensure_finite(theta, "theta")?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "learning rate must be positive and finite (got {eta})"
        )));
    }
    if k == n {
        return Ok(HypersimplexPoint { k, p: vec![1.0; n] });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
    let x: Vec<f64> = order.iter().map(|&i| eta * theta[i]).collect();
    ensure_finite(&x, "eta * theta")?;

    // suffix[j] = sum_{r >= j} exp(x_r - x_j)
    let mut suffix = vec![1.0; n];
    for j in (0..n - 1).rev() {
        suffix[j] = 1.0 + (x[j + 1] - x[j]).exp() * suffix[j + 1];
    }
    // j = k - 1 always qualifies since suffix >= 1.
    let capped = (0..k)
        .find(|&j| (k - j) as f64 <= suffix[j])
        .unwrap_or(k - 1);
    let scale = (k - capped) as f64 / suffix[capped];

    let mut p = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        p[i] = if rank < capped {
            1.0
        } else {
            scale * (x[rank] - x[capped]).exp()
        };
    }
    Ok(HypersimplexPoint::from_repaired(p, k))
}

/// Euclidean projection onto the hypersimplex.
///
/// The projection is `p_i = clamp(y_i - tau, 0, 1)` where `tau` solves
/// `phi(tau) = sum_i clamp(y_i - tau, 0, 1) = k`. `phi` is continuous,
/// non-increasing and piecewise linear with breakpoints `{y_i - 1, y_i}`;
/// sweeping the sorted breakpoints locates the linear piece containing the
/// root, which is then solved in closed form.
pub fn euclidean_project(y: &[f64], k: usize) -> Result<HypersimplexPoint> {
    let n = y.len();
    ensure_budget(n, k)?;
    ensure_finite(y, "y")?;
    if k == n {
        return Ok(HypersimplexPoint { k, p: vec![1.0; n] });
    }

    // (breakpoint, coordinate, leaves the upper bound?)
    let mut events: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * n);
    for (i, &yi) in y.iter().enumerate() {
        events.push((yi - 1.0, i, true));
        events.push((yi, i, false));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let kf = k as f64;
    let mut n_full = n;
    let mut n_active = 0usize;
    let mut active_sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut tau = events[events.len() - 1].0;
    for &(b, i, to_active) in &events {
        let phi = n_full as f64 + active_sum - n_active as f64 * b;
        if phi <= kf {
            tau = if n_active > 0 {
                ((n_full as f64 + active_sum - kf) / n_active as f64).clamp(prev, b)
            } else {
                b
            };
            break;
        }
        if to_active {
            n_full -= 1;
            n_active += 1;
            active_sum += y[i];
        } else {
            n_active -= 1;
            active_sum -= y[i];
        }
        prev = b;
    }

    // One Newton step on phi removes the drift accumulated in `active_sum`.
    let (phi, free) = y.iter().fold((0.0, 0usize), |(s, m), &yi| {
        let v = yi - tau;
        (s + v.clamp(0.0, 1.0), m + usize::from(v > 0.0 && v < 1.0))
    });
    if free > 0 {
        tau += (phi - kf) / free as f64;
    }

    let p = y.iter().map(|&yi| (yi - tau).clamp(0.0, 1.0)).collect();
    Ok(HypersimplexPoint::from_repaired(p, k))
}

/// Linear minimisation oracle: the vertex minimising `<cost, v>`, i.e. the
/// `k` cheapest coordinates. Ties go to the lower index.
pub fn lmo(cost: &[f64], k: usize) -> Result<Vertex> {
    ensure_budget(cost.len(), k)?;
    ensure_finite(cost, "cost")?;
    let mut order: Vec<usize> = (0..cost.len()).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(Vertex::new(order))
}

/// Sum of the `k` largest entries, i.e. `max_{p} <v, p>` over the hypersimplex.
pub fn top_k_sum(v: &[f64], k: usize) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().take(k).sum()
}
