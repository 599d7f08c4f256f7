//! Away-steps Frank-Wolfe for sums of isotropic quadratics over the
//! hypersimplex.
//!
//! The objective is `F(p) = sum_tau (sigma_tau / 2) ||p - p_tau||^2 - <p, b>`.
//! Only its aggregates matter: with `s = sum sigma_tau` and
//! `c = sum sigma_tau p_tau`, `F(p) = (s/2)||p||^2 - <p, c + b> + const`, whose
//! minimiser over the hypersimplex is the projection of `(c + b) / s`.

use super::{dot, euclidean_project, lmo, HypersimplexPoint, Vertex};
use crate::error::{ensure_budget, ensure_finite, Error, Result};

/// Weighted sum of squared distances to past points, minus a linear term.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    k: usize,
    weight: f64,
    weighted_center: Vec<f64>,
    linear: Vec<f64>,
    // sum_tau sigma_tau / 2 ||p_tau||^2 when known
    offset: f64,
}

impl QuadraticObjective {
    /// Builds the objective from explicit `(sigma_tau, p_tau)` centers.
    pub fn new(centers: &[(f64, &HypersimplexPoint)], linear: Vec<f64>, k: usize) -> Result<Self> {
        let n = linear.len();
        ensure_budget(n, k)?;
        ensure_finite(&linear, "linear")?;
        let mut weight = 0.0;
        let mut weighted_center = vec![0.0; n];
        let mut offset = 0.0;
        for (j, &(sigma, point)) in centers.iter().enumerate() {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "center {j} has weight {sigma}"
                )));
            }
            if point.n() != n || point.k() != k {
                return Err(Error::InvalidInput(format!(
                    "center {j} lives in ({}, {}), expected ({n}, {k})",
                    point.n(),
                    point.k()
                )));
            }
            weight += sigma;
            for (c, x) in weighted_center.iter_mut().zip(point.as_slice()) {
                *c += sigma * x;
            }
            offset += 0.5 * sigma * dot(point.as_slice(), point.as_slice());
        }
        Ok(Self {
            k,
            weight,
            weighted_center,
            linear,
            offset,
        })
    }

    /// Builds the objective from running aggregates `s = sum sigma_tau` and
    /// `c = sum sigma_tau p_tau`. The constant term is unknown, so
    /// [`value`](Self::value) is then defined up to an additive constant.
    pub fn from_aggregate(
        k: usize,
        total_weight: f64,
        weighted_center: Vec<f64>,
        linear: Vec<f64>,
    ) -> Result<Self> {
        let n = linear.len();
        ensure_budget(n, k)?;
        ensure_finite(&linear, "linear")?;
        ensure_finite(&weighted_center, "weighted_center")?;
        if weighted_center.len() != n {
            return Err(Error::InvalidInput("aggregate length mismatch".into()));
        }
        if !(total_weight >= 0.0 && total_weight.is_finite()) {
            return Err(Error::InvalidInput(format!("total weight {total_weight}")));
        }
        Ok(Self {
            k,
            weight: total_weight,
            weighted_center,
            linear,
            offset: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total_weight(&self) -> f64 {
        self.weight
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let cross: f64 = x
            .iter()
            .zip(self.weighted_center.iter().zip(&self.linear))
            .map(|(xi, (c, b))| xi * (c + b))
            .sum();
        0.5 * self.weight * dot(x, x) - cross + self.offset
    }

    /// `(sum sigma) x - sum sigma p_tau - b`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.weighted_center.iter().zip(&self.linear))
            .map(|(xi, (c, b))| self.weight * xi - c - b)
            .collect()
    }

    /// The point whose projection minimises the objective, `(b + c) / s`.
    pub fn center(&self) -> Result<Vec<f64>> {
        if self.weight <= 0.0 {
            return Err(Error::Contract(
                "objective is linear (zero total weight); use the linear oracle".into(),
            ));
        }
        Ok(self
            .weighted_center
            .iter()
            .zip(&self.linear)
            .map(|(c, b)| (c + b) / self.weight)
            .collect())
    }

    /// Exact minimiser via a single Euclidean projection.
    pub fn minimize_exact(&self) -> Result<HypersimplexPoint> {
        euclidean_project(&self.center()?, self.k)
    }
}

/// Vertices with positive barycentric weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSet {
    atoms: Vec<(Vertex, f64)>,
}

impl ActiveSet {
    pub fn single(v: Vertex) -> Self {
        Self {
            atoms: vec![(v, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(Vertex, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn point(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (v, w) in &self.atoms {
            for &i in v.support() {
                x[i] += w;
            }
        }
        x
    }

    fn normalize(&mut self) {
        self.atoms.retain(|(_, w)| *w > 0.0);
        let total: f64 = self.atoms.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut self.atoms {
            *w /= total;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AfwOptions {
    pub eps: f64,
    pub max_iters: usize,
}

impl AfwOptions {
    /// Iteration budget `ceil(20 ln(T + 2))` for a horizon of `T` rounds.
    pub fn default_max_iters(horizon: usize) -> usize {
        (20.0 * ((horizon + 2) as f64).ln()).ceil() as usize
    }
}

#[derive(Debug, Clone)]
pub enum AfwStart {
    Vertex(Vertex),
    Warm(ActiveSet),
}

#[derive(Debug, Clone)]
pub struct AfwOutcome {
    pub point: HypersimplexPoint,
    /// Frank-Wolfe gap at `point`; an upper bound on `F(point) - F*`.
    pub gap: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the gap fell below `eps`.
    pub converged: bool,
    pub active: ActiveSet,
    /// Objective value (up to a constant) at every iterate, starting point first.
    pub objective: Vec<f64>,
}

/// Minimises `obj` with away-step Frank-Wolfe and exact line search.
pub fn afw_minimize(
    obj: &QuadraticObjective,
    opts: AfwOptions,
    start: AfwStart,
) -> Result<AfwOutcome> {
    let n = obj.n();
    let k = obj.k();
    if obj.weight <= 0.0 {
        return Err(Error::Contract(
            "away-step Frank-Wolfe needs a strictly convex objective".into(),
        ));
    }
    if opts.eps.is_nan() || opts.eps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "eps must be positive (got {})",
            opts.eps
        )));
    }
    let mut active = match start {
        AfwStart::Vertex(v) => ActiveSet::single(v),
        AfwStart::Warm(a) => a,
    };
    if active.is_empty()
        || active
            .atoms
            .iter()
            .any(|(v, _)| v.len() != k || v.support().iter().any(|&i| i >= n))
    {
        return Err(Error::InvalidInput(
            "start must consist of k-subsets of the ground set".into(),
        ));
    }
    active.normalize();

    // Work with grad = s (x - y). Shifting y by a constant leaves the problem
    // unchanged on the hypersimplex and keeps y - x small on the free
    // coordinates, which is where the gap computation cancels.
    let s = obj.weight;
    let mut y = obj.center()?;
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let shift = sorted[k - 1] - 0.5;
    for yi in &mut y {
        *yi -= shift;
    }

    let mut objective = Vec::new();
    let mut iterations = 0;
    loop {
        let x = active.point(n);
        objective.push(obj.value(&x));
        let grad: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| s * (xi - yi)).collect();
        let grad_x = dot(&grad, &x);
        let fw_vertex = lmo(&grad, k)?;
        let fw_gap = grad_x - fw_vertex.dot(&grad);

        if fw_gap <= opts.eps || iterations >= opts.max_iters {
            let converged = fw_gap <= opts.eps;
            return Ok(AfwOutcome {
                point: HypersimplexPoint::from_repaired(x, k),
                gap: fw_gap.max(0.0),
                iterations,
                converged,
                active,
                objective,
            });
        }
        iterations += 1;

        let (away_idx, away_score) = active
            .atoms
            .iter()
            .enumerate()
            .map(|(j, (v, _))| (j, v.dot(&grad)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set is non-empty");
        let away_gap = away_score - grad_x;

        if fw_gap >= away_gap {
            let mut d = fw_vertex.indicator(n);
            for (di, xi) in d.iter_mut().zip(&x) {
                *di -= xi;
            }
            let gamma = line_search(&grad, &d, s, 1.0);
            if gamma >= 1.0 {
                active = ActiveSet::single(fw_vertex);
            } else if gamma > 0.0 {
                for (_, w) in &mut active.atoms {
                    *w *= 1.0 - gamma;
                }
                match active.atoms.iter_mut().find(|(v, _)| *v == fw_vertex) {
                    Some((_, w)) => *w += gamma,
                    None => active.atoms.push((fw_vertex, gamma)),
                }
            }
        } else {
            let alpha_v = active.atoms[away_idx].1;
            let away_vertex = active.atoms[away_idx].0.indicator(n);
            let d: Vec<f64> = x.iter().zip(&away_vertex).map(|(xi, vi)| xi - vi).collect();
            let gamma_max = alpha_v / (1.0 - alpha_v);
            let gamma = line_search(&grad, &d, s, gamma_max);
            if gamma >= gamma_max {
                active.atoms.swap_remove(away_idx);
                for (_, w) in &mut active.atoms {
                    *w *= 1.0 + gamma;
                }
            } else if gamma > 0.0 {
                for (_, w) in &mut active.atoms {
                    *w *= 1.0 + gamma;
                }
                active.atoms[away_idx].1 -= gamma;
            }
        }
        active.normalize();
    }
}

// argmin_{gamma in [0, gamma_max]} F(x + gamma d) for F with Hessian s I.
fn line_search(grad: &[f64], d: &[f64], s: f64, gamma_max: f64) -> f64 {
    let dd = dot(d, d);
    if dd <= 0.0 {
        return 0.0;
    }
    (-dot(grad, d) / (s * dd)).clamp(0.0, gamma_max)
}
