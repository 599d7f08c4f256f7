use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CoreStrategy, RoundRecord};
use crate::error::{ensure_budget, ensure_finite, Error, Result};
use crate::hypersimplex::{
    afw_minimize, lmo, ActiveSet, AfwOptions, AfwStart, HypersimplexPoint, QuadraticObjective,
};
use crate::rng::{stream_rng, streams};
use crate::sampling::draw;
use crate::setfn::SetFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OftrlMode {
    /// One Euclidean projection per round.
    Exact,
    /// Away-step Frank-Wolfe to a gap certificate.
    Afw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OftrlConfig {
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    /// `G`, used only for the Frank-Wolfe tolerance.
    pub g_bound: f64,
    /// Regularisation scale, `1/k` by default.
    pub sigma: f64,
    pub mode: OftrlMode,
    pub afw_max_iters: usize,
    /// In Frank-Wolfe mode, also solve each round exactly and report the distance.
    pub shadow_exact: bool,
}

impl OftrlConfig {
    pub fn new(n: usize, k: usize, horizon: usize, g_bound: f64, mode: OftrlMode) -> Result<Self> {
        ensure_budget(n, k)?;
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if !(g_bound > 0.0 && g_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "G = {g_bound} must be positive"
            )));
        }
        Ok(Self {
            n,
            k,
            horizon,
            g_bound,
            sigma: 1.0 / k as f64,
            mode,
            afw_max_iters: AfwOptions::default_max_iters(horizon),
            shadow_exact: false,
        })
    }
}

/// Per-round diagnostics of the inner solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub gap: f64,
    pub eps: f64,
    pub converged: bool,
    /// `||p_afw - p_exact||` for the same objective, when requested.
    pub exact_distance: Option<f64>,
}

/// Optimistic FTRL with adaptive quadratic regularisers centred at past plays.
#[derive(Debug, Clone)]
pub struct OftrlPolicy {
    cfg: OftrlConfig,
    theta: Vec<f64>,
    // sum_tau sigma_tau p_tau and sum_tau sigma_tau
    weighted_center: Vec<f64>,
    sigma_sum: f64,
    delta_sum: f64,
    delta_first: Option<f64>,
    active: Option<ActiveSet>,
    t: usize,
    rng: ChaCha8Rng,
    core_rng: ChaCha8Rng,
}

impl OftrlPolicy {
    pub fn new(cfg: OftrlConfig, seed: u64, stream_base: u64) -> Self {
        Self {
            theta: vec![0.0; cfg.n],
            weighted_center: vec![0.0; cfg.n],
            sigma_sum: 0.0,
            delta_sum: 0.0,
            delta_first: None,
            active: None,
            t: 0,
            rng: stream_rng(seed, stream_base + streams::SAMPLING),
            core_rng: stream_rng(seed, stream_base + streams::CORE),
            cfg,
        }
    }

    pub fn config(&self) -> &OftrlConfig {
        &self.cfg
    }

    pub fn sigma_sum(&self) -> f64 {
        self.sigma_sum
    }

    pub fn delta_sum(&self) -> f64 {
        self.delta_sum
    }

    /// `sigma sqrt(delta_tau0) / (200 G^2 T^2)` once some hint has missed.
    pub fn afw_eps(&self) -> Option<f64> {
        let g = self.cfg.g_bound;
        let t = self.cfg.horizon as f64;
        self.delta_first
            .map(|d| self.cfg.sigma * d.sqrt() / (200.0 * g * g * t * t))
    }

    /// `sqrt(2 eps / (sigma sqrt(delta_tau0)))`, the per-round distance
    /// guaranteed by an eps-accurate solve.
    pub fn afw_distance_bound(&self) -> Option<f64> {
        let d = self.delta_first?;
        Some((2.0 * self.afw_eps()? / (self.cfg.sigma * d.sqrt())).sqrt())
    }

    fn propose(&mut self, hint: &[f64]) -> Result<(HypersimplexPoint, Option<SolverStats>)> {
        let (n, k) = (self.cfg.n, self.cfg.k);
        if k == n {
            return Ok((HypersimplexPoint::new(vec![1.0; n], k)?, None));
        }
        let b: Vec<f64> = self.theta.iter().zip(hint).map(|(a, h)| a + h).collect();
        if self.sigma_sum <= 0.0 {
            let cost: Vec<f64> = b.iter().map(|x| -x).collect();
            return Ok((HypersimplexPoint::from_vertex(&lmo(&cost, k)?, n)?, None));
        }
        let obj =
            QuadraticObjective::from_aggregate(k, self.sigma_sum, self.weighted_center.clone(), b)?;
        match self.cfg.mode {
            OftrlMode::Exact => Ok((obj.minimize_exact()?, None)),
            OftrlMode::Afw => {
                let eps = self
                    .afw_eps()
                    .expect("positive weight implies a first miss");
                let start = match self.active.take() {
                    Some(a) => AfwStart::Warm(a),
                    None => AfwStart::Vertex(lmo(&obj.gradient(&vec![0.0; n]), k)?),
                };
                let out = afw_minimize(
                    &obj,
                    AfwOptions {
                        eps,
                        max_iters: self.cfg.afw_max_iters,
                    },
                    start,
                )?;
                if !out.converged {
                    log::debug!(
                        "round {}: Frank-Wolfe stopped at gap {} > {eps}",
                        self.t + 1,
                        out.gap
                    );
                }
                let exact_distance = if self.cfg.shadow_exact {
                    Some(out.point.distance(&obj.minimize_exact()?))
                } else {
                    None
                };
                let stats = SolverStats {
                    iterations: out.iterations,
                    gap: out.gap,
                    eps,
                    converged: out.converged,
                    exact_distance,
                };
                self.active = Some(out.active);
                Ok((out.point, Some(stats)))
            }
        }
    }

    /// Plays one round with modular hint coefficients `hint`; the core
    /// vector comes from `strategy`.
    pub fn oftrl_round(
        &mut self,
        f: &dyn SetFunction,
        hint: &[f64],
        strategy: &dyn CoreStrategy,
    ) -> Result<RoundRecord> {
        self.play(f, hint, |me| {
            Ok(strategy.admissible(f, &mut me.core_rng)?.g)
        })
    }

    /// As [`oftrl_round`](Self::oftrl_round) with a core vector chosen by the
    /// caller, who may have used it to build the hint.
    pub fn oftrl_round_with(
        &mut self,
        f: &dyn SetFunction,
        hint: &[f64],
        fvec: &[f64],
    ) -> Result<RoundRecord> {
        self.play(f, hint, |_| Ok(fvec.to_vec()))
    }

    fn play(
        &mut self,
        f: &dyn SetFunction,
        hint: &[f64],
        core: impl FnOnce(&mut Self) -> Result<Vec<f64>>,
    ) -> Result<RoundRecord> {
        let n = self.cfg.n;
        if f.n() != n || hint.len() != n {
            return Err(Error::InvalidInput(format!(
                "reward on {} items and hint of length {}, policy on {n}",
                f.n(),
                hint.len()
            )));
        }
        ensure_finite(hint, "hint")?;
        let (p, solver) = self.propose(hint)?;
        let (set, u) = draw(&p, &mut self.rng)?;
        let g = core(self)?;
        if g.len() != n || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract(format!(
                "core vector is malformed at round {}",
                self.t + 1
            )));
        }

        let delta: f64 = g.iter().zip(hint).map(|(a, h)| (a - h) * (a - h)).sum();
        let before = self.delta_sum.sqrt();
        self.delta_sum += delta;
        let sigma_t = self.cfg.sigma * (self.delta_sum.sqrt() - before);
        if delta > 0.0 && self.delta_first.is_none() {
            self.delta_first = Some(delta);
        }
        for ((c, a), (pi, gi)) in self
            .weighted_center
            .iter_mut()
            .zip(self.theta.iter_mut())
            .zip(p.as_slice().iter().zip(&g))
        {
            *c += sigma_t * pi;
            *a += gi;
        }
        self.sigma_sum += sigma_t;
        self.t += 1;

        Ok(RoundRecord {
            t: self.t,
            reward: f.eval(set.indices()),
            full_reward: f.full_value(),
            p: p.into_vec(),
            u,
            selected: set.into_vec(),
            fed: g.clone(),
            g,
            hint: Some(hint.to_vec()),
            observed: true,
            cost: 0.0,
            solver,
        })
    }
}
