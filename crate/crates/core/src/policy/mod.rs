//! Online policies and regret accounting.
//!
//! [`ScorePolicy`] runs entropic follow-the-regularized-leader on core
//! vectors, with full-information, semi-bandit and priced feedback.
//! [`OftrlPolicy`] is the optimistic variant that consumes modular hints.

mod oftrl;
mod score;
mod strategy;

pub use oftrl::{OftrlConfig, OftrlMode, OftrlPolicy, SolverStats};
pub use score::{PricedFeedback, ScorePolicy};
pub use strategy::{
    CoreSpec, CoreStrategy, Dictator, FixedVector, Marginal, MatchingDual, ShapleyMc,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_budget, Error, Result};
use crate::hypersimplex::top_k_sum;

/// `ln(n/k)`, zero when `k = n`.
pub fn log_ratio(n: usize, k: usize) -> f64 {
    (n as f64 / k as f64).ln()
}

/// Step size `sqrt(k ln(n/k) / (2 G^2 T))`.
pub fn default_eta(n: usize, k: usize, horizon: usize, g_bound: f64) -> f64 {
    (k as f64 * log_ratio(n, k) / (2.0 * g_bound * g_bound * horizon as f64)).sqrt()
}

/// Static regret bound `2 G sqrt(2 k T ln(n/k))` of entropic FTRL.
pub fn static_regret_bound(n: usize, k: usize, horizon: usize, g_bound: f64) -> f64 {
    2.0 * g_bound * (2.0 * k as f64 * horizon as f64 * log_ratio(n, k)).sqrt()
}

/// Augmented regret bound `4 M sqrt(k T ln(n/k))`.
pub fn augmented_regret_bound(n: usize, k: usize, horizon: usize, value_bound: f64) -> f64 {
    4.0 * value_bound * (k as f64 * horizon as f64 * log_ratio(n, k)).sqrt()
}

/// Optimistic bound `12 k sqrt(sum_t Distance^2(f_t, h_t))`.
pub fn optimistic_regret_bound(k: usize, distance_sq_sum: f64) -> f64 {
    12.0 * k as f64 * distance_sq_sum.sqrt()
}

/// Parameters of the entropic policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    pub alpha: f64,
    /// `M`, an upper bound on every reward value.
    pub value_bound: f64,
    /// `G`, an upper bound on the norm of every fed vector.
    pub g_bound: f64,
    pub eta: f64,
}

impl ScoreConfig {
    /// Defaults `G = alpha M sqrt(2)` and the matching step size.
    pub fn new(n: usize, k: usize, horizon: usize, alpha: f64, value_bound: f64) -> Result<Self> {
        ensure_budget(n, k)?;
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha = {alpha} must be a finite value >= 1"
            )));
        }
        if !(value_bound > 0.0 && value_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "value bound {value_bound} must be positive"
            )));
        }
        let g_bound = alpha * value_bound * 2f64.sqrt();
        Ok(Self {
            n,
            k,
            horizon,
            alpha,
            value_bound,
            g_bound,
            eta: default_eta(n, k, horizon, g_bound),
        })
    }

    /// Replaces `G` and recomputes the default step size.
    pub fn with_g_bound(mut self, g_bound: f64) -> Result<Self> {
        if !(g_bound > 0.0 && g_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "G = {g_bound} must be positive"
            )));
        }
        self.g_bound = g_bound;
        self.eta = default_eta(self.n, self.k, self.horizon, g_bound);
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta = {eta} must be positive")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Step size `sqrt(eps k ln(n/k) / (2 T G^2))` for priced feedback.
    pub fn for_priced(self, priced: &PricedFeedback) -> Result<Self> {
        if self.full_budget() {
            return Ok(self);
        }
        let eta = (priced.epsilon * self.k as f64 * log_ratio(self.n, self.k)
            / (2.0 * self.horizon as f64 * self.g_bound * self.g_bound))
            .sqrt();
        self.with_eta(eta)
    }

    pub fn full_budget(&self) -> bool {
        self.k == self.n
    }
}

/// One round of play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub p: Vec<f64>,
    pub u: f64,
    pub selected: Vec<usize>,
    pub reward: f64,
    pub full_reward: f64,
    /// The admissible vector of this round's reward.
    pub g: Vec<f64>,
    /// What the learner added to its cumulative score.
    pub fed: Vec<f64>,
    pub hint: Option<Vec<f64>>,
    pub observed: bool,
    pub cost: f64,
    pub solver: Option<SolverStats>,
}

impl RoundRecord {
    /// `<g_t, p_t>`, the expected linear reward.
    pub fn linear_reward(&self) -> f64 {
        self.g.iter().zip(&self.p).map(|(a, b)| a * b).sum()
    }
}

/// `(k / (n alpha)) sum_t f_t([n]) - sum_t f_t(S_t)`.
pub fn augmented_regret(trace: &[RoundRecord], alpha: f64, k: usize, n: usize) -> f64 {
    let full: f64 = trace.iter().map(|r| r.full_reward).sum();
    let got: f64 = trace.iter().map(|r| r.reward).sum();
    k as f64 / (n as f64 * alpha) * full - got
}

/// `max_{p in hypersimplex} <sum g_t, p> - sum_t <g_t, p_t>`.
pub fn static_linear_regret(trace: &[RoundRecord], k: usize) -> f64 {
    let Some(first) = trace.first() else {
        return 0.0;
    };
    let mut total = vec![0.0; first.g.len()];
    let mut played = 0.0;
    for r in trace {
        for (a, g) in total.iter_mut().zip(&r.g) {
            *a += g;
        }
        played += r.linear_reward();
    }
    top_k_sum(&total, k) - played
}

/// Running version of the two regret measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTracker {
    n: usize,
    k: usize,
    alpha: f64,
    rounds: usize,
    cum_reward: f64,
    cum_full: f64,
    cum_linear: f64,
    cum_cost: f64,
    g_sum: Vec<f64>,
}

impl RegretTracker {
    pub fn new(n: usize, k: usize, alpha: f64) -> Self {
        Self {
            n,
            k,
            alpha,
            rounds: 0,
            cum_reward: 0.0,
            cum_full: 0.0,
            cum_linear: 0.0,
            cum_cost: 0.0,
            g_sum: vec![0.0; n],
        }
    }

    pub fn push(&mut self, r: &RoundRecord) {
        self.rounds += 1;
        self.cum_reward += r.reward;
        self.cum_full += r.full_reward;
        self.cum_linear += r.linear_reward();
        self.cum_cost += r.cost;
        for (a, g) in self.g_sum.iter_mut().zip(&r.g) {
            *a += g;
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn cum_reward(&self) -> f64 {
        self.cum_reward
    }

    pub fn cum_cost(&self) -> f64 {
        self.cum_cost
    }

    /// `(k / (n alpha)) sum_t f_t([n])`.
    pub fn benchmark(&self) -> f64 {
        self.k as f64 / (self.n as f64 * self.alpha) * self.cum_full
    }

    pub fn augmented(&self) -> f64 {
        self.benchmark() - self.cum_reward
    }

    pub fn static_linear(&self) -> f64 {
        top_k_sum(&self.g_sum, self.k) - self.cum_linear
    }
}
