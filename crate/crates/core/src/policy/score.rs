use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{log_ratio, CoreStrategy, RoundRecord, ScoreConfig};
use crate::error::{Error, Result};
use crate::hypersimplex::{entropic_ftrl_argmax, HypersimplexPoint};
use crate::rng::{stream_rng, streams};
use crate::sampling::draw;
use crate::setfn::SetFunction;

/// Observation probability and per-observation cost of priced feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricedFeedback {
    pub epsilon: f64,
    pub cost: f64,
}

impl PricedFeedback {
    pub fn new(epsilon: f64, cost: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon = {epsilon} outside (0, 1]"
            )));
        }
        if !(cost >= 0.0 && cost.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cost = {cost} must be nonnegative"
            )));
        }
        Ok(Self { epsilon, cost })
    }

    /// `(2 G^2 k ln(n/k) / (T C^2))^(1/3)` before clamping.
    pub fn formula_epsilon(n: usize, k: usize, horizon: usize, g_bound: f64, cost: f64) -> f64 {
        (2.0 * g_bound * g_bound * k as f64 * log_ratio(n, k) / (horizon as f64 * cost * cost))
            .cbrt()
    }

    /// The formula value, clamped into `(0, 1]`.
    pub fn from_formula(
        n: usize,
        k: usize,
        horizon: usize,
        g_bound: f64,
        cost: f64,
    ) -> Result<Self> {
        let raw = Self::formula_epsilon(n, k, horizon, g_bound, cost);
        let epsilon = if raw.is_nan() || raw > 1.0 {
            log::warn!(
                "observation rate {raw} exceeds 1 at horizon {horizon}; observing every round"
            );
            1.0
        } else if raw <= 0.0 {
            log::warn!("observation rate {raw} is not positive; observing every round");
            1.0
        } else {
            raw
        };
        Self::new(epsilon, cost)
    }
}

/// Entropic FTRL over core vectors.
#[derive(Debug, Clone)]
pub struct ScorePolicy {
    cfg: ScoreConfig,
    theta: Vec<f64>,
    t: usize,
    rng: ChaCha8Rng,
    core_rng: ChaCha8Rng,
}

impl ScorePolicy {
    /// Sampling and feedback coins come from stream `stream_base + SAMPLING`,
    /// core-vector randomness from `stream_base + CORE`.
    pub fn new(cfg: ScoreConfig, seed: u64, stream_base: u64) -> Self {
        Self {
            theta: vec![0.0; cfg.n],
            t: 0,
            rng: stream_rng(seed, stream_base + streams::SAMPLING),
            core_rng: stream_rng(seed, stream_base + streams::CORE),
            cfg,
        }
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn rounds_played(&self) -> usize {
        self.t
    }

    pub fn current_point(&self) -> Result<HypersimplexPoint> {
        if self.cfg.full_budget() {
            return HypersimplexPoint::new(vec![1.0; self.cfg.n], self.cfg.k);
        }
        entropic_ftrl_argmax(&self.theta, self.cfg.eta, self.cfg.k)
    }

    fn admissible(&mut self, f: &dyn SetFunction, strategy: &dyn CoreStrategy) -> Result<Vec<f64>> {
        if f.n() != self.cfg.n {
            return Err(Error::InvalidInput(format!(
                "reward on {} items, policy on {}",
                f.n(),
                self.cfg.n
            )));
        }
        let g = strategy.admissible(f, &mut self.core_rng)?.g;
        if g.len() != self.cfg.n || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract(format!(
                "core strategy returned a bad vector at round {}",
                self.t + 1
            )));
        }
        Ok(g)
    }

    fn play(
        &mut self,
        f: &dyn SetFunction,
        strategy: &dyn CoreStrategy,
        feed: impl FnOnce(
            &mut Self,
            &HypersimplexPoint,
            &[usize],
            &[f64],
        ) -> Result<(Vec<f64>, bool, f64)>,
    ) -> Result<RoundRecord> {
        let p = self.current_point()?;
        let (set, u) = draw(&p, &mut self.rng)?;
        let g = self.admissible(f, strategy)?;
        let (fed, observed, cost) = feed(self, &p, set.indices(), &g)?;
        for (a, x) in self.theta.iter_mut().zip(&fed) {
            *a += x;
        }
        self.t += 1;
        Ok(RoundRecord {
            t: self.t,
            reward: f.eval(set.indices()),
            full_reward: f.full_value(),
            p: p.into_vec(),
            u,
            selected: set.into_vec(),
            g,
            fed,
            hint: None,
            observed,
            cost,
            solver: None,
        })
    }

    /// Full information: the whole core vector is fed back.
    pub fn score_round(
        &mut self,
        f: &dyn SetFunction,
        strategy: &dyn CoreStrategy,
    ) -> Result<RoundRecord> {
        self.play(f, strategy, |_, _, _, g| Ok((g.to_vec(), true, 0.0)))
    }

    /// Only the selected coordinates are seen; they are reweighted by `1/p_i`.
    pub fn semibandit_round(
        &mut self,
        f: &dyn SetFunction,
        strategy: &dyn CoreStrategy,
    ) -> Result<RoundRecord> {
        self.play(f, strategy, |_, p, selected, g| {
            let mut fed = vec![0.0; g.len()];
            for &i in selected {
                let pi = p.as_slice()[i];
                if pi <= 0.0 {
                    return Err(Error::Contract(format!(
                        "selected item {i} has inclusion probability {pi}"
                    )));
                }
                fed[i] = g[i] / pi.min(1.0);
            }
            Ok((fed, true, 0.0))
        })
    }

    /// Observes with probability `epsilon` at cost `C`; a set is played every round.
    pub fn priced_round(
        &mut self,
        f: &dyn SetFunction,
        strategy: &dyn CoreStrategy,
        priced: &PricedFeedback,
    ) -> Result<RoundRecord> {
        self.play(f, strategy, |me, _, _, g| {
            let z = me.rng.gen_bool(priced.epsilon);
            if z {
                Ok((
                    g.iter().map(|x| x / priced.epsilon).collect(),
                    true,
                    priced.cost,
                ))
            } else {
                Ok((vec![0.0; g.len()], false, 0.0))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Marginal;
    use crate::setfn::ModularFunction;

    #[test]
    fn first_round_is_uniform() {
        let cfg = ScoreConfig::new(6, 2, 100, 1.0, 1.0).unwrap();
        let policy = ScorePolicy::new(cfg, 0, 0);
        for &x in policy.current_point().unwrap().as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_budget_takes_everything() {
        let cfg = ScoreConfig::new(4, 4, 10, 1.0, 4.0).unwrap();
        let mut policy = ScorePolicy::new(cfg, 1, 0);
        let f = ModularFunction::new(vec![1.0, 0.5, 0.0, 2.0]).unwrap();
        for _ in 0..10 {
            let r = policy.score_round(&f, &Marginal::default()).unwrap();
            assert_eq!(r.selected, vec![0, 1, 2, 3]);
            assert_eq!(r.reward, r.full_reward);
            let s = policy.semibandit_round(&f, &Marginal::default()).unwrap();
            assert_eq!(s.fed, s.g);
        }
    }

    #[test]
    fn unselected_coordinates_are_zero_under_semibandit() {
        let cfg = ScoreConfig::new(5, 2, 10, 1.0, 5.0).unwrap();
        let mut policy = ScorePolicy::new(cfg, 2, 0);
        let f = ModularFunction::new(vec![1.0; 5]).unwrap();
        let r = policy.semibandit_round(&f, &Marginal::default()).unwrap();
        for i in 0..5 {
            if r.selected.contains(&i) {
                assert!((r.fed[i] - 2.5).abs() < 1e-12);
            } else {
                assert_eq!(r.fed[i], 0.0);
            }
        }
    }

    #[test]
    fn priced_with_full_rate_observes_always() {
        let cfg = ScoreConfig::new(5, 2, 50, 1.0, 5.0).unwrap();
        let priced = PricedFeedback::new(1.0, 2.0).unwrap();
        let mut policy = ScorePolicy::new(cfg.for_priced(&priced).unwrap(), 3, 0);
        let f = ModularFunction::new(vec![0.2, 0.4, 0.1, 0.0, 0.3]).unwrap();
        let mut cost = 0.0;
        for _ in 0..50 {
            let r = policy
                .priced_round(&f, &Marginal::default(), &priced)
                .unwrap();
            assert!(r.observed);
            assert_eq!(r.fed, r.g);
            cost += r.cost;
        }
        assert_eq!(cost, 100.0);
    }

    #[test]
    fn clamps_large_epsilon() {
        let p = PricedFeedback::from_formula(20, 5, 10, 1.0, 1.0).unwrap();
        assert_eq!(p.epsilon, 1.0);
    }
}
