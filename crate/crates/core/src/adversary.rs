//! Seeded reward sequences and hint channels for the experiments.
//!
//! Every generator is oblivious: its output depends only on its own seed,
//! never on what the learner played.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::setfn::{CoverageFunction, MatchingRewardFunction, ModularFunction, SetFunction};

fn one() -> f64 {
    1.0
}

fn ten() -> usize {
    10
}

fn drift_default() -> f64 {
    0.2
}

fn density_default() -> f64 {
    0.2
}

/// Reward sequence description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Indicator of one uniformly random item per round.
    OnehotEnsemble {},
    /// Fresh nonnegative coefficients every round, scaled to norm `g_bound`.
    ModularRandom {
        #[serde(default = "one")]
        g_bound: f64,
    },
    /// A base coefficient vector redrawn every phase, mixed each round with
    /// fresh noise of weight `drift`, scaled to norm `g_bound`.
    ModularDrift {
        #[serde(default = "one")]
        g_bound: f64,
        #[serde(default = "ten")]
        phases: usize,
        #[serde(default = "drift_default")]
        drift: f64,
    },
    /// A random set family redrawn every phase; each item covers each
    /// universe element with probability `density`. Values are normalised so
    /// that `f([n]) = 1`.
    CoverageDrift {
        universe: usize,
        #[serde(default = "density_default")]
        density: f64,
        #[serde(default = "ten")]
        phases: usize,
    },
    /// Fresh `U[0, w_max]` weights on a complete bipartite graph with `n/2`
    /// vertices per side.
    MatchingRandom {
        #[serde(default = "one")]
        w_max: f64,
    },
}

/// `(M, G, alpha)` guaranteed for every emitted reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryBounds {
    pub value_bound: f64,
    pub g_bound: f64,
    pub alpha: f64,
}

impl AdversarySpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if n == 0 {
            return bad("ground set must be nonempty".into());
        }
        match *self {
            AdversarySpec::OnehotEnsemble {} => Ok(()),
            AdversarySpec::ModularRandom { g_bound } => {
                if !(g_bound > 0.0 && g_bound.is_finite()) {
                    return bad(format!("g_bound = {g_bound} must be positive"));
                }
                Ok(())
            }
            AdversarySpec::ModularDrift {
                g_bound,
                phases,
                drift,
            } => {
                if !(g_bound > 0.0 && g_bound.is_finite()) {
                    return bad(format!("g_bound = {g_bound} must be positive"));
                }
                if phases == 0 {
                    return bad("phases must be positive".into());
                }
                if !(0.0..=1.0).contains(&drift) {
                    return bad(format!("drift = {drift} outside [0, 1]"));
                }
                Ok(())
            }
            AdversarySpec::CoverageDrift {
                universe,
                density,
                phases,
            } => {
                if universe == 0 || phases == 0 {
                    return bad("universe and phases must be positive".into());
                }
                if !(density > 0.0 && density <= 1.0) {
                    return bad(format!("density = {density} outside (0, 1]"));
                }
                Ok(())
            }
            AdversarySpec::MatchingRandom { w_max } => {
                if !n.is_multiple_of(2) {
                    return bad(format!("matching rewards need an even ground set, got {n}"));
                }
                if !(w_max > 0.0 && w_max.is_finite()) {
                    return bad(format!("w_max = {w_max} must be positive"));
                }
                Ok(())
            }
        }
    }

    pub fn bounds(&self, n: usize) -> AdversaryBounds {
        let sqrt2 = 2f64.sqrt();
        match *self {
            AdversarySpec::OnehotEnsemble {} => AdversaryBounds {
                value_bound: 1.0,
                g_bound: 1.0,
                alpha: 1.0,
            },
            AdversarySpec::ModularRandom { g_bound }
            | AdversarySpec::ModularDrift { g_bound, .. } => AdversaryBounds {
                value_bound: (n as f64).sqrt() * g_bound,
                g_bound,
                alpha: 1.0,
            },
            AdversarySpec::CoverageDrift { .. } => AdversaryBounds {
                value_bound: 1.0,
                g_bound: sqrt2,
                alpha: 1.0,
            },
            AdversarySpec::MatchingRandom { w_max } => {
                let m = (n / 2) as f64 * w_max;
                AdversaryBounds {
                    value_bound: m,
                    g_bound: m * sqrt2,
                    alpha: 1.0,
                }
            }
        }
    }

    pub fn is_modular(&self) -> bool {
        matches!(
            self,
            AdversarySpec::OnehotEnsemble {}
                | AdversarySpec::ModularRandom { .. }
                | AdversarySpec::ModularDrift { .. }
        )
    }
}

/// An iterator over rewards `f_1, f_2, ...` for one replica.
pub struct Adversary {
    spec: AdversarySpec,
    n: usize,
    phase_len: usize,
    t: usize,
    rng: ChaCha8Rng,
    base: Vec<f64>,
    current: Option<Arc<dyn SetFunction>>,
}

impl Adversary {
    pub fn new(
        spec: AdversarySpec,
        n: usize,
        horizon: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        spec.validate(n)?;
        let phases = match spec {
            AdversarySpec::ModularDrift { phases, .. }
            | AdversarySpec::CoverageDrift { phases, .. } => phases,
            _ => 1,
        };
        Ok(Self {
            spec,
            n,
            phase_len: horizon.max(1).div_ceil(phases),
            t: 0,
            rng: stream_rng(seed, stream),
            base: Vec::new(),
            current: None,
        })
    }

    pub fn bounds(&self) -> AdversaryBounds {
        self.spec.bounds(self.n)
    }

    fn uniform_vec(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| self.rng.gen::<f64>()).collect()
    }

    fn scaled(mut v: Vec<f64>, norm: f64) -> Vec<f64> {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 0.0 {
            for x in v.iter_mut() {
                *x *= norm / len;
            }
        }
        v
    }

    fn coverage(&mut self, universe: usize, density: f64) -> CoverageFunction {
        loop {
            let sets: Vec<Vec<usize>> = (0..self.n)
                .map(|_| {
                    (0..universe)
                        .filter(|_| self.rng.gen_bool(density))
                        .collect()
                })
                .collect();
            let mut covered = vec![false; universe];
            sets.iter().flatten().for_each(|&e| covered[e] = true);
            let count = covered.iter().filter(|&&c| c).count();
            if count == 0 {
                continue;
            }
            let weights = covered
                .iter()
                .map(|&c| if c { 1.0 / count as f64 } else { 0.0 })
                .collect();
            return CoverageFunction::new(universe, &sets, Some(weights))
                .expect("generated family is valid");
        }
    }

    /// The next reward in the sequence.
    pub fn next_reward(&mut self) -> Arc<dyn SetFunction> {
        let new_phase = self.t.is_multiple_of(self.phase_len);
        self.t += 1;
        let n = self.n;
        match self.spec.clone() {
            AdversarySpec::OnehotEnsemble {} => {
                let mut w = vec![0.0; n];
                w[self.rng.gen_range(0..n)] = 1.0;
                Arc::new(ModularFunction::new(w).expect("finite"))
            }
            AdversarySpec::ModularRandom { g_bound } => {
                let w = Self::scaled(self.uniform_vec(), g_bound);
                Arc::new(ModularFunction::new(w).expect("finite"))
            }
            AdversarySpec::ModularDrift { g_bound, drift, .. } => {
                if new_phase {
                    self.base = self.uniform_vec();
                }
                let noise = self.uniform_vec();
                let w: Vec<f64> = self
                    .base
                    .iter()
                    .zip(noise)
                    .map(|(b, z)| (1.0 - drift) * b + drift * z)
                    .collect();
                Arc::new(ModularFunction::new(Self::scaled(w, g_bound)).expect("finite"))
            }
            AdversarySpec::CoverageDrift {
                universe, density, ..
            } => {
                if new_phase || self.current.is_none() {
                    self.current = Some(Arc::new(self.coverage(universe, density)));
                }
                self.current.clone().expect("set above")
            }
            AdversarySpec::MatchingRandom { w_max } => {
                let m = n / 2;
                let w: Vec<Vec<f64>> = (0..m)
                    .map(|_| (0..m).map(|_| self.rng.gen::<f64>() * w_max).collect())
                    .collect();
                Arc::new(MatchingRewardFunction::new(w).expect("nonnegative"))
            }
        }
    }
}

/// `horizon` one-hot modular rewards on uniformly random items.
pub fn onehot_ensemble<R: Rng + ?Sized>(
    n: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<ModularFunction>> {
    if n == 0 {
        return Err(Error::InvalidInput("ground set must be nonempty".into()));
    }
    (0..horizon)
        .map(|_| {
            let mut w = vec![0.0; n];
            w[rng.gen_range(0..n)] = 1.0;
            ModularFunction::new(w)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HintMode {
    Perfect,
    /// A uniformly random direction of length exactly `noise_l2`.
    AdditiveNoise,
    AdversarialFlip,
}

/// How hints are derived from the round's core vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintSpec {
    pub mode: HintMode,
    #[serde(default)]
    pub noise_l2: f64,
}

impl HintSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_l2 >= 0.0 && self.noise_l2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise_l2 = {} must be nonnegative",
                self.noise_l2
            )));
        }
        Ok(())
    }

    pub fn hint<R: Rng + ?Sized>(&self, fvec: &[f64], rng: &mut R) -> Vec<f64> {
        match self.mode {
            HintMode::Perfect => fvec.to_vec(),
            HintMode::AdversarialFlip => fvec.iter().map(|x| -x).collect(),
            HintMode::AdditiveNoise => {
                if self.noise_l2 == 0.0 {
                    return fvec.to_vec();
                }
                let z = loop {
                    let z: Vec<f64> = (0..fvec.len())
                        .map(|_| rng.sample(StandardNormal))
                        .collect();
                    if z.iter().any(|&x| x != 0.0) {
                        break z;
                    }
                };
                let len = z.iter().map(|x| x * x).sum::<f64>().sqrt();
                fvec.iter()
                    .zip(z)
                    .map(|(f, e)| f + self.noise_l2 * e / len)
                    .collect()
            }
        }
    }
}

pub fn generate_hints<R: Rng + ?Sized>(
    fvecs: &[Vec<f64>],
    spec: &HintSpec,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    fvecs.iter().map(|f| spec.hint(f, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn onehot_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for f in onehot_ensemble(6, 50, &mut rng).unwrap() {
            assert_eq!(f.weights().iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(f.weights().iter().sum::<f64>(), 1.0);
        }
        for f in onehot_ensemble(1, 5, &mut rng).unwrap() {
            assert_eq!(f.weights(), &[1.0]);
        }
    }

    #[test]
    fn hint_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = vec![0.5, -1.0, 2.0];
        assert_eq!(
            HintSpec {
                mode: HintMode::Perfect,
                noise_l2: 3.0
            }
            .hint(&f, &mut rng),
            f
        );
        let flip = HintSpec {
            mode: HintMode::AdversarialFlip,
            noise_l2: 0.0,
        }
        .hint(&f, &mut rng);
        let d: f64 = f.iter().zip(&flip).map(|(a, b)| (a - b) * (a - b)).sum();
        let norm_sq: f64 = f.iter().map(|x| x * x).sum();
        assert!((d - 4.0 * norm_sq).abs() < 1e-12);
        let noisy = HintSpec {
            mode: HintMode::AdditiveNoise,
            noise_l2: 0.7,
        }
        .hint(&f, &mut rng);
        let d: f64 = f
            .iter()
            .zip(&noisy)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn drift_redraws_per_phase() {
        let spec = AdversarySpec::CoverageDrift {
            universe: 30,
            density: 0.2,
            phases: 4,
        };
        let mut adv = Adversary::new(spec, 8, 20, 5, 0).unwrap();
        let rewards: Vec<_> = (0..20).map(|_| adv.next_reward()).collect();
        assert!(Arc::ptr_eq(&rewards[0], &rewards[4]));
        assert!(!Arc::ptr_eq(&rewards[4], &rewards[5]));
        for r in &rewards {
            assert!((r.full_value() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_needs_even_n() {
        assert!(Adversary::new(AdversarySpec::MatchingRandom { w_max: 1.0 }, 5, 10, 0, 0).is_err());
    }

    #[test]
    fn spec_json() {
        let spec: AdversarySpec =
            serde_json::from_str(r#"{"kind":"modular-drift","g_bound":1.0}"#).unwrap();
        assert_eq!(
            spec,
            AdversarySpec::ModularDrift {
                g_bound: 1.0,
                phases: 10,
                drift: 0.2
            }
        );
        assert!(
            serde_json::from_str::<AdversarySpec>(r#"{"kind":"onehot-ensemble","x":1}"#).is_err()
        );
    }
}
