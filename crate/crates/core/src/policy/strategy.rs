use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::corevec::{
    dictator_vector, find_dictator, marginal_vector, matching_core_vector, random_permutation,
    shapley_mc, AdmissibleVector, Provenance,
};
use crate::error::{Error, Result};
use crate::setfn::SetFunction;

/// Picks a vector from the alpha-core of each revealed reward.
pub trait CoreStrategy: Send + Sync {
    fn admissible(&self, f: &dyn SetFunction, rng: &mut dyn RngCore) -> Result<AdmissibleVector>;
}

/// Greedy marginal gains, along a fresh random order by default.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub random_order: bool,
    pub alpha: Option<f64>,
}

impl Default for Marginal {
    fn default() -> Self {
        Self {
            random_order: true,
            alpha: Some(1.0),
        }
    }
}

impl CoreStrategy for Marginal {
    fn admissible(&self, f: &dyn SetFunction, rng: &mut dyn RngCore) -> Result<AdmissibleVector> {
        let perm = if self.random_order {
            random_permutation(f.n(), rng)
        } else {
            (0..f.n()).collect()
        };
        marginal_vector(f, &perm, self.alpha)
    }
}

/// Always returns the same vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedVector(pub AdmissibleVector);

impl CoreStrategy for FixedVector {
    fn admissible(&self, f: &dyn SetFunction, _rng: &mut dyn RngCore) -> Result<AdmissibleVector> {
        if self.0.g.len() != f.n() {
            return Err(Error::InvalidInput(format!(
                "fixed vector has length {}, reward has {}",
                self.0.g.len(),
                f.n()
            )));
        }
        Ok(self.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyMc {
    pub perms: usize,
}

impl CoreStrategy for ShapleyMc {
    fn admissible(&self, f: &dyn SetFunction, rng: &mut dyn RngCore) -> Result<AdmissibleVector> {
        Ok(AdmissibleVector {
            g: shapley_mc(f, self.perms, rng)?,
            alpha: None,
            provenance: Provenance::Shapley,
        })
    }
}

/// Spike on the lowest-index `m`-dictator.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictator {
    pub m: f64,
}

impl CoreStrategy for Dictator {
    fn admissible(&self, f: &dyn SetFunction, _rng: &mut dyn RngCore) -> Result<AdmissibleVector> {
        let i = find_dictator(f, self.m).ok_or_else(|| {
            Error::Contract(format!(
                "reward has no element with singleton value >= {}",
                self.m
            ))
        })?;
        dictator_vector(f, i, self.m)
    }
}

/// Hungarian duals of a matching reward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchingDual;

impl CoreStrategy for MatchingDual {
    fn admissible(&self, f: &dyn SetFunction, _rng: &mut dyn RngCore) -> Result<AdmissibleVector> {
        let m = f.as_matching().ok_or_else(|| {
            Error::Contract("matching-dual strategy needs a matching reward".into())
        })?;
        matching_core_vector(m.weights())
    }
}

/// Configuration form of the strategies above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoreSpec {
    Marginal {
        #[serde(default = "yes")]
        random_order: bool,
        #[serde(default)]
        alpha: Option<f64>,
    },
    Fixed {
        g: Vec<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    Shapley {
        perms: usize,
    },
    Dictator {
        m: f64,
    },
    MatchingDual,
}

fn yes() -> bool {
    true
}

impl Default for CoreSpec {
    fn default() -> Self {
        CoreSpec::Marginal {
            random_order: true,
            alpha: None,
        }
    }
}

impl CoreSpec {
    pub fn build(&self) -> Result<Box<dyn CoreStrategy>> {
        Ok(match self {
            CoreSpec::Marginal {
                random_order,
                alpha,
            } => Box::new(Marginal {
                random_order: *random_order,
                alpha: *alpha,
            }),
            CoreSpec::Fixed { g, alpha } => Box::new(FixedVector(AdmissibleVector {
                g: g.clone(),
                alpha: *alpha,
                provenance: Provenance::External,
            })),
            CoreSpec::Shapley { perms } => {
                if *perms == 0 {
                    return Err(Error::InvalidInput(
                        "shapley needs at least one permutation".into(),
                    ));
                }
                Box::new(ShapleyMc { perms: *perms })
            }
            CoreSpec::Dictator { m } => {
                if m.is_nan() || *m <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "dictator level {m} must be positive"
                    )));
                }
                Box::new(Dictator { m: *m })
            }
            CoreSpec::MatchingDual => Box::new(MatchingDual),
        })
    }
}
