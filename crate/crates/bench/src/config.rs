//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use score_core::adversary::{AdversarySpec, HintSpec};
use score_core::policy::{CoreSpec, OftrlMode};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

fn one_usize() -> usize {
    1
}

fn one() -> f64 {
    1.0
}

fn afw() -> OftrlMode {
    OftrlMode::Afw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    Score {
        #[serde(default)]
        core: CoreSpec,
        #[serde(default)]
        eta: Option<f64>,
    },
    Semibandit {
        #[serde(default)]
        core: CoreSpec,
        #[serde(default)]
        eta: Option<f64>,
    },
    /// `epsilon` defaults to the cost-balancing formula.
    Priced {
        #[serde(default)]
        core: CoreSpec,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default = "one")]
        cost: f64,
        #[serde(default)]
        eta: Option<f64>,
    },
    Oftrl {
        #[serde(default)]
        core: CoreSpec,
        #[serde(default = "afw")]
        mode: OftrlMode,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        afw_max_iters: Option<usize>,
        /// Also solve each Frank-Wolfe round exactly and record the distance.
        #[serde(default)]
        shadow_exact: bool,
    },
}

impl PolicySpec {
    pub fn core(&self) -> &CoreSpec {
        match self {
            PolicySpec::Score { core, .. }
            | PolicySpec::Semibandit { core, .. }
            | PolicySpec::Priced { core, .. }
            | PolicySpec::Oftrl { core, .. } => core,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Score { .. } => "score",
            PolicySpec::Semibandit { .. } => "semibandit",
            PolicySpec::Priced { .. } => "priced",
            PolicySpec::Oftrl { .. } => "oftrl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub policy: PolicySpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub hint: Option<HintSpec>,
    /// Overrides of the adversary's reported bounds.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default, rename = "M")]
    pub value_bound: Option<f64>,
    #[serde(default, rename = "G")]
    pub g_bound: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub replicas: usize,
    /// Directory for per-replica CSVs and the summary.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// `(alpha, M, G)` after applying overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub alpha: f64,
    pub value_bound: f64,
    pub g_bound: f64,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    if let Some(x) = v {
        ensure!(
            x > 0.0 && x.is_finite(),
            "{name} = {x} must be a positive finite number"
        );
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("malformed experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(
            self.n >= 1 && self.k >= 1 && self.k <= self.n,
            "need 1 <= k <= n, got n = {}, k = {}",
            self.n,
            self.k
        );
        ensure!(
            self.n <= 64,
            "ground sets larger than 64 items are not supported"
        );
        ensure!(self.horizon >= 1, "T must be positive");
        ensure!(self.replicas >= 1, "replicas must be positive");
        self.adversary.validate(self.n)?;
        if let Some(a) = self.alpha {
            ensure!(a >= 1.0 && a.is_finite(), "alpha = {a} must be >= 1");
        }
        positive("M", self.value_bound)?;
        positive("G", self.g_bound)?;
        self.policy.core().build()?;
        match (&self.policy, &self.hint) {
            (
                PolicySpec::Oftrl {
                    sigma,
                    afw_max_iters,
                    ..
                },
                Some(h),
            ) => {
                h.validate()?;
                positive("sigma", *sigma)?;
                if let Some(0) = afw_max_iters {
                    bail!("afw_max_iters must be positive");
                }
            }
            (PolicySpec::Oftrl { .. }, None) => bail!("the oftrl policy needs a hint block"),
            (p, Some(_)) => bail!("the {} policy does not take hints", p.name()),
            (PolicySpec::Score { eta, .. } | PolicySpec::Semibandit { eta, .. }, None) => {
                positive("eta", *eta)?
            }
            (
                PolicySpec::Priced {
                    epsilon, cost, eta, ..
                },
                None,
            ) => {
                positive("eta", *eta)?;
                if let Some(e) = epsilon {
                    ensure!(*e > 0.0 && *e <= 1.0, "epsilon = {e} outside (0, 1]");
                }
                ensure!(
                    *cost >= 0.0 && cost.is_finite(),
                    "cost = {cost} must be nonnegative"
                );
                ensure!(
                    epsilon.is_some() || *cost > 0.0,
                    "the epsilon formula needs a positive cost"
                );
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Resolved {
        let b = self.adversary.bounds(self.n);
        Resolved {
            alpha: self.alpha.unwrap_or(b.alpha),
            value_bound: self.value_bound.unwrap_or(b.value_bound),
            g_bound: self.g_bound.unwrap_or(b.g_bound),
        }
    }
}
