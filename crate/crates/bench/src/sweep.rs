//! One-parameter sweeps and the lower-bound ensemble.

use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, ensure, Result};
use score_core::adversary::AdversarySpec;
use score_core::policy::CoreSpec;
use serde::Serialize;

use crate::config::{ExperimentConfig, PolicySpec, SCHEMA_VERSION};
use crate::runner::{run, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    T,
    K,
    NoiseL2,
    Epsilon,
    Cost,
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "T" | "t" | "horizon" => Axis::T,
            "k" => Axis::K,
            "noise_l2" | "noise" => Axis::NoiseL2,
            "epsilon" | "eps" => Axis::Epsilon,
            "cost" | "C" => Axis::Cost,
            other => {
                bail!("unknown sweep axis {other:?} (expected T, k, noise_l2, epsilon or cost)")
            }
        })
    }
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "T",
            Axis::K => "k",
            Axis::NoiseL2 => "noise_l2",
            Axis::Epsilon => "epsilon",
            Axis::Cost => "cost",
        }
    }
}

fn integral(axis: Axis, v: f64) -> Result<usize> {
    ensure!(
        v >= 1.0 && v.fract() == 0.0 && v < 1e12,
        "{} must be a positive integer, got {v}",
        axis.name()
    );
    Ok(v as usize)
}

/// `cfg` with one scalar replaced.
pub fn apply(cfg: &ExperimentConfig, axis: Axis, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        Axis::T => c.horizon = integral(axis, value)?,
        Axis::K => c.k = integral(axis, value)?,
        Axis::NoiseL2 => match c.hint.as_mut() {
            Some(h) => h.noise_l2 = value,
            None => bail!("sweeping noise_l2 needs a hint block"),
        },
        Axis::Epsilon | Axis::Cost => match &mut c.policy {
            PolicySpec::Priced { epsilon, cost, .. } => {
                if axis == Axis::Epsilon {
                    *epsilon = Some(value);
                } else {
                    *cost = value;
                }
            }
            _ => bail!("sweeping {} needs the priced policy", axis.name()),
        },
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: RunSummary,
}

pub fn sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    ensure!(!values.is_empty(), "no sweep values");
    let base = ExperimentConfig {
        output: None,
        ..cfg.clone()
    };
    values
        .iter()
        .map(|&value| {
            log::info!("{} = {value}", axis.name());
            Ok(SweepPoint {
                value,
                summary: run(&apply(&base, axis, value)?)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv(axis: Axis, points: &[SweepPoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis",
        "value",
        "replicas",
        "aug_regret_mean",
        "aug_regret_std",
        "static_regret_mean",
        "static_regret_std",
        "cum_cost_mean",
        "static_plus_cost_mean",
        "static_plus_cost_std",
        "max_bound_ratio",
    ])?;
    for p in points {
        let s = &p.summary;
        let worst = s
            .bounds
            .iter()
            .map(|b| b.mean_ratio)
            .fold(f64::NAN, f64::max);
        w.write_record([
            axis.name().to_string(),
            p.value.to_string(),
            s.replicas.len().to_string(),
            s.aug_regret.mean.to_string(),
            s.aug_regret.std.to_string(),
            s.static_regret.mean.to_string(),
            s.static_regret.std.to_string(),
            s.cum_cost.mean.to_string(),
            s.static_plus_cost.mean.to_string(),
            s.static_plus_cost.std.to_string(),
            worst.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    pub replicas: usize,
    pub mean_aug_regret: f64,
    pub stderr: f64,
    /// Whether the mean is within four standard errors of zero.
    pub consistent: bool,
}

/// Entropic policy against the one-hot ensemble, whose expected augmented
/// regret is zero for every policy.
pub fn lower_bound(
    n: usize,
    k: usize,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    let cfg = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        n,
        k,
        horizon,
        policy: PolicySpec::Score {
            core: CoreSpec::default(),
            eta: None,
        },
        adversary: AdversarySpec::OnehotEnsemble {},
        hint: None,
        alpha: None,
        value_bound: None,
        g_bound: None,
        seed,
        replicas,
        output: None,
    };
    let s = run(&cfg)?;
    let (mean, se) = (s.aug_regret.mean, s.aug_regret.stderr);
    Ok(LowerBoundReport {
        n,
        k,
        horizon,
        replicas,
        mean_aug_regret: mean,
        stderr: se,
        consistent: mean.abs() <= 4.0 * se || (se == 0.0 && mean.abs() < 1e-9),
    })
}
