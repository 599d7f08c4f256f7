//! Replicated experiment runs.

use std::fs::{self, File};
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use score_core::adversary::Adversary;
use score_core::policy::{
    augmented_regret_bound, optimistic_regret_bound, static_regret_bound, CoreStrategy,
    OftrlConfig, OftrlPolicy, PricedFeedback, RegretTracker, RoundRecord, ScoreConfig, ScorePolicy,
};
use score_core::rng::{stream_rng, streams};
use score_core::setfn::{distance_sup, distance_sup_table, value_table, SetFunction};
use serde::Serialize;

use crate::config::{ExperimentConfig, PolicySpec, Resolved};
use crate::stats::Stat;

/// Largest non-modular ground set for which hint distances are enumerated.
pub const DISTANCE_ENUM_MAX: usize = 14;

pub const CSV_HEADER: [&str; 9] = [
    "round",
    "reward",
    "full_reward",
    "cum_reward",
    "cum_benchmark",
    "aug_regret",
    "static_regret",
    "observed",
    "cum_cost",
];

#[derive(Debug, Clone, Serialize)]
struct CsvRow {
    round: usize,
    reward: f64,
    full_reward: f64,
    cum_reward: f64,
    cum_benchmark: f64,
    aug_regret: f64,
    static_regret: f64,
    observed: u8,
    cum_cost: f64,
}

/// Final numbers of one replica.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub cum_reward: f64,
    pub cum_benchmark: f64,
    pub aug_regret: f64,
    /// Regret of the expected linear rewards `<g_t, p_t>` against the best
    /// fixed point of the hypersimplex.
    pub static_regret: f64,
    pub cum_cost: f64,
    pub observed_rounds: usize,
    /// `sum_t Distance^2(f_t, h_t)`, when it was computed.
    pub distance_sq_sum: Option<f64>,
    /// Largest per-round distance between the Frank-Wolfe and exact solutions.
    pub max_solver_distance: Option<f64>,
    pub solver_distance_bound: Option<f64>,
    pub solver_rounds: usize,
    pub solver_unconverged: usize,
    pub solver_iterations: usize,
}

/// A closed-form bound and how the replicas compare to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    /// Which measured quantity the bound applies to.
    pub measure: String,
    pub bound_mean: f64,
    /// Worst per-replica `measured / bound`.
    pub max_ratio: f64,
    /// `mean(measured) / mean(bound)`.
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub policy: String,
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    pub seed: u64,
    pub resolved: Resolved,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub aug_regret: Stat,
    pub static_regret: Stat,
    pub cum_cost: Stat,
    /// Static regret plus feedback cost.
    pub static_plus_cost: Stat,
    pub bounds: Vec<BoundCheck>,
    pub replicas: Vec<ReplicaSummary>,
}

impl RunSummary {
    pub fn bound(&self, name: &str) -> Option<&BoundCheck> {
        self.bounds.iter().find(|b| b.name == name)
    }
}

fn ratio(measured: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        measured / bound
    } else if measured <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn check(name: &str, measure: &str, pairs: &[(f64, f64)]) -> BoundCheck {
    let m = pairs.len() as f64;
    let measured_mean = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let bound_mean = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    BoundCheck {
        name: name.into(),
        measure: measure.into(),
        bound_mean,
        max_ratio: pairs
            .iter()
            .map(|&(a, b)| ratio(a, b))
            .fold(f64::NEG_INFINITY, f64::max),
        mean_ratio: ratio(measured_mean, bound_mean),
    }
}

#[allow(clippy::large_enum_variant)]
enum Learner {
    Score(ScorePolicy, Option<PricedFeedback>, bool),
    Oftrl(Box<OftrlPolicy>, ChaCha8Rng),
}

/// Step size and observation rate the config resolves to.
fn score_setup(
    cfg: &ExperimentConfig,
    r: &Resolved,
) -> Result<(ScoreConfig, Option<PricedFeedback>)> {
    let base = ScoreConfig::new(cfg.n, cfg.k, cfg.horizon, r.alpha, r.value_bound)?
        .with_g_bound(r.g_bound)?;
    Ok(match &cfg.policy {
        PolicySpec::Score { eta, .. } | PolicySpec::Semibandit { eta, .. } => (
            if let Some(e) = eta {
                base.with_eta(*e)?
            } else {
                base
            },
            None,
        ),
        PolicySpec::Priced {
            epsilon, cost, eta, ..
        } => {
            let priced = match epsilon {
                Some(e) => PricedFeedback::new(*e, *cost)?,
                None => PricedFeedback::from_formula(cfg.n, cfg.k, cfg.horizon, r.g_bound, *cost)?,
            };
            let sc = base.for_priced(&priced)?;
            (
                if let Some(e) = eta {
                    sc.with_eta(*e)?
                } else {
                    sc
                },
                Some(priced),
            )
        }
        PolicySpec::Oftrl { .. } => unreachable!("oftrl has no entropic setup"),
    })
}

// Distances to hints, reusing the value table while the reward is unchanged.
struct DistanceTracker {
    enabled: bool,
    cached: Option<(Arc<dyn SetFunction>, Vec<f64>)>,
    sum_sq: f64,
}

impl DistanceTracker {
    fn push(&mut self, f: &Arc<dyn SetFunction>, hint: &[f64]) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let d = if f.as_modular().is_some() {
            distance_sup(f.as_ref(), hint)?
        } else {
            let stale = !matches!(&self.cached, Some((g, _)) if Arc::ptr_eq(g, f));
            if stale {
                self.cached = Some((f.clone(), value_table(f.as_ref())?));
            }
            distance_sup_table(&self.cached.as_ref().expect("filled above").1, hint)?
        };
        self.sum_sq += d * d;
        Ok(())
    }
}

/// Plays one replica, streaming rows to `sink` when given.
pub fn run_replica(
    cfg: &ExperimentConfig,
    replica: usize,
    sink: Option<&Path>,
) -> Result<ReplicaSummary> {
    let r = cfg.resolve();
    let base = replica as u64 * streams::PER_REPLICA;
    let (n, k, horizon) = (cfg.n, cfg.k, cfg.horizon);
    let mut adversary = Adversary::new(
        cfg.adversary.clone(),
        n,
        horizon,
        cfg.seed,
        base + streams::ADVERSARY,
    )?;
    let strategy: Box<dyn CoreStrategy> = cfg.policy.core().build()?;
    let mut hint_rng = stream_rng(cfg.seed, base + streams::HINTS);

    let mut learner = match &cfg.policy {
        PolicySpec::Oftrl {
            mode,
            sigma,
            afw_max_iters,
            shadow_exact,
            ..
        } => {
            let mut oc = OftrlConfig::new(n, k, horizon, r.g_bound, *mode)?;
            if let Some(s) = sigma {
                oc.sigma = *s;
            }
            if let Some(m) = afw_max_iters {
                oc.afw_max_iters = *m;
            }
            oc.shadow_exact = *shadow_exact;
            Learner::Oftrl(
                Box::new(OftrlPolicy::new(oc, cfg.seed, base)),
                stream_rng(cfg.seed, base + streams::CORE),
            )
        }
        policy => {
            let (sc, priced) = score_setup(cfg, &r)?;
            let semi = matches!(policy, PolicySpec::Semibandit { .. });
            Learner::Score(ScorePolicy::new(sc, cfg.seed, base), priced, semi)
        }
    };

    let mut writer = match sink {
        Some(path) => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            w.write_record(CSV_HEADER)?;
            Some(w)
        }
        None => None,
    };

    let mut tracker = RegretTracker::new(n, k, r.alpha);
    let mut distances = DistanceTracker {
        enabled: matches!(learner, Learner::Oftrl(..)),
        cached: None,
        sum_sq: 0.0,
    };
    let mut distances_ok = true;
    let mut out = ReplicaSummary {
        replica,
        cum_reward: 0.0,
        cum_benchmark: 0.0,
        aug_regret: 0.0,
        static_regret: 0.0,
        cum_cost: 0.0,
        observed_rounds: 0,
        distance_sq_sum: None,
        max_solver_distance: None,
        solver_distance_bound: None,
        solver_rounds: 0,
        solver_unconverged: 0,
        solver_iterations: 0,
    };

    for t in 1..=horizon {
        let f = adversary.next_reward();
        let rec: RoundRecord = match &mut learner {
            Learner::Score(policy, Some(priced), _) => {
                policy.priced_round(f.as_ref(), strategy.as_ref(), priced)?
            }
            Learner::Score(policy, None, true) => {
                policy.semibandit_round(f.as_ref(), strategy.as_ref())?
            }
            Learner::Score(policy, None, false) => {
                policy.score_round(f.as_ref(), strategy.as_ref())?
            }
            Learner::Oftrl(policy, core_rng) => {
                let fvec = strategy.admissible(f.as_ref(), core_rng)?.g;
                let hint = cfg
                    .hint
                    .as_ref()
                    .expect("validated")
                    .hint(&fvec, &mut hint_rng);
                if distances_ok {
                    if f.as_modular().is_none() && n > DISTANCE_ENUM_MAX {
                        distances_ok = false;
                        distances.enabled = false;
                    }
                    distances.push(&f, &hint)?;
                }
                let rec = policy.oftrl_round_with(f.as_ref(), &hint, &fvec)?;
                if let Some(s) = &rec.solver {
                    out.solver_rounds += 1;
                    out.solver_iterations += s.iterations;
                    out.solver_unconverged += usize::from(!s.converged);
                    if let Some(d) = s.exact_distance {
                        out.max_solver_distance =
                            Some(out.max_solver_distance.unwrap_or(0.0).max(d));
                    }
                }
                out.solver_distance_bound = policy.afw_distance_bound();
                rec
            }
        };
        tracker.push(&rec);
        out.observed_rounds += usize::from(rec.observed);
        if let Some(w) = writer.as_mut() {
            w.serialize(CsvRow {
                round: t,
                reward: rec.reward,
                full_reward: rec.full_reward,
                cum_reward: tracker.cum_reward(),
                cum_benchmark: tracker.benchmark(),
                aug_regret: tracker.augmented(),
                static_regret: tracker.static_linear(),
                observed: u8::from(rec.observed),
                cum_cost: tracker.cum_cost(),
            })?;
        }
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }

    out.cum_reward = tracker.cum_reward();
    out.cum_benchmark = tracker.benchmark();
    out.aug_regret = tracker.augmented();
    out.static_regret = tracker.static_linear();
    out.cum_cost = tracker.cum_cost();
    if distances.enabled {
        out.distance_sq_sum = Some(distances.sum_sq);
    }
    Ok(out)
}

/// Runs every replica (in parallel) and summarises them. With `output` set,
/// writes `replica_<i>.csv` files and `summary.json` there.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let width = cfg.replicas.saturating_sub(1).to_string().len().max(3);
    let replicas: Vec<ReplicaSummary> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let path = cfg
                .output
                .as_ref()
                .map(|d| d.join(format!("replica_{i:0width$}.csv")));
            run_replica(cfg, i, path.as_deref())
        })
        .collect::<Result<_>>()?;
    let summary = summarize(cfg, replicas)?;
    if let Some(dir) = &cfg.output {
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(summary)
}

fn summarize(cfg: &ExperimentConfig, replicas: Vec<ReplicaSummary>) -> Result<RunSummary> {
    let r = cfg.resolve();
    let (n, k, horizon) = (cfg.n, cfg.k, cfg.horizon);
    let col = |f: fn(&ReplicaSummary) -> f64| -> Vec<f64> { replicas.iter().map(f).collect() };
    let aug = col(|s| s.aug_regret);
    let stat = col(|s| s.static_regret);
    let cost = col(|s| s.cum_cost);
    let with_cost: Vec<f64> = stat.iter().zip(&cost).map(|(a, b)| a + b).collect();

    let mut bounds = Vec::new();
    let (mut eta, mut epsilon) = (None, None);
    match &cfg.policy {
        PolicySpec::Oftrl { .. } => {
            if replicas.iter().all(|s| s.distance_sq_sum.is_some()) {
                let pairs: Vec<(f64, f64)> = replicas
                    .iter()
                    .map(|s| {
                        (
                            s.aug_regret,
                            optimistic_regret_bound(k, s.distance_sq_sum.expect("checked")),
                        )
                    })
                    .collect();
                bounds.push(check("optimistic", "aug_regret", &pairs));
            }
        }
        policy => {
            let (sc, priced) = score_setup(cfg, &r)?;
            eta = Some(sc.eta);
            if n > k {
                let aug_bound = augmented_regret_bound(n, k, horizon, r.value_bound);
                bounds.push(check(
                    "augmented",
                    "aug_regret",
                    &aug.iter().map(|&a| (a, aug_bound)).collect::<Vec<_>>(),
                ));
                if let Some(p) = priced {
                    epsilon = Some(p.epsilon);
                    let b = (8.0
                        * r.g_bound
                        * r.g_bound
                        * horizon as f64
                        * k as f64
                        * score_core::policy::log_ratio(n, k)
                        / p.epsilon)
                        .sqrt()
                        + p.epsilon * p.cost * horizon as f64;
                    bounds.push(check(
                        "priced",
                        "static_plus_cost",
                        &with_cost.iter().map(|&a| (a, b)).collect::<Vec<_>>(),
                    ));
                } else if !matches!(policy, PolicySpec::Priced { .. }) {
                    let b = static_regret_bound(n, k, horizon, r.g_bound);
                    bounds.push(check(
                        "static",
                        "static_regret",
                        &stat.iter().map(|&a| (a, b)).collect::<Vec<_>>(),
                    ));
                }
            }
        }
    }

    Ok(RunSummary {
        policy: cfg.policy.name().into(),
        n,
        k,
        horizon,
        seed: cfg.seed,
        resolved: r,
        eta,
        epsilon,
        aug_regret: Stat::of(&aug),
        static_regret: Stat::of(&stat),
        cum_cost: Stat::of(&cost),
        static_plus_cost: Stat::of(&with_cost),
        bounds,
        replicas,
    })
}
