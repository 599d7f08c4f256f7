//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use score_bench::config::{ExperimentConfig, PolicySpec, SCHEMA_VERSION};
use score_bench::stats::loglog_slope;
use score_bench::sweep::{lower_bound, sweep, Axis};
use score_bench::verify::{verify, VerifyOptions};
use score_bench::{run, RunSummary};
use score_core::adversary::{AdversarySpec, HintMode, HintSpec};
use score_core::hypersimplex::euclidean_project;
use score_core::policy::{
    augmented_regret_bound, static_regret_bound, CoreSpec, Marginal, OftrlMode, ScoreConfig,
    ScorePolicy,
};
use score_core::sampling::exact_inclusion_measure;
use score_core::setfn::ModularFunction;

const STATIC_RUNTIME_LIMIT_S: f64 = 30.0;
const LOWER_BOUND_STDERRS: f64 = 4.0;
const NOISE_ZERO_SLACK_PER_ROUND: f64 = 1e-6;
const IPS_SIGMAS: f64 = 4.0;
const IPS_RESAMPLES: usize = 100_000;
const PRICED_SLOPE: (f64, f64) = (0.55, 0.80);
const VERIFY_RUNTIME_LIMIT_S: f64 = 60.0;
const MADOW_TOL: f64 = 1e-12;

fn config(
    n: usize,
    k: usize,
    horizon: usize,
    policy: PolicySpec,
    adversary: AdversarySpec,
) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        n,
        k,
        horizon,
        policy,
        adversary,
        hint: None,
        alpha: None,
        value_bound: None,
        g_bound: None,
        seed: 0,
        replicas: 1,
        output: None,
    }
}

fn score() -> PolicySpec {
    PolicySpec::Score {
        core: CoreSpec::default(),
        eta: None,
    }
}

fn per_seed(cfg: &ExperimentConfig, seeds: u64) -> Result<Vec<RunSummary>, String> {
    (0..seeds)
        .map(|seed| {
            run(&ExperimentConfig {
                seed,
                ..cfg.clone()
            })
            .map_err(|e| format!("{e:#}"))
        })
        .collect()
}

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let drift = AdversarySpec::ModularDrift {
        g_bound: 1.0,
        phases: 10,
        drift: 0.2,
    };
    let mut cfg = config(20, 5, 10_000, score(), drift);
    cfg.g_bound = Some(1.0);
    let runs = per_seed(&cfg, 20)?;
    let secs = start.elapsed().as_secs_f64();
    let bound = static_regret_bound(20, 5, 10_000, 1.0);
    let worst = runs
        .iter()
        .map(|s| s.static_regret.max)
        .fold(f64::NEG_INFINITY, f64::max);
    let msg =
        format!("worst static regret {worst:.2} vs bound {bound:.2} over 20 seeds, {secs:.2} s");
    if worst <= bound && secs < STATIC_RUNTIME_LIMIT_S {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Verdict {
    let cov = AdversarySpec::CoverageDrift {
        universe: 60,
        density: 0.1,
        phases: 10,
    };
    let mut cfg = config(20, 5, 10_000, score(), cov);
    cfg.alpha = Some(1.0);
    cfg.value_bound = Some(1.0);
    let runs = per_seed(&cfg, 20)?;
    let bound = augmented_regret_bound(20, 5, 10_000, 1.0);
    let worst = runs
        .iter()
        .map(|s| s.aug_regret.max)
        .fold(f64::NEG_INFINITY, f64::max);
    let msg = format!("worst augmented regret {worst:.2} vs bound {bound:.2} over 20 seeds");
    if worst <= bound {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Verdict {
    let r = lower_bound(10, 3, 10_000, 200, 0).map_err(|e| format!("{e:#}"))?;
    let msg = format!(
        "mean augmented regret {:.3} with standard error {:.3}",
        r.mean_aug_regret, r.stderr
    );
    if r.mean_aug_regret.abs() <= LOWER_BOUND_STDERRS * r.stderr {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oftrl(mode: OftrlMode, shadow_exact: bool) -> PolicySpec {
    PolicySpec::Oftrl {
        core: CoreSpec::default(),
        mode,
        sigma: None,
        afw_max_iters: None,
        shadow_exact,
    }
}

fn criterion_4() -> Verdict {
    let (n, k, horizon) = (12, 4, 5_000);
    let cov = AdversarySpec::CoverageDrift {
        universe: 40,
        density: 0.15,
        phases: 10,
    };
    let mut cfg = config(n, k, horizon, oftrl(OftrlMode::Afw, false), cov);
    cfg.hint = Some(HintSpec {
        mode: HintMode::AdditiveNoise,
        noise_l2: 0.0,
    });
    cfg.replicas = 5;
    let points = sweep(&cfg, Axis::NoiseL2, &[0.0, 0.1, 0.5, 1.0]).map_err(|e| format!("{e:#}"))?;
    let mut parts = Vec::new();
    let mut ok = true;
    for p in &points {
        let b = p
            .summary
            .bound("optimistic")
            .ok_or("no optimistic bound in summary")?;
        ok &= b.max_ratio <= 1.0;
        parts.push(format!("noise {}: worst ratio {:.3}", p.value, b.max_ratio));
        if p.value == 0.0 {
            let worst = p.summary.aug_regret.max;
            ok &= worst <= NOISE_ZERO_SLACK_PER_ROUND * horizon as f64;
            parts.push(format!("noise 0 worst regret {worst:.2}"));
        }
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Verdict {
    let (n, k, horizon) = (12, 4, 10_000);
    let cov = AdversarySpec::CoverageDrift {
        universe: 40,
        density: 0.15,
        phases: 10,
    };
    let mut afw = config(n, k, horizon, oftrl(OftrlMode::Afw, true), cov);
    afw.hint = Some(HintSpec {
        mode: HintMode::AdditiveNoise,
        noise_l2: 0.1,
    });
    afw.seed = 11;
    afw.replicas = 2;
    let exact = ExperimentConfig {
        policy: oftrl(OftrlMode::Exact, false),
        ..afw.clone()
    };
    let a = run(&afw).map_err(|e| format!("{e:#}"))?;
    let e = run(&exact).map_err(|e| format!("{e:#}"))?;
    let g = a.resolved.g_bound;
    let mut ok = true;
    let (mut worst_step, mut worst_gap) = (0.0f64, 0.0f64);
    let mut bound = f64::NAN;
    for (ra, re) in a.replicas.iter().zip(&e.replicas) {
        let d = ra.solver_distance_bound.ok_or("no hint ever missed")?;
        bound = d;
        let step = ra
            .max_solver_distance
            .ok_or("no shadow distances recorded")?;
        let gap = (ra.static_regret - re.static_regret).abs();
        ok &= step <= d && gap <= g * horizon as f64 * d;
        worst_step = worst_step.max(step);
        worst_gap = worst_gap.max(gap);
    }
    let msg = format!(
        "per-round distance {worst_step:.2e} vs {bound:.2e}; regret gap {worst_gap:.2e} vs {:.2e}",
        g * horizon as f64 * bound
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Verdict {
    let (n, k, horizon) = (20, 5, 20_000);
    let drift = AdversarySpec::ModularDrift {
        g_bound: 1.0,
        phases: 10,
        drift: 0.2,
    };
    let mut cfg = config(
        n,
        k,
        horizon,
        PolicySpec::Semibandit {
            core: CoreSpec::default(),
            eta: None,
        },
        drift,
    );
    cfg.g_bound = Some(1.0);
    cfg.replicas = 50;
    cfg.seed = 6;
    let s = run(&cfg).map_err(|e| format!("{e:#}"))?;
    let bound = static_regret_bound(n, k, horizon, 1.0);
    let mean = s.static_regret.mean;

    // The same non-uniform point in every resample: full-information warmup
    // on a fixed modular reward is seed independent.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f =
        ModularFunction::new(w.iter().map(|x| x / norm).collect()).map_err(|e| e.to_string())?;
    let exact_order = Marginal {
        random_order: false,
        alpha: Some(1.0),
    };
    let sc = ScoreConfig::new(n, k, horizon, 1.0, 1.0)
        .map_err(|e| e.to_string())?
        .with_eta(0.3)
        .map_err(|e| e.to_string())?;
    let mut sum = vec![0.0; n];
    let mut p = Vec::new();
    for seed in 0..IPS_RESAMPLES as u64 {
        let mut policy = ScorePolicy::new(sc.clone(), seed, 0);
        for _ in 0..10 {
            policy
                .score_round(&f, &exact_order)
                .map_err(|e| e.to_string())?;
        }
        let r = policy
            .semibandit_round(&f, &exact_order)
            .map_err(|e| e.to_string())?;
        sum.iter_mut().zip(&r.fed).for_each(|(a, b)| *a += b);
        p = r.p;
    }
    let spread = p.iter().cloned().fold(0.0, f64::max) - p.iter().cloned().fold(1.0, f64::min);
    let mut worst_z = 0.0f64;
    for i in 0..n {
        let g = f.weights()[i];
        let mean_hat = sum[i] / IPS_RESAMPLES as f64;
        let sd = g / p[i] * (p[i] * (1.0 - p[i])).sqrt() / (IPS_RESAMPLES as f64).sqrt();
        let z = if sd > 0.0 {
            (mean_hat - g).abs() / sd
        } else if mean_hat == g {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
    }
    let msg = format!("mean static regret {mean:.2} vs bound {bound:.2}; worst IPS deviation {worst_z:.2} sigma at a point with spread {spread:.2}");
    if mean <= bound && worst_z <= IPS_SIGMAS {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Verdict {
    let drift = AdversarySpec::ModularDrift {
        g_bound: 1.0,
        phases: 10,
        drift: 0.2,
    };
    let policy = PolicySpec::Priced {
        core: CoreSpec::default(),
        epsilon: None,
        cost: 1.0,
        eta: None,
    };
    let mut cfg = config(20, 5, 1_000, policy, drift);
    cfg.g_bound = Some(1.0);
    cfg.replicas = 50;
    let ts = [1e3, 8e3, 6.4e4];
    let points = sweep(&cfg, Axis::T, &ts).map_err(|e| format!("{e:#}"))?;
    let ys: Vec<f64> = points
        .iter()
        .map(|p| p.summary.static_plus_cost.mean)
        .collect();
    let slope = loglog_slope(&ts, &ys);
    let msg = format!("log-log slope {slope:.3} of mean regret + cost {ys:.1?}");
    if (PRICED_SLOPE.0..=PRICED_SLOPE.1).contains(&slope) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Verdict {
    let report = verify(&VerifyOptions::default());
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{} ({})", c.name, c.invariant))
        .collect();
    let msg = format!("{} checks in {:.2} s", report.checks.len(), report.seconds);
    if failed.is_empty() && report.seconds < VERIFY_RUNTIME_LIMIT_S {
        Ok(msg)
    } else {
        Err(format!("{msg}; failed: {}", failed.join(", ")))
    }
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let k = rng.gen_range(1..=n);
        // a mix of interior and saturated coordinates
        let y: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    rng.gen_range(-3.0..3.0)
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let p = euclidean_project(&y, k).map_err(|e| e.to_string())?;
        let m = exact_inclusion_measure(&p).map_err(|e| e.to_string())?;
        for (a, b) in m.iter().zip(p.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    let msg = format!("largest deviation {worst:.2e} over 1000 points");
    if worst <= MADOW_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 static regret, modular drift", criterion_1),
        ("2 augmented regret, coverage drift", criterion_2),
        ("3 one-hot ensemble", criterion_3),
        ("4 optimistic bound, noise sweep", criterion_4),
        ("5 Frank-Wolfe vs exact", criterion_5),
        ("6 semi-bandit", criterion_6),
        ("7 priced feedback scaling", criterion_7),
        ("8 oracle suite", criterion_8),
        ("9 Madow marginal law", criterion_9),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {name}: {msg} [{secs:.1} s]");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
