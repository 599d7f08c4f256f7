use score_bench::config::{ExperimentConfig, PolicySpec, SCHEMA_VERSION};
use score_bench::run;
use score_bench::runner::{run_replica, CSV_HEADER};
use score_core::adversary::{AdversarySpec, HintMode, HintSpec};
use score_core::policy::{CoreSpec, OftrlMode};

fn base(n: usize, k: usize, horizon: usize) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        n,
        k,
        horizon,
        policy: PolicySpec::Score {
            core: CoreSpec::default(),
            eta: None,
        },
        adversary: AdversarySpec::CoverageDrift {
            universe: 30,
            density: 0.2,
            phases: 4,
        },
        hint: None,
        alpha: None,
        value_bound: None,
        g_bound: None,
        seed: 9,
        replicas: 3,
        output: None,
    }
}

fn read(path: &std::path::Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn reruns_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = base(8, 3, 120);
    cfg.output = Some(a.path().to_path_buf());
    let first = run(&cfg).unwrap();
    cfg.output = Some(b.path().to_path_buf());
    let second = run(&cfg).unwrap();
    assert_eq!(first, second);
    for i in 0..3 {
        let name = format!("replica_{i:03}.csv");
        let (x, y) = (
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
        );
        assert_eq!(x, y);
        let header = csv::Reader::from_path(a.path().join(&name))
            .unwrap()
            .headers()
            .unwrap()
            .clone();
        assert_eq!(header.iter().collect::<Vec<_>>(), CSV_HEADER);
        assert_eq!(read(&a.path().join(&name)).len(), 120);
        assert!(!x.contains(&b'\r'));
    }
    assert!(a.path().join("summary.json").exists());
}

#[test]
fn replicas_merge_by_index() {
    let cfg = base(8, 3, 60);
    let summary = run(&cfg).unwrap();
    for (i, r) in summary.replicas.iter().enumerate() {
        assert_eq!(r.replica, i);
        assert_eq!(r, &run_replica(&cfg, i, None).unwrap());
    }
    assert_ne!(
        summary.replicas[0].cum_reward,
        summary.replicas[1].cum_reward
    );
}

#[test]
fn final_row_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(8, 3, 80);
    cfg.replicas = 1;
    cfg.output = Some(dir.path().to_path_buf());
    let s = run(&cfg).unwrap();
    let rows = read(&dir.path().join("replica_000.csv"));
    let last = rows.last().unwrap();
    assert_eq!(last[0].parse::<usize>().unwrap(), 80);
    assert_eq!(last[5].parse::<f64>().unwrap(), s.replicas[0].aug_regret);
    assert_eq!(last[6].parse::<f64>().unwrap(), s.replicas[0].static_regret);
}

#[test]
fn full_budget_has_zero_augmented_regret_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(6, 6, 50);
    cfg.replicas = 1;
    cfg.output = Some(dir.path().to_path_buf());
    run(&cfg).unwrap();
    for row in read(&dir.path().join("replica_000.csv")) {
        assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn priced_cost_and_observations_are_consistent() {
    let mut cfg = base(10, 3, 400);
    cfg.policy = PolicySpec::Priced {
        core: CoreSpec::default(),
        epsilon: Some(0.25),
        cost: 2.0,
        eta: None,
    };
    let s = run(&cfg).unwrap();
    for r in &s.replicas {
        assert_eq!(r.cum_cost, 2.0 * r.observed_rounds as f64);
    }
    assert_eq!(s.epsilon, Some(0.25));
    assert!(s.bound("priced").is_some());
}

#[test]
fn oftrl_reports_distances_and_bounds() {
    let mut cfg = base(8, 3, 100);
    cfg.policy = PolicySpec::Oftrl {
        core: CoreSpec::default(),
        mode: OftrlMode::Afw,
        sigma: None,
        afw_max_iters: None,
        shadow_exact: true,
    };
    cfg.hint = Some(HintSpec {
        mode: HintMode::AdversarialFlip,
        noise_l2: 0.0,
    });
    let s = run(&cfg).unwrap();
    let b = s.bound("optimistic").unwrap();
    assert!(b.max_ratio <= 1.0);
    for r in &s.replicas {
        assert!(r.distance_sq_sum.unwrap() > 0.0);
        assert!(r.max_solver_distance.unwrap() <= r.solver_distance_bound.unwrap());
    }
}
