use score_bench::verify::{verify, VerifyOptions};
use score_core::hypersimplex::{euclidean_project, HypersimplexPoint};

// Projects a slightly shifted input: always feasible, never the projection.
fn nudged_projection(y: &[f64], k: usize) -> score_core::Result<HypersimplexPoint> {
    let mut z = y.to_vec();
    z[0] += 0.05;
    euclidean_project(&z, k)
}

#[test]
fn default_suite_passes_quickly() {
    for max_n in [4, 12] {
        let report = verify(&VerifyOptions {
            max_n,
            ..VerifyOptions::default()
        });
        assert!(
            report.passed(),
            "{:?}",
            report.failures().collect::<Vec<_>>()
        );
        assert!(report.seconds < 60.0);
    }
}

#[test]
fn faulty_projection_is_named() {
    let report = verify(&VerifyOptions {
        max_n: 6,
        projector: nudged_projection,
        ..VerifyOptions::default()
    });
    assert!(!report.passed());
    let failed: Vec<_> = report.failures().collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].name, "projection");
    assert!(failed[0].invariant.contains("projection"));
    assert!(failed[0]
        .detail
        .as_ref()
        .unwrap()
        .contains("projection off by"));
}
