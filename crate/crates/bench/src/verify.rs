//! Brute-force oracle checks over small random instances.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use score_core::corevec::{
    avg_submodular_shapley_check, core_membership, dictator_vector, find_dictator, hungarian_duals,
    marginal_vector, matching_core_vector, random_permutation, shapley_exact, tightest_alpha,
    CORE_TOL,
};
use score_core::hypersimplex::{
    afw_minimize, euclidean_project, lmo, AfwOptions, AfwStart, HypersimplexPoint,
    QuadraticObjective,
};
use score_core::sampling::{enumerate_outcomes, exact_inclusion_measure};
use score_core::setfn::{
    check_submodular, distance_sup, estimate_rho, value_table, CoverageFunction,
    MatchingRewardFunction, RhoStatus, SetFunction, TableFunction, N_RHO_MAX, N_STRUCT_MAX,
};
use serde::Serialize;

pub type Projector = fn(&[f64], usize) -> score_core::Result<HypersimplexPoint>;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub max_n: usize,
    pub seed: u64,
    /// The projection under test.
    pub projector: Projector,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_n: 12,
            seed: 0,
            projector: euclidean_project,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub invariant: &'static str,
    pub cases: usize,
    pub passed: bool,
    /// First counterexample or error.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub max_n: usize,
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Outcome = std::result::Result<usize, String>;

macro_rules! fail_if {
    ($cond:expr, $($arg:tt)*) => {
        if $cond {
            return Err(format!($($arg)*));
        }
    };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_coverage(rng: &mut ChaCha8Rng, n: usize) -> CoverageFunction {
    let universe = rng.gen_range(1..=24);
    let density = rng.gen_range(0.05..0.5);
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..universe).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    let weights = (0..universe).map(|_| rng.gen_range(0.0..1.0)).collect();
    CoverageFunction::new(universe, &sets, Some(weights)).expect("valid family")
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, k: usize) -> HypersimplexPoint {
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
    euclidean_project(&y, k).expect("valid budget")
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// Minimum over all (zero, one, free) labelings of the face-restricted minimiser.
fn project_by_faces(y: &[f64], k: usize) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut labels = vec![0u8; n];
    loop {
        let ones = labels.iter().filter(|&&l| l == 1).count();
        let free: Vec<usize> = (0..n).filter(|&i| labels[i] == 2).collect();
        let mut p: Vec<f64> = labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { 0.0 })
            .collect();
        let ok = if free.is_empty() {
            ones == k
        } else if ones <= k {
            let tau =
                (free.iter().map(|&i| y[i]).sum::<f64>() - (k - ones) as f64) / free.len() as f64;
            free.iter().all(|&i| {
                p[i] = y[i] - tau;
                (0.0..=1.0).contains(&p[i])
            })
        } else {
            false
        };
        if ok {
            let d = sq_dist(&p, y);
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, p));
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return best.expect("some vertex is always a candidate").1;
            }
            labels[i] += 1;
            if labels[i] < 3 {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

// Clipped shift `clamp(y - tau, 0, 1)` with the total fixed by bisection.
fn project_by_bisection(y: &[f64], k: usize) -> Vec<f64> {
    let at = |tau: f64| -> Vec<f64> { y.iter().map(|v| (v - tau).clamp(0.0, 1.0)).collect() };
    let lo0 = y.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi0 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).iter().sum::<f64>() > k as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn check_projection(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Outcome {
    let mut cases = 0;
    for n in 1..=opts.max_n {
        for k in 1..=n {
            for _ in 0..6 {
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..2.5)).collect();
                let got = (opts.projector)(&y, k).map_err(err)?;
                let want = if n <= 8 {
                    project_by_faces(&y, k)
                } else {
                    project_by_bisection(&y, k)
                };
                let d = sq_dist(got.as_slice(), &want).sqrt();
                fail_if!(
                    d > 1e-8,
                    "n = {n}, k = {k}, y = {y:?}: projection off by {d:.3e}"
                );
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn check_lmo(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Outcome {
    let mut cases = 0;
    for n in 1..=opts.max_n {
        for _ in 0..8 {
            let k = rng.gen_range(1..=n);
            let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = lmo(&cost, k).map_err(err)?.dot(&cost);
            let best = (0..1u64 << n)
                .filter(|m| m.count_ones() as usize == k)
                .map(|m| {
                    (0..n)
                        .filter(|i| m >> i & 1 == 1)
                        .map(|i| cost[i])
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            fail_if!(
                (got - best).abs() > 1e-12,
                "n = {n}, k = {k}: lmo cost {got} vs best vertex {best}"
            );
            cases += 1;
        }
    }
    Ok(cases)
}

fn check_madow(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Outcome {
    let top = (4 * opts.max_n).min(50);
    for case in 0..200 {
        let n = rng.gen_range(1..=top);
        let k = rng.gen_range(1..=n);
        let p = random_point(rng, n, k);
        let measure = exact_inclusion_measure(&p).map_err(err)?;
        for (i, (m, pi)) in measure.iter().zip(p.as_slice()).enumerate() {
            fail_if!(
                (m - pi).abs() > 1e-12,
                "case {case}: item {i} selected with measure {m}, target {pi}"
            );
        }
        let outcomes = enumerate_outcomes(&p).map_err(err)?;
        let mass: f64 = outcomes.iter().map(|o| o.1).sum();
        fail_if!(
            (mass - 1.0).abs() > 1e-12,
            "case {case}: outcome mass {mass}"
        );
        fail_if!(
            outcomes.iter().any(|(s, _)| s.len() != k),
            "case {case}: a sample does not have {k} items"
        );
    }
    Ok(200)
}

fn check_submodular_marginals(
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
    norms: &mut Vec<NormCase>,
) -> Outcome {
    let mut cases = 0;
    for n in 1..=opts.max_n.min(N_STRUCT_MAX) {
        for _ in 0..4 {
            let f = random_coverage(rng, n);
            fail_if!(
                !check_submodular(&f).map_err(err)?,
                "n = {n}: a coverage function failed the submodularity check"
            );
            let m = f.full_value();
            for _ in 0..5 {
                let perm = random_permutation(n, rng);
                let g = marginal_vector(&f, &perm, Some(1.0)).map_err(err)?;
                fail_if!(
                    !core_membership(&g.g, &f, 1.0, CORE_TOL).map_err(err)?,
                    "n = {n}, order {perm:?}: marginal vector {:?} outside the 1-core",
                    g.g
                );
                norms.push(NormCase {
                    what: "marginal",
                    norm: g.norm(),
                    alpha: 1.0,
                    m,
                });
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn check_rho(opts: &VerifyOptions, rng: &mut ChaCha8Rng, norms: &mut Vec<NormCase>) -> Outcome {
    let mut cases = 0;
    for n in 2..=opts.max_n.min(N_RHO_MAX) {
        for _ in 0..3 {
            let cov = random_coverage(rng, n);
            let c = rng.gen_range(0.01..0.2);
            let f = TableFunction::from_fn(n, |m| {
                cov.eval_mask(m) + c * (m.count_ones() as f64).powi(2)
            })
            .map_err(err)?;
            let est = estimate_rho(&f).map_err(err)?;
            fail_if!(
                est.status != RhoStatus::Estimated,
                "n = {n}: synthetic function not rho-submodular"
            );
            let perm = random_permutation(n, rng);
            let g = marginal_vector(&f, &perm, Some(1.0 / est.rho)).map_err(err)?;
            let tight = tightest_alpha(&g.g, &f).map_err(err)?;
            fail_if!(
                tight > 1.0 / est.rho + CORE_TOL,
                "n = {n}: tightest alpha {tight} exceeds 1/rho = {}",
                1.0 / est.rho
            );
            norms.push(NormCase {
                what: "rho-marginal",
                norm: g.norm(),
                alpha: 1.0 / est.rho,
                m: f.full_value(),
            });
            cases += 1;
        }
    }
    Ok(cases)
}

fn check_dictators(
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
    norms: &mut Vec<NormCase>,
) -> Outcome {
    let mut cases = 0;
    for n in 1..=opts.max_n {
        for _ in 0..4 {
            let f = random_coverage(rng, n);
            let m = (0..n).map(|i| f.eval(&[i])).fold(0.0, f64::max);
            if m <= 0.0 {
                continue;
            }
            let i =
                find_dictator(&f, m).ok_or_else(|| format!("n = {n}: no dictator at level {m}"))?;
            let g = dictator_vector(&f, i, m).map_err(err)?;
            let alpha = g.alpha.expect("dictator vectors carry alpha");
            let full = f.full_value();
            fail_if!(
                (alpha - (full / m).max(1.0)).abs() > 1e-12,
                "n = {n}: dictator alpha {alpha} is not M/m"
            );
            fail_if!(
                !core_membership(&g.g, &f, alpha, CORE_TOL).map_err(err)?,
                "n = {n}: dictator vector outside the {alpha}-core"
            );
            norms.push(NormCase {
                what: "dictator",
                norm: g.norm(),
                alpha,
                m: full,
            });
            cases += 1;
        }
    }
    Ok(cases)
}

fn check_three_player_games() -> Outcome {
    let first =
        TableFunction::from_fn(3, |m| if m & 0b11 != 0 { 1.0 } else { 0.0 }).map_err(err)?;
    let second = TableFunction::from_fn(3, |m| {
        if m & 1 != 0 {
            2.0
        } else if m & 2 != 0 {
            1.0
        } else {
            0.0
        }
    })
    .map_err(err)?;
    let member =
        |g: &[f64], f: &TableFunction, a: f64| core_membership(g, f, a, CORE_TOL).map_err(err);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        fail_if!(
            !member(&[t, 1.0 - t, 0.0], &first, 1.0)?,
            "(t, 1 - t, 0) with t = {t} left the core of the first game"
        );
    }
    for g in [[1.01, -0.01, 0.0], [-0.01, 1.01, 0.0], [0.5, 0.4, 0.1]] {
        fail_if!(
            member(&g, &first, 1.0)?,
            "{g:?} should be outside the core of the first game"
        );
    }
    fail_if!(
        !member(&[3.0, 0.0, -1.0], &second, 2.0)?,
        "(3, 0, -1) is not in the 2-core of the second game"
    );
    let tight = tightest_alpha(&[3.0, 0.0, -1.0], &second).map_err(err)?;
    fail_if!(
        tight != 1.5,
        "tightest alpha of (3, 0, -1) is {tight}, expected 1.5"
    );
    fail_if!(
        member(&[3.0, 0.0, -1.0], &second, 1.49)?,
        "(3, 0, -1) passed below its tightest alpha"
    );
    Ok(10)
}

fn check_shapley(opts: &VerifyOptions, rng: &mut ChaCha8Rng, norms: &mut Vec<NormCase>) -> Outcome {
    let mut cases = 0;
    for n in 1..=opts.max_n.min(10) {
        let f = random_coverage(rng, n);
        let phi = shapley_exact(&f).map_err(err)?;
        fail_if!(
            !avg_submodular_shapley_check(&f, CORE_TOL).map_err(err)?,
            "n = {n}: submodular f failed the Shapley core test"
        );
        fail_if!(
            !core_membership(&phi, &f, 1.0, CORE_TOL).map_err(err)?,
            "n = {n}: Shapley value outside the 1-core"
        );
        norms.push(NormCase {
            what: "shapley",
            norm: norm(&phi),
            alpha: 1.0,
            m: f.full_value(),
        });
        cases += 1;
    }
    Ok(cases)
}

fn check_matching(
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
    norms: &mut Vec<NormCase>,
) -> Outcome {
    let mut cases = 0;
    for side in 1..=opts.max_n / 2 {
        for _ in 0..4 {
            let w_max = rng.gen_range(0.5..3.0);
            let w: Vec<Vec<f64>> = (0..side)
                .map(|_| (0..side).map(|_| rng.gen_range(0.0..w_max)).collect())
                .collect();
            let d = hungarian_duals(&w).map_err(err)?;
            let f = MatchingRewardFunction::new(w.clone()).map_err(err)?;
            let full = f.full_value();
            let total: f64 = d.u.iter().chain(&d.v).sum();
            fail_if!(
                (total - full).abs() > 1e-9,
                "side {side}: duals sum {total}, optimum {full}"
            );
            fail_if!(
                (d.value - full).abs() > 1e-9,
                "side {side}: reported value {} vs {full}",
                d.value
            );
            for i in 0..side {
                for j in 0..side {
                    fail_if!(
                        d.u[i] + d.v[j] > w[i][j] + 1e-9,
                        "side {side}: dual constraint ({i}, {j}) violated"
                    );
                }
            }
            let g = matching_core_vector(&w).map_err(err)?;
            fail_if!(
                !core_membership(&g.g, &f, 1.0, CORE_TOL).map_err(err)?,
                "side {side}: dual vector outside the 1-core on balanced sets"
            );
            if d.nonnegative {
                let m = value_table(&f)
                    .map_err(err)?
                    .into_iter()
                    .fold(0.0, f64::max);
                norms.push(NormCase {
                    what: "matching-dual",
                    norm: g.norm(),
                    alpha: 1.0,
                    m,
                });
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn check_hint_lemma(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Outcome {
    for case in 0..1000 {
        let n = rng.gen_range(1..=opts.max_n.min(12));
        let f = random_coverage(rng, n);
        let perm = random_permutation(n, rng);
        let fvec = marginal_vector(&f, &perm, None).map_err(err)?.g;
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.0)).collect();
        let l1: f64 = fvec.iter().zip(&h).map(|(a, b)| (a - b).abs()).sum();
        let dist = distance_sup(&f, &h).map_err(err)?;
        fail_if!(
            l1 > 3.0 * dist + 1e-9,
            "case {case}: l1 gap {l1} exceeds 3 x distance {dist}"
        );
    }
    Ok(1000)
}

fn check_afw(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Outcome {
    let mut cases = 0;
    for n in 2..=opts.max_n {
        for _ in 0..5 {
            let k = rng.gen_range(1..n);
            let pts: Vec<HypersimplexPoint> = (0..rng.gen_range(1..5))
                .map(|_| random_point(rng, n, k))
                .collect();
            let centers: Vec<(f64, &HypersimplexPoint)> =
                pts.iter().map(|p| (rng.gen_range(0.05..1.0), p)).collect();
            let s: f64 = centers.iter().map(|c| c.0).sum();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let obj = QuadraticObjective::new(&centers, b, k).map_err(err)?;
            let eps = 1e-9;
            let start = AfwStart::Vertex(lmo(&obj.gradient(&vec![0.0; n]), k).map_err(err)?);
            let out = afw_minimize(
                &obj,
                AfwOptions {
                    eps,
                    max_iters: 100_000,
                },
                start,
            )
            .map_err(err)?;
            let exact = obj.minimize_exact().map_err(err)?;
            fail_if!(
                !out.converged || out.gap > eps,
                "n = {n}, k = {k}: stopped at gap {}",
                out.gap
            );
            let excess = obj.value(out.point.as_slice()) - obj.value(exact.as_slice());
            fail_if!(
                excess > out.gap + 1e-10,
                "n = {n}, k = {k}: excess {excess} above certified gap {}",
                out.gap
            );
            let d2 = sq_dist(out.point.as_slice(), exact.as_slice());
            fail_if!(
                d2 > 2.0 * out.gap / s + 1e-12,
                "n = {n}, k = {k}: distance {d2} beyond strong-convexity bound"
            );
            cases += 1;
        }
    }
    Ok(cases)
}

struct NormCase {
    what: &'static str,
    norm: f64,
    alpha: f64,
    m: f64,
}

fn check_norms(norms: &[NormCase]) -> Outcome {
    for c in norms {
        let bound = c.alpha * c.m * 2f64.sqrt() + 1e-7;
        fail_if!(
            c.norm > bound,
            "{} vector of norm {} above alpha M sqrt(2) = {bound}",
            c.what,
            c.norm
        );
    }
    Ok(norms.len())
}

/// Runs every check; never stops early.
pub fn verify(opts: &VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let opts = VerifyOptions {
        max_n: opts.max_n.max(1),
        ..*opts
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut norms = Vec::new();
    let mut checks = Vec::new();
    let mut record = |name: &'static str, invariant: &'static str, outcome: Outcome| {
        let (cases, passed, detail) = match outcome {
            Ok(c) => (c, true, None),
            Err(d) => (0, false, Some(d)),
        };
        log::info!("{name}: {}", if passed { "pass" } else { "FAIL" });
        checks.push(CheckResult {
            name,
            invariant,
            cases,
            passed,
            detail,
        });
    };
    record(
        "projection",
        "euclidean projection matches face enumeration / bisection",
        check_projection(&opts, &mut rng),
    );
    record(
        "lmo",
        "linear minimisation picks the cheapest k-subset",
        check_lmo(&opts, &mut rng),
    );
    record(
        "madow",
        "Madow inclusion measure equals p exactly",
        check_madow(&opts, &mut rng),
    );
    record(
        "marginal-core",
        "marginal vectors of submodular f lie in the 1-core",
        check_submodular_marginals(&opts, &mut rng, &mut norms),
    );
    record(
        "rho-core",
        "marginal vectors of rho-submodular f lie in the (1/rho)-core",
        check_rho(&opts, &mut rng, &mut norms),
    );
    record(
        "dictator-core",
        "dictator vectors lie in the (M/m)-core",
        check_dictators(&opts, &mut rng, &mut norms),
    );
    record(
        "three-player-games",
        "the worked three-player core examples",
        check_three_player_games(),
    );
    record(
        "shapley-core",
        "Shapley values of submodular f lie in the 1-core",
        check_shapley(&opts, &mut rng, &mut norms),
    );
    record(
        "matching-duals",
        "matching duals are feasible, tight and in the 1-core",
        check_matching(&opts, &mut rng, &mut norms),
    );
    record(
        "hint-lemma",
        "l1 gap to a modular hint is at most 3 x distance",
        check_hint_lemma(&opts, &mut rng),
    );
    record(
        "afw-certificate",
        "Frank-Wolfe gap certifies suboptimality",
        check_afw(&opts, &mut rng),
    );
    record(
        "norm-bound",
        "every constructed vector has norm at most alpha M sqrt(2)",
        check_norms(&norms),
    );
    VerifyReport {
        max_n: opts.max_n,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}
