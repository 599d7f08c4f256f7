//! Set-function oracles, the reward families used by the experiments, and
//! exhaustive structural checks for small ground sets.
//!
//! Public evaluation takes 0-based index slices. Enumeration helpers walk
//! `u64` bitmasks and are guarded by explicit size limits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corevec::min_cost_matching;
use crate::error::{ensure_finite, Error, Result};

/// Default guard for anything that enumerates all `2^n` subsets.
pub const N_ENUM_MAX: usize = 20;
/// Guard for the triple enumerations in [`check_submodular`] and [`check_monotone`].
pub const N_STRUCT_MAX: usize = 14;
/// Guard for [`estimate_rho`].
pub const N_RHO_MAX: usize = 12;

const CHECK_TOL: f64 = 1e-9;

/// A normalised set function `f : 2^[n] -> R` with `f(empty) = 0`.
pub trait SetFunction: Send + Sync {
    fn n(&self) -> usize;

    /// Evaluates `f` on a set of distinct 0-based indices.
    fn eval(&self, set: &[usize]) -> f64;

    fn eval_mask(&self, mask: u64) -> f64 {
        self.eval(&mask_to_indices(mask))
    }

    /// An upper bound `M` with `f(S) <= M` for every `S`.
    fn value_bound(&self) -> f64;

    /// Coefficients, when `f` is modular.
    fn as_modular(&self) -> Option<&[f64]> {
        None
    }

    fn as_matching(&self) -> Option<&MatchingRewardFunction> {
        None
    }

    /// Whether `mask` lies in the domain on which `f` is meaningful. Core
    /// checks skip infeasible subsets.
    fn is_feasible(&self, _mask: u64) -> bool {
        true
    }

    fn full_value(&self) -> f64 {
        self.eval(&(0..self.n()).collect::<Vec<_>>())
    }
}

pub fn mask_to_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

pub fn indices_to_mask(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &i| m | 1 << i)
}

pub(crate) fn ensure_enumerable(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    Ok(())
}

/// All `2^n` values, indexed by bitmask.
pub fn value_table(f: &dyn SetFunction) -> Result<Vec<f64>> {
    ensure_enumerable(f.n(), N_ENUM_MAX)?;
    Ok((0..1u64 << f.n()).map(|m| f.eval_mask(m)).collect())
}

/// `f(S) = sum_{i in S} w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularFunction {
    w: Vec<f64>,
}

impl ModularFunction {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        ensure_finite(&w, "w")?;
        Ok(Self { w })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }
}

impl SetFunction for ModularFunction {
    fn n(&self) -> usize {
        self.w.len()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.w[i]).sum()
    }

    fn value_bound(&self) -> f64 {
        self.w.iter().map(|w| w.max(0.0)).sum()
    }

    fn as_modular(&self) -> Option<&[f64]> {
        Some(&self.w)
    }
}

/// `f(S) = weight(union_{i in S} U_i)` over a finite universe.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageFunction {
    universe: usize,
    words: usize,
    bits: Vec<Vec<u64>>,
    weights: Option<Vec<f64>>,
    bound: f64,
}

impl CoverageFunction {
    /// `sets[i]` lists the universe elements covered by item `i`.
    pub fn new(universe: usize, sets: &[Vec<usize>], weights: Option<Vec<f64>>) -> Result<Self> {
        if let Some(w) = &weights {
            if w.len() != universe {
                return Err(Error::InvalidInput(format!(
                    "{} element weights for a universe of {universe}",
                    w.len()
                )));
            }
            ensure_finite(w, "weights")?;
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidInput(
                    "element weights must be nonnegative".into(),
                ));
            }
        }
        let words = universe.div_ceil(64).max(1);
        let mut bits = Vec::with_capacity(sets.len());
        for (i, s) in sets.iter().enumerate() {
            let mut b = vec![0u64; words];
            for &e in s {
                if e >= universe {
                    return Err(Error::InvalidInput(format!(
                        "set {i} covers element {e} outside the universe"
                    )));
                }
                b[e / 64] |= 1 << (e % 64);
            }
            bits.push(b);
        }
        let mut f = Self {
            universe,
            words,
            bits,
            weights,
            bound: 0.0,
        };
        f.bound = f.full_value();
        Ok(f)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    fn weigh(&self, cover: &[u64]) -> f64 {
        match &self.weights {
            None => cover.iter().map(|w| w.count_ones() as f64).sum(),
            Some(wt) => {
                let mut total = 0.0;
                for (k, &word) in cover.iter().enumerate() {
                    let mut m = word;
                    while m != 0 {
                        total += wt[k * 64 + m.trailing_zeros() as usize];
                        m &= m - 1;
                    }
                }
                total
            }
        }
    }
}

impl SetFunction for CoverageFunction {
    fn n(&self) -> usize {
        self.bits.len()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        let mut cover = vec![0u64; self.words];
        for &i in set {
            for (c, b) in cover.iter_mut().zip(&self.bits[i]) {
                *c |= b;
            }
        }
        self.weigh(&cover)
    }

    fn eval_mask(&self, mask: u64) -> f64 {
        let mut cover = vec![0u64; self.words];
        let mut m = mask;
        while m != 0 {
            for (c, b) in cover
                .iter_mut()
                .zip(&self.bits[m.trailing_zeros() as usize])
            {
                *c |= b;
            }
            m &= m - 1;
        }
        self.weigh(&cover)
    }

    fn value_bound(&self) -> f64 {
        self.bound
    }
}

/// Minimum-cost perfect matching reward on a complete bipartite graph.
///
/// Items `0..m` are the left side `U`, items `m..2m` the right side `V`.
/// Sets with `|S_U| != |S_V|` are outside the domain and evaluate to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingRewardFunction {
    w: Vec<Vec<f64>>,
    w_max: f64,
}

impl MatchingRewardFunction {
    pub fn new(w: Vec<Vec<f64>>) -> Result<Self> {
        let m = w.len();
        if m == 0 || w.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput(
                "matching weights must be a nonempty square matrix".into(),
            ));
        }
        for row in &w {
            ensure_finite(row, "w")?;
        }
        if w.iter().flatten().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput(
                "matching weights must be nonnegative".into(),
            ));
        }
        let w_max = w.iter().flatten().cloned().fold(0.0, f64::max);
        Ok(Self { w, w_max })
    }

    pub fn side(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.w
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    fn split(&self, set: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let m = self.side();
        let left = set.iter().filter(|&&i| i < m).cloned().collect();
        let right = set.iter().filter(|&&i| i >= m).map(|&i| i - m).collect();
        (left, right)
    }

    /// Whether the set has equally many left and right vertices.
    pub fn is_balanced(&self, set: &[usize]) -> bool {
        let (l, r) = self.split(set);
        l.len() == r.len()
    }
}

impl SetFunction for MatchingRewardFunction {
    fn n(&self) -> usize {
        2 * self.side()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        let (left, right) = self.split(set);
        if left.is_empty() || left.len() != right.len() {
            return 0.0;
        }
        let sub: Vec<Vec<f64>> = left
            .iter()
            .map(|&i| right.iter().map(|&j| self.w[i][j]).collect())
            .collect();
        min_cost_matching(&sub).1
    }

    fn value_bound(&self) -> f64 {
        self.side() as f64 * self.w_max
    }

    fn as_matching(&self) -> Option<&MatchingRewardFunction> {
        Some(self)
    }

    fn is_feasible(&self, mask: u64) -> bool {
        let m = self.side();
        let left = (mask & ((1u64 << m) - 1)).count_ones();
        left == (mask >> m).count_ones()
    }
}

/// An arbitrary set function stored as a table of `2^n` values.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    n: usize,
    values: Vec<f64>,
    bound: f64,
}

impl TableFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        ensure_enumerable(n, N_ENUM_MAX)?;
        if values.len() != 1 << n {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                1u64 << n,
                values.len()
            )));
        }
        ensure_finite(&values, "values")?;
        if values[0] != 0.0 {
            return Err(Error::InvalidInput("f(empty) must be 0".into()));
        }
        let bound = values.iter().cloned().fold(0.0, f64::max);
        Ok(Self { n, values, bound })
    }

    /// Tabulates `f` over bitmasks.
    pub fn from_fn(n: usize, f: impl Fn(u64) -> f64) -> Result<Self> {
        ensure_enumerable(n, N_ENUM_MAX)?;
        Self::new(n, (0..1u64 << n).map(f).collect())
    }

    pub fn tabulate(f: &dyn SetFunction) -> Result<Self> {
        Self::new(f.n(), value_table(f)?)
    }
}

impl SetFunction for TableFunction {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &[usize]) -> f64 {
        self.values[indices_to_mask(set) as usize]
    }

    fn eval_mask(&self, mask: u64) -> f64 {
        self.values[mask as usize]
    }

    fn value_bound(&self) -> f64 {
        self.bound
    }
}

/// `max_S |f(S) - h(S)|` for a modular `h` with coefficients `h`.
pub fn distance_sup(f: &dyn SetFunction, h: &[f64]) -> Result<f64> {
    if h.len() != f.n() {
        return Err(Error::InvalidInput(format!(
            "hint has length {}, ground set has {}",
            h.len(),
            f.n()
        )));
    }
    if let Some(w) = f.as_modular() {
        let (mut pos, mut neg) = (0.0, 0.0);
        for (a, b) in w.iter().zip(h) {
            let d = a - b;
            if d > 0.0 {
                pos += d;
            } else {
                neg -= d;
            }
        }
        return Ok(f64::max(pos, neg));
    }
    ensure_enumerable(f.n(), N_ENUM_MAX)?;
    sup_gap(f.n(), |m| f.eval_mask(m), h)
}

/// As [`distance_sup`], for a function given by its [`value_table`].
pub fn distance_sup_table(table: &[f64], h: &[f64]) -> Result<f64> {
    let n = h.len();
    if n > N_ENUM_MAX || table.len() != 1 << n {
        return Err(Error::InvalidInput(format!(
            "table of {} values does not match a hint of length {n}",
            table.len()
        )));
    }
    sup_gap(n, |m| table[m as usize], h)
}

fn sup_gap(n: usize, value: impl Fn(u64) -> f64, h: &[f64]) -> Result<f64> {
    let mut hsum = vec![0.0; 1 << n];
    let mut best: f64 = 0.0;
    for mask in 1..1usize << n {
        let low = mask.trailing_zeros() as usize;
        hsum[mask] = hsum[mask & (mask - 1)] + h[low];
        best = best.max((value(mask as u64) - hsum[mask]).abs());
    }
    Ok(best)
}

fn table_for(f: &dyn SetFunction, max: usize) -> Result<Vec<f64>> {
    ensure_enumerable(f.n(), max)?;
    value_table(f)
}

// Visits every (A, B) with A a subset of B, and i outside B.
fn for_each_triple(n: usize, mut visit: impl FnMut(usize, usize, usize) -> bool) -> bool {
    let full = (1usize << n) - 1;
    for b in 0..=full {
        let outside = full & !b;
        let mut a = b;
        loop {
            let mut rest = outside;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                if !visit(a, b, i) {
                    return false;
                }
                rest &= rest - 1;
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    true
}

/// Exhaustive diminishing-returns check over all `(A, B, i)` triples.
pub fn check_submodular(f: &dyn SetFunction) -> Result<bool> {
    let t = table_for(f, N_STRUCT_MAX)?;
    let scale = 1.0 + f.value_bound().abs();
    Ok(for_each_triple(f.n(), |a, b, i| {
        let bit = 1 << i;
        t[a | bit] - t[a] >= t[b | bit] - t[b] - CHECK_TOL * scale
    }))
}

/// Exhaustive `f(S) <= f(T)` check over all pairs `S` inside `T`.
pub fn check_monotone(f: &dyn SetFunction) -> Result<bool> {
    let t = table_for(f, N_STRUCT_MAX)?;
    let scale = 1.0 + f.value_bound().abs();
    let full = (1usize << f.n()) - 1;
    for big in 0..=full {
        let mut s = big;
        loop {
            if t[s] > t[big] + CHECK_TOL * scale {
                return Ok(false);
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & big;
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoStatus {
    Estimated,
    /// Some positive gain at a larger set has zero gain at a smaller one.
    NotRhoSubmodular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub rho: f64,
    pub status: RhoStatus,
}

/// Largest `rho <= 1` with `rho (f(B+i) - f(B)) <= f(A+i) - f(A)` on all triples.
///
/// Triples whose larger-set gain is zero impose nothing and are skipped.
pub fn estimate_rho(f: &dyn SetFunction) -> Result<RhoEstimate> {
    let t = table_for(f, N_RHO_MAX)?;
    let mut rho: f64 = 1.0;
    let mut degenerate = false;
    for_each_triple(f.n(), |a, b, i| {
        let bit = 1 << i;
        let den = t[b | bit] - t[b];
        if den <= 1e-12 {
            return true;
        }
        let num = t[a | bit] - t[a];
        if num <= 0.0 {
            degenerate = true;
            return false;
        }
        rho = rho.min(num / den);
        true
    });
    if degenerate {
        log::warn!("reward is not rho-submodular for any positive rho");
        return Ok(RhoEstimate {
            rho: 0.0,
            status: RhoStatus::NotRhoSubmodular,
        });
    }
    Ok(RhoEstimate {
        rho,
        status: RhoStatus::Estimated,
    })
}

/// Result of [`spot_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub empty_value: f64,
    pub max_seen: f64,
    pub min_seen: f64,
    pub chain_violations: usize,
}

impl OracleReport {
    pub fn is_clean(&self, bound: f64) -> bool {
        self.empty_value == 0.0
            && self.min_seen >= -CHECK_TOL
            && self.max_seen <= bound * (1.0 + CHECK_TOL) + CHECK_TOL
            && self.chain_violations == 0
    }
}

/// Walks `chains` random maximal chains and records range and monotonicity
/// violations along them.
pub fn spot_check<R: rand::Rng + ?Sized>(
    f: &dyn SetFunction,
    chains: usize,
    rng: &mut R,
) -> OracleReport {
    use rand::seq::SliceRandom;
    let n = f.n();
    let empty_value = f.eval(&[]);
    let mut report = OracleReport {
        empty_value,
        max_seen: empty_value,
        min_seen: empty_value,
        chain_violations: 0,
    };
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..chains {
        order.shuffle(rng);
        let mut prev = empty_value;
        for len in 1..=n {
            let v = f.eval(&order[..len]);
            report.max_seen = report.max_seen.max(v);
            report.min_seen = report.min_seen.min(v);
            if v < prev - CHECK_TOL * (1.0 + prev.abs()) {
                report.chain_violations += 1;
            }
            prev = v;
        }
    }
    report
}

/// JSON description of a reward function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    Modular {
        weights: Vec<f64>,
    },
    Coverage {
        universe: usize,
        sets: Vec<Vec<usize>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Matching {
        weights: Vec<Vec<f64>>,
    },
    /// Values listed by bitmask, `values[0] = 0`.
    Table {
        n: usize,
        values: Vec<f64>,
    },
}

impl RewardSpec {
    pub fn build(&self) -> Result<Box<dyn SetFunction>> {
        Ok(match self {
            RewardSpec::Modular { weights } => Box::new(ModularFunction::new(weights.clone())?),
            RewardSpec::Coverage {
                universe,
                sets,
                weights,
            } => Box::new(CoverageFunction::new(*universe, sets, weights.clone())?),
            RewardSpec::Matching { weights } => {
                Box::new(MatchingRewardFunction::new(weights.clone())?)
            }
            RewardSpec::Table { n, values } => Box::new(TableFunction::new(*n, values.clone())?),
        })
    }
}

/// Sorted, deduplicated copy of `set`; rejects out-of-range indices.
pub fn normalize_set(set: &[usize], n: usize) -> Result<Vec<usize>> {
    let s: BTreeSet<usize> = set.iter().cloned().collect();
    if let Some(&i) = s.iter().next_back() {
        if i >= n {
            return Err(Error::InvalidInput(format!(
                "index {i} outside ground set of {n}"
            )));
        }
    }
    Ok(s.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_game() -> TableFunction {
        TableFunction::from_fn(3, |m| {
            if m & 1 != 0 {
                2.0
            } else if m & 2 != 0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn modular_distance_closed_form() {
        let f = ModularFunction::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(distance_sup(&f, &[2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(distance_sup(&f, &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn modular_structure() {
        let pos = ModularFunction::new(vec![1.0, 0.5, 2.0]).unwrap();
        let mixed = ModularFunction::new(vec![1.0, -0.5, 2.0]).unwrap();
        assert!(check_submodular(&pos).unwrap());
        assert!(check_monotone(&pos).unwrap());
        assert!(check_submodular(&mixed).unwrap());
        assert!(!check_monotone(&mixed).unwrap());
        assert_eq!(estimate_rho(&pos).unwrap().rho, 1.0);
    }

    #[test]
    fn second_three_player_game_is_monotone() {
        assert!(check_monotone(&second_game()).unwrap());
    }

    #[test]
    fn coverage_counts_union() {
        // U1 = {a, b}, U2 = {b, c}, U3 = {c}
        let f = CoverageFunction::new(3, &[vec![0, 1], vec![1, 2], vec![2]], None).unwrap();
        assert_eq!(f.eval(&[0, 1]), 3.0);
        assert_eq!(f.eval(&[1, 2]), 2.0);
        assert_eq!(f.value_bound(), 3.0);
        assert!(check_submodular(&f).unwrap());
        assert!(check_monotone(&f).unwrap());
        let weighted = CoverageFunction::new(
            3,
            &[vec![0, 1], vec![1, 2], vec![2]],
            Some(vec![1.0, 2.0, 4.0]),
        )
        .unwrap();
        assert_eq!(weighted.eval(&[2]), 4.0);
        assert_eq!(weighted.eval(&[0, 2]), 7.0);
    }

    #[test]
    fn matching_unbalanced_is_zero() {
        let f = MatchingRewardFunction::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(f.eval(&[0, 1, 2, 3]), 5.0);
        assert_eq!(f.eval(&[0, 1, 2]), 0.0);
        assert_eq!(f.eval(&[1, 2]), 3.0);
        assert!(!f.is_feasible(0b0111));
        assert!(f.is_feasible(0b0110));
        assert_eq!(f.value_bound(), 8.0);
    }

    #[test]
    fn rho_detects_supermodularity() {
        let eps = 0.25;
        let f = TableFunction::from_fn(4, |m| {
            let c = m.count_ones() as f64;
            c + if c >= 2.0 { eps } else { 0.0 }
        })
        .unwrap();
        // gain 1 from the empty set against gain 1 + eps into a singleton
        let est = estimate_rho(&f).unwrap();
        assert_eq!(est.status, RhoStatus::Estimated);
        assert!((est.rho - 1.0 / (1.0 + eps)).abs() < 1e-12);
    }

    #[test]
    fn rho_flags_zero_gains() {
        let f = TableFunction::from_fn(2, |m| if m == 3 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(
            estimate_rho(&f).unwrap().status,
            RhoStatus::NotRhoSubmodular
        );
    }

    #[test]
    fn guards_trip() {
        let f = ModularFunction::new(vec![1.0; 15]).unwrap();
        assert_eq!(
            check_submodular(&f),
            Err(Error::TooLarge { n: 15, max: 14 })
        );
        let c = CoverageFunction::new(1, &vec![vec![0]; 21], None).unwrap();
        assert!(matches!(
            distance_sup(&c, &[0.0; 21]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn spec_roundtrip() {
        let json = r#"{"kind":"coverage","universe":3,"sets":[[0,1],[1,2],[2]]}"#;
        let spec: RewardSpec = serde_json::from_str(json).unwrap();
        let f = spec.build().unwrap();
        assert_eq!(f.full_value(), 3.0);
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<RewardSpec>(&back).unwrap(), spec);
        assert!(
            serde_json::from_str::<RewardSpec>(r#"{"kind":"modular","weights":[1],"x":1}"#)
                .is_err()
        );
    }
}
