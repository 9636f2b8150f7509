//! Exhaustive oracle, empirical submodularity / monotonicity checks, and
//! instance-level certificates for the approximation guarantees of each
//! engine.

use std::f64::consts::E;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{random_greedy, seeded_rng};
use crate::problem::{Algorithm, SelectionProblem, SelectionResult};
use crate::state::SelectionState;

pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;
pub const DEFAULT_EXPECTATION_TRIALS: usize = 200;
/// Slack on every certified inequality.
pub const BOUND_TOLERANCE: f64 = 1e-9;
/// Slack on the submodularity and monotonicity inequalities.
pub const PROPERTY_TOLERANCE: f64 = 1e-12;

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Exact maximizer over all `m`-subsets of the candidates. Ties go to the
/// lexicographically smallest set.
pub fn brute_force_optimum(problem: &SelectionProblem, cap: u128) -> Result<SelectionResult> {
    let started = Instant::now();
    let (r, m) = (problem.num_candidates(), problem.m());
    let count = binomial(r, m).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }

    let mut combo: Vec<usize> = (0..m).collect();
    let mut best = combo.clone();
    let mut best_value = problem.objective(&combo);
    // next combination in lexicographic order
    while let Some(i) = (0..m).rev().find(|&i| combo[i] < r - m + i) {
        combo[i] += 1;
        for j in i + 1..m {
            combo[j] = combo[j - 1] + 1;
        }
        let v = problem.objective(&combo);
        if v > best_value {
            best_value = v;
            best.copy_from_slice(&combo);
        }
    }

    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(m);
    for &u in &best {
        gains.push(state.gain(u));
        state.add(u)?;
    }
    Ok(SelectionResult::finish(problem, &best, gains, Algorithm::BruteForce, None, started))
}

/// Mean similarity over all (candidate, novel) pairs.
pub fn average_similarity_q(problem: &SelectionProblem) -> f64 {
    let total: f64 = (0..problem.num_candidates()).map(|u| problem.candidate_row(u).iter().sum::<f64>()).sum();
    total / (problem.num_candidates() * problem.num_novel()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmodularityReport {
    pub trials: usize,
    /// violations of h(A∩B) + h(A∪B) ≤ h(A) + h(B)
    pub lattice_violations: usize,
    /// trials where a `u ∉ A∪B` existed
    pub diminishing_trials: usize,
    /// violations of h(u | A∩B) ≥ h(u | A∪B)
    pub diminishing_violations: usize,
    /// smallest `rhs − lhs` seen in the lattice form (negative means violated)
    pub worst_lattice_margin: f64,
    pub worst_diminishing_margin: f64,
    pub tolerance: f64,
}

impl SubmodularityReport {
    pub fn violations(&self) -> usize {
        self.lattice_violations + self.diminishing_violations
    }
}

fn random_subset(rng: &mut impl Rng, r: usize, out: &mut Vec<bool>) {
    out.clear();
    out.extend((0..r).map(|_| rng.random_bool(0.5)));
}

fn members(mask: &[bool]) -> Vec<usize> {
    (0..mask.len()).filter(|&u| mask[u]).collect()
}

/// Samples random `A, B ⊆ B_u` and checks both forms of submodularity. The
/// diminishing-returns form uses the nested pair `A∩B ⊆ A∪B` with a random
/// `u` outside the union.
pub fn check_submodularity(problem: &SelectionProblem, trials: usize, seed: u64) -> SubmodularityReport {
    let r = problem.num_candidates();
    let mut rng = seeded_rng(seed);
    let (mut a, mut b) = (Vec::with_capacity(r), Vec::with_capacity(r));
    let mut report = SubmodularityReport {
        trials,
        lattice_violations: 0,
        diminishing_trials: 0,
        diminishing_violations: 0,
        worst_lattice_margin: f64::INFINITY,
        worst_diminishing_margin: f64::INFINITY,
        tolerance: PROPERTY_TOLERANCE,
    };
    for _ in 0..trials {
        random_subset(&mut rng, r, &mut a);
        random_subset(&mut rng, r, &mut b);
        let meet: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x && *y).collect();
        let join: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x || *y).collect();
        let (sa, sb, smeet, sjoin) = (members(&a), members(&b), members(&meet), members(&join));
        let h_meet = problem.objective(&smeet);
        let h_join = problem.objective(&sjoin);
        let margin = problem.objective(&sa) + problem.objective(&sb) - h_meet - h_join;
        report.worst_lattice_margin = report.worst_lattice_margin.min(margin);
        if margin < -PROPERTY_TOLERANCE {
            report.lattice_violations += 1;
        }

        let outside: Vec<usize> = (0..r).filter(|&u| !join[u]).collect();
        if outside.is_empty() {
            continue;
        }
        let u = outside[rng.random_range(0..outside.len())];
        report.diminishing_trials += 1;
        let with = |s: &[usize]| {
            let mut v = s.to_vec();
            v.push(u);
            problem.objective(&v)
        };
        let gain_small = with(&smeet) - h_meet;
        let gain_large = with(&sjoin) - h_join;
        let margin = gain_small - gain_large;
        report.worst_diminishing_margin = report.worst_diminishing_margin.min(margin);
        if margin < -PROPERTY_TOLERANCE {
            report.diminishing_violations += 1;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub violations: usize,
    /// smallest `h(V) − h(U)` over sampled `U ⊆ V`
    pub worst_margin: f64,
    pub tolerance: f64,
}

/// Samples nested `U ⊆ V` and checks `h(U) ≤ h(V)`. Only expected to hold for `λ = 0`.
pub fn check_monotonicity(problem: &SelectionProblem, trials: usize, seed: u64) -> MonotonicityReport {
    let r = problem.num_candidates();
    let mut rng = seeded_rng(seed);
    let mut v = Vec::with_capacity(r);
    let mut report =
        MonotonicityReport { trials, violations: 0, worst_margin: f64::INFINITY, tolerance: PROPERTY_TOLERANCE };
    for _ in 0..trials {
        random_subset(&mut rng, r, &mut v);
        let big = members(&v);
        let small: Vec<usize> = big.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let margin = problem.objective(&big) - problem.objective(&small);
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -PROPERTY_TOLERANCE {
            report.violations += 1;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guarantee {
    /// greedy on novel classes is optimal
    OptimalCoverage,
    /// `h(U) ≥ (1 − 1/e)·h(OPT) + Q/e`
    GreedyTarget,
    /// `E h(U) ≥ (1 − m/(e r))/e · h(OPT) + C1·Q`
    RandomGreedy,
    /// `h(U) ≥ (1 + r/(2√((r−m)m)))⁻¹ · h(OPT) + C2·Q`
    ContinuousDouble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionFlag {
    NegativeSimilarities,
    PreselectedNonEmpty,
    LambdaNotZero,
    LambdaOutOfRange,
    BudgetBelowCoverage,
    BudgetBelowTopK,
    AsymptoticTermsIgnored,
    OracleUnavailable,
    NoGuarantee,
}

impl AssumptionFlag {
    /// Flags that only annotate; all others mean a hypothesis of the bound is unmet.
    pub fn is_informational(self) -> bool {
        matches!(self, AssumptionFlag::AsymptoticTermsIgnored)
    }
}

impl fmt::Display for AssumptionFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssumptionFlag::NegativeSimilarities => "negative similarities present",
            AssumptionFlag::PreselectedNonEmpty => "B_s nonempty: outside the guarantee's scope",
            AssumptionFlag::LambdaNotZero => "guarantee requires lambda = 0",
            AssumptionFlag::LambdaOutOfRange => "guarantee requires 0 < lambda < 1/(e-1)",
            AssumptionFlag::BudgetBelowCoverage => "optimality requires m >= K*|N|",
            AssumptionFlag::BudgetBelowTopK => "m < K: the Q term is not supported",
            AssumptionFlag::AsymptoticTermsIgnored => "epsilon and o(1) terms treated as 0",
            AssumptionFlag::OracleUnavailable => "exhaustive optimum unavailable (enumeration cap)",
            AssumptionFlag::NoGuarantee => "algorithm carries no approximation guarantee",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub algorithm: Algorithm,
    pub guarantee: Option<Guarantee>,
    /// objective of the run, or the Monte-Carlo mean for randomized engines
    pub h_alg: f64,
    pub h_alg_stderr: Option<f64>,
    pub trials: usize,
    pub h_opt: Option<f64>,
    pub q: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub bound_value: Option<f64>,
    pub satisfied: bool,
    pub assumption_flags: Vec<AssumptionFlag>,
}

impl BoundCertificate {
    /// Either the bound holds or a flag explains why it need not.
    pub fn is_complete(&self) -> bool {
        self.satisfied || self.assumption_flags.iter().any(|f| !f.is_informational())
    }

    /// Value compared against the bound: `h_alg − 3·stderr` for randomized runs.
    pub fn certified_value(&self) -> f64 {
        self.h_alg - 3.0 * self.h_alg_stderr.unwrap_or(0.0)
    }
}

pub fn random_greedy_q_coefficient(m: usize, r: usize, lambda: f64) -> f64 {
    let ratio = m as f64 / r as f64;
    1.0 / E + (1.0 - 1.0 / E) * ratio - (1.0 - 1.0 / E) * lambda
}

pub fn continuous_double_q_coefficient(m: usize, r: usize, lambda: f64) -> f64 {
    let (m, r) = (m as f64, r as f64);
    (1.0 - lambda) * r / (2.0 * ((r - m) * m).sqrt() + r)
}

/// Coefficient of `h(OPT)` in the random greedy bound.
pub fn random_greedy_factor(m: usize, r: usize) -> f64 {
    (1.0 - m as f64 / (E * r as f64)) / E
}

/// Coefficient of `h(OPT)` in the continuous double greedy bound.
pub fn continuous_double_factor(m: usize, r: usize) -> f64 {
    let (m, r) = (m as f64, r as f64);
    let root = ((r - m) * m).sqrt();
    if root == 0.0 {
        0.0
    } else {
        1.0 / (1.0 + r / (2.0 * root))
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Computes the guarantee that applies to `result.algorithm` and checks it
/// against the exhaustive optimum. Randomized engines are re-run on
/// `trials` consecutive seeds starting at `result.seed`.
pub fn certify_bounds(
    problem: &SelectionProblem,
    result: &SelectionResult,
    trials: usize,
    cap: u128,
) -> Result<BoundCertificate> {
    let (r, m, k) = (problem.num_candidates(), problem.m(), problem.k());
    let lambda = problem.lambda();
    let q = average_similarity_q(problem);
    let mut flags = Vec::new();

    let guarantee = match result.algorithm {
        Algorithm::GreedyNovelClass => Some(Guarantee::OptimalCoverage),
        Algorithm::GreedyTarget => Some(Guarantee::GreedyTarget),
        Algorithm::RandomGreedy => Some(Guarantee::RandomGreedy),
        Algorithm::ContinuousDouble => Some(Guarantee::ContinuousDouble),
        _ => None,
    };
    if problem.num_preselected() > 0 {
        flags.push(AssumptionFlag::PreselectedNonEmpty);
    }
    let uses_q = !matches!(guarantee, None | Some(Guarantee::OptimalCoverage));
    if uses_q && problem.has_negative_similarities() {
        flags.push(AssumptionFlag::NegativeSimilarities);
    }
    if uses_q && m < k {
        flags.push(AssumptionFlag::BudgetBelowTopK);
    }
    match guarantee {
        None => flags.push(AssumptionFlag::NoGuarantee),
        Some(Guarantee::OptimalCoverage) => {
            if lambda != 0.0 {
                flags.push(AssumptionFlag::LambdaNotZero);
            }
            if m < k * problem.num_novel() {
                flags.push(AssumptionFlag::BudgetBelowCoverage);
            }
        }
        Some(Guarantee::GreedyTarget) => {
            if lambda != 0.0 {
                flags.push(AssumptionFlag::LambdaNotZero);
            }
        }
        Some(Guarantee::RandomGreedy | Guarantee::ContinuousDouble) => {
            if !(lambda > 0.0 && lambda < 1.0 / (E - 1.0)) {
                flags.push(AssumptionFlag::LambdaOutOfRange);
            }
            flags.push(AssumptionFlag::AsymptoticTermsIgnored);
        }
    }

    let (h_alg, h_alg_stderr, used_trials) = if result.algorithm == Algorithm::RandomGreedy && trials > 0 {
        let base = result.seed.unwrap_or(0);
        let values = (0..trials as u64)
            .map(|i| random_greedy(problem, base.wrapping_add(i)).map(|res| res.objective))
            .collect::<Result<Vec<_>>>()?;
        let (mean, se) = mean_and_stderr(&values);
        (mean, Some(se), trials)
    } else {
        (result.objective, None, 1)
    };

    let h_opt = match brute_force_optimum(problem, cap) {
        Ok(opt) => Some(opt.objective),
        Err(Error::EnumerationCap { .. }) => {
            flags.push(AssumptionFlag::OracleUnavailable);
            None
        }
        Err(e) => return Err(e),
    };

    let (c1, c2) = match guarantee {
        Some(Guarantee::RandomGreedy) => (Some(random_greedy_q_coefficient(m, r, lambda)), None),
        Some(Guarantee::ContinuousDouble) => (None, Some(continuous_double_q_coefficient(m, r, lambda))),
        _ => (None, None),
    };
    let bound_value = h_opt.and_then(|opt| match guarantee? {
        Guarantee::OptimalCoverage => Some(opt),
        Guarantee::GreedyTarget => Some((1.0 - 1.0 / E) * opt + q / E),
        Guarantee::RandomGreedy => Some(random_greedy_factor(m, r) * opt + c1? * q),
        Guarantee::ContinuousDouble => Some(continuous_double_factor(m, r) * opt + c2? * q),
    });

    let certified = h_alg - 3.0 * h_alg_stderr.unwrap_or(0.0);
    let satisfied = bound_value.is_some_and(|b| certified >= b - BOUND_TOLERANCE);
    Ok(BoundCertificate {
        algorithm: result.algorithm,
        guarantee,
        h_alg,
        h_alg_stderr,
        trials: used_trials,
        h_opt,
        q,
        c1,
        c2,
        bound_value,
        satisfied,
        assumption_flags: flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{greedy_on_novel_class, greedy_on_target};
    use crate::problem::tests::single_novel;
    use crate::similarity::{ClassId, SimilarityMatrix};

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(15, 7), Some(6435));
        assert_eq!(binomial(3, 4), Some(0));
        assert_eq!(binomial(60, 30), Some(118264581564861424));
    }

    #[test]
    fn brute_force_full_budget() {
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.4)], 3, 1, 0.3);
        let res = brute_force_optimum(&p, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(res.chosen.len(), 3);
    }

    #[test]
    fn brute_force_top_m_single_novel() {
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.4), ("d", 0.9)], 2, 1, 0.0);
        let res = brute_force_optimum(&p, DEFAULT_ENUMERATION_CAP).unwrap();
        // K = 1 and λ = 0: any set containing d is optimal; lexicographic tie-break
        assert_eq!(res.chosen, vec![ClassId::from("a"), ClassId::from("d")]);
        assert!((res.objective - 0.9).abs() < 1e-15);
    }

    #[test]
    fn brute_force_cap() {
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.4), ("d", 0.9)], 2, 1, 0.0);
        assert!(matches!(brute_force_optimum(&p, 5), Err(Error::EnumerationCap { count: 6, cap: 5 })));
    }

    #[test]
    fn q_examples() {
        let base: Vec<ClassId> = vec!["a".into(), "b".into()];
        let novel: Vec<ClassId> = vec!["n".into(), "o".into()];
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let p = SelectionProblem::new(&mat, &base, &[], &novel, 1, 1, 0.0).unwrap();
        assert!((average_similarity_q(&p) - 0.5).abs() < 1e-15);
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), vec![0.3; 4]).unwrap();
        let p = SelectionProblem::new(&mat, &base, &[], &novel, 1, 1, 0.0).unwrap();
        assert!((average_similarity_q(&p) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn modular_instance_is_tight() {
        // K = |B|: the top-K term is the plain sum, so h is modular
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.4), ("d", 0.9), ("e", 0.1)], 2, 5, 0.0);
        let rep = check_submodularity(&p, 500, 3);
        assert_eq!(rep.violations(), 0);
        assert!(rep.worst_lattice_margin.abs() < 1e-12);
        assert!(rep.worst_diminishing_margin.abs() < 1e-12);
    }

    #[test]
    fn q_coefficients() {
        let c2 = continuous_double_q_coefficient(50, 100, 0.5);
        assert!(c2 >= 0.25);
        assert!((continuous_double_q_coefficient(10, 10, 0.5) - 0.5).abs() < 1e-15);
        let c1 = random_greedy_q_coefficient(1, 15, 0.2);
        assert!((c1 - (1.0 / E + (1.0 - 1.0 / E) * (1.0 / 15.0 - 0.2))).abs() < 1e-15);
        assert_eq!(continuous_double_factor(10, 10), 0.0);
        assert!((continuous_double_factor(50, 100) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn certificate_for_optimal_coverage() {
        let base: Vec<ClassId> = vec!["a".into(), "b".into(), "c".into()];
        let novel: Vec<ClassId> = vec!["n1".into(), "n2".into()];
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), vec![0.9, 0.1, 0.1, 0.8, 0.5, 0.1]).unwrap();
        let p = SelectionProblem::new(&mat, &base, &[], &novel, 2, 1, 0.0).unwrap();
        let res = greedy_on_novel_class(&p).unwrap();
        let cert = certify_bounds(&p, &res, 0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(cert.guarantee, Some(Guarantee::OptimalCoverage));
        assert!(cert.satisfied);
        assert!(cert.assumption_flags.is_empty());
        assert_eq!(cert.h_opt, Some(cert.h_alg));
    }

    #[test]
    fn certificate_flags_scope() {
        let base: Vec<ClassId> = vec!["a".into(), "b".into(), "c".into()];
        let novel: Vec<ClassId> = vec!["n1".into()];
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), vec![0.9, -0.2, 0.3]).unwrap();
        let p = SelectionProblem::new(&mat, &base[..2], &base[2..], &novel, 1, 1, 0.0).unwrap();
        let res = greedy_on_target(&p).unwrap();
        let cert = certify_bounds(&p, &res, 0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(cert.assumption_flags.contains(&AssumptionFlag::PreselectedNonEmpty));
        assert!(cert.assumption_flags.contains(&AssumptionFlag::NegativeSimilarities));
        assert!(cert.is_complete());

        let cert = certify_bounds(&p, &res, 0, 0).unwrap();
        assert!(cert.assumption_flags.contains(&AssumptionFlag::OracleUnavailable));
        assert!(!cert.satisfied);
        assert!(cert.is_complete());
    }
}
