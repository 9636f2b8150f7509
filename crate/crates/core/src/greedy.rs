//! Discrete engines: greedy on novel classes, greedy on the objective, and
//! random greedy, plus the rule table that picks an engine for an instance.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Algorithm, SelectionProblem, SelectionResult};
use crate::state::SelectionState;

pub const DEFAULT_GAMMA: f64 = 1.2;
/// Below this fraction of `|B_u|` random greedy has the better guarantee.
pub const LOW_BUDGET_FRACTION: f64 = 0.08;
/// Above this fraction of `|B_u|` random greedy has the better guarantee.
pub const HIGH_BUDGET_FRACTION: f64 = 0.92;

/// Seeded generator used by every randomized routine: ChaCha8 keyed through
/// `SeedableRng::seed_from_u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Repeatedly takes the (candidate, novel) pair with the highest similarity
/// among unchosen candidates and novel classes not yet served this round.
/// Optimal when `B_s = ∅`, `λ = 0` and `m ≥ K·|N|`.
pub fn greedy_on_novel_class(problem: &SelectionProblem) -> Result<SelectionResult> {
    if problem.lambda() != 0.0 {
        return Err(Error::WrongEngine {
            engine: "greedy-novel",
            requirement: format!("lambda = 0 (got {})", problem.lambda()),
        });
    }
    let started = Instant::now();
    let (r, nn) = (problem.num_candidates(), problem.num_novel());

    // per novel class: candidates by decreasing similarity, ties by id
    let orders: Vec<Vec<usize>> = (0..nn)
        .map(|n| {
            let mut o: Vec<usize> = (0..r).collect();
            o.sort_by(|&a, &b| problem.candidate_sim(b, n).total_cmp(&problem.candidate_sim(a, n)).then(a.cmp(&b)));
            o
        })
        .collect();
    let mut cursor = vec![0usize; nn];
    let mut open = vec![true; nn];
    let mut open_count = nn;

    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(problem.m());
    for _ in 0..problem.m() {
        let mut best: Option<(f64, usize, usize)> = None;
        for n in (0..nn).filter(|&n| open[n]) {
            while state.is_chosen(orders[n][cursor[n]]) {
                cursor[n] += 1;
            }
            let u = orders[n][cursor[n]];
            let v = problem.candidate_sim(u, n);
            let better = match best {
                None => true,
                Some((bv, bu, _)) => v > bv || (v == bv && u < bu),
            };
            if better {
                best = Some((v, u, n));
            }
        }
        let (_, u, n) = best.expect("at least one open novel class");
        gains.push(state.gain(u));
        state.add(u)?;
        open[n] = false;
        open_count -= 1;
        if open_count == 0 {
            open.iter_mut().for_each(|o| *o = true);
            open_count = nn;
        }
    }
    Ok(SelectionResult::finish(problem, state.chosen(), gains, Algorithm::GreedyNovelClass, None, started))
}

/// Index of the largest gain among unchosen candidates; lowest index on ties.
fn best_candidate(state: &SelectionState<'_>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for u in 0..state.problem().num_candidates() {
        if state.is_chosen(u) {
            continue;
        }
        let g = state.gain(u);
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((u, g));
        }
    }
    best
}

/// Classic greedy on the objective: `m` rounds of "add the best marginal gain".
pub fn greedy_on_target(problem: &SelectionProblem) -> Result<SelectionResult> {
    let started = Instant::now();
    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(problem.m());
    for _ in 0..problem.m() {
        let (u, g) = best_candidate(&state).expect("budget never exceeds candidate count");
        gains.push(g);
        state.add(u)?;
    }
    Ok(SelectionResult::finish(problem, state.chosen(), gains, Algorithm::GreedyTarget, None, started))
}

/// Random greedy: each round draws uniformly among the `m` best marginal
/// gains. When fewer than `m` candidates remain the pool is padded with
/// zero-gain phantoms; drawing one skips the round. Any budget left after
/// `m` rounds is filled by plain greedy so that exactly `m` classes are
/// returned.
pub fn random_greedy(problem: &SelectionProblem, seed: u64) -> Result<SelectionResult> {
    let started = Instant::now();
    let m = problem.m();
    let r = problem.num_candidates();
    let mut rng = seeded_rng(seed);
    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(m);
    let by_gain = |a: &(usize, f64), b: &(usize, f64)| -> Ordering { b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)) };

    let mut pool: Vec<(usize, f64)> = Vec::with_capacity(r);
    for _ in 0..m {
        pool.clear();
        pool.extend((0..r).filter(|&u| !state.is_chosen(u)).map(|u| (u, state.gain(u))));
        if pool.len() > m {
            pool.select_nth_unstable_by(m - 1, by_gain);
            pool.truncate(m);
        }
        pool.sort_by(by_gain);
        let pick = rng.random_range(0..m);
        match pool.get(pick) {
            Some(&(u, g)) => {
                gains.push(g);
                state.add(u)?;
            }
            None => gains.push(0.0),
        }
    }
    while state.len() < m {
        let (u, g) = best_candidate(&state).expect("budget never exceeds candidate count");
        gains.push(g);
        state.add(u)?;
    }
    Ok(SelectionResult::finish(problem, state.chosen(), gains, Algorithm::RandomGreedy, Some(seed), started))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmChoice {
    pub kind: Algorithm,
    pub rationale: String,
    pub gamma: f64,
    pub low_fraction: f64,
    pub high_fraction: f64,
}

/// Applicability rules: with `λ = 0`, greedy on novel classes once the
/// budget exceeds `γ·K·|N|` and greedy on the objective otherwise; with
/// `λ > 0`, random greedy for budgets below 8% or above 92% of the
/// candidates and continuous double greedy in between.
pub fn choose_algorithm(problem: &SelectionProblem, gamma: f64) -> Result<AlgorithmChoice> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be finite and > 1 (got {gamma})")));
    }
    let m = problem.m() as f64;
    let (kind, rationale) = if problem.lambda() == 0.0 {
        let coverage = gamma * (problem.k() * problem.num_novel()) as f64;
        if m > coverage {
            (Algorithm::GreedyNovelClass, format!("lambda = 0 and m = {m} > gamma*K*|N| = {coverage}"))
        } else {
            (Algorithm::GreedyTarget, format!("lambda = 0 and m = {m} <= gamma*K*|N| = {coverage}"))
        }
    } else {
        let r = problem.num_candidates() as f64;
        let (lo, hi) = (LOW_BUDGET_FRACTION * r, HIGH_BUDGET_FRACTION * r);
        if m < lo || m > hi {
            (Algorithm::RandomGreedy, format!("lambda > 0 and m = {m} outside [{lo}, {hi}]"))
        } else {
            (Algorithm::ContinuousDouble, format!("lambda > 0 and m = {m} within [{lo}, {hi}]"))
        }
    };
    Ok(AlgorithmChoice {
        kind,
        rationale,
        gamma,
        low_fraction: LOW_BUDGET_FRACTION,
        high_fraction: HIGH_BUDGET_FRACTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::tests::single_novel;
    use crate::similarity::{ClassId, SimilarityMatrix};

    fn alg1_instance(m: usize) -> SelectionProblem {
        let base: Vec<ClassId> = vec!["a".into(), "b".into(), "c".into()];
        let novel: Vec<ClassId> = vec!["n1".into(), "n2".into()];
        #[rustfmt::skip]
        let values = vec![
            0.9, 0.1,
            0.1, 0.8,
            0.5, 0.1,
        ];
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), values).unwrap();
        SelectionProblem::new(&mat, &base, &[], &novel, m, 1, 0.0).unwrap()
    }

    fn ids(v: &[&str]) -> Vec<ClassId> {
        v.iter().map(|s| ClassId::from(*s)).collect()
    }

    #[test]
    fn novel_class_greedy_trace() {
        let res = greedy_on_novel_class(&alg1_instance(2)).unwrap();
        assert_eq!(res.chosen, ids(&["a", "b"]));
        assert!((res.objective - 0.85).abs() < 1e-15);
    }

    #[test]
    fn novel_class_greedy_single_step() {
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.4)], 1, 1, 0.0);
        assert_eq!(greedy_on_novel_class(&p).unwrap().chosen, ids(&["b"]));
    }

    #[test]
    fn novel_class_greedy_refuses_lambda() {
        let p = alg1_instance(2).with_lambda(0.1).unwrap();
        assert!(matches!(greedy_on_novel_class(&p), Err(Error::WrongEngine { .. })));
    }

    #[test]
    fn novel_class_greedy_refills_rounds() {
        // more picks than novel classes: second round serves n1 again
        let res = greedy_on_novel_class(&alg1_instance(3)).unwrap();
        assert_eq!(res.chosen, ids(&["a", "b", "c"]));
    }

    #[test]
    fn target_greedy_trace() {
        let res = greedy_on_target(&alg1_instance(2)).unwrap();
        assert_eq!(res.chosen, ids(&["a", "b"]));
        let p = single_novel(&[("a", 0.2), ("b", 0.7), ("c", 0.7)], 1, 1, 0.0);
        assert_eq!(greedy_on_target(&p).unwrap().chosen, ids(&["b"]));
    }

    #[test]
    fn random_greedy_single_budget_is_greedy() {
        let p = alg1_instance(1).with_lambda(0.3).unwrap();
        for seed in 0..20 {
            let a = random_greedy(&p, seed).unwrap();
            let b = greedy_on_target(&p).unwrap();
            assert_eq!(a.chosen, b.chosen);
            assert_eq!(a.objective, b.objective);
        }
    }

    #[test]
    fn random_greedy_is_reproducible() {
        let p = alg1_instance(2).with_lambda(0.5).unwrap();
        for seed in [0, 1, 42, u64::MAX] {
            assert_eq!(random_greedy(&p, seed).unwrap().chosen, random_greedy(&p, seed).unwrap().chosen);
        }
    }

    #[test]
    fn random_greedy_pads_with_phantoms() {
        // m = r: later rounds have fewer real candidates than m
        let p = alg1_instance(3).with_lambda(0.5).unwrap();
        for seed in 0..50 {
            let res = random_greedy(&p, seed).unwrap();
            let mut chosen = res.chosen.clone();
            chosen.sort();
            assert_eq!(chosen, ids(&["a", "b", "c"]));
            assert!(res.step_gains.len() >= 3);
        }
    }

    fn many_novel(nn: usize, r: usize, m: usize, k: usize, lambda: f64) -> SelectionProblem {
        let base: Vec<ClassId> = (0..r).map(|i| ClassId::from(format!("b{i:03}").as_str())).collect();
        let novel: Vec<ClassId> = (0..nn).map(|i| ClassId::from(format!("n{i:03}").as_str())).collect();
        let values = (0..r * nn).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let mat = SimilarityMatrix::new(base.clone(), novel.clone(), values).unwrap();
        SelectionProblem::new(&mat, &base, &[], &novel, m, k, lambda).unwrap()
    }

    #[test]
    fn selector_table_rows() {
        let p = many_novel(10, 200, 100, 1, 0.0);
        assert_eq!(choose_algorithm(&p, 1.2).unwrap().kind, Algorithm::GreedyNovelClass);
        let p = many_novel(10, 200, 12, 1, 0.0);
        assert_eq!(choose_algorithm(&p, 1.2).unwrap().kind, Algorithm::GreedyTarget);
        let p = many_novel(2, 400, 20, 1, 0.2);
        assert_eq!(choose_algorithm(&p, 1.2).unwrap().kind, Algorithm::RandomGreedy);
        let p = many_novel(2, 400, 100, 1, 0.2);
        assert_eq!(choose_algorithm(&p, 1.2).unwrap().kind, Algorithm::ContinuousDouble);
        let p = many_novel(2, 400, 380, 1, 0.2);
        assert_eq!(choose_algorithm(&p, 1.2).unwrap().kind, Algorithm::RandomGreedy);
        assert!(choose_algorithm(&p, 1.0).is_err());
    }
}
