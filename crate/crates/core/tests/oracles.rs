mod common;

use baseselect::continuous::{continuous_double_select, multilinear_partial, multilinear_value, order_stat_probs};
use baseselect::greedy::{greedy_on_novel_class, greedy_on_target, random_greedy};
use baseselect::problem::max_k_sum;
use baseselect::verify::{brute_force_optimum, DEFAULT_ENUMERATION_CAP};
use common::{instance, rng, Shape};
use rand::Rng;

fn shape(rng: &mut impl Rng, max_r: usize) -> Shape {
    let r = rng.random_range(2..=max_r);
    Shape {
        r,
        novel: rng.random_range(1..=4),
        pre: rng.random_range(0..=3),
        m: rng.random_range(1..=r),
        k: rng.random_range(1..=4),
        lambda: [0.0, 0.1, 0.3, 1.0][rng.random_range(0..4)],
        lo: -1.0,
        ties: rng.random_bool(0.3),
    }
}

#[test]
fn objective_matches_naive_sorting() {
    let mut rng = rng(1);
    for _ in 0..200 {
        let s = shape(&mut rng, 14);
        let inst = instance(&mut rng, s);
        let r = inst.cand.len();
        let set: Vec<usize> = (0..r).filter(|_| rng.random_bool(0.5)).collect();
        assert!((inst.problem.objective(&set) - inst.naive_objective(&set)).abs() <= 1e-12);
    }
}

#[test]
fn frozen_values() {
    assert_eq!(max_k_sum(&[0.9, 0.5, 0.8], 2), 1.7000000000000002);
    assert_eq!(max_k_sum(&[0.3], 4), 0.3);
}

#[test]
fn brute_force_matches_naive_enumeration() {
    let mut rng = rng(2);
    for _ in 0..60 {
        let s = shape(&mut rng, 11);
        let inst = instance(&mut rng, s);
        let opt = brute_force_optimum(&inst.problem, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((opt.objective - inst.naive_optimum()).abs() <= 1e-12);
    }
}

#[test]
fn multilinear_matches_enumeration_with_negative_values() {
    let mut rng = rng(3);
    for _ in 0..40 {
        let s = shape(&mut rng, 9);
        let inst = instance(&mut rng, s);
        let r = inst.cand.len();
        let x: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
        let f = multilinear_value(&inst.problem, &x).unwrap();
        assert!((f - inst.enumerated_multilinear(&x)).abs() <= 1e-10);
        let u = rng.random_range(0..r);
        let id = &inst.problem.candidate_ids()[u];
        let g = multilinear_partial(&inst.problem, &x, id).unwrap();
        assert!((g - inst.enumerated_partial(&x, u)).abs() <= 1e-10);
    }
}

#[test]
fn order_statistic_probabilities_sum_to_one() {
    let mut rng = rng(4);
    for _ in 0..40 {
        let s = shape(&mut rng, 10);
        let inst = instance(&mut rng, s);
        let r = inst.cand.len();
        let x: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
        let novel = inst.problem.novel_ids()[0].clone();
        let table = order_stat_probs(&inst.problem, &x, &novel, None).unwrap();
        for j in 1..=table.k {
            let total: f64 = (1..=table.len()).map(|i| table.prob_eq(j, i)).sum::<f64>() + table.prob_short(j);
            assert!((total - 1.0).abs() <= 1e-12, "{total}");
        }
    }
}

#[test]
fn engines_never_beat_the_optimum() {
    let mut rng = rng(5);
    for i in 0..40 {
        let mut s = shape(&mut rng, 10);
        s.lo = 0.0;
        let inst = instance(&mut rng, s);
        let p = &inst.problem;
        let opt = inst.naive_optimum();
        let mut results = vec![
            greedy_on_target(p).unwrap(),
            random_greedy(p, i).unwrap(),
            continuous_double_select(p, 40, i).unwrap(),
        ];
        if p.lambda() == 0.0 {
            results.push(greedy_on_novel_class(p).unwrap());
        }
        for res in results {
            assert_eq!(res.chosen.len(), p.m());
            assert!(res.objective <= opt + 1e-12, "{} beat the optimum", res.algorithm);
            assert!((res.objective - p.objective_of(&res.chosen).unwrap()).abs() <= 1e-12);
        }
    }
}

#[test]
fn greedy_target_never_takes_negative_gain_when_monotone() {
    let mut rng = rng(6);
    for _ in 0..50 {
        let mut s = shape(&mut rng, 14);
        // monotone only for nonnegative similarities
        s.lambda = 0.0;
        s.lo = 0.0;
        let inst = instance(&mut rng, s);
        let res = greedy_on_target(&inst.problem).unwrap();
        assert!(res.step_gains.iter().all(|&g| g >= 0.0));
    }
}
