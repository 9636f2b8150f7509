use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::problem::SelectionProblem;

/// Incremental view of `B_s ∪ chosen`: one min-heap of the K largest
/// similarities per novel class, plus running totals, so that a marginal
/// gain costs `O(|N|)` and an insertion `O(|N| log K)`.
#[derive(Debug, Clone)]
pub struct SelectionState<'p> {
    problem: &'p SelectionProblem,
    chosen: Vec<usize>,
    in_chosen: Vec<bool>,
    topk: Vec<BinaryHeap<Reverse<OrderedFloat<f64>>>>,
    topk_sum: Vec<f64>,
    sum_all: Vec<f64>,
}

impl<'p> SelectionState<'p> {
    /// Empty selection; heaps are seeded with the preselected classes.
    pub fn new(problem: &'p SelectionProblem) -> Self {
        let nn = problem.num_novel();
        let mut state = SelectionState {
            problem,
            chosen: Vec::with_capacity(problem.m()),
            in_chosen: vec![false; problem.num_candidates()],
            topk: (0..nn).map(|_| BinaryHeap::with_capacity(problem.k() + 1)).collect(),
            topk_sum: vec![0.0; nn],
            sum_all: vec![0.0; nn],
        };
        for s in 0..problem.num_preselected() {
            for n in 0..nn {
                state.push(n, problem.preselected_sim(s, n));
            }
        }
        state
    }

    fn push(&mut self, n: usize, v: f64) {
        self.sum_all[n] += v;
        let heap = &mut self.topk[n];
        if heap.len() < self.problem.k() {
            heap.push(Reverse(OrderedFloat(v)));
            self.topk_sum[n] += v;
        } else if let Some(&Reverse(OrderedFloat(kth))) = heap.peek() {
            if v > kth {
                heap.pop();
                heap.push(Reverse(OrderedFloat(v)));
                self.topk_sum[n] += v - kth;
            }
        }
    }

    pub fn problem(&self) -> &'p SelectionProblem {
        self.problem
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn is_chosen(&self, u: usize) -> bool {
        self.in_chosen[u]
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    /// Current K-th largest similarity for novel `n`, `None` while fewer
    /// than K classes are held.
    pub fn kth_value(&self, n: usize) -> Option<f64> {
        let heap = &self.topk[n];
        (heap.len() == self.problem.k()).then(|| heap.peek().map(|r| r.0 .0)).flatten()
    }

    /// Sorted (descending) contents of the top-K heap for novel `n`.
    pub fn topk_values(&self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.topk[n].iter().map(|r| r.0 .0).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn sum_all(&self, n: usize) -> f64 {
        self.sum_all[n]
    }

    /// Objective of the current selection from the running totals.
    pub fn objective(&self) -> f64 {
        let p = self.problem;
        self.topk_sum.iter().sum::<f64>() * p.topk_scale() - self.sum_all.iter().sum::<f64>() * p.diversity_scale()
    }

    /// `h(chosen + u) − h(chosen)`.
    pub fn marginal_gain(&self, u: usize) -> Result<f64> {
        let p = self.problem;
        if u >= p.num_candidates() {
            return Err(Error::CandidateIndex { index: u, count: p.num_candidates() });
        }
        if self.in_chosen[u] {
            return Err(Error::AlreadyChosen(p.candidate_ids()[u].clone()));
        }
        Ok(self.gain(u))
    }

    /// Unchecked gain for engines that already track membership.
    pub(crate) fn gain(&self, u: usize) -> f64 {
        let p = self.problem;
        let k = p.k();
        let row = p.candidate_row(u);
        let mut top = 0.0;
        for (n, &v) in row.iter().enumerate() {
            let heap = &self.topk[n];
            if heap.len() < k {
                top += v;
            } else if let Some(&Reverse(OrderedFloat(kth))) = heap.peek() {
                if v > kth {
                    top += v - kth;
                }
            }
        }
        top * p.topk_scale() - p.candidate_row_sum(u) * p.diversity_scale()
    }

    pub fn add(&mut self, u: usize) -> Result<()> {
        self.marginal_gain(u)?;
        self.in_chosen[u] = true;
        self.chosen.push(u);
        for n in 0..self.problem.num_novel() {
            let v = self.problem.candidate_sim(u, n);
            self.push(n, v);
        }
        Ok(())
    }
}
