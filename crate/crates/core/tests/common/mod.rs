//! Random instances and from-first-principles reference computations shared
//! by the integration and acceptance suites.
#![allow(dead_code)]

use baseselect::problem::SelectionProblem;
use baseselect::similarity::{ClassId, SimilarityMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw similarity rows kept beside the assembled problem. Ids are
/// zero-padded so that candidate `i` of the problem is `cand[i]` here.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: SelectionProblem,
    pub cand: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub r: usize,
    pub novel: usize,
    pub pre: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    /// similarities drawn from `[lo, 1]`
    pub lo: f64,
    /// round similarities to one decimal to force ties
    pub ties: bool,
}

pub fn instance(rng: &mut impl Rng, s: Shape) -> Instance {
    let draw = |rng: &mut dyn rand::RngCore| {
        let v: f64 = rng.random_range(s.lo..=1.0);
        if s.ties {
            (v * 10.0).round() / 10.0
        } else {
            v
        }
    };
    let cand: Vec<Vec<f64>> = (0..s.r).map(|_| (0..s.novel).map(|_| draw(rng)).collect()).collect();
    let pre: Vec<Vec<f64>> = (0..s.pre).map(|_| (0..s.novel).map(|_| draw(rng)).collect()).collect();
    let cand_ids: Vec<ClassId> = (0..s.r).map(|i| ClassId::from(format!("c{i:03}").as_str())).collect();
    let pre_ids: Vec<ClassId> = (0..s.pre).map(|i| ClassId::from(format!("p{i:03}").as_str())).collect();
    let novel_ids: Vec<ClassId> = (0..s.novel).map(|i| ClassId::from(format!("n{i:03}").as_str())).collect();
    let base: Vec<ClassId> = cand_ids.iter().chain(&pre_ids).cloned().collect();
    let values: Vec<f64> = cand.iter().chain(&pre).flatten().copied().collect();
    let matrix = SimilarityMatrix::new(base, novel_ids.clone(), values).unwrap();
    let problem = SelectionProblem::new(&matrix, &cand_ids, &pre_ids, &novel_ids, s.m, s.k, s.lambda).unwrap();
    Instance { problem, cand, pre }
}

impl Instance {
    /// Objective by sorting every novel column from scratch.
    pub fn naive_objective(&self, set: &[usize]) -> f64 {
        let p = &self.problem;
        let (nn, k) = (p.num_novel(), p.k());
        let mut top = 0.0;
        let mut all = 0.0;
        for n in 0..nn {
            let mut col: Vec<f64> =
                self.pre.iter().map(|row| row[n]).chain(set.iter().map(|&u| self.cand[u][n])).collect();
            all += col.iter().sum::<f64>();
            col.sort_by(|a, b| b.total_cmp(a));
            top += col.iter().take(k).sum::<f64>();
        }
        top / (nn * k) as f64 - p.lambda() * all / (nn * (self.pre.len() + p.m())) as f64
    }

    /// Multilinear extension by summing over all `2^r` subsets.
    pub fn enumerated_multilinear(&self, x: &[f64]) -> f64 {
        let r = self.cand.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << r) {
            let mut w = 1.0;
            let mut set = Vec::new();
            for (u, &xu) in x.iter().enumerate() {
                if mask >> u & 1 == 1 {
                    w *= xu;
                    set.push(u);
                } else {
                    w *= 1.0 - xu;
                }
            }
            if w != 0.0 {
                total += w * self.naive_objective(&set);
            }
        }
        total
    }

    /// `F(x | x_u = 1) − F(x | x_u = 0)` by enumeration.
    pub fn enumerated_partial(&self, x: &[f64], u: usize) -> f64 {
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[u] = 1.0;
        lo[u] = 0.0;
        self.enumerated_multilinear(&hi) - self.enumerated_multilinear(&lo)
    }

    /// Exhaustive optimum over `m`-subsets, independent of the library oracle.
    pub fn naive_optimum(&self) -> f64 {
        let (r, m) = (self.cand.len(), self.problem.m());
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << r) {
            if mask.count_ones() as usize == m {
                let set: Vec<usize> = (0..r).filter(|&u| mask >> u & 1 == 1).collect();
                best = best.max(self.naive_objective(&set));
            }
        }
        best
    }
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
