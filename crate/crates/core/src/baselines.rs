//! Reference selectors: uniform random, domain similarity to the novel
//! centroid, and K-medoids (PAM) over the candidate centroids.

use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::seeded_rng;
use crate::problem::{Algorithm, SelectionProblem, SelectionResult};
use crate::similarity::{cosine_similarity, Centroid, EmbeddingTable};
use crate::state::SelectionState;

fn finish(
    problem: &SelectionProblem,
    chosen: &[usize],
    algorithm: Algorithm,
    seed: Option<u64>,
    started: Instant,
) -> Result<SelectionResult> {
    let mut state = SelectionState::new(problem);
    let mut gains = Vec::with_capacity(chosen.len());
    for &u in chosen {
        gains.push(state.gain(u));
        state.add(u)?;
    }
    Ok(SelectionResult::finish(problem, chosen, gains, algorithm, seed, started))
}

/// Uniform `m`-subset of the candidates, without replacement.
pub fn random_select(problem: &SelectionProblem, seed: u64) -> Result<SelectionResult> {
    let started = Instant::now();
    let mut rng = seeded_rng(seed);
    let chosen = index::sample(&mut rng, problem.num_candidates(), problem.m()).into_vec();
    finish(problem, &chosen, Algorithm::Random, Some(seed), started)
}

/// Top-`m` candidates by similarity to the target domain. With embeddings the
/// target is the (unnormalized) mean of the novel centroids; with only the
/// matrix, each candidate is scored by its mean similarity over the novel
/// classes.
pub fn domain_similarity_select(
    problem: &SelectionProblem,
    embeddings: Option<&EmbeddingTable>,
) -> Result<SelectionResult> {
    let started = Instant::now();
    let scores: Vec<f64> = match embeddings {
        Some(table) => {
            let mut target = vec![0.0; table.dim()];
            for id in problem.novel_ids() {
                let c = table.get(id).ok_or_else(|| Error::UnknownClass(id.clone()))?;
                for (t, v) in target.iter_mut().zip(c.values()) {
                    *t += v;
                }
            }
            let nn = problem.num_novel() as f64;
            target.iter_mut().for_each(|t| *t /= nn);
            let target = Centroid::new(target)?;
            problem
                .candidate_ids()
                .iter()
                .map(|id| {
                    let c = table.get(id).ok_or_else(|| Error::UnknownClass(id.clone()))?;
                    cosine_similarity(c, &target)
                })
                .collect::<Result<_>>()?
        }
        None => (0..problem.num_candidates())
            .map(|u| problem.candidate_row(u).iter().sum::<f64>() / problem.num_novel() as f64)
            .collect(),
    };
    let mut order: Vec<usize> = (0..problem.num_candidates()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(problem.m());
    finish(problem, &order, Algorithm::DomainSimilarity, None, started)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PamOutcome {
    pub medoids: Vec<usize>,
    /// total dissimilarity of every point to its nearest medoid
    pub cost: f64,
    pub build_cost: f64,
    pub swaps: usize,
}

/// Square dissimilarity matrix, row-major.
#[derive(Debug, Clone)]
pub struct Dissimilarity {
    n: usize,
    d: Vec<f64>,
}

impl Dissimilarity {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::InvalidInput(format!("dissimilarity has {} entries, expected {}", d.len(), n * n)));
        }
        Ok(Dissimilarity { n, d })
    }

    /// `1 − cosine` between centroids.
    pub fn cosine(centroids: &[&Centroid]) -> Result<Self> {
        let n = centroids.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = 1.0 - cosine_similarity(centroids[i], centroids[j])?;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(Dissimilarity { n, d })
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Nearest and second-nearest medoid distance per point.
fn assign(d: &Dissimilarity, medoids: &[usize]) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let mut near = vec![f64::INFINITY; d.n];
    let mut near_slot = vec![0usize; d.n];
    let mut second = vec![f64::INFINITY; d.n];
    for j in 0..d.n {
        for (slot, &m) in medoids.iter().enumerate() {
            let v = d.get(j, m);
            if v < near[j] {
                second[j] = near[j];
                near[j] = v;
                near_slot[j] = slot;
            } else if v < second[j] {
                second[j] = v;
            }
        }
    }
    (near, near_slot, second)
}

fn build(d: &Dissimilarity, k: usize) -> Vec<usize> {
    let n = d.n;
    let first = (0..n)
        .map(|i| (i, (0..n).map(|j| d.get(i, j)).sum::<f64>()))
        .fold((0, f64::INFINITY), |best, (i, c)| if c < best.1 { (i, c) } else { best })
        .0;
    let mut medoids = vec![first];
    let mut is_medoid = vec![false; n];
    is_medoid[first] = true;
    let mut near: Vec<f64> = (0..n).map(|j| d.get(j, first)).collect();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in (0..n).filter(|&i| !is_medoid[i]) {
            let gain: f64 = (0..n).map(|j| (near[j] - d.get(j, i)).max(0.0)).sum();
            if gain > best.1 {
                best = (i, gain);
            }
        }
        let i = best.0;
        medoids.push(i);
        is_medoid[i] = true;
        for (j, v) in near.iter_mut().enumerate() {
            *v = v.min(d.get(j, i));
        }
    }
    medoids
}

/// Steepest-descent SWAP phase: applies the best improving (medoid, non-medoid)
/// exchange until none lowers the total cost.
fn swap(d: &Dissimilarity, medoids: &mut [usize]) -> usize {
    let n = d.n;
    let mut swaps = 0;
    loop {
        let (near, near_slot, second) = assign(d, medoids);
        let mut is_medoid = vec![false; n];
        medoids.iter().for_each(|&m| is_medoid[m] = true);
        let mut best = (0usize, 0usize, -1e-12);
        for slot in 0..medoids.len() {
            for h in (0..n).filter(|&h| !is_medoid[h]) {
                let mut delta = 0.0;
                for j in 0..n {
                    let dh = d.get(j, h);
                    delta += if near_slot[j] == slot { dh.min(second[j]) - near[j] } else { dh.min(near[j]) - near[j] };
                }
                if delta < best.2 {
                    best = (slot, h, delta);
                }
            }
        }
        if best.2 >= -1e-12 {
            return swaps;
        }
        medoids[best.0] = best.1;
        swaps += 1;
    }
}

fn total_cost(d: &Dissimilarity, medoids: &[usize]) -> f64 {
    assign(d, medoids).0.iter().sum()
}

/// PAM with greedy BUILD and SWAP; `restarts` extra runs start SWAP from
/// random medoid sets drawn with `seed`, keeping the cheapest outcome.
pub fn pam(d: &Dissimilarity, k: usize, restarts: usize, seed: u64) -> Result<PamOutcome> {
    if k < 1 || k > d.n {
        return Err(Error::InvalidInput(format!("k={k} medoids for {} points", d.n)));
    }
    let mut medoids = build(d, k);
    let build_cost = total_cost(d, &medoids);
    let swaps = swap(d, &mut medoids);
    let mut best = PamOutcome { cost: total_cost(d, &medoids), medoids, build_cost, swaps };
    let mut rng = seeded_rng(seed);
    for _ in 0..restarts {
        let mut medoids = index::sample(&mut rng, d.n, k).into_vec();
        let start_cost = total_cost(d, &medoids);
        let swaps = swap(d, &mut medoids);
        let cost = total_cost(d, &medoids);
        if cost < best.cost {
            best = PamOutcome { medoids, cost, build_cost: start_cost, swaps };
        }
    }
    Ok(best)
}

/// The `m` PAM medoids of the candidate centroids under `1 − cosine`.
pub fn k_medoids_select(
    problem: &SelectionProblem,
    embeddings: &EmbeddingTable,
    seed: u64,
    restarts: usize,
) -> Result<SelectionResult> {
    let started = Instant::now();
    let centroids = problem
        .candidate_ids()
        .iter()
        .map(|id| embeddings.get(id).ok_or_else(|| Error::UnknownClass(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let d = Dissimilarity::cosine(&centroids)?;
    let outcome = pam(&d, problem.m(), restarts, seed)?;
    finish(problem, &outcome.medoids, Algorithm::KMedoids, (restarts > 0).then_some(seed), started)
}
