//! The selection instance and its objective.
//!
//! For a candidate set `U ⊆ B_u`, preselected classes `B_s` and novel classes
//! `N`, the objective is
//!
//! ```text
//! h(U) = 1/|N| Σ_n 1/K · M^K(f(n, B_s ∪ U))
//!      − λ/|N| Σ_n 1/(|B_s| + m) Σ_{b ∈ B_s ∪ U} f(n, b)
//! ```
//!
//! where `M^K` is the sum of the K largest entries. The second denominator
//! always uses the budget `m`, so partial sets built during greedy growth
//! are scored on the same scale as full ones.
//!
//! Candidates are addressed by their position in [`SelectionProblem::candidate_ids`],
//! which is sorted, so "smallest position" and "smallest `ClassId`" coincide.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{ClassId, SimilarityMatrix};

/// Sum of the `min(k, len)` largest entries. Vectors shorter than `k` are
/// summed in full, so `M^K(∅) = 0`.
pub fn max_k_sum(values: &[f64], k: usize) -> f64 {
    assert!(k >= 1, "max_k_sum needs k >= 1");
    if values.len() <= k {
        return values.iter().sum();
    }
    let mut v = values.to_vec();
    v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    v[..k].iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProblem {
    candidate_ids: Vec<ClassId>,
    preselected_ids: Vec<ClassId>,
    novel_ids: Vec<ClassId>,
    m: usize,
    k: usize,
    lambda: f64,
    /// candidates × novel, row-major
    cand_sim: Vec<f64>,
    /// preselected × novel, row-major
    pre_sim: Vec<f64>,
    /// Σ_n f(n, u) per candidate
    cand_row_sum: Vec<f64>,
}

impl SelectionProblem {
    /// Restricts `matrix` to the given roles. Role lists are deduplicated
    /// and sorted.
    pub fn new(
        matrix: &SimilarityMatrix,
        candidates: &[ClassId],
        preselected: &[ClassId],
        novel: &[ClassId],
        m: usize,
        k: usize,
        lambda: f64,
    ) -> Result<Self> {
        let candidate_ids = sorted_unique(candidates);
        let preselected_ids = sorted_unique(preselected);
        let novel_ids = sorted_unique(novel);

        if candidate_ids.is_empty() {
            return Err(Error::InvalidProblem("candidate set is empty".into()));
        }
        if novel_ids.is_empty() {
            return Err(Error::InvalidProblem("novel set is empty".into()));
        }
        let pre: HashSet<&ClassId> = preselected_ids.iter().collect();
        if let Some(id) = candidate_ids.iter().find(|id| pre.contains(id)) {
            return Err(Error::InvalidProblem(format!("class `{id}` is both candidate and preselected")));
        }
        if m < 1 || m > candidate_ids.len() {
            return Err(Error::InvalidProblem(format!("budget m={m} must be in 1..={}", candidate_ids.len())));
        }
        if k < 1 {
            return Err(Error::InvalidProblem("K must be at least 1".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!("lambda={lambda} must be finite and >= 0")));
        }

        let cols = novel_ids
            .iter()
            .map(|id| matrix.novel_index(id).ok_or_else(|| Error::UnknownClass(id.clone())))
            .collect::<Result<Vec<_>>>()?;
        let gather = |ids: &[ClassId]| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(ids.len() * cols.len());
            for id in ids {
                let r = matrix.base_index(id).ok_or_else(|| Error::UnknownClass(id.clone()))?;
                out.extend(cols.iter().map(|&c| matrix.get(r, c)));
            }
            Ok(out)
        };
        let cand_sim = gather(&candidate_ids)?;
        let pre_sim = gather(&preselected_ids)?;
        let nn = novel_ids.len();
        let cand_row_sum = cand_sim.chunks(nn).map(|r| r.iter().sum()).collect();

        Ok(SelectionProblem {
            candidate_ids,
            preselected_ids,
            novel_ids,
            m,
            k,
            lambda,
            cand_sim,
            pre_sim,
            cand_row_sum,
        })
    }

    /// Same instance with a different budget.
    pub fn with_budget(&self, m: usize) -> Result<Self> {
        if m < 1 || m > self.num_candidates() {
            return Err(Error::InvalidProblem(format!("budget m={m} must be in 1..={}", self.num_candidates())));
        }
        Ok(SelectionProblem { m, ..self.clone() })
    }

    pub fn with_top_k(&self, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidProblem("K must be at least 1".into()));
        }
        Ok(SelectionProblem { k, ..self.clone() })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!("lambda={lambda} must be finite and >= 0")));
        }
        Ok(SelectionProblem { lambda, ..self.clone() })
    }

    pub fn candidate_ids(&self) -> &[ClassId] {
        &self.candidate_ids
    }

    pub fn preselected_ids(&self) -> &[ClassId] {
        &self.preselected_ids
    }

    pub fn novel_ids(&self) -> &[ClassId] {
        &self.novel_ids
    }

    pub fn num_candidates(&self) -> usize {
        self.candidate_ids.len()
    }

    pub fn num_preselected(&self) -> usize {
        self.preselected_ids.len()
    }

    pub fn num_novel(&self) -> usize {
        self.novel_ids.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// f(n, u) for candidate position `u` and novel position `n`.
    #[inline]
    pub fn candidate_sim(&self, u: usize, n: usize) -> f64 {
        self.cand_sim[u * self.num_novel() + n]
    }

    pub fn candidate_row(&self, u: usize) -> &[f64] {
        let nn = self.num_novel();
        &self.cand_sim[u * nn..(u + 1) * nn]
    }

    #[inline]
    pub fn preselected_sim(&self, s: usize, n: usize) -> f64 {
        self.pre_sim[s * self.num_novel() + n]
    }

    pub(crate) fn candidate_row_sum(&self, u: usize) -> f64 {
        self.cand_row_sum[u]
    }

    /// Coefficient of Σ f in the diversity term: λ / (|N| (|B_s| + m)).
    pub(crate) fn diversity_scale(&self) -> f64 {
        self.lambda / (self.num_novel() as f64 * (self.num_preselected() + self.m) as f64)
    }

    /// Coefficient of the top-K sums: 1 / (|N| K).
    pub(crate) fn topk_scale(&self) -> f64 {
        1.0 / (self.num_novel() as f64 * self.k as f64)
    }

    pub fn candidate_index(&self, id: &ClassId) -> Option<usize> {
        self.candidate_ids.binary_search(id).ok()
    }

    /// Maps ids to candidate positions, rejecting non-candidates and repeats.
    pub fn resolve(&self, ids: &[ClassId]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        ids.iter()
            .map(|id| {
                let u = self.candidate_index(id).ok_or_else(|| Error::NotCandidate(id.clone()))?;
                if !seen.insert(u) {
                    return Err(Error::DuplicateId(id.clone()));
                }
                Ok(u)
            })
            .collect()
    }

    pub fn ids_of(&self, set: &[usize]) -> Vec<ClassId> {
        set.iter().map(|&u| self.candidate_ids[u].clone()).collect()
    }

    /// Similarities of novel class `n` against `B_s ∪ set`.
    fn column_values(&self, set: &[usize], n: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend((0..self.num_preselected()).map(|s| self.preselected_sim(s, n)));
        buf.extend(set.iter().map(|&u| self.candidate_sim(u, n)));
    }

    /// From-scratch objective for a set of candidate positions.
    ///
    /// Panics if a position is out of range; use [`Self::objective_of`] for ids.
    pub fn objective(&self, set: &[usize]) -> f64 {
        let r = self.num_candidates();
        assert!(set.iter().all(|&u| u < r), "candidate position out of range");
        let mut buf = Vec::with_capacity(self.num_preselected() + set.len());
        let mut top = 0.0;
        let mut all = 0.0;
        for n in 0..self.num_novel() {
            self.column_values(set, n, &mut buf);
            top += max_k_sum(&buf, self.k);
            all += buf.iter().sum::<f64>();
        }
        top * self.topk_scale() - all * self.diversity_scale()
    }

    pub fn objective_of(&self, ids: &[ClassId]) -> Result<f64> {
        Ok(self.objective(&self.resolve(ids)?))
    }

    /// Per-novel similarity ratio of `B_s ∪ set`.
    pub fn similarity_ratio(&self, set: &[usize]) -> Result<Vec<SimilarityRatio>> {
        if let Some(&u) = set.iter().find(|&&u| u >= self.num_candidates()) {
            return Err(Error::CandidateIndex { index: u, count: self.num_candidates() });
        }
        let total = self.num_preselected() + set.len();
        if total == 0 {
            return Err(Error::EmptyBaseSet);
        }
        let mut buf = Vec::with_capacity(total);
        Ok((0..self.num_novel())
            .map(|n| {
                self.column_values(set, n, &mut buf);
                let numerator = max_k_sum(&buf, self.k) / self.k.min(total) as f64;
                let denominator = buf.iter().sum::<f64>() / total as f64;
                let ratio = (denominator != 0.0).then(|| numerator / denominator);
                SimilarityRatio { novel: self.novel_ids[n].clone(), numerator, denominator, ratio }
            })
            .collect())
    }

    pub fn has_negative_similarities(&self) -> bool {
        self.cand_sim.iter().chain(&self.pre_sim).any(|&v| v < 0.0)
    }

    /// Restricted matrix over `B_u ∪ B_s` × `N`, enough to rebuild the problem.
    pub fn to_matrix(&self) -> SimilarityMatrix {
        let mut base: Vec<ClassId> = self.candidate_ids.clone();
        base.extend(self.preselected_ids.iter().cloned());
        let mut values = self.cand_sim.clone();
        values.extend_from_slice(&self.pre_sim);
        SimilarityMatrix::new(base, self.novel_ids.clone(), values).expect("restricted matrix is valid")
    }
}

fn sorted_unique(ids: &[ClassId]) -> Vec<ClassId> {
    let mut v = ids.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Numerator, denominator and ratio of the similarity ratio for one novel class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRatio {
    pub novel: ClassId,
    /// mean of the top-K similarities
    pub numerator: f64,
    /// mean of all similarities
    pub denominator: f64,
    /// `None` when the denominator is zero
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GreedyNovelClass,
    GreedyTarget,
    RandomGreedy,
    ContinuousDouble,
    Random,
    DomainSimilarity,
    KMedoids,
    BruteForce,
}

impl Algorithm {
    pub const ENGINES: [Algorithm; 4] =
        [Algorithm::GreedyNovelClass, Algorithm::GreedyTarget, Algorithm::RandomGreedy, Algorithm::ContinuousDouble];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GreedyNovelClass => "greedy-novel",
            Algorithm::GreedyTarget => "greedy-target",
            Algorithm::RandomGreedy => "random-greedy",
            Algorithm::ContinuousDouble => "continuous-double",
            Algorithm::Random => "random",
            Algorithm::DomainSimilarity => "domsim",
            Algorithm::KMedoids => "kmedoids",
            Algorithm::BruteForce => "brute-force",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::RandomGreedy | Algorithm::Random)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "greedy-novel" | "greedy-novel-class" => Algorithm::GreedyNovelClass,
            "greedy-target" => Algorithm::GreedyTarget,
            "random-greedy" => Algorithm::RandomGreedy,
            "continuous-double" => Algorithm::ContinuousDouble,
            "random" => Algorithm::Random,
            "domsim" | "domain-similarity" => Algorithm::DomainSimilarity,
            "kmedoids" | "k-medoids" => Algorithm::KMedoids,
            "brute-force" | "oracle" => Algorithm::BruteForce,
            other => return Err(Error::InvalidInput(format!("unknown algorithm `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// chosen classes in selection order
    pub chosen: Vec<ClassId>,
    pub objective: f64,
    pub step_gains: Vec<f64>,
    pub algorithm: Algorithm,
    pub seed: Option<u64>,
    pub elapsed_secs: f64,
}

impl SelectionResult {
    /// Recomputes the objective from scratch and fills in the result.
    pub(crate) fn finish(
        problem: &SelectionProblem,
        chosen: &[usize],
        step_gains: Vec<f64>,
        algorithm: Algorithm,
        seed: Option<u64>,
        started: std::time::Instant,
    ) -> Self {
        debug_assert_eq!(chosen.len(), problem.m());
        SelectionResult {
            chosen: problem.ids_of(chosen),
            objective: problem.objective(chosen),
            step_gains,
            algorithm,
            seed,
            elapsed_secs: started.elapsed().as_secs_f64(),
        }
    }
}
