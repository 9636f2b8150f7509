//! Problem assembly from files and engine dispatch.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{domain_similarity_select, k_medoids_select, random_select};
use crate::continuous::{continuous_double_select, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::greedy::{choose_algorithm, greedy_on_novel_class, greedy_on_target, random_greedy, DEFAULT_GAMMA};
use crate::io::{parse_embeddings_csv, parse_matrix_csv};
use crate::problem::{Algorithm, SelectionProblem, SelectionResult};
use crate::similarity::{build_similarity_matrix, ClassId, EmbeddingTable, SimilarityMatrix};
use crate::verify::{brute_force_optimum, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Auto,
    Named(Algorithm),
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(AlgorithmSpec::Auto)
        } else {
            s.parse().map(AlgorithmSpec::Named)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    pub steps: usize,
    pub gamma: f64,
    /// extra random restarts for K-medoids
    pub restarts: usize,
    pub enum_cap: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            steps: DEFAULT_STEPS,
            gamma: DEFAULT_GAMMA,
            restarts: 0,
            enum_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Data source plus role lists. Exactly one of `embeddings` and `matrix`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub embeddings: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    /// defaults to every base class not preselected
    pub candidates: Option<Vec<ClassId>>,
    pub preselected: Vec<ClassId>,
    /// required with embeddings; defaults to every matrix column
    pub novel: Option<Vec<ClassId>>,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: SelectionProblem,
    pub embeddings: Option<EmbeddingTable>,
    pub load_secs: f64,
}

impl ProblemConfig {
    pub fn load(&self) -> Result<LoadedProblem> {
        let started = Instant::now();
        let (matrix, embeddings) = match (&self.embeddings, &self.matrix) {
            (Some(path), None) => {
                let table = parse_embeddings_csv(path)?;
                let novel = self
                    .novel
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("novel ids are required with embeddings".into()))?;
                let novel_table = table.subset(novel)?;
                let base_ids: Vec<ClassId> = match &self.candidates {
                    Some(c) => c.iter().chain(&self.preselected).cloned().collect(),
                    None => table.ids().filter(|id| !novel_table.contains(id)).cloned().collect(),
                };
                let base_table = table.subset(&base_ids)?;
                (build_similarity_matrix(&base_table, &novel_table)?, Some(table))
            }
            (None, Some(path)) => (parse_matrix_csv(path)?, None),
            _ => return Err(Error::InvalidInput("supply exactly one of embeddings or matrix".into())),
        };
        let problem = self.assemble(&matrix)?;
        Ok(LoadedProblem { problem, embeddings, load_secs: started.elapsed().as_secs_f64() })
    }

    fn assemble(&self, matrix: &SimilarityMatrix) -> Result<SelectionProblem> {
        let novel = self.novel.clone().unwrap_or_else(|| matrix.novel_ids().to_vec());
        let candidates = match &self.candidates {
            Some(c) => c.clone(),
            None => matrix
                .base_ids()
                .iter()
                .filter(|id| !self.preselected.contains(id) && !novel.contains(id))
                .cloned()
                .collect(),
        };
        SelectionProblem::new(matrix, &candidates, &self.preselected, &novel, self.m, self.k, self.lambda)
    }
}

/// Runs one engine or baseline. K-medoids needs embeddings; domain
/// similarity uses them when present.
pub fn run_algorithm(
    problem: &SelectionProblem,
    algorithm: Algorithm,
    options: &RunOptions,
    embeddings: Option<&EmbeddingTable>,
) -> Result<SelectionResult> {
    match algorithm {
        Algorithm::GreedyNovelClass => greedy_on_novel_class(problem),
        Algorithm::GreedyTarget => greedy_on_target(problem),
        Algorithm::RandomGreedy => random_greedy(problem, options.seed),
        Algorithm::ContinuousDouble => continuous_double_select(problem, options.steps, options.seed),
        Algorithm::Random => random_select(problem, options.seed),
        Algorithm::DomainSimilarity => domain_similarity_select(problem, embeddings),
        Algorithm::KMedoids => {
            let table = embeddings.ok_or_else(|| Error::MissingEmbeddings("k-medoids works on centroids".into()))?;
            k_medoids_select(problem, table, options.seed, options.restarts)
        }
        Algorithm::BruteForce => brute_force_optimum(problem, options.enum_cap),
    }
}

/// Resolves `auto` through the selector; returns the engine and, for
/// `auto`, the selector's rationale.
pub fn resolve_algorithm(
    problem: &SelectionProblem,
    spec: AlgorithmSpec,
    gamma: f64,
) -> Result<(Algorithm, Option<String>)> {
    match spec {
        AlgorithmSpec::Named(a) => Ok((a, None)),
        AlgorithmSpec::Auto => {
            let choice = choose_algorithm(problem, gamma)?;
            Ok((choice.kind, Some(choice.rationale)))
        }
    }
}
