//! Clustered synthetic embeddings for desk-scale experiments.
//!
//! Cluster centers are isotropic Gaussians with scale `inter_spread`; each
//! class centroid is its cluster center plus isotropic noise of scale
//! `intra_spread`. Novel classes pick a cluster uniformly and follow the
//! same process. Base ids are `b<cluster>_<index>`, novel ids `n<index>`.

use std::collections::BTreeMap;

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::seeded_rng;
use crate::similarity::{Centroid, ClassId, EmbeddingTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorldConfig {
    pub clusters: usize,
    pub classes_per_cluster: usize,
    pub novel_classes: usize,
    pub dim: usize,
    pub intra_spread: f64,
    pub inter_spread: f64,
    pub seed: u64,
}

impl Default for SyntheticWorldConfig {
    fn default() -> Self {
        SyntheticWorldConfig {
            clusters: 5,
            classes_per_cluster: 20,
            novel_classes: 10,
            dim: 16,
            intra_spread: 0.3,
            inter_spread: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticWorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.classes_per_cluster == 0 || self.novel_classes == 0 || self.dim == 0 {
            return Err(Error::InvalidInput("cluster, class and dimension counts must be positive".into()));
        }
        if !(self.inter_spread > 0.0 && self.inter_spread.is_finite()) {
            return Err(Error::InvalidInput("inter_spread must be positive".into()));
        }
        if !(self.intra_spread >= 0.0 && self.intra_spread.is_finite()) {
            return Err(Error::InvalidInput("intra_spread must be non-negative".into()));
        }
        if self.intra_spread >= self.inter_spread {
            warn!("intra_spread {} >= inter_spread {}: clusters will overlap", self.intra_spread, self.inter_spread);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub base: EmbeddingTable,
    pub novel: EmbeddingTable,
    pub base_cluster: BTreeMap<ClassId, usize>,
    pub novel_cluster: BTreeMap<ClassId, usize>,
    pub centers: Vec<Vec<f64>>,
}

impl SyntheticWorld {
    /// Base and novel classes in a single table (ids are disjoint).
    pub fn combined(&self) -> EmbeddingTable {
        let mut t = self.base.clone();
        for (id, c) in self.novel.iter() {
            t.insert(id.clone(), c.clone()).expect("base and novel ids are disjoint");
        }
        t
    }
}

pub fn generate_synthetic_world(config: &SyntheticWorldConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let gauss = |scale: f64, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..config.dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let centers: Vec<Vec<f64>> = (0..config.clusters).map(|_| gauss(config.inter_spread, &mut rng)).collect();
    let around = |c: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Result<Centroid> {
        let noise = gauss(config.intra_spread, rng);
        Centroid::new(centers[c].iter().zip(noise).map(|(a, b)| a + b).collect())
    };

    let mut base = EmbeddingTable::new();
    let mut base_cluster = BTreeMap::new();
    let cw = digits(config.clusters);
    let iw = digits(config.classes_per_cluster);
    for c in 0..config.clusters {
        for i in 0..config.classes_per_cluster {
            let id = ClassId::new(format!("b{c:0cw$}_{i:0iw$}"))?;
            base.insert(id.clone(), around(c, &mut rng)?)?;
            base_cluster.insert(id, c);
        }
    }
    let mut novel = EmbeddingTable::new();
    let mut novel_cluster = BTreeMap::new();
    let nw = digits(config.novel_classes);
    for i in 0..config.novel_classes {
        let c = rng.random_range(0..config.clusters);
        let id = ClassId::new(format!("n{i:0nw$}"))?;
        novel.insert(id.clone(), around(c, &mut rng)?)?;
        novel_cluster.insert(id, c);
    }
    Ok(SyntheticWorld { base, novel, base_cluster, novel_cluster, centers })
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}
