//! Class identifiers, class centroids and the dense base × novel cosine
//! similarity table every selection algorithm reads from.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque class label. Ordering is lexicographic and is the tie-break order
/// used by every algorithm in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::EmptyId);
        }
        Ok(ClassId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassId {
    /// Panics on an empty label; use [`ClassId::new`] for untrusted input.
    fn from(label: &str) -> Self {
        ClassId::new(label).expect("class id must be non-empty")
    }
}

/// Class feature vector, usually the mean of the class' embedded samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Centroid(Vec<f64>);

impl Centroid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("centroid must have at least one dimension".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(None));
        }
        Ok(Centroid(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine of the angle between two centroids, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Centroid, b: &Centroid) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector(None));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Centroids keyed by class, iterated in sorted id order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    entries: BTreeMap<ClassId, Centroid>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: ClassId, centroid: Centroid) -> Result<()> {
        if self.entries.is_empty() {
            self.dim = centroid.dim();
        } else if centroid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: centroid.dim() });
        }
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.entries.insert(id, centroid);
        Ok(())
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ClassId, Centroid)>,
    {
        let mut table = Self::new();
        for (id, c) in entries {
            table.insert(id, c)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &ClassId) -> Option<&Centroid> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &ClassId> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClassId, &Centroid)> {
        self.entries.iter()
    }

    /// Sub-table restricted to `ids`; every id must be present.
    pub fn subset<'a, I>(&self, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ClassId>,
    {
        let mut out = Self::new();
        for id in ids {
            let c = self.get(id).ok_or_else(|| Error::UnknownClass(id.clone()))?;
            if !out.contains(id) {
                out.insert(id.clone(), c.clone())?;
            }
        }
        Ok(out)
    }
}

/// Dense similarity table: rows are base classes, columns are novel classes.
/// Both axes are kept in sorted id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    base_ids: Vec<ClassId>,
    novel_ids: Vec<ClassId>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major `values`. Axes are reordered into
    /// sorted id order if they are not already.
    pub fn new(base_ids: Vec<ClassId>, novel_ids: Vec<ClassId>, values: Vec<f64>) -> Result<Self> {
        let (rows, cols) = (base_ids.len(), novel_ids.len());
        if values.len() != rows * cols {
            return Err(Error::InvalidInput(format!("matrix has {} values, expected {rows}x{cols}", values.len())));
        }
        check_unique(&base_ids)?;
        check_unique(&novel_ids)?;
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(Some(base_ids[i / cols.max(1)].clone())));
            }
            if !(-1.0..=1.0).contains(v) {
                return Err(Error::InvalidInput(format!(
                    "similarity {v} for ({}, {}) outside [-1, 1]",
                    base_ids[i / cols],
                    novel_ids[i % cols]
                )));
            }
        }

        let mut row_order: Vec<usize> = (0..rows).collect();
        row_order.sort_by(|&a, &b| base_ids[a].cmp(&base_ids[b]));
        let mut col_order: Vec<usize> = (0..cols).collect();
        col_order.sort_by(|&a, &b| novel_ids[a].cmp(&novel_ids[b]));
        let mut sorted = Vec::with_capacity(values.len());
        for &r in &row_order {
            for &c in &col_order {
                sorted.push(values[r * cols + c]);
            }
        }
        Ok(SimilarityMatrix {
            base_ids: row_order.iter().map(|&r| base_ids[r].clone()).collect(),
            novel_ids: col_order.iter().map(|&c| novel_ids[c].clone()).collect(),
            values: sorted,
        })
    }

    pub fn base_ids(&self) -> &[ClassId] {
        &self.base_ids
    }

    pub fn novel_ids(&self) -> &[ClassId] {
        &self.novel_ids
    }

    pub fn rows(&self) -> usize {
        self.base_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.novel_ids.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn base_index(&self, id: &ClassId) -> Option<usize> {
        self.base_ids.binary_search(id).ok()
    }

    pub fn novel_index(&self, id: &ClassId) -> Option<usize> {
        self.novel_ids.binary_search(id).ok()
    }

    pub fn value(&self, base: &ClassId, novel: &ClassId) -> Option<f64> {
        Some(self.get(self.base_index(base)?, self.novel_index(novel)?))
    }
}

fn check_unique(ids: &[ClassId]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Cosine similarity of every base centroid against every novel centroid.
pub fn build_similarity_matrix(base: &EmbeddingTable, novel: &EmbeddingTable) -> Result<SimilarityMatrix> {
    if !base.is_empty() && !novel.is_empty() && base.dim() != novel.dim() {
        return Err(Error::DimensionMismatch { expected: base.dim(), found: novel.dim() });
    }
    for (id, c) in base.iter().chain(novel.iter()) {
        if c.norm() == 0.0 {
            return Err(Error::ZeroVector(Some(id.clone())));
        }
    }
    let mut values = Vec::with_capacity(base.len() * novel.len());
    for (_, b) in base.iter() {
        for (_, n) in novel.iter() {
            values.push(cosine_similarity(b, n)?);
        }
    }
    SimilarityMatrix::new(base.ids().cloned().collect(), novel.ids().cloned().collect(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64]) -> Centroid {
        Centroid::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&c(&[1.0, 0.0]), &c(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&c(&[1.0, 0.0]), &c(&[0.0, 1.0])).unwrap(), 0.0);
        let v = cosine_similarity(&c(&[3.0, 4.0]), &c(&[4.0, 3.0])).unwrap();
        assert!((v - 0.96).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&c(&[1.0, 0.0]), &c(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(cosine_similarity(&c(&[0.0, 0.0]), &c(&[1.0, 0.0])), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn cosine_clamps_rounding() {
        let a = c(&[0.1, 0.2, 0.3]);
        let v = cosine_similarity(&a, &a).unwrap();
        assert!(v <= 1.0);
    }

    #[test]
    fn build_examples() {
        let base = EmbeddingTable::from_entries([("a".into(), c(&[1.0, 0.0]))]).unwrap();
        let novel = EmbeddingTable::from_entries([("n".into(), c(&[1.0, 0.0]))]).unwrap();
        let m = build_similarity_matrix(&base, &novel).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert_eq!(m.get(0, 0), 1.0);

        let base = EmbeddingTable::from_entries([("b".into(), c(&[0.0, 1.0])), ("a".into(), c(&[1.0, 0.0]))]).unwrap();
        let novel = EmbeddingTable::from_entries([("n".into(), c(&[1.0, 1.0]))]).unwrap();
        let m = build_similarity_matrix(&base, &novel).unwrap();
        assert_eq!(m.base_ids(), &["a".into(), "b".into()] as &[ClassId]);
        for r in 0..2 {
            assert!((m.get(r, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn build_rejects_zero_centroid() {
        let base = EmbeddingTable::from_entries([("z".into(), c(&[0.0, 0.0]))]).unwrap();
        let novel = EmbeddingTable::from_entries([("n".into(), c(&[1.0, 0.0]))]).unwrap();
        assert!(
            matches!(build_similarity_matrix(&base, &novel), Err(Error::ZeroVector(Some(id))) if id.as_str() == "z")
        );
    }

    #[test]
    fn table_rejects_duplicates_and_mixed_dims() {
        let mut t = EmbeddingTable::new();
        t.insert("a".into(), c(&[1.0])).unwrap();
        assert!(matches!(t.insert("a".into(), c(&[2.0])), Err(Error::DuplicateId(_))));
        assert!(matches!(t.insert("b".into(), c(&[2.0, 1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn matrix_sorts_axes() {
        let m =
            SimilarityMatrix::new(vec!["y".into(), "x".into()], vec!["q".into(), "p".into()], vec![0.1, 0.2, 0.3, 0.4])
                .unwrap();
        assert_eq!(m.value(&"x".into(), &"p".into()), Some(0.4));
        assert_eq!(m.value(&"y".into(), &"q".into()), Some(0.1));
        assert_eq!(m.row(0), &[0.4, 0.3]);
    }

    #[test]
    fn matrix_validates() {
        assert!(SimilarityMatrix::new(vec!["a".into()], vec!["n".into()], vec![1.5]).is_err());
        assert!(SimilarityMatrix::new(vec!["a".into()], vec!["n".into()], vec![f64::NAN]).is_err());
        assert!(SimilarityMatrix::new(vec!["a".into(), "a".into()], vec!["n".into()], vec![0.1, 0.2]).is_err());
        assert!(SimilarityMatrix::new(vec!["a".into()], vec!["n".into()], vec![]).is_err());
    }
}
