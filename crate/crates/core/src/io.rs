//! File formats and machine-readable reports.
//!
//! Embeddings: CSV with header `id,v1,...,vd`, one class per row.
//! Matrix: CSV whose header row holds the novel ids after one leading cell,
//! and whose first column holds the base ids. Id lists: one id per line,
//! blank lines and `#` comments ignored. Reports are JSON.
//!
//! Reals written to CSV use 17 significant digits; JSON uses the shortest
//! representation that parses back to the same double.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::problem::{SelectionProblem, SelectionResult, SimilarityRatio};
use crate::similarity::{Centroid, ClassId, EmbeddingTable, SimilarityMatrix};
use crate::verify::BoundCertificate;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes to a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_real(field: &str, source: &str, line: u64) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::ParseLine {
        path: source.to_string(),
        line,
        message: format!("`{field}` is not a number"),
    })
}

pub fn parse_embeddings_csv(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    parse_embeddings_str(&read_text(path)?, &path.display().to_string())
}

/// `source` names the input in error messages.
pub fn parse_embeddings_str(text: &str, source: &str) -> Result<EmbeddingTable> {
    let mut records = csv_reader(text).into_records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::Parse { path: source.into(), message: "no data rows".into() }),
    };
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::ParseLine {
            path: source.into(),
            line: line_of(&header),
            message: "header must be `id,v1,...,vd`".into(),
        });
    }
    let dim = header.len() - 1;
    let mut table = EmbeddingTable::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        let at = |message: String| Error::ParseLine { path: source.into(), line, message };
        if record.len() != dim + 1 {
            return Err(at(format!("expected {} fields, found {}", dim + 1, record.len())));
        }
        let id = ClassId::new(&record[0]).map_err(|_| at("empty class id".into()))?;
        let values = record.iter().skip(1).map(|f| parse_real(f, source, line)).collect::<Result<Vec<_>>>()?;
        let centroid = Centroid::new(values).map_err(|e| at(e.to_string()))?;
        if table.contains(&id) {
            return Err(at(format!("duplicate class id `{id}`")));
        }
        table.insert(id, centroid).map_err(|e| at(e.to_string()))?;
    }
    if table.is_empty() {
        return Err(Error::Parse { path: source.into(), message: "no data rows".into() });
    }
    Ok(table)
}

pub fn embeddings_to_csv(table: &EmbeddingTable) -> String {
    let mut out = String::from("id");
    for j in 1..=table.dim() {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for (id, c) in table.iter() {
        out.push_str(id.as_str());
        for &v in c.values() {
            out.push(',');
            out.push_str(&fmt_real(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_embeddings_csv(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    write_atomic(path.as_ref(), embeddings_to_csv(table).as_bytes())
}

pub fn parse_matrix_csv(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    parse_matrix_str(&read_text(path)?, &path.display().to_string())
}

pub fn parse_matrix_str(text: &str, source: &str) -> Result<SimilarityMatrix> {
    let mut records = csv_reader(text).into_records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::Parse { path: source.into(), message: "no data rows".into() }),
    };
    let line = line_of(&header);
    let novel = header
        .iter()
        .skip(1)
        .map(|f| {
            ClassId::new(f).map_err(|_| Error::ParseLine {
                path: source.into(),
                line,
                message: "empty novel id in header".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if novel.is_empty() {
        return Err(Error::ParseLine { path: source.into(), line, message: "header lists no novel ids".into() });
    }
    let mut base = Vec::new();
    let mut values = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        let at = |message: String| Error::ParseLine { path: source.into(), line, message };
        if record.len() != novel.len() + 1 {
            return Err(at(format!("expected {} fields, found {}", novel.len() + 1, record.len())));
        }
        base.push(ClassId::new(&record[0]).map_err(|_| at("empty class id".into()))?);
        for f in record.iter().skip(1) {
            values.push(parse_real(f, source, line)?);
        }
    }
    if base.is_empty() {
        return Err(Error::Parse { path: source.into(), message: "no data rows".into() });
    }
    SimilarityMatrix::new(base, novel, values).map_err(|e| Error::Parse { path: source.into(), message: e.to_string() })
}

pub fn matrix_to_csv(matrix: &SimilarityMatrix) -> String {
    let mut out = String::from("base");
    for id in matrix.novel_ids() {
        out.push(',');
        out.push_str(id.as_str());
    }
    out.push('\n');
    for (r, id) in matrix.base_ids().iter().enumerate() {
        out.push_str(id.as_str());
        for &v in matrix.row(r) {
            out.push(',');
            out.push_str(&fmt_real(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, matrix: &SimilarityMatrix) -> Result<()> {
    write_atomic(path.as_ref(), matrix_to_csv(matrix).as_bytes())
}

pub fn parse_id_list(text: &str) -> Result<Vec<ClassId>> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(ClassId::new).collect()
}

pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<ClassId>> {
    parse_id_list(&read_text(path.as_ref())?)
}

pub fn write_id_list(path: impl AsRef<Path>, ids: &[ClassId]) -> Result<()> {
    let text: String = ids.iter().map(|id| format!("{id}\n")).collect();
    write_atomic(path.as_ref(), text.as_bytes())
}

/// `rank,id` rows in selection order.
pub fn chosen_to_csv(result: &SelectionResult) -> String {
    let mut out = String::from("rank,id\n");
    for (i, id) in result.chosen.iter().enumerate() {
        out.push_str(&format!("{},{id}\n", i + 1));
    }
    out
}

/// Everything needed to rebuild the instance without the original inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEcho {
    pub candidates: Vec<ClassId>,
    pub preselected: Vec<ClassId>,
    pub novel: Vec<ClassId>,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    pub matrix: SimilarityMatrix,
}

impl ProblemEcho {
    pub fn of(problem: &SelectionProblem) -> Self {
        ProblemEcho {
            candidates: problem.candidate_ids().to_vec(),
            preselected: problem.preselected_ids().to_vec(),
            novel: problem.novel_ids().to_vec(),
            m: problem.m(),
            k: problem.k(),
            lambda: problem.lambda(),
            matrix: problem.to_matrix(),
        }
    }

    pub fn rebuild(&self) -> Result<SelectionProblem> {
        // re-validate; a deserialized matrix bypasses its constructor
        let matrix = SimilarityMatrix::new(
            self.matrix.base_ids().to_vec(),
            self.matrix.novel_ids().to_vec(),
            (0..self.matrix.rows()).flat_map(|r| self.matrix.row(r).to_vec()).collect(),
        )?;
        SelectionProblem::new(&matrix, &self.candidates, &self.preselected, &self.novel, self.m, self.k, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub similarity_ratio: Vec<SimilarityRatio>,
    pub q: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_secs: f64,
    pub select_secs: f64,
    pub certify_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemEcho,
    pub result: SelectionResult,
    pub rationale: Option<String>,
    pub certificate: Option<BoundCertificate>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(problem: &SelectionProblem, result: SelectionResult) -> Result<Self> {
        let set = problem.resolve(&result.chosen)?;
        let diagnostics = Diagnostics {
            similarity_ratio: problem.similarity_ratio(&set)?,
            q: crate::verify::average_similarity_q(problem),
        };
        let timings = Timings { select_secs: result.elapsed_secs, ..Timings::default() };
        Ok(RunReport {
            problem: ProblemEcho::of(problem),
            result,
            rationale: None,
            certificate: None,
            diagnostics,
            timings,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&read_text(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    /// Objective of the reported selection, recomputed from the echoed instance.
    pub fn recompute_objective(&self) -> Result<f64> {
        self.problem.rebuild()?.objective_of(&self.result.chosen)
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path.as_ref(), s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::greedy_on_target;

    #[test]
    fn embeddings_example() {
        let t = parse_embeddings_str("id,v1,v2\na,1,0\nb,0,1\n", "mem").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn embeddings_errors() {
        let dup = parse_embeddings_str("id,v1\na,1\na,2\n", "mem").unwrap_err().to_string();
        assert!(dup.contains("`a`") && dup.contains("mem:3"), "{dup}");
        assert!(parse_embeddings_str("", "mem").unwrap_err().to_string().contains("no data rows"));
        assert!(parse_embeddings_str("id,v1\n", "mem").unwrap_err().to_string().contains("no data rows"));
        let bad = parse_embeddings_str("id,v1,v2\na,1,0\nb,x,1\n", "mem").unwrap_err().to_string();
        assert!(bad.contains("mem:3") && bad.contains("`x`"), "{bad}");
        let arity = parse_embeddings_str("id,v1,v2\na,1\n", "mem").unwrap_err().to_string();
        assert!(arity.contains("mem:2"), "{arity}");
        assert!(parse_embeddings_str("name,v1\na,1\n", "mem").is_err());
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.0f64.sqrt() / 2.0, 1e-300, f64::MIN_POSITIVE, 0.9999999999999999] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
        let t = EmbeddingTable::from_entries([
            ("a".into(), Centroid::new(vec![0.1, 1.0 / 3.0]).unwrap()),
            ("b".into(), Centroid::new(vec![-7e-17, 2.5]).unwrap()),
        ])
        .unwrap();
        assert_eq!(parse_embeddings_str(&embeddings_to_csv(&t), "mem").unwrap(), t);
    }

    #[test]
    fn matrix_round_trip() {
        let m = SimilarityMatrix::new(
            vec!["b2".into(), "b1".into()],
            vec!["n1".into(), "n0".into()],
            vec![0.1, -0.2, 1.0 / 7.0, 0.5],
        )
        .unwrap();
        let text = matrix_to_csv(&m);
        assert!(text.starts_with("base,n0,n1\n"));
        assert_eq!(parse_matrix_str(&text, "mem").unwrap(), m);
        assert!(parse_matrix_str("base,n0\nb0,2.0\n", "mem").is_err());
    }

    #[test]
    fn id_lists() {
        let ids = parse_id_list("# roles\na\n\n b \n").unwrap();
        assert_eq!(ids, vec![ClassId::from("a"), ClassId::from("b")]);
    }

    #[test]
    fn report_round_trip() {
        let matrix = SimilarityMatrix::new(
            ["a", "b", "c", "d"].map(ClassId::from).to_vec(),
            ["n0", "n1"].map(ClassId::from).to_vec(),
            vec![0.1, 0.7, 1.0 / 3.0, 0.2, 0.9, 0.05, 0.4, 0.4],
        )
        .unwrap();
        let cands: Vec<ClassId> = ["a", "b", "c"].map(ClassId::from).to_vec();
        let p = SelectionProblem::new(&matrix, &cands, &["d".into()], matrix.novel_ids(), 2, 2, 0.0).unwrap();
        let report = RunReport::new(&p, greedy_on_target(&p).unwrap()).unwrap();
        let back = RunReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
        assert!((back.recompute_objective().unwrap() - report.result.objective).abs() <= 1e-12);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
