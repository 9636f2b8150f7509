//! Assembles a problem from a matrix CSV, writes a run report, and re-checks
//! the objective from the report alone.

use baseselect::io::{write_matrix_csv, RunReport};
use baseselect::problem::Algorithm;
use baseselect::run::{run_algorithm, ProblemConfig, RunOptions};
use baseselect::similarity::{ClassId, SimilarityMatrix};

fn main() -> baseselect::Result<()> {
    let dir = std::env::temp_dir().join("baseselect-report");
    let matrix_path = dir.join("matrix.csv");
    let ids = |xs: &[&str]| xs.iter().map(|s| ClassId::from(*s)).collect::<Vec<_>>();
    let matrix = SimilarityMatrix::new(
        ids(&["a", "b", "c", "d", "e"]),
        ids(&["n0", "n1"]),
        vec![0.9, 0.1, 0.2, 0.8, 0.5, 0.5, 0.4, 0.3, 0.1, 0.2],
    )?;
    write_matrix_csv(&matrix_path, &matrix)?;

    let cfg = ProblemConfig {
        matrix: Some(matrix_path),
        preselected: ids(&["e"]),
        m: 2,
        k: 1,
        lambda: 0.1,
        ..Default::default()
    };
    let loaded = cfg.load()?;
    let result = run_algorithm(&loaded.problem, Algorithm::GreedyTarget, &RunOptions::default(), None)?;
    let report = RunReport::new(&loaded.problem, result)?;
    let path = dir.join("report.json");
    report.write(&path)?;

    let back = RunReport::read(&path)?;
    let chosen: Vec<&str> = back.result.chosen.iter().map(ClassId::as_str).collect();
    println!(
        "chosen {chosen:?}, objective {:.6}, recomputed {:.6}",
        back.result.objective,
        back.recompute_objective()?
    );
    println!("Q = {:.4}", back.diagnostics.q);
    Ok(())
}
