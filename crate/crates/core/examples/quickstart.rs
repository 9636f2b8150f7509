//! Smallest end-to-end run: embeddings in memory, pick two base classes.

use baseselect::greedy::greedy_on_target;
use baseselect::problem::SelectionProblem;
use baseselect::similarity::{build_similarity_matrix, Centroid, ClassId, EmbeddingTable};

fn table(rows: &[(&str, [f64; 3])]) -> baseselect::Result<EmbeddingTable> {
    EmbeddingTable::from_entries(rows.iter().map(|(id, v)| (ClassId::from(*id), Centroid::new(v.to_vec()).unwrap())))
}

fn main() -> baseselect::Result<()> {
    let base = table(&[
        ("cat", [0.9, 0.1, 0.0]),
        ("dog", [0.8, 0.3, 0.1]),
        ("car", [0.0, 0.2, 0.9]),
        ("truck", [0.1, 0.1, 1.0]),
        ("tree", [0.2, 0.9, 0.1]),
    ])?;
    let novel = table(&[("lynx", [1.0, 0.2, 0.0]), ("van", [0.0, 0.3, 0.8])])?;
    let matrix = build_similarity_matrix(&base, &novel)?;

    let problem = SelectionProblem::new(&matrix, matrix.base_ids(), &[], matrix.novel_ids(), 2, 1, 0.0)?;
    let result = greedy_on_target(&problem)?;
    println!("chosen: {:?}", result.chosen.iter().map(ClassId::as_str).collect::<Vec<_>>());
    println!("objective: {:.4}", result.objective);
    for sr in problem.similarity_ratio(&problem.resolve(&result.chosen)?)? {
        println!("  {}: top-K mean {:.3}, overall mean {:.3}", sr.novel, sr.numerator, sr.denominator);
    }
    Ok(())
}
