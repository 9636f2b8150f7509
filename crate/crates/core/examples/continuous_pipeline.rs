//! Continuous double greedy on the multilinear extension, then pipage rounding.

use baseselect::continuous::{continuous_double_greedy_traced, pipage_round_traced, Multilinear};
use baseselect::problem::SelectionProblem;
use baseselect::similarity::build_similarity_matrix;
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};

fn main() -> baseselect::Result<()> {
    let cfg =
        SyntheticWorldConfig { clusters: 3, classes_per_cluster: 6, novel_classes: 4, seed: 5, ..Default::default() };
    let world = generate_synthetic_world(&cfg)?;
    let matrix = build_similarity_matrix(&world.base, &world.novel)?;
    let problem = SelectionProblem::new(&matrix, matrix.base_ids(), &[], matrix.novel_ids(), 6, 2, 0.2)?;

    let (x, trace) = continuous_double_greedy_traced(&problem, 100)?;
    for t in trace.iter().filter(|t| t.t % 25 == 0) {
        println!("t={:>3}  level={:+.4}  sum x={:.3}  sum y={:.3}", t.t, t.level, t.sum_x, t.sum_y);
    }
    let fx = Multilinear::new(&problem).value(&x.x);
    let (result, history) = pipage_round_traced(&problem, &x, 0)?;
    println!("F(x) = {fx:.6}, after {} pipage steps h(U) = {:.6}", history.len() - 1, result.objective);
    println!("chosen: {}", result.chosen.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "));
    Ok(())
}
