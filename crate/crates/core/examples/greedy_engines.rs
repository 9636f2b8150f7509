//! The three discrete engines on one synthetic instance, plus the selector's pick.

use baseselect::greedy::{choose_algorithm, greedy_on_novel_class, greedy_on_target, random_greedy, DEFAULT_GAMMA};
use baseselect::problem::SelectionProblem;
use baseselect::similarity::build_similarity_matrix;
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};

fn main() -> baseselect::Result<()> {
    let world = generate_synthetic_world(&SyntheticWorldConfig { seed: 1, ..Default::default() })?;
    let matrix = build_similarity_matrix(&world.base, &world.novel)?;
    let monotone = SelectionProblem::new(&matrix, matrix.base_ids(), &[], matrix.novel_ids(), 30, 2, 0.0)?;

    for res in [greedy_on_novel_class(&monotone)?, greedy_on_target(&monotone)?] {
        println!("{:<16} lambda=0.0  h = {:.4}  ({:.2} ms)", res.algorithm, res.objective, res.elapsed_secs * 1e3);
    }
    println!("selector: {}", choose_algorithm(&monotone, DEFAULT_GAMMA)?.rationale);

    let diverse = monotone.with_lambda(0.2)?.with_budget(5)?;
    let runs: Vec<f64> = (0..50).map(|s| random_greedy(&diverse, s).map(|r| r.objective)).collect::<Result<_, _>>()?;
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    println!("random-greedy    lambda=0.2  mean h over 50 seeds = {mean:.4}");
    println!("selector: {}", choose_algorithm(&diverse, DEFAULT_GAMMA)?.rationale);
    Ok(())
}
