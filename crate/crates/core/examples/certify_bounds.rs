//! Checks each engine's approximation guarantee against the exhaustive optimum.

use baseselect::continuous::continuous_double_select;
use baseselect::greedy::{greedy_on_novel_class, greedy_on_target, random_greedy};
use baseselect::problem::SelectionProblem;
use baseselect::similarity::build_similarity_matrix;
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};
use baseselect::verify::{certify_bounds, DEFAULT_ENUMERATION_CAP, DEFAULT_EXPECTATION_TRIALS};

fn main() -> baseselect::Result<()> {
    let cfg =
        SyntheticWorldConfig { clusters: 3, classes_per_cluster: 5, novel_classes: 3, seed: 2, ..Default::default() };
    let world = generate_synthetic_world(&cfg)?;
    let matrix = build_similarity_matrix(&world.base, &world.novel)?;
    let plain = SelectionProblem::new(&matrix, matrix.base_ids(), &[], matrix.novel_ids(), 4, 1, 0.0)?;
    let diverse = plain.with_lambda(0.2)?;

    let runs = [
        (&plain, greedy_on_novel_class(&plain)?),
        (&plain, greedy_on_target(&plain)?),
        (&diverse, random_greedy(&diverse, 0)?),
        (&diverse, continuous_double_select(&diverse, 100, 0)?),
    ];
    for (problem, result) in runs {
        let cert = certify_bounds(problem, &result, DEFAULT_EXPECTATION_TRIALS, DEFAULT_ENUMERATION_CAP)?;
        let flags: Vec<String> = cert.assumption_flags.iter().map(|f| f.to_string()).collect();
        println!(
            "{:<18} h={:.4} opt={:.4} bound={:.4} satisfied={} {}",
            result.algorithm.name(),
            cert.h_alg,
            cert.h_opt.unwrap_or(f64::NAN),
            cert.bound_value.unwrap_or(f64::NAN),
            cert.satisfied,
            if flags.is_empty() { String::new() } else { format!("[{}]", flags.join("; ")) }
        );
    }
    Ok(())
}
