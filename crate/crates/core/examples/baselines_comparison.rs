//! Objective of the greedy engine against random, domain-similarity and
//! K-medoids selection over several synthetic worlds.

use baseselect::baselines::{domain_similarity_select, k_medoids_select, random_select};
use baseselect::greedy::greedy_on_target;
use baseselect::problem::SelectionProblem;
use baseselect::similarity::build_similarity_matrix;
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};

fn main() -> baseselect::Result<()> {
    let mut totals = [0.0; 4];
    let worlds = 10;
    for seed in 0..worlds {
        let world = generate_synthetic_world(&SyntheticWorldConfig { seed, ..Default::default() })?;
        let all = world.combined();
        let matrix = build_similarity_matrix(&world.base, &world.novel)?;
        let p = SelectionProblem::new(&matrix, matrix.base_ids(), &[], matrix.novel_ids(), 10, 1, 0.0)?;
        let scores = [
            greedy_on_target(&p)?.objective,
            domain_similarity_select(&p, Some(&all))?.objective,
            k_medoids_select(&p, &all, seed, 0)?.objective,
            random_select(&p, seed)?.objective,
        ];
        totals.iter_mut().zip(scores).for_each(|(t, s)| *t += s);
    }
    for (name, total) in ["greedy-target", "domsim", "kmedoids", "random"].iter().zip(totals) {
        println!("{name:<14} mean h = {:.4}", total / worlds as f64);
    }
    Ok(())
}
