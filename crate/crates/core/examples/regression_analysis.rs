//! Fits accuracy on the two similarity-ratio components for synthetic
//! responses whose weight on the top-K term varies.

use baseselect::problem::SelectionProblem;
use baseselect::regression::{fit_sr_regression, RegressionSample};
use baseselect::similarity::build_similarity_matrix;
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> baseselect::Result<()> {
    let world = generate_synthetic_world(&SyntheticWorldConfig { seed: 4, ..Default::default() })?;
    let matrix = build_similarity_matrix(&world.base, &world.novel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut xs = Vec::new();
    for _ in 0..100 {
        let size = rng.random_range(4..=40);
        let ids: Vec<_> =
            index::sample(&mut rng, matrix.rows(), size).iter().map(|i| matrix.base_ids()[i].clone()).collect();
        let p = SelectionProblem::new(&matrix, &ids, &[], matrix.novel_ids(), size, 3, 0.0)?;
        let sr = p.similarity_ratio(&(0..size).collect::<Vec<_>>())?;
        let n = sr.len() as f64;
        xs.push((sr.iter().map(|s| s.numerator).sum::<f64>() / n, sr.iter().map(|s| s.denominator).sum::<f64>() / n));
    }
    println!("share  beta1    beta2    alpha    R^2");
    for share in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let samples: Vec<_> = xs
            .iter()
            .map(|&(x1, x2)| RegressionSample {
                acc: share * x1 + (0.5 - share) * x2 + 0.01 * rng.random::<f64>(),
                x1,
                x2,
            })
            .collect();
        let fit = fit_sr_regression(&samples)?;
        println!("{share:.1}   {:+.3}   {:+.3}   {:+.3}   {:.3}", fit.beta1, fit.beta2, fit.alpha, fit.r_squared);
    }
    Ok(())
}
