//! The truncated Gaussian over scale factors: exact integer masses, an
//! empirical histogram from the inverse-transform sampler, and a
//! goodness-of-fit test between them.
//!
//! cargo run --release --example gaussian_stats

use cream::gaussian::chi_square_fit;
use cream::rng::{substream, unit_f64};
use cream::TruncatedGaussianTable;

fn main() -> cream::Result<()> {
    let table = TruncatedGaussianTable::new(4.5, 3.0, 1.0, 8.0, 1000)?;
    let masses = table.integer_bin_masses();
    let (lo, _) = table.alpha_range();

    let mut rng = substream(1, "example", 0);
    let mut counts = vec![0u64; masses.len()];
    let draws = 100_000;
    for _ in 0..draws {
        let a = table.inverse_sample(unit_f64(&mut rng))?;
        counts[(a - lo) as usize] += 1;
    }

    println!("alpha  expected  observed");
    for ((alpha, p), c) in masses.iter().zip(&counts) {
        println!("{alpha:>5}  {:>8.4}  {:>8.4}", p, *c as f64 / draws as f64);
    }
    let probs: Vec<f64> = masses.iter().map(|(_, p)| *p).collect();
    let fit = chi_square_fit(&counts, &probs)?;
    println!("chi2 = {:.3}, dof = {}, p = {:.3}", fit.statistic, fit.dof, fit.p_value);
    Ok(())
}
