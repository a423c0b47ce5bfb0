//! Rotary scores depend only on relative position, with or without
//! position interpolation.
//!
//! cargo run --example rope_relativity

use cream::rope::{apply_rotary, attn_score, InterpolationMode, RotaryParams, DEFAULT_BASE};

fn main() -> cream::Result<()> {
    let q: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
    let k: Vec<f64> = (0..64).map(|i| ((i * 5 % 11) as f64 - 5.0) / 5.0).collect();

    let modes = [
        InterpolationMode::None,
        InterpolationMode::Linear { scale: 8.0 },
        InterpolationMode::Ntk { scale: 8.0 },
        InterpolationMode::yarn(8.0, 4096.0),
    ];
    for mode in modes {
        let params = RotaryParams::new(64, DEFAULT_BASE, mode)?;
        let near = attn_score(&q, &k, 100.0, 40.0, &params)?;
        let far = attn_score(&q, &k, 30_100.0, 30_040.0, &params)?;
        println!(
            "{:>6}: score(100, 40) = {near:+.9}  score(30100, 30040) = {far:+.9}  factor {:.4}",
            params.mode().name(),
            params.attention_factor()
        );
    }

    let params = RotaryParams::standard(64)?;
    let rotated = apply_rotary(&q, 12_345.0, &params)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("norm before {:.12}, after {:.12}", norm(&q), norm(&rotated));
    Ok(())
}
