//! Exhaustive check of the maximum relative-distance coverage for small
//! windows, under both middle-length conventions.
//!
//! cargo run --release --example verify_theorems

use cream::coverage::theorems::{Convention, Instance, Verification, DEFAULT_BUDGET, DEFAULT_REGIME_RATIO};

fn main() -> cream::Result<()> {
    for (n, l, h) in [(9, 27, 3), (12, 96, 4), (16, 128, 4)] {
        for convention in [Convention::Span, Convention::Count] {
            let instance = Instance::new(n, l, h, h, convention)?;
            let v = Verification::run(instance, DEFAULT_BUDGET, DEFAULT_REGIME_RATIO)?;
            println!("{v}");
        }
    }
    Ok(())
}
