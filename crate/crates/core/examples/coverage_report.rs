//! How quickly does a schedule cover every relative distance in the target
//! window? Compares the Gaussian scale prior with a uniform one at a small
//! scale where full coverage is reachable.
//!
//! cargo run --example coverage_report

use cream::coverage::{cumulative_coverage, interval_union, pairwise_distances};
use cream::{materialize, ContextConfig, ScheduleGenerator};

fn main() -> cream::Result<()> {
    let config = ContextConfig::new(96, 768).with_k(8).with_seed(5);

    // Closed-form interval union agrees with brute force on a single sample.
    let one = ScheduleGenerator::new(config.clone())?.sample(0)?.plan;
    let brute = pairwise_distances(&materialize(&one, &config)?, config.l);
    assert_eq!(brute, interval_union(&one, config.l));
    println!("sample 0 covers {} of {} distances", brute.count(), config.l);

    for (name, scale) in [("gaussian", config.scale_distribution()?), ("uniform", config.uniform_distribution()?)] {
        let schedule = ScheduleGenerator::with_scale(config.clone(), scale)?.generate(500)?;
        let report = cumulative_coverage(schedule.entries.iter().map(|e| &e.plan), config.l)?;
        let at = |i: usize| report.cumulative_fractions[i];
        println!(
            "{name:>8}: after 1 {:.3}, 10 {:.3}, 100 {:.3}, 500 {:.3}; full after {:?} samples",
            at(0),
            at(9),
            at(99),
            at(499),
            report.samples_to_full
        );
    }
    Ok(())
}
