//! Draw a short schedule for a 4k → 32k extension and print each sample's
//! layout, then write it in the JSONL schedule format.
//!
//! cargo run --example sample_schedule

use cream::schedule::write_schedule;
use cream::{materialize, ContextConfig, ScheduleGenerator};

fn main() -> cream::Result<()> {
    let config = ContextConfig::new(4096, 32768).with_k(32).with_sigma(3.0).with_seed(2024);
    let generator = ScheduleGenerator::new(config.clone())?;
    let schedule = generator.generate(8)?;

    println!("mu = {}  max alpha = {}", config.effective_mu(), config.max_alpha());
    println!("{:>3} {:>10} {:>5} {:>5} {:>6} {:>6} {:>6}", "id", "strategy", "L_h", "alpha", "P_s", "P_e", "count");
    for entry in &schedule.entries {
        let p = entry.plan;
        let positions = materialize(&p, &config)?;
        println!(
            "{:>3} {:>10?} {:>5} {:>5} {:>6} {:>6} {:>6}",
            entry.sample_id, p.strategy, p.head_len, p.alpha, p.middle_start, p.middle_end, positions.len()
        );
    }

    // The same id always reproduces the same plan.
    assert_eq!(generator.sample(3)?, schedule.entries[3]);

    let mut buf = Vec::new();
    write_schedule(&mut buf, &schedule, Some("example sample_schedule".into()), false)?;
    let text = String::from_utf8(buf).expect("utf-8");
    println!("\nfirst two lines of the schedule file:");
    for line in text.lines().take(2) {
        println!("{line}");
    }
    Ok(())
}
