//! Generate a tiny key-value and line retrieval corpus and show one prompt
//! of each.
//!
//! cargo run --example retrieval_corpus

use cream::taskgen::{gen_kv, gen_lines, generate_grid, write_corpus, Task};

fn main() -> cream::Result<()> {
    let kv = gen_kv(3, 1, 42)?;
    println!("{}\n-> gold {}\n", kv.prompt(), kv.gold);

    let lines = gen_lines(4, 2, 42)?;
    println!("{}\n-> gold {}\n", lines.prompt(), lines.gold);

    let positions = [0, 9, 19];
    let records = generate_grid(Task::KvRetrieval, 20, &positions, 2, 7)?;
    let header = serde_json::json!({ "task": "kv_retrieval", "num_keys": 20, "positions": positions });
    let mut out = Vec::new();
    write_corpus(&mut out, &header, &records).expect("in-memory write");
    println!("{} records, {} bytes of JSONL", records.len(), out.len());
    for r in &records {
        println!("  answer_index {:>2}  prompt chars {}", r.answer_index, r.prompt.len());
    }
    Ok(())
}
