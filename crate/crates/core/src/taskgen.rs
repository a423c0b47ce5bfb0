//! Synthetic long-context retrieval corpora.
//!
//! Two tasks: key-value retrieval over a JSON object of random UUID pairs,
//! and line retrieval over a register of labelled lines. Prompt wording lives
//! in `templates/` and is compiled in, so a `(task, params, seed)` triple
//! reproduces its prompt byte for byte.
//!
//! Length: a key-value pair adds 81 characters and a register line to
//! roughly 50; prompts grow linearly in the number of pairs or lines. Token
//! counts depend on the tokenizer and are not modelled here.

use std::collections::HashSet;
use std::io::Write;

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Error, Result};
use crate::rng;

pub const KV_TEMPLATE: &str = include_str!("../templates/kv_retrieval.txt");
pub const LINE_TEMPLATE: &str = include_str!("../templates/line_retrieval.txt");

/// Answer positions for 75 keys (about 5K tokens).
pub const KV_POSITIONS_75: [usize; 5] = [0, 18, 37, 54, 74];
/// Answer positions for 140 keys (about 10K tokens).
pub const KV_POSITIONS_140: [usize; 5] = [0, 34, 69, 104, 139];
/// Samples per answer position in the evaluation grids.
pub const SAMPLES_PER_POSITION: usize = 500;

const PAYLOAD_RANGE: u64 = 50_000;

const ADJECTIVES: [&str; 40] = [
    "amber", "brave", "calm", "dapper", "eager", "fancy", "gentle", "hollow", "icy", "jolly",
    "keen", "lively", "mellow", "nimble", "odd", "plain", "quiet", "rapid", "shiny", "tidy",
    "upbeat", "vivid", "witty", "young", "zesty", "bold", "crisp", "dusty", "empty", "fuzzy",
    "grand", "hasty", "inner", "jumpy", "kind", "lucky", "misty", "noble", "polite", "rustic",
];
const NOUNS: [&str; 40] = [
    "anchor", "badger", "canyon", "dolphin", "ember", "falcon", "garden", "harbor", "island",
    "jungle", "kettle", "lantern", "meadow", "nebula", "orchid", "pepper", "quartz", "river",
    "saddle", "tunnel", "umbrella", "valley", "walnut", "yonder", "zephyr", "beacon", "cactus",
    "dynamo", "engine", "fossil", "glacier", "hammock", "igloo", "jigsaw", "kernel", "ladder",
    "magnet", "nugget", "otter", "pylon",
];

/// Seed of sample `index` in a corpus generated from `seed`.
pub fn derive_seed(seed: u64, task: &str, index: u64) -> u64 {
    rng::substream(seed, task, index).next_u64()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvRetrievalSample {
    pub pairs: Vec<(String, String)>,
    pub query_key: String,
    pub answer_index: usize,
    pub gold: String,
}

impl KvRetrievalSample {
    pub fn prompt(&self) -> String {
        let body: Vec<String> = self
            .pairs
            .iter()
            .map(|(k, v)| format!(" \"{k}\": \"{v}\""))
            .collect();
        let object = format!("{{{}}}", body.join(",\n").trim_start());
        KV_TEMPLATE
            .replace("{pairs}", &object)
            .replace("{key}", &self.query_key)
    }
}

fn random_uuid<R: RngCore + ?Sized>(rng: &mut R) -> String {
    let hi = u128::from(rng.next_u64()) << 64;
    Uuid::from_u128(hi | u128::from(rng.next_u64())).to_string()
}

/// Key-value retrieval sample whose query targets the pair at `answer_index`.
pub fn gen_kv(num_keys: usize, answer_index: usize, seed: u64) -> Result<KvRetrievalSample> {
    if answer_index >= num_keys {
        return Err(Error::IndexOutOfRange {
            index: answer_index,
            len: num_keys,
        });
    }
    let mut r = rng::substream(seed, "kv", 0);
    let mut seen = HashSet::with_capacity(num_keys);
    let mut pairs = Vec::with_capacity(num_keys);
    while pairs.len() < num_keys {
        let key = random_uuid(&mut r);
        let value = random_uuid(&mut r);
        if seen.insert(key.clone()) {
            pairs.push((key, value));
        }
    }
    let (query_key, gold) = pairs[answer_index].clone();
    Ok(KvRetrievalSample {
        pairs,
        query_key,
        answer_index,
        gold,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLine {
    pub label: String,
    pub payload: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRetrievalSample {
    pub lines: Vec<RegisterLine>,
    pub target_line: usize,
    pub gold: u64,
}

impl LineRetrievalSample {
    pub fn prompt(&self) -> String {
        let body: String = self
            .lines
            .iter()
            .map(|l| format!("line {}: REGISTER_CONTENT is <{}>\n", l.label, l.payload))
            .collect();
        LINE_TEMPLATE
            .replace("{lines}", &body)
            .replace("{label}", &self.lines[self.target_line].label)
    }
}

fn line_labels<R: RngCore + ?Sized>(rng: &mut R, count: usize) -> Vec<String> {
    let combos = ADJECTIVES.len() * NOUNS.len();
    let mut order: Vec<usize> = (0..combos).collect();
    let mut labels = Vec::with_capacity(count);
    let mut round = 0;
    while labels.len() < count {
        // partial Fisher-Yates over the remaining combinations of this round
        for i in 0..combos.min(count - labels.len()) {
            let j = rng::inclusive_range(rng, i as u64, combos as u64 - 1) as usize;
            order.swap(i, j);
            let c = order[i];
            let base = format!("{}-{}", ADJECTIVES[c / NOUNS.len()], NOUNS[c % NOUNS.len()]);
            labels.push(if round == 0 { base } else { format!("{base}-{round}") });
        }
        round += 1;
    }
    labels
}

/// Line retrieval sample asking for the payload of `target_line`.
pub fn gen_lines(num_lines: usize, target_line: usize, seed: u64) -> Result<LineRetrievalSample> {
    if target_line >= num_lines {
        return Err(Error::IndexOutOfRange {
            index: target_line,
            len: num_lines,
        });
    }
    if num_lines as u64 >= PAYLOAD_RANGE {
        return Err(Error::invalid(format!(
            "at most {} lines have distinct payloads",
            PAYLOAD_RANGE - 1
        )));
    }
    let mut r = rng::substream(seed, "lines", 0);
    let labels = line_labels(&mut r, num_lines);
    let mut seen = HashSet::with_capacity(num_lines);
    let mut lines = Vec::with_capacity(num_lines);
    for label in labels {
        let payload = loop {
            let p = rng::inclusive_range(&mut r, 1, PAYLOAD_RANGE - 1);
            if seen.insert(p) {
                break p;
            }
        };
        lines.push(RegisterLine { label, payload });
    }
    let gold = lines[target_line].payload;
    Ok(LineRetrievalSample {
        lines,
        target_line,
        gold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    KvRetrieval,
    LineRetrieval,
}

impl Task {
    fn stream_label(self) -> &'static str {
        match self {
            Task::KvRetrieval => "kv",
            Task::LineRetrieval => "lines",
        }
    }
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub task: Task,
    pub params: serde_json::Value,
    /// Seed that regenerates this sample on its own.
    pub seed: u64,
    pub prompt: String,
    pub gold: String,
    pub answer_index: usize,
}

/// Evaluation grid: `per_position` samples at each answer position.
///
/// Samples are numbered position-major; sample `i` uses
/// [`derive_seed`]`(seed, task, i)`.
pub fn generate_grid(
    task: Task,
    size: usize,
    positions: &[usize],
    per_position: usize,
    seed: u64,
) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::with_capacity(positions.len() * per_position);
    let mut id = 0u64;
    for &pos in positions {
        for _ in 0..per_position {
            let sample_seed = derive_seed(seed, task.stream_label(), id);
            id += 1;
            let record = match task {
                Task::KvRetrieval => {
                    let s = gen_kv(size, pos, sample_seed)?;
                    CorpusRecord {
                        task,
                        params: serde_json::json!({ "num_keys": size }),
                        seed: sample_seed,
                        prompt: s.prompt(),
                        gold: s.gold,
                        answer_index: pos,
                    }
                }
                Task::LineRetrieval => {
                    let s = gen_lines(size, pos, sample_seed)?;
                    CorpusRecord {
                        task,
                        params: serde_json::json!({ "num_lines": size }),
                        seed: sample_seed,
                        prompt: s.prompt(),
                        gold: s.gold.to_string(),
                        answer_index: pos,
                    }
                }
            };
            out.push(record);
        }
    }
    Ok(out)
}

/// Writes a corpus as line-delimited JSON after a metadata header line.
pub fn write_corpus<W: Write>(
    mut out: W,
    header: &serde_json::Value,
    records: &[CorpusRecord],
) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_single_pair() {
        let s = gen_kv(1, 0, 9).unwrap();
        assert_eq!(s.pairs.len(), 1);
        assert_eq!(s.gold, s.pairs[0].1);
        assert_eq!(s.query_key, s.pairs[0].0);
    }

    #[test]
    fn kv_targets_requested_pair() {
        for &pos in &KV_POSITIONS_75 {
            let s = gen_kv(75, pos, 1).unwrap();
            assert_eq!(s.pairs[pos].0, s.query_key);
            assert_eq!(s.pairs[pos].1, s.gold);
            let keys: HashSet<_> = s.pairs.iter().map(|p| &p.0).collect();
            assert_eq!(keys.len(), 75);
        }
    }

    #[test]
    fn kv_prompt_layout() {
        let s = gen_kv(3, 1, 4).unwrap();
        let prompt = s.prompt();
        assert!(prompt.starts_with("Extract the value"));
        assert!(prompt.contains(&format!("Key: \"{}\"", s.query_key)));
        let line = format!("\"{}\": \"{}\"", s.pairs[1].0, s.pairs[1].1);
        assert!(prompt.contains(&line));
    }

    #[test]
    fn out_of_range_indices() {
        assert!(matches!(gen_kv(5, 5, 0), Err(Error::IndexOutOfRange { index: 5, len: 5 })));
        assert!(gen_lines(3, 7, 0).is_err());
        assert!(gen_kv(0, 0, 0).is_err());
    }

    #[test]
    fn two_lines() {
        let s = gen_lines(2, 1, 77).unwrap();
        assert_eq!(s.gold, s.lines[1].payload);
        assert_ne!(s.lines[0].payload, s.lines[1].payload);
        assert!(s.prompt().ends_with(&format!("line {}? I need the number.\n", s.lines[1].label)));
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(gen_lines(50, 10, 3).unwrap(), gen_lines(50, 10, 3).unwrap());
        assert_ne!(gen_lines(50, 10, 3).unwrap(), gen_lines(50, 10, 4).unwrap());
        assert_eq!(gen_kv(20, 3, 3).unwrap(), gen_kv(20, 3, 3).unwrap());
    }

    #[test]
    fn many_lines_keep_unique_labels_and_payloads() {
        let s = gen_lines(2000, 1999, 5).unwrap();
        let labels: HashSet<_> = s.lines.iter().map(|l| &l.label).collect();
        let payloads: HashSet<_> = s.lines.iter().map(|l| l.payload).collect();
        assert_eq!(labels.len(), 2000);
        assert_eq!(payloads.len(), 2000);
    }

    #[test]
    fn prompt_length_is_linear_in_pairs() {
        let len = |n| gen_kv(n, 0, 8).unwrap().prompt().len();
        let step = len(20) - len(10);
        assert_eq!(len(30) - len(20), step);
        assert_eq!(step, 10 * 81);
    }

    #[test]
    fn grid_seeds_regenerate_samples() {
        let grid = generate_grid(Task::LineRetrieval, 30, &[0, 29], 3, 12).unwrap();
        assert_eq!(grid.len(), 6);
        for r in &grid {
            let again = gen_lines(30, r.answer_index, r.seed).unwrap();
            assert_eq!(again.prompt(), r.prompt);
            assert_eq!(again.gold.to_string(), r.gold);
        }
    }
}
