//! Schedule files and config files.
//!
//! A schedule file is line-delimited JSON. Line 1 is a header:
//!
//! ```text
//! {"format_version":"1.0","kind":"cream-schedule","params":{...},"samples":S,"rng":"...","invocation":"..."}
//! ```
//!
//! followed by one record per sample, in `sample_id` order:
//!
//! ```text
//! {"sample_id":0,"strategy":"relativity","L_h":1365,"L_t":1365,"L_m":1366,"alpha":5,"P_s":17051,"P_e":18416}
//! ```
//!
//! `positions` is appended to each record only on request; it is always
//! reconstructible from the plan. Readers reject headers whose major version
//! differs from [`FORMAT_MAJOR`].
//!
//! A config file is flat `key = value` TOML with the keys
//! `N, L, k, mu, sigma, seed, strategy_mix, n_grid`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexing::{materialize, ContextConfig, Schedule, ScheduleEntry, SegmentPlan};

pub const FORMAT_VERSION: &str = "1.0";
pub const FORMAT_MAJOR: u32 = 1;
pub const SCHEDULE_KIND: &str = "cream-schedule";
pub const RNG_DESCRIPTION: &str = "chacha8; key=splitmix64(seed^fnv1a64(\"sample\")) x4 le; stream=sample_id";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleHeader {
    pub format_version: String,
    pub kind: String,
    pub params: ContextConfig,
    pub samples: usize,
    #[serde(default)]
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation: Option<String>,
}

impl ScheduleHeader {
    pub fn for_schedule(schedule: &Schedule, invocation: Option<String>) -> Self {
        let mut params = schedule.config.clone();
        params.mu = Some(params.effective_mu());
        Self {
            format_version: FORMAT_VERSION.into(),
            kind: SCHEDULE_KIND.into(),
            params,
            samples: schedule.len(),
            rng: RNG_DESCRIPTION.into(),
            invocation,
        }
    }

    fn check_version(&self) -> Result<()> {
        let major = self
            .format_version
            .split('.')
            .next()
            .and_then(|m| m.parse::<u32>().ok());
        if major != Some(FORMAT_MAJOR) {
            return Err(Error::FormatVersion {
                found: self.format_version.clone(),
                supported: FORMAT_MAJOR,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScheduleRecord {
    sample_id: u64,
    #[serde(flatten)]
    plan: SegmentPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<usize>>,
}

pub fn write_schedule<W: Write>(
    mut out: W,
    schedule: &Schedule,
    invocation: Option<String>,
    with_positions: bool,
) -> Result<()> {
    let header = ScheduleHeader::for_schedule(schedule, invocation);
    let io = |e: std::io::Error| Error::io("<schedule output>", e);
    serde_json::to_writer(&mut out, &header).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)?;
    for entry in &schedule.entries {
        let positions = if with_positions {
            Some(materialize(&entry.plan, &schedule.config)?.into_inner())
        } else {
            None
        };
        let rec = ScheduleRecord {
            sample_id: entry.sample_id,
            plan: entry.plan,
            positions,
        };
        serde_json::to_writer(&mut out, &rec).map_err(|e| io(e.into()))?;
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads and validates a schedule file. Errors name the offending line.
pub fn read_schedule(path: &Path) -> Result<(ScheduleHeader, Schedule)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty file, expected a header".into())),
    };
    let header: ScheduleHeader =
        serde_json::from_str(&first).map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    header.check_version()?;
    if header.kind != SCHEDULE_KIND {
        return Err(parse_err(1, format!("unexpected kind {:?}", header.kind)));
    }
    header
        .params
        .validate()
        .map_err(|e| parse_err(1, e.to_string()))?;
    let (n, l) = (header.params.n, header.params.l);
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScheduleRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        rec.plan.check(n, l).map_err(|e| parse_err(lineno, e.to_string()))?;
        if let Some(p) = &rec.positions {
            let expected = materialize(&rec.plan, &header.params)?;
            if p.as_slice() != expected.indices() {
                return Err(parse_err(lineno, "positions disagree with the plan".into()));
            }
        }
        entries.push(ScheduleEntry {
            sample_id: rec.sample_id,
            plan: rec.plan,
        });
    }
    if entries.is_empty() {
        return Err(parse_err(1, "schedule has no samples".into()));
    }
    let schedule = Schedule {
        config: header.params.clone(),
        entries,
    };
    Ok((header, schedule))
}

/// Parses a flat key-value config file.
pub fn parse_config(text: &str) -> Result<ContextConfig> {
    let config: ContextConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ContextConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
