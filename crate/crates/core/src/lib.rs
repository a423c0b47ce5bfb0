//! Position-index schedules for extending the context window of language
//! models that use rotary position encoding.
//!
//! A model pre-trained on windows of `N` tokens is fine-tuned, still on `N`
//! tokens, but with position indices spread over a longer target window `L`.
//! Each training sample splits its window into a head, a middle and a tail;
//! head and tail are pinned to the two ends of `[0, L)` and the middle run is
//! placed by a scale factor drawn from a truncated Gaussian, which pushes
//! training toward the middle of the long context.
//!
//! * [`gaussian`]: tabulated truncated normal and inverse-transform sampling.
//! * [`indexing`]: segment plans, position sets, seeded schedule generation.
//! * [`schedule`]: versioned line-delimited JSON schedule files and config files.
//! * [`coverage`]: relative-distance sets, coverage reports and an exhaustive
//!   verifier for the maximal-coverage results.
//! * [`rope`]: rotary kernel with linear/NTK/YaRN interpolation and a
//!   relativity property sweep.
//! * [`taskgen`]: synthetic key-value and line retrieval corpora.
//! * [`cli`]: the `cream` command.

pub mod cli;
pub mod coverage;
pub mod error;
pub mod gaussian;
pub mod indexing;
pub mod rng;
pub mod rope;
pub mod schedule;
pub mod taskgen;

pub use error::{Error, Result};
pub use gaussian::{build_table, TruncatedGaussianTable};
pub use indexing::{
    batch_generate, materialize, sample_plan, ContextConfig, PositionSet, Schedule, ScheduleEntry,
    ScheduleGenerator, SegmentPlan, Strategy,
};
