//! Event-based local-hidden-variable simulation of EPR-B experiments, plus the
//! statistics used to judge them: outcome tables, the CHSH sum, detection and
//! coincidence efficiencies, and the loophole-adjusted bounds 4/η − 2 and
//! (conjectured) 6/γ − 4.
//!
//! Five model variants are provided. Two are pulsed detection-loophole models
//! (`epr-simple` and `pearle`, differing only in the threshold distribution);
//! three are clocked coincidence-loophole models in which every particle is
//! detected but picks up a setting-dependent time delay, and pairs are kept
//! only when their detections fall within a coincidence window.
//!
//! Simulations are deterministic: every trial draws from a counter-based
//! substream keyed by `(seed, trial_index)`, so a run's output is a pure
//! function of its [`engine::RunConfig`] regardless of thread count. The
//! `parallel` feature (on by default) shards trials across rayon; disabling
//! it leaves the identical sequential path.

pub mod analysis;
pub mod coincidence;
pub mod engine;
pub mod error;
pub mod model;
pub mod rng;

pub use analysis::{ChshReport, OutcomeTable, PairCounts, TableSet};
pub use coincidence::{CoincidencePair, DetectionEvent, MatchResult};
pub use engine::{ClockedRun, RunConfig, SweepCurve, TrialRecord};
pub use error::{Error, Result};
pub use model::{HiddenPair, ModelId, ModelParams, Outcome, Station};
pub use rng::TrialRng;
