//! Active queue management with rate-of-change feedback (AQMRD), RED-family
//! baselines, and a deterministic packet-level dumbbell simulator to compare
//! them.
//!
//! - [`aqm`]: the drop disciplines as pure state machines.
//! - [`sim`]: the discrete-event engine and TCP-AIMD sources.
//! - [`metrics`]: run counters, traces and the derived performance measures.
//! - [`experiment`]: configuration, scenario sweeps, CSV output and reports.

pub mod aqm;
mod error;
pub mod experiment;
pub mod metrics;
pub mod sim;

pub use aqm::{AboveMidMode, Action, Discipline, DisciplineKind, GatewayParams, Verdict};
pub use error::{Error, Result};
pub use metrics::RunMetrics;
pub use sim::{LinkParams, Simulation};
