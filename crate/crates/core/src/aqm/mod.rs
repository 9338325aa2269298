//! Active queue management disciplines.
//!
//! Every discipline is a deterministic state machine. The engine feeds it
//! arrivals (with the current queue length and a uniform draw), periodic
//! sample ticks, optional discipline timers and idle notifications; the
//! discipline answers with a [`Verdict`] per arrival. No discipline owns
//! packets or a random generator.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub mod aqmrd;
pub mod droptail;
mod params;
pub mod pi;
pub mod red;
pub mod rem;
pub mod sfq;

pub use aqmrd::{Aqmrd, AqmrdState};
pub use droptail::DropTail;
pub use params::{AboveMidMode, GatewayParams};
pub use pi::{Pi, PiParams};
pub use red::{AdaptiveRed, Red, RedState, Tred};
pub use rem::{Rem, RemParams};
pub use sfq::{Sfq, SfqParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Enqueue,
    Drop,
}

/// Per-arrival decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub action: Action,
    /// Probability used for the Bernoulli trial; 0 for a forced enqueue, 1 for a forced drop.
    pub p_applied: f64,
    /// The drop was caused by a full buffer rather than by the AQM law.
    pub overflow: bool,
}

impl Verdict {
    pub const ENQUEUE: Verdict = Verdict {
        action: Action::Enqueue,
        p_applied: 0.0,
        overflow: false,
    };

    pub const OVERFLOW: Verdict = Verdict {
        action: Action::Drop,
        p_applied: 1.0,
        overflow: true,
    };

    pub fn early_drop(p: f64) -> Self {
        Verdict {
            action: Action::Drop,
            p_applied: p,
            overflow: false,
        }
    }

    /// Outcome of a Bernoulli trial with probability `p` against draw `u`.
    pub fn trial(p: f64, u: f64) -> Self {
        if u < p {
            Verdict::early_drop(p)
        } else {
            Verdict {
                action: Action::Enqueue,
                p_applied: p,
                overflow: false,
            }
        }
    }

    pub fn is_drop(&self) -> bool {
        self.action == Action::Drop
    }

    /// A drop decided by the AQM law, as opposed to buffer overflow.
    pub fn is_early_drop(&self) -> bool {
        self.is_drop() && !self.overflow
    }

    /// Converts an enqueue into an overflow drop when the buffer is full.
    pub fn with_overflow(self, full: bool) -> Self {
        if full && self.action == Action::Enqueue {
            Verdict::OVERFLOW
        } else {
            self
        }
    }
}

/// What the engine knows about an arriving packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Packets queued at the router, excluding the one in service.
    pub q: usize,
    /// Packets queued in the bucket the packet was classified into.
    pub bucket_len: usize,
    /// Uniform draw in `[0, 1)`.
    pub u: f64,
    pub now: f64,
}

impl Arrival {
    pub fn new(q: usize, u: f64, now: f64) -> Self {
        Arrival {
            q,
            bucket_len: q,
            u,
            now,
        }
    }
}

/// Queue statistics a discipline exposes for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Probe {
    pub avg: Option<f64>,
    pub davg: Option<f64>,
    pub mid_th: Option<f64>,
    /// Current drop probability for disciplines that keep one (PI, REM, ARED's max_p).
    pub p: Option<f64>,
}

/// Link facts some disciplines need at construction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkContext {
    /// Transmission time of one average packet on the bottleneck, seconds.
    pub mean_tx_time: f64,
    pub seed: u64,
}

impl Default for LinkContext {
    fn default() -> Self {
        LinkContext {
            mean_tx_time: 8000.0 / 20e6,
            seed: 0,
        }
    }
}

pub trait Discipline: Send {
    fn kind(&self) -> DisciplineKind;

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict;

    /// Fixed-period sample clock tick with the instantaneous queue length.
    fn on_sample(&mut self, _q: usize, _now: f64) {}

    /// Period of the discipline's own control timer, if it has one.
    fn timer_interval(&self) -> Option<f64> {
        None
    }

    fn on_timer(&mut self, _q: usize, _now: f64) {}

    /// The queue has just drained completely.
    fn on_idle(&mut self, _now: f64) {}

    /// Number of physical queues the router must keep.
    fn buckets(&self) -> usize {
        1
    }

    fn classify(&mut self, _flow: usize, _now: f64) -> usize {
        0
    }

    /// Picks the bucket to serve next given the per-bucket lengths.
    fn next_bucket(&mut self, lens: &[usize]) -> Option<usize> {
        lens.iter().position(|&n| n > 0)
    }

    fn probe(&self) -> Probe {
        Probe::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DisciplineKind {
    Aqmrd,
    Red,
    AdaptiveRed,
    Tred,
    Rem,
    Pi,
    Sfq,
    DropTail,
}

impl DisciplineKind {
    pub const ALL: [DisciplineKind; 8] = [
        DisciplineKind::Aqmrd,
        DisciplineKind::Red,
        DisciplineKind::AdaptiveRed,
        DisciplineKind::Tred,
        DisciplineKind::Rem,
        DisciplineKind::Pi,
        DisciplineKind::Sfq,
        DisciplineKind::DropTail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DisciplineKind::Aqmrd => "aqmrd",
            DisciplineKind::Red => "red",
            DisciplineKind::AdaptiveRed => "ared",
            DisciplineKind::Tred => "tred",
            DisciplineKind::Rem => "rem",
            DisciplineKind::Pi => "pi",
            DisciplineKind::Sfq => "sfq",
            DisciplineKind::DropTail => "droptail",
        }
    }

    /// Human label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            DisciplineKind::Aqmrd => "AQMRD",
            DisciplineKind::Red => "RED",
            DisciplineKind::AdaptiveRed => "Adaptive-RED",
            DisciplineKind::Tred => "TRED",
            DisciplineKind::Rem => "REM",
            DisciplineKind::Pi => "PI",
            DisciplineKind::Sfq => "SFQ",
            DisciplineKind::DropTail => "DropTail",
        }
    }

    pub fn build(self, params: &GatewayParams, link: &LinkContext) -> Result<Box<dyn Discipline>> {
        params.validate()?;
        Ok(match self {
            DisciplineKind::Aqmrd => Box::new(Aqmrd::new(*params)?),
            DisciplineKind::Red => Box::new(Red::new(*params, link.mean_tx_time)),
            DisciplineKind::AdaptiveRed => Box::new(AdaptiveRed::new(*params, link.mean_tx_time)),
            DisciplineKind::Tred => Box::new(Tred::new(*params, link.mean_tx_time)),
            DisciplineKind::Rem => {
                let rem = RemParams {
                    capacity_pps: 1.0 / link.mean_tx_time,
                    ..RemParams::default()
                };
                Box::new(Rem::new(params.buffer_capacity, rem))
            }
            DisciplineKind::Pi => Box::new(Pi::new(params.buffer_capacity, PiParams::default())),
            DisciplineKind::Sfq => Box::new(Sfq::new(
                params.buffer_capacity,
                SfqParams {
                    seed: link.seed,
                    ..SfqParams::default()
                },
            )),
            DisciplineKind::DropTail => Box::new(DropTail::new(params.buffer_capacity)),
        })
    }
}

impl fmt::Display for DisciplineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisciplineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Ok(match norm.as_str() {
            "aqmrd" => DisciplineKind::Aqmrd,
            "red" => DisciplineKind::Red,
            "ared" | "adaptivered" => DisciplineKind::AdaptiveRed,
            "tred" => DisciplineKind::Tred,
            "rem" => DisciplineKind::Rem,
            "pi" => DisciplineKind::Pi,
            "sfq" => DisciplineKind::Sfq,
            "droptail" | "fifo" => DisciplineKind::DropTail,
            _ => return Err(Error::config("scheme", format!("unknown discipline `{s}`"))),
        })
    }
}

/// Count-corrected drop probability `p_b / (1 - count * p_b)`, saturating at 1.
///
/// Negative counts (the "not in the band" marker) contribute nothing.
pub fn effective_drop_prob(p_b: f64, count: i64) -> f64 {
    let n = count.max(0) as f64;
    let denom = 1.0 - n * p_b;
    if denom <= 0.0 {
        return 1.0;
    }
    (p_b / denom).clamp(0.0, 1.0)
}

/// Bernoulli trial with the count correction applied.
///
/// `count` is the number of in-band arrivals admitted since the last early
/// drop; it is reset to 0 by a drop and incremented otherwise. With a
/// constant `p_b` the gap between drops is uniform on `1..=ceil(1/p_b)`.
pub(crate) fn counted_trial(p_b: f64, count: &mut i64, u: f64) -> Verdict {
    let p_a = effective_drop_prob(p_b, *count);
    let v = Verdict::trial(p_a, u);
    if v.is_drop() {
        *count = 0;
    } else {
        *count = count.saturating_add(1).max(0);
    }
    v
}
