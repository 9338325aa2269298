//! RED and its ramp/adaptation variants.
//!
//! All three average the queue per arrival (Floyd–Jacobson style) and decay
//! the average across idle periods. They differ only in the shape of the
//! drop ramp between `min_th` and `max_th` and in whether `max_p` moves.

use super::{counted_trial, Arrival, Discipline, DisciplineKind, GatewayParams, Probe, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedState {
    pub avg: f64,
    pub count: i64,
    /// Time the queue last went idle, if it is idle now.
    pub idle_since: Option<f64>,
}

impl Default for RedState {
    fn default() -> Self {
        RedState {
            avg: 0.0,
            count: -1,
            idle_since: None,
        }
    }
}

/// Decays `avg` as if `floor(idle_duration / mean_tx_time)` empty-queue
/// arrivals had been averaged in.
pub fn red_idle_adjust(
    state: RedState,
    w_q: f64,
    idle_duration: f64,
    mean_tx_time: f64,
) -> RedState {
    if mean_tx_time.is_nan()
        || idle_duration.is_nan()
        || mean_tx_time <= 0.0
        || idle_duration <= 0.0
    {
        return state;
    }
    let m = (idle_duration / mean_tx_time).floor();
    RedState {
        avg: state.avg * (1.0 - w_q).powf(m),
        ..state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ramp {
    Linear,
    /// Quadratic in the lower third, linear in the middle third, inverted
    /// quadratic in the upper third. Continuous and monotone, meets the
    /// linear ramp at the section boundaries.
    ThreeSection,
}

impl Ramp {
    /// Base drop probability for `avg` in `[min_th, max_th)`.
    pub fn prob(self, avg: f64, params: &GatewayParams, max_p: f64) -> f64 {
        let frac = ((avg - params.min_th) / (params.max_th - params.min_th)).clamp(0.0, 1.0);
        let shape = match self {
            Ramp::Linear => frac,
            Ramp::ThreeSection => {
                if frac < 1.0 / 3.0 {
                    let v = 3.0 * frac;
                    v * v / 3.0
                } else if frac < 2.0 / 3.0 {
                    frac
                } else {
                    let v = 1.0 - (3.0 * frac - 2.0);
                    2.0 / 3.0 + (1.0 - v * v) / 3.0
                }
            }
        };
        (max_p * shape).clamp(0.0, 1.0)
    }
}

/// Shared per-arrival RED procedure.
fn red_arrival(
    state: &mut RedState,
    params: &GatewayParams,
    ramp: Ramp,
    max_p: f64,
    mean_tx_time: f64,
    arrival: &Arrival,
) -> Verdict {
    match state.idle_since.take() {
        Some(t0) if arrival.q == 0 => {
            *state = red_idle_adjust(*state, params.w_q, arrival.now - t0, mean_tx_time);
        }
        _ => {
            state.avg = (1.0 - params.w_q) * state.avg + params.w_q * arrival.q as f64;
        }
    }
    let verdict = if state.avg < params.min_th {
        state.count = -1;
        Verdict::ENQUEUE
    } else if state.avg < params.max_th {
        let p_b = ramp.prob(state.avg, params, max_p);
        counted_trial(p_b, &mut state.count, arrival.u)
    } else {
        state.count = 0;
        Verdict::early_drop(1.0)
    };
    verdict.with_overflow(arrival.q >= params.buffer_capacity)
}

#[derive(Debug, Clone)]
pub struct Red {
    params: GatewayParams,
    mean_tx_time: f64,
    ramp: Ramp,
    kind: DisciplineKind,
    pub state: RedState,
}

impl Red {
    pub fn new(params: GatewayParams, mean_tx_time: f64) -> Self {
        Red {
            params,
            mean_tx_time,
            ramp: Ramp::Linear,
            kind: DisciplineKind::Red,
            state: RedState::default(),
        }
    }
}

impl Discipline for Red {
    fn kind(&self) -> DisciplineKind {
        self.kind
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        red_arrival(
            &mut self.state,
            &self.params,
            self.ramp,
            self.params.max_p,
            self.mean_tx_time,
            arrival,
        )
    }

    fn on_idle(&mut self, now: f64) {
        self.state.idle_since = Some(now);
    }

    fn probe(&self) -> Probe {
        Probe {
            avg: Some(self.state.avg),
            ..Probe::default()
        }
    }
}

/// Three-section RED: the linear ramp replaced by [`Ramp::ThreeSection`].
#[derive(Debug, Clone)]
pub struct Tred(Red);

impl Tred {
    pub fn new(params: GatewayParams, mean_tx_time: f64) -> Self {
        let mut red = Red::new(params, mean_tx_time);
        red.ramp = Ramp::ThreeSection;
        red.kind = DisciplineKind::Tred;
        Tred(red)
    }

    pub fn state(&self) -> &RedState {
        &self.0.state
    }
}

impl Discipline for Tred {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Tred
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        self.0.on_arrival(arrival)
    }

    fn on_idle(&mut self, now: f64) {
        self.0.on_idle(now)
    }

    fn probe(&self) -> Probe {
        self.0.probe()
    }
}

/// RED whose `max_p` is tuned by AIMD every `interval` seconds to hold
/// `avg` inside the middle fifth of `[min_th, max_th]`.
#[derive(Debug, Clone)]
pub struct AdaptiveRed {
    params: GatewayParams,
    mean_tx_time: f64,
    pub state: RedState,
    pub max_p: f64,
    pub last_adapt: f64,
    pub interval: f64,
}

impl AdaptiveRed {
    pub const INTERVAL: f64 = 0.5;

    pub fn new(params: GatewayParams, mean_tx_time: f64) -> Self {
        AdaptiveRed {
            max_p: params.max_p,
            params,
            mean_tx_time,
            state: RedState::default(),
            last_adapt: 0.0,
            interval: Self::INTERVAL,
        }
    }

    pub fn target_band(&self) -> (f64, f64) {
        let span = self.params.max_th - self.params.min_th;
        (
            self.params.min_th + 0.4 * span,
            self.params.min_th + 0.6 * span,
        )
    }

    pub fn adapt(&mut self, now: f64) {
        let (lo, hi) = self.target_band();
        if self.state.avg > hi && self.max_p <= 0.5 {
            self.max_p += (self.max_p / 4.0).min(0.01);
        } else if self.state.avg < lo && self.max_p >= 0.01 {
            self.max_p *= 0.9;
        }
        self.last_adapt = now;
    }
}

impl Discipline for AdaptiveRed {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::AdaptiveRed
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        red_arrival(
            &mut self.state,
            &self.params,
            Ramp::Linear,
            self.max_p,
            self.mean_tx_time,
            arrival,
        )
    }

    fn timer_interval(&self) -> Option<f64> {
        Some(self.interval)
    }

    fn on_timer(&mut self, _q: usize, now: f64) {
        self.adapt(now);
    }

    fn on_idle(&mut self, now: f64) {
        self.state.idle_since = Some(now);
    }

    fn probe(&self) -> Probe {
        Probe {
            avg: Some(self.state.avg),
            p: Some(self.max_p),
            ..Probe::default()
        }
    }
}
