//! Proportional-integral AQM controller.

use super::{Arrival, Discipline, DisciplineKind, Probe, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiParams {
    pub a: f64,
    pub b: f64,
    /// Sampling frequency, Hz.
    pub freq: f64,
    pub q_ref: f64,
}

impl Default for PiParams {
    fn default() -> Self {
        PiParams {
            a: 1.822e-5,
            b: 1.816e-5,
            freq: 160.0,
            q_ref: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pi {
    pub params: PiParams,
    capacity: usize,
    pub p: f64,
    pub q_prev: f64,
}

impl Pi {
    pub fn new(capacity: usize, params: PiParams) -> Self {
        Pi {
            q_prev: params.q_ref,
            params,
            capacity,
            p: 0.0,
        }
    }

    pub fn update(&mut self, q: f64) {
        let PiParams { a, b, q_ref, .. } = self.params;
        self.p = (self.p + a * (q - q_ref) - b * (self.q_prev - q_ref)).clamp(0.0, 1.0);
        self.q_prev = q;
    }
}

impl Discipline for Pi {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Pi
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        Verdict::trial(self.p, arrival.u).with_overflow(arrival.q >= self.capacity)
    }

    fn timer_interval(&self) -> Option<f64> {
        Some(1.0 / self.params.freq)
    }

    fn on_timer(&mut self, q: usize, _now: f64) {
        self.update(q as f64);
    }

    fn probe(&self) -> Probe {
        Probe {
            p: Some(self.p),
            ..Probe::default()
        }
    }
}
