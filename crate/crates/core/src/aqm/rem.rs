//! Random Exponential Marking.
//!
//! A link price integrates queue mismatch and rate mismatch every update
//! period; arrivals are dropped with probability `1 - phi^(-price)`.

use super::{Arrival, Discipline, DisciplineKind, Probe, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemParams {
    pub gamma: f64,
    pub alpha: f64,
    pub phi: f64,
    /// Target backlog, packets.
    pub q_ref: f64,
    /// Price update period, seconds.
    pub update_interval: f64,
    /// Bottleneck capacity, packets per second.
    pub capacity_pps: f64,
}

impl Default for RemParams {
    fn default() -> Self {
        RemParams {
            gamma: 0.001,
            alpha: 0.1,
            phi: 1.001,
            q_ref: 20.0,
            update_interval: 0.002,
            capacity_pps: 2500.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rem {
    pub params: RemParams,
    capacity: usize,
    pub price: f64,
    arrivals: u64,
}

impl Rem {
    pub fn new(capacity: usize, params: RemParams) -> Self {
        Rem {
            params,
            capacity,
            price: 0.0,
            arrivals: 0,
        }
    }

    pub fn drop_prob(&self) -> f64 {
        (1.0 - self.params.phi.powf(-self.price)).clamp(0.0, 1.0)
    }

    /// One price update with the backlog `q` and the arrivals counted since
    /// the previous update.
    pub fn update_price(&mut self, q: f64, arrivals: f64) {
        let p = &self.params;
        let rate_mismatch = arrivals - p.capacity_pps * p.update_interval;
        let queue_mismatch = p.alpha * (q - p.q_ref);
        self.price = (self.price + p.gamma * (queue_mismatch + rate_mismatch)).max(0.0);
    }
}

impl Discipline for Rem {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Rem
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        self.arrivals += 1;
        Verdict::trial(self.drop_prob(), arrival.u).with_overflow(arrival.q >= self.capacity)
    }

    fn timer_interval(&self) -> Option<f64> {
        Some(self.params.update_interval)
    }

    fn on_timer(&mut self, q: usize, _now: f64) {
        let arrivals = std::mem::take(&mut self.arrivals);
        self.update_price(q as f64, arrivals as f64);
    }

    fn probe(&self) -> Probe {
        Probe {
            p: Some(self.drop_prob()),
            ..Probe::default()
        }
    }
}
