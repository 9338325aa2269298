//! Stochastic fair queueing.
//!
//! Flows hash into a fixed set of buckets, each holding an equal share of the
//! buffer; the link serves non-empty buckets round-robin, one packet per
//! visit. The hash salt is re-drawn every `perturb_period` seconds.

use super::{Arrival, Discipline, DisciplineKind, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfqParams {
    pub buckets: usize,
    pub perturb_period: f64,
    pub seed: u64,
}

impl Default for SfqParams {
    fn default() -> Self {
        SfqParams {
            buckets: 16,
            perturb_period: 5.0,
            seed: 0,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone)]
pub struct Sfq {
    params: SfqParams,
    capacity: usize,
    per_bucket: usize,
    epoch: u64,
    salt: u64,
    cursor: usize,
}

impl Sfq {
    pub fn new(capacity: usize, params: SfqParams) -> Self {
        let buckets = params.buckets.max(1);
        Sfq {
            params: SfqParams { buckets, ..params },
            capacity,
            per_bucket: (capacity / buckets).max(1),
            epoch: 0,
            salt: splitmix64(params.seed),
            cursor: 0,
        }
    }

    pub fn per_bucket_limit(&self) -> usize {
        self.per_bucket
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    fn refresh_salt(&mut self, now: f64) {
        let epoch = if self.params.perturb_period > 0.0 {
            (now / self.params.perturb_period).floor().max(0.0) as u64
        } else {
            0
        };
        if epoch != self.epoch {
            self.epoch = epoch;
            self.salt = splitmix64(self.params.seed ^ splitmix64(epoch));
        }
    }
}

impl Discipline for Sfq {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Sfq
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        let full = arrival.q >= self.capacity || arrival.bucket_len >= self.per_bucket;
        Verdict::ENQUEUE.with_overflow(full)
    }

    fn buckets(&self) -> usize {
        self.params.buckets
    }

    fn classify(&mut self, flow: usize, now: f64) -> usize {
        self.refresh_salt(now);
        (splitmix64(flow as u64 ^ self.salt) % self.params.buckets as u64) as usize
    }

    fn next_bucket(&mut self, lens: &[usize]) -> Option<usize> {
        let n = lens.len();
        for step in 0..n {
            let b = (self.cursor + step) % n;
            if lens[b] > 0 {
                self.cursor = (b + 1) % n;
                return Some(b);
            }
        }
        None
    }
}
