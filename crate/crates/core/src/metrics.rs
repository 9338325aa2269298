//! Run counters, sampled traces and the derived performance measures.

/// One sample-clock observation of the bottleneck.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub q: usize,
    pub avg: f64,
    pub davg: Option<f64>,
    pub mid_th: Option<f64>,
}

/// Streaming mean/min/max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: u64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Summary {
    fn default() -> Self {
        Summary {
            n: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Summary {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    pub fn merge(&mut self, other: &Summary) {
        self.n += other.n;
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub duration: f64,
    /// Packets emitted by all sources.
    pub sent: u64,
    /// Packets that reached the router.
    pub arrivals: u64,
    pub drops: u64,
    /// Drops decided by the AQM law rather than by a full buffer.
    pub early_drops: u64,
    pub overflow_drops: u64,
    /// Packets whose bottleneck transmission completed.
    pub delivered: u64,
    pub delivered_bytes: u64,
    /// Sources' packets still on an access link, queued, or in service at the end.
    pub in_network_at_end: u64,
    /// Enqueue to end-of-transmission, seconds, per delivered packet.
    pub queuing_delay: Summary,
    /// Instantaneous queue length at each sample tick.
    pub q: Summary,
    /// Discipline's average queue size at each sample tick.
    pub avg: Summary,
    pub mid_th: Summary,
    /// Time the bottleneck spent transmitting, seconds.
    pub busy_time: f64,
    /// Largest queue ever observed at an arrival, packets.
    pub max_q: usize,
    pub trace: Option<Vec<TraceSample>>,
}

impl RunMetrics {
    pub fn record_sample(&mut self, sample: TraceSample) {
        self.q.push(sample.q as f64);
        self.avg.push(sample.avg);
        if let Some(m) = sample.mid_th {
            self.mid_th.push(m);
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push(sample);
        }
    }

    pub fn samples(&self) -> u64 {
        self.q.n
    }

    /// `sent == delivered + dropped + still in the network`.
    pub fn is_conserved(&self) -> bool {
        self.sent == self.delivered + self.drops + self.in_network_at_end
    }

    pub fn e_avg(&self) -> Option<f64> {
        self.avg.mean()
    }

    pub fn e_q(&self) -> Option<f64> {
        self.q.mean()
    }
}

/// Delivered bits per second of run time.
pub fn throughput(m: &RunMetrics) -> f64 {
    if m.duration > 0.0 {
        m.delivered_bytes as f64 * 8.0 / m.duration
    } else {
        0.0
    }
}

pub fn relative_throughput(m: &RunMetrics, bandwidth: f64) -> f64 {
    throughput(m) / bandwidth
}

/// Mean enqueue-to-departure time of delivered packets, seconds.
pub fn mean_queuing_delay(m: &RunMetrics) -> Option<f64> {
    m.queuing_delay.mean()
}

/// Arithmetic mean of a uniformly sampled trace.
pub fn time_avg(trace: &[f64]) -> Option<f64> {
    (!trace.is_empty()).then(|| trace.iter().sum::<f64>() / trace.len() as f64)
}

/// Percentage of router arrivals that were dropped.
pub fn loss_ratio(m: &RunMetrics) -> Option<f64> {
    (m.arrivals > 0).then(|| 100.0 * m.drops as f64 / m.arrivals as f64)
}

/// Sign convention for [`percent_change`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Change {
    /// Positive when the scheme is lower than the reference.
    Reduction,
    /// Positive when the scheme is higher than the reference.
    Increase,
}

pub fn percent_change(scheme: f64, reference: f64, sign: Change) -> Option<f64> {
    if reference == 0.0 || !reference.is_finite() || !scheme.is_finite() {
        return None;
    }
    Some(match sign {
        Change::Reduction => 100.0 * (reference - scheme) / reference,
        Change::Increase => 100.0 * (scheme - reference) / reference,
    })
}

/// Median of a non-empty slice, averaging the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    time_avg(values)
}
