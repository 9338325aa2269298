//! Deterministic discrete-event model of a dumbbell: `N` backlogged TCP-AIMD
//! sources on fast access links feeding one bottleneck router, whose far
//! side acknowledges every delivered packet.
//!
//! Only the bottleneck queues. Access links serialize each source's own
//! packets; ACKs travel back without queuing. A drop is reported to its
//! source one base RTT after it happens.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aqm::{Arrival, Discipline, DisciplineKind, GatewayParams, LinkContext};
use crate::error::{Error, Result};
use crate::metrics::{RunMetrics, TraceSample};

mod event;
mod tcp;

pub use event::{Event, EventKind, EventQueue};
pub use tcp::{FlowState, TcpParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// bits/s
    pub bottleneck_bandwidth: f64,
    /// One-way, seconds.
    pub bottleneck_prop_delay: f64,
    /// bits/s
    pub access_bandwidth: f64,
    /// Access propagation delays are drawn uniformly from this range, seconds.
    pub access_delay_min: f64,
    pub access_delay_max: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bottleneck_bandwidth: 20e6,
            bottleneck_prop_delay: 0.033,
            access_bandwidth: 100e6,
            access_delay_min: 0.004,
            access_delay_max: 0.010,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bottleneck_bandwidth),
            ("bottleneck_delay", self.bottleneck_prop_delay),
            ("access_bandwidth", self.access_bandwidth),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("{v} must be positive")));
            }
        }
        if !(self.access_delay_min >= 0.0 && self.access_delay_min <= self.access_delay_max) {
            return Err(Error::config(
                "access_delay",
                format!(
                    "bad range [{}, {}]",
                    self.access_delay_min, self.access_delay_max
                ),
            ));
        }
        Ok(())
    }

    /// Round-trip bandwidth-delay product in packets of `packet_size` bytes,
    /// using the mean access delay.
    pub fn bdp_packets(&self, packet_size: u32) -> f64 {
        let mean_access = 0.5 * (self.access_delay_min + self.access_delay_max);
        let rtt = 2.0 * (self.bottleneck_prop_delay + mean_access);
        self.bottleneck_bandwidth * rtt / (8.0 * packet_size as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub flow: usize,
    pub seq: u64,
    pub size: u32,
    pub birth_time: f64,
    pub enqueue_time: f64,
}

/// Everything needed to build one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_sources: usize,
    pub seed: u64,
    pub link: LinkParams,
    pub tcp: TcpParams,
    pub gateway: GatewayParams,
    pub discipline: DisciplineKind,
    /// Keep the full sample trace in the returned metrics.
    pub trace: bool,
}

impl SimConfig {
    pub fn new(discipline: DisciplineKind, n_sources: usize, seed: u64) -> Self {
        SimConfig {
            n_sources,
            seed,
            link: LinkParams::default(),
            tcp: TcpParams::default(),
            gateway: GatewayParams::default(),
            discipline,
            trace: false,
        }
    }
}

/// Builds the dumbbell with default TCP settings and a discipline chosen by name.
pub fn build_dumbbell(
    n_sources: usize,
    seed: u64,
    link: LinkParams,
    gateway: GatewayParams,
    discipline: &str,
) -> Result<Simulation> {
    let cfg = SimConfig {
        link,
        gateway,
        ..SimConfig::new(discipline.parse()?, n_sources, seed)
    };
    Simulation::new(&cfg)
}

pub struct Simulation {
    link: LinkParams,
    tcp: TcpParams,
    gateway: GatewayParams,
    discipline: Box<dyn Discipline>,
    flows: Vec<FlowState>,
    start_times: Vec<f64>,
    access_free_at: Vec<f64>,
    events: EventQueue,
    buckets: Vec<VecDeque<Packet>>,
    bucket_lens: Vec<usize>,
    q: usize,
    in_service: Option<Packet>,
    busy_since: f64,
    rng: ChaCha8Rng,
    monitor_avg: f64,
    pending_router_arrivals: u64,
    metrics: RunMetrics,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        if cfg.n_sources == 0 {
            return Err(Error::config("sources", "need at least one source"));
        }
        cfg.link.validate()?;
        cfg.gateway.validate()?;
        if cfg.tcp.packet_size == 0 {
            return Err(Error::config("packet_size", "must be positive"));
        }
        let tx_time = cfg.tcp.packet_size as f64 * 8.0 / cfg.link.bottleneck_bandwidth;
        let discipline = cfg.discipline.build(
            &cfg.gateway,
            &LinkContext {
                mean_tx_time: tx_time,
                seed: cfg.seed,
            },
        )?;

        let mut topo_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (lo, hi) = (cfg.link.access_delay_min, cfg.link.access_delay_max);
        let flows: Vec<FlowState> = (0..cfg.n_sources)
            .map(|_| {
                let d = if hi > lo {
                    topo_rng.gen_range(lo..=hi)
                } else {
                    lo
                };
                FlowState::new(d, &cfg.tcp)
            })
            .collect();
        let start_times = (0..cfg.n_sources)
            .map(|_| topo_rng.gen::<f64>() * cfg.tcp.start_jitter)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);

        let n_buckets = discipline.buckets();
        Ok(Simulation {
            link: cfg.link,
            tcp: cfg.tcp,
            gateway: cfg.gateway,
            discipline,
            access_free_at: vec![0.0; flows.len()],
            flows,
            start_times,
            events: EventQueue::new(),
            buckets: vec![VecDeque::new(); n_buckets],
            bucket_lens: vec![0; n_buckets],
            q: 0,
            in_service: None,
            busy_since: 0.0,
            rng,
            monitor_avg: 0.0,
            pending_router_arrivals: 0,
            metrics: RunMetrics {
                trace: cfg.trace.then(Vec::new),
                ..RunMetrics::default()
            },
        })
    }

    pub fn flows(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn discipline_kind(&self) -> DisciplineKind {
        self.discipline.kind()
    }

    fn tx_time(&self, size: u32) -> f64 {
        size as f64 * 8.0 / self.link.bottleneck_bandwidth
    }

    fn access_tx_time(&self, size: u32) -> f64 {
        size as f64 * 8.0 / self.link.access_bandwidth
    }

    /// Propagation plus serialization round trip for `flow`, without queuing.
    pub fn base_rtt(&self, flow: usize) -> f64 {
        let size = self.tcp.packet_size;
        2.0 * (self.flows[flow].access_delay + self.link.bottleneck_prop_delay)
            + self.tx_time(size)
            + self.access_tx_time(size)
    }

    /// Number of sample ticks a run of `duration` records.
    pub fn tick_count(&self, duration: f64) -> u64 {
        (duration / self.gateway.sample_interval).floor() as u64 + 1
    }

    /// Runs until simulated time reaches `duration` and returns the metrics.
    ///
    /// Fails if packet conservation or another engine invariant breaks.
    pub fn run(mut self, duration: f64) -> Result<RunMetrics> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::config(
                "duration",
                format!("{duration} must be positive"),
            ));
        }
        for flow in 0..self.flows.len() {
            self.events
                .schedule(self.start_times[flow], EventKind::FlowStart { flow });
        }
        self.events
            .schedule(0.0, EventKind::SampleTick { index: 0 });
        let last_tick = self.tick_count(duration) - 1;
        let timer = self.discipline.timer_interval().filter(|t| *t > 0.0);
        if let Some(iv) = timer {
            self.events.schedule(iv, EventKind::Timer { index: 1 });
        }

        while let Some(ev) = self.events.pop_until(duration) {
            let now = ev.time;
            match ev.kind {
                EventKind::FlowStart { flow } => self.try_send(flow, now),
                EventKind::PacketArrivalAtRouter(pkt) => self.router_arrival(pkt, now)?,
                EventKind::DequeueComplete => self.dequeue_complete(now),
                EventKind::AckArrivalAtSource {
                    flow,
                    seq,
                    earliest,
                } => {
                    if now < earliest {
                        return Err(Error::Invariant(format!(
                            "ack for flow {flow} seq {seq} at {now} precedes {earliest}"
                        )));
                    }
                    let f = &mut self.flows[flow];
                    f.in_flight -= 1;
                    f.highest_acked = Some(f.highest_acked.map_or(seq, |h| h.max(seq)));
                    f.on_ack(self.tcp.max_window);
                    self.try_send(flow, now);
                }
                EventKind::LossNotification { flow, seq } => {
                    let f = &mut self.flows[flow];
                    f.in_flight -= 1;
                    f.on_loss(seq);
                    self.try_send(flow, now);
                }
                EventKind::SampleTick { index } => {
                    self.sample(now);
                    if index < last_tick {
                        let next =
                            ((index + 1) as f64 * self.gateway.sample_interval).min(duration);
                        self.events
                            .schedule(next, EventKind::SampleTick { index: index + 1 });
                    }
                }
                EventKind::Timer { index } => {
                    self.discipline.on_timer(self.q, now);
                    if let Some(iv) = timer {
                        self.events.schedule(
                            (index + 1) as f64 * iv,
                            EventKind::Timer { index: index + 1 },
                        );
                    }
                }
            }
        }
        self.finish(duration)
    }

    fn finish(mut self, duration: f64) -> Result<RunMetrics> {
        if self.in_service.is_some() {
            self.metrics.busy_time += duration - self.busy_since;
        }
        let m = &mut self.metrics;
        m.duration = duration;
        m.in_network_at_end =
            self.pending_router_arrivals + self.q as u64 + u64::from(self.in_service.is_some());
        let counted = self
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::PacketArrivalAtRouter(_)))
            .count() as u64;
        if counted != self.pending_router_arrivals {
            return Err(Error::Invariant(format!(
                "{counted} packets on access links, expected {}",
                self.pending_router_arrivals
            )));
        }
        if !m.is_conserved() {
            return Err(Error::Invariant(format!(
                "conservation: sent {} != delivered {} + dropped {} + in network {}",
                m.sent, m.delivered, m.drops, m.in_network_at_end
            )));
        }
        Ok(self.metrics)
    }

    fn try_send(&mut self, flow: usize, now: f64) {
        let size = self.tcp.packet_size;
        let access_tx = self.access_tx_time(size);
        while self.flows[flow].can_send() {
            let f = &mut self.flows[flow];
            let seq = f.next_seq;
            f.next_seq += 1;
            f.in_flight += 1;
            let depart = self.access_free_at[flow].max(now) + access_tx;
            self.access_free_at[flow] = depart;
            let pkt = Packet {
                flow,
                seq,
                size,
                birth_time: now,
                enqueue_time: f64::NAN,
            };
            self.events.schedule(
                depart + f.access_delay,
                EventKind::PacketArrivalAtRouter(pkt),
            );
            self.pending_router_arrivals += 1;
            self.metrics.sent += 1;
        }
    }

    fn router_arrival(&mut self, mut pkt: Packet, now: f64) -> Result<()> {
        self.pending_router_arrivals -= 1;
        self.metrics.arrivals += 1;
        let bucket = self.discipline.classify(pkt.flow, now);
        let arrival = Arrival {
            q: self.q,
            bucket_len: self.bucket_lens[bucket],
            u: self.rng.gen::<f64>(),
            now,
        };
        self.metrics.max_q = self.metrics.max_q.max(self.q);
        let verdict = self.discipline.on_arrival(&arrival);
        if verdict.is_drop() {
            self.metrics.drops += 1;
            if verdict.overflow {
                self.metrics.overflow_drops += 1;
            } else {
                self.metrics.early_drops += 1;
            }
            let when = now + self.base_rtt(pkt.flow);
            self.events.schedule(
                when,
                EventKind::LossNotification {
                    flow: pkt.flow,
                    seq: pkt.seq,
                },
            );
            return Ok(());
        }
        pkt.enqueue_time = now;
        self.buckets[bucket].push_back(pkt);
        self.bucket_lens[bucket] += 1;
        self.q += 1;
        if self.q > self.gateway.buffer_capacity {
            return Err(Error::Invariant(format!(
                "queue {} exceeds capacity {}",
                self.q, self.gateway.buffer_capacity
            )));
        }
        if self.in_service.is_none() {
            self.start_service(now);
        }
        Ok(())
    }

    fn start_service(&mut self, now: f64) {
        let Some(b) = self.discipline.next_bucket(&self.bucket_lens) else {
            return;
        };
        let Some(pkt) = self.buckets[b].pop_front() else {
            return;
        };
        self.bucket_lens[b] -= 1;
        self.q -= 1;
        let done = now + self.tx_time(pkt.size);
        self.in_service = Some(pkt);
        self.busy_since = now;
        self.events.schedule(done, EventKind::DequeueComplete);
    }

    fn dequeue_complete(&mut self, now: f64) {
        let Some(pkt) = self.in_service.take() else {
            return;
        };
        let m = &mut self.metrics;
        m.delivered += 1;
        m.delivered_bytes += pkt.size as u64;
        m.busy_time += now - self.busy_since;
        m.queuing_delay.push(now - pkt.enqueue_time);

        let back = 2.0 * self.link.bottleneck_prop_delay + self.flows[pkt.flow].access_delay;
        let earliest = pkt.birth_time + self.base_rtt(pkt.flow) - 1e-12;
        self.events.schedule(
            now + back,
            EventKind::AckArrivalAtSource {
                flow: pkt.flow,
                seq: pkt.seq,
                earliest,
            },
        );
        if self.q > 0 {
            self.start_service(now);
        } else {
            self.discipline.on_idle(now);
        }
    }

    fn sample(&mut self, now: f64) {
        self.discipline.on_sample(self.q, now);
        let w = self.gateway.w_q;
        self.monitor_avg = (1.0 - w) * self.monitor_avg + w * self.q as f64;
        let probe = self.discipline.probe();
        self.metrics.record_sample(TraceSample {
            t: now,
            q: self.q,
            avg: probe.avg.unwrap_or(self.monitor_avg),
            davg: probe.davg,
            mid_th: probe.mid_th,
        });
    }
}
