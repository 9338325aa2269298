//! Reno-style AIMD window for an always-backlogged source.
//!
//! Losses are signalled explicitly by the network; there are no
//! retransmission timers and sequence numbers are never reused.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcpParams {
    pub packet_size: u32,
    /// Window cap, packets. Twenty keeps a handful of sources below the
    /// 200-packet path capacity; load becomes heavy somewhere past N = 10.
    pub max_window: f64,
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
    /// Sources start uniformly within `[0, start_jitter]` seconds.
    pub start_jitter: f64,
}

impl Default for TcpParams {
    fn default() -> Self {
        TcpParams {
            packet_size: 1000,
            max_window: 20.0,
            initial_cwnd: 1.0,
            initial_ssthresh: 20.0,
            start_jitter: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub cwnd: f64,
    pub ssthresh: f64,
    pub in_flight: u32,
    /// Sequence number the next new packet will carry.
    pub next_seq: u64,
    pub highest_acked: Option<u64>,
    /// Highest sequence sent when the last window reduction happened.
    pub recovery_until_seq: Option<u64>,
    pub access_delay: f64,
}

impl FlowState {
    pub fn new(access_delay: f64, tcp: &TcpParams) -> Self {
        FlowState {
            cwnd: tcp.initial_cwnd.max(1.0),
            ssthresh: tcp.initial_ssthresh,
            in_flight: 0,
            next_seq: 0,
            highest_acked: None,
            recovery_until_seq: None,
            access_delay,
        }
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }

    pub fn can_send(&self) -> bool {
        (self.in_flight as f64) < self.cwnd
    }

    /// Window growth for one newly acknowledged packet.
    pub fn on_ack(&mut self, max_window: f64) {
        if self.in_slow_start() {
            self.cwnd += 1.0;
        } else {
            self.cwnd += 1.0 / self.cwnd;
        }
        self.cwnd = self.cwnd.min(max_window);
    }

    /// Halves the window at most once per window of data.
    pub fn on_loss(&mut self, lost_seq: u64) {
        if self.recovery_until_seq.is_some_and(|r| lost_seq <= r) {
            return;
        }
        self.ssthresh = (self.cwnd / 2.0).max(2.0);
        self.cwnd = self.ssthresh;
        self.recovery_until_seq = self.next_seq.checked_sub(1);
    }
}
