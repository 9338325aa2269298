use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Packet;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A source's first transmission opportunity.
    FlowStart {
        flow: usize,
    },
    PacketArrivalAtRouter(Packet),
    DequeueComplete,
    AckArrivalAtSource {
        flow: usize,
        seq: u64,
        earliest: f64,
    },
    LossNotification {
        flow: usize,
        seq: u64,
    },
    SampleTick {
        index: u64,
    },
    Timer {
        index: u64,
    },
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    pub sequence_no: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, sequence_no) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.sequence_no.cmp(&self.sequence_no))
    }
}

/// Future-event list ordered by `(time, insertion order)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    last_popped: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= self.last_popped, "event scheduled in the past");
        let sequence_no = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event {
            time,
            sequence_no,
            kind,
        });
    }

    /// Pops the next event if it is due no later than `horizon`.
    pub fn pop_until(&mut self, horizon: f64) -> Option<Event> {
        if self.heap.peek()?.time > horizon {
            return None;
        }
        let ev = self.heap.pop()?;
        self.last_popped = ev.time;
        Some(ev)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter()
    }
}
