use super::{Arrival, Discipline, DisciplineKind, Verdict};

/// Drops only when the buffer is full.
#[derive(Debug, Clone)]
pub struct DropTail {
    capacity: usize,
}

impl DropTail {
    pub fn new(capacity: usize) -> Self {
        DropTail { capacity }
    }
}

impl Discipline for DropTail {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::DropTail
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        Verdict::ENQUEUE.with_overflow(arrival.q >= self.capacity)
    }
}
