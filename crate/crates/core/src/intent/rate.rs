use crate::message::{Nanos, NANOS_PER_SECOND};

/// Decides when a headset pose sample is due at a fixed rate.
///
/// Samples fall at `start + k * period`. A rate change takes effect from the
/// sample after the last one emitted.
#[derive(Debug, Clone)]
pub struct PoseRateGate {
    period: Nanos,
    next_due: Option<Nanos>,
    last_emitted: Option<Nanos>,
}

fn period_for(rate_hz: f64) -> Nanos {
    (NANOS_PER_SECOND / rate_hz).round().max(1.0) as Nanos
}

impl PoseRateGate {
    pub fn new(rate_hz: f64) -> Self {
        Self { period: period_for(rate_hz), next_due: None, last_emitted: None }
    }

    pub fn period(&self) -> Nanos {
        self.period
    }

    pub fn is_running(&self) -> bool {
        self.next_due.is_some()
    }

    /// Starts streaming with the first sample due at `at`. No-op if running.
    pub fn start(&mut self, at: Nanos) {
        if self.next_due.is_none() {
            self.next_due = Some(at);
        }
    }

    pub fn set_rate(&mut self, rate_hz: f64) {
        self.period = period_for(rate_hz);
        if let Some(last) = self.last_emitted {
            self.next_due = Some(last + self.period);
        }
    }

    pub fn next_due(&self) -> Option<Nanos> {
        self.next_due
    }

    /// Pops the next sample stamp if it is due by `now`.
    pub fn take_due(&mut self, now: Nanos) -> Option<Nanos> {
        let due = self.next_due.filter(|d| *d <= now)?;
        self.last_emitted = Some(due);
        self.next_due = Some(due + self.period);
        Some(due)
    }
}
