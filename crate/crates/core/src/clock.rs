//! Time sources. Scenario runs use a [`LogicalClock`] that only moves when
//! told to; live services use a [`WallClock`] anchored at construction.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::message::Nanos;

pub trait Clock: Send + Sync {
    /// Nanoseconds since the clock's epoch. Never decreases.
    fn now(&self) -> Nanos;

    /// Blocks (wall) or jumps (logical) until `now() >= target`.
    fn wait_until(&self, target: Nanos);

    fn is_logical(&self) -> bool;
}

#[derive(Debug, Default)]
pub struct LogicalClock {
    now: AtomicU64,
}

impl LogicalClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&self, t: Nanos) {
        self.now.fetch_max(t, Ordering::SeqCst);
    }

    pub fn advance(&self, by: Nanos) {
        self.now.fetch_add(by, Ordering::SeqCst);
    }
}

impl Clock for LogicalClock {
    fn now(&self) -> Nanos {
        self.now.load(Ordering::SeqCst)
    }

    fn wait_until(&self, target: Nanos) {
        self.set(target);
    }

    fn is_logical(&self) -> bool {
        true
    }
}

#[derive(Debug)]
pub struct WallClock {
    start: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl WallClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now(&self) -> Nanos {
        self.start.elapsed().as_nanos() as Nanos
    }

    fn wait_until(&self, target: Nanos) {
        let now = self.now();
        if target > now {
            std::thread::sleep(Duration::from_nanos(target - now));
        }
    }

    fn is_logical(&self) -> bool {
        false
    }
}
