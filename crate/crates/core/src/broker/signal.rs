use tokio::sync::watch;

/// Wake-up hint for a consumer of one topic.
///
/// The signal never carries data: it only reports that the log has grown
/// past the consumer's acknowledged position, and records still have to be
/// pulled with `fetch`. Several publishes may coalesce into one wake-up.
#[derive(Debug, Clone)]
pub struct ReadinessSignal {
    length: watch::Receiver<u64>,
    position: u64,
}

impl ReadinessSignal {
    pub(crate) fn new(length: watch::Receiver<u64>, position: u64) -> Self {
        Self { length, position }
    }

    /// Records that the consumer has fetched everything before `next_offset`.
    pub fn acknowledge(&mut self, next_offset: u64) {
        self.position = self.position.max(next_offset);
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// True while unfetched records exist.
    pub fn is_ready(&self) -> bool {
        *self.length.borrow() > self.position
    }

    /// Non-blocking wake-up check. Returns true at most once per batch of
    /// publishes, and only while unfetched records exist.
    pub fn try_wake(&mut self) -> bool {
        match self.length.has_changed() {
            Ok(true) => *self.length.borrow_and_update() > self.position,
            _ => false,
        }
    }

    /// Waits until unfetched records exist. Returns immediately if they
    /// already do.
    pub async fn ready(&mut self) {
        loop {
            if *self.length.borrow_and_update() > self.position {
                return;
            }
            if self.length.changed().await.is_err() {
                // The topic was dropped; nothing further will arrive.
                std::future::pending::<()>().await;
            }
        }
    }
}
