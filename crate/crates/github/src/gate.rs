//! Shared rate-limit budget.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::sync::Mutex;
use tokio::time::Instant;

/// Blocks callers until a known rate-limit reset has passed.
#[derive(Debug, Default)]
pub struct RateGate {
    reset_at: Mutex<Option<Instant>>,
}

impl RateGate {
    pub fn new() -> Self {
        Self::default()
    }

    /// Waits out a pending reset. Returns the time spent waiting.
    pub async fn wait(&self) -> Duration {
        let until = *self.reset_at.lock().await;
        match until {
            Some(t) if t > Instant::now() => {
                let d = t - Instant::now();
                tokio::time::sleep_until(t).await;
                d
            }
            _ => Duration::ZERO,
        }
    }

    /// Closes the gate until `reset_epoch` (seconds since the Unix epoch).
    pub async fn close_until_epoch(&self, reset_epoch: u64) {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let delay = Duration::from_secs(reset_epoch).saturating_sub(now);
        self.close_for(delay).await;
    }

    pub async fn close_for(&self, delay: Duration) {
        let until = Instant::now() + delay;
        let mut slot = self.reset_at.lock().await;
        if slot.is_none_or(|t| t < until) {
            *slot = Some(until);
        }
    }
}
