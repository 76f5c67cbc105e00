//! Time sources.
//!
//! Every component that paces requests or stamps records takes a [`Clock`]
//! so that fixture runs can substitute [`SimulatedClock`] and stay both fast
//! and reproducible.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;

    fn sleep_ms(&self, ms: u64);

    fn sleep_until_ms(&self, deadline: u64) {
        let now = self.now_ms();
        if deadline > now {
            self.sleep_ms(deadline - now);
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

/// Virtual time: sleeping advances the clock instantly.
#[derive(Debug)]
pub struct SimulatedClock {
    now: AtomicU64,
}

impl SimulatedClock {
    pub fn new(start_ms: u64) -> Self {
        Self {
            now: AtomicU64::new(start_ms),
        }
    }

    pub fn advance(&self, ms: u64) {
        self.now.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Default for SimulatedClock {
    /// 2016-01-26T00:00:00Z.
    fn default() -> Self {
        Self::new(1_453_766_400_000)
    }
}

impl Clock for SimulatedClock {
    fn now_ms(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_ms(&self, ms: u64) {
        self.advance(ms);
    }

    fn sleep_until_ms(&self, deadline: u64) {
        self.now.fetch_max(deadline, Ordering::SeqCst);
    }
}
