//! Sliding-window limit on request initiations.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Headroom added to the window so callers that timestamp a request a few
/// microseconds after `acquire` returns still observe the limit.
const MARGIN: Duration = Duration::from_millis(2);

/// Admits at most `limit` initiations in any window of `window` length.
#[derive(Debug)]
pub struct RateLimiter {
    limit: Option<usize>,
    window: Duration,
    starts: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(limit: Option<u32>, window: Duration) -> Self {
        RateLimiter {
            limit: limit.filter(|&l| l > 0).map(|l| l as usize),
            window,
            starts: Mutex::new(VecDeque::new()),
        }
    }

    /// `None` disables limiting.
    pub fn per_second(limit: Option<u32>) -> Self {
        Self::new(limit, Duration::from_secs(1))
    }

    pub fn unlimited() -> Self {
        Self::new(None, Duration::from_secs(1))
    }

    /// Blocks until another initiation fits in the window, then records it.
    pub fn acquire(&self) {
        let Some(limit) = self.limit else {
            return;
        };
        let span = self.window + MARGIN;
        loop {
            let wait = {
                let mut starts = self.starts.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                while starts.front().is_some_and(|&t| now.duration_since(t) >= span) {
                    starts.pop_front();
                }
                if starts.len() < limit {
                    starts.push_back(now);
                    return;
                }
                span - now.duration_since(starts[0])
            };
            thread::sleep(wait);
        }
    }
}
