//! Bounded exponential backoff with full jitter.

use std::thread;
use std::time::Duration;

use rand::Rng;

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total tries, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Retries without sleeping.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Upper bound of the sleep after failed attempt `attempt` (1-based).
    pub fn backoff_cap(&self, attempt: u32) -> Duration {
        let factor = 1u32 << attempt.saturating_sub(1).min(16);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    /// Runs `op` until it succeeds, fails permanently, or the budget is spent.
    /// Returns the last result and the number of attempts made.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ProviderError>,
    ) -> (Result<T, ProviderError>, u32) {
        let budget = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op() {
                Err(e) if e.is_transient() && attempt < budget => {
                    let cap = self.backoff_cap(attempt);
                    if !cap.is_zero() {
                        let jitter = rand::rng().random_range(0..=cap.as_millis() as u64);
                        thread::sleep(Duration::from_millis(jitter));
                    }
                    attempt += 1;
                }
                result => return (result, attempt),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_up_to_cap() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff_cap(1), Duration::from_millis(500));
        assert_eq!(p.backoff_cap(2), Duration::from_secs(1));
        assert_eq!(p.backoff_cap(10), Duration::from_secs(8));
    }

    #[test]
    fn stops_on_success_or_permanent_error() {
        let mut calls = 0;
        let (r, n) = RetryPolicy::immediate(5).run(|| {
            calls += 1;
            if calls < 3 {
                Err(ProviderError::Transient("x".into()))
            } else {
                Ok(calls)
            }
        });
        assert_eq!((r, n), (Ok(3), 3));

        let (r, n) = RetryPolicy::immediate(5).run::<()>(|| Err(ProviderError::Malformed("bad".into())));
        assert!(r.is_err());
        assert_eq!(n, 1);
    }
}
