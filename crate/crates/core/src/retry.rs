//! Bounded retry with exponential backoff for provider calls.

use std::future::Future;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        RetryPolicy {
            attempts: 1,
            ..Default::default()
        }
    }

    /// Delay before attempt `n + 1`, for `n >= 1`.
    pub fn backoff(&self, n: u32) -> Duration {
        self.initial_backoff.mul_f64(self.multiplier.powi(n.saturating_sub(1) as i32))
    }
}

/// Run `op` until it succeeds, fails with a non-retryable error, or the
/// attempts run out. Returns the last error.
pub async fn with_retry<T, E, F, Fut>(
    policy: &RetryPolicy,
    is_retryable: impl Fn(&E) -> bool,
    mut op: F,
) -> Result<T, E>
where
    F: FnMut(u32) -> Fut,
    Fut: Future<Output = Result<T, E>>,
    E: std::fmt::Display,
{
    let attempts = policy.attempts.max(1);
    let mut n = 1;
    loop {
        match op(n).await {
            Ok(v) => return Ok(v),
            Err(e) if n < attempts && is_retryable(&e) => {
                let delay = policy.backoff(n);
                tracing::warn!(attempt = n, error = %e, ?delay, "provider call failed, retrying");
                tokio::time::sleep(delay).await;
                n += 1;
            }
            Err(e) => return Err(e),
        }
    }
}
