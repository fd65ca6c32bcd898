use std::time::Duration;
use tokio::sync::Mutex;
use tokio::time::Instant;

/// Evenly spaced request slots: at most `per_minute` starts per minute,
/// shared by every clone of the owning `Arc`.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(per_minute: u32) -> Self {
        RateLimiter {
            interval: Duration::from_secs(60) / per_minute.max(1),
            next: Mutex::new(None),
        }
    }

    pub async fn acquire(&self) {
        let slot = {
            let mut next = self.next.lock().await;
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        tokio::time::sleep_until(slot).await;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test(start_paused = true)]
    async fn spaces_requests() {
        let rl = RateLimiter::per_minute(60);
        let start = Instant::now();
        for _ in 0..4 {
            rl.acquire().await;
        }
        assert_eq!(start.elapsed(), Duration::from_secs(3));
    }
}
