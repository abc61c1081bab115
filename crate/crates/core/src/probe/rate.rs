//! Global send pacing.
//!
//! A strict sliding-window limiter: at most `max_per_window` acquisitions in
//! any window of the configured length, enforced by retiring timestamps. A
//! token bucket would allow a burst of up to twice the cap across a window
//! boundary, which the probe engine's rate contract does not permit.
//!
//! Enforcement runs over a slightly padded window. At a full cap the
//! limiter would otherwise space admissions exactly one window apart, and
//! scheduling jitter between claiming a slot and the datagram leaving the
//! socket could then squeeze an observed send past the nominal boundary.
//! The pad keeps observed send times under the cap, at the price of a few
//! percent of throughput.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

pub struct RateLimiter {
    max_per_window: usize,
    window: Duration,
    state: Mutex<VecDeque<Instant>>,
    wakeup: Condvar,
}

impl RateLimiter {
    pub fn new(max_per_window: u32, window: Duration) -> Self {
        let pad = (window / 20).max(Duration::from_millis(10));
        RateLimiter {
            max_per_window: max_per_window.max(1) as usize,
            window: window + pad,
            state: Mutex::new(VecDeque::new()),
            wakeup: Condvar::new(),
        }
    }

    /// Per-second convenience constructor.
    pub fn per_second(rate: u32) -> Self {
        RateLimiter::new(rate, Duration::from_secs(1))
    }

    /// Block until a send slot is available and claim it, returning the
    /// claim time. The caller sends immediately after, so the claim times
    /// are the paced send times.
    pub fn acquire(&self) -> Instant {
        let mut times = self.state.lock().unwrap();
        loop {
            let now = Instant::now();
            while let Some(front) = times.front() {
                if now.duration_since(*front) >= self.window {
                    times.pop_front();
                } else {
                    break;
                }
            }
            if times.len() < self.max_per_window {
                times.push_back(now);
                self.wakeup.notify_one();
                return now;
            }
            let wait = self.window - now.duration_since(*times.front().unwrap());
            let (guard, _) = self.wakeup.wait_timeout(times, wait).unwrap();
            times = guard;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn never_exceeds_cap_in_any_sliding_window() {
        let cap = 20u32;
        let window = Duration::from_millis(100);
        let limiter = Arc::new(RateLimiter::new(cap, window));

        let mut stamps: Vec<Instant> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| s.spawn(|| (0..30).map(|_| limiter.acquire()).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        stamps.sort();
        assert_eq!(stamps.len(), 120);
        for (i, start) in stamps.iter().enumerate() {
            let in_window = stamps[i..]
                .iter()
                .take_while(|t| t.duration_since(*start) < window)
                .count();
            assert!(
                in_window <= cap as usize,
                "{in_window} sends within one window starting at index {i}"
            );
        }
    }
}
