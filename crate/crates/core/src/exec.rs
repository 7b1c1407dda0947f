//! Bounded-concurrency dispatch and retry for backend requests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

/// Attempts per request and exponential backoff between them.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// `attempts` tries with no sleep in between.
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            initial_backoff: Duration::ZERO,
            multiplier: 1.0,
        }
    }

    /// Delay slept after failed attempt number `attempt` (0-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff.mul_f64(self.multiplier.powi(attempt as i32))
    }

    pub fn run<T, E>(&self, mut op: impl FnMut() -> Result<T, E>) -> Result<T, E> {
        let attempts = self.attempts.max(1);
        let mut attempt = 0;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if attempt + 1 >= attempts => return Err(e),
                Err(_) => {
                    let delay = self.backoff(attempt);
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                    attempt += 1;
                }
            }
        }
    }
}

/// Runs `f(i)` for every `i` in `range` with at most `max_in_flight` calls
/// outstanding. Results come back in index order whatever the completion
/// order was.
pub fn run_bounded<T, F>(range: std::ops::Range<usize>, max_in_flight: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let len = range.len();
    let workers = max_in_flight.max(1).min(len);
    if workers <= 1 {
        return range.map(f).collect();
    }
    let next = AtomicUsize::new(range.start);
    let end = range.end;
    let mut collected: Vec<(usize, T)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= end {
                            break;
                        }
                        local.push((i, f(i)));
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    collected.sort_unstable_by_key(|(i, _)| *i);
    collected.into_iter().map(|(_, v)| v).collect()
}

/// Dispatches a probe window of the first `max_in_flight` items before the
/// rest. If every probe request fails, the backend is treated as unreachable
/// and the last probe error is returned instead of running the remainder.
pub fn run_with_probe<T, E, F>(len: usize, max_in_flight: usize, f: F) -> Result<Vec<Result<T, E>>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let probe = max_in_flight.max(1).min(len);
    let mut results = run_bounded(0..probe, max_in_flight, &f);
    if probe > 0 && results.iter().all(Result::is_err) {
        return Err(results.pop().unwrap().err().unwrap());
    }
    results.extend(run_bounded(probe..len, max_in_flight, &f));
    Ok(results)
}
