//! Bounded worker pool for embarrassingly parallel replicate maps.
//!
//! Results are reassembled in input order and every work item owns a
//! seed derived from its index, so the output is byte-identical no
//! matter how many workers run.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker cap: `CVCI_THREADS` when set to a positive integer, otherwise
/// the machine's available parallelism, capped at 8.
pub fn worker_count() -> usize {
    if let Ok(raw) = std::env::var("CVCI_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

/// Apply `f` to every index in `0..n` on up to `workers` threads and
/// return the results in index order.
pub fn parallel_map<R, F>(n: usize, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                results.lock().expect("worker poisoned the result lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("worker poisoned the result lock")
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}
