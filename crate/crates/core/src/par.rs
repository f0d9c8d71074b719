//! Worker-count setting and an order-preserving parallel map on scoped threads.

use std::sync::atomic::{AtomicUsize, Ordering};

static JOBS: AtomicUsize = AtomicUsize::new(0);

/// Worker count: the value given to [`set_jobs`], else `RELU_HP_JOBS`, else
/// the available parallelism.
pub fn jobs() -> usize {
    match JOBS.load(Ordering::Relaxed) {
        0 => std::env::var("RELU_HP_JOBS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&j| j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        j => j,
    }
}

pub fn set_jobs(j: usize) {
    JOBS.store(j, Ordering::Relaxed);
}

/// `items.map(f)` split into contiguous chunks across [`jobs`] threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let j = jobs().min(items.len());
    if j <= 1 || cfg!(target_arch = "wasm32") {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(j);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}
