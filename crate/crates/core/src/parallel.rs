//! Deterministic fan-out over independent work items.
//!
//! Each item's value depends only on its index (replicates draw from
//! counter streams), so any scheduling produces the same vector; the
//! caller then reduces in index order, keeping float sums reproducible
//! across thread counts.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Map `0..count` through `f` using up to `threads` workers; the result
/// is ordered by index regardless of scheduling.
pub fn parallel_map<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut parts: Vec<Vec<(usize, T)>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= count {
                            return local;
                        }
                        local.push((i, f(i)));
                    }
                })
            })
            .collect();
        parts = handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect();
    });
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for part in parts {
        for (i, v) in part {
            slots[i] = Some(v);
        }
    }
    slots
        .into_iter()
        .map(|v| v.expect("every index computed"))
        .collect()
}
