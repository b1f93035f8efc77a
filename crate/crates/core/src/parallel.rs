//! Deterministic data parallelism: results land at their index, so the
//! output is bitwise identical no matter how many threads run.

/// Worker count: the CURVEMOD_THREADS environment variable when set to a
/// positive integer, otherwise the machine's available parallelism.
pub fn thread_count() -> usize {
    if let Ok(s) = std::env::var("CURVEMOD_THREADS") {
        if let Ok(k) = s.trim().parse::<usize>() {
            if k >= 1 {
                return k;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Evaluate f at 0..count across `threads` workers, each filling a
/// contiguous chunk of the output.
pub fn map_indexed_with<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, count.max(1));
    if threads <= 1 || count < 2 {
        return (0..count).map(f).collect();
    }
    let mut out: Vec<Option<T>> = Vec::with_capacity(count);
    out.resize_with(count, || None);
    let chunk = count.div_ceil(threads);
    std::thread::scope(|scope| {
        for (ti, slots) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                let start = ti * chunk;
                for (j, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(f(start + j));
                }
            });
        }
    });
    out.into_iter().map(|o| o.expect("every index is filled")).collect()
}

/// Evaluate f at 0..count with the configured worker count.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    map_indexed_with(count, thread_count(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_identical_across_thread_counts() {
        let f = |i: usize| (i as f64 * 0.37).sin() * (i as f64);
        let one = map_indexed_with(1000, 1, f);
        for threads in [2, 3, 7, 16] {
            let many = map_indexed_with(1000, threads, f);
            assert!(one.iter().zip(&many).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn small_and_empty_inputs_work() {
        assert_eq!(map_indexed_with(0, 4, |i| i), Vec::<usize>::new());
        assert_eq!(map_indexed_with(1, 4, |i| i * 2), vec![0]);
        assert_eq!(map_indexed_with(3, 100, |i| i), vec![0, 1, 2]);
    }

    #[test]
    fn env_override_is_respected() {
        std::env::set_var("CURVEMOD_THREADS", "3");
        assert_eq!(thread_count(), 3);
        std::env::set_var("CURVEMOD_THREADS", "not a number");
        assert!(thread_count() >= 1);
        std::env::remove_var("CURVEMOD_THREADS");
        assert!(thread_count() >= 1);
    }
}
