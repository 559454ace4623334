//! Replication dispatch. Results always come back in stream order, so the
//! parallel and sequential paths produce identical output.

/// Evaluates `f(stream)` for `stream` in `streams`, in parallel when the
/// `parallel` feature is enabled.
pub fn map_streams<T, F>(streams: std::ops::Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_streams_parallel(streams, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_streams_sequential(streams, f)
    }
}

pub fn map_streams_sequential<T, F>(streams: std::ops::Range<u64>, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    streams.map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_streams_parallel<T, F>(streams: std::ops::Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    streams.into_par_iter().map(f).collect()
}

/// Sizes the global worker pool; `0` lets rayon choose. Has no effect without
/// the `parallel` feature or once the pool has been built.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v = map_streams(0..1000, |s| s * s);
        assert_eq!(v, (0..1000).map(|s| s * s).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let f = |s: u64| crate::noise::make_rng(9, s).normal();
        let a = map_streams_parallel(0..256, f);
        let b = map_streams_sequential(0..256, f);
        assert_eq!(a, b);
    }
}
