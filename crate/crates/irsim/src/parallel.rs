//! Trial-level parallelism.
//!
//! Monte-Carlo trials are embarrassingly parallel: each one seeds its own
//! RNG stream and touches only shared read-only state. `map_trials` fans the
//! trial index range out across a rayon pool when the `parallel` feature is
//! enabled and falls back to a plain loop otherwise. Results come back in
//! trial order either way, so any sequential reduction over them is
//! bitwise identical across worker counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over the trial indices `0..trials`, in parallel when available.
/// The output vector is ordered by trial index.
pub fn map_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Always-sequential variant, kept for benchmarking against the pool.
pub fn map_trials_sequential<T, F>(trials: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..trials).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let f = |t: u64| (t as f64).sqrt().sin();
        let a = map_trials(1000, f);
        let b = map_trials_sequential(1000, f);
        assert_eq!(a, b);
    }
}
