//! Seed-per-run Monte Carlo: run `i` draws from ChaCha8 stream `i` of the base seed,
//! so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator owned by run `run`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// `f(run, rng)` for every run, in run order.
#[cfg(feature = "parallel")]
pub fn map_runs<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(i, &mut run_rng(seed, i)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_runs<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    map_runs_sequential(n, seed, f)
}

/// The single-threaded reference for [`map_runs`].
pub fn map_runs_sequential<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(u64, &mut ChaCha8Rng) -> T,
{
    (0..n as u64).map(|i| f(i, &mut run_rng(seed, i))).collect()
}

/// Mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
