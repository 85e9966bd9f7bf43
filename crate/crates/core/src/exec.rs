//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature the policy defaults to [`Policy::Parallel`] and
//! loops run on the rayon global pool; [`Policy::Sequential`] (or building
//! without the feature) runs the same closures on the calling thread. Loop
//! bodies write to disjoint outputs, so both policies produce bit-identical
//! results.

use std::sync::atomic::{AtomicU8, Ordering};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CMMOM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Sequential,
    Parallel,
}

const SEQ: u8 = 1;
const PAR: u8 = 2;

static POLICY: AtomicU8 = AtomicU8::new(if cfg!(feature = "parallel") { PAR } else { SEQ });

pub fn set_policy(policy: Policy) {
    let v = match policy {
        Policy::Sequential => SEQ,
        Policy::Parallel => PAR,
    };
    POLICY.store(v, Ordering::Relaxed);
}

/// Current policy. Always sequential when built without `parallel`.
pub fn policy() -> Policy {
    if cfg!(feature = "parallel") && POLICY.load(Ordering::Relaxed) == PAR {
        Policy::Parallel
    } else {
        Policy::Sequential
    }
}

/// Configure the rayon global pool from `CMMOM_THREADS`. Returns the thread
/// cap that was applied, if any. Calling it more than once is harmless.
pub fn init_from_env() -> Option<usize> {
    let n = std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()?;
    let n = n.max(1);
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if n == 1 {
        set_policy(Policy::Sequential);
    }
    Some(n)
}

/// faer parallelism matching the current policy.
pub fn faer_par() -> faer::Par {
    match policy() {
        Policy::Sequential => faer::Par::Seq,
        #[cfg(feature = "parallel")]
        Policy::Parallel => faer::Par::rayon(0),
        #[cfg(not(feature = "parallel"))]
        Policy::Parallel => faer::Par::Seq,
    }
}

/// `(0..n).map(f).collect()` under the current policy.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match policy() {
        #[cfg(feature = "parallel")]
        Policy::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible variant of [`map_indexed`]; the first error in index order wins.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

/// Apply `f` to each mutable chunk of `data` (length `chunk`), passing the
/// chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    match policy() {
        #[cfg(feature = "parallel")]
        Policy::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
        }
        _ => data
            .chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c)),
    }
}
