use std::marker::PhantomData;
use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::d2q9::Q;

/// Environment variable capping worker threads; `0` selects serial mode.
pub const THREADS_ENV: &str = "HLBM_THREADS";

/// How per-cell kernels are scheduled.
///
/// Cell updates have no cross-cell reductions, so serial and parallel runs
/// produce bitwise identical fields.
#[derive(Clone, Default)]
pub enum Execution {
    Serial,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with a fixed number of threads.
    Pool(Arc<ThreadPool>),
}

impl std::fmt::Debug for Execution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Execution::Serial => write!(f, "Serial"),
            Execution::Parallel => write!(f, "Parallel"),
            Execution::Pool(p) => write!(f, "Pool({})", p.current_num_threads()),
        }
    }
}

impl Execution {
    /// Reads [`THREADS_ENV`]: unset or unparsable means the global pool.
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(0) => Execution::Serial,
            Some(n) => Self::with_threads(n),
            None => Execution::Parallel,
        }
    }

    pub fn with_threads(n: usize) -> Self {
        if n == 0 {
            return Execution::Serial;
        }
        match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => Execution::Pool(Arc::new(pool)),
            Err(_) => Execution::Parallel,
        }
    }

    pub fn is_serial(&self) -> bool {
        matches!(self, Execution::Serial)
    }

    /// Calls `f` for every index in `0..n`.
    pub(crate) fn for_each_index<F>(&self, n: usize, f: F)
    where
        F: Fn(usize) + Sync + Send,
    {
        const MIN_LEN: usize = 256;
        match self {
            Execution::Serial => (0..n).for_each(f),
            Execution::Parallel => (0..n).into_par_iter().with_min_len(MIN_LEN).for_each(f),
            Execution::Pool(pool) => {
                pool.install(|| (0..n).into_par_iter().with_min_len(MIN_LEN).for_each(f))
            }
        }
    }
}

/// Shared write access to disjoint slots of a population buffer.
pub(crate) struct Scatter<'a> {
    ptr: *mut [f64; Q],
    len: usize,
    _marker: PhantomData<&'a mut [[f64; Q]]>,
}

unsafe impl Send for Scatter<'_> {}
unsafe impl Sync for Scatter<'_> {}

impl<'a> Scatter<'a> {
    pub(crate) fn new(buf: &'a mut [[f64; Q]]) -> Self {
        Self {
            ptr: buf.as_mut_ptr(),
            len: buf.len(),
            _marker: PhantomData,
        }
    }

    /// # Safety
    /// No two concurrent calls may target the same `(cell, q)` slot.
    #[inline(always)]
    pub(crate) unsafe fn write(&self, cell: usize, q: usize, value: f64) {
        debug_assert!(cell < self.len && q < Q);
        (*self.ptr.add(cell))[q] = value;
    }
}
