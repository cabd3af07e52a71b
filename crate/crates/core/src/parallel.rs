//! Execution mode for the independent row-block loops.
//!
//! Work items write to disjoint outputs and each item is computed the same
//! way in either mode, so results are bitwise identical regardless of mode or
//! thread count. Without the `parallel` feature, `Parallel` runs sequentially.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this mode will actually use worker threads.
    pub fn is_threaded(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Runs `f` on every item, stopping at the first error.
pub(crate) fn try_for_each<I, T, E, F>(exec: Execution, mut items: I, f: F) -> Result<(), E>
where
    I: Iterator<Item = T> + Send,
    T: Send,
    E: Send,
    F: Fn(T) -> Result<(), E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::iter::{ParallelBridge, ParallelIterator};
        return items.par_bridge().try_for_each(f);
    }
    let _ = exec;
    items.try_for_each(f)
}
