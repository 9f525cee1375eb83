use alloc::vec::Vec;

/// Runs an indexed map over `0..len` and returns the results in index order.
///
/// Implementations may evaluate `f` concurrently but must return `out[i] = f(i)`.
/// All reductions in this crate happen after collection, in index order, so
/// the numerical result is independent of the executor.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
