use alloc::vec::Vec;

/// Runs independent jobs `0..len` and returns their results in index order.
///
/// Implementations may run jobs concurrently, but the returned vector must be
/// ordered by job index so that every reduction downstream is deterministic.
pub trait Executor: Sync {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(job).collect()
    }
}

impl<E: Executor> Executor for &E {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map(len, job)
    }
}
