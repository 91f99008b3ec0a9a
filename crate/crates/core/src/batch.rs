//! Order-preserving maps over independent cases. With the `parallel`
//! feature the cases run on the rayon pool; without it, or in
//! [`ExecMode::Sequential`], they run in order on the calling thread.
//! Results are identical in both modes because every case owns its inputs
//! and seeds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

impl ExecMode {
    /// Whether this mode actually fans out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// `items.map(f)`, in input order.
pub fn run_batch<T, R, F>(items: &[T], mode: ExecMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// `run_batch` over `0..n`.
pub fn run_indexed<R, F>(n: usize, mode: ExecMode, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let idx: Vec<usize> = (0..n).collect();
    run_batch(&idx, mode, |&i| f(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        let par = run_batch(&items, ExecMode::Parallel, f);
        let seq = run_batch(&items, ExecMode::Sequential, f);
        assert_eq!(par, seq);
        assert_eq!(seq[3], f(&3));
        assert_eq!(run_indexed(5, ExecMode::Parallel, |i| i * i), vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn sequential_mode_never_reports_parallel() {
        assert!(!ExecMode::Sequential.is_parallel());
        assert_eq!(ExecMode::Parallel.is_parallel(), cfg!(feature = "parallel"));
    }
}
