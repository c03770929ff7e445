//! Data-parallel helpers. With the `parallel` feature disabled every helper
//! runs sequentially and produces identical results.

/// Operators smaller than this are applied on the calling thread.
pub const MIN_PARALLEL_DIM: usize = 4096;

/// Rows handed to one worker in the blocked matrix-vector kernel.
pub const ROW_BLOCK: usize = 512;

pub fn enabled() -> bool {
    cfg!(feature = "parallel")
}

pub(crate) fn worth_splitting(dim: usize) -> bool {
    enabled() && dim >= MIN_PARALLEL_DIM && current_threads() > 1
}

pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Maps `f` over `items`, in parallel when requested and available.
/// Output order always follows input order.
pub fn ordered_map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_order() {
        let xs: Vec<u64> = (0..200).collect();
        let seq = ordered_map(&xs, false, |x| x * x);
        let par = ordered_map(&xs, true, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[13], 169);
    }
}
