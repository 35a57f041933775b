//! Sequential / data-parallel execution switch.
//!
//! Batch workloads (ensembles of runs, batches of interface solves, the
//! colored finite-difference Jacobian) go through [`Exec`]. With the
//! `parallel` feature disabled every mode runs sequentially. Results never
//! depend on the mode: work items are independent and collected in order.

/// Execution mode for batch work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    /// Rayon thread pool when the `parallel` feature is on.
    Parallel,
}

impl Exec {
    /// Whether work will actually fan out to a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fills `out[i] = f(i)`.
    pub fn fill<R, F>(self, out: &mut [R], f: F)
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37).collect();
        let f = |x: &f64| (x.sin() * 1e3).exp2();
        let a = Exec::Sequential.map(&items, f);
        let b = Exec::Parallel.map(&items, f);
        assert_eq!(a, b);
        let mut c = vec![0.0; 1000];
        Exec::Parallel.fill(&mut c, |i| f(&items[i]));
        assert_eq!(a, c);
        assert_eq!(
            Exec::Parallel.map_range(10, |i| i * i),
            Exec::Sequential.map_range(10, |i| i * i)
        );
    }
}
