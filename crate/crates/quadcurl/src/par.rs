//! Per-cell parallel map with results kept in cell order.

use crate::Result;

#[cfg(feature = "parallel")]
pub(crate) fn map_cells<T: Send>(cells: &[usize], f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    cells.par_iter().map(|&c| f(c)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_cells<T>(cells: &[usize], f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    cells.iter().map(|&c| f(c)).collect()
}
