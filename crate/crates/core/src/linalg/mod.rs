//! Dense vectors, dual-indexed sparse matrices and an indexed max-heap.

mod dense;
mod heap;
mod market;
mod sparse;

pub use dense::{dot, norm_inf, norm_sq, DenseVector};
pub use heap::IndexedMaxHeap;
pub use market::{read_matrix_market, write_matrix_market, MarketSymmetry};
pub use sparse::SparseMatrix;
