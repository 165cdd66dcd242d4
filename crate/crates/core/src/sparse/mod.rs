//! Sparse matrix storage, BLAS-1 style vector kernels, test-problem
//! generators and Matrix Market I/O.

mod csr;
mod generate;
mod mmio;
pub mod vector;

pub use csr::CsrMatrix;
pub use generate::{gen_log_diagonal, ones_rhs, uniform_rhs};
pub use mmio::{read_matrix_market, read_matrix_market_file, write_matrix_market};
pub use vector::DenseVector;
