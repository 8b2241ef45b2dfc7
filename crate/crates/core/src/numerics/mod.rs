//! Dense numerical kernel: matrices, special functions, small-matrix
//! spectral tools and seeded random streams.

pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod special;

pub use linalg::{
    condition_number_spd, inverse, solve, sym_eigen, sym_spectral_norm, Lu, SymEigen,
};
pub use matrix::{dot, kron, kron_vec, norm2, Matrix};
pub use rng::{gauss_sample, Rng, Stream};
pub use special::{erf, erfc, softmax};
