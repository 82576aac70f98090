//! Small dense kernels used by the DMD pipeline.

mod eig;
mod svd;

pub use eig::{eig, eig_real, schur, Eigen};
pub use svd::{thin_svd, SvdFactors, RANK_TOL};
