//! Independent reference implementations backing the test suites.
//!
//! Everything here deliberately takes the slow, obvious route — dense
//! matrices, exhaustive enumeration, plain projected gradient — so the
//! production solvers can be checked against code that shares none of their
//! structure.

pub mod data;
pub mod qp;

pub use data::{dense_gram, dense_pearson, random_dense, DenseData, DenseInstance};
pub use qp::{
    box_qp_objective, box_qp_pg, lambda_max, min_eig_dense, simplex_qp_enumerate,
    simplex_qp_objective, BoxQpOpts, BoxQpResult,
};
