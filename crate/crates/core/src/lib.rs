pub mod caps;
pub mod complexity;
pub mod dependence;
pub mod error;
pub mod exec;
pub mod fm;
pub mod ir;
pub mod linalg;
pub mod lp;
pub mod polyhedra;
pub mod scheduling;
pub mod simplify;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rat = num_rational::BigRational;
pub type Int = num_bigint::BigInt;
