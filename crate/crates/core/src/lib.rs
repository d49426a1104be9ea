//! Numerical experiments on the local Fourier uniformity of the Liouville
//! function: a bit-packed `λ` table, short exponential sums with certified
//! suprema over closed sets, Cantor-type frequency sets, correlation and
//! discrepancy statistics, and skew-product orbit averages.

pub mod correl;
pub mod discrepancy;
pub mod dynamics;
pub mod error;
pub mod expsum;
pub mod liouville;
pub mod numeric;
pub mod setlib;

pub use error::{Error, Result};
pub use liouville::{build_table, LiouvilleTable};
