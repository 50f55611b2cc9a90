//! Local orbital integrals, chain-order matching and prime-geodesic counting
//! for Eichler-order subgroups of `SL_2(Z)` and unit groups of quaternion orders.

pub mod arith;
pub mod assembly;
pub mod chain;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod geodesic;
pub mod grid;
pub mod oracle;
pub mod padic;
pub mod report;

pub use error::{GeomatchError, Result};
