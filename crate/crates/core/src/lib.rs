//! Null-coframe calculus over 3-dimensional CR structures.
//!
//! Fields are evaluated pointwise as truncated Taylor jets; exterior
//! derivatives, connection forms and curvature are read off jet coefficients
//! instead of finite differences.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod checks;
pub mod crstruct;
pub mod curvature;
pub mod error;
pub mod exprlang;
pub mod forms;
pub mod jets;
pub mod lift;
pub mod linalg;
pub mod maxwell;
pub mod nullframe;
pub mod petrov;

pub use error::{GeomError, Result};
pub use exprlang::{parse, Expr, Expression};
pub use forms::{extract_coefficient, FormField, FormValue, ScalarField, Seeds};
pub use jets::{Jet, C64};
