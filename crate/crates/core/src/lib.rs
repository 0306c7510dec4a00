// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupled;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fracop;
pub mod io;
pub mod params;
pub mod reaction;
pub mod state;
pub mod transients;
pub mod tridiag;
