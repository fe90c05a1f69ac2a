// comparisons like `!(h > 0.0)` reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod cascade;
pub mod error;
pub mod family;
pub mod io;
pub mod persistence;
pub mod lowdisc;
pub mod poly;
pub mod renorm1d;
pub mod renorm_nd;
pub mod series;

pub use error::{Error, Result};
