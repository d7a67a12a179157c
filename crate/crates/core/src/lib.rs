pub mod error;
pub mod exec;
pub mod bounds_product;
pub mod bounds_sum;
pub mod cli;
pub mod metric;
pub mod numerics;
pub mod scenarios;
pub mod search;

pub use error::{Error, Result};
