pub mod dataset;
pub mod error;
pub mod gp;
pub mod neighbors;
pub mod classic;
pub mod classify;
pub mod eval;
pub mod experiment;
