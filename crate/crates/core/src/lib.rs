pub mod error;
pub mod experiments;
pub mod lp_metrics;
pub mod numerics;
pub mod observables;
pub mod qm_metrics;
pub mod systems;

pub use error::{Error, Result};
