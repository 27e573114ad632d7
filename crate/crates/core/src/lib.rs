//! Continuous-state branching processes: mechanisms, flows, path and population
//! simulation, and a verification harness for the Eve property.

pub mod error;
pub mod flow;
pub mod grey;
pub mod mechanism;
pub mod numerics;
pub mod parallel;
pub mod paths;
pub mod population;
pub mod verify;

pub use error::{Error, Result};
pub use flow::FlowEvaluator;
