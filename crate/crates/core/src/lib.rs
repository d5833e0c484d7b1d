//! Freight spot-market simulation in which container jobs learn, through a
//! shared Gaussian policy trained by REINFORCE, how much to bid for scarce
//! transport capacity.

pub mod carrier;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learner;
pub mod market;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
