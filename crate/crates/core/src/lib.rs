//! Simulation laboratory for active attacks on the KLJN and VMG-KLJN
//! secure key exchangers.

pub mod circuit;
pub mod config;
pub mod defense;
pub mod error;
pub mod eve;
pub mod experiment;
pub mod noise;
pub mod report;
pub mod scheme;
pub mod validate;
pub mod wire;

pub use error::{Error, Result};
