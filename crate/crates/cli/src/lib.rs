//! Experiment driver for the recommendation-assisted spectrum access models.

pub mod campaign;
pub mod config;
pub mod output;
pub mod validate;
