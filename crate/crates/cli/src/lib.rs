//! Command-line front end for the `dirac-numerov` solver.

pub mod args;
pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod manifest;
