//! Library half of the `entrograph` binary, shared with its integration tests.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod families;
pub mod output;
