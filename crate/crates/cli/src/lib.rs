//! Command-line front end and HTTP evaluation service for the ConnectFour
//! solver in `c4-core`.

pub mod args;
pub mod commands;
pub mod service;
