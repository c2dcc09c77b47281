//! Command line front end and network transport for hoverlink.

pub mod commands;
pub mod server;
