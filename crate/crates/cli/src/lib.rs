//! Library surface of the valaro command-line tool: the command
//! implementations and the topographic-map rendering they use.

pub mod commands;
pub mod topomap;
