//! Wire formats and the replay harness behind the command-line tool.

pub mod replay;
pub mod wire;
