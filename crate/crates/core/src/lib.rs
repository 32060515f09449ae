//! Detection of SoC timing side channels by unbounded property checking
//! over two instances of a netlist.

pub mod check;
pub mod classify;
pub mod cnf;
pub mod config;
pub mod demo;
pub mod encode;
pub mod error;
pub mod eval;
pub mod miter;
pub mod models;
pub mod netlist;
pub mod procedure;
pub mod sat;
pub mod stateset;
pub mod vcd;

pub use error::{Error, Result};
pub use netlist::{Netlist, NodeId};
