//! Aggregation scheduling in the Token Network model.
//!
//! Every node of a graph starts with one token. A SEND moves one token to a
//! neighbor in `t_m` rounds and a COMPUTE merges two tokens held by a node in
//! `t_c` rounds. A schedule is complete when a single token remains.

pub mod approx;
pub mod brute;
pub mod error;
pub mod gen;
pub mod graph;
pub mod hardness;
pub mod optcomplete;
pub mod paths;
pub mod schedule;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use schedule::{Action, ActionKind, NetworkParams, Schedule};
pub use sim::{simulate, Token, TokenState};
pub use validate::{lower_bounds, trivial_upper_bound, validate_schedule, LowerBounds, ValidationReport};
