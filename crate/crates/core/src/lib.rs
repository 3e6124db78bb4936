//! Online primal-dual embedding of virtual networks with time durations.
//!
//! The crate is `no_std` (it needs `alloc`). The main entry point is
//! [`engine::Engine`], which admits or rejects requests one at a time
//! using the oracles in [`oracles`]. [`offline`] holds exact reference
//! optima for small instances.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod engine;
pub mod lp;
pub mod offline;
pub mod oracles;
pub mod requests;
pub mod substrate;

pub use engine::{Decision, Engine, EngineConfig, EngineError, RejectReason};
pub use requests::{Embedding, RoutingModel, SlotSet, TrafficSpec, VNetRequest};
pub use substrate::{EdgeId, NodeId, ResourceId, SubstrateNetwork};
