//! Privacy-preserving common-neighbour computation across two graphs held by
//! different parties.
//!
//! The querier learns how many common neighbours two nodes share in the union
//! of both graphs. Two session modes are provided: one built on three
//! DDH-based private set intersection cardinality rounds, and one that
//! aggregates encrypted comparison matrices under exponential ElGamal.

pub mod bench;
pub mod graph;
pub mod group;
pub mod he;
pub mod leakage;
pub mod protocol;
pub mod psi_ca;
pub mod transport;
pub mod wire;

pub use graph::{Graph, NodeId};
pub use group::{GroupParams, ParamSet};
pub use protocol::{
    brute_force_cn, prepare_inputs, run_loopback, run_querier, run_responder, CnBreakdown,
    ProtocolError, QueryOutcome, QueryReport, QuerySpec, ResponderConfig,
};
pub use wire::{Message, Mode};
