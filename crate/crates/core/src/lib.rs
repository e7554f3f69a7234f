//! Deterministic, discrete-time, rate-coded self-organizing network simulator.
//!
//! The crate is `no_std` with `alloc`. All floating point transcendental
//! functions go through `libm` so trajectories are bit-identical across
//! targets.
//!
//! Module map:
//!
//! - [`network`]: the network data model and the synchronous update loop.
//! - [`plasticity`]: co-firing association, temporally asymmetric
//!   strengthening/depression, short-term decay and consolidation.
//! - [`competition`]: lateral inhibition groups resolved by winner-take-all.
//! - [`sequence`]: sequence training and recall, object circuits, recognition.
//! - [`language`]: grounded lexicon, sentence patterns and generation.
//! - [`logic`]: IMP/NOT/FALSE rules as subgraphs, inference, shortcuts.
//! - [`topology`]: sandglass networks, logic distance, influence and kernels.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod competition;
pub mod config;
pub mod error;
pub mod language;
pub mod logic;
pub mod network;
pub mod plasticity;
pub mod sequence;
pub mod topology;

pub use config::Config;
pub use error::{Error, Result};
pub use network::{
    activation, DualTraceWeight, NetParams, Network, Neuron, NeuronId, NeuronKind, Probe,
    StateSnapshot, Synapse, SynapseId, TickReport,
};
