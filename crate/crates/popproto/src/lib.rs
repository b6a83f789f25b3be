//! Simulator and protocol library for population protocols whose agents
//! expose only a constant-size message while keeping a richer internal
//! state.
//!
//! The crate is organized as a small model core (`core`), a random-scheduler
//! execution engine plus reachability oracle (`engine`, `reach`), a family
//! of protocol implementations (`toy`, `junta`, `counting`, `sce`, `balls`,
//! `wrap`, `broadcast`), and statistical validators (`analysis`).

pub mod analysis;
pub mod balls;
pub mod broadcast;
pub mod core;
pub mod engine;
pub mod reach;
pub mod counting;
pub mod junta;
pub mod sce;
pub mod tm;
pub mod toy;
pub mod wrap;
