//! Agent-based simulator of coupled genetic and cultural evolution.
//!
//! Agents forage for energy on a random geometric network of food sites.
//! Each agent carries two information stores. The genome is a long valid
//! path through the network, fixed at birth and recombined at reproduction.
//! The memome is an elite archive of day-length behavior programs
//! (memeplexes), one per starting site, seeded from the genome at birth and
//! then improved by individual learning and, in the full model, exchanged
//! between co-located agents.
//!
//! The two stores evolve at different tempos under different pressures; the
//! [`metrics`] module measures how their trajectories diverge, and
//! [`runner`] executes seeded, fully reproducible experiment batches.

pub mod config;
pub mod engine;
pub mod genetics;
pub mod memetics;
pub mod metrics;
pub mod network;
pub mod runner;
