//! Entanglement of a finite block in the biased steady state of a
//! tight-binding chain with scatterers.
//!
//! Two independent routes are provided: exact diagonalization of the block's
//! correlation matrix ([`symbols`], [`exact`]) and closed-form asymptotics in
//! the block length ([`asymptotics`]). The [`cli`] module drives both over
//! parameter sweeps.

pub mod asymptotics;
pub mod cli;
pub mod exact;
pub mod scatter;
pub mod special;
pub mod symbols;
