//! Rovibronic "ping-pong" population transfer along alternating chains of
//! ground and excited molecular states.
//!
//! Three dynamics tiers share one chain description: the closed-form SU(N)
//! pseudospin solution ([`pseudospin`]), the rotating-wave level equations
//! ([`rwa`]) and coupled-channel wavepacket propagation on a radial grid
//! ([`grid`]). They sit on a structure engine that solves vibrational levels
//! ([`dvr`]), evaluates dipole couplings and lifetimes ([`coupling`]) and
//! designs chains and pulse trains ([`chain`]). [`pipeline`] strings the
//! stages together from one configuration file.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for callers that do not need the choice.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate openblas_src;

pub mod chain;
pub mod config;
pub mod coupling;
pub mod dvr;
pub mod error;
pub mod grid;
pub mod io;
pub mod num;
pub mod pipeline;
pub mod potentials;
pub mod pseudospin;
pub mod rwa;
pub mod state;
pub mod synthetic;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
pub use num::Real;
pub use state::{ManifoldKey, StateId, Surface};

pub type Chain = chain::ChainSpec<f64>;
pub type Train = chain::PulseTrain<f64>;
pub type Pulse = chain::PulseSpec<f64>;
pub type Grid = dvr::RadialGrid<f64>;
pub type Level = dvr::VibrationalLevel<f64>;
pub type Levels = dvr::Manifold<f64>;
pub type System = potentials::ElectronicSystem<f64>;
pub type Maps = coupling::CouplingMaps<f64>;
pub type Trace = trace::PopulationTrace<f64>;
pub type Wavefunction = grid::ChannelWavefunction<f64>;

pub type Chain32 = chain::ChainSpec<f32>;
pub type Train32 = chain::PulseTrain<f32>;
pub type Grid32 = dvr::RadialGrid<f32>;
pub type System32 = potentials::ElectronicSystem<f32>;
pub type Trace32 = trace::PopulationTrace<f32>;
