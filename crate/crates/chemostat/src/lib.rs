//! Analysis and optimal design of a two-tank chemostat in which the second
//! tank is coupled to the first by pure Fickian diffusion.
//!
//! The crate covers:
//! - growth kinetics ([`growth`]): Monod and tabulated concave laws,
//!   the production rate beta and its maximizer, the inverse volume map g;
//! - transient behavior ([`dynamics`]): the 4-D model, its V1 = 0 reduction,
//!   and an adaptive Runge-Kutta simulator;
//! - steady states ([`equilibria`]): washout and positive equilibria with
//!   spectral stability classification;
//! - the diffusion response ([`dmap`]): how the steady substrate levels move
//!   with the diffusion rate d, including the minimizing d when one exists;
//! - volume-optimal design ([`design`]): smallest total volume reaching a
//!   target output concentration, at fixed d and with d free.

pub mod cli;
pub mod design;
pub mod dmap;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod growth;
pub mod numeric;

pub use dynamics::{ChemostatConfig, SimOptions, State, Trajectory};
pub use error::{Error, Result};
pub use growth::GrowthModel;
