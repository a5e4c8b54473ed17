//! Directed first passage percolation on layered Poisson point clouds.
//!
//! The environment is a Poisson process of unit intensity on `N x R^d`,
//! sampled inside a finite window. A path takes one point per layer starting
//! from the origin and pays `|jump|^alpha` per step; [`geodesic`] computes
//! exact minimizers, [`stats`] aggregates Monte Carlo batches, and
//! [`proofcheck`] hosts the black-face and tunneling-tube constructions.
//! [`experiment`] drives batch runs from a config file.

pub mod env;
pub mod error;
pub mod experiment;
pub mod geodesic;
pub mod proofcheck;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/black-faces.md")]
    mod black_faces {}
    #[doc = include_str!("../../../book/src/tunnels.md")]
    mod tunnels {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
