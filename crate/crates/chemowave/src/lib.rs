//! Traveling waves and front dynamics of a 1-D attraction-repulsion
//! chemotaxis system with logistic growth.
//!
//! The crate is organized around six pieces:
//!
//! - [`constants`]: the kernel aggregates `m_bar`, `m_under`, `k` and their
//!   rate-weighted variants, by closed form and by a quadrature oracle;
//! - [`speed`]: the admissibility function `f`, the feasibility hypothesis,
//!   and the wave-speed window `(c_star, c_double_star)`;
//! - [`elliptic`]: the quasi-static chemical solves, by tridiagonal finite
//!   differences and by a Green's-function convolution oracle;
//! - [`wave`]: super/sub-solution envelopes, the monotone inner evolution,
//!   and the outer fixed point producing a traveling wave profile;
//! - [`sim`]: the time-dependent simulator with front tracking, global bound
//!   checks, stability experiments, and the sine comparison probe;
//! - [`cli`] / [`config`]: the command-line front end.
//!
//! [`verify`] hosts the self-contained verification suite run by
//! `chemowave verify` and by the `acceptance` test target.

pub mod cli;
pub mod config;
pub mod constants;
pub mod elliptic;
pub mod grid;
pub mod params;
pub mod quad;
pub mod report;
pub mod sim;
pub mod speed;
pub mod verify;
pub mod wave;

pub use grid::{Field, Grid1D};
pub use params::{ModelParams, Species};
