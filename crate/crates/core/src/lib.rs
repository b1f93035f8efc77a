//! Numerical toolkit for mappings of n-dimensional space: pointwise
//! dilatations, curve-family moduli, weighted annulus integrals, and
//! growth/singularity diagnostics, with a deterministic CLI on top.
//!
//! Layout:
//! - [`geometry`]: points, annuli, polylines, sphere quadrature, line integrals
//! - [`gallery`]: ready-made map handles (ring stretch, folding, inversion, ...)
//! - [`dilatation`]: Jacobians, inner/outer dilatations, L^q tail diagnostics
//! - [`integrals`]: sphere averages, weighted annulus bounds, mean-oscillation
//!   estimates
//! - [`modulus`]: discrete modulus solver with certified bounds, admissibility,
//!   pushforward inequality checks
//! - [`singularity`]: classification, growth envelopes, preimage counting
//! - [`config`], [`runner`], [`report`]: the CLI layer
//!
//! Everything numerical is deterministic: sampling uses structured or
//! low-discrepancy points, never shared RNG state, so identical inputs
//! produce identical outputs byte for byte.

pub mod error;
pub mod quad;
pub mod geometry;
pub mod gallery;
pub mod dilatation;
pub mod integrals;
pub mod parallel;
pub mod modulus;
pub mod singularity;
pub mod report;
pub mod config;
pub mod runner;

pub use error::{Error, Result};
