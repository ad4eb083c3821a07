//! Quasihyperbolic geometry and Sobolev density experiments on sampled
//! domains.
//!
//! The crate is organised bottom up: [`domain`] samples open sets and
//! provides the path graph, [`whitney`] builds dyadic Whitney
//! decompositions, [`qh`] measures quasihyperbolic distance and
//! hyperbolicity constants, [`decomposition`] and [`partition`] build the
//! core/boundary-layer splitting and its partition of unity,
//! [`approximation`] runs the density experiment and [`counterexample`]
//! implements the Cantor-type construction of a domain where density fails.

pub mod approximation;
pub mod counterexample;
pub mod decomposition;
pub mod domain;
pub mod error;
pub mod partition;
pub mod qh;
pub mod whitney;

pub use domain::{build_domain, pt2, pt3, DiscreteDomain, DomainSpec, Point};
pub use error::{Error, Result};
