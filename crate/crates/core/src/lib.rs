//! Bernoulli shifts over free groups, executable at desk scale.
//!
//! The crate covers the combinatorial and measure-theoretic toolkit for
//! studying finitary codings between Bernoulli shifts
//! `F_ell ↷ ({1,…,m}^{F_ell}, μ_p)`:
//!
//! - [`free_group`]: reduced words, closed balls, the set `W_a` of words
//!   ending in a distinguished generator, and length-monotone enumeration
//!   bounds.
//! - [`prob`]: probability vectors, cylinder patterns and their exact
//!   measures, and lazily sampled configurations keyed by seed and
//!   coordinate.
//! - [`coding`]: finitary codes as tables or decision trees, per-point
//!   radii, window volumes `v_φ`, truncated `m_φ`/`a_φ`, and expected code
//!   length.
//! - [`automorphism`]: finitely supported coordinate permutations, the
//!   `L_{p,a}` and `H_C^±` predicates, and the exact weak-mixing product
//!   identity on cylinders.
//! - [`cocycle`]: the information cocycle in closed form and a harness for
//!   the cocycle equation.
//! - [`beta`]: the invariant `β_p(t) = Σ Pᵢᵗ` by closed form, exact limit,
//!   and Monte Carlo, plus pressure, restricted growth rates, and the
//!   entropy link.
//! - [`recovery`]: Newton's identities and simultaneous root finding, which
//!   reconstruct a vector (up to permutation) from its power sums.

pub mod automorphism;
pub mod beta;
pub mod cocycle;
pub mod coding;
pub mod error;
pub mod free_group;
pub mod prob;
pub mod recovery;

pub use error::{Error, Result};
pub use free_group::{ball, ball_cardinality, GenIndex, GroupElement, DEFAULT_CARDINALITY_CAP};
pub use prob::{Configuration, Pattern, ProbVector, Symbol};
