//! # dbar-core
//!
//! Exact finite-volume machinery for transport distances and Gaussian
//! concentration bounds on lattice configuration spaces `S^Λ`, `Λ ⋐ ℤ^d`.
//!
//! The crate works with *dense tables*: a configuration space is a finite
//! volume together with a finite alphabet, functions and probability measures
//! are tables indexed by a mixed-radix ranking of configurations, and every
//! optimization (optimal transport, Lipschitz duals, saddle points) is solved
//! exactly by dense linear programming. This puts a hard cap on instance
//! sizes (`|S|^|Λ| ≤ 2^20`) but makes every reported number certifiable.
//!
//! ## What lives where
//!
//! - [`lattice`] — sites, volumes, configuration spaces, local functions,
//!   oscillations `δ_i f` and their `ℓ^q` seminorms, block sums/averages.
//! - [`measures`] — probability tables, i.i.d./Markov/Ising instance
//!   families, marginals, relative entropy and its variational identities.
//! - [`transport`] — couplings, exact optimal transport over the
//!   transportation polytope, the coupling functionals `Q_{p,Λ}` with
//!   certified upper/lower bounds, Hamming Wasserstein distances.
//! - [`ipm`] — integral probability metrics `D_{p,Λ}` via Lipschitz LPs and
//!   supergradient ascent over site weights, plus duality-gap certification
//!   against `Q_{p,Λ}`.
//! - [`gcb`] — Gaussian concentration bound checks, optimal-constant lower
//!   bounds, entropy-distance inequalities, transfer-operator pressure and
//!   thermodynamic concentration checks.
//! - [`thermo`] — rescaled distance sequences along cubes, d̄-distance
//!   sandwiches, entropy densities.
//! - [`counterexamples`] — the blow-up families showing that the `ℓ^p`
//!   oscillation norm (`p > 1`) is not induced by any cost function and that
//!   Lipschitz concentration bounds are not extensive.
//! - [`solver`] — dense transportation simplex and a small two-phase
//!   tableau simplex used by the modules above.
//!
//! All values are immutable after construction and all operations are pure;
//! everything can be shared across threads freely.

#![forbid(unsafe_code)]

pub mod counterexamples;
mod error;
mod exponent;
pub mod gcb;
pub mod ipm;
pub mod lattice;
pub mod measures;
pub mod sampling;
pub mod solver;
pub mod thermo;
pub mod transport;

pub use error::{Error, Result};
pub use exponent::Exponent;
