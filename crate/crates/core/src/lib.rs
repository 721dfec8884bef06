//! Interaction decompositions for poset-indexed families of finite-dimensional
//! Hilbert subspaces and for diagrams of isometries.
//!
//! A family `(H_a, a ∈ A)` of subspaces of `R^n`, increasing along a finite
//! poset `A`, is *decomposable* when there are mutually orthogonal pieces
//! `S_a` with `H_a = ⊕_{b ≤ a} S_b`. This happens exactly when the projector
//! identity `π(â ∩ b̂) = π_a π_b` holds for every pair `a, b`. The crate checks
//! that identity, builds the pieces, and carries the same machinery over to
//! functors `A → IHilb` given as diagrams of isometries.
//!
//! Two applications are included: factor spaces of discrete graphical models
//! ([`graphical`]) and the Wiener chaos of a finite Gaussian vector ([`chaos`]).

pub mod chaos;
pub mod diagram;
pub mod error;
pub mod graphical;
pub mod interaction;
pub mod linalg;
pub mod poset;
pub mod synth;
pub mod tolerance;

pub use chaos::{ChaosSpace, GaussianModel, Monomial};
pub use diagram::{FunctorDecomposition, IsometryDiagram, LeftCoupling};
pub use error::{Error, Result};
pub use graphical::{DiscreteModel, GibbsState, Potential};
pub use interaction::{Decomposition, DecompositionFailure, IntersectionReport, SubspaceFamily};
pub use linalg::{AmbientSpace, Operator, Projector, Subspace};
pub use poset::{LowerSet, Poset, PosetA1, PosetA2, PosetPlus};
pub use tolerance::{Limits, Tolerance};
