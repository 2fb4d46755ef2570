//! Numerical laboratory for sign-changing equilibria of repulsively coupled
//! cubic Schrödinger systems on radial domains.
//!
//! The library discretizes the elliptic system
//!
//! ```text
//! -Δu_j + u_j = u_j³ + β Σ_{i≠j} u_j u_i²,   u_j ∈ H¹_{0,r}(Ω),  j = 1..N,
//! ```
//!
//! on a ball or annulus in dimension 2 or 3 with β ≤ −1, and reaches its
//! equilibria dynamically: the associated parabolic flow dissipates the
//! energy, so nontrivial equilibria sit on the boundary of the basin of
//! attraction of zero and can be located by bisecting a ray of initial data
//! across that boundary.  The crate provides
//!
//! * radial grids, quadrature and the conservative radial Laplacian ([`grid`]),
//! * the energy functional, its gradient and the cyclic group action ([`system`]),
//! * a dissipation-enforcing semi-implicit flow with trajectory fate
//!   classification ([`flow`]),
//! * nodal counting, bump decomposition and pairwise comparison matrices
//!   ([`nodal`]),
//! * prescribed-node initial data built from phase-parameterized bumps on a
//!   nested radial partition ([`seed`]),
//! * basin-boundary bisection, equilibrium extraction, Newton refinement and
//!   solution verification ([`basin`]),
//! * an independent shooting oracle and dense nodal recounts ([`oracle`]),
//! * the integer bound schedules governing difference-node counts ([`bounds`]),
//! * randomized dynamical-invariant suites ([`invariants`]), and
//! * run configuration, manifests and the batch pipeline ([`config`],
//!   [`manifest`], [`pipeline`]).
//!
//! The `book/` directory of the repository is an mdbook walking through the
//! same material chapter by chapter; its code snippets compile against this
//! crate and run under `cargo test`.

pub mod basin;
pub mod bounds;
pub mod config;
pub mod field;
pub mod flow;
pub mod grid;
pub mod invariants;
pub mod manifest;
pub mod nodal;
pub mod oracle;
pub mod pipeline;
pub mod seed;
pub mod system;

mod numeric;

pub use basin::{BisectionOutcome, BisectionParams, CheckReport, EquilibriumResult};
pub use bounds::{BoundSchedule, PairBounds};
pub use config::RunConfig;
pub use field::VectorField;
pub use flow::{Fate, FateReport, FlowParams, FlowState};
pub use grid::{DomainKind, RadialDomain, RadialGrid};
pub use manifest::RunManifest;
pub use nodal::{ComparisonMatrix, NodalProfile};
pub use seed::{PartitionSpec, SeedParams};
pub use system::{GroupAction, ProblemSpec};
