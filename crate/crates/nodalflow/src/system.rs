//! Problem definition, energy functional, elliptic residual, group action
//! and the weak-form identity gaps.
//!
//! The energy of U = (u_1, …, u_N) is
//!
//! ```text
//! I(U) = ½ Σ_j ∫ (|∇u_j|² + u_j²) − ¼ [ Σ_j ∫ u_j⁴ + β Σ_{i≠j} ∫ u_i² u_j² ],
//! ```
//!
//! and `residual` is its exact gradient with respect to the quadrature inner
//! product, component-wise `−Δu_j + u_j − u_j³ − β Σ_{i≠j} u_j u_i²`.  The
//! exactness is discrete, not asymptotic: the H¹ part of the energy is the
//! face-sum that the flux-form Laplacian telescopes to, so finite-difference
//! directional derivatives of `energy` match `⟨residual, V⟩` to rounding.
//!
//! Component bookkeeping follows the decomposition N = B·p + R: B groups of
//! p components acted on by the cyclic shift σ, plus R fixed remainder
//! components. All permutation-sensitive sums are evaluated in a sorted
//! order so that σ-equivariance holds bitwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::VectorField;
use crate::grid::{GridError, RadialDomain, RadialGrid};
use crate::numeric::{neumaier_sum, permutation_invariant_sum};

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("p must be prime, got {0}")]
    NotPrime(usize),
    #[error("component count N = B*p + R must be positive")]
    EmptySystem,
    #[error("beta must be <= -1 for the repulsive regime, got {0}")]
    BetaOutOfRange(f64),
    #[error("expected {expected} node targets, got {found}")]
    TargetCountMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Domain(#[from] GridError),
}

pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The coupled system: N = B·p + R components on a radial domain, coupling
/// strength β ≤ −1, with per-group node targets P_b and per-remainder
/// targets Q_r.
///
/// B = 0 is the all-remainder decomposition (no group, σ acts trivially);
/// it covers the scalar case N = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub beta: f64,
    pub p: usize,
    pub groups: usize,
    pub remainder: usize,
    /// P_b, one entry per group.
    pub group_targets: Vec<usize>,
    /// Q_r, one entry per remainder component.
    pub remainder_targets: Vec<usize>,
    pub domain: RadialDomain,
}

impl ProblemSpec {
    pub fn new(
        beta: f64,
        p: usize,
        groups: usize,
        remainder: usize,
        group_targets: Vec<usize>,
        remainder_targets: Vec<usize>,
        domain: RadialDomain,
    ) -> Result<Self, SpecError> {
        let spec = ProblemSpec {
            beta,
            p,
            groups,
            remainder,
            group_targets,
            remainder_targets,
            domain,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Scalar problem (N = 1) on the given domain; β is irrelevant but kept.
    pub fn scalar(domain: RadialDomain, node_target: usize) -> Result<Self, SpecError> {
        ProblemSpec::new(-1.0, 2, 0, 1, vec![], vec![node_target], domain)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !is_prime(self.p) {
            return Err(SpecError::NotPrime(self.p));
        }
        if self.n_components() == 0 {
            return Err(SpecError::EmptySystem);
        }
        if !(self.beta <= -1.0) {
            return Err(SpecError::BetaOutOfRange(self.beta));
        }
        if self.group_targets.len() != self.groups {
            return Err(SpecError::TargetCountMismatch {
                expected: self.groups,
                found: self.group_targets.len(),
            });
        }
        if self.remainder_targets.len() != self.remainder {
            return Err(SpecError::TargetCountMismatch {
                expected: self.remainder,
                found: self.remainder_targets.len(),
            });
        }
        self.domain.validate()?;
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        self.groups * self.p + self.remainder
    }

    /// Node target of component `j` (0-based): P_b inside group b, Q_r in the
    /// remainder tail.
    pub fn node_target(&self, j: usize) -> usize {
        let gp = self.groups * self.p;
        if j < gp {
            self.group_targets[j / self.p]
        } else {
            self.remainder_targets[j - gp]
        }
    }

    pub fn node_targets(&self) -> Vec<usize> {
        (0..self.n_components()).map(|j| self.node_target(j)).collect()
    }

    /// Total of the targets, counted per component: p·ΣP_b + ΣQ_r.
    pub fn total_target(&self) -> usize {
        self.p * self.group_targets.iter().sum::<usize>()
            + self.remainder_targets.iter().sum::<usize>()
    }

    /// (block, in-group position) of a grouped component, if it is one.
    pub fn group_position(&self, j: usize) -> Option<(usize, usize)> {
        if j < self.groups * self.p {
            Some((j / self.p, j % self.p))
        } else {
            None
        }
    }
}

/// Cyclic shift σ^k on every group of p components; the remainder is fixed.
/// σ sends (u_1, …, u_p) to (u_2, …, u_p, u_1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAction {
    pub power: usize,
}

impl GroupAction {
    pub fn new(power: usize) -> Self {
        GroupAction { power }
    }

    /// Index that component slot `j` receives its values FROM.
    pub fn source_index(&self, spec: &ProblemSpec, j: usize) -> usize {
        match spec.group_position(j) {
            Some((b, pos)) => b * spec.p + (pos + self.power) % spec.p,
            None => j,
        }
    }
}

pub fn apply_group_action(action: GroupAction, spec: &ProblemSpec, u: &VectorField) -> VectorField {
    let mut out = u.clone();
    for j in 0..spec.n_components() {
        let src = action.source_index(spec, j);
        if src != j {
            out.component_mut(j).copy_from_slice(u.component(src));
        }
    }
    out
}

fn check_grid(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> Result<(), GridError> {
    if u.n_nodes() != grid.n_nodes() || u.n_components() != spec.n_components() {
        return Err(GridError::SizeMismatch {
            expected: grid.n_nodes(),
            found: u.n_nodes(),
        });
    }
    Ok(())
}

/// I(U); see the module docs for the sign conventions.
pub fn energy(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> Result<f64, GridError> {
    check_grid(spec, grid, u)?;
    let n = spec.n_components();

    // Per-component terms, summed in sorted order for exact σ-invariance.
    let mut quad_terms: Vec<f64> = Vec::with_capacity(n);
    let mut quartic_terms: Vec<f64> = Vec::with_capacity(n);
    for c in u.components() {
        let grad = grid.h1_seminorm_sq(c)?;
        let mass = grid.inner(c, c);
        quad_terms.push(grad + mass);
        quartic_terms.push(neumaier_sum(
            c.iter()
                .zip(&grid.quadrature_weights)
                .map(|(v, w)| v * v * v * v * w),
        ));
    }
    let quad = permutation_invariant_sum(&mut quad_terms);
    let quartic = permutation_invariant_sum(&mut quartic_terms);

    // Coupling density Σ_{i≠j} u_i²u_j² = S² − Σ s_i² with S = Σ u_i²,
    // both inner sums sorted, so the node value is permutation-invariant.
    let mut squares: Vec<f64> = vec![0.0; n];
    let mut fourths: Vec<f64> = vec![0.0; n];
    let coupling = neumaier_sum((0..u.n_nodes()).map(|i| {
        for (j, s) in squares.iter_mut().enumerate() {
            let v = u.component(j)[i];
            *s = v * v;
        }
        for (f, s) in fourths.iter_mut().zip(&squares) {
            *f = s * s;
        }
        let s_total = permutation_invariant_sum(&mut squares);
        let f_total = permutation_invariant_sum(&mut fourths);
        (s_total * s_total - f_total) * grid.quadrature_weights[i]
    }));

    Ok(0.5 * quad - 0.25 * quartic - 0.25 * spec.beta * coupling)
}

/// Pointwise nonlinear term f_j = u_j³ + β u_j Σ_{i≠j} u_i², written into
/// `out` component-major; permutation-exact via sorted square sums.
pub(crate) fn nonlinearity(spec: &ProblemSpec, u: &VectorField, out: &mut VectorField) {
    let n = spec.n_components();
    let beta = spec.beta;
    let mut squares: Vec<f64> = vec![0.0; n];
    let mut sorted: Vec<f64> = vec![0.0; n];
    for i in 0..u.n_nodes() {
        for (j, s) in squares.iter_mut().enumerate() {
            let v = u.component(j)[i];
            *s = v * v;
        }
        sorted.copy_from_slice(&squares);
        let s_total = permutation_invariant_sum(&mut sorted);
        for j in 0..n {
            let v = u.component(j)[i];
            out.component_mut(j)[i] = v * squares[j] + beta * v * (s_total - squares[j]);
        }
    }
}

/// Gradient of the energy in the quadrature inner product:
/// component j is −Δu_j + u_j − u_j³ − β Σ_{i≠j} u_j u_i². Dirichlet rows
/// are zero.
pub fn residual(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> Result<VectorField, GridError> {
    check_grid(spec, grid, u)?;
    let mut out = VectorField::zeros(spec.n_components(), grid);
    nonlinearity(spec, u, &mut out);
    for j in 0..spec.n_components() {
        let lap = grid.apply_laplacian(u.component(j))?;
        let uj = u.component(j);
        let rj = out.component_mut(j);
        for i in 0..grid.n_nodes() {
            if grid.is_dirichlet(i) {
                rj[i] = 0.0;
            } else {
                rj[i] = -lap[i] + uj[i] - rj[i];
            }
        }
    }
    Ok(out)
}

/// Quadrature L² norm of the residual.
pub fn residual_norm(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> Result<f64, GridError> {
    Ok(residual(spec, grid, u)?.l2_norm(grid))
}

/// Per-component weak-form gaps: component j returns
/// ∫(|∇u_j|² + u_j²) − ∫u_j⁴ − β Σ_{i≠j} ∫u_j²u_i², the equation tested
/// against u_j. All gaps vanish at discrete equilibria.
pub fn weak_identity_gap(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> Result<Vec<f64>, GridError> {
    check_grid(spec, grid, u)?;
    let n = spec.n_components();
    let mut gaps = Vec::with_capacity(n);
    for j in 0..n {
        let uj = u.component(j);
        let grad = grid.h1_seminorm_sq(uj)?;
        let mass = grid.inner(uj, uj);
        let quartic = neumaier_sum(
            uj.iter()
                .zip(&grid.quadrature_weights)
                .map(|(v, w)| v * v * v * v * w),
        );
        let mut coupling = 0.0;
        for i in 0..n {
            if i == j {
                continue;
            }
            let ui = u.component(i);
            coupling += neumaier_sum(
                (0..grid.n_nodes()).map(|k| uj[k] * uj[k] * ui[k] * ui[k] * grid.quadrature_weights[k]),
            );
        }
        gaps.push(grad + mass - quartic - spec.beta * coupling);
    }
    Ok(gaps)
}
