//! Radial domains, grids, quadrature and the discrete radial Laplacian.
//!
//! A radial function on a ball or annulus `Ω ⊂ ℝⁿ` (n = 2, 3) is stored by
//! its values on uniformly spaced radii.  Integrals over Ω reduce to
//! `ω_{n-1} ∫ f(r) r^{n-1} dr`; the grid carries finite-volume shell weights
//! for that measure, exact for constants, so the quadrature of `1` is the
//! domain volume to rounding.  The Laplacian is discretized in conservative
//! flux form `(r^{n-1} u')' / r^{n-1}`, which makes it exactly self-adjoint
//! and negative semidefinite in the quadrature inner product — the energy
//! dissipation bookkeeping of the flow module leans on both properties.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::neumaier_sum;

pub const MIN_GRID_INTERVALS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Annulus,
}

/// A ball or annulus in dimension 2 or 3, identified by its radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    pub kind: DomainKind,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub dimension: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(u32),
    #[error("radii must satisfy outer > inner >= 0, got inner={inner}, outer={outer}")]
    BadRadii { inner: f64, outer: f64 },
    #[error("a ball has inner radius 0, an annulus a positive one (inner={0})")]
    KindRadiusMismatch(f64),
    #[error("grid needs at least {MIN_GRID_INTERVALS} intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("grid interval count must be even, got {0}")]
    OddIntervals(usize),
    #[error("field length {found} does not match grid node count {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

impl RadialDomain {
    pub fn ball(outer_radius: f64, dimension: u32) -> Result<Self, GridError> {
        let d = RadialDomain {
            kind: DomainKind::Ball,
            inner_radius: 0.0,
            outer_radius,
            dimension,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(inner_radius: f64, outer_radius: f64, dimension: u32) -> Result<Self, GridError> {
        let d = RadialDomain {
            kind: DomainKind::Annulus,
            inner_radius,
            outer_radius,
            dimension,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(GridError::BadDimension(self.dimension));
        }
        if !(self.inner_radius >= 0.0 && self.outer_radius > self.inner_radius) {
            return Err(GridError::BadRadii {
                inner: self.inner_radius,
                outer: self.outer_radius,
            });
        }
        match self.kind {
            DomainKind::Ball if self.inner_radius != 0.0 => {
                Err(GridError::KindRadiusMismatch(self.inner_radius))
            }
            DomainKind::Annulus if self.inner_radius <= 0.0 => {
                Err(GridError::KindRadiusMismatch(self.inner_radius))
            }
            _ => Ok(()),
        }
    }

    /// Surface measure of the unit sphere S^{n-1}: 2π for n = 2, 4π for n = 3.
    pub fn sphere_measure(&self) -> f64 {
        match self.dimension {
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        }
    }

    /// |Ω| = ω_{n-1} (r_out^n − r_in^n)/n.
    pub fn volume(&self) -> f64 {
        let n = self.dimension as f64;
        self.sphere_measure() * (self.outer_radius.powi(self.dimension as i32)
            - self.inner_radius.powi(self.dimension as i32))
            / n
    }
}

/// Uniform radial grid with finite-volume quadrature weights.
///
/// Node `i` owns the shell between the face radii `r_i ± h/2` (clipped to the
/// domain), and its weight is the exact n-dimensional volume of that shell.
/// All weights are strictly positive, including the ball center.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub domain: RadialDomain,
    /// Radii r_0 < r_1 < … < r_m.
    pub nodes: Vec<f64>,
    /// ω_{n-1} · (r_{i+1/2}^n − r_{i-1/2}^n)/n, clipped at the domain ends.
    pub quadrature_weights: Vec<f64>,
    /// r^{n-1} at the faces r_{i+1/2}, i = 0..m-1.
    face_measures: Vec<f64>,
    /// 1-d cell measures (weights / ω_{n-1}).
    cell_measures: Vec<f64>,
    h: f64,
}

impl RadialGrid {
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of intervals m (nodes are m + 1).
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Whether node `i` carries a homogeneous Dirichlet condition.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        i + 1 == self.nodes.len()
            || (i == 0 && self.domain.kind == DomainKind::Annulus)
    }

    fn check_len(&self, field: &[f64]) -> Result<(), GridError> {
        if field.len() != self.nodes.len() {
            return Err(GridError::SizeMismatch {
                expected: self.nodes.len(),
                found: field.len(),
            });
        }
        Ok(())
    }

    /// Quadrature of a scalar field against the radial measure of Ω.
    pub fn integrate(&self, field: &[f64]) -> Result<f64, GridError> {
        self.check_len(field)?;
        Ok(neumaier_sum(
            field
                .iter()
                .zip(&self.quadrature_weights)
                .map(|(f, w)| f * w),
        ))
    }

    /// Weighted inner product ⟨f, g⟩ = Σ w_i f_i g_i.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        crate::numeric::weighted_dot(f, g, &self.quadrature_weights)
    }

    /// Weighted L² norm.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).max(0.0).sqrt()
    }

    /// Weighted L⁴ norm.
    pub fn l4_norm(&self, f: &[f64]) -> f64 {
        neumaier_sum(
            f.iter()
                .zip(&self.quadrature_weights)
                .map(|(v, w)| v * v * v * v * w),
        )
        .max(0.0)
        .powf(0.25)
    }

    /// Discrete Dirichlet (H¹ seminorm)² of a field:
    /// ω Σ_faces r^{n-1} (u_{i+1} − u_i)² / h.
    ///
    /// Coincides with ⟨−Δu, u⟩ for fields obeying the Dirichlet rows, which
    /// is what makes the flow's residual the exact gradient of the energy.
    pub fn h1_seminorm_sq(&self, field: &[f64]) -> Result<f64, GridError> {
        self.check_len(field)?;
        let omega = self.domain.sphere_measure();
        Ok(omega
            * neumaier_sum(self.face_measures.iter().enumerate().map(|(i, fm)| {
                let d = field[i + 1] - field[i];
                fm * d * d / self.h
            })))
    }

    /// Full H¹ norm sqrt(∫ |∇u|² + u²).
    pub fn h1_norm(&self, field: &[f64]) -> Result<f64, GridError> {
        let grad = self.h1_seminorm_sq(field)?;
        let mass = self.inner(field, field);
        Ok((grad + mass).max(0.0).sqrt())
    }

    /// Conservative radial Laplacian (1/r^{n-1}) (r^{n-1} u')'.
    ///
    /// Interior rows are flux differences over the node's shell; at the ball
    /// center the inner flux vanishes identically (r^{n-1} = 0 and u'(0) = 0
    /// by radial symmetry, the even-reflection condition). Dirichlet rows
    /// return 0; the boundary values of `field` still feed the neighboring
    /// fluxes, which is how the Dirichlet data enters.
    pub fn apply_laplacian(&self, field: &[f64]) -> Result<Vec<f64>, GridError> {
        self.check_len(field)?;
        let m = self.intervals();
        let mut out = vec![0.0; m + 1];
        let flux = |i: usize| self.face_measures[i] * (field[i + 1] - field[i]) / self.h;
        for i in 0..=m {
            if self.is_dirichlet(i) {
                continue;
            }
            let f_hi = if i < m { flux(i) } else { 0.0 };
            let f_lo = if i > 0 { flux(i - 1) } else { 0.0 };
            out[i] = (f_hi - f_lo) / self.cell_measures[i];
        }
        Ok(out)
    }

    /// Row coefficients (sub, diag, sup) of −Δ at node `i`, for assembling
    /// implicit steps and Jacobians. Dirichlet rows are identity.
    pub(crate) fn neg_laplacian_row(&self, i: usize) -> (f64, f64, f64) {
        if self.is_dirichlet(i) {
            return (0.0, 1.0, 0.0);
        }
        let m = self.intervals();
        let cell = self.cell_measures[i];
        let hi = if i < m {
            self.face_measures[i] / (self.h * cell)
        } else {
            0.0
        };
        let lo = if i > 0 {
            self.face_measures[i - 1] / (self.h * cell)
        } else {
            0.0
        };
        (-lo, lo + hi, -hi)
    }
}

/// Builds a uniform grid with `m` intervals over the radial extent of `domain`.
pub fn build_grid(domain: RadialDomain, m: usize) -> Result<RadialGrid, GridError> {
    domain.validate()?;
    if m < MIN_GRID_INTERVALS {
        return Err(GridError::TooFewIntervals(m));
    }
    if m % 2 != 0 {
        return Err(GridError::OddIntervals(m));
    }
    let (r0, r1) = (domain.inner_radius, domain.outer_radius);
    let h = (r1 - r0) / m as f64;
    let nodes: Vec<f64> = (0..=m)
        .map(|i| {
            if i == m {
                r1
            } else {
                r0 + i as f64 * h
            }
        })
        .collect();

    let n = domain.dimension as i32;
    let omega = domain.sphere_measure();
    let face_radius = |i: usize| r0 + (i as f64 + 0.5) * h;
    let face_measures: Vec<f64> = (0..m).map(|i| face_radius(i).powi(n - 1)).collect();
    let shell = |a: f64, b: f64| (b.powi(n) - a.powi(n)) / n as f64;
    let cell_measures: Vec<f64> = (0..=m)
        .map(|i| {
            let lo = if i == 0 { r0 } else { face_radius(i - 1) };
            let hi = if i == m { r1 } else { face_radius(i) };
            shell(lo, hi)
        })
        .collect();
    let quadrature_weights: Vec<f64> = cell_measures.iter().map(|c| c * omega).collect();

    Ok(RadialGrid {
        domain,
        nodes,
        quadrature_weights,
        face_measures,
        cell_measures,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_ball_3d(m: usize) -> RadialGrid {
        build_grid(RadialDomain::ball(1.0, 3).unwrap(), m).unwrap()
    }

    #[test]
    fn quadrature_of_one_is_ball_volume() {
        let grid = unit_ball_3d(256);
        let ones = vec![1.0; grid.n_nodes()];
        let vol = grid.integrate(&ones).unwrap();
        let exact = 4.0 * PI / 3.0;
        assert!((vol - exact).abs() / exact < 1e-10, "vol={vol}");
    }

    #[test]
    fn quadrature_of_one_is_annulus_area() {
        let domain = RadialDomain::annulus(0.5, 1.0, 2).unwrap();
        let grid = build_grid(domain, 128).unwrap();
        let ones = vec![1.0; grid.n_nodes()];
        let area = grid.integrate(&ones).unwrap();
        let exact = PI * (1.0 - 0.25);
        assert!((area - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn too_small_grid_rejected() {
        assert_eq!(
            build_grid(RadialDomain::ball(1.0, 3).unwrap(), 8).err(),
            Some(GridError::TooFewIntervals(8))
        );
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(RadialDomain::ball(1.0, 4).is_err());
        assert!(RadialDomain::annulus(0.0, 1.0, 2).is_err());
        assert!(RadialDomain::annulus(1.0, 0.5, 3).is_err());
    }

    #[test]
    fn integrate_zero_and_r_squared() {
        let grid = unit_ball_3d(16384);
        let zeros = vec![0.0; grid.n_nodes()];
        assert_eq!(grid.integrate(&zeros).unwrap(), 0.0);
        // ∫ r² dx over the unit ball in 3d = 4π ∫₀¹ r⁴ dr = 4π/5; the shell
        // quadrature is O(h²), hence the fine grid for the 1e−8 check.
        let rsq: Vec<f64> = grid.nodes.iter().map(|r| r * r).collect();
        let val = grid.integrate(&rsq).unwrap();
        let exact = 4.0 * PI / 5.0;
        assert!((val - exact).abs() < 1e-8, "err={}", (val - exact).abs());
    }

    #[test]
    fn laplacian_of_parabola_is_constant() {
        // Δ(1 − r²) = −2n exactly; the flux form reproduces it to rounding.
        let grid = unit_ball_3d(256);
        let u: Vec<f64> = grid.nodes.iter().map(|r| 1.0 - r * r).collect();
        let lap = grid.apply_laplacian(&u).unwrap();
        for i in 0..grid.n_nodes() {
            if grid.is_dirichlet(i) {
                continue;
            }
            assert!((lap[i] + 6.0).abs() < 1e-3, "node {i}: {}", lap[i]);
        }
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let grid = unit_ball_3d(64);
        let z = vec![0.0; grid.n_nodes()];
        assert!(grid.apply_laplacian(&z).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_eigenfunction_residual_second_order() {
        // u = sin(πr)/r is the first radial Dirichlet eigenfunction on the
        // unit ball in 3d: Δu = −π²u.
        let residual_sup = |m: usize| {
            let grid = unit_ball_3d(m);
            let u: Vec<f64> = grid
                .nodes
                .iter()
                .map(|&r| {
                    if r == 0.0 {
                        PI
                    } else {
                        (PI * r).sin() / r
                    }
                })
                .collect();
            let lap = grid.apply_laplacian(&u).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..grid.n_nodes() {
                if grid.is_dirichlet(i) {
                    continue;
                }
                worst = worst.max((lap[i] + PI * PI * u[i]).abs());
            }
            worst
        };
        let coarse = residual_sup(256);
        let fine = residual_sup(512);
        assert!(coarse < 1e-2, "coarse residual {coarse}");
        // Second-order convergence: halving h gains at least 3.5x.
        assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn laplacian_self_adjoint_and_negative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(kind_ball, m) in &[(true, 128usize), (false, 96)] {
            let domain = if kind_ball {
                RadialDomain::ball(1.0, 3).unwrap()
            } else {
                RadialDomain::annulus(0.4, 1.3, 2).unwrap()
            };
            let grid = build_grid(domain, m).unwrap();
            for _ in 0..20 {
                let mut f: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut g: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for i in 0..grid.n_nodes() {
                    if grid.is_dirichlet(i) {
                        f[i] = 0.0;
                        g[i] = 0.0;
                    }
                }
                let lf = grid.apply_laplacian(&f).unwrap();
                let lg = grid.apply_laplacian(&g).unwrap();
                let a = grid.inner(&lf, &g);
                let b = grid.inner(&f, &lg);
                let scale = grid.l2_norm(&f) * grid.l2_norm(&g);
                assert!((a - b).abs() < 1e-10 * scale.max(1e-30), "asym {}", (a - b).abs());
                let quad = grid.inner(&lf, &f);
                assert!(quad <= 1e-12, "positivity violated: {quad}");
                // ⟨−Δf, f⟩ agrees with the face-sum seminorm.
                let semi = grid.h1_seminorm_sq(&f).unwrap();
                assert!((quad + semi).abs() < 1e-9 * semi.max(1.0));
            }
        }
    }

    #[test]
    fn weights_positive_everywhere() {
        for m in [16usize, 64, 256] {
            let grid = unit_ball_3d(m);
            assert!(grid.quadrature_weights.iter().all(|&w| w > 0.0));
        }
    }
}
