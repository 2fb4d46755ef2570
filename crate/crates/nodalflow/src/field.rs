//! The state vector U = (u_1, …, u_N): N radial fields on a shared grid.

use crate::grid::{GridError, RadialGrid};

/// N per-node real fields stored component-major.
///
/// Invariants kept by construction: finite values, exact zeros at Dirichlet
/// nodes (`enforce_dirichlet` is applied by every producer of fields).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    n_components: usize,
    n_nodes: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(n_components: usize, grid: &RadialGrid) -> Self {
        VectorField {
            n_components,
            n_nodes: grid.n_nodes(),
            data: vec![0.0; n_components * grid.n_nodes()],
        }
    }

    pub fn from_components(components: Vec<Vec<f64>>, grid: &RadialGrid) -> Result<Self, GridError> {
        let n_nodes = grid.n_nodes();
        for c in &components {
            if c.len() != n_nodes {
                return Err(GridError::SizeMismatch {
                    expected: n_nodes,
                    found: c.len(),
                });
            }
        }
        let n_components = components.len();
        let mut data = Vec::with_capacity(n_components * n_nodes);
        for c in components {
            data.extend(c);
        }
        let mut f = VectorField {
            n_components,
            n_nodes,
            data,
        };
        f.enforce_dirichlet(grid);
        Ok(f)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_nodes..(j + 1) * self.n_nodes]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n_nodes..(j + 1) * self.n_nodes]
    }

    pub fn components(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_nodes)
    }

    /// Zeroes the Dirichlet rows of every component.
    pub fn enforce_dirichlet(&mut self, grid: &RadialGrid) {
        let n_nodes = self.n_nodes;
        for j in 0..self.n_components {
            let c = self.component_mut(j);
            c[n_nodes - 1] = 0.0;
            if grid.is_dirichlet(0) {
                c[0] = 0.0;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    /// self + factor * other.
    pub fn axpy(&self, factor: f64, other: &VectorField) -> VectorField {
        assert_eq!(self.data.len(), other.data.len());
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += factor * v;
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Quadrature L² norm over all components.
    pub fn l2_norm(&self, grid: &RadialGrid) -> f64 {
        self.components()
            .map(|c| {
                let n = grid.l2_norm(c);
                n * n
            })
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// H¹ norm over all components.
    pub fn h1_norm(&self, grid: &RadialGrid) -> f64 {
        self.components()
            .map(|c| {
                let n = grid.h1_norm(c).expect("field matches grid");
                n * n
            })
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Sup-norm distance to another field.
    pub fn sup_distance(&self, other: &VectorField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Linear interpolation of every component onto another grid over the
    /// same domain (used by the refinement-stability checks).
    pub fn interpolate_to(&self, from: &RadialGrid, to: &RadialGrid) -> VectorField {
        let mut out = VectorField::zeros(self.n_components, to);
        for j in 0..self.n_components {
            let src = self.component(j);
            let dst = out.component_mut(j);
            for (i, &r) in to.nodes.iter().enumerate() {
                let x = (r - from.nodes[0]) / from.spacing();
                let k = (x.floor() as isize).clamp(0, from.intervals() as isize - 1) as usize;
                let t = (x - k as f64).clamp(0.0, 1.0);
                dst[i] = src[k] * (1.0 - t) + src[k + 1] * t;
            }
        }
        out.enforce_dirichlet(to);
        out
    }
}
