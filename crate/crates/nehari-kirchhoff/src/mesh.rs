//! Uniform 1-D mesh and nodal functions with implicit zero extension.
//!
//! A [`DiscreteFunction`] holds one value per node and is interpreted as
//! piecewise linear on the mesh and identically zero on the complement of the
//! domain. Membership in the solution space requires the two boundary nodes
//! to carry the exact value `0.0`; the quadrature operations check this.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform node layout over a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh1d {
    pub lo: f64,
    pub hi: f64,
    pub n_nodes: usize,
}

impl Mesh1d {
    pub fn new(lo: f64, hi: f64, n_nodes: usize) -> Self {
        assert!(hi > lo, "empty domain [{lo}, {hi}]");
        assert!(n_nodes >= 3, "need at least 3 nodes, got {n_nodes}");
        Mesh1d { lo, hi, n_nodes }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.n_nodes - 1) as f64
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_nodes - 1
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.h() * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    /// Mesh with doubled resolution (same endpoints, nested nodes).
    pub fn refined(&self) -> Mesh1d {
        Mesh1d::new(self.lo, self.hi, 2 * self.n_nodes - 1)
    }
}

/// Nodal values on a [`Mesh1d`], zero outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub mesh: Mesh1d,
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(mesh: Mesh1d, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            mesh.n_nodes,
            "one value per node: expected {}, got {}",
            mesh.n_nodes,
            values.len()
        );
        DiscreteFunction { mesh, values }
    }

    pub fn zeros(mesh: Mesh1d) -> Self {
        DiscreteFunction::new(mesh, vec![0.0; mesh.n_nodes])
    }

    /// Sample `f` at every node, then pin both boundary nodes to exactly 0.
    pub fn sample_zero_boundary(mesh: Mesh1d, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = (0..mesh.n_nodes).map(|i| f(mesh.node(i))).collect();
        values[0] = 0.0;
        let last = mesh.n_nodes - 1;
        values[last] = 0.0;
        DiscreteFunction::new(mesh, values)
    }

    /// Errors unless both boundary nodes are exactly zero.
    pub fn check_conforming(&self) -> Result<()> {
        let last = self.values.len() - 1;
        if self.values[0] != 0.0 || self.values[last] != 0.0 {
            return Err(Error::NonconformingFunction);
        }
        Ok(())
    }

    /// Nodewise `max(0, u)`.
    pub fn positive_part(&self) -> DiscreteFunction {
        let values = self.values.iter().map(|&v| v.max(0.0)).collect();
        DiscreteFunction::new(self.mesh, values)
    }

    /// Nodewise `max(0, -u)`, so that `u = u+ - u-` holds at every node.
    pub fn negative_part(&self) -> DiscreteFunction {
        let values = self.values.iter().map(|&v| (-v).max(0.0)).collect();
        DiscreteFunction::new(self.mesh, values)
    }

    pub fn scale(&self, t: f64) -> DiscreteFunction {
        let values = self.values.iter().map(|&v| t * v).collect();
        DiscreteFunction::new(self.mesh, values)
    }

    /// `self + t * other` on a shared mesh.
    pub fn axpy(&self, t: f64, other: &DiscreteFunction) -> DiscreteFunction {
        assert_eq!(self.mesh, other.mesh, "mesh mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + t * b)
            .collect();
        DiscreteFunction::new(self.mesh, values)
    }

    /// Nodewise clip to the nonnegative cone.
    pub fn clipped_nonnegative(&self) -> DiscreteFunction {
        self.positive_part()
    }

    /// Piecewise-linear evaluation with zero extension outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let m = &self.mesh;
        if x <= m.lo || x >= m.hi {
            return 0.0;
        }
        let h = m.h();
        let cell = (((x - m.lo) / h) as usize).min(m.n_cells() - 1);
        let x0 = m.node(cell);
        let t = (x - x0) / h;
        self.values[cell] * (1.0 - t) + self.values[cell + 1] * t
    }

    /// Interpolate onto a once-refined mesh (nodes nest, boundary stays 0).
    pub fn refine(&self) -> DiscreteFunction {
        let fine = self.mesh.refined();
        let mut values = vec![0.0; fine.n_nodes];
        for (i, v) in values.iter_mut().enumerate() {
            if i % 2 == 0 {
                *v = self.values[i / 2];
            } else {
                *v = 0.5 * (self.values[i / 2] + self.values[i / 2 + 1]);
            }
        }
        DiscreteFunction::new(fine, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
