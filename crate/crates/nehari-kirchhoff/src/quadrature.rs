//! Every integral of the model: the Gagliardo p-seminorm and its weak-form
//! pairing, Lp norms, the singular weight integral, the nonlinearity
//! integral, and nodal load vectors against the hat basis.
//!
//! The seminorm of the zero extension splits as
//!
//! ```text
//! ||u||^p = I(Omega x Omega) + 2 \int_Omega |u(x)|^p rho(x) dx,
//! rho(x)  = \int_{R \ Omega} |x-y|^{-1-ps} dy
//!         = ((x-A)^{-ps} + (B-x)^{-ps}) / ps      for Omega = (A, B).
//! ```
//!
//! The interior double integral is assembled per cell pair:
//! - same cell: u is linear there, so the integrand is
//!   `|g|^p |x-y|^{p-1-ps}` and the cell integral has a closed form;
//! - cells sharing a node: Duffy split into two triangles, the radial power
//!   integrated exactly, the angular factor by Gauss quadrature;
//! - separated cells: tensor Gauss with a distance-indexed kernel table.
//!
//! Summation order is a fixed pairwise tree over rows, so parallel and
//! serial runs agree bitwise for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{DiscreteFunction, Mesh1d};
use crate::problem::ValidatedConfig;
use crate::{Error, Result};

/// How cell pairs containing the kernel singularity are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalTreatment {
    /// Exact radial power integration for piecewise-linear arguments.
    AnalyticLinear,
    /// Tensor Gauss with staggered rules so points never coincide.
    Offset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub gauss_points_per_cell: usize,
    pub diagonal_treatment: DiagonalTreatment,
    pub exterior_correction: bool,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            gauss_points_per_cell: 3,
            diagonal_treatment: DiagonalTreatment::AnalyticLinear,
            exterior_correction: true,
        }
    }
}

// Gauss-Legendre rules on [-1, 1].
#[allow(clippy::excessive_precision)]
const GL_X: [&[f64]; 8] = [
    &[0.0],
    &[-0.5773502691896257, 0.5773502691896257],
    &[-0.7745966692414834, 0.0, 0.7745966692414834],
    &[
        -0.8611363115940526,
        -0.3399810435848563,
        0.3399810435848563,
        0.8611363115940526,
    ],
    &[
        -0.9061798459386640,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.9061798459386640,
    ],
    &[
        -0.9324695142031521,
        -0.6612093864662645,
        -0.2386191860831969,
        0.2386191860831969,
        0.6612093864662645,
        0.9324695142031521,
    ],
    &[
        -0.9491079123427585,
        -0.7415311855993945,
        -0.4058451513773972,
        0.0,
        0.4058451513773972,
        0.7415311855993945,
        0.9491079123427585,
    ],
    &[
        -0.9602898564975363,
        -0.7966664774136267,
        -0.5255324099163290,
        -0.1834346424956498,
        0.1834346424956498,
        0.5255324099163290,
        0.7966664774136267,
        0.9602898564975363,
    ],
];

#[allow(clippy::excessive_precision)]
const GL_W: [&[f64]; 8] = [
    &[2.0],
    &[1.0, 1.0],
    &[0.5555555555555556, 0.8888888888888889, 0.5555555555555556],
    &[
        0.3478548451374538,
        0.6521451548625461,
        0.6521451548625461,
        0.3478548451374538,
    ],
    &[
        0.2369268850561891,
        0.4786286704993665,
        0.5688888888888889,
        0.4786286704993665,
        0.2369268850561891,
    ],
    &[
        0.1713244923791704,
        0.3607615730481386,
        0.4679139345726910,
        0.4679139345726910,
        0.3607615730481386,
        0.1713244923791704,
    ],
    &[
        0.1294849661688697,
        0.2797053914892766,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892766,
        0.1294849661688697,
    ],
    &[
        0.1012285362903763,
        0.2223810344533745,
        0.3137066458778873,
        0.3626837833783620,
        0.3626837833783620,
        0.3137066458778873,
        0.2223810344533745,
        0.1012285362903763,
    ],
];

/// Gauss rule mapped to [0, 1]: returns (points, weights).
pub fn gauss_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.clamp(1, 8);
    let xs = GL_X[n - 1].iter().map(|x| 0.5 * (x + 1.0)).collect();
    let ws = GL_W[n - 1].iter().map(|w| 0.5 * w).collect();
    (xs, ws)
}

/// Fixed pairwise tree reduction; the reference summation order everywhere.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

// Rows are mapped in parallel but collected in order, then tree-reduced, so
// the result does not depend on the worker count.
fn par_rows_tree_sum<F>(n_rows: usize, row: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let rows: Vec<f64> = (0..n_rows).into_par_iter().map(row).collect();
    tree_sum(&rows)
}

/// `|d|^{p-2} d`, with the removable singularity at d = 0 taken as 0.
#[inline]
fn phi_p(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        return d;
    }
    if d == 0.0 {
        return 0.0;
    }
    d.abs().powf(p - 2.0) * d
}

/// Closed form of rho(x) for the 1-D zero extension.
pub fn exterior_density(x: f64, cfg: &ValidatedConfig) -> Result<f64> {
    let (a, b) = cfg.domain;
    if !(x > a && x < b) {
        return Err(Error::OnBoundary);
    }
    let ps = cfg.p * cfg.s;
    Ok(((x - a).powf(-ps) + (b - x).powf(-ps)) / ps)
}

/// Geometry + kernel tables shared by the pairing, gradient and stiffness
/// assembly for one (mesh, p, s, scheme) combination.
pub(crate) struct PairKernel {
    pub mesh: Mesh1d,
    pub p: f64,
    pub ps: f64,
    pub scheme: QuadratureScheme,
    /// Gauss offsets/weights on [0,1], per cell.
    pub gx: Vec<f64>,
    pub gw: Vec<f64>,
    /// Staggered rule for the `Offset` diagonal treatment.
    pub gx_off: Vec<f64>,
    pub gw_off: Vec<f64>,
    /// Duffy angular rule on [0,1].
    pub tx: Vec<f64>,
    pub tw: Vec<f64>,
    /// kern[d-2][a*g+b] = wa*wb*h^2 * (h (d + xb - xa))^{-1-ps} for d >= 2.
    pub kern: Vec<Vec<f64>>,
    pub same_cell_coeff: f64,
    pub adjacent_coeff: f64,
}

impl PairKernel {
    pub fn new(mesh: Mesh1d, p: f64, s: f64, scheme: QuadratureScheme) -> Self {
        let ps = p * s;
        let h = mesh.h();
        let (gx, gw) = gauss_unit(scheme.gauss_points_per_cell);
        let (gx_off, gw_off) = gauss_unit((scheme.gauss_points_per_cell + 1).min(8));
        let (tx, tw) = gauss_unit(8);
        let g = gx.len();
        let n_cells = mesh.n_cells();
        let mut kern = Vec::new();
        for d in 2..n_cells {
            let mut tab = vec![0.0; g * g];
            for a in 0..g {
                for b in 0..g {
                    let dist = h * (d as f64 + gx[b] - gx[a]);
                    tab[a * g + b] = gw[a] * gw[b] * h * h * dist.powf(-1.0 - ps);
                }
            }
            kern.push(tab);
        }
        let same_cell_coeff = 2.0 * h.powf(p + 1.0 - ps) / ((p - ps) * (p + 1.0 - ps));
        let adjacent_coeff = h.powf(p + 1.0 - ps) / (p + 1.0 - ps);
        PairKernel {
            mesh,
            p,
            ps,
            scheme,
            gx,
            gw,
            gx_off,
            gw_off,
            tx,
            tw,
            kern,
            same_cell_coeff,
            adjacent_coeff,
        }
    }

    pub fn for_config(mesh: Mesh1d, cfg: &ValidatedConfig) -> Self {
        PairKernel::new(mesh, cfg.p, cfg.s, cfg.quad)
    }

    /// Contribution of one cell to the pairing, both arguments linear there.
    #[inline]
    pub fn same_cell(&self, gu: f64, gv: f64) -> f64 {
        match self.scheme.diagonal_treatment {
            DiagonalTreatment::AnalyticLinear => phi_p(gu, self.p) * gv * self.same_cell_coeff,
            DiagonalTreatment::Offset => {
                // staggered tensor product; points of the two rules never
                // coincide, so the kernel stays finite
                let h = self.mesh.h();
                let mut acc = 0.0;
                for (a, &xa) in self.gx.iter().enumerate() {
                    for (b, &xb) in self.gx_off.iter().enumerate() {
                        let d = h * (xa - xb);
                        let du = gu * d;
                        let dv = gv * d;
                        acc += self.gw[a]
                            * self.gw_off[b]
                            * h
                            * h
                            * phi_p(du, self.p)
                            * dv
                            * d.abs().powf(-1.0 - self.ps);
                    }
                }
                acc
            }
        }
    }

    /// Value of the unordered pair of touching cells (i, i+1), symmetry
    /// factor 2 included. `gu0`/`gu1` are the slopes of u on the two cells.
    #[inline]
    pub fn adjacent(&self, gu0: f64, gu1: f64, gv0: f64, gv1: f64) -> f64 {
        match self.scheme.diagonal_treatment {
            DiagonalTreatment::AnalyticLinear => {
                let mut acc = 0.0;
                for (t, w) in self.tx.iter().zip(&self.tw) {
                    let ang = (1.0 + t).powf(-1.0 - self.ps);
                    let w1 = phi_p(gu0 + gu1 * t, self.p) * (gv0 + gv1 * t) * ang;
                    let w2 = phi_p(gu0 * t + gu1, self.p) * (gv0 * t + gv1) * ang;
                    acc += w * (w1 + w2);
                }
                2.0 * self.adjacent_coeff * acc
            }
            DiagonalTreatment::Offset => {
                let h = self.mesh.h();
                let mut acc = 0.0;
                for (a, &xa) in self.gx.iter().enumerate() {
                    // x in left cell at offset xa, y in right cell at xb
                    for (b, &xb) in self.gx.iter().enumerate() {
                        let xi = h * (1.0 - xa); // distance of x to shared node
                        let ze = h * xb;
                        let du = gu0 * xi + gu1 * ze;
                        let dv = gv0 * xi + gv1 * ze;
                        let dist = xi + ze;
                        acc += self.gw[a]
                            * self.gw[b]
                            * h
                            * h
                            * phi_p(du, self.p)
                            * dv
                            * dist.powf(-1.0 - self.ps);
                    }
                }
                2.0 * acc
            }
        }
    }

    /// Value of the unordered far pair (i, i+d), d >= 2, factor 2 included.
    /// `ug`/`vg` are the per-cell Gauss values, `g` points per cell.
    #[inline]
    pub fn far(&self, i: usize, d: usize, ug: &[f64], vg: &[f64]) -> f64 {
        let g = self.gx.len();
        let tab = &self.kern[d - 2];
        let j = i + d;
        let mut acc = 0.0;
        for a in 0..g {
            let ua = ug[i * g + a];
            let va = vg[i * g + a];
            for b in 0..g {
                let du = ua - ug[j * g + b];
                let dv = va - vg[j * g + b];
                acc += tab[a * g + b] * phi_p(du, self.p) * dv;
            }
        }
        2.0 * acc
    }
}

/// Per-cell slopes of a nodal function.
fn slopes(u: &DiscreteFunction) -> Vec<f64> {
    let h = u.mesh.h();
    u.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Values at the per-cell Gauss points (piecewise-linear interpolation).
fn gauss_values(u: &DiscreteFunction, gx: &[f64]) -> Vec<f64> {
    let g = gx.len();
    let n_cells = u.mesh.n_cells();
    let mut out = vec![0.0; n_cells * g];
    for i in 0..n_cells {
        let u0 = u.values[i];
        let u1 = u.values[i + 1];
        for (a, &x) in gx.iter().enumerate() {
            out[i * g + a] = u0 * (1.0 - x) + u1 * x;
        }
    }
    out
}

/// Subdivision of the unit interval, geometrically graded toward 0.
fn graded_breaks(levels: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    for k in 0..levels {
        b.push(2f64.powi(k as i32 - levels as i32 + 1));
    }
    b
}

const BOUNDARY_GRADE_LEVELS: usize = 10;

/// Composite Gauss points over one cell, graded toward the domain boundary
/// when the cell touches it. Returns (x, weight) samples.
fn cell_quad_points(
    mesh: &Mesh1d,
    cell: usize,
    gx: &[f64],
    gw: &[f64],
    grade_boundary: bool,
) -> Vec<(f64, f64)> {
    let h = mesh.h();
    let x0 = mesh.node(cell);
    let left_boundary = grade_boundary && cell == 0;
    let right_boundary = grade_boundary && cell == mesh.n_cells() - 1;
    if !(left_boundary || right_boundary) {
        return gx
            .iter()
            .zip(gw)
            .map(|(&x, &w)| (x0 + h * x, w * h))
            .collect();
    }
    let breaks = graded_breaks(BOUNDARY_GRADE_LEVELS);
    let mut pts = Vec::with_capacity(BOUNDARY_GRADE_LEVELS * gx.len());
    for seg in breaks.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let len = hi - lo;
        for (&x, &w) in gx.iter().zip(gw) {
            // grade toward the boundary endpoint
            let t = if left_boundary {
                lo + len * x
            } else {
                1.0 - (lo + len * x)
            };
            pts.push((x0 + h * t, w * len * h));
        }
    }
    pts
}

/// The three pieces of the discrete Gagliardo pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GagliardoParts {
    /// Cell-diagonal contribution (both variables in the same cell).
    pub same_cell: f64,
    /// All distinct cell pairs of the interior double integral.
    pub cross: f64,
    /// 2 * integral of |u|^{p-2} u v rho over Omega.
    pub exterior: f64,
}

impl GagliardoParts {
    pub fn total(&self) -> f64 {
        self.same_cell + self.cross + self.exterior
    }
}

fn pairing_parts_impl(
    u: &DiscreteFunction,
    v: &DiscreteFunction,
    kern: &PairKernel,
    cfg: &ValidatedConfig,
) -> Result<GagliardoParts> {
    u.check_conforming()?;
    v.check_conforming()?;
    assert_eq!(u.mesh, v.mesh, "mesh mismatch");
    let n_cells = u.mesh.n_cells();
    let su = slopes(u);
    let sv = slopes(v);
    let ug = gauss_values(u, &kern.gx);
    let vg = gauss_values(v, &kern.gx);

    let same: Vec<f64> = (0..n_cells).map(|i| kern.same_cell(su[i], sv[i])).collect();
    let same_cell = tree_sum(&same);

    let cross = par_rows_tree_sum(n_cells, |i| {
        let mut row = Vec::with_capacity(n_cells - i);
        if i + 1 < n_cells {
            row.push(kern.adjacent(su[i], su[i + 1], sv[i], sv[i + 1]));
        }
        for j in i + 2..n_cells {
            row.push(kern.far(i, j - i, &ug, &vg));
        }
        tree_sum(&row)
    });

    let exterior = if cfg.quad.exterior_correction {
        let per_cell: Vec<f64> = (0..n_cells)
            .map(|cell| {
                let pts = cell_quad_points(&u.mesh, cell, &kern.gx, &kern.gw, true);
                let vals: Vec<f64> = pts
                    .iter()
                    .map(|&(x, w)| {
                        let ux = u.eval(x);
                        let vx = v.eval(x);
                        let rho = exterior_density(x, cfg).expect("gauss point interior");
                        w * phi_p(ux, kern.p) * vx * rho
                    })
                    .collect();
                tree_sum(&vals)
            })
            .collect();
        2.0 * tree_sum(&per_cell)
    } else {
        0.0
    };

    Ok(GagliardoParts {
        same_cell,
        cross,
        exterior,
    })
}

/// Pairing split into its three pieces.
pub fn weak_pairing_parts(
    u: &DiscreteFunction,
    v: &DiscreteFunction,
    cfg: &ValidatedConfig,
) -> Result<GagliardoParts> {
    let kern = PairKernel::for_config(u.mesh, cfg);
    pairing_parts_impl(u, v, &kern, cfg)
}

/// Weak-form pairing
/// `\iint |u(x)-u(y)|^{p-2}(u(x)-u(y))(v(x)-v(y)) / |x-y|^{1+ps}` plus the
/// exterior correction `2 \int |u|^{p-2} u v rho`.
pub fn weak_pairing(
    u: &DiscreteFunction,
    v: &DiscreteFunction,
    cfg: &ValidatedConfig,
) -> Result<f64> {
    Ok(weak_pairing_parts(u, v, cfg)?.total())
}

/// Parts of `||u||^p`; same code path as [`weak_pairing`] with v = u.
pub fn gagliardo_parts(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Result<GagliardoParts> {
    weak_pairing_parts(u, u, cfg)
}

/// The discrete Gagliardo seminorm to the p-th power (X0 norm of the zero
/// extension).
pub fn gagliardo_p(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Result<f64> {
    Ok(gagliardo_parts(u, cfg)?.total())
}

/// Nodal gradient of `u -> ||u||^p`; entry k is `p * <u, hat_k>` where the
/// bracket is the weak pairing. Boundary entries are fixed at 0.
pub fn gagliardo_gradient(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Result<Vec<f64>> {
    let kern = PairKernel::for_config(u.mesh, cfg);
    gagliardo_gradient_with(u, &kern, cfg)
}

pub(crate) fn gagliardo_gradient_with(
    u: &DiscreteFunction,
    kern: &PairKernel,
    cfg: &ValidatedConfig,
) -> Result<Vec<f64>> {
    u.check_conforming()?;
    let mesh = u.mesh;
    let n_cells = mesh.n_cells();
    let n = mesh.n_nodes;
    let h = mesh.h();
    let p = kern.p;
    let su = slopes(u);
    let ug = gauss_values(u, &kern.gx);
    let g = kern.gx.len();
    let mut grad = vec![0.0; n];

    // same-cell: d/dv of phi_p(gu) * gv * coeff with gv = (v_{i+1}-v_i)/h
    for i in 0..n_cells {
        let base = kern.same_cell(su[i], 1.0 / h);
        grad[i] -= base;
        grad[i + 1] += base;
    }

    // adjacent pairs: differentiate the Duffy angular integral in gv0, gv1
    for i in 0..n_cells - 1 {
        let d_g0 = kern.adjacent(su[i], su[i + 1], 1.0 / h, 0.0);
        let d_g1 = kern.adjacent(su[i], su[i + 1], 0.0, 1.0 / h);
        // gv0 = (v_{i+1}-v_i)/h, gv1 = (v_{i+2}-v_{i+1})/h
        grad[i] -= d_g0;
        grad[i + 1] += d_g0 - d_g1;
        grad[i + 2] += d_g1;
    }

    // far pairs
    for i in 0..n_cells {
        for j in i + 2..n_cells {
            let tab = &kern.kern[j - i - 2];
            for a in 0..g {
                let xa = kern.gx[a];
                for b in 0..g {
                    let xb = kern.gx[b];
                    let du = ug[i * g + a] - ug[j * g + b];
                    let base = 2.0 * tab[a * g + b] * phi_p(du, p);
                    grad[i] += base * (1.0 - xa);
                    grad[i + 1] += base * xa;
                    grad[j] -= base * (1.0 - xb);
                    grad[j + 1] -= base * xb;
                }
            }
        }
    }

    // exterior: d/dv of 2 \int |u|^{p-2} u v rho
    if cfg.quad.exterior_correction {
        for cell in 0..n_cells {
            let x0 = mesh.node(cell);
            for (x, w) in cell_quad_points(&mesh, cell, &kern.gx, &kern.gw, true) {
                let t = (x - x0) / h;
                let rho = exterior_density(x, cfg).expect("gauss point interior");
                let base = 2.0 * w * phi_p(u.eval(x), p) * rho;
                grad[cell] += base * (1.0 - t);
                grad[cell + 1] += base * t;
            }
        }
    }

    for gk in grad.iter_mut() {
        *gk *= p;
    }
    grad[0] = 0.0;
    grad[n - 1] = 0.0;
    Ok(grad)
}

/// Dense stiffness matrix of the p = 2 pairing (same s and scheme), row
/// major. `u^T K v` reproduces [`weak_pairing`] at p = 2 up to rounding.
pub fn stiffness_p2(mesh: Mesh1d, cfg: &ValidatedConfig) -> Vec<f64> {
    let kern = PairKernel::new(mesh, 2.0, cfg.s, cfg.quad);
    let n = mesh.n_nodes;
    let n_cells = mesh.n_cells();
    let h = mesh.h();
    let g = kern.gx.len();
    let mut k_mat = vec![0.0; n * n];
    let add = |r: usize, c: usize, v: f64, k_mat: &mut Vec<f64>| {
        k_mat[r * n + c] += v;
    };

    // same cell: coeff * gu * gv with g = (u_{i+1} - u_i)/h
    for i in 0..n_cells {
        let c = match kern.scheme.diagonal_treatment {
            DiagonalTreatment::AnalyticLinear => kern.same_cell_coeff / (h * h),
            DiagonalTreatment::Offset => kern.same_cell(1.0 / h, 1.0 / h),
        };
        add(i, i, c, &mut k_mat);
        add(i + 1, i + 1, c, &mut k_mat);
        add(i, i + 1, -c, &mut k_mat);
        add(i + 1, i, -c, &mut k_mat);
    }

    // adjacent pairs: expand the bilinear Duffy integral in the slope pairs
    for i in 0..n_cells - 1 {
        // basis slopes for (v_i, v_{i+1}, v_{i+2}) on cells (i, i+1)
        let slope_basis = [(-1.0 / h, 0.0), (1.0 / h, -1.0 / h), (0.0, 1.0 / h)];
        for (r, &(gu0, gu1)) in slope_basis.iter().enumerate() {
            for (c, &(gv0, gv1)) in slope_basis.iter().enumerate() {
                let v = kern.adjacent(gu0, gu1, gv0, gv1);
                add(i + r, i + c, v, &mut k_mat);
            }
        }
    }

    // far pairs
    for i in 0..n_cells {
        for j in i + 2..n_cells {
            let tab = &kern.kern[j - i - 2];
            for a in 0..g {
                let xa = kern.gx[a];
                for b in 0..g {
                    let xb = kern.gx[b];
                    let w = 2.0 * tab[a * g + b];
                    // (u(xa) - u(yb)) (v(xa) - v(yb)) over nodes i,i+1,j,j+1
                    let coeff = [(i, 1.0 - xa), (i + 1, xa), (j, -(1.0 - xb)), (j + 1, -xb)];
                    for &(r, cr) in &coeff {
                        for &(c, cc) in &coeff {
                            add(r, c, w * cr * cc, &mut k_mat);
                        }
                    }
                }
            }
        }
    }

    // exterior: 2 \int u v rho
    if cfg.quad.exterior_correction {
        for cell in 0..n_cells {
            let x0 = mesh.node(cell);
            for (x, w) in cell_quad_points(&mesh, cell, &kern.gx, &kern.gw, true) {
                let t = (x - x0) / h;
                let rho = exterior_density(x, cfg).expect("gauss point interior");
                let v = 2.0 * w * rho;
                add(cell, cell, v * (1.0 - t) * (1.0 - t), &mut k_mat);
                add(cell, cell + 1, v * (1.0 - t) * t, &mut k_mat);
                add(cell + 1, cell, v * t * (1.0 - t), &mut k_mat);
                add(cell + 1, cell + 1, v * t * t, &mut k_mat);
            }
        }
    }

    k_mat
}

/// `||hat_k||^p` for every node (0 on the boundary nodes), computed by the
/// same cell-pair rules restricted to the hat's two support cells.
pub fn hat_norms_p(mesh: Mesh1d, cfg: &ValidatedConfig) -> Vec<f64> {
    let kern = PairKernel::for_config(mesh, cfg);
    hat_norms_with(&kern, cfg)
}

pub(crate) fn hat_norms_with(kern: &PairKernel, cfg: &ValidatedConfig) -> Vec<f64> {
    let mesh = kern.mesh;
    let n = mesh.n_nodes;
    let n_cells = mesh.n_cells();
    let h = mesh.h();
    let g = kern.gx.len();
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        // supp hat_k = cells k-1, k; slopes +1/h, -1/h
        let cl = k - 1;
        let cr = k;
        let mut acc = kern.same_cell(1.0 / h, 1.0 / h) + kern.same_cell(-1.0 / h, -1.0 / h);
        // touching pairs inside and on the edge of the support
        acc += kern.adjacent(1.0 / h, -1.0 / h, 1.0 / h, -1.0 / h);
        if cl >= 1 {
            acc += kern.adjacent(0.0, 1.0 / h, 0.0, 1.0 / h);
        }
        if cr + 1 < n_cells {
            acc += kern.adjacent(-1.0 / h, 0.0, -1.0 / h, 0.0);
        }
        // far pairs: the hat vanishes on the far cell
        for (cell, up) in [(cl, true), (cr, false)] {
            // hat values at the Gauss points of its support cell
            let vals: Vec<f64> = kern
                .gx
                .iter()
                .map(|&x| if up { x } else { 1.0 - x })
                .collect();
            for j in 0..n_cells {
                let d = j.abs_diff(cell);
                if d < 2 {
                    continue;
                }
                let tab = &kern.kern[d - 2];
                let mut pair = 0.0;
                for a in 0..g {
                    for b in 0..g {
                        // kern table is indexed (left-cell point, right-cell
                        // point); the hat vanishes on the far cell
                        let du = if cell < j { vals[a] } else { vals[b] };
                        pair += tab[a * g + b] * phi_p(du, kern.p) * du;
                    }
                }
                acc += 2.0 * pair;
            }
        }
        // exterior part over the two support cells
        if cfg.quad.exterior_correction {
            for (cell, up) in [(cl, true), (cr, false)] {
                let x0 = mesh.node(cell);
                let vals: Vec<f64> = cell_quad_points(&mesh, cell, &kern.gx, &kern.gw, true)
                    .iter()
                    .map(|&(x, w)| {
                        let t = (x - x0) / h;
                        let hv = if up { t } else { 1.0 - t };
                        let rho = exterior_density(x, cfg).expect("interior");
                        2.0 * w * phi_p(hv, kern.p) * hv * rho
                    })
                    .collect();
                acc += tree_sum(&vals);
            }
        }
        out[k] = acc;
    }
    out
}

/// Composite Gauss integral of a pointwise function of (x, u(x)).
fn cell_integral(
    u: &DiscreteFunction,
    n_pts: usize,
    grade_boundary: bool,
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mesh = &u.mesh;
    let (gx, gw) = gauss_unit(n_pts);
    let per_cell: Vec<f64> = (0..mesh.n_cells())
        .map(|cell| {
            let vals: Vec<f64> = cell_quad_points(mesh, cell, &gx, &gw, grade_boundary)
                .iter()
                .map(|&(x, w)| w * f(x, u.eval(x)))
                .collect();
            tree_sum(&vals)
        })
        .collect();
    tree_sum(&per_cell)
}

/// Gauss point count for integrands of power r on piecewise-linear data.
fn points_for_power(cfg: &ValidatedConfig, r: f64) -> usize {
    let needed = (r.abs().ceil() as usize) / 2 + 1;
    cfg.quad.gauss_points_per_cell.max(needed).min(8)
}

/// `\int_Omega |u|^r dx` by composite Gauss quadrature.
pub fn lp_norm_p(u: &DiscreteFunction, r: f64, cfg: &ValidatedConfig) -> f64 {
    assert!(r > 0.0, "lp_norm_p needs r > 0, got {r}");
    cell_integral(u, points_for_power(cfg, r), false, |_, ux| {
        if ux == 0.0 {
            0.0
        } else {
            ux.abs().powf(r)
        }
    })
}

/// `\int_Omega c(x) (u+)^{1-alpha} dx`.
pub fn singular_integral(u: &DiscreteFunction, cfg: &ValidatedConfig) -> f64 {
    let e = 1.0 - cfg.alpha;
    cell_integral(u, points_for_power(cfg, 1.0), true, |x, ux| {
        let up = ux.max(0.0);
        if up == 0.0 {
            0.0
        } else {
            cfg.c_at(x) * up.powf(e)
        }
    })
}

/// `\int_Omega F(x, u+) dx` with `F = w(x) |u|^q / q`; its sign decides
/// membership in X+ versus X-.
pub fn f_primitive_integral(u: &DiscreteFunction, cfg: &ValidatedConfig) -> f64 {
    let q = cfg.q;
    cell_integral(u, points_for_power(cfg, q), false, |x, ux| {
        let up = ux.max(0.0);
        if up == 0.0 {
            0.0
        } else {
            cfg.w_at(x) * up.powf(q) / q
        }
    })
}

/// `\int_Omega f(x, u+) v dx` with `f = w(x) |u|^{q-2} u`.
pub fn f_integral_against(
    u: &DiscreteFunction,
    v: &DiscreteFunction,
    cfg: &ValidatedConfig,
) -> f64 {
    let q = cfg.q;
    let n_pts = points_for_power(cfg, q);
    cell_integral(u, n_pts, false, |x, ux| {
        let up = ux.max(0.0);
        if up == 0.0 {
            0.0
        } else {
            cfg.w_at(x) * up.powf(q - 1.0) * v.eval(x)
        }
    })
}

/// Load vector `L_k = \int g(x, u(x)) hat_k(x) dx` over interior nodes;
/// boundary entries are 0.
pub fn load_vector(
    u: &DiscreteFunction,
    n_pts: usize,
    grade_boundary: bool,
    g: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let mesh = &u.mesh;
    let h = mesh.h();
    let (gx, gw) = gauss_unit(n_pts);
    let mut out = vec![0.0; mesh.n_nodes];
    for cell in 0..mesh.n_cells() {
        let x0 = mesh.node(cell);
        for (x, w) in cell_quad_points(mesh, cell, &gx, &gw, grade_boundary) {
            let t = (x - x0) / h;
            let base = w * g(x, u.eval(x));
            out[cell] += base * (1.0 - t);
            out[cell + 1] += base * t;
        }
    }
    let n = mesh.n_nodes;
    out[0] = 0.0;
    out[n - 1] = 0.0;
    out
}

/// `\int (u+)^{p-1} hat_k`.
pub fn load_lp_power(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Vec<f64> {
    let e = cfg.p - 1.0;
    load_vector(u, points_for_power(cfg, cfg.p), false, |_, ux| {
        let up = ux.max(0.0);
        if up == 0.0 {
            0.0
        } else {
            up.powf(e)
        }
    })
}

/// `\int c(x) (u+ floored)^{-alpha} hat_k`. With `floor = None` the iterate
/// must be strictly positive on interior nodes.
pub fn load_singular(
    u: &DiscreteFunction,
    cfg: &ValidatedConfig,
    floor: Option<f64>,
) -> Result<Vec<f64>> {
    if floor.is_none() {
        let n = u.mesh.n_nodes;
        if u.values[1..n - 1].iter().any(|&v| v <= 0.0) {
            return Err(Error::SingularEvaluation);
        }
    }
    let fl = floor.unwrap_or(0.0);
    let e = -cfg.alpha;
    Ok(load_vector(u, points_for_power(cfg, 1.0), true, |x, ux| {
        let up = ux.max(0.0).max(fl);
        if up == 0.0 {
            0.0
        } else {
            cfg.c_at(x) * up.powf(e)
        }
    }))
}

/// `\int f(x, u+) hat_k` with `f = w |u|^{q-2} u`.
pub fn load_nonlinearity(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Vec<f64> {
    let e = cfg.q - 1.0;
    load_vector(u, points_for_power(cfg, cfg.q), false, |x, ux| {
        let up = ux.max(0.0);
        if up == 0.0 {
            0.0
        } else {
            cfg.w_at(x) * up.powf(e)
        }
    })
}
