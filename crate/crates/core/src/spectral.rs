//! Neumann cosine eigenbasis of the box Laplacian and the Galerkin projector.
//!
//! On a full box the mirror-ghost Laplacian is diagonalized exactly by the
//! orthonormal type-II cosine transform along each axis, with eigenvalue
//! `-(2/h^2)(1 - cos(pi k / n))` per axis. Modes are ordered by the eigenvalue
//! of `1 - Lap`, ties broken lexicographically by the mode triple.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::Problem;
use crate::grid::{inner_products, DomainMask, Grid3, VectorField};
use crate::{Error, Result, Vec3};

/// Separable orthonormal cosine transform on a full box.
#[derive(Debug, Clone)]
pub struct CosineTransform {
    dims: [usize; 3],
    /// Row-major `n x n` matrices, `mats[a][k * n + i] = c_k cos(pi k (i + 1/2) / n)`.
    mats: [Vec<f64>; 3],
    /// Per-axis Laplacian eigenvalues (non-positive).
    eig: [Vec<f64>; 3],
}

impl CosineTransform {
    pub fn new(grid: &Grid3) -> Self {
        let dims = grid.dims();
        let spacing = grid.spacing();
        let mats = core::array::from_fn(|a| {
            let n = dims[a];
            let mut m = vec![0.0; n * n];
            for k in 0..n {
                let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                for i in 0..n {
                    m[k * n + i] = c * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
                }
            }
            m
        });
        let eig = core::array::from_fn(|a| {
            let n = dims[a];
            let h = spacing[a];
            (0..n)
                .map(|k| -(2.0 / (h * h)) * (1.0 - (PI * k as f64 / n as f64).cos()))
                .collect()
        });
        Self { dims, mats, eig }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Discrete Laplacian eigenvalue of the mode at flat index `mode`.
    pub fn laplacian_eigenvalue(&self, mode: usize) -> f64 {
        let [nx, ny, _] = self.dims;
        let (p, q, r) = (mode % nx, (mode / nx) % ny, mode / (nx * ny));
        self.eig[0][p] + self.eig[1][q] + self.eig[2][r]
    }

    fn apply_axis(&self, data: &mut [f64], axis: usize, transpose: bool) {
        let n = self.dims[axis];
        if n == 1 {
            return;
        }
        let [nx, ny, nz] = self.dims;
        let stride = [1, nx, nx * ny][axis];
        let mat = &self.mats[axis];
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let bases: Vec<usize> = match axis {
            0 => (0..ny * nz).map(|l| l * nx).collect(),
            1 => (0..nz).flat_map(|k| (0..nx).map(move |i| i + nx * ny * k)).collect(),
            _ => (0..nx * ny).collect(),
        };
        for base in bases {
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + stride * i];
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o = if transpose {
                    (0..n).map(|i| mat[i * n + k] * line[i]).sum()
                } else {
                    (0..n).map(|i| mat[k * n + i] * line[i]).sum()
                };
            }
            for (i, v) in out.iter().enumerate() {
                data[base + stride * i] = *v;
            }
        }
    }

    /// Cell values to mode coefficients.
    pub fn forward(&self, data: &mut [f64]) {
        (0..3).for_each(|a| self.apply_axis(data, a, false));
    }

    /// Mode coefficients to cell values.
    pub fn inverse(&self, data: &mut [f64]) {
        (0..3).for_each(|a| self.apply_axis(data, a, true));
    }

    /// Applies a diagonal multiplier `f(mode)` to each component of `u`.
    pub fn apply_diagonal(&self, u: &VectorField, f: impl Fn(usize) -> f64) -> VectorField {
        let mut out = VectorField::zeros(u.len());
        let mut buf = vec![0.0; u.len()];
        for c in 0..3 {
            for (b, v) in buf.iter_mut().zip(u.iter()) {
                *b = v[c];
            }
            self.forward(&mut buf);
            for (mode, b) in buf.iter_mut().enumerate() {
                *b *= f(mode);
            }
            self.inverse(&mut buf);
            for (o, b) in out.as_mut_slice().iter_mut().zip(&buf) {
                o[c] = *b;
            }
        }
        out
    }
}

pub(crate) fn require_box(mask: &DomainMask) -> Result<()> {
    if !mask.is_full() {
        return Err(Error::ModeMismatch(
            "the cosine basis diagonalizes the Neumann Laplacian on full boxes only; use a box domain".into(),
        ));
    }
    Ok(())
}

/// Eigenbasis of `A = 1 - Lap` on a full box, ordered by eigenvalue.
#[derive(Debug, Clone)]
pub struct NeumannBasis {
    transform: CosineTransform,
    /// `order[r]` is the flat mode index of rank `r`.
    order: Vec<usize>,
    /// `rank[mode]` is the position of `mode` in `order`.
    rank: Vec<usize>,
}

impl NeumannBasis {
    pub fn new(grid: &Grid3, mask: &DomainMask) -> Result<Self> {
        require_box(mask)?;
        let transform = CosineTransform::new(grid);
        let [nx, ny, _] = grid.dims();
        let triple = |m: usize| (m % nx, (m / nx) % ny, m / (nx * ny));
        // Sum the per-axis eigenvalues in sorted order so permuted triples tie exactly.
        let key = |m: usize| {
            let (p, q, r) = triple(m);
            let mut parts = [-transform.eig[0][p], -transform.eig[1][q], -transform.eig[2][r]];
            parts.sort_by(f64::total_cmp);
            1.0 + parts[0] + parts[1] + parts[2]
        };
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| {
            key(a).total_cmp(&key(b)).then_with(|| {
                let (pa, qa, ra) = triple(a);
                let (pb, qb, rb) = triple(b);
                (pa, qa, ra).cmp(&(pb, qb, rb))
            })
        });
        let mut rank = vec![0; order.len()];
        for (r, &m) in order.iter().enumerate() {
            rank[m] = r;
        }
        Ok(Self { transform, order, rank })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn transform(&self) -> &CosineTransform {
        &self.transform
    }

    /// Eigenvalue of `1 - Lap` for the mode of rank `r`.
    pub fn eigenvalue(&self, r: usize) -> f64 {
        1.0 - self.transform.laplacian_eigenvalue(self.order[r])
    }

    /// Per-axis mode numbers of the mode of rank `r`.
    pub fn mode_triple(&self, r: usize) -> [usize; 3] {
        let [nx, ny, _] = self.transform.dims;
        let m = self.order[r];
        [m % nx, (m / nx) % ny, m / (nx * ny)]
    }

    /// Scalar eigenfunction of rank `r` times `direction`.
    pub fn mode_field(&self, r: usize, direction: Vec3) -> VectorField {
        let mut buf = vec![0.0; self.len()];
        buf[self.order[r]] = 1.0;
        self.transform.inverse(&mut buf);
        VectorField::from_vec(buf.iter().map(|&s| direction * s).collect())
    }

    /// `P_k u`: keep the first `k` modes (all of them when `k >= len`).
    pub fn project(&self, u: &VectorField, k: usize) -> VectorField {
        self.transform.apply_diagonal(u, |mode| if self.rank[mode] < k { 1.0 } else { 0.0 })
    }
}

/// `P_k u` on a full box.
pub fn project_pk(basis: &NeumannBasis, u: &VectorField, k: usize, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    require_box(mask)?;
    u.check(grid)?;
    if basis.len() != grid.len() {
        return Err(Error::Shape {
            expected: basis.len(),
            found: grid.len(),
        });
    }
    Ok(basis.project(u, k))
}

/// `|| P_k F(t, n) - F(t, P_k n) ||_{H1}`, the Galerkin commutator at a time slice.
pub fn commutator_pk_f(problem: &Problem, basis: &NeumannBasis, n: &VectorField, k: usize, t: f64, alpha: f64) -> Result<f64> {
    require_box(&problem.mask)?;
    if basis.len() != problem.grid.len() {
        return Err(Error::Shape {
            expected: basis.len(),
            found: problem.grid.len(),
        });
    }
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    let f = problem.parabolic_rhs(t, n, alpha)?;
    let pf = basis.project(&f, k);
    let fp = problem.parabolic_rhs(t, &basis.project(n, k), alpha)?;
    let diff = pf.sub(&fp);
    Ok(inner_products(&diff, &diff, &problem.grid, &problem.mask)?.h1.max(0.0).sqrt())
}
