//! Cell-centred rectangular grids, domain masks and vector fields.
//!
//! Cells are indexed `idx = i + nx * (j + ny * k)`. A field value lives at the
//! centre of each cell. Cells outside the [`DomainMask`] carry zero.
//!
//! Differential operators use mirror ghost cells on every face that leaves the
//! mask, which makes the discrete normal derivative vanish there and keeps the
//! Laplacian symmetric in the discrete L2 product.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, Vec3};

/// Rectangular grid of `nx * ny * nz` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: Vec3,
}

impl Grid3 {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGrid(format!("cell counts must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidGrid(format!("spacings must be positive, got {spacing:?}")));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Single-cell (macrospin) grid of the given volume, centred at the origin.
    pub fn single_cell(volume: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::InvalidGrid(format!("volume must be positive, got {volume}")));
        }
        let h = volume.cbrt();
        Self::new([1, 1, 1], [h; 3], Vec3::from_element(-0.5 * h))
    }

    /// Cube `[-half_length, half_length]^3` split into `n^3` cells.
    pub fn centered_cube(n: usize, half_length: f64) -> Result<Self> {
        let h = 2.0 * half_length / n.max(1) as f64;
        Self::new([n; 3], [h; 3], Vec3::from_element(-half_length))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_single_cell(&self) -> bool {
        self.len() == 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[0].min(self.spacing[1]).min(self.spacing[2])
    }

    /// Geometric centre of the bounding box.
    pub fn center(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                0.5 * self.dims[0] as f64 * self.spacing[0],
                0.5 * self.dims[1] as f64 * self.spacing[1],
                0.5 * self.dims[2] as f64 * self.spacing[2],
            )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn cell_center(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.origin
            + Vec3::new(
                (i as f64 + 0.5) * self.spacing[0],
                (j as f64 + 0.5) * self.spacing[1],
                (k as f64 + 0.5) * self.spacing[2],
            )
    }

    /// Neighbour of `idx` one cell along `axis` in direction `dir` (`+1`/`-1`),
    /// if it lies inside the box.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.coords(idx);
        let stride = match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        };
        if forward {
            (c[axis] + 1 < self.dims[axis]).then(|| idx + stride)
        } else {
            (c[axis] > 0).then(|| idx - stride)
        }
    }
}

/// Semi-axes of an axis-aligned ellipsoid, `a` along x, `b` along y, `c` along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EllipsoidSpec {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::param("semi_axes", format!("must be positive, got ({a}, {b}, {c})")));
        }
        Ok(Self { a, b, c })
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        Self::new(radius, radius, radius)
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * core::f64::consts::PI * self.a * self.b * self.c
    }

    /// Bounding grid centred at the origin with `resolution` cells across the
    /// longest axis and the same spacing along the others.
    pub fn bounding_grid(&self, resolution: usize) -> Result<Grid3> {
        let longest = self.a.max(self.b).max(self.c);
        let h = 2.0 * longest / resolution.max(1) as f64;
        let cells = |r: f64| ((2.0 * r / h).round() as usize).max(1);
        let dims = [cells(self.a), cells(self.b), cells(self.c)];
        let origin = -0.5 * Vec3::new(dims[0] as f64 * h, dims[1] as f64 * h, dims[2] as f64 * h);
        Grid3::new(dims, [h; 3], origin)
    }

    /// Whether `x` (relative to the ellipsoid centre) lies inside.
    pub fn contains(&self, x: &Vec3) -> bool {
        (x.x / self.a).powi(2) + (x.y / self.b).powi(2) + (x.z / self.c).powi(2) <= 1.0
    }
}

/// Indicator of the cells that belong to the magnetic body.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    inside: Vec<bool>,
    count: usize,
    cell_volume: f64,
}

impl DomainMask {
    /// Every cell of the grid.
    pub fn full(grid: &Grid3) -> Self {
        Self {
            inside: vec![true; grid.len()],
            count: grid.len(),
            cell_volume: grid.cell_volume(),
        }
    }

    /// Staircase ellipsoid centred in the grid box.
    pub fn ellipsoid(grid: &Grid3, spec: &EllipsoidSpec) -> Result<Self> {
        let c = grid.center();
        let inside = (0..grid.len()).map(|idx| spec.contains(&(grid.cell_center(idx) - c))).collect();
        Self::from_cells(grid, inside)
    }

    pub fn from_cells(grid: &Grid3, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: inside.len(),
            });
        }
        let count = inside.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::InvalidGrid("domain mask contains no cells".into()));
        }
        Ok(Self {
            inside,
            count,
            cell_volume: grid.cell_volume(),
        })
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn len(&self) -> usize {
        self.inside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inside.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_full(&self) -> bool {
        self.count == self.inside.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn volume(&self) -> f64 {
        self.count as f64 * self.cell_volume
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    fn check(&self, grid: &Grid3) -> Result<()> {
        if self.inside.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: self.inside.len(),
            });
        }
        Ok(())
    }
}

/// R3-valued field sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    data: Vec<Vec3>,
}

impl VectorField {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![Vec3::zeros(); len],
        }
    }

    pub fn from_vec(data: Vec<Vec3>) -> Self {
        Self { data }
    }

    /// Constant `v` on masked cells, zero elsewhere.
    pub fn uniform(mask: &DomainMask, v: Vec3) -> Self {
        Self {
            data: (0..mask.len()).map(|i| if mask.contains(i) { v } else { Vec3::zeros() }).collect(),
        }
    }

    /// `f(cell centre)` on masked cells, zero elsewhere.
    pub fn from_fn(grid: &Grid3, mask: &DomainMask, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        Self {
            data: (0..grid.len())
                .map(|i| if mask.contains(i) { f(grid.cell_center(i)) } else { Vec3::zeros() })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Vec3> {
        self.data
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Vec3> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Pointwise combination of two fields of equal length.
    pub fn zip_map(&self, other: &Self, f: impl Fn(&Vec3, &Vec3) -> Vec3) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self {
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a * s)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn cross(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a.cross(b))
    }

    /// Largest Euclidean norm over all cells.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.norm()))
    }

    /// Zero every cell outside the mask.
    pub fn restrict(&mut self, mask: &DomainMask) {
        for (i, v) in self.data.iter_mut().enumerate() {
            if !mask.contains(i) {
                *v = Vec3::zeros();
            }
        }
    }

    pub(crate) fn check(&self, grid: &Grid3) -> Result<()> {
        if self.data.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: self.data.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for VectorField {
    type Output = Vec3;
    fn index(&self, i: usize) -> &Vec3 {
        &self.data[i]
    }
}

impl IndexMut<usize> for VectorField {
    fn index_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.data[i]
    }
}

fn check_all(grid: &Grid3, mask: &DomainMask, fields: &[&VectorField]) -> Result<()> {
    mask.check(grid)?;
    fields.iter().try_for_each(|f| f.check(grid))
}

/// Seven-point Laplacian with mirror ghost cells across every face that
/// leaves the mask (discrete homogeneous Neumann condition).
pub fn laplacian_neumann(u: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    check_all(grid, mask, &[u])?;
    let inv_h2 = grid.spacing().map(|h| 1.0 / (h * h));
    let mut out = VectorField::zeros(u.len());
    for idx in mask.cells() {
        let ui = u[idx];
        let mut acc = Vec3::zeros();
        for (axis, w) in inv_h2.iter().enumerate() {
            for forward in [false, true] {
                if let Some(j) = grid.neighbor(idx, axis, forward).filter(|&j| mask.contains(j)) {
                    acc += (u[j] - ui) * *w;
                }
            }
        }
        out[idx] = acc;
    }
    Ok(out)
}

/// Per-cell gradient pairing `sum_axis (D+u.D+v + D-u.D-v) / 2` with one-sided
/// differences that vanish across mask faces.
///
/// Its volume sum equals `-(u | Lap v)`, and for unit fields
/// `grad_pairing(m, m) = -m . Lap m` holds cell by cell.
pub fn grad_pairing(u: &VectorField, v: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<Vec<f64>> {
    check_all(grid, mask, &[u, v])?;
    let inv_h2 = grid.spacing().map(|h| 1.0 / (h * h));
    let mut out = vec![0.0; u.len()];
    for idx in mask.cells() {
        let mut acc = 0.0;
        for (axis, w) in inv_h2.iter().enumerate() {
            for forward in [false, true] {
                if let Some(j) = grid.neighbor(idx, axis, forward).filter(|&j| mask.contains(j)) {
                    acc += 0.5 * (u[j] - u[idx]).dot(&(v[j] - v[idx])) * w;
                }
            }
        }
        out[idx] = acc;
    }
    Ok(out)
}

/// Cell-volume weighted `(u | v)` over the mask.
pub fn l2_inner(u: &VectorField, v: &VectorField, mask: &DomainMask) -> f64 {
    mask.cells().map(|i| u[i].dot(&v[i])).sum::<f64>() * mask.cell_volume()
}

/// Discrete L2, H1 and H2 pairings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProducts {
    pub l2: f64,
    /// `l2` plus the gradient pairing.
    pub h1: f64,
    /// `l2` plus the Laplacian pairing `(Lap u | Lap v)`.
    pub h2: f64,
}

pub fn inner_products(u: &VectorField, v: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<InnerProducts> {
    check_all(grid, mask, &[u, v])?;
    let l2 = l2_inner(u, v, mask);
    let g: f64 = grad_pairing(u, v, grid, mask)?.iter().sum::<f64>() * mask.cell_volume();
    let lu = laplacian_neumann(u, grid, mask)?;
    let lv = laplacian_neumann(v, grid, mask)?;
    Ok(InnerProducts {
        l2,
        h1: l2 + g,
        h2: l2 + l2_inner(&lu, &lv, mask),
    })
}

/// `||u||_{H2}` with the L2 + Laplacian pairing.
pub fn h2_norm(u: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<f64> {
    let lu = laplacian_neumann(u, grid, mask)?;
    Ok((l2_inner(u, u, mask) + l2_inner(&lu, &lu, mask)).max(0.0).sqrt())
}

/// Scale every masked cell to unit length.
pub fn normalize_pointwise(u: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    check_all(grid, mask, &[u])?;
    let mut out = VectorField::zeros(u.len());
    for idx in mask.cells() {
        let v = u[idx];
        let n = v.norm();
        if n == 0.0 {
            let [i, j, k] = grid.coords(idx);
            return Err(Error::DegenerateCell { i, j, k });
        }
        out[idx] = if n == 1.0 { v } else { v / n };
    }
    Ok(out)
}

/// Volume average of `u` over the mask.
pub fn mean_magnetization(u: &VectorField, mask: &DomainMask) -> Vec3 {
    let sum = mask.cells().fold(Vec3::zeros(), |acc, i| acc + u[i]);
    sum / mask.count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn box_grid(n: [usize; 3], h: f64) -> (Grid3, DomainMask) {
        let g = Grid3::new(n, [h; 3], Vec3::zeros()).unwrap();
        let m = DomainMask::full(&g);
        (g, m)
    }

    #[test]
    fn constant_field_has_zero_laplacian() {
        let (g, m) = box_grid([5, 4, 3], 0.3);
        let u = VectorField::uniform(&m, Vec3::x());
        let l = laplacian_neumann(&u, &g, &m).unwrap();
        assert!(l.iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn cosine_mode_is_discrete_eigenfield() {
        let n = 12;
        let h = 0.25;
        let (g, m) = box_grid([n, 3, 2], h);
        let len = n as f64 * h;
        let u = VectorField::from_fn(&g, &m, |x| Vec3::new((PI * x.x / len).cos(), 0.0, 0.0));
        let mu = -(2.0 / (h * h)) * (1.0 - (PI * h / len).cos());
        let l = laplacian_neumann(&u, &g, &m).unwrap();
        for i in 0..u.len() {
            assert!((l[i] - u[i] * mu).norm() < 1e-12, "cell {i}");
        }
    }

    #[test]
    fn point_source_stencil() {
        let h = 0.5;
        let (g, m) = box_grid([5, 5, 5], h);
        let mut u = VectorField::zeros(g.len());
        let c = g.index(2, 2, 2);
        u[c] = Vec3::new(1.0, 0.0, 0.0);
        let l = laplacian_neumann(&u, &g, &m).unwrap();
        assert!((l[c].x + 6.0 / (h * h)).abs() < 1e-12);
        for (i, j, k) in [(1, 2, 2), (3, 2, 2), (2, 1, 2), (2, 3, 2), (2, 2, 1), (2, 2, 3)] {
            assert!((l[g.index(i, j, k)].x - 1.0 / (h * h)).abs() < 1e-12);
        }
        assert_eq!(l[g.index(0, 0, 0)], Vec3::zeros());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (g, m) = box_grid([2, 2, 2], 1.0);
        let u = VectorField::zeros(3);
        assert_eq!(
            laplacian_neumann(&u, &g, &m),
            Err(Error::Shape { expected: 8, found: 3 })
        );
    }

    #[test]
    fn inner_products_of_constants_and_orthogonal_fields() {
        let (g, m) = box_grid([3, 4, 5], 0.5);
        let e1 = VectorField::uniform(&m, Vec3::x());
        let e2 = VectorField::uniform(&m, Vec3::y());
        let p = inner_products(&e1, &e1, &g, &m).unwrap();
        assert!((p.l2 - m.volume()).abs() < 1e-12);
        assert!((p.h2 - m.volume()).abs() < 1e-12);
        let q = inner_products(&e1, &e2, &g, &m).unwrap();
        assert_eq!((q.l2, q.h1, q.h2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn h2_of_eigenfield() {
        let n = 10;
        let h = 0.2;
        let (g, m) = box_grid([n, 2, 2], h);
        let len = n as f64 * h;
        let u = VectorField::from_fn(&g, &m, |x| Vec3::new((PI * x.x / len).cos(), 0.0, 0.0));
        let mu = -(2.0 / (h * h)) * (1.0 - (PI * h / len).cos());
        let p = inner_products(&u, &u, &g, &m).unwrap();
        assert!((p.h2 - (1.0 + mu * mu) * p.l2).abs() < 1e-10 * p.h2);
    }

    #[test]
    fn normalize_cases() {
        let (g, m) = box_grid([2, 2, 1], 1.0);
        let u = VectorField::uniform(&m, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(normalize_pointwise(&u, &g, &m).unwrap(), VectorField::uniform(&m, Vec3::x()));
        let w = VectorField::uniform(&m, Vec3::new(1.0, 1.0, 1.0));
        let n = normalize_pointwise(&w, &g, &m).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!(n.iter().all(|v| (v - Vec3::from_element(s)).norm() < 1e-15));
        let unit = VectorField::uniform(&m, Vec3::new(0.6, 0.0, 0.8));
        let once = normalize_pointwise(&unit, &g, &m).unwrap();
        assert_eq!(normalize_pointwise(&once, &g, &m).unwrap(), once);

        let mut z = u.clone();
        z[g.index(1, 0, 0)] = Vec3::zeros();
        assert_eq!(
            normalize_pointwise(&z, &g, &m),
            Err(Error::DegenerateCell { i: 1, j: 0, k: 0 })
        );
    }

    #[test]
    fn mean_magnetization_cases() {
        let (g, m) = box_grid([2, 2, 2], 1.0);
        assert_eq!(mean_magnetization(&VectorField::uniform(&m, Vec3::z()), &m), Vec3::z());
        let half = VectorField::from_fn(&g, &m, |x| if x.x < 1.0 { Vec3::z() } else { -Vec3::z() });
        assert_eq!(mean_magnetization(&half, &m), Vec3::zeros());
        let g1 = Grid3::single_cell(2.0).unwrap();
        let m1 = DomainMask::full(&g1);
        let v = Vec3::new(0.6, 0.0, 0.8);
        assert_eq!(mean_magnetization(&VectorField::uniform(&m1, v), &m1), v);
    }

    #[test]
    fn ellipsoid_mask_volume_converges() {
        let spec = EllipsoidSpec::new(2.0, 1.0, 1.0).unwrap();
        let g = spec.bounding_grid(64).unwrap();
        let m = DomainMask::ellipsoid(&g, &spec).unwrap();
        assert!((m.volume() / spec.volume() - 1.0).abs() < 0.02);
        assert_eq!(g.dims(), [64, 32, 32]);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(Grid3::new([0, 1, 1], [1.0; 3], Vec3::zeros()).is_err());
        assert!(Grid3::new([1, 1, 1], [1.0, 0.0, 1.0], Vec3::zeros()).is_err());
        let g = Grid3::new([2, 1, 1], [1.0; 3], Vec3::zeros()).unwrap();
        assert!(DomainMask::from_cells(&g, vec![false, false]).is_err());
    }
}
