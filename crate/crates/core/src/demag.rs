//! Demagnetizing field.
//!
//! On grids the field is evaluated spectrally: the magnetization is extended
//! by zero into a box padded at least twofold along the longest axis, transformed, multiplied
//! by `-xi (xi . ) / |xi|^2`, and transformed back. On a single macrospin cell
//! a depolarization tensor `D` gives `h_d = -D m`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::Fft3;
use crate::grid::{mean_magnetization, DomainMask, EllipsoidSpec, Grid3, VectorField};
use crate::{Error, Mat3, Result, Vec3};

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

/// Spectral demag operator for one grid.
#[derive(Debug, Clone)]
pub struct FftDemag {
    dims: [usize; 3],
    spacing: [f64; 3],
    padded: [usize; 3],
    /// Angular frequency per padded index along each axis (Nyquist taken positive).
    freqs: [Vec<f64>; 3],
    fft: Fft3,
}

impl FftDemag {
    pub fn new(grid: &Grid3) -> Self {
        Self::with_padding(grid, 2)
    }

    /// Pads every axis to the next power of two covering `factor` times the
    /// longest physical extent of the grid (`factor >= 2`), so the padded box
    /// is close to a cube. On a cubic lattice the image dipoles sum to zero
    /// once the mean field is fixed by the zero mode below.
    pub fn with_padding(grid: &Grid3, factor: usize) -> Self {
        let factor = factor.max(2);
        let dims = grid.dims();
        let spacing = grid.spacing();
        let longest = (0..3).map(|a| dims[a] as f64 * spacing[a]).fold(0.0, f64::max);
        let padded: [usize; 3] = core::array::from_fn(|a| {
            let cells = ((factor as f64 * longest / spacing[a]) - 1e-9).ceil() as usize;
            cells.max(factor * dims[a]).next_power_of_two()
        });
        let freqs = core::array::from_fn(|a| {
            let n = padded[a];
            (0..n)
                .map(|k| {
                    let folded = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
                    2.0 * PI * folded / (n as f64 * spacing[a])
                })
                .collect()
        });
        Self {
            dims,
            spacing,
            padded,
            freqs,
            fft: Fft3::new(padded),
        }
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.padded
    }

    /// Symbol at padded mode `(p, q, r)`: `-xi xi^T / |xi|^2`, and `-I/3` at
    /// `xi = 0` (the average of the symbol over directions). A Nyquist
    /// component has no sign, so the symbol is averaged over both signs,
    /// which zeroes the off-diagonal entries it touches.
    pub fn multiplier(&self, p: usize, q: usize, r: usize) -> Mat3 {
        let idx = [p, q, r];
        let xi = Vec3::new(self.freqs[0][p], self.freqs[1][q], self.freqs[2][r]);
        let n2 = xi.norm_squared();
        if n2 == 0.0 {
            return -Mat3::identity() / 3.0;
        }
        let mut m = -(xi * xi.transpose()) / n2;
        for a in 0..3 {
            if self.padded[a] > 1 && 2 * idx[a] == self.padded[a] {
                for b in 0..3 {
                    if b != a {
                        m[(a, b)] = 0.0;
                        m[(b, a)] = 0.0;
                    }
                }
            }
        }
        m
    }

    fn matches(&self, grid: &Grid3) -> Result<()> {
        if grid.dims() != self.dims || grid.spacing() != self.spacing {
            return Err(Error::ModeMismatch(format!(
                "FFT demag built for {:?} cells of {:?}, applied to {:?} cells of {:?}",
                self.dims,
                self.spacing,
                grid.dims(),
                grid.spacing()
            )));
        }
        Ok(())
    }

    /// Field on the whole padded box, x fastest.
    pub fn apply_padded(&self, m: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<Vec<Vec3>> {
        let comps = self.apply_spectral(m, grid, mask)?;
        Ok((0..self.fft.len())
            .map(|i| Vec3::new(comps[0][i].re, comps[1][i].re, comps[2][i].re))
            .collect())
    }

    fn apply_spectral(&self, m: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<[Vec<Complex64>; 3]> {
        self.matches(grid)?;
        m.check(grid)?;
        let [px, py, pz] = self.padded;
        let total = px * py * pz;
        let zero = Complex64::new(0.0, 0.0);
        let mut comps: [Vec<Complex64>; 3] = core::array::from_fn(|_| vec![zero; total]);
        let mut nonzero = [false; 3];
        for idx in mask.cells() {
            let [i, j, k] = grid.coords(idx);
            let p = i + px * (j + py * k);
            for c in 0..3 {
                let v = m[idx][c];
                if v != 0.0 {
                    comps[c][p] = Complex64::new(v, 0.0);
                    nonzero[c] = true;
                }
            }
        }
        if !nonzero.iter().any(|&b| b) {
            return Ok(comps);
        }
        for c in 0..3 {
            if nonzero[c] {
                self.fft.forward(&mut comps[c]);
            }
        }
        for r in 0..pz {
            for q in 0..py {
                for p in 0..px {
                    let idx = p + px * (q + py * r);
                    let mk = self.multiplier(p, q, r);
                    let v = [comps[0][idx], comps[1][idx], comps[2][idx]];
                    for (a, comp) in comps.iter_mut().enumerate() {
                        comp[idx] = v[0] * mk[(a, 0)] + v[1] * mk[(a, 1)] + v[2] * mk[(a, 2)];
                    }
                }
            }
        }
        for comp in comps.iter_mut() {
            self.fft.inverse(comp);
        }
        Ok(comps)
    }

    pub fn apply(&self, m: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
        let [px, py, _] = self.padded;
        let comps = self.apply_spectral(m, grid, mask)?;
        let mut out = VectorField::zeros(grid.len());
        for idx in 0..grid.len() {
            let [i, j, k] = grid.coords(idx);
            let p = i + px * (j + py * k);
            out[idx] = Vec3::new(comps[0][p].re, comps[1][p].re, comps[2][p].re);
        }
        Ok(out)
    }
}

/// Demagnetizing-field model: spectral on grids, tensor on a macrospin.
#[derive(Debug, Clone)]
pub enum DemagModel {
    Fft(FftDemag),
    Tensor(Mat3),
}

impl DemagModel {
    pub fn fft(grid: &Grid3) -> Self {
        DemagModel::Fft(FftDemag::new(grid))
    }

    /// Depolarization tensor; must be symmetric positive definite.
    pub fn tensor(d: Mat3) -> Result<Self> {
        let asym = (d - d.transpose()).amax();
        if asym > 1e-12 * d.amax().max(1.0) {
            return Err(Error::param("tensor", format!("not symmetric (asymmetry {asym:e})")));
        }
        let eig = d.symmetric_eigenvalues();
        if eig.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::param("tensor", format!("not positive definite (eigenvalues {eig:?})")));
        }
        Ok(DemagModel::Tensor(d))
    }

    /// `D = I/3`, the uniformly magnetized sphere.
    pub fn sphere() -> Self {
        DemagModel::Tensor(Mat3::identity() / 3.0)
    }
}

/// `h_d(m)` restricted to the grid box (zero-extended `m` outside the mask).
pub fn demag_field(model: &DemagModel, m: &VectorField, grid: &Grid3, mask: &DomainMask) -> Result<VectorField> {
    match model {
        DemagModel::Fft(op) => op.apply(m, grid, mask),
        DemagModel::Tensor(d) => {
            if !grid.is_single_cell() {
                return Err(Error::ModeMismatch(format!(
                    "tensor demag applies to single-cell grids only, got {:?} cells",
                    grid.dims()
                )));
            }
            m.check(grid)?;
            Ok(m.map(|v| -(d * v)))
        }
    }
}

/// Depolarization tensor of an ellipsoid: for each axis `e_i`, the volume
/// average of `-h_d(e_i)` over a staircase mask with `resolution` cells
/// across the longest axis.
pub fn demag_tensor_estimate(spec: &EllipsoidSpec, resolution: usize) -> Result<Mat3> {
    if resolution < 2 {
        return Err(Error::param("resolution", format!("must be >= 2, got {resolution}")));
    }
    let grid = spec.bounding_grid(resolution)?;
    let mask = DomainMask::ellipsoid(&grid, spec)?;
    let model = DemagModel::fft(&grid);
    let mut d = Mat3::zeros();
    for axis in 0..3 {
        let mut e = Vec3::zeros();
        e[axis] = 1.0;
        let h = demag_field(&model, &VectorField::uniform(&mask, e), &grid, &mask)?;
        d.set_column(axis, &-mean_magnetization(&h, &mask));
    }
    Ok((d + d.transpose()) * 0.5)
}

/// Exact depolarization factors `(N_a, N_b, N_c)` of a uniformly magnetized
/// ellipsoid, from `N_i = (abc/2) int_0^inf ds / ((a_i^2 + s) sqrt((a^2+s)(b^2+s)(c^2+s)))`.
/// The axes are the coordinate axes, so the tensor is `diag(N)`.
pub fn ellipsoid_demag_factors(spec: &EllipsoidSpec) -> Vec3 {
    let axes = [spec.a, spec.b, spec.c];
    let scale = spec.a.max(spec.b).max(spec.c);
    let [a, b, c] = axes.map(|x| x / scale);
    // s = (x / (1 - x))^2 maps [0, 1) onto [0, inf) with a smooth integrand at both ends.
    let integrand = |i: usize, x: f64| -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        let r = x / (1.0 - x);
        let s = r * r;
        let ds = 2.0 * x / (1.0 - x).powi(3);
        let ai = [a, b, c][i];
        ds / ((ai * ai + s) * ((a * a + s) * (b * b + s) * (c * c + s)).sqrt())
    };
    let n = 4000;
    let h = 1.0 / n as f64;
    let mut out = Vec3::zeros();
    for i in 0..3 {
        let mut acc = integrand(i, 0.0) + integrand(i, 1.0);
        for k in 1..n {
            acc += integrand(i, k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        out[i] = 0.5 * a * b * c * acc * h / 3.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_inner;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(mask: &DomainMask, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = VectorField::zeros(mask.len());
        for i in mask.cells() {
            f[i] = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    #[test]
    fn zero_magnetization_gives_zero_field() {
        let g = Grid3::centered_cube(4, 1.0).unwrap();
        let mask = DomainMask::full(&g);
        let h = demag_field(&DemagModel::fft(&g), &VectorField::zeros(g.len()), &g, &mask).unwrap();
        assert!(h.iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn tensor_branch() {
        let g = Grid3::single_cell(1.0).unwrap();
        let mask = DomainMask::full(&g);
        let d = Mat3::from_diagonal(&Vec3::new(0.1, 0.2, 0.7));
        let model = DemagModel::tensor(d).unwrap();
        let h = demag_field(&model, &VectorField::uniform(&mask, Vec3::x()), &g, &mask).unwrap();
        assert_eq!(h[0], Vec3::new(-0.1, 0.0, 0.0));

        let g8 = Grid3::centered_cube(2, 1.0).unwrap();
        let m8 = DomainMask::full(&g8);
        assert!(matches!(
            demag_field(&model, &VectorField::uniform(&m8, Vec3::x()), &g8, &m8),
            Err(Error::ModeMismatch(_))
        ));
        assert!(DemagModel::tensor(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0))).is_err());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = Grid3::centered_cube(4, 1.0).unwrap();
        let other = Grid3::centered_cube(8, 1.0).unwrap();
        let mask = DomainMask::full(&other);
        let r = demag_field(&DemagModel::fft(&g), &VectorField::zeros(other.len()), &other, &mask);
        assert!(matches!(r, Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn symmetric_negative_and_bounded() {
        let spec = EllipsoidSpec::new(1.0, 0.8, 0.6).unwrap();
        let g = spec.bounding_grid(10).unwrap();
        let mask = DomainMask::ellipsoid(&g, &spec).unwrap();
        let model = DemagModel::fft(&g);
        let DemagModel::Fft(op) = &model else { unreachable!() };
        for seed in 0..3 {
            let u = random_field(&mask, seed);
            let v = random_field(&mask, seed + 100);
            let hu = demag_field(&model, &u, &g, &mask).unwrap();
            let hv = demag_field(&model, &v, &g, &mask).unwrap();
            let a = l2_inner(&hu, &v, &mask);
            let b = l2_inner(&hv, &u, &mask);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            let uu = l2_inner(&u, &u, &mask);
            assert!(l2_inner(&hu, &u, &mask) <= 1e-12 * uu);
            let padded = op.apply_padded(&u, &g, &mask).unwrap();
            let hn: f64 = padded.iter().map(|v| v.norm_squared()).sum::<f64>() * g.cell_volume();
            assert!(hn <= uu * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sphere_tensor_is_isotropic_at_moderate_resolution() {
        let d = demag_tensor_estimate(&EllipsoidSpec::sphere(1.0).unwrap(), 24).unwrap();
        for i in 0..3 {
            assert!((d[(i, i)] - 1.0 / 3.0).abs() < 0.03 / 3.0, "{d}");
            for j in 0..3 {
                if i != j {
                    assert!(d[(i, j)].abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn prolate_ordering() {
        for aspect in [2.0, 4.0] {
            let d = demag_tensor_estimate(&EllipsoidSpec::new(aspect, 1.0, 1.0).unwrap(), 32).unwrap();
            assert!(d[(0, 0)] < d[(1, 1)] && d[(0, 0)] < d[(2, 2)], "{d}");
            assert!((d[(1, 1)] - d[(2, 2)]).abs() < 1e-3);
        }
    }

    #[test]
    fn exact_factors_sum_to_one() {
        let n = ellipsoid_demag_factors(&EllipsoidSpec::sphere(2.0).unwrap());
        assert!((n - Vec3::repeat(1.0 / 3.0)).amax() < 1e-12);
        let n = ellipsoid_demag_factors(&EllipsoidSpec::new(1.0, 0.7, 0.3).unwrap());
        assert!((n.sum() - 1.0).abs() < 1e-10);
        assert!(n.x < n.y && n.y < n.z);
    }

    #[test]
    fn exact_factors_match_prolate_closed_form() {
        for r in [2.0, 4.0] {
            let e: f64 = (1.0 - 1.0 / (r * r)).sqrt();
            let axial = (1.0 - e * e) / (e * e * e) * (e.atanh() - e);
            let n = ellipsoid_demag_factors(&EllipsoidSpec::new(r, 1.0, 1.0).unwrap());
            assert!((n.x - axial).abs() < 1e-10, "{} {axial}", n.x);
            assert!((n.y - 0.5 * (1.0 - axial)).abs() < 1e-10);
        }
    }

    #[test]
    fn staircase_estimate_approaches_exact_factors() {
        let spec = EllipsoidSpec::new(2.0, 1.0, 1.0).unwrap();
        let exact = ellipsoid_demag_factors(&spec);
        let d = demag_tensor_estimate(&spec, 32).unwrap();
        for i in 0..3 {
            assert!((d[(i, i)] - exact[i]).abs() < 0.05 * exact[i], "{d} {exact}");
        }
    }
}
