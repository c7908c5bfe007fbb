//! Linearization of the parabolic right-hand side around an equilibrium.
//!
//! For a unit field `m` and any `delta`,
//! `F(m + delta) - F(m) = L(m) delta + R(m)(delta)`
//! where `L` is linear and `R` collects the quadratic and cubic terms.

use alloc::format;
use alloc::vec::Vec;

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Problem;
use crate::grid::{inner_products, l2_inner, DomainMask, Grid3, VectorField};
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `m = +u`, aligned with the applied field.
    Plus,
    /// `m = -u`, anti-aligned.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        }
    }
}

/// Uniform equilibrium `m = +-u` under `h_ext = lambda u`, with `u` an
/// eigenvector of the demag tensor for eigenvalue `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEquilibrium {
    pub u: Vec3,
    pub d: f64,
    pub lambda: f64,
    pub branch: Branch,
}

impl ConstantEquilibrium {
    pub fn new(tensor: &Mat3, u: Vec3, lambda: f64, branch: Branch) -> Result<Self> {
        if (u.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::param("u", format!("must be a unit vector, |u| = {}", u.norm())));
        }
        let du = tensor * u;
        let d = u.dot(&du);
        if (du - u * d).norm() > 1e-10 {
            return Err(Error::param("u", "must be an eigenvector of the demag tensor"));
        }
        if !(d > 0.0) {
            return Err(Error::param("d", format!("eigenvalue must be positive, got {d}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
        }
        Ok(Self { u, d, lambda, branch })
    }

    /// The equilibrium direction `+-u`.
    pub fn direction(&self) -> Vec3 {
        self.u * self.branch.sign()
    }

    pub fn field(&self, mask: &DomainMask) -> VectorField {
        VectorField::uniform(mask, self.direction())
    }
}

/// Admissible perturbation: `|m_eq + delta| = 1` on every masked cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub delta: VectorField,
    pub base: VectorField,
}

impl Perturbation {
    pub fn new(base: VectorField, delta: VectorField, grid: &Grid3, mask: &DomainMask) -> Result<Self> {
        base.check(grid)?;
        delta.check(grid)?;
        for i in mask.cells() {
            let dev = ((base[i] + delta[i]).norm() - 1.0).abs();
            if dev > 1e-12 {
                let [x, y, z] = grid.coords(i);
                return Err(Error::param(
                    "delta",
                    format!("|m_eq + delta| deviates from 1 by {dev:e} at cell ({x}, {y}, {z})"),
                ));
            }
        }
        Ok(Self { delta, base })
    }

    pub fn perturbed(&self) -> VectorField {
        self.base.add(&self.delta)
    }
}

/// `|| m x h_T(t, m) ||_{L2}`; zero exactly at equilibria.
pub fn equilibrium_residual(problem: &Problem, t: f64, m: &VectorField) -> Result<f64> {
    problem.residual(t, m)
}

/// `h_d(m) + h_ext(t)`, the non-exchange part of the field.
fn non_exchange_field(problem: &Problem, t: f64, m: &VectorField) -> Result<VectorField> {
    Ok(problem.demag_of(m)?.add(&problem.h_ext(t)?))
}

/// Linear part `L(t, m_eq) delta`.
pub fn linearized_apply(problem: &Problem, t: f64, m_eq: &VectorField, delta: &VectorField, alpha: f64) -> Result<VectorField> {
    let g_mm = problem.grad_pairing(m_eq, m_eq)?;
    let g_md = problem.grad_pairing(m_eq, delta)?;
    let h_t = problem.total_field(t, m_eq)?;
    let h_n = non_exchange_field(problem, t, m_eq)?;
    let lap_d = problem.laplacian(delta)?;
    let hd_d = problem.demag_of(delta)?;
    let mut out = VectorField::zeros(delta.len());
    for i in problem.mask.cells() {
        let (m, d) = (m_eq[i], delta[i]);
        out[i] = d * (alpha * g_mm[i]) + m * (2.0 * alpha * g_md[i]) + d.cross(&h_t[i]) + m.cross(&(lap_d[i] + hd_d[i]))
            - d.cross(&m.cross(&h_n[i])) * alpha
            - m.cross(&d.cross(&h_n[i])) * alpha
            - m.cross(&m.cross(&hd_d[i])) * alpha;
    }
    Ok(out)
}

/// Nonlinear part `R(t, m_eq)(delta)`, including `alpha |grad delta|^2 m_eq`.
pub fn remainder_apply(problem: &Problem, t: f64, m_eq: &VectorField, delta: &VectorField, alpha: f64) -> Result<VectorField> {
    let g_md = problem.grad_pairing(m_eq, delta)?;
    let g_dd = problem.grad_pairing(delta, delta)?;
    let h_n = non_exchange_field(problem, t, m_eq)?;
    let lap_d = problem.laplacian(delta)?;
    let hd_d = problem.demag_of(delta)?;
    let mut out = VectorField::zeros(delta.len());
    for i in problem.mask.cells() {
        let (m, d, hd) = (m_eq[i], delta[i], hd_d[i]);
        out[i] = d * (2.0 * alpha * g_md[i]) + d * (alpha * g_dd[i]) + m * (alpha * g_dd[i]) + d.cross(&(lap_d[i] + hd))
            - d.cross(&d.cross(&h_n[i])) * alpha
            - d.cross(&m.cross(&hd)) * alpha
            - m.cross(&d.cross(&hd)) * alpha
            - d.cross(&d.cross(&hd)) * alpha;
    }
    Ok(out)
}

/// `L(+-u) delta = (lambda -+ d) delta x u +- u x (Lap delta + h_d delta)
///   + alpha (d -+ lambda) u x (delta x u) - alpha u x (u x h_d delta)`.
pub fn constant_equilibrium_apply(problem: &Problem, ce: &ConstantEquilibrium, delta: &VectorField, alpha: f64) -> Result<VectorField> {
    let s = ce.branch.sign();
    let u = ce.u;
    let lap_d = problem.laplacian(delta)?;
    let hd_d = problem.demag_of(delta)?;
    let mut out = VectorField::zeros(delta.len());
    for i in problem.mask.cells() {
        let d = delta[i];
        out[i] = d.cross(&u) * (ce.lambda - s * ce.d) + u.cross(&(lap_d[i] + hd_d[i])) * s
            + u.cross(&d.cross(&u)) * (alpha * (ce.d - s * ce.lambda))
            - u.cross(&u.cross(&hd_d[i])) * alpha;
    }
    Ok(out)
}

/// `(L delta | delta)_{L2} + (Lap L delta | Lap delta)_{L2}`.
pub fn h2_quadratic_form(problem: &Problem, t: f64, m_eq: &VectorField, delta: &VectorField, alpha: f64) -> Result<f64> {
    let ld = linearized_apply(problem, t, m_eq, delta, alpha)?;
    Ok(inner_products(&ld, delta, &problem.grid, &problem.mask)?.h2)
}

/// Exact `(L delta | delta)` for a single cell of volume `volume` with
/// tensor demag and a constant `delta`:
/// `V [-+ delta.(u x D delta) + alpha (d -+ lambda) |delta x u|^2
///   + alpha ((u.D delta)(u.delta) - delta.D delta)]`.
pub fn macrospin_form(ce: &ConstantEquilibrium, tensor: &Mat3, delta: Vec3, alpha: f64, volume: f64) -> f64 {
    let s = ce.branch.sign();
    let u = ce.u;
    let dd = tensor * delta;
    volume
        * (-s * delta.dot(&u.cross(&dd)) + alpha * (ce.d - s * ce.lambda) * delta.cross(&u).norm_squared()
            + alpha * (u.dot(&dd) * u.dot(&delta) - delta.dot(&dd)))
}

/// Random smooth admissible perturbation of size `s` around `m_eq`.
///
/// The tangent direction field is a random combination of the cosine modes
/// with at most two half-waves per axis, projected onto the tangent plane of
/// `m_eq` and scaled to unit sup norm.
pub fn sample_admissible_perturbation(
    grid: &Grid3,
    mask: &DomainMask,
    m_eq: &VectorField,
    s: f64,
    seed: u64,
) -> Result<Perturbation> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
    }
    m_eq.check(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = grid.dims();
    let kmax = dims.map(|n| n.min(3));
    let mut coeffs: Vec<([usize; 3], Vec3)> = Vec::new();
    for r in 0..kmax[2] {
        for q in 0..kmax[1] {
            for p in 0..kmax[0] {
                let c = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let decay = 1.0 / (1.0 + (p * p + q * q + r * r) as f64);
                coeffs.push(([p, q, r], c * decay));
            }
        }
    }
    let basis = |a: usize, k: usize, i: usize| (core::f64::consts::PI * k as f64 * (i as f64 + 0.5) / dims[a] as f64).cos();
    let mut tau = VectorField::zeros(grid.len());
    for idx in mask.cells() {
        let [i, j, k] = grid.coords(idx);
        let raw: Vec3 = coeffs
            .iter()
            .map(|([p, q, r], c)| c * (basis(0, *p, i) * basis(1, *q, j) * basis(2, *r, k)))
            .sum();
        let m = m_eq[idx];
        tau[idx] = raw - m * m.dot(&raw);
    }
    let peak = tau.max_norm();
    if !(peak > 0.0) {
        return Err(Error::param("m_eq", "no tangent direction could be sampled"));
    }
    let tau = tau.scale(1.0 / peak);
    let mut moved = m_eq.clone();
    moved.axpy(s, &tau);
    let unit = crate::grid::normalize_pointwise(&moved, grid, mask)?;
    let mut delta = unit.sub(m_eq);
    delta.restrict(mask);
    Perturbation::new(m_eq.clone(), delta, grid, mask)
}

/// Settings of a macrospin dissipation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationScan {
    pub tensor: Mat3,
    pub u: Vec3,
    pub volume: f64,
    pub lambdas: Vec<f64>,
    pub alpha: f64,
    pub s: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Only amplitudes at or above this value enter the slope fit.
    pub fit_from: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub branch: Branch,
    /// Largest `form / ||delta||_{H2}^2` over the samples.
    pub worst_ratio: f64,
    /// Smallest ratio over the samples.
    pub best_ratio: f64,
    /// Form value of the sample attaining `worst_ratio`.
    pub worst_form: f64,
    /// Empirical dissipation constant, `-worst_ratio`.
    pub c_lin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub rows: Vec<ScanRow>,
    /// Smallest scanned amplitude from which on every `+` sample is dissipative.
    pub threshold: Option<f64>,
    /// Least-squares slope and intercept of the `+` worst ratio against amplitude.
    pub plus_slope: f64,
    pub plus_intercept: f64,
}

impl DissipationReport {
    pub fn row(&self, lambda: f64, branch: Branch) -> Option<&ScanRow> {
        self.rows.iter().find(|r| r.lambda == lambda && r.branch == branch)
    }
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_affine(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Scans the H2 form over sampled admissible perturbations of both constant
/// equilibria of a macrospin, for every amplitude in `lambdas`.
pub fn dissipation_scan(cfg: &DissipationScan) -> Result<DissipationReport> {
    if cfg.lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::param("lambdas", "amplitudes must be non-negative"));
    }
    if cfg.n_samples == 0 {
        return Err(Error::param("n_samples", "at least one sample is required"));
    }
    if !(cfg.alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be positive, got {}", cfg.alpha)));
    }
    let mut rows = Vec::with_capacity(2 * cfg.lambdas.len());
    for &lambda in &cfg.lambdas {
        let schedule = crate::schedule::FieldSchedule::constant(lambda, cfg.u)?;
        let problem = Problem::macrospin(cfg.volume, cfg.tensor, schedule)?;
        for branch in [Branch::Plus, Branch::Minus] {
            let ce = ConstantEquilibrium::new(&cfg.tensor, cfg.u, lambda, branch)?;
            let m_eq = ce.field(&problem.mask);
            let mut worst = (f64::NEG_INFINITY, 0.0);
            let mut best = f64::INFINITY;
            for n in 0..cfg.n_samples {
                let seed = cfg.seed.wrapping_add(n as u64);
                let p = sample_admissible_perturbation(&problem.grid, &problem.mask, &m_eq, cfg.s, seed)?;
                let form = h2_quadratic_form(&problem, 0.0, &m_eq, &p.delta, cfg.alpha)?;
                let norm2 = inner_products(&p.delta, &p.delta, &problem.grid, &problem.mask)?.h2;
                let ratio = form / norm2;
                if ratio > worst.0 {
                    worst = (ratio, form);
                }
                best = best.min(ratio);
            }
            rows.push(ScanRow {
                lambda,
                branch,
                worst_ratio: worst.0,
                best_ratio: best,
                worst_form: worst.1,
                c_lin: -worst.0,
            });
        }
    }
    let mut plus: Vec<&ScanRow> = rows.iter().filter(|r| r.branch == Branch::Plus).collect();
    plus.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut threshold = None;
    for r in plus.iter().rev() {
        if r.worst_ratio < 0.0 {
            threshold = Some(r.lambda);
        } else {
            break;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = plus.iter().filter(|r| r.lambda >= cfg.fit_from).map(|r| (r.lambda, r.worst_ratio)).unzip();
    let (plus_slope, plus_intercept) = fit_affine(&xs, &ys).unwrap_or((f64::NAN, f64::NAN));
    Ok(DissipationReport {
        rows,
        threshold,
        plus_slope,
        plus_intercept,
    })
}

/// `F(t, m + delta) - F(t, m)`, the left side of the decomposition.
pub fn rhs_increment(problem: &Problem, t: f64, m: &VectorField, delta: &VectorField, alpha: f64) -> Result<VectorField> {
    let moved = m.add(delta);
    Ok(problem.parabolic_rhs(t, &moved, alpha)?.sub(&problem.parabolic_rhs(t, m, alpha)?))
}

/// `||a||_{L2}` over the masked cells.
pub fn l2_norm(u: &VectorField, mask: &DomainMask) -> f64 {
    l2_inner(u, u, mask).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::FieldSchedule;

    fn sphere(lambda: f64) -> Problem {
        Problem::macrospin(1.0, Mat3::identity() / 3.0, FieldSchedule::constant(lambda, Vec3::z()).unwrap()).unwrap()
    }

    fn ce(lambda: f64, branch: Branch) -> ConstantEquilibrium {
        ConstantEquilibrium::new(&(Mat3::identity() / 3.0), Vec3::z(), lambda, branch).unwrap()
    }

    #[test]
    fn residual_cases() {
        let p = sphere(2.0);
        for m in [Vec3::z(), -Vec3::z()] {
            assert!(equilibrium_residual(&p, 0.0, &p.uniform(m)).unwrap() < 1e-14);
        }
        // m = e1, h_T = 2 e3 - e1/3; cross product magnitude is 2
        let v = 2.0;
        let q = Problem::macrospin(v, Mat3::identity() / 3.0, FieldSchedule::constant(2.0, Vec3::z()).unwrap()).unwrap();
        let r = equilibrium_residual(&q, 0.0, &q.uniform(Vec3::x())).unwrap();
        assert!((r - 2.0 * v.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_delta_gives_zero() {
        let p = sphere(3.0);
        let m = p.uniform(Vec3::z());
        let z = VectorField::zeros(1);
        assert_eq!(linearized_apply(&p, 0.0, &m, &z, 1.0).unwrap()[0], Vec3::zeros());
        assert_eq!(remainder_apply(&p, 0.0, &m, &z, 1.0).unwrap()[0], Vec3::zeros());
        assert_eq!(constant_equilibrium_apply(&p, &ce(3.0, Branch::Plus), &z, 1.0).unwrap()[0], Vec3::zeros());
        assert_eq!(h2_quadratic_form(&p, 0.0, &m, &z, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_formula_matches_general_operator() {
        let d = Mat3::from_diagonal(&Vec3::new(0.4, 0.4, 0.2));
        for branch in [Branch::Plus, Branch::Minus] {
            let lambda = 1.7;
            let p = Problem::macrospin(1.3, d, FieldSchedule::constant(lambda, Vec3::z()).unwrap()).unwrap();
            let c = ConstantEquilibrium::new(&d, Vec3::z(), lambda, branch).unwrap();
            let m = c.field(&p.mask);
            let delta = VectorField::from_vec(alloc::vec![Vec3::new(0.3, -0.2, 0.05)]);
            let a = linearized_apply(&p, 0.0, &m, &delta, 0.8).unwrap()[0];
            let b = constant_equilibrium_apply(&p, &c, &delta, 0.8).unwrap()[0];
            assert!((a - b).norm() < 1e-12, "{branch:?}");
        }
    }

    #[test]
    fn constant_formula_expansion_for_tangent_delta() {
        let p = sphere(4.0);
        let c = ce(4.0, Branch::Plus);
        let dv = Vec3::new(0.1, -0.2, 0.0);
        let out = constant_equilibrium_apply(&p, &c, &VectorField::from_vec(alloc::vec![dv]), 0.5).unwrap()[0];
        let hd = -dv / 3.0;
        let expect = dv.cross(&Vec3::z()) * (4.0 - 1.0 / 3.0) + Vec3::z().cross(&hd) + dv * (0.5 * (1.0 / 3.0 - 4.0))
            - Vec3::z().cross(&Vec3::z().cross(&hd)) * 0.5;
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn decomposition_is_exact_for_macrospin() {
        let d = Mat3::new(0.3, 0.05, 0.0, 0.05, 0.3, 0.0, 0.0, 0.0, 0.4);
        let p = Problem::macrospin(1.0, d, FieldSchedule::constant(1.5, Vec3::new(0.2, 0.1, 1.0)).unwrap()).unwrap();
        let m = p.uniform(Vec3::new(0.6, 0.0, 0.8));
        let delta = VectorField::from_vec(alloc::vec![Vec3::new(-0.1, 0.3, 0.05)]);
        let lhs = rhs_increment(&p, 0.0, &m, &delta, 0.9).unwrap();
        let rhs = linearized_apply(&p, 0.0, &m, &delta, 0.9).unwrap().add(&remainder_apply(&p, 0.0, &m, &delta, 0.9).unwrap());
        assert!((lhs[0] - rhs[0]).norm() <= 1e-14 * lhs[0].norm().max(1.0));
    }

    #[test]
    fn sampled_perturbations_are_admissible_and_deterministic() {
        let p = sphere(1.0);
        let m = p.uniform(Vec3::z());
        let a = sample_admissible_perturbation(&p.grid, &p.mask, &m, 1e-2, 11).unwrap();
        let b = sample_admissible_perturbation(&p.grid, &p.mask, &m, 1e-2, 11).unwrap();
        assert_eq!(a, b);
        let d = a.delta[0];
        assert!(((Vec3::z() + d).norm() - 1.0).abs() < 1e-15);
        assert!((d.norm_squared() + 2.0 * d.z).abs() < 1e-12);
        assert!(sample_admissible_perturbation(&p.grid, &p.mask, &m, 1.5, 1).is_err());
    }

    #[test]
    fn sign_of_form_at_large_field() {
        let p = sphere(10.0);
        for (branch, positive) in [(Branch::Plus, false), (Branch::Minus, true)] {
            let m = ce(10.0, branch).field(&p.mask);
            let pert = sample_admissible_perturbation(&p.grid, &p.mask, &m, 1e-2, 3).unwrap();
            let f = h2_quadratic_form(&p, 0.0, &m, &pert.delta, 1.0).unwrap();
            assert_eq!(f > 0.0, positive, "{branch:?} {f}");
            assert!(f != 0.0);
        }
    }

    #[test]
    fn closed_form_at_zero_field() {
        let d = Mat3::from_diagonal(&Vec3::new(0.45, 0.35, 0.2));
        let p = Problem::macrospin(2.0, d, FieldSchedule::constant(0.0, Vec3::z()).unwrap()).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let c = ConstantEquilibrium::new(&d, Vec3::z(), 0.0, branch).unwrap();
            let m = c.field(&p.mask);
            let pert = sample_admissible_perturbation(&p.grid, &p.mask, &m, 0.05, 2).unwrap();
            let f = h2_quadratic_form(&p, 0.0, &m, &pert.delta, 0.7).unwrap();
            let closed = macrospin_form(&c, &d, pert.delta[0], 0.7, 2.0);
            assert!((f - closed).abs() < 1e-14 * closed.abs().max(1e-3), "{f} {closed}");
        }
    }

    #[test]
    fn scan_slope_and_threshold() {
        let cfg = DissipationScan {
            tensor: Mat3::identity() / 3.0,
            u: Vec3::z(),
            volume: 1.0,
            lambdas: alloc::vec![0.5, 1.0, 5.0, 10.0, 20.0],
            alpha: 1.0,
            s: 1e-2,
            n_samples: 20,
            seed: 1,
            fit_from: 5.0,
        };
        let rep = dissipation_scan(&cfg).unwrap();
        assert!((rep.plus_slope + 1.0).abs() < 0.05);
        assert_eq!(rep.threshold, Some(0.5));
        let minus: Vec<f64> = rep.rows.iter().filter(|r| r.branch == Branch::Minus).map(|r| r.worst_ratio).collect();
        assert!(minus.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn affine_fit() {
        let (a, b) = fit_affine(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        assert!(fit_affine(&[1.0], &[1.0]).is_none());
    }
}
