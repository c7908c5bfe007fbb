//! Two-scale Landau-Lifshitz evolution.
//!
//! `eps dm/dt = m x h_T - alpha m x (m x h_T)` with `h_T = Lap m + h_d(m) + h_ext(t)`,
//! equivalently (for unit fields) `eps dm/dt - alpha Lap m = F(t, m)`.
//!
//! Two integrators are provided. `ProjectedExplicit` is an explicit midpoint
//! step on the LL right-hand side; `SemiImplicitSpectral` treats `alpha Lap`
//! implicitly and `F` explicitly. Both project back onto the unit sphere after
//! every step.

use alloc::format;
use alloc::vec::Vec;

// unused when std float methods are in scope (test builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::demag::{demag_field, DemagModel};
use crate::grid::{grad_pairing, h2_norm, l2_inner, laplacian_neumann, mean_magnetization, normalize_pointwise};
use crate::grid::{DomainMask, Grid3, VectorField};
use crate::schedule::{d_dt_h_ext, eval_h_ext, FieldSchedule};
use crate::spectral::CosineTransform;
use crate::{Error, Mat3, Result, Vec3};

/// Geometry, demag model and applied field of one simulation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid3,
    pub mask: DomainMask,
    pub demag: DemagModel,
    pub schedule: FieldSchedule,
}

/// The three contributions to `h_T`.
#[derive(Debug, Clone)]
pub struct FieldParts {
    pub exchange: VectorField,
    pub demag: VectorField,
    pub external: VectorField,
}

impl FieldParts {
    pub fn total(&self) -> VectorField {
        self.exchange.add(&self.demag).add(&self.external)
    }
}

impl Problem {
    pub fn new(grid: Grid3, mask: DomainMask, demag: DemagModel, schedule: FieldSchedule) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: mask.len(),
            });
        }
        if matches!(demag, DemagModel::Tensor(_)) && !grid.is_single_cell() {
            return Err(Error::ModeMismatch("tensor demag requires a single-cell grid".into()));
        }
        Ok(Self {
            grid,
            mask,
            demag,
            schedule,
        })
    }

    /// Single cell of the given volume with depolarization tensor `d`.
    pub fn macrospin(volume: f64, d: Mat3, schedule: FieldSchedule) -> Result<Self> {
        let grid = Grid3::single_cell(volume)?;
        let mask = DomainMask::full(&grid);
        Self::new(grid, mask, DemagModel::tensor(d)?, schedule)
    }

    pub fn volume(&self) -> f64 {
        self.mask.volume()
    }

    pub fn uniform(&self, v: Vec3) -> VectorField {
        VectorField::uniform(&self.mask, v)
    }

    pub fn laplacian(&self, u: &VectorField) -> Result<VectorField> {
        laplacian_neumann(u, &self.grid, &self.mask)
    }

    pub fn demag_of(&self, u: &VectorField) -> Result<VectorField> {
        demag_field(&self.demag, u, &self.grid, &self.mask)
    }

    pub fn h_ext(&self, t: f64) -> Result<VectorField> {
        eval_h_ext(&self.schedule, t, &self.grid, &self.mask)
    }

    /// Per-cell `grad u . grad v`.
    pub fn grad_pairing(&self, u: &VectorField, v: &VectorField) -> Result<Vec<f64>> {
        grad_pairing(u, v, &self.grid, &self.mask)
    }

    pub fn field_parts(&self, t: f64, m: &VectorField) -> Result<FieldParts> {
        Ok(FieldParts {
            exchange: self.laplacian(m)?,
            demag: self.demag_of(m)?,
            external: self.h_ext(t)?,
        })
    }

    /// `h_T(t, m) = Lap m + h_d(m) + h_ext(t)`.
    pub fn total_field(&self, t: f64, m: &VectorField) -> Result<VectorField> {
        Ok(self.field_parts(t, m)?.total())
    }

    /// `m x h_T - alpha m x (m x h_T)` (the LL right-hand side times `eps`).
    pub fn ll_torque(&self, t: f64, m: &VectorField, alpha: f64) -> Result<VectorField> {
        let h = self.total_field(t, m)?;
        Ok(m.zip_map(&h, |m, h| {
            let p = m.cross(h);
            p - m.cross(&p) * alpha
        }))
    }

    /// `(1/eps) [m x h_T - alpha m x (m x h_T)]`.
    pub fn ll_rhs(&self, t: f64, m: &VectorField, epsilon: f64, alpha: f64) -> Result<VectorField> {
        Ok(self.ll_torque(t, m, alpha)?.scale(1.0 / epsilon))
    }

    /// `F(t, m) = m x h_T + alpha |grad m|^2 m - alpha m x (m x (h_d(m) + h_ext(t)))`.
    pub fn parabolic_rhs(&self, t: f64, m: &VectorField, alpha: f64) -> Result<VectorField> {
        let parts = self.field_parts(t, m)?;
        let h = parts.total();
        let g2 = self.grad_pairing(m, m)?;
        let mut out = VectorField::zeros(m.len());
        for i in self.mask.cells() {
            let mi = m[i];
            let hn = parts.demag[i] + parts.external[i];
            out[i] = mi.cross(&h[i]) + mi * (alpha * g2[i]) - mi.cross(&mi.cross(&hn)) * alpha;
        }
        Ok(out)
    }

    /// `E = 1/2 int |grad m|^2 - 1/2 int m . h_d(m) - int m . h_ext(t)`.
    pub fn energy(&self, t: f64, m: &VectorField) -> Result<f64> {
        let exchange: f64 = self.grad_pairing(m, m)?.iter().sum::<f64>() * self.mask.cell_volume();
        let hd = self.demag_of(m)?;
        let he = self.h_ext(t)?;
        Ok(0.5 * exchange - 0.5 * l2_inner(m, &hd, &self.mask) - l2_inner(m, &he, &self.mask))
    }

    /// `|| m x h_T(t, m) ||_{L2}`.
    pub fn residual(&self, t: f64, m: &VectorField) -> Result<f64> {
        let h = self.total_field(t, m)?;
        let c = m.cross(&h);
        Ok(l2_inner(&c, &c, &self.mask).sqrt())
    }

    /// Right-hand side of the energy identity,
    /// `-(alpha/eps) ||m x h_T||^2 - (m | d/dt h_ext)`.
    pub fn energy_rate(&self, t: f64, m: &VectorField, epsilon: f64, alpha: f64) -> Result<f64> {
        let r = self.residual(t, m)?;
        let dh = d_dt_h_ext(&self.schedule, t, &self.grid, &self.mask)?;
        Ok(-(alpha / epsilon) * r * r - l2_inner(m, &dh, &self.mask))
    }

    pub fn normalize(&self, u: &VectorField) -> Result<VectorField> {
        normalize_pointwise(u, &self.grid, &self.mask)
    }

    pub fn h2_distance(&self, a: &VectorField, b: &VectorField) -> Result<f64> {
        h2_norm(&a.sub(b), &self.grid, &self.mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    ProjectedExplicit,
    SemiImplicitSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = c * eps`, capped by the explicit diffusion limit where it applies.
    EpsilonScaled(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    pub dt: DtPolicy,
    pub renormalize: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64, alpha: f64, horizon: f64, integrator: Integrator, dt: DtPolicy) -> Result<Self> {
        let cfg = Self {
            epsilon,
            alpha,
            horizon,
            integrator,
            dt,
            renormalize: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be non-negative, got {}", self.horizon)));
        }
        let v = match self.dt {
            DtPolicy::Fixed(v) | DtPolicy::EpsilonScaled(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {v}")));
        }
        Ok(())
    }

    /// Explicit stability limit `0.2 eps h_min^2 / (6 alpha)` on multi-cell grids.
    pub fn explicit_limit(&self, grid: &Grid3) -> Option<f64> {
        (self.integrator == Integrator::ProjectedExplicit && !grid.is_single_cell())
            .then(|| 0.2 * self.epsilon * grid.min_spacing().powi(2) / (6.0 * self.alpha))
    }

    pub fn time_step(&self, grid: &Grid3) -> Result<f64> {
        let limit = self.explicit_limit(grid);
        match self.dt {
            DtPolicy::Fixed(dt) => match limit {
                Some(l) if dt > l * (1.0 + 1e-12) => Err(Error::param(
                    "dt",
                    format!("{dt} exceeds the explicit limit {l} on this grid"),
                )),
                _ => Ok(dt),
            },
            DtPolicy::EpsilonScaled(c) => Ok(limit.map_or(c * self.epsilon, |l| l.min(c * self.epsilon))),
        }
    }
}

/// Which time the applied field is evaluated at.
#[derive(Debug, Clone, Copy)]
enum Clock {
    Running,
    Frozen(f64),
}

impl Clock {
    fn at(self, t: f64) -> f64 {
        match self {
            Clock::Running => t,
            Clock::Frozen(tf) => tf,
        }
    }
}

#[derive(Debug, Clone)]
enum Helmholtz {
    /// Single cell: no exchange coupling.
    Trivial,
    Box(CosineTransform),
    Masked,
}

/// One configured time stepper.
struct Stepper<'a> {
    problem: &'a Problem,
    epsilon: f64,
    alpha: f64,
    dt: f64,
    integrator: Integrator,
    renormalize: bool,
    clock: Clock,
    helmholtz: Helmholtz,
    /// Tensor model and envelope value for a single-cell problem, stepped on
    /// plain vectors.
    single: Option<(Mat3, f64)>,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a Problem, cfg: &SolverConfig, epsilon: f64, dt: f64, clock: Clock) -> Self {
        let helmholtz = if problem.grid.is_single_cell() {
            Helmholtz::Trivial
        } else if problem.mask.is_full() {
            Helmholtz::Box(CosineTransform::new(&problem.grid))
        } else {
            Helmholtz::Masked
        };
        let single = match (&problem.demag, problem.mask.len()) {
            (DemagModel::Tensor(d), 1) if problem.mask.contains(0) => {
                Some((*d, problem.schedule.envelope().value(&problem.grid.cell_center(0))))
            }
            _ => None,
        };
        Self {
            problem,
            epsilon,
            alpha: cfg.alpha,
            dt,
            integrator: cfg.integrator,
            renormalize: cfg.renormalize,
            clock,
            helmholtz,
            single,
        }
    }

    fn single_rhs(&self, d: &Mat3, env: f64, t: f64, m: Vec3) -> Result<Vec3> {
        let h = self.problem.schedule.vector(self.clock.at(t))? * env - d * m;
        let p = m.cross(&h);
        Ok((p - m.cross(&p) * self.alpha) / self.epsilon)
    }

    fn advance_single(&self, d: &Mat3, env: f64, t: f64, m: Vec3) -> Result<Vec3> {
        let dt = self.dt;
        let raw = match self.integrator {
            Integrator::ProjectedExplicit => {
                let k1 = self.single_rhs(d, env, t, m)?;
                m + self.single_rhs(d, env, t + 0.5 * dt, m + k1 * (0.5 * dt))? * dt
            }
            // no exchange on one cell, so the implicit solve is a scaling
            Integrator::SemiImplicitSpectral => m + self.single_rhs(d, env, t, m)? * dt,
        };
        if !(raw.x.is_finite() && raw.y.is_finite() && raw.z.is_finite()) {
            return Err(Error::BlowUp { t: t + dt });
        }
        Ok(if self.renormalize { raw.normalize() } else { raw })
    }

    fn advance(&self, t: f64, m: &VectorField) -> Result<VectorField> {
        let p = self.problem;
        if let Some((d, env)) = &self.single {
            let next = self.advance_single(d, *env, t, m[0])?;
            return Ok(VectorField::uniform(&p.mask, next));
        }
        let dt = self.dt;
        let raw = match self.integrator {
            Integrator::ProjectedExplicit => {
                let k1 = p.ll_rhs(self.clock.at(t), m, self.epsilon, self.alpha)?;
                let mut mid = m.clone();
                mid.axpy(0.5 * dt, &k1);
                let k2 = p.ll_rhs(self.clock.at(t + 0.5 * dt), &mid, self.epsilon, self.alpha)?;
                let mut next = m.clone();
                next.axpy(dt, &k2);
                next
            }
            Integrator::SemiImplicitSpectral => {
                let shift = self.epsilon / dt;
                let f = p.parabolic_rhs(self.clock.at(t), m, self.alpha)?;
                let mut rhs = m.scale(shift);
                rhs.axpy(1.0, &f);
                let beta = implicit_coefficient(self.alpha);
                if beta > self.alpha && !matches!(self.helmholtz, Helmholtz::Trivial) {
                    rhs.axpy(self.alpha - beta, &p.laplacian(m)?);
                }
                match &self.helmholtz {
                    Helmholtz::Trivial => rhs.scale(1.0 / shift),
                    Helmholtz::Box(ct) => {
                        ct.apply_diagonal(&rhs, |mode| 1.0 / (shift - beta * ct.laplacian_eigenvalue(mode)))
                    }
                    Helmholtz::Masked => solve_masked_helmholtz(p, &rhs, m, shift, beta)?,
                }
            }
        };
        if !raw.is_finite() {
            return Err(Error::BlowUp { t: t + dt });
        }
        let mut next = if self.renormalize { p.normalize(&raw)? } else { raw };
        next.restrict(&p.mask);
        Ok(next)
    }
}

/// Diffusion coefficient treated implicitly. The precession `m x Lap m` is
/// explicit, so with only `alpha Lap` implicit a stiff mode is amplified by
/// `sqrt(1 + alpha^-2)`-ish factors up to `1/alpha`. With `beta Lap` implicit
/// and `(beta - alpha) Lap m` explicit the stiff-mode factor tends to
/// `sqrt(1 + (beta - alpha)^2) / beta`, minimal at `beta = (1 + alpha^2) / alpha`,
/// and every linear mode contracts. Fixed points are unchanged.
fn implicit_coefficient(alpha: f64) -> f64 {
    (1.0 + alpha * alpha) / alpha
}

/// Conjugate gradients for `(shift - coef Lap_mask) x = b` on the masked cells.
fn solve_masked_helmholtz(p: &Problem, b: &VectorField, x0: &VectorField, shift: f64, coef: f64) -> Result<VectorField> {
    let dot = |u: &VectorField, v: &VectorField| p.mask.cells().map(|i| u[i].dot(&v[i])).sum::<f64>();
    let apply = |u: &VectorField| -> Result<VectorField> {
        let mut out = u.scale(shift);
        out.axpy(-coef, &p.laplacian(u)?);
        out.restrict(&p.mask);
        Ok(out)
    };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(VectorField::zeros(b.len()));
    }
    let mut x = x0.clone();
    let mut r = b.sub(&apply(&x)?);
    r.restrict(&p.mask);
    let mut dir = r.clone();
    let mut rs = dot(&r, &r);
    for _ in 0..2000 {
        if rs.sqrt() <= 1e-13 * bnorm {
            break;
        }
        let ad = apply(&dir)?;
        let a = rs / dot(&dir, &ad);
        x.axpy(a, &dir);
        r.axpy(-a, &ad);
        let rs_new = dot(&r, &r);
        dir = r.add(&dir.scale(rs_new / rs));
        rs = rs_new;
    }
    Ok(x)
}

/// One time step of size `dt` from `(t, m)`; the result is a unit field.
pub fn step(problem: &Problem, t: f64, m: &VectorField, dt: f64, cfg: &SolverConfig) -> Result<VectorField> {
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if let Some(l) = cfg.explicit_limit(&problem.grid) {
        if dt > l * (1.0 + 1e-12) {
            return Err(Error::param("dt", format!("{dt} exceeds the explicit limit {l}")));
        }
    }
    m.check(&problem.grid)?;
    Stepper::new(problem, cfg, cfg.epsilon, dt, Clock::Running).advance(t, m)
}

/// Sampled diagnostics of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mean: Vec<Vec3>,
    pub energy: Vec<f64>,
    pub residual: Vec<f64>,
    /// H2 distance to the reference field, NaN when no reference was given.
    pub dist_h2: Vec<f64>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(
        &mut self,
        problem: &Problem,
        t: f64,
        m: &VectorField,
        reference: Option<&dyn Fn(f64) -> Result<VectorField>>,
    ) -> Result<()> {
        let dist = match reference {
            Some(f) => problem.h2_distance(m, &f(t)?)?,
            None => f64::NAN,
        };
        self.times.push(t);
        self.lambda.push(problem.schedule.amplitude(t)?);
        self.mean.push(mean_magnetization(m, &problem.mask));
        self.energy.push(problem.energy(t, m)?);
        self.residual.push(problem.residual(t, m)?);
        self.dist_h2.push(dist);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub record: RunRecord,
    pub final_field: VectorField,
}

/// Failure of [`integrate`] with the record gathered so far.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct IntegrationError {
    pub error: Error,
    pub record: RunRecord,
}

/// Advances `m0` over `[0, horizon]`, sampling diagnostics every
/// `sample_every` steps and at the final time. The step count is
/// `ceil(horizon / dt)` with the step shrunk to land exactly on the horizon.
#[allow(clippy::result_large_err)] // the error carries the record up to the failure
pub fn integrate(
    problem: &Problem,
    m0: &VectorField,
    cfg: &SolverConfig,
    sample_every: usize,
    reference: Option<&dyn Fn(f64) -> Result<VectorField>>,
) -> core::result::Result<Run, IntegrationError> {
    let mut record = RunRecord::default();
    let fail = |error: Error, record: RunRecord| IntegrationError { error, record };
    if let Err(e) = cfg.validate().and_then(|_| m0.check(&problem.grid)) {
        return Err(fail(e, record));
    }
    let dt_target = match cfg.time_step(&problem.grid) {
        Ok(dt) => dt,
        Err(e) => return Err(fail(e, record)),
    };
    let steps = if cfg.horizon == 0.0 {
        0
    } else {
        ((cfg.horizon / dt_target) - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 { dt_target } else { cfg.horizon / steps as f64 };
    let every = sample_every.max(1);
    let stepper = Stepper::new(problem, cfg, cfg.epsilon, dt, Clock::Running);

    let mut m = m0.clone();
    if let Err(e) = record.push(problem, 0.0, &m, reference) {
        return Err(fail(e, record));
    }
    for n in 0..steps {
        let t = n as f64 * dt;
        m = match stepper.advance(t, &m) {
            Ok(next) => next,
            Err(e) => return Err(fail(e, record)),
        };
        if (n + 1) % every == 0 || n + 1 == steps {
            let t_next = if n + 1 == steps { cfg.horizon } else { (n + 1) as f64 * dt };
            if let Err(e) = record.push(problem, t_next, &m, reference) {
                return Err(fail(e, record));
            }
        }
    }
    Ok(Run { record, final_field: m })
}

/// Outcome of a frozen-field relaxation.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub field: VectorField,
    pub converged: bool,
    pub residual: f64,
    /// Relaxation time elapsed (fast time, `eps = 1`).
    pub elapsed: f64,
}

/// Runs the LL flow with `h_ext` frozen at `t_frozen` and `eps = 1` until
/// `||m x h_T|| < tol` or `max_time` is reached.
pub fn relax_to_equilibrium(
    problem: &Problem,
    m0: &VectorField,
    t_frozen: f64,
    tol: f64,
    max_time: f64,
    cfg: &SolverConfig,
) -> Result<Relaxation> {
    cfg.validate()?;
    m0.check(&problem.grid)?;
    let frozen = SolverConfig {
        epsilon: 1.0,
        ..cfg.clone()
    };
    let dt = frozen.time_step(&problem.grid)?;
    let stepper = Stepper::new(problem, &frozen, 1.0, dt, Clock::Frozen(t_frozen));
    let check_every = 5;
    let mut m = m0.clone();
    let mut residual = problem.residual(t_frozen, &m)?;
    let mut elapsed = 0.0;
    let mut n = 0usize;
    while residual >= tol && elapsed < max_time {
        m = stepper.advance(t_frozen, &m)?;
        elapsed += dt;
        n += 1;
        if n.is_multiple_of(check_every) || elapsed >= max_time {
            residual = problem.residual(t_frozen, &m)?;
        }
    }
    Ok(Relaxation {
        field: m,
        converged: residual < tol,
        residual,
        elapsed,
    })
}
