//! Subcommand implementations: build the core objects from a config, run,
//! write tables and charts under the output directory.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twoscale::dynamics::Problem;
use twoscale::experiments::{
    prepare_asymptotics, run_epsilon, run_hysteresis, AsymptoticsPlan, AsymptoticsReport, DemagSource, EquilibriumPath,
    HysteresisPlan,
};
use twoscale::grid::{l2_inner, laplacian_neumann, mean_magnetization};
use twoscale::linearization::{dissipation_scan, DissipationScan};
use twoscale::spectral::{commutator_pk_f, NeumannBasis};
use twoscale::{
    demag_field, demag_tensor_estimate, integrate, relax_to_equilibrium, DemagModel, DirectionPath, DomainMask, DtPolicy,
    EllipsoidSpec, Envelope, FieldSchedule, Grid3, Integrator, Mat3, RunRecord, SolverConfig, Vec3, VectorField,
};

use crate::config::{
    EnvelopeChoice, EquilibriumChoice, GridMode, IntegratorChoice, RunConfig, Shape, TensorSource,
};
use crate::report;
use crate::svg;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigErrors),
    #[error("{0}")]
    Core(#[from] twoscale::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("self-test failed: {0}")]
    SelfTest(String),
    #[error("{0} run(s) blew up")]
    BlowUps(usize),
}

impl CliError {
    /// 0 success, 1 validation error, 2 numerical blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(twoscale::Error::BlowUp { .. }) | CliError::BlowUps(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Options {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(io_at(path))?))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_at(path))
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn ellipsoid(cfg: &RunConfig) -> CliResult<EllipsoidSpec> {
    let [a, b, c] = cfg.domain.semi_axes;
    Ok(EllipsoidSpec::new(a, b, c)?)
}

pub fn schedule(cfg: &RunConfig) -> CliResult<FieldSchedule> {
    let f = &cfg.field;
    let knots = f.knots.iter().map(|k| (k[0], k[1])).collect();
    let direction = match f.rotate_toward {
        Some(t) => DirectionPath::Rotating {
            start: vec3(f.direction),
            toward: vec3(t),
            rate: f.rotation_rate,
        },
        None => DirectionPath::Fixed(vec3(f.direction)),
    };
    let envelope = match f.envelope {
        EnvelopeChoice::Uniform => Envelope::Uniform,
        EnvelopeChoice::Bump => Envelope::RadialBump {
            center: vec3(f.bump_center),
            radius: f.bump_radius,
        },
    };
    Ok(FieldSchedule::new(knots, direction, envelope)?)
}

/// Depolarization tensor source for single-cell runs.
pub fn demag_source(cfg: &RunConfig) -> CliResult<DemagSource> {
    Ok(match cfg.domain.tensor_source {
        TensorSource::Given => DemagSource::Tensor(Mat3::from_diagonal(&vec3(cfg.domain.tensor.unwrap_or([1.0 / 3.0; 3])))),
        _ if cfg.domain.shape == Shape::Box => {
            return Err(CliError::Usage(
                "domain.tensor_source: box domains need tensor_source = \"given\" for single-cell runs".into(),
            ))
        }
        TensorSource::Exact => DemagSource::Ellipsoid(ellipsoid(cfg)?),
        TensorSource::Staircase => DemagSource::Staircase {
            spec: ellipsoid(cfg)?,
            resolution: cfg.domain.staircase_resolution,
        },
    })
}

fn shape_volume(cfg: &RunConfig) -> f64 {
    let [a, b, c] = cfg.domain.semi_axes;
    match cfg.domain.shape {
        Shape::Ellipsoid => 4.0 / 3.0 * std::f64::consts::PI * a * b * c,
        Shape::Box => 8.0 * a * b * c,
    }
}

pub fn problem(cfg: &RunConfig) -> CliResult<Problem> {
    let sched = schedule(cfg)?;
    match cfg.grid.mode {
        GridMode::Macrospin => {
            let d = demag_source(cfg)?.tensor()?;
            Ok(Problem::macrospin(cfg.domain.volume.unwrap_or_else(|| shape_volume(cfg)), d, sched)?)
        }
        GridMode::Grid => {
            let (g, mask) = match cfg.domain.shape {
                Shape::Ellipsoid => {
                    let spec = ellipsoid(cfg)?;
                    let g = spec.bounding_grid(cfg.grid.resolution)?;
                    let mask = DomainMask::ellipsoid(&g, &spec)?;
                    (g, mask)
                }
                Shape::Box => {
                    let half = cfg.domain.semi_axes;
                    let longest = half.iter().copied().fold(0.0, f64::max);
                    let h = 2.0 * longest / cfg.grid.resolution as f64;
                    let dims = half.map(|a| ((2.0 * a / h).round() as usize).max(1));
                    let origin = -0.5 * Vec3::new(dims[0] as f64 * h, dims[1] as f64 * h, dims[2] as f64 * h);
                    let g = Grid3::new(dims, [h; 3], origin)?;
                    let mask = DomainMask::full(&g);
                    (g, mask)
                }
            };
            let demag = DemagModel::fft(&g);
            Ok(Problem::new(g, mask, demag, sched)?)
        }
    }
}

fn integrator(cfg: &RunConfig) -> Integrator {
    match cfg.solver.integrator {
        IntegratorChoice::Explicit => Integrator::ProjectedExplicit,
        IntegratorChoice::SemiImplicit => Integrator::SemiImplicitSpectral,
    }
}

pub fn solver(cfg: &RunConfig, epsilon: f64) -> CliResult<SolverConfig> {
    let dt = match cfg.solver.dt {
        Some(dt) => DtPolicy::Fixed(dt),
        None => DtPolicy::EpsilonScaled(cfg.solver.dt_factor),
    };
    Ok(SolverConfig::new(epsilon, cfg.material.alpha, cfg.solver.horizon, integrator(cfg), dt)?)
}

fn start_time(cfg: &RunConfig) -> f64 {
    cfg.field.knots.first().map_or(0.0, |k| k[0])
}

fn initial_field(cfg: &RunConfig, p: &Problem) -> CliResult<VectorField> {
    let dir = match cfg.experiment.initial {
        Some(v) => vec3(v),
        None => p.schedule.direction(start_time(cfg)),
    };
    Ok(p.uniform(dir.normalize()))
}

fn record_point(p: &Problem, t: f64, m: &VectorField) -> CliResult<RunRecord> {
    Ok(RunRecord {
        times: vec![t],
        lambda: vec![p.schedule.amplitude(t)?],
        mean: vec![mean_magnetization(m, &p.mask)],
        energy: vec![p.energy(t, m)?],
        residual: vec![p.residual(t, m)?],
        dist_h2: vec![f64::NAN],
    })
}

fn magnetization_chart(rec: &RunRecord) -> String {
    let comp = |name: &str, k: usize| {
        svg::Series::new(name, rec.times.iter().zip(&rec.mean).map(|(t, m)| (*t, m[k])))
    };
    svg::line_chart(
        &svg::Chart {
            title: "mean magnetization",
            x_label: "t",
            y_label: "<m>",
            log_y: false,
        },
        &[comp("mx", 0), comp("my", 1), comp("mz", 2)],
    )
}

pub fn relax(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let p = problem(cfg)?;
    let t = start_time(cfg);
    let m0 = initial_field(cfg, &p)?;
    let r = relax_to_equilibrium(&p, &m0, t, cfg.solver.tol, cfg.solver.max_time, &solver(cfg, 1.0)?)?;
    let rec = record_point(&p, t, &r.field)?;
    report::write_record(create(&opts.path("relax.csv"))?, &rec).map_err(io_at(&opts.path("relax.csv")))?;
    report::write_field(create(&opts.path("field.csv"))?, &p.grid, &p.mask, &r.field).map_err(io_at(&opts.path("field.csv")))?;
    let m = rec.mean[0];
    opts.say(format!(
        "relax: converged {} residual {:.3e} after time {:.3}; mean m = ({:.6}, {:.6}, {:.6}), energy {:.6}",
        r.converged, r.residual, r.elapsed, m.x, m.y, m.z, rec.energy[0]
    ));
    Ok(())
}

pub fn evolve(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let p = problem(cfg)?;
    let m0 = initial_field(cfg, &p)?;
    let sc = solver(cfg, cfg.material.epsilon)?;
    let (rec, failure) = match integrate(&p, &m0, &sc, cfg.solver.sample_every, None) {
        Ok(run) => (run.record, None),
        Err(e) => (e.record, Some(e.error)),
    };
    let path = opts.path("run.csv");
    report::write_record(create(&path)?, &rec).map_err(io_at(&path))?;
    write_text(&opts.path("run.svg"), &magnetization_chart(&rec))?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let n = rec.len();
    opts.say(format!(
        "evolve: {} samples to t = {}; final energy {:.6}, residual {:.3e}",
        n,
        rec.times[n - 1],
        rec.energy[n - 1],
        rec.residual[n - 1]
    ));
    Ok(())
}

pub fn asymptotics_plan(cfg: &RunConfig) -> CliResult<AsymptoticsPlan> {
    let plan = AsymptoticsPlan {
        problem: problem(cfg)?,
        epsilons: cfg.epsilons(),
        alpha: cfg.material.alpha,
        horizon: cfg.solver.horizon,
        path: match cfg.experiment.equilibrium {
            EquilibriumChoice::Aligned => EquilibriumPath::FieldAligned,
            EquilibriumChoice::Relaxed => EquilibriumPath::Relaxed {
                samples: cfg.experiment.relax_samples,
                tol: cfg.solver.tol,
                max_time: cfg.solver.max_time,
            },
        },
        perturbation: cfg.experiment.perturbation,
        seed: cfg.experiment.seed,
        threshold_factor: cfg.experiment.threshold_factor,
        samples: cfg.experiment.samples,
        dt_factor: cfg.solver.dt_factor,
        integrator: integrator(cfg),
    };
    plan.validate()?;
    Ok(plan)
}

/// Runs every epsilon of the ladder on its own thread.
pub fn run_ladder(plan: &AsymptoticsPlan) -> CliResult<AsymptoticsReport> {
    let setup = prepare_asymptotics(plan)?;
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = plan
            .epsilons
            .iter()
            .map(|&e| {
                let setup = &setup;
                s.spawn(move || run_epsilon(plan, setup, e))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("epsilon worker panicked")).collect()
    });
    Ok(AsymptoticsReport::from_runs(runs, setup.track.as_ref().is_none_or(|t| t.converged)))
}

pub fn asymptotics(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let plan = asymptotics_plan(cfg)?;
    let rep = run_ladder(&plan)?;
    let mut series = Vec::new();
    for r in &rep.runs {
        let path = opts.path(&format!("asymptotics_eps_{}.csv", report::num(r.epsilon)));
        report::write_record(create(&path)?, &r.record).map_err(io_at(&path))?;
        series.push(svg::Series::new(
            format!("eps = {}", report::num(r.epsilon)),
            r.record.times.iter().copied().zip(r.record.dist_h2.iter().copied()),
        ));
    }
    let path = opts.path("asymptotics_summary.csv");
    report::write_asymptotics_summary(create(&path)?, &rep).map_err(io_at(&path))?;
    write_text(&opts.path("asymptotics.svg"), &svg::distance_chart(&series))?;
    for r in &rep.runs {
        match &r.error {
            None => opts.say(format!(
                "eps {:<8} tau {:.4}  tau/(eps ln 1/eps) {:.3}  sup d after tau {:.4e}",
                r.epsilon,
                r.tau,
                r.layer_scale(),
                r.sup_after
            )),
            Some(e) => opts.say(format!("eps {:<8} failed: {e}", r.epsilon)),
        }
    }
    opts.say(format!(
        "sup ratios {:?}; layer band {:.3}..{:.3}; equilibria converged {}",
        rep.sup_ratios.iter().map(|q| (q * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        rep.layer_band.0,
        rep.layer_band.1,
        rep.equilibria_converged
    ));
    let failed = rep.runs.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::BlowUps(failed));
    }
    Ok(())
}

pub fn hysteresis_plan(cfg: &RunConfig) -> CliResult<HysteresisPlan> {
    let plan = HysteresisPlan {
        demag: demag_source(cfg)?,
        volume: cfg.domain.volume.unwrap_or_else(|| shape_volume(cfg)),
        amplitude: cfg.experiment.amplitude,
        period: cfg.experiment.period,
        cycles: cfg.experiment.cycles,
        epsilon: cfg.material.epsilon,
        alpha: cfg.material.alpha,
        misalignment: cfg.experiment.misalignment,
        dt_factor: cfg.solver.dt_factor,
        sample_every: cfg.solver.sample_every,
    };
    plan.validate()?;
    Ok(plan)
}

pub fn hysteresis(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let rep = run_hysteresis(&hysteresis_plan(cfg)?)?;
    let path = opts.path("loop.csv");
    report::write_loop(create(&path)?, &rep).map_err(io_at(&path))?;
    write_text(&opts.path("loop.svg"), &svg::report_loop_chart(&rep))?;
    opts.say(format!(
        "hysteresis: switching up {:.5}, down {:.5}; predicted d_t - d_a = {:.5}; area {:.5}; closure gap {:.2e}",
        rep.switch_up,
        rep.switch_down,
        rep.gap(),
        rep.area,
        rep.closure_gap
    ));
    Ok(())
}

pub fn scan(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let d = match cfg.grid.mode {
        GridMode::Macrospin => demag_source(cfg)?.tensor()?,
        GridMode::Grid => return Err(CliError::Usage("dissipation-scan runs on single-cell problems (grid.mode = \"macrospin\")".into())),
    };
    let spec = DissipationScan {
        tensor: d,
        u: vec3(cfg.field.direction).normalize(),
        volume: cfg.domain.volume.unwrap_or_else(|| shape_volume(cfg)),
        lambdas: cfg.experiment.lambdas.clone(),
        alpha: cfg.material.alpha,
        s: cfg.experiment.scan_size,
        n_samples: cfg.experiment.scan_samples,
        seed: cfg.experiment.seed,
        fit_from: cfg.experiment.fit_from,
    };
    let rep = dissipation_scan(&spec)?;
    let path = opts.path("scan.csv");
    report::write_scan(create(&path)?, &rep).map_err(io_at(&path))?;
    for r in &rep.rows {
        opts.say(format!(
            "lambda {:<6} {}  worst ratio {:+.5e}  best ratio {:+.5e}",
            r.lambda,
            r.branch.label(),
            r.worst_ratio,
            r.best_ratio
        ));
    }
    opts.say(format!(
        "+ branch fit: slope {:.4}, intercept {:.4}; dissipative from lambda = {}",
        rep.plus_slope,
        rep.plus_intercept,
        rep.threshold.map_or("none".to_string(), |t| t.to_string())
    ));
    Ok(())
}

fn random_field(mask: &DomainMask, rng: &mut ChaCha8Rng) -> VectorField {
    let mut f = VectorField::zeros(mask.len());
    for i in mask.cells() {
        f[i] = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

/// Sphere field, tensor estimate, and the symmetry and norm bound of the operator.
pub fn demag_selftest(resolution: usize, seed: u64, opts: &Options) -> CliResult<()> {
    let spec = EllipsoidSpec::sphere(1.0)?;
    let g = spec.bounding_grid(resolution)?;
    let mask = DomainMask::ellipsoid(&g, &spec)?;
    let model = DemagModel::fft(&g);
    let h = demag_field(&model, &VectorField::uniform(&mask, Vec3::z()), &g, &mask)?;
    let target = -Vec3::z() / 3.0;
    let (mut sq, mut count, mut worst) = (0.0, 0.0, 0.0f64);
    for i in mask.cells().filter(|&i| g.cell_center(i).norm() < 0.75) {
        let e = (h[i] - target).norm() / target.norm();
        sq += e * e;
        count += 1.0;
        worst = worst.max(e);
    }
    let rms = (sq / count).sqrt();
    let d = demag_tensor_estimate(&spec, resolution)?;
    let trace_err = (d.trace() - 1.0).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sym, mut bound) = (0.0f64, 0.0f64);
    for _ in 0..4 {
        let u = random_field(&mask, &mut rng);
        let v = random_field(&mask, &mut rng);
        let hu = demag_field(&model, &u, &g, &mask)?;
        let hv = demag_field(&model, &v, &g, &mask)?;
        let (a, b) = (l2_inner(&hu, &v, &mask), l2_inner(&hv, &u, &mask));
        sym = sym.max((a - b).abs() / a.abs().max(b.abs()));
        bound = bound.max(-l2_inner(&hu, &u, &mask) / l2_inner(&u, &u, &mask));
    }
    opts.say(format!(
        "sphere at {resolution} cells across: interior (r < 0.75) rms rel err {rms:.4}, max {worst:.4}; tensor diag ({:.5}, {:.5}, {:.5}), trace err {trace_err:.2e}; symmetry {sym:.2e}; -(h(u)|u)/|u|^2 <= {bound:.4}",
        d[(0, 0)],
        d[(1, 1)],
        d[(2, 2)]
    ));
    let ok = trace_err <= 1e-10 && sym <= 1e-12 && (0.0..=1.0 + 1e-12).contains(&bound) && rms <= 0.03;
    if ok {
        opts.say("demag self-test passed");
        Ok(())
    } else {
        Err(CliError::SelfTest("demag".into()))
    }
}

/// Projector/Laplacian commutation and the decay of the commutator with `F`.
pub fn spectral_selftest(seed: u64, opts: &Options) -> CliResult<()> {
    let g = Grid3::new([8, 7, 6], [0.25, 0.3, 0.35], Vec3::zeros())?;
    let mask = DomainMask::full(&g);
    let basis = NeumannBasis::new(&g, &mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in [1, 8, 27, 64, 125, g.len()] {
        let u = random_field(&mask, &mut rng);
        let a = laplacian_neumann(&basis.project(&u, k), &g, &mask)?;
        let b = basis.project(&laplacian_neumann(&u, &g, &mask)?, k);
        worst = worst.max(a.sub(&b).max_norm() / a.max_norm().max(b.max_norm()).max(1.0));
    }

    let g10 = Grid3::centered_cube(10, 1.0)?;
    let m10 = DomainMask::full(&g10);
    let p = Problem::new(
        g10.clone(),
        m10.clone(),
        DemagModel::fft(&g10),
        FieldSchedule::constant(2.0, Vec3::new(0.2, 0.1, 1.0).normalize())?,
    )?;
    let b10 = NeumannBasis::new(&g10, &m10)?;
    let m0 = p.normalize(&VectorField::from_fn(&g10, &m10, |x| {
        Vec3::new(0.6 * (1.3 * x.x).sin(), 0.5 * (0.9 * x.y - 0.7 * x.z).cos(), 1.0 + 0.3 * x.z)
    }))?;
    let sc = SolverConfig::new(0.5, 1.0, 0.1, Integrator::SemiImplicitSpectral, DtPolicy::Fixed(1e-3))?;
    let slice = integrate(&p, &m0, &sc, 100, None).map_err(|e| e.error)?.final_field;
    let comm: Vec<f64> = [8, 27, 64, 125]
        .iter()
        .map(|&k| commutator_pk_f(&p, &b10, &slice, k, 0.1, 1.0))
        .collect::<Result<_, _>>()?;
    let decreasing = comm.windows(2).all(|w| w[1] < w[0]);
    opts.say(format!(
        "Lap P_k - P_k Lap max rel {worst:.2e}; commutator H1 norms at k = 8, 27, 64, 125: {}",
        comm.iter().map(|c| format!("{c:.4e}")).collect::<Vec<_>>().join(", ")
    ));
    if worst <= 1e-12 && decreasing {
        opts.say("spectral self-test passed");
        Ok(())
    } else {
        Err(CliError::SelfTest("spectral".into()))
    }
}

/// Renders SVG charts for tables written by the other subcommands.
pub fn plot(inputs: &[PathBuf], opts: &Options) -> CliResult<()> {
    if inputs.is_empty() {
        return Err(CliError::Usage("plot needs at least one --input table".into()));
    }
    let mut distance = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        let first = text.lines().next().unwrap_or_default();
        if first == "t,lambda,m_u,measured" {
            let pts = read_loop(&text).map_err(io_at(path))?;
            write_text(&opts.path(&format!("{stem}.svg")), &svg::loop_chart(&pts))?;
        } else {
            let rec = report::read_record(&text).map_err(io_at(path))?;
            if rec.dist_h2.iter().any(|d| d.is_finite()) {
                distance.push(svg::Series::new(stem, rec.times.iter().copied().zip(rec.dist_h2.iter().copied())));
            } else {
                write_text(&opts.path(&format!("{stem}.svg")), &magnetization_chart(&rec))?;
            }
        }
    }
    if !distance.is_empty() {
        write_text(&opts.path("distance.svg"), &svg::distance_chart(&distance))?;
    }
    opts.say(format!("plot: wrote charts for {} table(s) to {}", inputs.len(), opts.out.display()));
    Ok(())
}

/// Measured `(lambda, m.u)` rows of a loop table.
fn read_loop(text: &str) -> io::Result<Vec<(f64, f64)>> {
    let bad = |e: String| io::Error::new(io::ErrorKind::InvalidData, e);
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", n + 1)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", n + 1)));
        if cols[3] == "1" {
            out.push((parse(cols[1])?, parse(cols[2])?));
        }
    }
    Ok(out)
}
