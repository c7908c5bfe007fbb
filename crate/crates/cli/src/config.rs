//! Run configuration: a TOML file with the sections `[grid]`, `[domain]`,
//! `[material]`, `[field]`, `[solver]` and `[experiment]`.
//!
//! Only `material.alpha` and `material.epsilon` are required; everything else
//! has a default. Errors name the offending `section.key`.

// `!(x > 0.0)` is used on purpose so NaN values are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// One cell with a depolarization tensor.
    Macrospin,
    /// Cell grid with the FFT demag operator.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ellipsoid,
    Box,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorSource {
    /// Quadrature depolarization factors of the ellipsoid.
    Exact,
    /// Volume-averaged FFT field of the staircase ellipsoid.
    Staircase,
    /// `domain.tensor` as given.
    Given,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorChoice {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeChoice {
    Uniform,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumChoice {
    /// `m_eq(t)` is the field direction (exact for the rotating sphere macrospin).
    Aligned,
    /// `m_eq(t)` relaxed at sampled frozen times.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub mode: GridMode,
    /// Cells along the longest axis.
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSection {
    pub shape: Shape,
    /// Ellipsoid semi-axes, or box half-lengths.
    pub semi_axes: [f64; 3],
    /// Macrospin volume; defaults to the volume of the shape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    pub tensor_source: TensorSource,
    /// Diagonal of the depolarization tensor when `tensor_source = "given"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[f64; 3]>,
    pub staircase_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialSection {
    pub alpha: f64,
    pub epsilon: f64,
    /// Ladder for `asymptotics`; defaults to `[epsilon]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSection {
    /// `(t, lambda)` pairs, strictly increasing in `t`.
    pub knots: Vec<[f64; 2]>,
    pub direction: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotate_toward: Option<[f64; 3]>,
    pub rotation_rate: f64,
    pub envelope: EnvelopeChoice,
    pub bump_center: [f64; 3],
    pub bump_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSection {
    pub integrator: IntegratorChoice,
    /// Fixed step; when absent the step is `dt_factor * epsilon`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub dt_factor: f64,
    pub horizon: f64,
    pub sample_every: usize,
    /// Residual tolerance for relaxations.
    pub tol: f64,
    /// Time budget for relaxations.
    pub max_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSection {
    pub seed: u64,
    /// Initial direction for `relax` and `evolve`; defaults to the field direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 3]>,
    pub perturbation: f64,
    pub threshold_factor: f64,
    pub samples: usize,
    pub equilibrium: EquilibriumChoice,
    pub relax_samples: usize,
    pub amplitude: f64,
    pub period: f64,
    pub cycles: usize,
    pub misalignment: f64,
    pub lambdas: Vec<f64>,
    pub scan_size: f64,
    pub scan_samples: usize,
    pub fit_from: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub domain: DomainSection,
    pub material: MaterialSection,
    pub field: FieldSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            mode: GridMode::Macrospin,
            resolution: 16,
        }
    }
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            shape: Shape::Ellipsoid,
            semi_axes: [1.0; 3],
            volume: None,
            tensor_source: TensorSource::Exact,
            tensor: None,
            staircase_resolution: 32,
        }
    }
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            knots: vec![[0.0, 0.0]],
            direction: [0.0, 0.0, 1.0],
            rotate_toward: None,
            rotation_rate: 0.0,
            envelope: EnvelopeChoice::Uniform,
            bump_center: [0.0; 3],
            bump_radius: 1.0,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            integrator: IntegratorChoice::SemiImplicit,
            dt: None,
            dt_factor: 0.05,
            horizon: 1.0,
            sample_every: 10,
            tol: 1e-9,
            max_time: 100.0,
        }
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            initial: None,
            perturbation: 0.3,
            threshold_factor: 2.0,
            samples: 400,
            equilibrium: EquilibriumChoice::Aligned,
            relax_samples: 40,
            amplitude: 0.5,
            period: 8.0,
            cycles: 2,
            misalignment: 1e-3,
            lambdas: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            scan_size: 1e-2,
            scan_samples: 200,
            fit_from: 10.0,
        }
    }
}

/// One problem with a config, located by `section.key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// All problems found in a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn names(&self, key: &str) -> bool {
        self.0.iter().any(|e| e.key == key)
    }
}

const SECTIONS: [&str; 6] = ["grid", "domain", "material", "field", "solver", "experiment"];

/// Typed access to one section; every failure is recorded under `section.key`.
struct Reader<'a> {
    section: &'static str,
    table: Option<&'a Table>,
    seen: Vec<&'static str>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(ConfigError {
            key: format!("{}.{key}", self.section),
            message: message.into(),
        });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn float_of(v: &Value) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn opt_f64(&mut self, key: &'static str) -> Option<f64> {
        let v = self.raw(key)?;
        let x = Self::float_of(v);
        if x.is_none() {
            self.fail(key, format!("expected a number, found {}", v.type_str()));
        }
        x
    }

    fn f64(&mut self, key: &'static str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn required_f64(&mut self, key: &'static str) -> f64 {
        match self.table.and_then(|t| t.get(key)) {
            Some(_) => self.opt_f64(key).unwrap_or(f64::NAN),
            None => {
                self.seen.push(key);
                self.fail(key, "missing required key");
                f64::NAN
            }
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(v) => {
                let found = v.to_string();
                self.fail(key, format!("expected a non-negative integer, found {found}"));
                default
            }
        }
    }

    fn u64(&mut self, key: &'static str, default: u64) -> u64 {
        self.usize(key, default as usize) as u64
    }

    fn floats(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let out = v
            .as_array()
            .and_then(|a| a.iter().map(Self::float_of).collect::<Option<Vec<_>>>());
        if out.is_none() {
            self.fail(key, "expected an array of numbers");
        }
        out
    }

    fn opt_vec3(&mut self, key: &'static str) -> Option<[f64; 3]> {
        let v = self.floats(key)?;
        match <[f64; 3]>::try_from(v.as_slice()) {
            Ok(a) => Some(a),
            Err(_) => {
                self.fail(key, format!("expected 3 numbers, found {}", v.len()));
                None
            }
        }
    }

    fn vec3(&mut self, key: &'static str, default: [f64; 3]) -> [f64; 3] {
        self.opt_vec3(key).unwrap_or(default)
    }

    fn pairs(&mut self, key: &'static str, default: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
        let Some(v) = self.raw(key) else { return default };
        let parsed = v.as_array().and_then(|rows| {
            rows.iter()
                .map(|r| {
                    let r = r.as_array()?;
                    match r.as_slice() {
                        [a, b] => Some([Self::float_of(a)?, Self::float_of(b)?]),
                        _ => None,
                    }
                })
                .collect::<Option<Vec<_>>>()
        });
        match parsed {
            Some(p) => p,
            None => {
                self.fail(key, "expected an array of [t, lambda] pairs");
                default
            }
        }
    }

    fn choice<T: Clone>(&mut self, key: &'static str, options: &[(&str, T)], default: T) -> T {
        let Some(v) = self.raw(key) else { return default };
        let found = v.as_str().and_then(|s| options.iter().find(|(name, _)| *name == s));
        match found {
            Some((_, t)) => t.clone(),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.fail(key, format!("expected one of {names:?}, found {v}"));
                default
            }
        }
    }

    fn finish(self) {
        let Some(table) = self.table else { return };
        for key in table.keys() {
            if !self.seen.contains(&key.as_str()) {
                self.errors.push(ConfigError {
                    key: format!("{}.{key}", self.section),
                    message: "unknown key".into(),
                });
            }
        }
    }
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![ConfigError {
            key: duplicate_key_path(&e).unwrap_or_else(|| "config".into()),
            message: e.message().to_string(),
        }])
    })?;
    let mut errors = Vec::new();
    let mut sections: Vec<Option<&Table>> = Vec::new();
    for name in SECTIONS {
        sections.push(match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(ConfigError {
                    key: name.into(),
                    message: "expected a table".into(),
                });
                None
            }
        });
    }
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errors.push(ConfigError {
                key: key.clone(),
                message: "unknown section".into(),
            });
        }
    }
    let cfg = {
        let mut r = Reader { section: "grid", table: sections[0], seen: vec![], errors: &mut errors };
        let d = GridSection::default();
        let grid = GridSection {
            mode: r.choice("mode", &[("macrospin", GridMode::Macrospin), ("grid", GridMode::Grid)], d.mode),
            resolution: r.usize("resolution", d.resolution),
        };
        r.finish();

        let mut r = Reader { section: "domain", table: sections[1], seen: vec![], errors: &mut errors };
        let d = DomainSection::default();
        let domain = DomainSection {
            shape: r.choice("shape", &[("ellipsoid", Shape::Ellipsoid), ("box", Shape::Box)], d.shape),
            semi_axes: r.vec3("semi_axes", d.semi_axes),
            volume: r.opt_f64("volume"),
            tensor_source: r.choice(
                "tensor_source",
                &[("exact", TensorSource::Exact), ("staircase", TensorSource::Staircase), ("given", TensorSource::Given)],
                d.tensor_source,
            ),
            tensor: r.opt_vec3("tensor"),
            staircase_resolution: r.usize("staircase_resolution", d.staircase_resolution),
        };
        r.finish();

        let mut r = Reader { section: "material", table: sections[2], seen: vec![], errors: &mut errors };
        let material = MaterialSection {
            alpha: r.required_f64("alpha"),
            epsilon: r.required_f64("epsilon"),
            epsilons: r.floats("epsilons"),
        };
        r.finish();

        let mut r = Reader { section: "field", table: sections[3], seen: vec![], errors: &mut errors };
        let d = FieldSection::default();
        let field = FieldSection {
            knots: r.pairs("knots", d.knots),
            direction: r.vec3("direction", d.direction),
            rotate_toward: r.opt_vec3("rotate_toward"),
            rotation_rate: r.f64("rotation_rate", d.rotation_rate),
            envelope: r.choice("envelope", &[("uniform", EnvelopeChoice::Uniform), ("bump", EnvelopeChoice::Bump)], d.envelope),
            bump_center: r.vec3("bump_center", d.bump_center),
            bump_radius: r.f64("bump_radius", d.bump_radius),
        };
        r.finish();

        let mut r = Reader { section: "solver", table: sections[4], seen: vec![], errors: &mut errors };
        let d = SolverSection::default();
        let solver = SolverSection {
            integrator: r.choice(
                "integrator",
                &[("explicit", IntegratorChoice::Explicit), ("semi-implicit", IntegratorChoice::SemiImplicit)],
                d.integrator,
            ),
            dt: r.opt_f64("dt"),
            dt_factor: r.f64("dt_factor", d.dt_factor),
            horizon: r.f64("horizon", d.horizon),
            sample_every: r.usize("sample_every", d.sample_every),
            tol: r.f64("tol", d.tol),
            max_time: r.f64("max_time", d.max_time),
        };
        r.finish();

        let mut r = Reader { section: "experiment", table: sections[5], seen: vec![], errors: &mut errors };
        let d = ExperimentSection::default();
        let experiment = ExperimentSection {
            seed: r.u64("seed", d.seed),
            initial: r.opt_vec3("initial"),
            perturbation: r.f64("perturbation", d.perturbation),
            threshold_factor: r.f64("threshold_factor", d.threshold_factor),
            samples: r.usize("samples", d.samples),
            equilibrium: r.choice(
                "equilibrium",
                &[("aligned", EquilibriumChoice::Aligned), ("relaxed", EquilibriumChoice::Relaxed)],
                d.equilibrium,
            ),
            relax_samples: r.usize("relax_samples", d.relax_samples),
            amplitude: r.f64("amplitude", d.amplitude),
            period: r.f64("period", d.period),
            cycles: r.usize("cycles", d.cycles),
            misalignment: r.f64("misalignment", d.misalignment),
            lambdas: r.floats("lambdas").unwrap_or(d.lambdas),
            scan_size: r.f64("scan_size", d.scan_size),
            scan_samples: r.usize("scan_samples", d.scan_samples),
            fit_from: r.f64("fit_from", d.fit_from),
        };
        r.finish();

        RunConfig {
            grid,
            domain,
            material,
            field,
            solver,
            experiment,
        }
    };
    validate(&cfg, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Pulls `section.key` out of a duplicate-key parse error, if that is what it is.
fn duplicate_key_path(e: &toml::de::Error) -> Option<String> {
    let msg = e.message();
    let key = msg.strip_prefix("duplicate key `")?.split('`').next()?;
    let table = msg.split("in table `").nth(1).and_then(|s| s.split('`').next());
    Some(match table {
        Some(t) if !t.is_empty() => format!("{t}.{key}"),
        _ => key.to_string(),
    })
}

fn validate(cfg: &RunConfig, errors: &mut Vec<ConfigError>) {
    let mut fail = |key: &str, message: String| {
        errors.push(ConfigError {
            key: key.into(),
            message,
        })
    };
    let positive = |x: f64| x > 0.0 && x.is_finite();
    // missing required keys were already reported and read back as NaN
    if !cfg.material.alpha.is_nan() && !positive(cfg.material.alpha) {
        fail("material.alpha", format!("must be positive, got {}", cfg.material.alpha));
    }
    if !cfg.material.epsilon.is_nan() && !positive(cfg.material.epsilon) {
        fail("material.epsilon", format!("must be positive, got {}", cfg.material.epsilon));
    }
    if let Some(l) = &cfg.material.epsilons {
        if l.is_empty() || l.iter().any(|e| !positive(*e)) {
            fail("material.epsilons", "must be a nonempty list of positive numbers".into());
        }
    }
    if cfg.grid.resolution < 2 {
        fail("grid.resolution", format!("must be at least 2, got {}", cfg.grid.resolution));
    }
    if cfg.domain.semi_axes.iter().any(|a| !positive(*a)) {
        fail("domain.semi_axes", "entries must be positive".into());
    }
    if let Some(v) = cfg.domain.volume {
        if !positive(v) {
            fail("domain.volume", format!("must be positive, got {v}"));
        }
    }
    if cfg.domain.tensor_source == TensorSource::Given && cfg.domain.tensor.is_none() {
        fail("domain.tensor", "required when domain.tensor_source = \"given\"".into());
    }
    if let Some(t) = cfg.domain.tensor {
        if t.iter().any(|d| !(*d >= 0.0)) || (t.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            fail("domain.tensor", "entries must be non-negative and sum to 1".into());
        }
    }
    if cfg.domain.staircase_resolution < 16 {
        fail("domain.staircase_resolution", "must be at least 16".into());
    }
    if cfg.field.knots.is_empty() {
        fail("field.knots", "needs at least one knot".into());
    } else if cfg.field.knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
        fail("field.knots", "times must be strictly increasing".into());
    }
    if cfg.field.knots.iter().flatten().any(|x| !x.is_finite()) {
        fail("field.knots", "entries must be finite".into());
    }
    if !(norm(cfg.field.direction) > 0.0) {
        fail("field.direction", "must be nonzero".into());
    }
    if let Some(t) = cfg.field.rotate_toward {
        if !(norm(t) > 0.0) {
            fail("field.rotate_toward", "must be nonzero".into());
        }
    }
    if !positive(cfg.field.bump_radius) {
        fail("field.bump_radius", "must be positive".into());
    }
    if let Some(dt) = cfg.solver.dt {
        if !positive(dt) {
            fail("solver.dt", format!("must be positive, got {dt}"));
        }
    }
    for (key, v) in [
        ("solver.dt_factor", cfg.solver.dt_factor),
        ("solver.tol", cfg.solver.tol),
        ("solver.max_time", cfg.solver.max_time),
        ("experiment.threshold_factor", cfg.experiment.threshold_factor),
        ("experiment.amplitude", cfg.experiment.amplitude),
        ("experiment.period", cfg.experiment.period),
        ("experiment.scan_size", cfg.experiment.scan_size),
    ] {
        if !positive(v) {
            fail(key, format!("must be positive, got {v}"));
        }
    }
    if !(cfg.solver.horizon >= 0.0 && cfg.solver.horizon.is_finite()) {
        fail("solver.horizon", format!("must be non-negative, got {}", cfg.solver.horizon));
    }
    for (key, v) in [
        ("solver.sample_every", cfg.solver.sample_every),
        ("experiment.samples", cfg.experiment.samples),
        ("experiment.relax_samples", cfg.experiment.relax_samples),
        ("experiment.scan_samples", cfg.experiment.scan_samples),
    ] {
        if v == 0 {
            fail(key, "must be at least 1".into());
        }
    }
    if cfg.experiment.cycles < 2 {
        fail("experiment.cycles", "must be at least 2 (the first cycle is a warm-up)".into());
    }
    if !(cfg.experiment.perturbation >= 0.0) {
        fail("experiment.perturbation", "must be non-negative".into());
    }
    if !(cfg.experiment.misalignment >= 0.0) {
        fail("experiment.misalignment", "must be non-negative".into());
    }
    if let Some(v) = cfg.experiment.initial {
        if !(norm(v) > 0.0) {
            fail("experiment.initial", "must be nonzero".into());
        }
    }
    if cfg.experiment.lambdas.iter().any(|l| !(*l >= 0.0)) {
        fail("experiment.lambdas", "entries must be non-negative".into());
    }
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// TOML text that parses back to `cfg`.
pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config values are plain TOML")
}

impl RunConfig {
    /// The epsilon ladder, or `[epsilon]`.
    pub fn epsilons(&self) -> Vec<f64> {
        self.material.epsilons.clone().unwrap_or_else(|| vec![self.material.epsilon])
    }
}
