//! Vanishing-viscosity sweeps: configuration, reference solutions, rate fits
//! and report files.
//!
//! A sweep solves Euler once at doubled resolution, restricts it to the
//! working grid, then solves Navier-Stokes for `nu = 2^{-2n}` per `n` and
//! records the worst velocity error over the monitor times.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{term, InequalityAudit};
use crate::diagnostics::{
    c1_norm_audit_monitors, commutator_lemma_audit_fields, cz_audit, gauss_lemma_audit, key_lemma_terms,
    low_frequency_audit, three_term_split, ErrorDecomposition,
};
use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicPartition;
use crate::solver::{solve_with, velocity_bound_audit, FlowState, Monitor, MonitorNorm, SolverConfig};
use crate::spectral::{biot_savart, dealias, forward_transform, Grid, SpectralField};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "VVLAB_WORKERS";

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    TaylorGreen,
    /// Gaussian random vorticity on wavenumbers `k_min <= |k| <= k_max`.
    RandomBand { k_min: f64, k_max: f64 },
    /// `N` whitespace-separated rows of `N` vorticity samples, row `iy` per line.
    File(PathBuf),
}

/// Acceptance ceilings; the process exit status reflects all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct Ceilings {
    pub cz: f64,
    pub gauss: f64,
    pub c1: f64,
    pub commutator: f64,
    pub bernstein: f64,
    pub velocity_bound: f64,
    pub low_frequency: f64,
    pub max_principle: f64,
    /// Defaults to `alpha / 2 - 0.1`.
    pub min_slope: Option<f64>,
}

impl Default for Ceilings {
    fn default() -> Self {
        Ceilings {
            cz: 10.0,
            gauss: 2.0,
            c1: 10.0,
            commutator: 1.0,
            bernstein: 4.0,
            velocity_bound: 3.0,
            low_frequency: 10.0,
            max_principle: 1e-6,
            min_slope: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_points: usize,
    pub box_length: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_values: Vec<i32>,
    pub alpha: f64,
    pub seed: u64,
    pub omega_sup_target: f64,
    pub initial_data: InitialData,
    pub output_dir: PathBuf,
    pub monitor_stride: usize,
    pub workers: Option<usize>,
    pub ceilings: Ceilings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_points: 64,
            box_length: 2.0 * PI,
            t_end: 0.5,
            dt: 2.5e-3,
            n_values: vec![2, 3, 4, 5, 6],
            alpha: 0.9,
            seed: 0,
            omega_sup_target: 1.0,
            initial_data: InitialData::RandomBand { k_min: 1.0, k_max: 4.0 },
            output_dir: PathBuf::from("out"),
            monitor_stride: 4,
            workers: None,
            ceilings: Ceilings::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_n_values(value: &str) -> Result<Vec<i32>> {
    if let Some((a, b)) = value.split_once("..") {
        let a: i32 = parse_num("n_values", a.trim())?;
        let b: i32 = parse_num("n_values", b.trim().trim_start_matches('='))?;
        return Ok((a..=b).collect());
    }
    value
        .split(',')
        .map(|s| parse_num("n_values", s.trim()))
        .collect()
}

fn parse_initial(value: &str, base: &Path) -> Result<InitialData> {
    if value == "taylor_green" {
        return Ok(InitialData::TaylorGreen);
    }
    if let Some(band) = value.strip_prefix("random_band:") {
        let (a, b) = band
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("random_band expects `k_min,k_max`, got `{band}`")))?;
        return Ok(InitialData::RandomBand {
            k_min: parse_num("initial_data", a.trim())?,
            k_max: parse_num("initial_data", b.trim())?,
        });
    }
    if let Some(path) = value.strip_prefix("file:") {
        return Ok(InitialData::File(base.join(path.trim())));
    }
    Err(Error::Config(format!(
        "initial_data must be taylor_green, random_band:k_min,k_max or file:path, got `{value}`"
    )))
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_points" | "N" => c.n_points = parse_num(key, value)?,
                "box_length" => c.box_length = parse_num(key, value)?,
                "T" | "t_end" => c.t_end = parse_num(key, value)?,
                "dt" => c.dt = parse_num(key, value)?,
                "n_values" => c.n_values = parse_n_values(value)?,
                "alpha" => c.alpha = parse_num(key, value)?,
                "seed" => c.seed = parse_num(key, value)?,
                "omega_sup_target" => c.omega_sup_target = parse_num(key, value)?,
                "initial_data" => c.initial_data = parse_initial(value, base)?,
                "output_dir" => c.output_dir = base.join(value),
                "monitor_stride" => c.monitor_stride = parse_num(key, value)?,
                "workers" => c.workers = Some(parse_num(key, value)?),
                "ceiling.cz" => c.ceilings.cz = parse_num(key, value)?,
                "ceiling.gauss" => c.ceilings.gauss = parse_num(key, value)?,
                "ceiling.c1" => c.ceilings.c1 = parse_num(key, value)?,
                "ceiling.commutator" => c.ceilings.commutator = parse_num(key, value)?,
                "ceiling.bernstein" => c.ceilings.bernstein = parse_num(key, value)?,
                "ceiling.velocity_bound" => c.ceilings.velocity_bound = parse_num(key, value)?,
                "ceiling.low_frequency" => c.ceilings.low_frequency = parse_num(key, value)?,
                "ceiling.max_principle" => c.ceilings.max_principle = parse_num(key, value)?,
                "ceiling.min_slope" => c.ceilings.min_slope = Some(parse_num(key, value)?),
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: match e {
                Error::Config(message) => message,
                other => other.to_string(),
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.n_points, self.box_length)?;
        if self.n_values.is_empty() || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_values must be nonempty and strictly increasing".into()));
        }
        if self.n_values[0] < 0 {
            return Err(Error::Config("n_values must be non-negative".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.t_end > 0.0 && self.dt > 0.0 && self.omega_sup_target > 0.0) {
            return Err(Error::Config("T, dt and omega_sup_target must be positive".into()));
        }
        if self.t_end * self.omega_sup_target > 2.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "T * omega_sup_target = {} exceeds the short-time guard 2",
                self.t_end * self.omega_sup_target
            )));
        }
        if self.monitor_stride == 0 {
            return Err(Error::Config("monitor_stride must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_points, self.box_length)
    }

    pub fn min_slope(&self) -> f64 {
        self.ceilings.min_slope.unwrap_or(self.alpha / 2.0 - 0.1)
    }

    /// Worker count: the environment override, then the config, then the
    /// machine's parallelism.
    pub fn worker_count(&self) -> Result<usize> {
        if let Ok(raw) = std::env::var(WORKERS_ENV) {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
            if n == 0 {
                return Err(Error::Config(format!("{WORKERS_ENV} must be at least 1")));
            }
            return Ok(n);
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}

fn read_sample_file(path: &Path, grid: &Grid) -> Result<SpectralField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::with_capacity(grid.len());
    for token in text.split_whitespace() {
        samples.push(token.parse::<f64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            message: format!("not a number: `{token}`"),
        })?);
    }
    if samples.len() != grid.len() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected {} samples, found {}", grid.len(), samples.len()),
        });
    }
    forward_transform(grid, &samples)
}

fn random_band(grid: &Grid, k_min: f64, k_max: f64, seed: u64) -> Result<SpectralField> {
    let cutoff = grid.dealias_cutoff();
    let kappa = grid.fundamental();
    if k_max > kappa * cutoff as f64 {
        return Err(Error::NotBandLimited);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for m2 in 0..=cutoff {
        for m1 in -cutoff..=cutoff {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let k = kappa * ((m1 * m1 + m2 * m2) as f64).sqrt();
            if k < k_min || k > k_max {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            modes.push((m1, m2, Complex64::new(re, im)));
        }
    }
    if modes.is_empty() {
        return Err(Error::EmptyBand { k_min, k_max });
    }
    Ok(SpectralField::from_modes(grid, &modes))
}

/// Mean-free, band-limited initial vorticity with grid sup `omega_sup_target`.
pub fn generate_initial_data(config: &ExperimentConfig) -> Result<SpectralField> {
    let grid = config.grid()?;
    let raw = match &config.initial_data {
        InitialData::TaylorGreen => SpectralField::from_modes(
            &grid,
            &[(1, 1, Complex64::new(-0.5, 0.0)), (1, -1, Complex64::new(-0.5, 0.0))],
        ),
        InitialData::RandomBand { k_min, k_max } => random_band(&grid, *k_min, *k_max, config.seed)?,
        InitialData::File(path) => dealias(&read_sample_file(path, &grid)?).without_mean(),
    };
    let sup = raw.sup_norm();
    if sup == 0.0 {
        return Err(Error::Config("initial vorticity vanishes identically".into()));
    }
    Ok(raw.scale(config.omega_sup_target / sup))
}

/// One viscosity of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: i32,
    pub nu: f64,
    /// `sup_t ||v_nu(t) - v(t)||` over the monitor times; `None` when the run failed.
    pub error_sup: Option<f64>,
    pub decomposition: Option<ErrorDecomposition>,
    pub key_terms: BTreeMap<String, f64>,
    pub audits: Vec<InequalityAudit>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub n_points: usize,
    pub steps: usize,
    pub sup_omega0: f64,
    pub sup_v0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t_end: f64,
    pub alpha: f64,
    pub records: Vec<SweepRecord>,
    pub reference: ReferenceInfo,
    /// Audits of the initial data and the Euler reference.
    pub audits: Vec<InequalityAudit>,
}

impl SweepResult {
    /// `(nu, error)` of every record that finished.
    pub fn successful(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().filter_map(|r| r.error_sup.map(|e| (r.nu, e)))
    }

    /// Whether errors shrink with `n`, allowing each step to grow by `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let errors: Vec<f64> = self.records.iter().filter_map(|r| r.error_sup).collect();
        errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    pub fn all_audits(&self) -> impl Iterator<Item = &InequalityAudit> + '_ {
        self.audits.iter().chain(self.records.iter().flat_map(|r| r.audits.iter()))
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRecord> + '_ {
        self.records.iter().filter(|r| r.failure.is_some())
    }
}

fn max_principle_audit(name: &str, monitors: &[Monitor], tolerance: f64) -> InequalityAudit {
    let initial = monitors[0].sup_omega_fine;
    let peak = monitors.iter().map(|m| m.sup_omega_fine).fold(0.0, f64::max);
    InequalityAudit::new(name, peak, [term("initial", initial)], 1.0 + tolerance)
}

/// Euler reference restricted to the working grid, one entry per monitor time.
struct Reference {
    times: Vec<f64>,
    states: Vec<FlowState>,
    steps: usize,
}

fn solve_reference(omega0: &SpectralField, config: &ExperimentConfig) -> Result<(Reference, Vec<InequalityAudit>)> {
    let grid = omega0.grid().clone();
    let fine = Grid::new(2 * grid.n_points(), grid.box_length())?;
    let solver = SolverConfig::new(&fine, config.dt, config.t_end)?
        .with_stride(config.monitor_stride)
        .with_norms([MonitorNorm::VelocityZygmund(1.0)]);
    let mut reference = Reference {
        times: Vec::new(),
        states: Vec::new(),
        steps: 0,
    };
    let mut monitors = Vec::new();
    solve_with(&omega0.resample(&fine)?, 0.0, &solver, |state, monitor| {
        reference.times.push(state.t());
        reference.states.push(FlowState::at_time(state.omega().resample(&grid)?, 0.0, state.t())?);
        monitors.push(monitor.clone());
        Ok(())
    })?;
    reference.steps = (config.t_end / config.dt).ceil() as usize;
    let c = &config.ceilings;
    let audits = vec![
        c1_norm_audit_monitors(&monitors, c.c1)?,
        relabel(velocity_bound_audit(&monitors, c.velocity_bound), "velocity_bound[euler]"),
        max_principle_audit("max_principle[euler]", &monitors, c.max_principle),
    ];
    Ok((reference, audits))
}

fn relabel(mut audit: InequalityAudit, name: &str) -> InequalityAudit {
    audit.name = name.to_string();
    audit
}

fn initial_audits(omega0: &SpectralField, config: &ExperimentConfig) -> Result<Vec<InequalityAudit>> {
    let c = &config.ceilings;
    let p = DyadicPartition::shared(omega0.grid());
    let v0 = biot_savart(omega0)?;
    let mut audits = vec![cz_audit(omega0, c.cz)?];
    for j in p.active_blocks() {
        match p.bernstein_audit(omega0, j, c.bernstein) {
            Ok(a) => audits.push(a),
            Err(Error::DegenerateBlock(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for &n in &config.n_values {
        let nu = (-2.0 * n as f64).exp2();
        let delta = (-(n as f64) * config.alpha).exp2();
        let gauss = gauss_lemma_audit(v0.u1(), config.t_end, nu, delta, config.alpha, c.gauss)?;
        audits.push(relabel(gauss, &format!("gauss[n={n}]")));
        audits.push(low_frequency_audit(&v0, n, c.low_frequency)?);
    }
    Ok(audits)
}

fn run_record(n: i32, omega0: &SpectralField, reference: &Reference, config: &ExperimentConfig) -> SweepRecord {
    let nu = (-2.0 * n as f64).exp2();
    let mut record = SweepRecord {
        n,
        nu,
        error_sup: None,
        decomposition: None,
        key_terms: BTreeMap::new(),
        audits: Vec::new(),
        failure: None,
    };
    match measure_record(n, nu, omega0, reference, config) {
        Ok((error, decomposition, key_terms, audits)) => {
            record.error_sup = Some(error);
            record.decomposition = Some(decomposition);
            record.key_terms = key_terms;
            record.audits = audits;
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    record
}

type Measured = (f64, ErrorDecomposition, BTreeMap<String, f64>, Vec<InequalityAudit>);

fn measure_record(n: i32, nu: f64, omega0: &SpectralField, reference: &Reference, config: &ExperimentConfig) -> Result<Measured> {
    let grid = omega0.grid();
    let solver = SolverConfig::new(grid, config.dt, config.t_end)?.with_stride(config.monitor_stride);
    let mut error = 0.0f64;
    let mut index = 0usize;
    let mut monitors = Vec::new();
    let last = solve_with(omega0, nu, &solver, |state, monitor| {
        let ref_state = reference
            .states
            .get(index)
            .filter(|_| reference.times[index] == state.t())
            .ok_or_else(|| Error::InvalidParameter(format!("no reference state at t = {}", state.t())))?;
        error = error.max(state.velocity().axpy(-1.0, ref_state.velocity())?.sup_norm());
        monitors.push(monitor.clone());
        index += 1;
        Ok(())
    })?;
    let euler = reference.states.last().expect("reference has states");
    let decomposition = three_term_split(last.velocity(), euler.velocity(), n)?;
    let p = DyadicPartition::shared(grid);
    let omega_bar = last.omega() - &p.low_pass(euler.omega(), n)?;
    let c = &config.ceilings;
    let audits = vec![
        commutator_lemma_audit_fields(euler.velocity(), &omega_bar, n, config.alpha, c.commutator)?,
        max_principle_audit(&format!("max_principle[n={n}]"), &monitors, c.max_principle),
        relabel(
            velocity_bound_audit(&monitors, c.velocity_bound),
            &format!("velocity_bound[n={n}]"),
        ),
    ];
    let key_terms = key_lemma_terms(&last, euler, n)?;
    Ok((error, decomposition, key_terms, audits))
}

/// Runs the Euler reference and every viscosity of the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let omega0 = generate_initial_data(config)?;
    let mut audits = initial_audits(&omega0, config)?;
    let (reference, reference_audits) = solve_reference(&omega0, config)?;
    audits.extend(reference_audits);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let records: Vec<SweepRecord> = pool.install(|| {
        config
            .n_values
            .par_iter()
            .map(|&n| run_record(n, &omega0, &reference, config))
            .collect()
    });

    let v0 = biot_savart(&omega0)?;
    Ok(SweepResult {
        t_end: config.t_end,
        alpha: config.alpha,
        records,
        reference: ReferenceInfo {
            n_points: 2 * config.n_points,
            steps: reference.steps,
            sup_omega0: omega0.sup_norm(),
            sup_v0: v0.sup_norm(),
        },
        audits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Smallest and largest `n` that entered the fit.
    pub n_range: (i32, i32),
}

/// Least squares line through `(ln nu, ln error)`.
pub fn fit_points(points: &[(i32, f64, f64)]) -> Result<RateFit> {
    let usable: Vec<&(i32, f64, f64)> = points
        .iter()
        .filter(|(_, nu, e)| *nu > 0.0 && *e > 0.0 && e.is_finite())
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints(usable.len()));
    }
    let m = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.2.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all viscosities coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ns = usable.iter().map(|p| p.0);
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (rss / m).sqrt(),
        n_range: (ns.clone().min().unwrap(), ns.max().unwrap()),
    })
}

pub fn fit_rate(sweep: &SweepResult) -> Result<RateFit> {
    let points: Vec<(i32, f64, f64)> = sweep
        .records
        .iter()
        .filter_map(|r| r.error_sup.map(|e| (r.n, r.nu, e)))
        .collect();
    fit_points(&points)
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("n,nu,error_sup,low,mid,tail\n");
    for r in &sweep.records {
        let nan = f64::NAN;
        let d = r.decomposition;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            fmt_num(r.nu),
            fmt_num(r.error_sup.unwrap_or(nan)),
            fmt_num(d.map_or(nan, |d| d.low)),
            fmt_num(d.map_or(nan, |d| d.mid)),
            fmt_num(d.map_or(nan, |d| d.tail)),
        );
    }
    out
}

/// Row of `sweep.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvRow {
    pub n: i32,
    pub nu: f64,
    pub error_sup: f64,
    pub low: f64,
    pub mid: f64,
    pub tail: f64,
}

pub fn parse_sweep_csv(text: &str, path: &Path) -> Result<Vec<CsvRow>> {
    let err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some("n,nu,error_sup,low,mid,tail") => {}
        other => return Err(err(format!("unexpected header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(err(format!("row {}: expected 6 columns, found {}", i + 1, cells.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("row {}: bad number `{s}`", i + 1)));
        rows.push(CsvRow {
            n: cells[0].trim().parse().map_err(|_| err(format!("row {}: bad n", i + 1)))?,
            nu: num(cells[1])?,
            error_sup: num(cells[2])?,
            low: num(cells[3])?,
            mid: num(cells[4])?,
            tail: num(cells[5])?,
        });
    }
    Ok(rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_csv(&text, path)
}

pub fn fit_csv_rows(rows: &[CsvRow]) -> Result<RateFit> {
    let points: Vec<(i32, f64, f64)> = rows.iter().map(|r| (r.n, r.nu, r.error_sup)).collect();
    fit_points(&points)
}

#[derive(Serialize)]
struct RateJson {
    slope: f64,
    intercept: f64,
    residual_rms: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// Writes `sweep.csv`, `audits.json`, `rate.json` and `plotdata.csv` into `dir`.
pub fn emit_report(sweep: &SweepResult, fit: &RateFit, dir: &Path) -> Result<Vec<PathBuf>> {
    let usable = sweep.successful().count();
    if usable < 3 {
        return Err(Error::InsufficientPoints(usable));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let audits: Vec<&InequalityAudit> = sweep.all_audits().collect();
    let rate = RateJson {
        slope: fit.slope,
        intercept: fit.intercept,
        residual_rms: fit.residual_rms,
    };
    let mut plot = String::from("log2_nu,log_error\n");
    for (nu, e) in sweep.successful() {
        let _ = writeln!(plot, "{},{}", fmt_num(nu.log2()), fmt_num(e.ln()));
    }
    let files = [
        ("sweep.csv", sweep_csv(sweep)),
        ("audits.json", to_json(&audits)),
        ("rate.json", to_json(&rate)),
        ("plotdata.csv", plot),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Outcome of checking a finished sweep against its ceilings.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub failed_audits: Vec<String>,
    pub failed_records: Vec<i32>,
    pub slope_ok: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.failed_audits.is_empty() && self.failed_records.is_empty() && self.slope_ok
    }
}

pub fn verdict(sweep: &SweepResult, fit: &RateFit, config: &ExperimentConfig) -> Verdict {
    Verdict {
        failed_audits: sweep.all_audits().filter(|a| !a.pass).map(|a| a.name.clone()).collect(),
        failed_records: sweep.failures().map(|r| r.n).collect(),
        slope_ok: fit.slope >= config.min_slope(),
    }
}

/// Lemma names accepted by [`lemma_audits`].
pub const LEMMAS: [&str; 8] = [
    "cz",
    "gauss",
    "bernstein",
    "low_frequency",
    "c1",
    "velocity_bound",
    "max_principle",
    "commutator",
];

fn matches_lemma(name: &str, lemma: &str) -> bool {
    name == lemma || name.strip_prefix(lemma).is_some_and(|rest| rest.starts_with('['))
}

/// Audits of one lemma. Lemmas about the initial data are evaluated directly;
/// the rest need the full sweep.
pub fn lemma_audits(config: &ExperimentConfig, lemma: &str) -> Result<Vec<InequalityAudit>> {
    if !LEMMAS.contains(&lemma) {
        return Err(Error::Config(format!(
            "unknown lemma `{lemma}`; expected one of {}",
            LEMMAS.join(", ")
        )));
    }
    let audits = if matches!(lemma, "cz" | "gauss" | "bernstein" | "low_frequency") {
        config.validate()?;
        initial_audits(&generate_initial_data(config)?, config)?
    } else {
        run_sweep(config)?.all_audits().cloned().collect()
    };
    Ok(audits.into_iter().filter(|a| matches_lemma(&a.name, lemma)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n_points: 16,
            t_end: 0.1,
            dt: 0.01,
            n_values: vec![1, 2, 3],
            monitor_stride: 2,
            workers: Some(1),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn parses_config_text() {
        let text = "# sweep\nN = 32\nT = 0.25\nn_values = 2..4\ninitial_data = random_band:1,3\nseed = 7 # trailing\nceiling.cz = 5\n";
        let c = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.n_points, 32);
        assert_eq!(c.n_values, vec![2, 3, 4]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.ceilings.cz, 5.0);
        assert_eq!(c.initial_data, InitialData::RandomBand { k_min: 1.0, k_max: 3.0 });
        assert!(ExperimentConfig::parse("bogus = 1", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("n_values = 3,2", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("T = 3\nomega_sup_target = 1", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("alpha = 1.0", Path::new(".")).is_err());
    }

    #[test]
    fn taylor_green_data() {
        let c = ExperimentConfig {
            initial_data: InitialData::TaylorGreen,
            omega_sup_target: 2.0,
            ..small_config()
        };
        let w = generate_initial_data(&c).unwrap();
        let expect = SpectralField::from_fn(&c.grid().unwrap(), |x, y| -2.0 * x.cos() * y.cos());
        assert!((&w - &expect).sup_norm() < 1e-14);
    }

    #[test]
    fn random_band_is_seeded_and_scaled() {
        let c = small_config();
        let a = generate_initial_data(&c).unwrap();
        let b = generate_initial_data(&c).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert!((a.sup_norm() - 1.0).abs() < 1e-10);
        assert_eq!(a.mean(), 0.0);
        let other = generate_initial_data(&ExperimentConfig { seed: 1, ..c.clone() }).unwrap();
        assert_ne!(a.coefficients(), other.coefficients());
        let empty = ExperimentConfig {
            initial_data: InitialData::RandomBand { k_min: 1.2, k_max: 1.3 },
            ..c
        };
        assert!(matches!(generate_initial_data(&empty), Err(Error::EmptyBand { .. })));
    }

    #[test]
    fn exact_power_law_fit() {
        let points: Vec<(i32, f64, f64)> = (2..7)
            .map(|n| {
                let nu = (-2.0 * n as f64).exp2();
                (n, nu, 3.0 * nu.sqrt())
            })
            .collect();
        let fit = fit_points(&points).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.n_range, (2, 6));
        assert!(matches!(fit_points(&points[..2]), Err(Error::InsufficientPoints(2))));
    }

    #[test]
    fn small_sweep_runs() {
        let sweep = run_sweep(&small_config()).unwrap();
        assert_eq!(sweep.records.len(), 3);
        assert!(sweep.failures().next().is_none());
        for r in &sweep.records {
            let d = r.decomposition.unwrap();
            assert!(d.satisfies_triangle());
            assert_eq!(r.key_terms.len(), 5);
        }
        assert!(sweep.is_monotone(0.05));
        let csv = sweep_csv(&sweep);
        let rows = parse_sweep_csv(&csv, Path::new("mem")).unwrap();
        for (row, rec) in rows.iter().zip(&sweep.records) {
            assert_eq!(row.error_sup, rec.error_sup.unwrap());
            assert_eq!(row.nu, rec.nu);
        }
    }

    #[test]
    fn lemma_filter() {
        assert!(matches_lemma("gauss[n=2]", "gauss"));
        assert!(matches_lemma("cz", "cz"));
        assert!(!matches_lemma("c1", "cz"));
        assert!(lemma_audits(&small_config(), "nonsense").is_err());
        let cz = lemma_audits(&small_config(), "cz").unwrap();
        assert_eq!(cz.len(), 1);
    }
}
