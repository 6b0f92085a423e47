//! Vorticity-form Navier-Stokes / Euler integration on the torus.
//!
//! The viscous term is absorbed exactly by the integrating factor
//! `exp(nu t |k|^2)`; classical RK4 advances only the advection.

use std::collections::BTreeMap;

use crate::audit::{term, InequalityAudit};
use crate::error::{Error, Result};
use crate::littlewood_paley::{BesovSpec, DyadicPartition};
use crate::spectral::{
    advect, biot_savart, dealias, helmholtz_project, partial, sup_norm_refined, truncate_in_place, Grid,
    SpectralField, VectorField,
};

/// Vorticity with its cached Biot-Savart velocity.
#[derive(Clone, Debug)]
pub struct FlowState {
    omega: SpectralField,
    velocity: VectorField,
    t: f64,
    nu: f64,
}

impl FlowState {
    pub fn new(omega: SpectralField, nu: f64) -> Result<Self> {
        Self::at_time(omega, nu, 0.0)
    }

    pub fn at_time(omega: SpectralField, nu: f64, t: f64) -> Result<Self> {
        if !(nu >= 0.0) {
            return Err(Error::NegativeParameter { name: "nu", value: nu });
        }
        let velocity = biot_savart(&omega)?;
        Ok(FlowState { omega, velocity, t, nu })
    }

    pub fn omega(&self) -> &SpectralField {
        &self.omega
    }

    pub fn velocity(&self) -> &VectorField {
        &self.velocity
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Integrator {
    #[default]
    Rk4IntegratingFactor,
}

/// Extra norms recorded at each monitor time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MonitorNorm {
    /// `||omega||_{B^s_{inf,inf}}`.
    VorticityBesov(f64),
    /// `||v||_{C^s_*}`, componentwise maximum.
    VelocityZygmund(f64),
}

impl MonitorNorm {
    pub fn key(&self) -> String {
        match self {
            MonitorNorm::VorticityBesov(s) => format!("besov_omega[{s}]"),
            MonitorNorm::VelocityZygmund(s) => format!("zygmund_v[{s}]"),
        }
    }

    fn evaluate(&self, state: &FlowState) -> Result<f64> {
        let p = DyadicPartition::shared(state.grid());
        match *self {
            MonitorNorm::VorticityBesov(s) => p.besov_norm(state.omega(), BesovSpec::sup(s)),
            MonitorNorm::VelocityZygmund(s) => {
                let [a, b] = state.velocity().components();
                Ok(p.zygmund_norm(a, s)?.max(p.zygmund_norm(b, s)?))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub dealias: bool,
    /// Steps between monitor records; the first and last step are always recorded.
    pub monitor_stride: usize,
    pub monitor_norms: Vec<MonitorNorm>,
}

impl SolverConfig {
    pub fn new(grid: &Grid, dt: f64, t_end: f64) -> Result<Self> {
        let config = SolverConfig {
            grid: grid.clone(),
            dt,
            t_end,
            integrator: Integrator::default(),
            dealias: true,
            monitor_stride: 1,
            monitor_norms: Vec::new(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.monitor_stride = stride;
        self
    }

    pub fn with_norms(mut self, norms: impl IntoIterator<Item = MonitorNorm>) -> Self {
        self.monitor_norms = norms.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::NegativeParameter { name: "t_end", value: self.t_end });
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidParameter("monitor_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Diagnostics recorded at one monitor time.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitor {
    pub t: f64,
    /// Sup of `|omega|` over the collocation points.
    pub sup_omega: f64,
    /// Sup of `|omega|` over the whole torus (see [`sup_norm_refined`]).
    pub sup_omega_fine: f64,
    pub sup_v: f64,
    pub norms: BTreeMap<String, f64>,
}

impl Monitor {
    fn record(state: &FlowState, norms: &[MonitorNorm]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for norm in norms {
            map.insert(norm.key(), norm.evaluate(state)?);
        }
        Ok(Monitor {
            t: state.t(),
            sup_omega: state.omega().sup_norm(),
            sup_omega_fine: sup_norm_refined(state.omega()),
            sup_v: state.velocity().sup_norm(),
            norms: map,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    nu: f64,
    states: Vec<FlowState>,
    monitors: Vec<Monitor>,
}

impl Trajectory {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn states(&self) -> &[FlowState] {
        &self.states
    }

    pub fn monitors(&self) -> &[Monitor] {
        &self.monitors
    }

    pub fn initial(&self) -> &FlowState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(FlowState::t)
    }

    /// Largest relative overshoot `sup|omega(t)| / sup|omega0| - 1` (torus sup).
    pub fn max_principle_excess(&self) -> f64 {
        let initial = self.monitors[0].sup_omega_fine;
        self.monitors
            .iter()
            .map(|m| {
                if initial == 0.0 {
                    if m.sup_omega_fine == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    m.sup_omega_fine / initial - 1.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn satisfies_max_principle(&self, tolerance: f64) -> bool {
        self.max_principle_excess() <= tolerance
    }
}

/// `-(v . grad omega)`, dealiased, with zero mean.
pub fn nonlinear_term(state: &FlowState) -> SpectralField {
    let mut out = -&advect(state.velocity(), state.omega()).expect("state grids agree");
    out.coefficients_mut()[0] = Default::default();
    out
}

/// `exp(t nu Lap) F`, exact mode by mode.
pub fn heat_semigroup(f: &SpectralField, t: f64, nu: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::NegativeParameter { name: "t", value: t });
    }
    if !(nu >= 0.0) {
        return Err(Error::NegativeParameter { name: "nu", value: nu });
    }
    let rate = t * nu;
    if rate == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_multiplier(|k1, k2| (-rate * (k1 * k1 + k2 * k2)).exp()))
}

fn decay_table(grid: &Grid, rate: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let (k1, k2) = grid.wavevector(idx);
            (-rate * (k1 * k1 + k2 * k2)).exp()
        })
        .collect()
}

/// Advection tendency of `omega` together with the largest speed `|v|` on the grid.
fn tendency(omega: &SpectralField, dealias: bool) -> Result<(SpectralField, f64)> {
    let v = biot_savart(omega)?;
    let u1 = v.u1().to_samples();
    let u2 = v.u2().to_samples();
    let d1 = partial(omega, 0).to_samples();
    let d2 = partial(omega, 1).to_samples();
    let mut speed = 0.0f64;
    let samples = (0..u1.len())
        .map(|i| {
            speed = speed.max(u1[i].hypot(u2[i]));
            -(u1[i] * d1[i] + u2[i] * d2[i])
        })
        .collect();
    let mut out = SpectralField::from_real_samples(omega.grid(), samples);
    if dealias {
        truncate_in_place(&mut out);
    }
    out.coefficients_mut()[0] = Default::default();
    Ok((out, speed))
}

struct Stepper {
    dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
    dealias: bool,
}

impl Stepper {
    fn new(grid: &Grid, nu: f64, dt: f64, dealias: bool) -> Self {
        Stepper {
            dt,
            full: decay_table(grid, nu * dt),
            half: decay_table(grid, nu * dt / 2.0),
            dealias,
        }
    }

    fn advance(&self, state: &FlowState) -> Result<FlowState> {
        let dt = self.dt;
        let grid = state.grid();
        let w = state.omega();
        let (a, speed) = tendency(w, self.dealias)?;
        let cfl = dt * speed * grid.n_points() as f64 / grid.box_length();
        if cfl > 0.5 {
            return Err(Error::CflViolation { cfl, t: state.t() });
        }
        let wa = w.axpy(dt / 2.0, &a)?.apply_table(&self.half);
        let (b, _) = tendency(&wa, self.dealias)?;
        let w_half = w.apply_table(&self.half);
        let wb = w_half.axpy(dt / 2.0, &b)?;
        let (c, _) = tendency(&wb, self.dealias)?;
        let w_full = w.apply_table(&self.full);
        let wc = w_full.axpy(dt, &c.apply_table(&self.half))?;
        let (d, _) = tendency(&wc, self.dealias)?;
        let mid = (&b + &c).apply_table(&self.half);
        let update = &(&a.apply_table(&self.full) + &mid.scale(2.0)) + &d;
        let next = w_full.axpy(dt / 6.0, &update)?;
        let t = state.t() + dt;
        if next.coefficients().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Diverged(t));
        }
        FlowState::at_time(next, state.nu(), t)
    }
}

/// One step of length `config.dt`.
pub fn step(state: &FlowState, config: &SolverConfig) -> Result<FlowState> {
    config.validate()?;
    config.grid.ensure_same(state.grid())?;
    Stepper::new(state.grid(), state.nu(), config.dt, config.dealias).advance(state)
}

fn check_initial(omega0: &SpectralField, nu: f64, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    config.grid.ensure_same(omega0.grid())?;
    if !(nu >= 0.0) {
        return Err(Error::NegativeParameter { name: "nu", value: nu });
    }
    omega0.ensure_mean_free()?;
    if config.dealias && !omega0.is_band_limited() {
        return Err(Error::NotBandLimited);
    }
    Ok(())
}

/// Integrates to `config.t_end`, handing every monitored state to `observer`.
/// Returns the final state; nothing else is retained.
pub fn solve_with(
    omega0: &SpectralField,
    nu: f64,
    config: &SolverConfig,
    mut observer: impl FnMut(&FlowState, &Monitor) -> Result<()>,
) -> Result<FlowState> {
    check_initial(omega0, nu, config)?;
    let start = if config.dealias { dealias(omega0) } else { omega0.clone() };
    let mut state = FlowState::new(start, nu)?;
    observer(&state, &Monitor::record(&state, &config.monitor_norms)?)?;

    let dt = config.dt;
    let mut full_steps = (config.t_end / dt).floor() as usize;
    if (full_steps + 1) as f64 * dt <= config.t_end * (1.0 + 1e-12) {
        full_steps += 1;
    }
    let leftover = config.t_end - full_steps as f64 * dt;
    let short = leftover > 1e-9 * dt;
    let total = full_steps + usize::from(short);
    let stepper = Stepper::new(omega0.grid(), nu, dt, config.dealias);

    for k in 1..=total {
        state = if k <= full_steps {
            let mut next = stepper.advance(&state)?;
            next.t = if k == total { config.t_end } else { k as f64 * dt };
            next
        } else {
            let mut next = Stepper::new(omega0.grid(), nu, leftover, config.dealias).advance(&state)?;
            next.t = config.t_end;
            next
        };
        if k % config.monitor_stride == 0 || k == total {
            observer(&state, &Monitor::record(&state, &config.monitor_norms)?)?;
        }
    }
    Ok(state)
}

pub fn solve(omega0: &SpectralField, nu: f64, config: &SolverConfig) -> Result<Trajectory> {
    let mut states = Vec::new();
    let mut monitors = Vec::new();
    solve_with(omega0, nu, config, |state, monitor| {
        states.push(state.clone());
        monitors.push(monitor.clone());
        Ok(())
    })?;
    Ok(Trajectory { nu, states, monitors })
}

/// Full tendency `-v.grad omega + nu Lap omega`.
fn full_tendency(state: &FlowState) -> SpectralField {
    let nu = state.nu();
    let diffusion = state.omega().apply_multiplier(|k1, k2| -nu * (k1 * k1 + k2 * k2));
    &nonlinear_term(state) + &diffusion
}

/// `P(v . grad v)` for the velocity of `state`.
fn projected_advection(state: &FlowState) -> Result<VectorField> {
    let v = state.velocity();
    let raw = v.try_map(|c| advect(v, c))?;
    Ok(helmholtz_project(&raw))
}

/// Sup-norm discrepancy between the final velocity and the Duhamel formula
/// `exp(T nu Lap) v0 - int_0^T exp((T - s) nu Lap) P(v . grad v)(s) ds`,
/// evaluated by composite Simpson quadrature on `nodes` equispaced times.
///
/// Vorticity between stored states is rebuilt by cubic Hermite interpolation
/// from the states and their tendencies, so the stored spacing must not exceed
/// the node spacing.
pub fn mild_residual(traj: &Trajectory, nodes: usize) -> Result<f64> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::InsufficientSamples(format!(
            "Simpson quadrature needs an odd node count >= 3, got {nodes}"
        )));
    }
    let states = traj.states();
    let t_end = traj.final_state().t();
    if states.len() < 2 || t_end <= 0.0 {
        return Err(Error::InsufficientSamples("trajectory spans no time".into()));
    }
    let h = t_end / (nodes - 1) as f64;
    let widest = states.windows(2).map(|w| w[1].t() - w[0].t()).fold(0.0, f64::max);
    if widest > h * (1.0 + 1e-9) {
        return Err(Error::InsufficientSamples(format!(
            "stored states are {widest} apart but quadrature nodes are {h} apart"
        )));
    }

    let nu = traj.nu();
    let mut slopes: Vec<Option<SpectralField>> = vec![None; states.len()];
    let mut slope = |i: usize| -> SpectralField {
        slopes[i].get_or_insert_with(|| full_tendency(&states[i])).clone()
    };

    let mut integral = VectorField::zeros(traj.initial().grid());
    let mut seg = 0usize;
    for k in 0..nodes {
        let s = if k == nodes - 1 { t_end } else { k as f64 * h };
        while seg + 2 < states.len() && states[seg + 1].t() <= s {
            seg += 1;
        }
        let (a, b) = (&states[seg], &states[seg + 1]);
        let tol = 1e-12 * t_end;
        let state = if (s - a.t()).abs() <= tol {
            a.clone()
        } else if (s - b.t()).abs() <= tol {
            b.clone()
        } else {
            let span = b.t() - a.t();
            let x = (s - a.t()) / span;
            let (x2, x3) = (x * x, x * x * x);
            let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
            let h10 = x3 - 2.0 * x2 + x;
            let h01 = -2.0 * x3 + 3.0 * x2;
            let h11 = x3 - x2;
            let omega = a
                .omega()
                .scale(h00)
                .axpy(h10 * span, &slope(seg))?
                .axpy(h01, b.omega())?
                .axpy(h11 * span, &slope(seg + 1))?;
            FlowState::at_time(omega, nu, s)?
        };
        let weight = if k == 0 || k == nodes - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
        let forcing = projected_advection(&state)?;
        let lag = t_end - s;
        let evolved = forcing.try_map(|c| heat_semigroup(c, lag, nu))?;
        integral = integral.axpy(weight, &evolved)?;
    }

    let free = traj.initial().velocity().try_map(|c| heat_semigroup(c, t_end, nu))?;
    let duhamel = free.axpy(-1.0, &integral)?;
    Ok(duhamel.axpy(-1.0, traj.final_state().velocity())?.sup_norm())
}

/// Worst monitor time of `sup|v(t)| <= C sup|v0| exp(C t sup|omega0|)`.
///
/// The reported implied constant is `sup|v(t)| / (sup|v0| exp(C t sup|omega0|))`
/// at the worst monitor time, so the audit passes exactly when the bound
/// holds with the given `C`.
pub fn velocity_bound_audit(monitors: &[Monitor], constant: f64) -> InequalityAudit {
    let m0 = &monitors[0];
    let mut worst: Option<InequalityAudit> = None;
    for m in monitors {
        let growth = m0.sup_v * (constant * m.t * m0.sup_omega).exp();
        let audit = InequalityAudit::new("velocity_bound", m.sup_v, [term("growth", growth)], constant).at_time(m.t);
        if worst.as_ref().is_none_or(|w| audit.implied_constant > w.implied_constant) {
            worst = Some(audit);
        }
    }
    worst.expect("trajectory has monitors")
}

/// Mean of `omega^2` over the torus.
pub fn enstrophy(omega: &SpectralField) -> f64 {
    omega.coefficients().iter().map(|c| c.norm_sqr()).sum()
}
