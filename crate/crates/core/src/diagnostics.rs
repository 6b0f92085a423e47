//! Measured inequality audits and the frequency split of the viscous error.
//!
//! Every audit reports the smallest constant consistent with the data; the
//! caller supplies the ceiling it is checked against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit::{term, InequalityAudit};
use crate::error::{Error, Result};
use crate::harness::SweepResult;
use crate::littlewood_paley::{BesovSpec, DyadicPartition};
use crate::paraproduct::{commutator_value, low_pass_remainder_tau};
use crate::solver::{heat_semigroup, FlowState, Monitor, MonitorNorm, Trajectory};
use crate::spectral::{
    biot_savart, gradient, helmholtz_project, partial, product, sup_norm_refined, SpectralField,
    VectorField,
};

fn pow2(e: f64) -> f64 {
    e.exp2()
}

/// Sup norms of the three pieces of `v_nu - v` split at frequency `2^-n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub n: i32,
    /// `||S_{-n}(v_nu - v)||`.
    pub low: f64,
    /// `||(Id - S_{-n})(v_nu - S_n v)||`.
    pub mid: f64,
    /// `||(Id - S_{-n})(S_n v - v)||`.
    pub tail: f64,
    /// `||v_nu - v||`.
    pub total: f64,
}

impl ErrorDecomposition {
    pub fn satisfies_triangle(&self) -> bool {
        self.total <= self.low + self.mid + self.tail + 1e-12
    }
}

pub fn three_term_split(v_nu: &VectorField, v: &VectorField, n: i32) -> Result<ErrorDecomposition> {
    v_nu.grid().ensure_same(v.grid())?;
    let p = DyadicPartition::shared(v.grid());
    let diff = v_nu.axpy(-1.0, v)?;
    let v_n = v.try_map(|c| p.low_pass(c, n))?;
    let high = |f: &VectorField| -> Result<f64> {
        let low = f.try_map(|c| p.low_pass(c, -n))?;
        Ok(f.axpy(-1.0, &low)?.sup_norm())
    };
    Ok(ErrorDecomposition {
        n,
        low: diff.try_map(|c| p.low_pass(c, -n))?.sup_norm(),
        mid: high(&v_nu.axpy(-1.0, &v_n)?)?,
        tail: high(&v_n.axpy(-1.0, v)?)?,
        total: diff.sup_norm(),
    })
}

/// `P div(v (x) v)`, dealiased.
fn projected_flux(v: &VectorField) -> Result<VectorField> {
    let [a, b] = v.components();
    let aa = product(a, a)?;
    let ab = product(a, b)?;
    let bb = product(b, b)?;
    let f1 = &partial(&aa, 0) + &partial(&ab, 1);
    let f2 = &partial(&ab, 0) + &partial(&bb, 1);
    Ok(helmholtz_project(&VectorField::new(f1, f2)?))
}

/// `||S_{-n} P div(v (x) v)|| <= C 2^-n ||v||^2`.
pub fn low_frequency_audit(v: &VectorField, n: i32, ceiling: f64) -> Result<InequalityAudit> {
    let p = DyadicPartition::shared(v.grid());
    let lhs = projected_flux(v)?.try_map(|c| p.low_pass(c, -n))?.sup_norm();
    let sup = v.sup_norm();
    Ok(InequalityAudit::new(
        format!("low_frequency[n={n}]"),
        lhs,
        [term("scaled_energy", pow2(-n as f64) * sup * sup)],
        ceiling,
    ))
}

/// `||e^{t nu Lap} u - u|| <= C (||u|| e^{-delta^2 / 4 nu t} + delta^alpha ||u||_{C^alpha})`.
pub fn gauss_lemma_audit(
    u: &SpectralField,
    t: f64,
    nu: f64,
    delta: f64,
    alpha: f64,
    ceiling: f64,
) -> Result<InequalityAudit> {
    if !(t > 0.0 && nu > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t, nu and delta must be positive (t={t}, nu={nu}, delta={delta})"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let p = DyadicPartition::shared(u.grid());
    let lhs = (&heat_semigroup(u, t, nu)? - u).sup_norm();
    let tail = u.sup_norm() * (-delta * delta / (4.0 * nu * t)).exp();
    let holder = delta.powf(alpha) * p.zygmund_norm(u, alpha)?;
    Ok(InequalityAudit::new("gauss", lhs, [term("tail", tail), term("holder", holder)], ceiling).at_time(t))
}

/// Worst block of `||Delta_dot_j grad v|| <= C ||Delta_dot_j omega||`.
///
/// Both sides use the sup over the whole torus, so the constant does not
/// depend on where the collocation points happen to fall.
pub fn cz_audit(omega: &SpectralField, ceiling: f64) -> Result<InequalityAudit> {
    omega.ensure_mean_free()?;
    let p = DyadicPartition::shared(omega.grid());
    let v = biot_savart(omega)?;
    let mut blocks = Vec::new();
    for j in p.active_blocks() {
        let w = sup_norm_refined(&p.homo_block(omega, j)?);
        let mut grad = 0.0f64;
        for c in v.components() {
            for d in gradient(&p.homo_block(c, j)?).components() {
                grad = grad.max(sup_norm_refined(d));
            }
        }
        blocks.push((j, grad, w));
    }
    let scale = blocks.iter().map(|b| b.2).fold(0.0, f64::max);
    let worst = blocks
        .iter()
        .filter(|b| b.2 > 1e-12 * scale)
        .max_by(|a, b| (a.1 / a.2).total_cmp(&(b.1 / b.2)));
    Ok(match worst {
        Some(&(j, grad, w)) => {
            InequalityAudit::new(format!("cz[j={j}]"), grad, [term("vorticity_block", w)], ceiling)
        }
        None => InequalityAudit::new("cz", 0.0, [term("vorticity_block", 0.0)], ceiling),
    })
}

/// Worst time of `||v(t)||_{C^1_*} <= C ||v0|| e^{t ||omega0||} + C ||omega0||`.
pub fn c1_norm_audit(traj: &Trajectory, ceiling: f64) -> Result<InequalityAudit> {
    c1_norm_audit_monitors(traj.monitors(), ceiling)
}

pub fn c1_norm_audit_monitors(monitors: &[Monitor], ceiling: f64) -> Result<InequalityAudit> {
    let key = MonitorNorm::VelocityZygmund(1.0).key();
    let first = monitors.first().ok_or_else(|| Error::MissingMonitor(key.clone()))?;
    let mut worst: Option<InequalityAudit> = None;
    for m in monitors {
        let lhs = *m.norms.get(&key).ok_or_else(|| Error::MissingMonitor(key.clone()))?;
        let growth = first.sup_v * (m.t * first.sup_omega).exp();
        let audit = InequalityAudit::new(
            "c1",
            lhs,
            [term("growth", growth), term("vorticity", first.sup_omega)],
            ceiling,
        )
        .at_time(m.t);
        if worst.as_ref().is_none_or(|w| audit.implied_constant > w.implied_constant) {
            worst = Some(audit);
        }
    }
    Ok(worst.expect("at least one monitor"))
}

/// `sup_j 2^-j ||[Delta_dot_j, v . grad] w||`.
pub fn commutator_sup(v: &VectorField, w: &SpectralField) -> Result<f64> {
    let p = DyadicPartition::shared(w.grid());
    let mut worst = 0.0f64;
    for j in p.active_blocks() {
        worst = worst.max(pow2(-j as f64) * commutator_value(&p, j, v, w)?.sup_norm());
    }
    Ok(worst)
}

/// `sup_j 2^-j ||[Delta_dot_j, S_n v . grad] w_bar|| <= C (2^{-n alpha} + n ||w_bar||_{B^-1})`.
pub fn commutator_lemma_audit(
    v_state: &FlowState,
    omega_bar: &SpectralField,
    n: i32,
    alpha: f64,
    ceiling: f64,
) -> Result<InequalityAudit> {
    commutator_lemma_audit_fields(v_state.velocity(), omega_bar, n, alpha, ceiling)
}

pub fn commutator_lemma_audit_fields(
    v: &VectorField,
    omega_bar: &SpectralField,
    n: i32,
    alpha: f64,
    ceiling: f64,
) -> Result<InequalityAudit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    v.grid().ensure_same(omega_bar.grid())?;
    let p = DyadicPartition::shared(v.grid());
    let v_n = v.try_map(|c| p.low_pass(c, n))?;
    let lhs = commutator_sup(&v_n, omega_bar)?;
    let besov = n as f64 * p.besov_norm(omega_bar, BesovSpec::sup(-1.0))?;
    Ok(InequalityAudit::new(
        format!("commutator[n={n}]"),
        lhs,
        [term("decay", pow2(-n as f64 * alpha)), term("besov", besov)],
        ceiling,
    ))
}

/// The five right-side quantities of the localized error estimate:
/// `initial`, `advect`, `visc`, `tau` and `comm`.
pub fn key_lemma_terms(v_nu_state: &FlowState, v_state: &FlowState, n: i32) -> Result<BTreeMap<String, f64>> {
    v_nu_state.grid().ensure_same(v_state.grid())?;
    let p = DyadicPartition::shared(v_state.grid());
    let b0 = BesovSpec::sup(0.0);
    let omega = v_state.omega();
    let omega_n = p.low_pass(omega, n)?;
    let v_n = v_state.velocity().try_map(|c| p.low_pass(c, n))?;
    let omega_bar = v_nu_state.omega() - &omega_n;
    let v_bar = v_nu_state.velocity().axpy(-1.0, &v_n)?;

    let mut advect = 0.0f64;
    for c in v_bar.components() {
        let flux = product(c, v_nu_state.omega())?;
        advect = advect.max(p.besov_norm_of_fluctuation(&flux, b0)?);
    }
    let mut visc = 0.0f64;
    for c in gradient(&omega_n).components() {
        visc = visc.max(p.besov_norm(c, b0)?);
    }
    let mut tau = 0.0f64;
    for c in low_pass_remainder_tau(&p, v_state.velocity(), omega, n)?.components() {
        tau = tau.max(p.besov_norm_of_fluctuation(c, b0)?);
    }
    Ok(BTreeMap::from([
        ("initial".to_string(), p.besov_norm(&omega_bar, BesovSpec::sup(-1.0))?),
        ("advect".to_string(), advect),
        ("visc".to_string(), v_nu_state.nu() * visc),
        ("tau".to_string(), tau),
        ("comm".to_string(), commutator_sup(&v_n, &omega_bar)?),
    ]))
}

/// Both sides of `||f||_{B^0_{inf,inf}} <= C ||f||_inf` for a mean-removed `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingCheck {
    pub besov: f64,
    pub sup: f64,
}

impl EmbeddingCheck {
    pub fn ratio(&self) -> f64 {
        if self.sup == 0.0 {
            0.0
        } else {
            self.besov / self.sup
        }
    }
}

/// Embedding check for the product `v_bar . omega_nu` of the error estimate,
/// componentwise maximum on both sides.
pub fn advect_embedding(v_bar: &VectorField, omega_nu: &SpectralField) -> Result<EmbeddingCheck> {
    let p = DyadicPartition::shared(omega_nu.grid());
    let mut out = EmbeddingCheck { besov: 0.0, sup: 0.0 };
    for c in v_bar.components() {
        let flux = product(c, omega_nu)?.without_mean();
        out.besov = out.besov.max(p.besov_norm(&flux, BesovSpec::sup(0.0))?);
        out.sup = out.sup.max(flux.sup_norm());
    }
    Ok(out)
}

/// Right side of the vanishing-viscosity estimate,
/// `C (T+1) e^{C1 T} nu^{alpha/2} exp(C (e^{C1 T} - 1))^{-log2(nu)/2}`.
pub fn theorem_bound(nu: f64, t: f64, alpha: f64, c: f64, c1: f64) -> f64 {
    let growth = (c1 * t).exp();
    let n = -0.5 * nu.log2();
    c * (t + 1.0) * growth * nu.powf(alpha / 2.0) * (c * (growth - 1.0) * n).exp()
}

/// Measured error over the bound for each successful record, in record order.
pub fn theorem_bound_evaluator(sweep: &SweepResult, alpha: f64, c: f64, c1: f64) -> Vec<f64> {
    sweep
        .successful()
        .map(|(nu, error)| error / theorem_bound(nu, sweep.t_end, alpha, c, c1))
        .collect()
}

/// Smallest `C` (to relative precision `1e-12`) for which every ratio is at most one.
pub fn fit_theorem_constant(sweep: &SweepResult, alpha: f64, c1: f64) -> f64 {
    let ok = |c: f64| theorem_bound_evaluator(sweep, alpha, c, c1).iter().all(|r| *r <= 1.0);
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
