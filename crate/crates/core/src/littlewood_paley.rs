//! Dyadic Fourier-multiplier calculus on the periodic lattice.
//!
//! The annulus profile is built from an infinitely smooth step
//!
//! ```text
//! chi(r) = g((4/3 - r) / (4/3 - 3/4)),   g(t) = f(t) / (f(t) + f(1 - t)),
//! f(t)   = exp(-1/t) for t > 0, else 0,
//! ```
//!
//! which equals 1 on `r <= 3/4` and 0 on `r >= 4/3`. The block profile
//! `phi(xi) = chi(|xi|/2) - chi(|xi|)` is then supported in `[3/4, 8/3]`, the
//! dyadic sum telescopes, and the low-pass symbol has the closed form
//! `psi_n(xi) = 1 - sum_{j >= n} phi(2^-j xi) = chi(2^-n |xi|)`.
//!
//! On a band-limited lattice only finitely many blocks are nonzero, so every
//! `sup_{j in Z}` below is an exact finite maximum over
//! [`DyadicPartition::active_blocks`].

use std::collections::HashMap;
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex, OnceLock};

use crate::audit::{term, InequalityAudit};
use crate::error::{Error, Result};
use crate::spectral::{gradient, Grid, SpectralField};

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth transition from 0 (`t <= 0`) to 1 (`t >= 1`).
pub fn smooth_step(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    a / (a + b)
}

/// Radial cutoff `chi`: 1 on `[0, 3/4]`, 0 on `[4/3, inf)`.
pub fn cutoff(r: f64) -> f64 {
    smooth_step((4.0 / 3.0 - r) / (4.0 / 3.0 - 3.0 / 4.0))
}

/// Annulus profile `phi(r) = chi(r/2) - chi(r)`, supported in `[3/4, 8/3]`.
pub fn annulus_profile(r: f64) -> f64 {
    cutoff(r / 2.0) - cutoff(r)
}

fn pow2(j: i32) -> f64 {
    2f64.powi(j)
}

/// Regularity and integrability indices of a Besov norm.
///
/// Only `p = q = infinity` is implemented, which covers `B^s_{inf,inf}` and the
/// Zygmund scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovSpec {
    s: f64,
}

impl BesovSpec {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if p != f64::INFINITY || q != f64::INFINITY {
            return Err(Error::InvalidParameter(format!(
                "only p = q = infinity Besov norms are implemented (got p = {p}, q = {q})"
            )));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("regularity index must be finite, got {s}")));
        }
        Ok(BesovSpec { s })
    }

    /// `B^s_{inf,inf}`.
    pub fn sup(s: f64) -> Self {
        BesovSpec { s }
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// The partition of unity tabulated on one grid's frequency lattice.
#[derive(Debug)]
pub struct DyadicPartition {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    magnitudes: Vec<f64>,
    /// `phi(2^-j xi)` for `j = j_min ..= j_max`.
    blocks: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn build(grid: &Grid) -> Self {
        let max_freq = grid.max_frequency();
        let min_freq = grid.fundamental();
        let mut j_max = 0i32;
        while pow2(j_max + 1) * 0.75 <= max_freq {
            j_max += 1;
        }
        while pow2(j_max) * 0.75 > max_freq {
            j_max -= 1;
        }
        let mut j_min = 0i32;
        while pow2(j_min - 1) * (8.0 / 3.0) >= min_freq {
            j_min -= 1;
        }
        while pow2(j_min) * (8.0 / 3.0) < min_freq {
            j_min += 1;
        }
        let magnitudes: Vec<f64> = (0..grid.len()).map(|idx| grid.frequency_magnitude(idx)).collect();
        let blocks = (j_min..=j_max)
            .map(|j| {
                let scale = pow2(-j);
                magnitudes.iter().map(|&r| annulus_profile(scale * r)).collect()
            })
            .collect();
        DyadicPartition {
            grid: grid.clone(),
            j_min,
            j_max,
            magnitudes,
            blocks,
        }
    }

    /// Process-wide cached partition for `grid`.
    pub fn shared(grid: &Grid) -> Arc<DyadicPartition> {
        type Cache = Mutex<HashMap<(usize, u64), Arc<DyadicPartition>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (grid.n_points(), grid.box_length().to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("partition cache poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(DyadicPartition::build(grid)))
            .clone()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Homogeneous block indices that can be nonzero on this lattice.
    pub fn active_blocks(&self) -> RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// Inhomogeneous block indices that can be nonzero (`-1 ..= j_max`).
    pub fn inhom_blocks(&self) -> RangeInclusive<i32> {
        -1..=self.j_max.max(-1)
    }

    /// Table of `phi(2^-j xi)` over the lattice; `None` when the block vanishes identically.
    pub fn block_multiplier(&self, j: i32) -> Option<&[f64]> {
        if (self.j_min..=self.j_max).contains(&j) {
            Some(&self.blocks[(j - self.j_min) as usize])
        } else {
            None
        }
    }

    /// Table of `psi_n(xi) = chi(2^-n |xi|)`.
    pub fn low_pass_multiplier(&self, n: i32) -> Vec<f64> {
        let scale = pow2(-n);
        self.magnitudes.iter().map(|&r| cutoff(scale * r)).collect()
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if self.grid.same_as(f.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: f.grid().to_string(),
            })
        }
    }

    /// Homogeneous block `Delta_dot_j F`.
    pub fn homo_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check(f)?;
        Ok(match self.block_multiplier(j) {
            Some(table) => f.apply_table(table),
            None => SpectralField::zeros(&self.grid),
        })
    }

    /// Inhomogeneous block `Delta_j F`: zero below `-1`, `S_0 F` at `-1`,
    /// the homogeneous block above.
    pub fn inhom_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check(f)?;
        match j {
            j if j < -1 => Ok(SpectralField::zeros(&self.grid)),
            -1 => Ok(f.apply_table(&self.low_pass_multiplier(0))),
            j => self.homo_block(f, j),
        }
    }

    /// Low-pass `S_n F`.
    pub fn low_pass(&self, f: &SpectralField, n: i32) -> Result<SpectralField> {
        self.check(f)?;
        Ok(f.apply_table(&self.low_pass_multiplier(n)))
    }

    fn block_sup(&self, f: &SpectralField, j: i32) -> Result<f64> {
        let block = self.homo_block(f, j)?;
        if block.max_abs_coefficient() == 0.0 {
            return Ok(0.0);
        }
        Ok(block.sup_norm())
    }

    /// `sup_j 2^{js} ||Delta_dot_j F||_inf`.
    ///
    /// Homogeneous blocks cannot see the zero mode, so for `s <= 0` a field
    /// with nonzero mean is rejected instead of silently measured.
    pub fn besov_norm(&self, f: &SpectralField, spec: BesovSpec) -> Result<f64> {
        self.check(f)?;
        if spec.s <= 0.0 {
            f.ensure_mean_free()?;
        }
        let mut norm = 0.0f64;
        for j in self.active_blocks() {
            norm = norm.max(pow2(j).powf(spec.s) * self.block_sup(f, j)?);
        }
        Ok(norm)
    }

    /// Besov norm of `F - mean(F)`, for products whose mean is irrelevant.
    pub fn besov_norm_of_fluctuation(&self, f: &SpectralField, spec: BesovSpec) -> Result<f64> {
        self.besov_norm(&f.without_mean(), spec)
    }

    /// Zygmund norm `sup_{j >= -1} 2^{js} ||Delta_j F||_inf`.
    pub fn zygmund_norm(&self, f: &SpectralField, s: f64) -> Result<f64> {
        self.check(f)?;
        let mut norm = 0.0f64;
        for j in self.inhom_blocks() {
            let block = self.inhom_block(f, j)?;
            if block.max_abs_coefficient() == 0.0 {
                continue;
            }
            norm = norm.max(pow2(j).powf(s) * block.sup_norm());
        }
        Ok(norm)
    }

    /// Bernstein ratio `||grad Delta_dot_j F|| / (2^j ||Delta_dot_j F||)`, checked
    /// against `[1/constant, constant]`.
    pub fn bernstein_audit(&self, f: &SpectralField, j: i32, constant: f64) -> Result<InequalityAudit> {
        let block = self.homo_block(f, j)?;
        let block_sup = block.sup_norm();
        if block_sup < 1e-14 {
            return Err(Error::DegenerateBlock(j));
        }
        let lhs = gradient(&block).sup_norm();
        Ok(InequalityAudit::new(
            format!("bernstein[j={j}]"),
            lhs,
            [term("scaled_block", pow2(j) * block_sup)],
            constant,
        )
        .with_floor(1.0 / constant))
    }
}

pub fn build_partition(grid: &Grid) -> DyadicPartition {
    DyadicPartition::build(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn partition(n: usize) -> DyadicPartition {
        DyadicPartition::build(&Grid::periodic(n).unwrap())
    }

    #[test]
    fn cutoff_plateaus() {
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(0.75), 1.0);
        assert_eq!(cutoff(1.5), 0.0);
        assert_eq!(cutoff(4.0 / 3.0), 0.0);
        assert!(cutoff(1.0) > 0.0 && cutoff(1.0) < 1.0);
        assert_eq!(annulus_profile(0.7), 0.0);
        assert_eq!(annulus_profile(2.7), 0.0);
    }

    #[test]
    fn block_range_for_standard_grid() {
        let p = partition(64);
        // Frequencies run from 1 to 32 sqrt 2 ~ 45.3.
        assert_eq!(p.j_min(), -1);
        assert_eq!(p.j_max(), 5);
        for j in p.active_blocks() {
            let table = p.block_multiplier(j).unwrap();
            assert!(table.iter().any(|&m| m > 0.0), "block {j} empty");
        }
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let p = partition(32);
        for n in [-3, -1, 0, 1, 2, 3, 4] {
            let psi = p.low_pass_multiplier(n);
            for idx in 1..p.grid().len() {
                let sum: f64 = (n.max(p.j_min())..=p.j_max())
                    .map(|j| p.block_multiplier(j).unwrap()[idx])
                    .sum();
                assert!((psi[idx] + sum - 1.0).abs() < 1e-12, "n={n} idx={idx}");
            }
        }
    }

    #[test]
    fn distant_blocks_have_disjoint_support() {
        let p = partition(64);
        for j in p.active_blocks() {
            for jj in p.active_blocks().filter(|&jj| (jj - j).abs() >= 2) {
                let a = p.block_multiplier(j).unwrap();
                let b = p.block_multiplier(jj).unwrap();
                assert!(a.iter().zip(b).all(|(x, y)| x * y == 0.0));
            }
        }
    }

    #[test]
    fn constant_field_blocks() {
        let p = partition(16);
        let c = SpectralField::constant(p.grid(), 2.5);
        for j in -4..6 {
            assert_eq!(p.homo_block(&c, j).unwrap().max_abs_coefficient(), 0.0);
        }
        let low = p.low_pass(&c, 0).unwrap();
        assert_eq!(low.coefficient(0, 0).re, 2.5);
        assert!((p.zygmund_norm(&c, 0.7).unwrap() - 2f64.powf(-0.7) * 2.5).abs() < 1e-15);
        assert!(matches!(
            p.besov_norm(&c, BesovSpec::sup(0.0)),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn single_mode_blocks_sum_back() {
        let p = partition(32);
        let f = SpectralField::from_fn(p.grid(), |x, _| (3.0 * x).cos());
        let mut total = SpectralField::zeros(p.grid());
        for j in p.active_blocks() {
            let block = p.homo_block(&f, j).unwrap();
            let expect = f.scale(annulus_profile(3.0 * pow2(-j)));
            assert!((&block - &expect).sup_norm() < 1e-14);
            total = &total + &block;
        }
        assert!((&total - &f).sup_norm() < 1e-14);
    }

    #[test]
    fn inhomogeneous_blocks() {
        let p = partition(16);
        let f = SpectralField::from_modes(p.grid(), &[(1, 0, Complex64::new(0.5, 0.0))]);
        assert_eq!(p.inhom_block(&f, -2).unwrap().max_abs_coefficient(), 0.0);
        let low = p.inhom_block(&f, -1).unwrap();
        assert!((low.coefficient(1, 0).re - 0.5 * cutoff(1.0)).abs() < 1e-16);
        let b0 = p.inhom_block(&f, 0).unwrap();
        assert_eq!(b0.coefficients(), p.homo_block(&f, 0).unwrap().coefficients());
    }

    #[test]
    fn besov_spec_validation() {
        assert!(BesovSpec::new(0.5, f64::INFINITY, f64::INFINITY).is_ok());
        assert!(BesovSpec::new(0.5, 2.0, f64::INFINITY).is_err());
        assert!(BesovSpec::new(0.5, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn bernstein_single_mode_ratio_is_one() {
        let p = partition(64);
        for j in 2..=4 {
            let k = pow2(j);
            let f = SpectralField::from_fn(p.grid(), |x, _| (k * x).cos());
            let audit = p.bernstein_audit(&f, j, 4.0).unwrap();
            assert!((audit.implied_constant - 1.0).abs() < 1e-13, "j={j}: {}", audit.implied_constant);
            assert!(audit.pass);
        }
    }

    #[test]
    fn bernstein_zero_field_is_degenerate() {
        let p = partition(32);
        let z = SpectralField::zeros(p.grid());
        assert!(matches!(p.bernstein_audit(&z, 2, 4.0), Err(Error::DegenerateBlock(2))));
    }
}
