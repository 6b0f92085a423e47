//! Periodic grid, Fourier transforms, differential operators, the Biot-Savart
//! law and 2/3-rule dealiasing.
//!
//! Fields live on the square torus `[0, L)^2` sampled at `N x N` points.
//! Samples and coefficients share the row-major layout `index = iy * N + ix`,
//! so the first axis of a wavevector `(k1, k2)` pairs with `ix` and the second
//! with `iy`. The forward transform carries the `1/N^2` factor, which makes
//! the coefficient of `cos(x)` at `k = (+-1, 0)` equal to `1/2`.
//!
//! Odd-order derivative multipliers vanish on the Nyquist line `|m_i| = N/2`,
//! where `+N/2` and `-N/2` share one storage slot and `i k` has no real-valued
//! meaning. Fields that stay below the dealiasing cutoff never see this.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

struct Lattice {
    n: usize,
    box_length: f64,
    /// Signed integer mode per axis position.
    modes: Vec<i64>,
    /// Physical wavenumber `2 pi m / L` per axis position.
    wavenumbers: Vec<f64>,
    /// Same, with the Nyquist slot zeroed for odd-order derivatives.
    odd_wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    refined: OnceLock<Grid>,
}

/// Uniform periodic grid of `n_points x n_points` samples on `[0, box_length)^2`.
///
/// Cloning is cheap; the FFT plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Lattice>,
}

impl Grid {
    pub fn new(n_points: usize, box_length: f64) -> Result<Self> {
        if n_points < 8 {
            return Err(Error::GridTooSmall(n_points));
        }
        if !n_points.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(n_points));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidBoxLength(box_length));
        }
        let half = (n_points / 2) as i64;
        let modes: Vec<i64> = (0..n_points as i64)
            .map(|i| if i < half { i } else { i - n_points as i64 })
            .collect();
        let fundamental = 2.0 * PI / box_length;
        let wavenumbers: Vec<f64> = modes.iter().map(|&m| fundamental * m as f64).collect();
        let odd_wavenumbers = modes
            .iter()
            .zip(&wavenumbers)
            .map(|(&m, &k)| if m == -half { 0.0 } else { k })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Grid {
            inner: Arc::new(Lattice {
                n: n_points,
                box_length,
                modes,
                wavenumbers,
                odd_wavenumbers,
                forward,
                inverse,
                refined: OnceLock::new(),
            }),
        })
    }

    /// Grid on the standard `2 pi` box, where lattice and physical frequencies coincide.
    pub fn periodic(n_points: usize) -> Result<Self> {
        Grid::new(n_points, 2.0 * PI)
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    /// Number of samples, `n_points^2`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    /// Smallest positive lattice frequency `2 pi / L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    /// Largest lattice frequency magnitude (the corner mode).
    pub fn max_frequency(&self) -> f64 {
        let half = (self.inner.n / 2) as f64;
        self.fundamental() * half * 2f64.sqrt()
    }

    /// Highest integer mode kept by the 2/3 rule, `floor(N/3)`.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.inner.n / 3) as i64
    }

    /// Sample coordinates of flat index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.inner.n;
        let h = self.spacing();
        ((idx % n) as f64 * h, (idx / n) as f64 * h)
    }

    /// Integer mode pair `(m1, m2)` stored at flat index `idx`.
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let n = self.inner.n;
        (self.inner.modes[idx % n], self.inner.modes[idx / n])
    }

    /// Physical wavevector stored at flat index `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let n = self.inner.n;
        (self.inner.wavenumbers[idx % n], self.inner.wavenumbers[idx / n])
    }

    /// Wavevector used by odd-order derivatives (zero on the Nyquist line).
    pub fn odd_wavevector(&self, idx: usize) -> (f64, f64) {
        let n = self.inner.n;
        (
            self.inner.odd_wavenumbers[idx % n],
            self.inner.odd_wavenumbers[idx / n],
        )
    }

    pub fn frequency_magnitude(&self, idx: usize) -> f64 {
        let (k1, k2) = self.wavevector(idx);
        k1.hypot(k2)
    }

    /// Flat index holding integer mode `(m1, m2)`; modes wrap modulo `N`.
    pub fn index_of(&self, m1: i64, m2: i64) -> usize {
        let n = self.inner.n as i64;
        (m2.rem_euclid(n) * n + m1.rem_euclid(n)) as usize
    }

    /// Whether the mode at `idx` survives the 2/3 rule.
    pub fn is_retained(&self, idx: usize) -> bool {
        let (m1, m2) = self.mode(idx);
        let cutoff = self.dealias_cutoff();
        m1.abs() <= cutoff && m2.abs() <= cutoff
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.box_length == other.inner.box_length)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    /// The grid with twice the resolution on the same box, shared across clones.
    pub fn refined(&self) -> &Grid {
        self.inner
            .refined
            .get_or_init(|| Grid::new(2 * self.inner.n, self.inner.box_length).expect("refined grid"))
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.inner.n;
        let fft = if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .finish()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} on L={}", self.inner.n, self.inner.n, self.inner.box_length)
    }
}

/// Fourier coefficients of a scalar field on a [`Grid`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
            hermitian: true,
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut field = SpectralField::zeros(grid);
        field.coeffs[0] = Complex64::new(value, 0.0);
        field
    }

    /// Samples `f(x, y)` on the grid and transforms.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.point(idx);
                f(x, y)
            })
            .collect();
        SpectralField::from_real_samples(grid, samples)
    }

    /// Builds a real field from `(m1, m2, c)` triples; each entry also sets its
    /// conjugate partner at `(-m1, -m2)`.
    pub fn from_modes(grid: &Grid, modes: &[(i64, i64, Complex64)]) -> Self {
        let mut field = SpectralField::zeros(grid);
        for &(m1, m2, c) in modes {
            let idx = grid.index_of(m1, m2);
            let mirror = grid.index_of(-m1, -m2);
            if idx == mirror {
                field.coeffs[idx] += Complex64::new(c.re, 0.0);
            } else {
                field.coeffs[idx] += c;
                field.coeffs[mirror] += c.conj();
            }
        }
        field
    }

    /// Wraps raw coefficients; the Hermitian flag is detected.
    pub fn from_coefficients(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SampleCountMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        let mut field = SpectralField {
            grid: grid.clone(),
            coeffs,
            hermitian: false,
        };
        field.hermitian = field.hermitian_defect() <= 1e-12 * field.max_abs_coefficient().max(f64::MIN_POSITIVE);
        Ok(field)
    }

    pub(crate) fn from_raw(grid: &Grid, coeffs: Vec<Complex64>, hermitian: bool) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField {
            grid: grid.clone(),
            coeffs,
            hermitian,
        }
    }

    pub(crate) fn from_real_samples(grid: &Grid, samples: Vec<f64>) -> Self {
        let mut data: Vec<Complex64> = samples.into_iter().map(|s| Complex64::new(s, 0.0)).collect();
        grid.fft2(&mut data, false);
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        SpectralField::from_raw(grid, data, true)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of integer mode `(m1, m2)`.
    pub fn coefficient(&self, m1: i64, m2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(m1, m2)]
    }

    /// True when the field represents a real function.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Largest `|F(-k) - conj F(k)|` over the lattice (Nyquist slots excluded).
    pub fn hermitian_defect(&self) -> f64 {
        let half = (self.grid.n_points() / 2) as i64;
        let mut worst = 0.0f64;
        for idx in 0..self.coeffs.len() {
            let (m1, m2) = self.grid.mode(idx);
            if m1 == -half || m2 == -half {
                continue;
            }
            let mirror = self.grid.index_of(-m1, -m2);
            worst = worst.max((self.coeffs[mirror] - self.coeffs[idx].conj()).norm());
        }
        worst
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Real-space samples (real part of the inverse transform).
    pub fn to_samples(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        self.grid.fft2(&mut data, true);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Maximum absolute value over the collocation points.
    pub fn sup_norm(&self) -> f64 {
        self.to_samples().into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    /// Whether every mode outside the 2/3-rule cutoff is at roundoff level
    /// (`1e-13` relative to the largest coefficient).
    pub fn is_band_limited(&self) -> bool {
        let floor = 1e-13 * self.max_abs_coefficient();
        self.coeffs
            .iter()
            .enumerate()
            .all(|(idx, c)| self.grid.is_retained(idx) || c.norm() <= floor)
    }

    /// Multiplies each coefficient by a real symbol of the physical wavevector.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k1, k2) = self.grid.wavevector(idx);
                c * symbol(k1, k2)
            })
            .collect();
        SpectralField::from_raw(&self.grid, coeffs, self.hermitian)
    }

    /// Multiplies by a precomputed table of real multipliers (one per flat index).
    pub fn apply_table(&self, table: &[f64]) -> Self {
        debug_assert_eq!(table.len(), self.coeffs.len());
        let coeffs = self.coeffs.iter().zip(table).map(|(c, m)| c * m).collect();
        SpectralField::from_raw(&self.grid, coeffs, self.hermitian)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        SpectralField::from_raw(&self.grid, coeffs, self.hermitian)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * factor)
            .collect();
        Ok(SpectralField::from_raw(
            &self.grid,
            coeffs,
            self.hermitian && other.hermitian,
        ))
    }

    /// Same field with the zero mode removed.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = ZERO;
        out
    }

    /// Errors with [`Error::NonZeroMean`] unless `|mean| <= 1e-12 sup|F|`.
    pub fn ensure_mean_free(&self) -> Result<()> {
        let mean = self.coeffs[0].norm();
        if mean == 0.0 {
            return Ok(());
        }
        // sup|F| >= max |F(k)|, so this bound settles most calls without a transform.
        if mean <= 1e-12 * self.max_abs_coefficient() {
            return Ok(());
        }
        let sup = self.sup_norm();
        if mean <= 1e-12 * sup {
            Ok(())
        } else {
            Err(Error::NonZeroMean {
                mean: self.coeffs[0].re,
                sup,
            })
        }
    }

    /// Spectral interpolation onto another grid over the same box.
    ///
    /// Modes shared by both lattices are copied; the target Nyquist line is
    /// left empty so the result stays real.
    pub fn resample(&self, target: &Grid) -> Result<Self> {
        if self.grid.box_length() != target.box_length() {
            return Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: target.to_string(),
            });
        }
        let src_half = (self.grid.n_points() / 2) as i64;
        let dst_half = (target.n_points() / 2) as i64;
        let limit = src_half.min(dst_half);
        let mut out = SpectralField::zeros(target);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (m1, m2) = self.grid.mode(idx);
            if m1.abs() < limit && m2.abs() < limit {
                out.coeffs[target.index_of(m1, m2)] = *c;
            }
        }
        out.hermitian = self.hermitian;
        Ok(out)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("grid mismatch in field addition")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs).expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

/// A pair of scalar fields `(u1, u2)` on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: [SpectralField; 2],
}

impl VectorField {
    pub fn new(u1: SpectralField, u2: SpectralField) -> Result<Self> {
        u1.grid.ensure_same(&u2.grid)?;
        Ok(VectorField { components: [u1, u2] })
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            components: [SpectralField::zeros(grid), SpectralField::zeros(grid)],
        }
    }

    pub fn constant(grid: &Grid, c1: f64, c2: f64) -> Self {
        VectorField {
            components: [SpectralField::constant(grid, c1), SpectralField::constant(grid, c2)],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn u1(&self) -> &SpectralField {
        &self.components[0]
    }

    pub fn u2(&self) -> &SpectralField {
        &self.components[1]
    }

    pub fn components(&self) -> &[SpectralField; 2] {
        &self.components
    }

    /// Componentwise maximum of the collocation sup norms.
    pub fn sup_norm(&self) -> f64 {
        self.components[0].sup_norm().max(self.components[1].sup_norm())
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        VectorField {
            components: [f(&self.components[0]), f(&self.components[1])],
        }
    }

    pub fn try_map(&self, f: impl Fn(&SpectralField) -> Result<SpectralField>) -> Result<Self> {
        Ok(VectorField {
            components: [f(&self.components[0])?, f(&self.components[1])?],
        })
    }

    pub fn axpy(&self, factor: f64, other: &VectorField) -> Result<Self> {
        Ok(VectorField {
            components: [
                self.components[0].axpy(factor, &other.components[0])?,
                self.components[1].axpy(factor, &other.components[1])?,
            ],
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    /// `max_k |k . u(k)| / max_k |k| |u(k)|`, zero for a field without nonconstant modes.
    pub fn divergence_defect(&self) -> f64 {
        let grid = self.grid();
        let (a, b) = (&self.components[0].coeffs, &self.components[1].coeffs);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..grid.len() {
            let (k1, k2) = grid.odd_wavevector(idx);
            worst = worst.max((a[idx] * k1 + b[idx] * k2).norm());
            scale = scale.max(k1.hypot(k2) * a[idx].norm().hypot(b[idx].norm()));
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_defect() <= 1e-12
    }

    pub fn ensure_divergence_free(&self) -> Result<()> {
        let defect = self.divergence_defect();
        if defect <= 1e-12 {
            Ok(())
        } else {
            Err(Error::NotDivergenceFree(defect))
        }
    }
}

/// Forward transform of real samples laid out as `iy * N + ix`.
pub fn forward_transform(grid: &Grid, samples: &[f64]) -> Result<SpectralField> {
    if samples.len() != grid.len() {
        return Err(Error::SampleCountMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    Ok(SpectralField::from_real_samples(grid, samples.to_vec()))
}

pub fn inverse_transform(field: &SpectralField) -> Vec<f64> {
    field.to_samples()
}

/// `d/dx_axis` for `axis` in `{0, 1}`.
pub fn partial(field: &SpectralField, axis: usize) -> SpectralField {
    let grid = field.grid();
    let coeffs = field
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (k1, k2) = grid.odd_wavevector(idx);
            let k = if axis == 0 { k1 } else { k2 };
            c * Complex64::new(0.0, k)
        })
        .collect();
    SpectralField::from_raw(grid, coeffs, field.hermitian)
}

pub fn gradient(field: &SpectralField) -> VectorField {
    VectorField {
        components: [partial(field, 0), partial(field, 1)],
    }
}

/// `(-d2 F, d1 F)`.
pub fn perp_gradient(field: &SpectralField) -> VectorField {
    VectorField {
        components: [-&partial(field, 1), partial(field, 0)],
    }
}

pub fn laplacian(field: &SpectralField) -> SpectralField {
    field.apply_multiplier(|k1, k2| -(k1 * k1 + k2 * k2))
}

/// Solves `Lap u = F` for mean-free `F`; the zero mode of the result is zero.
pub fn inv_laplacian(field: &SpectralField) -> Result<SpectralField> {
    field.ensure_mean_free()?;
    Ok(field.apply_multiplier(|k1, k2| {
        let k2sum = k1 * k1 + k2 * k2;
        if k2sum == 0.0 {
            0.0
        } else {
            -1.0 / k2sum
        }
    }))
}

pub fn divergence(v: &VectorField) -> SpectralField {
    &partial(v.u1(), 0) + &partial(v.u2(), 1)
}

/// Scalar vorticity `d1 u2 - d2 u1`.
pub fn curl(v: &VectorField) -> SpectralField {
    &partial(v.u2(), 0) - &partial(v.u1(), 1)
}

/// Velocity `grad_perp Lap^{-1} omega` of a mean-free vorticity.
pub fn biot_savart(omega: &SpectralField) -> Result<VectorField> {
    omega.ensure_mean_free()?;
    let grid = omega.grid();
    let mut u1 = Vec::with_capacity(grid.len());
    let mut u2 = Vec::with_capacity(grid.len());
    for (idx, w) in omega.coeffs.iter().enumerate() {
        let (k1, k2) = grid.wavevector(idx);
        let k2sum = k1 * k1 + k2 * k2;
        if k2sum == 0.0 {
            u1.push(ZERO);
            u2.push(ZERO);
            continue;
        }
        let psi = -w / k2sum;
        let (o1, o2) = grid.odd_wavevector(idx);
        u1.push(psi * Complex64::new(0.0, -o2));
        u2.push(psi * Complex64::new(0.0, o1));
    }
    Ok(VectorField {
        components: [
            SpectralField::from_raw(grid, u1, omega.hermitian),
            SpectralField::from_raw(grid, u2, omega.hermitian),
        ],
    })
}

/// Zeroes every mode with `max(|m1|, |m2|) > N/3`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    truncate_in_place(&mut out);
    out
}

pub(crate) fn truncate_in_place(field: &mut SpectralField) {
    let grid = field.grid.clone();
    for (idx, c) in field.coeffs.iter_mut().enumerate() {
        if !grid.is_retained(idx) {
            *c = ZERO;
        }
    }
}

pub fn sup_norm(field: &SpectralField) -> f64 {
    field.sup_norm()
}

/// Transform of pointwise products of real-space samples, dealiased.
pub(crate) fn dealiased_from_samples(grid: &Grid, samples: Vec<f64>) -> SpectralField {
    let mut out = SpectralField::from_real_samples(grid, samples);
    truncate_in_place(&mut out);
    out
}

/// Dealiased product `f g`.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.grid.ensure_same(&g.grid)?;
    let a = f.to_samples();
    let b = g.to_samples();
    let samples = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(dealiased_from_samples(f.grid(), samples))
}

/// Advection `v . grad w`, optionally without the 2/3-rule truncation.
pub fn advect_with(v: &VectorField, w: &SpectralField, dealiased: bool) -> Result<SpectralField> {
    v.grid().ensure_same(w.grid())?;
    let u1 = v.u1().to_samples();
    let u2 = v.u2().to_samples();
    let d1 = partial(w, 0).to_samples();
    let d2 = partial(w, 1).to_samples();
    let samples = (0..u1.len()).map(|i| u1[i] * d1[i] + u2[i] * d2[i]).collect();
    let mut out = SpectralField::from_real_samples(w.grid(), samples);
    if dealiased {
        truncate_in_place(&mut out);
    }
    Ok(out)
}

/// Dealiased advection `v . grad w`.
pub fn advect(v: &VectorField, w: &SpectralField) -> Result<SpectralField> {
    advect_with(v, w, true)
}

/// Leray projection onto divergence-free fields, `P_ij = delta_ij - k_i k_j / |k|^2`.
pub fn helmholtz_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let (a, b) = (&v.u1().coeffs, &v.u2().coeffs);
    let mut p1 = Vec::with_capacity(grid.len());
    let mut p2 = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let (k1, k2) = grid.odd_wavevector(idx);
        let k2sum = k1 * k1 + k2 * k2;
        if k2sum == 0.0 {
            p1.push(a[idx]);
            p2.push(b[idx]);
            continue;
        }
        let dot = (a[idx] * k1 + b[idx] * k2) / k2sum;
        p1.push(a[idx] - dot * k1);
        p2.push(b[idx] - dot * k2);
    }
    let herm = v.u1().hermitian && v.u2().hermitian;
    VectorField {
        components: [
            SpectralField::from_raw(grid, p1, herm),
            SpectralField::from_raw(grid, p2, herm),
        ],
    }
}

/// Sup norm of the trigonometric interpolant, not just its grid samples.
///
/// The interpolant is sampled on the doubled grid, every local extremum within
/// 20% of the largest sample is polished by Newton iteration on the exact
/// trigonometric sum, and the best value is returned. Used where the
/// `O((k h)^2)` sampling bias of [`sup_norm`] would swamp a tolerance.
pub fn sup_norm_refined(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let modes: Vec<(f64, f64, Complex64)> = field
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != ZERO)
        .map(|(idx, c)| {
            let (k1, k2) = grid.wavevector(idx);
            (k1, k2, *c)
        })
        .collect();
    if modes.is_empty() {
        return 0.0;
    }
    let fine = grid.refined();
    let fine_field = field.resample_exact(fine);
    let samples = fine_field.to_samples();
    let m = fine.n_points();
    let peak = samples.iter().map(|s| s.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for iy in 0..m {
        for ix in 0..m {
            let idx = iy * m + ix;
            let value = samples[idx].abs();
            if value < 0.8 * peak {
                continue;
            }
            let is_max = (-1i64..=1).all(|dy| {
                (-1i64..=1).all(|dx| {
                    let jx = (ix as i64 + dx).rem_euclid(m as i64) as usize;
                    let jy = (iy as i64 + dy).rem_euclid(m as i64) as usize;
                    samples[jy * m + jx].abs() <= value
                })
            });
            if is_max {
                candidates.push((value, idx));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    candidates.truncate(64);

    let h = fine.spacing();
    let mut best = peak;
    for &(_, idx) in &candidates {
        let (x0, y0) = fine.point(idx);
        best = best.max(polish_extremum(&modes, x0, y0, h));
    }
    best
}

impl SpectralField {
    /// Zero-pads onto a finer grid, keeping the coefficient at `-N/2` as is.
    fn resample_exact(&self, target: &Grid) -> SpectralField {
        let mut out = SpectralField::zeros(target);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (m1, m2) = self.grid.mode(idx);
            out.coeffs[target.index_of(m1, m2)] = *c;
        }
        out.hermitian = self.hermitian;
        out
    }
}

/// Value, gradient and Hessian of `Re sum c e^{i k.x}` at a point.
fn evaluate_jet(modes: &[(f64, f64, Complex64)], x: f64, y: f64) -> (f64, [f64; 2], [f64; 3]) {
    let mut f = 0.0;
    let mut g = [0.0; 2];
    let mut hess = [0.0; 3];
    for &(k1, k2, c) in modes {
        let z = c * Complex64::cis(k1 * x + k2 * y);
        // d/dx of Re(z) = Re(i k z) = -k Im(z); second derivative = -k k' Re(z).
        f += z.re;
        g[0] -= k1 * z.im;
        g[1] -= k2 * z.im;
        hess[0] -= k1 * k1 * z.re;
        hess[1] -= k1 * k2 * z.re;
        hess[2] -= k2 * k2 * z.re;
    }
    (f, g, hess)
}

/// Newton step towards a maximum, restricted to directions of strictly
/// negative curvature; `None` if the Hessian has a positive direction.
fn concave_newton_step(g: [f64; 2], hs: [f64; 3]) -> Option<(f64, f64)> {
    let (a, b, c) = (hs[0], hs[1], hs[2]);
    let scale = a.abs() + b.abs() + c.abs();
    if scale == 0.0 {
        return None;
    }
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let eigen = [mean + radius, mean - radius];
    let mut step = (0.0, 0.0);
    for lambda in eigen {
        // Eigenvector of [[a, b], [b, c]] for lambda.
        let (ex, ey) = if b.abs() > 1e-300 {
            (lambda - c, b)
        } else if (lambda - a).abs() <= (lambda - c).abs() {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let norm = ex.hypot(ey);
        let (ex, ey) = (ex / norm, ey / norm);
        if lambda > 1e-12 * scale {
            return None;
        }
        if lambda < -1e-12 * scale {
            let t = -(g[0] * ex + g[1] * ey) / lambda;
            step.0 += t * ex;
            step.1 += t * ey;
        }
    }
    Some(step)
}

fn polish_extremum(modes: &[(f64, f64, Complex64)], x0: f64, y0: f64, h: f64) -> f64 {
    let (mut x, mut y) = (x0, y0);
    let (f0, _, _) = evaluate_jet(modes, x, y);
    let sign = if f0 >= 0.0 { 1.0 } else { -1.0 };
    let mut best = f0.abs();
    for _ in 0..30 {
        let (f, g, hs) = evaluate_jet(modes, x, y);
        let (f, g, hs) = (sign * f, [sign * g[0], sign * g[1]], [sign * hs[0], sign * hs[1], sign * hs[2]]);
        best = best.max(f);
        let Some((mut dx, mut dy)) = concave_newton_step(g, hs) else {
            break;
        };
        let len = dx.hypot(dy);
        if len > h {
            dx *= h / len;
            dy *= h / len;
        }
        if len < 1e-15 * (1.0 + x.abs() + y.abs()) {
            break;
        }
        let (trial, _, _) = evaluate_jet(modes, x + dx, y + dy);
        if sign * trial < f {
            break;
        }
        x += dx;
        y += dy;
    }
    best
}
