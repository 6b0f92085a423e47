//! Bony paraproducts, frequency-localized commutators and the mollifier
//! remainders `tau_n`, `r_n`.
//!
//! With inhomogeneous blocks `Delta_i` (`i >= -1`),
//!
//! ```text
//! T_f g  = sum_{j >= 1} S_{j-1} f  Delta_j g,
//! R(f,g) = sum_{|i-j| <= 1} Delta_i f Delta_j g,
//! f g    = T_f g + T_g f + R(f, g).
//! ```
//!
//! All products are formed pointwise on the grid and truncated by the 2/3
//! rule, so each piece is the exact truncation of its continuous counterpart
//! for band-limited inputs and the decomposition identity survives intact.

use crate::error::Result;
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::{
    advect, dealiased_from_samples, divergence, partial, product, SpectralField, VectorField,
};

/// `f g = t_fg + t_gf + remainder`.
#[derive(Clone, Debug)]
pub struct BonyDecomposition {
    pub t_fg: SpectralField,
    pub t_gf: SpectralField,
    pub remainder: SpectralField,
}

impl BonyDecomposition {
    pub fn sum(&self) -> SpectralField {
        &(&self.t_fg + &self.t_gf) + &self.remainder
    }
}

/// Real-space inhomogeneous blocks `Delta_{-1} f, Delta_0 f, ..., Delta_{j_max} f`.
fn real_blocks(p: &DyadicPartition, f: &SpectralField) -> Result<Vec<Vec<f64>>> {
    p.inhom_blocks().map(|j| Ok(p.inhom_block(f, j)?.to_samples())).collect()
}

fn paraproduct_samples(f_blocks: &[Vec<f64>], g_blocks: &[Vec<f64>]) -> Vec<f64> {
    let len = f_blocks[0].len();
    let mut out = vec![0.0; len];
    // low holds S_{j-1} f = sum_{i <= j-2} Delta_i f; slot k stores Delta_{k-1}.
    let mut low = f_blocks[0].clone();
    for slot in 2..g_blocks.len() {
        for ((o, l), g) in out.iter_mut().zip(&low).zip(&g_blocks[slot]) {
            *o += l * g;
        }
        for (l, f) in low.iter_mut().zip(&f_blocks[slot - 1]) {
            *l += f;
        }
    }
    out
}

fn remainder_samples(f_blocks: &[Vec<f64>], g_blocks: &[Vec<f64>]) -> Vec<f64> {
    let len = f_blocks[0].len();
    let count = f_blocks.len();
    let mut out = vec![0.0; len];
    for i in 0..count {
        let (a, b) = (&f_blocks[i], &g_blocks[i]);
        if i + 1 < count {
            let (a1, b1) = (&f_blocks[i + 1], &g_blocks[i + 1]);
            for x in 0..len {
                // Written so that swapping f and g reproduces every rounding step.
                out[x] += a[x] * b[x] + (a[x] * b1[x] + a1[x] * b[x]);
            }
        } else {
            for x in 0..len {
                out[x] += a[x] * b[x];
            }
        }
    }
    out
}

/// Paraproduct `T_f g`.
pub fn paraproduct(p: &DyadicPartition, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let fb = real_blocks(p, f)?;
    let gb = real_blocks(p, g)?;
    Ok(dealiased_from_samples(p.grid(), paraproduct_samples(&fb, &gb)))
}

/// Diagonal remainder `R(f, g)`; symmetric in its arguments bit for bit.
pub fn remainder(p: &DyadicPartition, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let fb = real_blocks(p, f)?;
    let gb = real_blocks(p, g)?;
    Ok(dealiased_from_samples(p.grid(), remainder_samples(&fb, &gb)))
}

pub fn bony_decompose(p: &DyadicPartition, f: &SpectralField, g: &SpectralField) -> Result<BonyDecomposition> {
    let fb = real_blocks(p, f)?;
    let gb = real_blocks(p, g)?;
    let grid = p.grid();
    Ok(BonyDecomposition {
        t_fg: dealiased_from_samples(grid, paraproduct_samples(&fb, &gb)),
        t_gf: dealiased_from_samples(grid, paraproduct_samples(&gb, &fb)),
        remainder: dealiased_from_samples(grid, remainder_samples(&fb, &gb)),
    })
}

/// `[Delta_dot_j, v . grad] w` and its paraproduct split.
#[derive(Clone, Debug)]
pub struct CommutatorReport {
    pub j: i32,
    pub value: SpectralField,
    /// `sum_m [Delta_dot_j, T_{v^m} d_m] w`.
    pub paraproduct: SpectralField,
    /// `sum_m [Delta_dot_j, T_{d_m .} v^m] w`, low-frequency factor `d_m w`.
    pub transposed: SpectralField,
    /// `sum_m [Delta_dot_j, R(v^m, d_m .)] w`.
    pub remainder: SpectralField,
}

impl CommutatorReport {
    pub fn split_sum(&self) -> SpectralField {
        &(&self.paraproduct + &self.transposed) + &self.remainder
    }
}

/// The three Bony pieces of `v . grad w`, each summed over components.
fn advection_pieces(
    p: &DyadicPartition,
    v_blocks: &[Vec<Vec<f64>>; 2],
    w: &SpectralField,
) -> Result<[SpectralField; 3]> {
    let len = p.grid().len();
    let mut pieces = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for (m, vb) in v_blocks.iter().enumerate() {
        let db = real_blocks(p, &partial(w, m))?;
        for (piece, samples) in pieces.iter_mut().zip([
            paraproduct_samples(vb, &db),
            paraproduct_samples(&db, vb),
            remainder_samples(vb, &db),
        ]) {
            piece.iter_mut().zip(samples).for_each(|(a, b)| *a += b);
        }
    }
    let [a, b, c] = pieces;
    let grid = p.grid();
    Ok([
        dealiased_from_samples(grid, a),
        dealiased_from_samples(grid, b),
        dealiased_from_samples(grid, c),
    ])
}

/// `Delta_dot_j (v . grad w) - v . grad (Delta_dot_j w)` without the split.
pub fn commutator_value(p: &DyadicPartition, j: i32, v: &VectorField, w: &SpectralField) -> Result<SpectralField> {
    let outer = p.homo_block(&advect(v, w)?, j)?;
    let inner = advect(v, &p.homo_block(w, j)?)?;
    Ok(&outer - &inner)
}

pub fn commutator_block(p: &DyadicPartition, j: i32, v: &VectorField, w: &SpectralField) -> Result<CommutatorReport> {
    v.ensure_divergence_free()?;
    let value = commutator_value(p, j, v, w)?;
    let v_blocks = [real_blocks(p, v.u1())?, real_blocks(p, v.u2())?];
    let whole = advection_pieces(p, &v_blocks, w)?;
    let local = advection_pieces(p, &v_blocks, &p.homo_block(w, j)?)?;
    let mut split = Vec::with_capacity(3);
    for (a, b) in whole.iter().zip(&local) {
        split.push(&p.homo_block(a, j)? - b);
    }
    let remainder = split.pop().unwrap();
    let transposed = split.pop().unwrap();
    let paraproduct = split.pop().unwrap();
    Ok(CommutatorReport {
        j,
        value,
        paraproduct,
        transposed,
        remainder,
    })
}

/// `tau_n(v, w) = S_n(v w) - (S_n v)(S_n w)`, per velocity component.
///
/// Expanding the mollifier integral with `S_n h = psi_n^ * h` and
/// `int psi^ = 1` gives `r_n = S_n(v w) - w S_n v - v S_n w + v w`; subtracting
/// `(v - v_n)(w - w_n)` cancels every cross term.
pub fn low_pass_remainder_tau(
    p: &DyadicPartition,
    v: &VectorField,
    omega: &SpectralField,
    n: i32,
) -> Result<VectorField> {
    let omega_n = p.low_pass(omega, n)?;
    v.try_map(|vm| {
        let filtered = p.low_pass(&product(vm, omega)?, n)?;
        let low = product(&p.low_pass(vm, n)?, &omega_n)?;
        Ok(&filtered - &low)
    })
}

/// `r_n(v, w) = tau_n + (v - v_n)(w - w_n)`.
pub fn mollifier_remainder_r(
    p: &DyadicPartition,
    v: &VectorField,
    omega: &SpectralField,
    n: i32,
) -> Result<VectorField> {
    let tau = low_pass_remainder_tau(p, v, omega, n)?;
    let omega_high = omega - &p.low_pass(omega, n)?;
    let components = [0, 1].map(|m| -> Result<SpectralField> {
        let vm = &v.components()[m];
        let high = vm - &p.low_pass(vm, n)?;
        Ok(&tau.components()[m] + &product(&high, &omega_high)?)
    });
    let [a, b] = components;
    VectorField::new(a?, b?)
}

/// Residual of the frequency-localized Euler vorticity equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizedResidual {
    /// Sup norm of left side minus right side.
    pub residual: f64,
    /// Sup norm of the unlocalized tendency `v . grad w`. Blocks where every
    /// term vanishes are measured against this rather than against roundoff.
    pub scale: f64,
}

impl LocalizedResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Checks `d_t Dj w_n + v_n . grad Dj w_n + [Dj, v_n . grad] w_n = -div Dj tau_n(v, w)`
/// with `d_t w = -v . grad w` substituted.
pub fn localized_vorticity_residual(
    p: &DyadicPartition,
    v: &VectorField,
    omega: &SpectralField,
    n: i32,
    j: i32,
) -> Result<LocalizedResidual> {
    v.ensure_divergence_free()?;
    let v_n = v.try_map(|c| p.low_pass(c, n))?;
    let omega_n = p.low_pass(omega, n)?;
    let tendency = -&advect(v, omega)?;
    let scale = tendency.sup_norm();
    let time_term = p.homo_block(&p.low_pass(&tendency, n)?, j)?;
    let transport = advect(&v_n, &p.homo_block(&omega_n, j)?)?;
    let commutator = commutator_value(p, j, &v_n, &omega_n)?;
    let tau = low_pass_remainder_tau(p, v, omega, n)?;
    let flux = -&p.homo_block(&divergence(&tau), j)?;
    let lhs = &(&time_term + &transport) + &commutator;
    let residual = (&lhs - &flux).sup_norm();
    Ok(LocalizedResidual { residual, scale })
}
