mod common;

use common::{naive_dft, r_n_by_quadrature, random_field};
use num_complex::Complex64;
use proptest::prelude::*;
use vvlab::diagnostics::{cz_audit, gauss_lemma_audit, three_term_split};
use vvlab::littlewood_paley::{cutoff, BesovSpec, DyadicPartition};
use vvlab::paraproduct::{
    bony_decompose, commutator_block, localized_vorticity_residual, low_pass_remainder_tau, mollifier_remainder_r,
    paraproduct, remainder,
};
use vvlab::solver::heat_semigroup;
use vvlab::spectral::{
    biot_savart, curl, dealias, divergence, gradient, helmholtz_project, inv_laplacian, laplacian, product,
    Grid, SpectralField, VectorField,
};

fn grid(n: usize) -> Grid {
    Grid::periodic(n).unwrap()
}

#[test]
fn transform_matches_direct_sum() {
    let g = grid(8);
    let f = SpectralField::from_fn(&g, |x, y| (x + 2.0 * y).sin() + 0.25 * (3.0 * x).cos() - 0.1);
    let samples = f.to_samples();
    for m2 in -4..4 {
        for m1 in -4..4 {
            let direct = naive_dft(8, &samples, m1, m2);
            assert!((f.coefficient(m1, m2) - direct).norm() < 1e-15, "({m1},{m2})");
        }
    }
}

#[test]
fn inverse_laplacian_closed_form() {
    let g = grid(32);
    let f = SpectralField::from_fn(&g, |x, y| (2.0 * x + 3.0 * y).cos());
    let expect = f.scale(-1.0 / 13.0);
    assert!((&inv_laplacian(&f).unwrap() - &expect).sup_norm() < 1e-15);
}

#[test]
fn nyquist_derivative_is_zero() {
    let g = grid(8);
    let nyq = SpectralField::from_modes(&g, &[(-4, 0, Complex64::new(1.0, 0.0))]);
    assert_eq!(gradient(&nyq).sup_norm(), 0.0);
}

#[test]
fn tau_definition_with_partial_mask() {
    // psi_0 keeps the mode |k| = 1 with weight chi(1) and kills |k| = 2.
    let g = grid(16);
    let p = DyadicPartition::build(&g);
    let c = cutoff(1.0);
    let w = SpectralField::from_fn(&g, |x, _| x.cos());
    let v = VectorField::new(w.clone(), SpectralField::zeros(&g)).unwrap();
    let tau = low_pass_remainder_tau(&p, &v, &w, 0).unwrap();
    // S_0(cos^2) = 1/2, (S_0 cos)^2 = c^2 (1 + cos 2x) / 2.
    let expect = SpectralField::from_fn(&g, |x, _| 0.5 - c * c * (1.0 + (2.0 * x).cos()) / 2.0);
    assert!((tau.u1() - &expect).sup_norm() < 1e-15);
}

#[test]
fn r_n_matches_quadrature() {
    let box_length = 2.0 * std::f64::consts::PI;
    let v1 = |x: f64, y: f64| 0.7 * x.cos() - 0.3 * (x + y).sin() + 0.2 * y.sin();
    let v2 = |x: f64, y: f64| 0.4 * (x - y).cos() + 0.5 * y.cos();
    let w = |x: f64, y: f64| x.sin() + 0.6 * (x + y).cos() - 0.8 * (x - y).sin();
    let g = grid(16);
    let p = DyadicPartition::build(&g);
    let v = VectorField::new(SpectralField::from_fn(&g, v1), SpectralField::from_fn(&g, v2)).unwrap();
    let omega = SpectralField::from_fn(&g, w);
    for n in [-1, 0, 1] {
        let r = mollifier_remainder_r(&p, &v, &omega, n).unwrap();
        let (r1, r2) = (r.u1().to_samples(), r.u2().to_samples());
        for iy in (0..16).step_by(2) {
            for ix in (0..16).step_by(2) {
                let x = g.point(iy * 16 + ix);
                let q1 = r_n_by_quadrature(8, box_length, n, v1, w, x);
                let q2 = r_n_by_quadrature(8, box_length, n, v2, w, x);
                assert!((r1[iy * 16 + ix] - q1).abs() < 1e-13, "n={n}: {} vs {q1}", r1[iy * 16 + ix]);
                assert!((r2[iy * 16 + ix] - q2).abs() < 1e-13, "n={n}");
            }
        }
    }
}

#[test]
fn heat_semigroup_contracts_sup_norm() {
    let g = grid(32);
    for seed in 0..100 {
        let f = random_field(&g, 8, seed);
        let t = 0.01 + (seed % 7) as f64 * 0.1;
        let out = heat_semigroup(&f, t, 0.3).unwrap();
        assert!(out.sup_norm() <= f.sup_norm() * (1.0 + 1e-12), "seed {seed}");
    }
}

#[test]
fn gauss_lhs_grows_with_diffusion_time() {
    let g = grid(32);
    let u = SpectralField::from_fn(&g, |x, y| (2.0 * x + y).cos());
    let mut last = 0.0;
    for step in 1..20 {
        let t = step as f64 * 0.05;
        let a = gauss_lemma_audit(&u, t, 0.1, 0.5, 0.9, 2.0).unwrap();
        assert!(a.lhs >= last);
        last = a.lhs;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bony_identity_and_symmetry(seed_f in any::<u64>(), seed_g in any::<u64>()) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let f = random_field(&g, 8, seed_f);
        let h = random_field(&g, 8, seed_g);
        let d = bony_decompose(&p, &f, &h).unwrap();
        let direct = product(&f, &h).unwrap();
        prop_assert!((&d.sum() - &direct).sup_norm() <= 1e-13 * direct.sup_norm().max(1.0));
        let (rfh, rhf) = (remainder(&p, &f, &h).unwrap(), remainder(&p, &h, &f).unwrap());
        prop_assert_eq!(rfh.coefficients(), rhf.coefficients());
        let t = paraproduct(&p, &f, &h).unwrap();
        prop_assert_eq!(t.coefficients(), d.t_fg.coefficients());
    }

    #[test]
    fn blocks_reconstruct(seed in any::<u64>(), n in -1i32..4) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let f = random_field(&g, 10, seed);
        let mut total = p.low_pass(&f, n).unwrap();
        for j in n..=p.j_max() {
            total = &total + &p.homo_block(&f, j).unwrap();
        }
        prop_assert!((&total - &f).sup_norm() < 1e-13);
    }

    #[test]
    fn biot_savart_inverts_curl(seed in any::<u64>()) {
        let g = grid(32);
        let w = random_field(&g, 8, seed);
        let v = biot_savart(&w).unwrap();
        prop_assert!(v.is_divergence_free());
        prop_assert!((&curl(&v) - &w).sup_norm() < 1e-12);
        prop_assert!((&laplacian(&inv_laplacian(&w).unwrap()) - &w).sup_norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let g = grid(32);
        let v = VectorField::new(random_field(&g, 8, seed_a), random_field(&g, 8, seed_b)).unwrap();
        let once = helmholtz_project(&v);
        let twice = helmholtz_project(&once);
        prop_assert!(twice.axpy(-1.0, &once).unwrap().sup_norm() < 1e-12);
        prop_assert!(divergence(&once).sup_norm() < 1e-12);
        let grad = gradient(&random_field(&g, 8, seed_a ^ 1));
        prop_assert!(helmholtz_project(&grad).sup_norm() < 1e-12);
    }

    #[test]
    fn dealiased_product_is_exact_for_band_limited(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let g = grid(32);
        let a = random_field(&g, 5, seed_a);
        let b = random_field(&g, 5, seed_b);
        let fine = g.refined();
        let exact = product(&a.resample(fine).unwrap(), &b.resample(fine).unwrap()).unwrap().resample(&g).unwrap();
        prop_assert!((&product(&a, &b).unwrap() - &exact).sup_norm() < 1e-13);
        prop_assert!((&dealias(&a) - &a).sup_norm() == 0.0);
    }

    #[test]
    fn commutator_split_sums(seed in any::<u64>(), j in 0i32..4) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let w = random_field(&g, 8, seed);
        let v = biot_savart(&random_field(&g, 6, seed ^ 7)).unwrap();
        let c = commutator_block(&p, j, &v, &w).unwrap();
        prop_assert!((&c.split_sum() - &c.value).sup_norm() < 1e-12);
    }

    #[test]
    fn localized_equation_holds_for_euler_data(seed in any::<u64>(), n in -1i32..4, j in -1i32..4) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let w = random_field(&g, 8, seed);
        let v = biot_savart(&w).unwrap();
        let r = localized_vorticity_residual(&p, &v, &w, n, j).unwrap();
        prop_assert!(r.relative() < 1e-13, "{r:?}");
    }

    #[test]
    fn operators_are_linear_and_real(seed_a in any::<u64>(), seed_b in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let f = random_field(&g, 8, seed_a);
        let h = random_field(&g, 8, seed_b);
        let mix = &f.scale(a) + &h.scale(b);
        type Op<'a> = Box<dyn Fn(&SpectralField) -> SpectralField + 'a>;
        let ops: Vec<Op> = vec![
            Box::new(|x| gradient(x).u1().clone()),
            Box::new(|x| gradient(x).u2().clone()),
            Box::new(laplacian),
            Box::new(|x| inv_laplacian(x).unwrap()),
            Box::new(|x| biot_savart(x).unwrap().u1().clone()),
            Box::new(|x| heat_semigroup(x, 0.3, 0.1).unwrap()),
            Box::new(|x| p.homo_block(x, 2).unwrap()),
            Box::new(|x| p.low_pass(x, 1).unwrap()),
            Box::new(dealias),
        ];
        for op in &ops {
            let lhs = op(&mix);
            let rhs = &op(&f).scale(a) + &op(&h).scale(b);
            prop_assert!((&lhs - &rhs).sup_norm() <= 1e-12 * (1.0 + lhs.sup_norm()));
            prop_assert!(lhs.is_hermitian());
        }
        prop_assert!(product(&f, &h).unwrap().is_hermitian());
    }

    #[test]
    fn block_derivatives_obey_bernstein(seed in any::<u64>(), band in 2i64..20) {
        let g = grid(64);
        let p = DyadicPartition::shared(&g);
        let f = random_field(&g, band, seed);
        for j in p.active_blocks() {
            let block = p.homo_block(&f, j).unwrap();
            let scaled = (j as f64).exp2() * block.sup_norm();
            let grad = gradient(&block).sup_norm();
            prop_assert!(grad <= 8.0 / 3.0 * scaled + 1e-10);
            if scaled > 1e-12 {
                prop_assert!(grad >= 0.5 * scaled, "j={j}: {grad} vs {scaled}");
            }
        }
    }

    #[test]
    fn cz_constant_is_scale_and_resolution_invariant(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let g = grid(32);
        let w = random_field(&g, 8, seed);
        let base = cz_audit(&w, 10.0).unwrap();
        let scaled = cz_audit(&w.scale(scale), 10.0).unwrap();
        prop_assert!((base.implied_constant - scaled.implied_constant).abs() < 1e-12);
        let fine = cz_audit(&w.resample(g.refined()).unwrap(), 10.0).unwrap();
        prop_assert!((base.implied_constant - fine.implied_constant).abs() < 1e-12);
        prop_assert!(base.pass);
    }

    #[test]
    fn three_term_triangle(seed_a in any::<u64>(), seed_b in any::<u64>(), n in 0i32..4) {
        let g = grid(32);
        let a = biot_savart(&random_field(&g, 8, seed_a)).unwrap();
        let b = biot_savart(&random_field(&g, 8, seed_b)).unwrap();
        let d = three_term_split(&a, &b, n).unwrap();
        prop_assert!(d.satisfies_triangle());
    }

    #[test]
    fn besov_norm_scales_linearly(seed in any::<u64>(), s in -1.0f64..1.0, c in -5.0f64..5.0) {
        let g = grid(32);
        let p = DyadicPartition::shared(&g);
        let f = random_field(&g, 8, seed);
        let spec = BesovSpec::sup(s);
        let a = p.besov_norm(&f, spec).unwrap();
        let b = p.besov_norm(&f.scale(c), spec).unwrap();
        prop_assert!((b - c.abs() * a).abs() <= 1e-12 * a.max(1.0));
    }
}
