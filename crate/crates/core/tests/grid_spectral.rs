mod common;

use std::f64::consts::PI;

use common::*;
use gchlab_core::corpus::{random_bandlimited, random_decaying};
use gchlab_core::grid::*;
use proptest::prelude::*;

fn grid(l: f64, n: usize) -> Grid1D {
    Grid1D::new(l, n).unwrap()
}

#[test]
fn grid_invariants() {
    for &n in &[16, 64, 1024, 4096] {
        let g = grid(40.0, n);
        assert_eq!(g.dx() * n as f64, 2.0 * 40.0);
        let k = g.wavenumbers();
        for j in 1..n / 2 {
            assert_eq!(k[j], -k[n - j]);
        }
        assert_eq!(k[n / 2], -PI * (n / 2) as f64 / 40.0);
    }
    assert!(Grid1D::new(1.0, 8).is_err());
    assert!(Grid1D::new(1.0, 48).is_err());
    assert!(Grid1D::new(0.0, 64).is_err());
    assert!(RealField::new(grid(1.0, 16), vec![0.0; 15]).is_err());
}

#[test]
fn pure_cosine_has_one_coefficient_pair() {
    let g = grid(2.5, 64);
    let f = RealField::from_fn(g, |x| (PI * x / 2.5).cos());
    let spec = to_spectral(&f);
    for (j, c) in spec.coeffs().iter().enumerate() {
        if j == 1 || j == 63 {
            assert!((c.norm() - 0.5).abs() < 1e-14);
        } else {
            assert!(c.norm() < 1e-14, "slot {j}: {c}");
        }
    }
}

#[test]
fn zero_field_has_zero_coefficients() {
    let spec = to_spectral(&RealField::zeros(grid(1.0, 32)));
    assert!(spec.coeffs().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn transform_matches_naive_dft_and_round_trips() {
    let g = grid(3.0, 64);
    let f = random_bandlimited(g, 31, 11).map(|v| v + 0.3 * v * v);
    let spec = to_spectral(&f);
    let naive = naive_dft(f.samples());
    for (c, (re, im)) in spec.coeffs().iter().zip(naive) {
        assert!((c.re - re).abs() < 1e-14 && (c.im - im).abs() < 1e-14);
    }
    let back = to_physical(&spec);
    assert!(max_abs_diff(back.samples(), f.samples()) <= 1e-13 * f.max_abs());
}

#[test]
fn parseval_relation() {
    let g = grid(5.0, 256);
    let f = random_bandlimited(g, 60, 3);
    let lhs = l2_norm(&f).powi(2);
    let rhs = g.length() * to_spectral(&f).coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs);
}

#[test]
fn derivative_of_sine() {
    let l = 3.0;
    let g = grid(l, 128);
    let k = PI * 4.0 / l;
    let f = RealField::from_fn(g, |x| (k * x).sin());
    let d = derivative(&f, 1).unwrap();
    let exact = RealField::from_fn(g, |x| k * (k * x).cos());
    assert!(rel_l2(d.samples(), exact.samples()) <= 1e-10);
    let d3 = derivative(&f, 3).unwrap();
    let exact3 = RealField::from_fn(g, |x| -k * k * k * (k * x).cos());
    assert!(rel_l2(d3.samples(), exact3.samples()) <= 1e-10);
    assert!(derivative(&f, 0).is_err());
    assert!(derivative(&f, 4).is_err());
}

#[test]
fn derivative_of_constant_vanishes() {
    let f = RealField::from_fn(grid(2.0, 64), |_| 4.2);
    for order in 1..=3 {
        assert!(derivative(&f, order).unwrap().max_abs() < 1e-13);
    }
}

#[test]
fn second_derivative_matches_finite_differences_at_second_order() {
    let mut errors = Vec::new();
    for &n in &[256, 512, 1024] {
        let g = grid(10.0, n);
        let f = RealField::from_fn(g, |x| (-x * x).exp());
        let d2 = derivative(&f, 2).unwrap();
        let s = f.samples();
        let h = g.dx();
        let fd: Vec<f64> =
            (0..n).map(|i| (s[(i + 1) % n] - 2.0 * s[i] + s[(i + n - 1) % n]) / (h * h)).collect();
        errors.push(max_abs_diff(&fd, d2.samples()));
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn odd_derivatives_zero_the_nyquist_mode() {
    let g = grid(1.0, 32);
    let f = RealField::from_fn(g, |x| (PI * 16.0 * x).cos());
    assert!(derivative(&f, 1).unwrap().max_abs() < 1e-12);
    assert!(derivative(&f, 2).unwrap().max_abs() > 1.0);
}

#[test]
fn helmholtz_inverse_eigenfunctions() {
    let l = 4.0;
    let g = grid(l, 128);
    let k = PI * 3.0 / l;
    let f = RealField::from_fn(g, |x| (k * x).cos());
    let h = helmholtz_inverse(&f);
    let exact = f.scale(1.0 / (1.0 + k * k));
    assert!(max_abs_diff(h.samples(), exact.samples()) < 1e-14);
    let c = RealField::from_fn(g, |_| 2.5);
    assert!(max_abs_diff(helmholtz_inverse(&c).samples(), c.samples()) < 1e-14);
}

#[test]
fn helmholtz_inverse_undoes_one_minus_dxx() {
    let g = grid(6.0, 512);
    let f = random_bandlimited(g, 100, 5);
    let round = helmholtz_inverse(&helmholtz_forward(&f));
    assert!(rel_l2(round.samples(), f.samples()) <= 1e-10);
}

#[test]
fn green_convolution_of_zero_and_cosine() {
    let g = grid(2.0, 128);
    assert_eq!(green_convolve(&RealField::zeros(g)).max_abs(), 0.0);
    let k = PI * 2.0 / 2.0;
    let f = RealField::from_fn(g, |x| (k * x).cos());
    let conv = green_convolve(&f);
    let exact = f.scale(1.0 / (1.0 + k * k));
    assert!(max_abs_diff(conv.samples(), exact.samples()) < 1e-10);
}

#[test]
fn green_convolution_agrees_with_spectral_inverse_on_bandlimited_fields() {
    for seed in 0..5 {
        let g = grid(3.0, 256);
        let f = random_bandlimited(g, 12, seed);
        let a = green_convolve(&f);
        let b = helmholtz_inverse(&f);
        let err = rel_l2(a.samples(), b.samples());
        assert!(err <= 1e-8, "seed {seed}: {err:e}");
    }
}

#[test]
fn green_convolution_agrees_with_spectral_inverse_on_decaying_fields() {
    for seed in 0..5 {
        let g = grid(40.0, 2048);
        let f = random_decaying(g, 4, seed);
        assert!(domain_pollution(&f) < 1e-12);
        let err = rel_l2(green_convolve(&f).samples(), helmholtz_inverse(&f).samples());
        assert!(err <= 1e-8, "seed {seed}: {err:e}");
    }
}

#[test]
fn narrow_gaussian_inverts_to_the_kernel_shape() {
    let g = grid(40.0, 4096);
    let sigma = 4.0 * g.dx();
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let f = RealField::from_fn(g, |x| norm * (-x * x / (2.0 * sigma * sigma)).exp());
    let h = helmholtz_inverse(&f);
    let kernel = RealField::from_fn(g, |x| periodized_kernel(x, 40.0));
    // Unit-mass source: the response is the kernel smoothed over the source
    // width, so the mismatch is of order sigma.
    assert!(rel_l2(h.samples(), kernel.samples()) < 3e-2);
    // Endpoint corrections on a source four cells wide cannot resolve it;
    // the measured agreement is 1.6e-7, well short of round-off.
    let err = rel_l2(green_convolve(&f).samples(), h.samples());
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn sobolev_norm_of_single_mode() {
    let g = grid(PI, 64);
    for &k in &[1.0, 3.0, 7.0] {
        let f = RealField::from_fn(g, |x| (k * x).sin());
        for &s in &[-2.0, 0.0, 0.5, 1.0, 1.5, 3.0] {
            let exact = (PI * (1.0 + k * k).powf(s)).sqrt();
            assert!((sobolev_norm(&f, s) - exact).abs() <= 1e-12 * exact, "k={k} s={s}");
        }
    }
}

#[test]
fn sobolev_zero_equals_l2_exactly() {
    let f = random_bandlimited(grid(2.0, 128), 20, 9);
    assert_eq!(sobolev_norm(&f, 0.0), lp_norm(&f, 2.0).unwrap());
}

#[test]
fn peakon_h1_norm_matches_branch_quadrature() {
    let g = grid(40.0, 4096);
    let u = RealField::from_fn(g, |x| peakon_profile(1.0, x));
    let dens = |x: f64| peakon_profile(1.0, x).powi(2) + peakon_profile_dx(1.0, x).powi(2);
    let exact = (adaptive_simpson(&dens, -40.0, 0.0, 1e-14) + adaptive_simpson(&dens, 0.0, 40.0, 1e-14)).sqrt();
    let grid_norm = sobolev_norm(&u, 1.0);
    assert!((grid_norm - exact).abs() <= 1e-6 * exact, "{grid_norm} vs {exact}");
    // The frequency-side oracle agrees with the physical-side one.
    assert!((peakon_sobolev_norm(1.0) - exact).abs() <= 1e-10 * exact);
}

#[test]
fn lp_norms() {
    let g = grid(5.0, 512);
    let bump = RealField::from_fn(g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 });
    assert_eq!(lp_norm(&bump, f64::INFINITY).unwrap(), 1.0);
    let one = RealField::from_fn(g, |_| 1.0);
    for &p in &[1.0, 1.5, 2.0, 3.0, 7.0] {
        let v = lp_norm(&one, p).unwrap();
        assert!((v - 10f64.powf(1.0 / p)).abs() < 1e-12);
    }
    assert!(lp_norm(&one, 0.5).is_err());
    assert!(lp_norm(&one, f64::NAN).is_err());
}

#[test]
fn gaussian_lp_norms_match_analytic_integrals() {
    // For a Gaussian the Riemann sum is spectrally accurate, well inside O(dx^2).
    let g = grid(10.0, 256);
    let f = RealField::from_fn(g, |x| (-x * x).exp());
    let l1 = lp_norm(&f, 1.0).unwrap();
    assert!((l1 - PI.sqrt()).abs() < g.dx().powi(2));
    let l2 = lp_norm(&f, 2.0).unwrap();
    assert!((l2 - (PI / 2.0).powf(0.25)).abs() < g.dx().powi(2));
}

#[test]
fn domain_pollution_check() {
    let g = grid(10.0, 256);
    let wide = RealField::from_fn(g, |x| (-x * x / 8.0).exp());
    assert!(check_domain(&wide).is_err());
    let narrow = RealField::from_fn(g, |x| (-x * x).exp());
    assert!(check_domain(&narrow).is_ok());
    assert_eq!(domain_pollution(&RealField::zeros(g)), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_is_exact_for_any_samples(
        exp in 4u32..11,
        samples in proptest::collection::vec(-1e3f64..1e3, 1024),
    ) {
        let n = 1usize << exp;
        let f = RealField::new(grid(1.7, n), samples[..n].to_vec()).unwrap();
        let back = to_physical(&to_spectral(&f));
        prop_assert!(max_abs_diff(back.samples(), f.samples()) <= 1e-12 * f.max_abs().max(1e-300));
    }

    #[test]
    fn real_fields_have_hermitian_spectra(seed in 0u64..1000) {
        let f = random_bandlimited(grid(2.0, 128), 40, seed);
        let spec = to_spectral(&f);
        prop_assert!(spec.hermitian_defect() < 1e-14);
    }

    #[test]
    fn parseval_for_random_fields(seed in 0u64..1000, exp in 4u32..10) {
        let g = grid(1.3, 1 << exp);
        let f = random_bandlimited(g, (1 << exp) / 2 - 1, seed);
        let lhs = l2_norm(&f).powi(2);
        let rhs = g.length() * to_spectral(&f).coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }
}
