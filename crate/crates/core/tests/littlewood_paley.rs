mod common;

use std::f64::consts::PI;

use common::*;
use gchlab_core::corpus::{random_bandlimited, random_decaying};
use gchlab_core::grid::{l2_norm, sobolev_norm, to_spectral, Grid1D, RealField};
use gchlab_core::littlewood_paley::*;
use proptest::prelude::*;

fn grid(l: f64, n: usize) -> Grid1D {
    Grid1D::new(l, n).unwrap()
}

#[test]
fn smooth_step_is_monotone_with_exact_ends() {
    assert_eq!(smooth_step(0.0), 0.0);
    assert_eq!(smooth_step(1.0), 1.0);
    assert!((smooth_step(0.5) - 0.5).abs() < 1e-14);
    let mut prev = 0.0;
    for i in 1..200 {
        let v = smooth_step(i as f64 / 200.0);
        assert!(v >= prev && (0.0..=1.0).contains(&v));
        prev = v;
    }
    for &t in &[0.1, 0.3, 0.45] {
        assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn partition_of_unity_and_square_sum_bounds() {
    for &(l, n) in &[(PI, 64), (40.0, 4096), (2.0, 8192), (10.0, 16)] {
        let part = build_partition(grid(l, n)).unwrap();
        for v in part.partition_sum() {
            assert!((v - 1.0).abs() <= 1e-14, "partition sum {v}");
        }
        for v in part.square_sum() {
            assert!((0.5..=1.0 + 1e-15).contains(&v), "square sum {v}");
        }
    }
}

#[test]
fn supports_are_exact() {
    let g = grid(40.0, 4096);
    let part = build_partition(g).unwrap();
    let ks = g.wavenumbers();
    for (idx, &k) in ks.iter().enumerate() {
        let a = k.abs();
        if a >= 4.0 / 3.0 {
            assert_eq!(part.chi()[idx], 0.0);
        }
        for (j, block) in part.phi_blocks().iter().enumerate() {
            let lo = 0.75 * 2f64.powi(j as i32);
            let hi = 8.0 / 3.0 * 2f64.powi(j as i32);
            if a <= lo || a >= hi {
                assert_eq!(block[idx], 0.0, "block {j} at k = {k}");
            }
            assert!((0.0..=1.0).contains(&block[idx]));
        }
    }
}

#[test]
fn coarse_grid_is_rejected() {
    // Nyquist wavenumber pi * 8 / 40 = 0.63 < 3/4.
    assert!(build_partition(grid(40.0, 16)).is_err());
}

#[test]
fn cosine_two_lives_in_blocks_zero_and_one() {
    let g = grid(PI, 64);
    let part = build_partition(g).unwrap();
    let f = RealField::from_fn(g, |x| (2.0 * x).cos());
    // The multipliers vanish exactly off their supports; what remains is the
    // transform's round-off on the field itself.
    assert!(dyadic_block(&f, -1, &part).unwrap().max_abs() < 1e-15);
    for j in 0..=part.j_max() {
        let block = dyadic_block(&f, j, &part).unwrap();
        if j <= 1 {
            assert!(block.max_abs() > 1e-3, "block {j} should carry the mode");
        } else {
            assert!(block.max_abs() < 1e-15, "block {j}");
        }
    }
    assert_eq!(dyadic_block(&f, -2, &part).unwrap().max_abs(), 0.0);
    assert!(dyadic_block(&f, part.j_max() + 1, &part).is_err());
}

#[test]
fn distant_blocks_have_disjoint_supports() {
    let part = build_partition(grid(40.0, 4096)).unwrap();
    let jm = part.j_max();
    for j in -1..=jm {
        for jp in (j + 2)..=jm {
            let a = part.multiplier(j).unwrap();
            let b = part.multiplier(jp).unwrap();
            assert!(a.iter().zip(b).all(|(x, y)| x * y == 0.0), "blocks {j} and {jp} overlap");
        }
    }
}

#[test]
fn low_cutoff_limits() {
    let g = grid(20.0, 1024);
    let part = build_partition(g).unwrap();
    let f = random_decaying(g, 5, 2);
    let s0 = low_cutoff(&f, 0, &part).unwrap();
    let d = dyadic_block(&f, -1, &part).unwrap();
    assert!(max_abs_diff(s0.samples(), d.samples()) < 1e-15);
    let full = low_cutoff(&f, part.j_max() + 1, &part).unwrap();
    assert!(rel_l2(full.samples(), f.samples()) < 1e-13);
    let beyond = low_cutoff(&f, part.j_max() + 5, &part).unwrap();
    assert_eq!(beyond, full);
    assert!(low_cutoff(&f, -1, &part).is_err());
}

#[test]
fn cutoff_differences_decay_like_two_to_minus_n() {
    let g = grid(10.0, 4096);
    let part = build_partition(g).unwrap();
    let s = 1.5;
    for seed in 0..4 {
        let f = random_bandlimited(g, 600, seed);
        let norm_s = besov_norm(&f, BesovParams::new(s, 2.0, 2.0).unwrap(), &part).unwrap();
        let mut fitted: Vec<f64> = Vec::new();
        for n in 0..part.j_max() - 1 {
            for l in [1, 3] {
                let hi = low_cutoff(&f, n + l + 1, &part).unwrap();
                let lo = low_cutoff(&f, n + 1, &part).unwrap();
                let diff = hi.sub(&lo).unwrap();
                let lhs = besov_norm(&diff, BesovParams::new(s - 1.0, 2.0, 2.0).unwrap(), &part).unwrap();
                fitted.push(lhs / (2f64.powi(-n) * norm_s));
            }
        }
        // Block weights give the bound with constant 1/2 at every n.
        let c = fitted.iter().copied().fold(0.0, f64::max);
        assert!(c <= 0.5 + 1e-12, "fitted constant {c}");
    }
}

#[test]
fn reconstruction_is_exact() {
    let g = grid(7.0, 2048);
    let part = build_partition(g).unwrap();
    let f = random_bandlimited(g, 1000, 42);
    let blocks = all_blocks(&f, &part).unwrap();
    let mut sum = vec![0.0; 2048];
    for b in &blocks {
        for (s, v) in sum.iter_mut().zip(b.samples()) {
            *s += v;
        }
    }
    assert!(rel_l2(&sum, f.samples()) <= 1e-12);
    for (j, b) in (-1..).zip(&blocks) {
        let single = dyadic_block(&f, j, &part).unwrap();
        assert!(max_abs_diff(b.samples(), single.samples()) < 1e-14);
    }
}

#[test]
fn besov_of_zero_is_zero() {
    let g = grid(5.0, 256);
    let part = build_partition(g).unwrap();
    for &(s, p, r) in &[(0.0, 2.0, 2.0), (1.5, 1.0, f64::INFINITY), (-1.0, f64::INFINITY, 1.0)] {
        let v = besov_norm(&RealField::zeros(g), BesovParams::new(s, p, r).unwrap(), &part).unwrap();
        assert_eq!(v, 0.0);
    }
    assert!(BesovParams::new(0.0, 0.5, 2.0).is_err());
    assert!(BesovParams::new(0.0, 2.0, 0.0).is_err());
}

#[test]
fn single_mode_l2_ratio_is_within_partition_bounds() {
    let g = grid(PI, 1024);
    let part = build_partition(g).unwrap();
    for j in 2..400 {
        let f = RealField::from_fn(g, |x| (j as f64 * x + 0.3).cos());
        let ratio = besov_norm(&f, BesovParams::new(0.0, 2.0, 2.0).unwrap(), &part).unwrap() / l2_norm(&f);
        assert!(
            ratio >= 0.5f64.sqrt() - 1e-10 && ratio <= 1.0 + 1e-10,
            "mode {j}: ratio {ratio}"
        );
    }
}

#[test]
fn besov_22_tracks_sobolev_under_refinement() {
    for &s in &[0.5, 1.0, 1.5, 2.0] {
        let ratios: Vec<f64> = [512, 1024, 2048]
            .iter()
            .map(|&n| {
                let g = grid(20.0, n);
                let part = build_partition(g).unwrap();
                (0..6)
                    .map(|seed| {
                        let f = random_decaying(g, 3, seed);
                        besov_norm(&f, BesovParams::new(s, 2.0, 2.0).unwrap(), &part).unwrap() / sobolev_norm(&f, s)
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() <= 0.10, "s = {s}: {ratios:?}");
        }
    }
}

#[test]
fn p2_block_norms_match_riemann_sums() {
    let g = grid(5.0, 512);
    let part = build_partition(g).unwrap();
    let f = random_bandlimited(g, 200, 8);
    let spec = to_spectral(&f);
    let fast = block_l2_norms_spectral(spec.coeffs(), &part);
    let slow: Vec<f64> = all_blocks(&f, &part).unwrap().iter().map(l2_norm).collect();
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-15);
    }
}

fn band_corpus(g: Grid1D, count: u64) -> Vec<RealField> {
    (0..count).map(|seed| random_bandlimited(g, g.n_points() / 4, 1000 + seed)).collect()
}

#[test]
fn interpolation_inequality_holds_with_constant_one() {
    let g = grid(4.0, 512);
    let kind = AuditKind::Interpolation { s1: 0.0, s2: 2.0, theta: 0.5, p: 2.0, r: 2.0 };
    let report = inequality_audit(&band_corpus(g, 100), kind).unwrap();
    assert_eq!(report.ratios.len(), 100);
    assert!(report.passed);
    assert!(report.ratios.iter().all(|&q| q <= 1.0 + SHARP_SLACK));
    for &(p, r) in &[(1.0, 1.0), (f64::INFINITY, 3.0), (4.0, f64::INFINITY)] {
        let kind = AuditKind::Interpolation { s1: -0.5, s2: 1.5, theta: 0.3, p, r };
        let report = inequality_audit(&band_corpus(g, 20), kind).unwrap();
        assert!(report.passed, "p = {p}, r = {r}: {:?}", report.fitted_constant);
    }
}

fn gaussian_corpus(g: Grid1D) -> Vec<RealField> {
    [0.5, 0.8, 1.2]
        .iter()
        .map(|&w| RealField::from_fn(g, move |x| (-(x / w).powi(2)).exp()))
        .collect()
}

#[test]
fn fitted_constant_audits_are_refinement_stable() {
    let g = grid(12.0, 512);
    let kinds = [
        AuditKind::KatoPonce { s: 2.0 },
        AuditKind::Algebra { s: 1.5, p: 2.0, r: 2.0 },
        AuditKind::Morse { s: 1.5, p: 2.0, r: 2.0 },
        AuditKind::Embedding { s: 1.0, p1: 2.0, p2: f64::INFINITY, r1: 2.0, r2: 2.0 },
        AuditKind::Monotonicity { s_low: 0.5, s_high: 1.5, p: 2.0, r: 2.0 },
        AuditKind::BesovSobolev { s: 1.0 },
    ];
    for kind in kinds {
        let report = audit_with_refinement(g, gaussian_corpus, kind).unwrap();
        assert!(report.passed, "{}", report.audit_id);
        assert!(report.fitted_constant.is_finite() && report.fitted_constant > 0.0);
        assert_eq!(report.stable, Some(true), "{}: {:?}", report.audit_id, report.refinement_ratio);
    }
}

#[test]
fn audit_rejects_empty_or_mixed_corpus() {
    let kind = AuditKind::KatoPonce { s: 2.0 };
    assert!(inequality_audit(&[], kind).is_err());
    let a = RealField::zeros(grid(1.0, 64));
    let b = RealField::zeros(grid(1.0, 128));
    assert!(inequality_audit(&[a, b], kind).is_err());
}

#[test]
fn audit_report_json_fields() {
    let g = grid(12.0, 256);
    let report = inequality_audit(&gaussian_corpus(g), AuditKind::Algebra { s: 1.0, p: 2.0, r: 2.0 }).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    for key in ["audit_id", "ratios", "fitted_constant", "refinement_ratio"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["audit_id"], "algebra");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_sum_to_the_field(seed in 0u64..10_000, exp in 6u32..11, l in 0.5f64..30.0) {
        let g = grid(l, 1 << exp);
        prop_assume!(build_partition(g).is_ok());
        let part = build_partition(g).unwrap();
        let f = random_bandlimited(g, (1 << exp) / 2 - 1, seed);
        let blocks = all_blocks(&f, &part).unwrap();
        let mut sum = vec![0.0; 1 << exp];
        for b in &blocks {
            for (s, v) in sum.iter_mut().zip(b.samples()) {
                *s += v;
            }
        }
        prop_assert!(rel_l2(&sum, f.samples()) <= 1e-12);
        let ratio = besov_norm(&f, BesovParams::new(0.0, 2.0, 2.0).unwrap(), &part).unwrap() / l2_norm(&f);
        prop_assert!(ratio >= 0.5f64.sqrt() - 1e-10 && ratio <= 1.0 + 1e-10);
    }

    #[test]
    fn interpolation_never_exceeds_one(seed in 0u64..10_000, theta in 0.05f64..0.95, s1 in -2.0f64..1.0, gap in 0.1f64..3.0) {
        let g = grid(3.0, 256);
        let f = random_bandlimited(g, 100, seed);
        let kind = AuditKind::Interpolation { s1, s2: s1 + gap, theta, p: 2.0, r: 2.0 };
        let report = inequality_audit(&[f], kind).unwrap();
        prop_assert!(report.passed, "ratio {}", report.ratios[0]);
    }
}
