//! Shared oracles for the integration tests.
#![allow(dead_code)]

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Closed-form peakon profile at `t = 0` with speed `c`, used as an oracle
/// independent of the library's evaluator.
pub fn peakon_profile(c: f64, x: f64) -> f64 {
    if x >= 0.0 {
        -(c / 6.0) * (-x).exp()
    } else {
        -(c / 2.0) * x.exp() + (c / 3.0) * (2.0 * x).exp()
    }
}

pub fn peakon_profile_dx(c: f64, x: f64) -> f64 {
    if x >= 0.0 {
        (c / 6.0) * (-x).exp()
    } else {
        -(c / 2.0) * x.exp() + (2.0 * c / 3.0) * (2.0 * x).exp()
    }
}

/// `|u_hat(xi)|^2` of the `c = 1` peakon profile on the whole line, from the
/// transforms of its exponential branches.
pub fn peakon_spectrum_sq(xi: f64) -> f64 {
    use std::ops::{Add, Div, Mul};
    #[derive(Clone, Copy)]
    struct C(f64, f64);
    impl Add for C {
        type Output = C;
        fn add(self, o: C) -> C {
            C(self.0 + o.0, self.1 + o.1)
        }
    }
    impl Mul<f64> for C {
        type Output = C;
        fn mul(self, s: f64) -> C {
            C(self.0 * s, self.1 * s)
        }
    }
    impl Div for C {
        type Output = C;
        fn div(self, o: C) -> C {
            let d = o.0 * o.0 + o.1 * o.1;
            C((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
        }
    }
    let one = C(1.0, 0.0);
    let u = (one / C(1.0, xi)) * (-1.0 / 6.0)
        + (one / C(1.0, -xi)) * (-0.5)
        + (one / C(2.0, -xi)) * (1.0 / 3.0);
    u.0 * u.0 + u.1 * u.1
}

/// Whole-line `H^s` norm of the `c = 1` peakon profile by adaptive quadrature
/// in frequency, using `xi = tan(theta)` to map the line to a finite interval.
pub fn peakon_sobolev_norm(s: f64) -> f64 {
    let integrand = |theta: f64| {
        let xi = theta.tan();
        let jac = 1.0 / theta.cos().powi(2);
        (1.0 + xi * xi).powf(s) * peakon_spectrum_sq(xi) * jac
    };
    let half = std::f64::consts::FRAC_PI_2;
    let total = 2.0 * adaptive_simpson(&integrand, 0.0, half * (1.0 - 1e-12), 1e-13);
    (total / (2.0 * std::f64::consts::PI)).sqrt()
}

/// Naive `O(N^2)` DFT with the library's normalization.
pub fn naive_dft(samples: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len();
    (0..n)
        .map(|j| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &f) in samples.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64;
                re += f * ang.cos();
                im += f * ang.sin();
            }
            (re / n as f64, im / n as f64)
        })
        .collect()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
