use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tacnode_core::contours::{integrate_1d, QuadratureRule};
use tacnode_core::theta_integrals::{
    gamma_by_quadrature, gamma_coeffs, gamma_tilde_by_quadrature, sym_funcs, theta_pm, theta_r, theta_r_tensor,
    KernelParams, Sign, SymKind,
};
use tacnode_core::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn param_sets() -> Vec<KernelParams> {
    [(1, 1, 0.0), (1, 2, 0.5), (2, 2, -0.3), (2, 3, 0.8), (3, 3, 0.2)]
        .iter()
        .map(|&(r, rho, beta)| KernelParams::new(r, rho, beta).unwrap())
        .collect()
}

fn sample_points() -> Vec<Complex64> {
    let mut pts = Vec::new();
    for re in [-0.3, 0.0, 0.3] {
        for im in [-0.3, 0.0, 0.3] {
            pts.push(c(re, im));
        }
    }
    pts
}

#[test]
fn diagonal_equals_origin() {
    for p in param_sets() {
        let t00 = theta_r(&p, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((t00.re - p.theta00()).abs() <= 1e-12 * p.theta00().abs());
        for u in sample_points() {
            let t = theta_r(&p, u, u).unwrap();
            assert!((t - t00).norm() <= 1e-9 * t00.norm(), "r={} u={u}", p.r);
        }
    }
}

#[test]
fn theta00_is_real_and_matches_tensor() {
    let coarse = QuadratureRule::vertical_line(1.0, 7.0, 201);
    for p in param_sets().into_iter().filter(|p| p.r <= 2) {
        let t = theta_r_tensor(&p, &coarse, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(t.im.abs() < 1e-9 * t.norm());
        assert!((t.re - p.theta00()).abs() < 1e-8 * p.theta00().abs(), "r={} {} vs {}", p.r, t.re, p.theta00());
    }
}

#[test]
fn r_one_is_a_single_integral() {
    let p = KernelParams::new(1, 2, 0.5).unwrap();
    let (u, v) = (c(0.2, 0.1), c(1.0, 0.7));
    let direct = integrate_1d(&p.line, |w| (2.0 * w * w + 0.5 * w).exp() * w.powi(-2) * (v - w) / (u - w)).unwrap();
    let t = theta_r(&p, u, v).unwrap();
    assert!((t - direct).norm() < 1e-10 * direct.norm());
}

#[test]
fn r_two_heine_matches_tensor_and_doubles_stably() {
    let p = KernelParams::new(2, 2, -0.3).unwrap();
    let (u, v) = (c(0.25, -0.1), c(1.0, 1.3));
    let heine = theta_r(&p, u, v).unwrap();
    let tensor = theta_r_tensor(&p, &QuadratureRule::vertical_line(1.0, 7.0, 257), u, v).unwrap();
    assert!((heine - tensor).norm() < 1e-8 * heine.norm(), "{heine} vs {tensor}");
    let line2 = p.line.doubled();
    let p2 = KernelParams::with_rules(2, 2, -0.3, line2, p.circle.clone()).unwrap();
    let doubled = theta_r(&p2, u, v).unwrap();
    assert!((heine - doubled).norm() < 1e-8 * heine.norm());
}

#[test]
fn contour_shift_invariance() {
    let (u, v) = (c(0.1, 0.2), c(0.4, -0.5));
    let base = KernelParams::new(2, 3, 0.8).unwrap();
    let t0 = theta_r(&base, u, v).unwrap();
    for sigma in [0.8, 1.4, 2.2] {
        let line = QuadratureRule::vertical_line(sigma, 8.0, 513);
        let p = KernelParams::with_rules(2, 3, 0.8, line, base.circle.clone()).unwrap();
        let t = theta_r(&p, u, v).unwrap();
        assert!((t - t0).norm() < 1e-8 * t0.norm(), "sigma={sigma}");
    }
}

#[test]
fn pole_on_contour_is_rejected() {
    let p = KernelParams::new(1, 1, 0.0).unwrap();
    assert!(matches!(theta_r(&p, c(1.05, 0.0), c(0.0, 0.0)), Err(Error::PoleOnContour(_))));
    assert!(matches!(theta_pm(&p, Sign::Minus, c(0.0, 0.0), c(0.95, 2.0)), Err(Error::PoleOnContour(_))));
}

#[test]
fn theta_plus_properties() {
    let p1 = KernelParams::new(1, 2, 0.3).unwrap();
    assert_eq!(theta_pm(&p1, Sign::Plus, c(0.3, 0.1), c(1.0, 2.0)).unwrap(), c(1.0, 0.0));
    for p in param_sets().into_iter().filter(|p| p.r >= 2) {
        let (u, v) = (c(0.3, -0.2), c(1.0, 0.9));
        let a = theta_pm(&p, Sign::Plus, u, v).unwrap();
        let b = theta_pm(&p, Sign::Plus, v, u).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }
    // r = 2: Θ^+_1 is the single integral of f(w)(u-w)(v-w).
    let p = KernelParams::new(2, 2, -0.3).unwrap();
    let (u, v) = (c(0.3, -0.2), c(1.0, 0.9));
    let direct = integrate_1d(&p.line, |w| (2.0 * w * w - 0.3 * w).exp() * w.powi(-2) * (u - w) * (v - w)).unwrap();
    let a = theta_pm(&p, Sign::Plus, u, v).unwrap();
    assert!((a - direct).norm() < 1e-10 * direct.norm());
}

#[test]
fn theta_minus_matches_tensor_for_r_one() {
    // r = 1: Θ^-_2 is a 2-fold integral.
    let p = KernelParams::new(1, 1, 0.0).unwrap();
    let (u, v) = (c(0.3, 0.1), c(-0.2, 0.25));
    let a = theta_pm(&p, Sign::Minus, u, v).unwrap();
    let rule = QuadratureRule::vertical_line(1.0, 7.0, 257);
    let t = tacnode_core::contours::integrate_nd(&[&rule, &rule], |w| {
        let d = w[0] - w[1];
        let mut acc = d * d;
        for &x in w {
            acc *= (2.0 * x * x).exp() / x / ((u - x) * (v - x));
        }
        acc
    })
    .unwrap();
    assert!((a - t).norm() < 1e-8 * t.norm(), "{a} vs {t}");
    // near-coincident arguments take the direct branch and stay continuous
    let b = theta_pm(&p, Sign::Minus, u, u + c(1e-4, 0.0)).unwrap();
    let b2 = theta_pm(&p, Sign::Minus, u, u + c(2e-3, 0.0)).unwrap();
    assert!((b - b2).norm() < 1e-2 * b.norm());
}

#[test]
fn elementary_symmetric_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w: Vec<Complex64> = (0..3).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let z = c(0.37, -0.81);
    let prod: Complex64 = w.iter().map(|&x| z - x).product();
    let r = w.len();
    let mut sum = c(0.0, 0.0);
    for l in 0..=r {
        let sign = if (r - l).is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign * sym_funcs(&w, SymKind::Elementary, r - l) * z.powi(l as i32);
    }
    assert!((prod - sum).norm() < 1e-14);
    assert_eq!(sym_funcs(&w, SymKind::Complete, 0), c(1.0, 0.0));
}

#[test]
fn gamma_matches_tensor_quadrature() {
    let rule = QuadratureRule::vertical_line(1.0, 7.0, 257);
    for p in param_sets().into_iter().filter(|p| p.r <= 2) {
        let g = gamma_coeffs(&p, 4).unwrap();
        for l in 0..p.r {
            for k in 0..=4 {
                let q = gamma_by_quadrature(&p, &rule, l, k).unwrap();
                assert!(q.im.abs() < 1e-9 * q.norm().max(1.0));
                let scale = g.gamma[l][k].abs().max(1e-3);
                assert!(
                    (q.re - g.gamma[l][k]).abs() < 1e-8 * scale,
                    "r={} l={l} k={k}: {} vs {}",
                    p.r,
                    q.re,
                    g.gamma[l][k]
                );
            }
        }
        for k in 0..p.r {
            for l in 0..p.r {
                let q = gamma_tilde_by_quadrature(&p, &rule, k, l).unwrap();
                assert!(q.im.abs() < 1e-9 * q.norm().max(1.0));
                assert!((q.re - g.gamma_tilde[k][l]).abs() < 1e-8 * g.gamma_tilde[k][l].abs().max(1e-3));
            }
        }
    }
}

#[test]
fn gamma_tilde_symmetric_and_nonsingular() {
    for p in param_sets() {
        let g = gamma_coeffs(&p, 2).unwrap();
        assert!(g.det_gamma_tilde != 0.0 && g.det_gamma_tilde.is_finite());
        for k in 0..p.r {
            for l in 0..p.r {
                assert!(
                    (g.gamma_tilde[k][l] - g.gamma_tilde[l][k]).abs() < 1e-12 * g.gamma_tilde[k][l].abs().max(1e-12)
                );
            }
        }
    }
    let p = KernelParams::new(1, 2, 0.4).unwrap();
    let g = gamma_coeffs(&p, 0).unwrap();
    assert!((g.gamma_tilde[0][0] - 1.0 / p.theta00()).abs() < 1e-15);
}

#[test]
fn gamma_series_reproduces_rational_expression() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in param_sets() {
        let kmax = 20;
        let g = gamma_coeffs(&p, kmax).unwrap();
        let t00 = p.theta00();
        for _ in 0..5 {
            let rad = rng.random_range(0.0..0.3);
            let u = Complex64::from_polar(rad, rng.random_range(0.0..std::f64::consts::TAU));
            let v = c(p.sigma(), rng.random_range(-1.0..1.0));
            let exact = (theta_r(&p, u, v).unwrap() - t00) / ((v - u) * t00);
            let mut series = c(0.0, 0.0);
            for i in 0..p.r {
                for k in 0..=kmax {
                    series += g.series_coeff(i, k) * v.powi(i as i32) * u.powi(k as i32);
                }
            }
            assert!((series - exact).norm() < 1e-6 * exact.norm().max(1.0), "r={} {series} vs {exact}", p.r);
        }
    }
}
