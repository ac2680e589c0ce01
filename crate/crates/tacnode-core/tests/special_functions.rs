use statrs::function::erf::erfc;
use tacnode_core::contours::{integrate_1d, phi_by_contour, QuadratureRule};
use tacnode_core::special_functions::{factorial, hermite, phi, phi_by_recurrence, HermiteVariant};
use tacnode_core::Complex64;

fn eta_grid() -> impl Iterator<Item = f64> {
    (0..21).map(|i| -3.0 + 0.3 * i as f64)
}

#[test]
fn phi_matches_line_quadrature_on_grid() {
    let rule = QuadratureRule::default_line();
    let mut worst: f64 = 0.0;
    for n in -8..=8 {
        for eta in eta_grid() {
            let a = phi(n, eta);
            let b = phi_by_contour(&rule, n, eta).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-8, "max deviation {worst:e}");
}

#[test]
fn phi_five_at_one_point_three() {
    let rule = QuadratureRule::default_line();
    let a = phi(5, 1.3);
    let b = phi_by_contour(&rule, 5, 1.3).unwrap();
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn phi_zero_is_half_erfc() {
    for eta in eta_grid() {
        let reference = 0.5 * erfc(-eta);
        let d = (phi(0, eta) - reference).abs();
        // statrs erfc carries about 1e-11 relative error
        assert!(d < 1e-10 * reference, "eta={eta} diff {d:e}");
    }
}

#[test]
fn phi_recurrence_agrees() {
    for eta in [-2.0, -0.4, 0.0, 0.9, 2.5] {
        let phi0 = 0.5 * erfc(-eta);
        for n in -3..=10 {
            let a = phi(n, eta);
            let b = phi_by_recurrence(n, eta, phi0);
            assert!((a - b).abs() <= 1e-11 * (1.0 + a.abs()), "n={n} eta={eta}: {a} vs {b}");
        }
    }
}

#[test]
fn tilde_times_factorial_is_std() {
    for n in 0..=20 {
        for x in [-2.3, -0.5, 0.0, 0.8, 1.7, 3.1] {
            let s = hermite(HermiteVariant::Std, n, x);
            let t = hermite(HermiteVariant::Tilde, n, x) * factorial(n as u32);
            assert!((s - t).abs() <= 1e-12 * s.abs().max(1.0), "n={n} x={x}");
        }
    }
}

#[test]
fn variants_scale_std() {
    for n in 0..=12 {
        let x = 0.83;
        let s = hermite(HermiteVariant::Std, n, x);
        let hat = hermite(HermiteVariant::Hat, n, x) * 2f64.powi(n + 1);
        let bar = hermite(HermiteVariant::Bar, n, x) * 2f64.powi(n) * factorial(n as u32);
        assert!((s - hat).abs() <= 1e-12 * s.abs().max(1.0));
        assert!((s - bar).abs() <= 1e-12 * s.abs().max(1.0));
    }
    for v in [HermiteVariant::Hat, HermiteVariant::Bar, HermiteVariant::P] {
        assert_eq!(hermite(v, -1, 0.3), 0.0);
    }
}

// H_n(x/2)/n! differentiates to the previous member of the family.
#[test]
fn rescaled_family_derivative() {
    let f = |n: i32, x: f64| hermite(HermiteVariant::Tilde, n, x / 2.0);
    let h = 1e-5;
    for n in 1..=10 {
        for x in [-2.0, -0.3, 0.4, 1.9] {
            let d = (f(n, x + h) - f(n, x - h)) / (2.0 * h);
            assert!((d - f(n - 1, x)).abs() < 1e-6, "n={n} x={x}");
        }
    }
}

#[test]
fn circle_reproduces_hermite_generating_integral() {
    let rule = QuadratureRule::circle(0.5, 64);
    for x in [-1.1, 0.0, 0.6] {
        let z = integrate_1d(&rule, |z: Complex64| (-z * z + 2.0 * x * z).exp() / z.powi(3)).unwrap();
        assert!((z.re - hermite(HermiteVariant::Tilde, 2, x)).abs() < 1e-12);
        assert!(z.im.abs() < 1e-12);
    }
}

#[test]
fn line_reproduces_gaussian_closed_form() {
    let rule = QuadratureRule::vertical_line(1.0, 8.0, 257);
    for eta in [-1.5, 0.2, 2.0] {
        let z = integrate_1d(&rule, |v: Complex64| (v * v + 2.0 * eta * v).exp()).unwrap();
        assert!((z.re - phi(-1, eta)).abs() < 1e-12);
    }
}
