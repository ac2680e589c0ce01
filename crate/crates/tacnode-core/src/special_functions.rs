//! Hermite polynomial variants, the line integral Φ_n and the Heaviside power.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Normalisation attached to the standard Hermite polynomial H_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HermiteVariant {
    /// H_n, with H_{k+1} = 2x H_k - 2k H_{k-1}.
    Std,
    /// H_n / n!
    Tilde,
    /// H_n / 2^{n+1}
    Hat,
    /// H_n / (2^n n!)
    Bar,
    /// H_n(ix) / (n! i^n), which is real.
    P,
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Evaluates a Hermite variant. Negative degrees give zero.
pub fn hermite(variant: HermiteVariant, n: i32, x: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let n_u = n as u32;
    match variant {
        HermiteVariant::Std => hermite_std(n_u, x),
        HermiteVariant::Tilde => hermite_tilde(n_u, x),
        HermiteVariant::Hat => hermite_std(n_u, x) / 2f64.powi(n + 1),
        HermiteVariant::Bar => hermite_tilde(n_u, x) / 2f64.powi(n),
        HermiteVariant::P => hermite_p(n_u, x),
    }
}

fn hermite_std(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

// Normalised recurrence keeps magnitudes moderate for larger n.
fn hermite_tilde(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = (2.0 * x * cur - 2.0 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

fn hermite_p(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = (2.0 * x * cur + 2.0 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Heaviside power H^m(z) = z^{m-1}/(m-1)! for z >= 0 and m >= 1, else 0.
pub fn heaviside_pow(m: i32, z: f64) -> f64 {
    if m < 1 || z < 0.0 {
        return 0.0;
    }
    z.powi(m - 1) / factorial((m - 1) as u32)
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Composite 20-point Gauss-Legendre on [a, b] split into unit-ish panels.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = gl20();
    let count = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / count as f64;
    let mut total = 0.0;
    for p in 0..count {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (t, w) in nodes.iter().zip(weights) {
            s += w * f(mid + half * t);
        }
        total += s * half;
    }
    total
}

/// Φ_n(η) = (1/2πi) ∫_L e^{v²+2ηv} v^{-n-1} dv.
///
/// Negative n has a Hermite closed form; for n >= 0 the integral is the
/// half-line Gaussian moment 2^n/√π ∫_0^∞ ξ^n/n! e^{-(ξ-η)²} dξ.
pub fn phi(n: i32, eta: f64) -> f64 {
    if n <= -1 {
        let k = -n - 1;
        return (-eta * eta).exp() / PI.sqrt() * 2f64.powi(n) * hermite(HermiteVariant::Std, k, -eta);
    }
    let nf = n as f64;
    let fact = factorial(n as u32);
    // u = ξ - η; the integrand (u+η)^n e^{-u²} peaks at u*.
    let peak = 0.5 * (-eta + (eta * eta + 2.0 * nf).sqrt());
    let lo = (-eta).max(peak - 10.0);
    let hi = peak + 10.0;
    let f = |u: f64| (u + eta).powi(n) / fact * (-u * u).exp();
    let integral = if lo < peak {
        integrate_panels(f, lo, peak, 1.0) + integrate_panels(f, peak, hi, 1.0)
    } else {
        integrate_panels(f, lo, hi, 1.0)
    };
    2f64.powi(n) / PI.sqrt() * integral
}

/// Φ_n(η) for n = lo..=hi by the recurrence n Φ_n = 2Φ_{n-2} + 2ηΦ_{n-1},
/// seeded with Φ_{-1} and Φ_0 = erfc(-η)/2. Used as a cross-check.
pub fn phi_by_recurrence(n: i32, eta: f64, phi0: f64) -> f64 {
    let phim1 = phi(-1, eta);
    if n == -1 {
        return phim1;
    }
    if n < -1 {
        return phi(n, eta);
    }
    let (mut prev, mut cur) = (phim1, phi0);
    for k in 1..=n {
        let next = (2.0 * prev + 2.0 * eta * cur) / k as f64;
        prev = cur;
        cur = next;
    }
    cur
}
