//! The r-fold integrals Θ_r, Θ^±, and the coefficient families Γ and Γ̃.
//!
//! Every r-fold integral here has the form ∫ Δ_r(w)² ∏ g(w_α) dw/(2πi), which
//! equals r! det[∫ g(w) w^{i+j} dw/(2πi)]. The one-dimensional moments of
//! f(w) = e^{2w²+βw} w^{-ρ} have a closed form in Φ, so Θ(0,0), Θ^+ and the
//! Γ families are exact up to Φ; only terms with 1/(u-w) use the line rule.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::contours::{integrate_nd, ContourKind, QuadratureRule};
use crate::error::{Error, Result};
use crate::linalg::{det, det_c, det_series, Series2};
use crate::special_functions::{factorial, phi};

const MAX_R: usize = 4;

#[derive(Debug, Clone)]
pub struct KernelParams {
    pub r: usize,
    pub rho: i32,
    pub beta: f64,
    pub line: QuadratureRule,
    pub circle: QuadratureRule,
    moments: Vec<f64>,
    // weight·f(w) at each line node
    line_f: Vec<Complex64>,
    theta00: f64,
}

/// Moment ∫_L e^{2w²+βw} w^{k-ρ} dw/(2πi), valid for every integer k.
pub fn moment(rho: i32, beta: f64, k: i32) -> f64 {
    2f64.powf(-((k - rho + 1) as f64) / 2.0) * phi(rho - k - 1, beta / (2.0 * SQRT_2))
}

impl KernelParams {
    pub fn new(r: usize, rho: i32, beta: f64) -> Result<Self> {
        Self::with_rules(r, rho, beta, QuadratureRule::default_line(), QuadratureRule::default_circle())
    }

    pub fn with_rules(r: usize, rho: i32, beta: f64, line: QuadratureRule, circle: QuadratureRule) -> Result<Self> {
        if r == 0 || r > MAX_R {
            return Err(Error::InvalidParams(format!("r = {r} must lie in 1..={MAX_R}")));
        }
        if rho < r as i32 {
            return Err(Error::InvalidParams(format!("rho = {rho} must be at least r = {r}")));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParams("beta must be finite".into()));
        }
        let (ContourKind::VerticalLine { sigma, .. }, ContourKind::Circle { radius, .. }) = (line.kind, circle.kind)
        else {
            return Err(Error::InvalidParams("expected a vertical line and a circle".into()));
        };
        if sigma <= radius {
            return Err(Error::InvalidParams(format!("line abscissa {sigma} must exceed circle radius {radius}")));
        }
        let moments = (0..=2 * r as i32 + 2).map(|k| moment(rho, beta, k)).collect();
        let line_f = line.nodes().map(|(w, wt)| wt * (2.0 * w * w + beta * w).exp() * w.powi(-rho)).collect();
        let mut p = Self { r, rho, beta, line, circle, moments, line_f, theta00: 0.0 };
        let t00 = factorial(r as u32) * det(r, &p.hankel(0, r));
        if !t00.is_finite() || t00 == 0.0 {
            return Err(Error::InvalidParams(format!("Theta_r(0,0) = {t00} is not usable")));
        }
        p.theta00 = t00;
        Ok(p)
    }

    /// Moment m_k (closed form).
    pub fn moment(&self, k: i32) -> f64 {
        if k >= 0 && (k as usize) < self.moments.len() {
            self.moments[k as usize]
        } else {
            moment(self.rho, self.beta, k)
        }
    }

    fn hankel(&self, shift: i32, n: usize) -> Vec<f64> {
        let mut h = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                h.push(self.moment((i + j) as i32 + shift));
            }
        }
        h
    }

    pub fn theta00(&self) -> f64 {
        self.theta00
    }

    pub fn sigma(&self) -> f64 {
        match self.line.kind {
            ContourKind::VerticalLine { sigma, .. } => sigma,
            ContourKind::Circle { .. } => unreachable!("checked at construction"),
        }
    }

    fn check_pole(&self, u: Complex64) -> Result<()> {
        if (u.re - self.sigma()).abs() <= 0.1 {
            return Err(Error::PoleOnContour(format!("{u} is within 0.1 of the vertical line")));
        }
        Ok(())
    }

    /// q_k(u) = ∫ f(w) w^k/(u-w) dw/(2πi) for k = 0..count, by the line rule.
    pub fn cauchy_moments(&self, u: Complex64, count: usize) -> Vec<Complex64> {
        let mut q = vec![Complex64::new(0.0, 0.0); count];
        for (&w, &fw) in self.line.points.iter().zip(&self.line_f) {
            let mut term = fw / (u - w);
            for qk in q.iter_mut() {
                *qk += term;
                term *= w;
            }
        }
        q
    }
}

/// Θ_r(u,v) = ∫ Δ_r(w)² ∏ e^{2w²+βw} w^{-ρ} (v-w)/(u-w) dw/(2πi).
pub fn theta_r(p: &KernelParams, u: Complex64, v: Complex64) -> Result<Complex64> {
    p.check_pole(u)?;
    let r = p.r;
    let q = p.cauchy_moments(u, 2 * r - 1);
    Ok(theta_r_from_q(p, &q, v - u))
}

/// Θ_r from precomputed Cauchy moments at u, with dv = v - u.
pub fn theta_r_from_q(p: &KernelParams, q: &[Complex64], dv: Complex64) -> Complex64 {
    let r = p.r;
    let mut m = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            m.push(p.moment((i + j) as i32) + dv * q[i + j]);
        }
    }
    factorial(r as u32) * det_c(r, &m)
}

/// Tensor-product evaluation of Θ_r over r copies of `rule` (test oracle).
pub fn theta_r_tensor(p: &KernelParams, rule: &QuadratureRule, u: Complex64, v: Complex64) -> Result<Complex64> {
    p.check_pole(u)?;
    let rules: Vec<&QuadratureRule> = (0..p.r).map(|_| rule).collect();
    let (beta, rho) = (p.beta, p.rho);
    integrate_nd(&rules, |w| {
        let mut acc = vandermonde_sq(w);
        for &wa in w {
            acc *= (2.0 * wa * wa + beta * wa).exp() * wa.powi(-rho) * (v - wa) / (u - wa);
        }
        acc
    })
}

fn vandermonde_sq(w: &[Complex64]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            d *= w[i] - w[j];
        }
    }
    d * d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Θ^+_{r-1}(u,v) with factors (u-w)(v-w), or Θ^-_{r+1}(u,v) with ((u-w)(v-w))^{-1}.
pub fn theta_pm(p: &KernelParams, sign: Sign, u: Complex64, v: Complex64) -> Result<Complex64> {
    match sign {
        Sign::Plus => Ok(theta_plus(p, u, v)),
        Sign::Minus => {
            p.check_pole(u)?;
            p.check_pole(v)?;
            let n = p.r + 1;
            let e = if (u - v).norm() > 1e-3 {
                let qu = p.cauchy_moments(u, 2 * n - 1);
                let qv = p.cauchy_moments(v, 2 * n - 1);
                qu.iter().zip(&qv).map(|(a, b)| (a - b) / (v - u)).collect::<Vec<_>>()
            } else {
                direct_double_pole(p, u, v, 2 * n - 1)
            };
            Ok(theta_minus_from_e(n, &e))
        }
    }
}

fn direct_double_pole(p: &KernelParams, u: Complex64, v: Complex64, count: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); count];
    for (&w, &fw) in p.line.points.iter().zip(&p.line_f) {
        let mut term = fw / ((u - w) * (v - w));
        for ek in e.iter_mut() {
            *ek += term;
            term *= w;
        }
    }
    e
}

/// Θ^-_{n}, n = r+1, from the one-dimensional integrals e_k = ∫ f w^k/((u-w)(v-w)).
pub fn theta_minus_from_e(n: usize, e: &[Complex64]) -> Complex64 {
    let mut m = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            m.push(e[i + j]);
        }
    }
    factorial(n as u32) * det_c(n, &m)
}

fn theta_plus(p: &KernelParams, u: Complex64, v: Complex64) -> Complex64 {
    let n = p.r - 1;
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut m = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let a = (i + j) as i32;
            m.push(u * v * p.moment(a) - (u + v) * p.moment(a + 1) + p.moment(a + 2));
        }
    }
    factorial(n as u32) * det_c(n, &m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymKind {
    Elementary,
    Complete,
}

/// σ_j(w) or h_j(w) by the usual one-variable-at-a-time recursion.
pub fn sym_funcs(w: &[Complex64], kind: SymKind, j: usize) -> Complex64 {
    let mut e = vec![Complex64::new(0.0, 0.0); j + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for &x in w {
        match kind {
            SymKind::Elementary => {
                for k in (1..=j).rev() {
                    let prev = e[k - 1];
                    e[k] += x * prev;
                }
            }
            SymKind::Complete => {
                for k in 1..=j {
                    let prev = e[k - 1];
                    e[k] += x * prev;
                }
            }
        }
    }
    e[j]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub r: usize,
    pub k_max: usize,
    /// gamma[ℓ][k], ℓ < r, k ≤ k_max
    pub gamma: Vec<Vec<f64>>,
    /// gamma_tilde[k][ℓ], k, ℓ < r
    pub gamma_tilde: Vec<Vec<f64>>,
    pub det_gamma_tilde: f64,
}

impl GammaTable {
    /// Coefficient of v^i u^k in (Θ_r(u,v) - Θ_r(0,0))/((v-u)Θ_r(0,0)),
    /// which is Σ_j Γ_{i+j, k-j}.
    pub fn series_coeff(&self, i: usize, k: usize) -> f64 {
        (0..=k).take_while(|j| i + j < self.r).map(|j| self.gamma[i + j][k - j]).sum()
    }
}

/// Exact Γ and Γ̃ by coefficient extraction from determinants of truncated
/// generating series in (t, s).
pub fn gamma_coeffs(p: &KernelParams, k_max: usize) -> Result<GammaTable> {
    let r = p.r;
    let t00 = p.theta00;
    let rf = factorial(r as u32);

    // Γ: entries μ_a(t,s) = Σ_j s^j (m_{a-1-j} + t m_{a-j}).
    let t_deg = r - 1;
    let mut entries = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let a = (i + j) as i32;
            let mut e = Series2::zero(t_deg, k_max);
            for jj in 0..=k_max {
                e.add_to(0, jj, p.moment(a - 1 - jj as i32));
                e.add_to(1, jj, p.moment(a - jj as i32));
            }
            entries.push(e);
        }
    }
    let d = det_series(r, &entries);
    let mut gamma = vec![vec![0.0; k_max + 1]; r];
    for (l, row) in gamma.iter_mut().enumerate() {
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        for (k, g) in row.iter_mut().enumerate() {
            *g = sign * rf * d.get(r - l - 1, k) / t00;
        }
    }

    // Γ̃: (r-1)-fold integrals with ∏(1+tw)(1+sw).
    let mut gamma_tilde = vec![vec![0.0; r]; r];
    if r == 1 {
        gamma_tilde[0][0] = 1.0 / t00;
    } else {
        let n = r - 1;
        let mut ent = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = (i + j) as i32;
                let mut e = Series2::zero(n, n);
                e.add_to(0, 0, p.moment(a));
                e.add_to(1, 0, p.moment(a + 1));
                e.add_to(0, 1, p.moment(a + 1));
                e.add_to(1, 1, p.moment(a + 2));
                ent.push(e);
            }
        }
        let d = det_series(n, &ent);
        let nf = factorial(n as u32);
        for (k, row) in gamma_tilde.iter_mut().enumerate() {
            for (l, g) in row.iter_mut().enumerate() {
                let sign = if (l + k) % 2 == 0 { 1.0 } else { -1.0 };
                *g = sign * r as f64 * nf * d.get(r - l - 1, r - k - 1) / t00;
            }
        }
    }
    let flat: Vec<f64> = gamma_tilde.iter().flatten().copied().collect();
    let det_gamma_tilde = det(r, &flat);
    for v in gamma.iter().flatten().chain(&flat) {
        if !v.is_finite() {
            return Err(Error::NonFinite("Gamma coefficients".into()));
        }
    }
    Ok(GammaTable { r, k_max, gamma, gamma_tilde, det_gamma_tilde })
}

/// Γ_{ℓ,k} by r-fold tensor quadrature of σ_{r-ℓ-1}(w) h_k(1/w)/∏w (test oracle).
pub fn gamma_by_quadrature(p: &KernelParams, rule: &QuadratureRule, l: usize, k: usize) -> Result<Complex64> {
    let r = p.r;
    let rules: Vec<&QuadratureRule> = (0..r).map(|_| rule).collect();
    let (beta, rho) = (p.beta, p.rho);
    let val = integrate_nd(&rules, |w| {
        let inv: Vec<Complex64> = w.iter().map(|x| x.inv()).collect();
        let mut acc =
            vandermonde_sq(w) * sym_funcs(w, SymKind::Elementary, r - l - 1) * sym_funcs(&inv, SymKind::Complete, k);
        for &wa in w {
            acc *= (2.0 * wa * wa + beta * wa).exp() * wa.powi(-rho - 1);
        }
        acc
    })?;
    let sign = if l.is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok(sign * val / p.theta00)
}

/// Γ̃_{k,ℓ} by (r-1)-fold tensor quadrature (test oracle).
pub fn gamma_tilde_by_quadrature(p: &KernelParams, rule: &QuadratureRule, k: usize, l: usize) -> Result<Complex64> {
    let r = p.r;
    if r == 1 {
        return Ok(Complex64::new(1.0 / p.theta00, 0.0));
    }
    let rules: Vec<&QuadratureRule> = (0..r - 1).map(|_| rule).collect();
    let (beta, rho) = (p.beta, p.rho);
    let val = integrate_nd(&rules, |w| {
        let mut acc = vandermonde_sq(w)
            * sym_funcs(w, SymKind::Elementary, r - l - 1)
            * sym_funcs(w, SymKind::Elementary, r - k - 1);
        for &wa in w {
            acc *= (2.0 * wa * wa + beta * wa).exp() * wa.powi(-rho);
        }
        acc
    })?;
    let sign = if (l + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * r as f64 * val / p.theta00)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_small_cases() {
        let w = [Complex64::new(0.5, 0.1), Complex64::new(-1.5, 0.3)];
        assert_eq!(sym_funcs(&w, SymKind::Elementary, 0), Complex64::new(1.0, 0.0));
        assert!((sym_funcs(&w, SymKind::Elementary, 1) - (w[0] + w[1])).norm() < 1e-15);
        let h2 = w[0] * w[0] + w[0] * w[1] + w[1] * w[1];
        assert!((sym_funcs(&w, SymKind::Complete, 2) - h2).norm() < 1e-15);
        assert_eq!(sym_funcs(&w, SymKind::Elementary, 3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(0, 1, 0.0).is_err());
        assert!(KernelParams::new(2, 1, 0.0).is_err());
        assert!(KernelParams::new(5, 6, 0.0).is_err());
    }
}
