//! One- and two-level densities of the blue particles, computed three ways:
//! the closed form D·Vol, determinants of the kernel L̃, and the factorized
//! det(A)·det(B) form. Also the collocation system for g_α and the Fay
//! determinant identity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interlace_polytope::{level_size, volume_det, InterlacingChain, LevelConfig};
use crate::linalg;
use crate::special_functions::{factorial, heaviside_pow, hermite, phi, HermiteVariant};
use crate::tacnode_kernel::{heaviside_term, DtacKernel, Route};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    InStrip,
    AboveStrip,
}

/// Both levels in [0, ρ], or τ1 ≥ ρ with τ2 > ρ.
pub fn classify(rho: i32, tau1: i32, tau2: i32) -> Result<Regime> {
    if tau1 < 0 || tau2 < tau1 {
        return Err(Error::Unsupported(format!("levels ({tau1}, {tau2}) must satisfy 0 <= tau1 <= tau2")));
    }
    if tau2 <= rho {
        Ok(Regime::InStrip)
    } else if tau1 >= rho {
        Ok(Regime::AboveStrip)
    } else {
        Err(Error::Unsupported(format!("levels ({tau1}, {tau2}) straddle the strip boundary {rho}")))
    }
}

/// x + β/2, the only place the β shift is applied.
fn shifted(x: &[f64], beta: f64) -> Vec<f64> {
    x.iter().map(|v| v + beta / 2.0).collect()
}

fn negated(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

/// Wronskian-like determinant: rows x_j^i for i < τ-ρ (above the strip only)
/// stacked over rows Φ_{τ-1-i}(x_j), i < r. Columns follow the input order.
pub fn delta_tilde(r: usize, rho: i32, tau: i32, x: &[f64], regime: Regime) -> Result<f64> {
    let mono = match regime {
        Regime::InStrip => {
            if !(0..=rho).contains(&tau) {
                return Err(Error::SizeMismatch(format!("level {tau} is not inside the strip")));
            }
            0
        }
        Regime::AboveStrip => {
            if tau < rho {
                return Err(Error::SizeMismatch(format!("level {tau} is below the strip top")));
            }
            (tau - rho) as usize
        }
    };
    let n = mono + r;
    if x.len() != n {
        return Err(Error::SizeMismatch(format!("expected {n} points, got {}", x.len())));
    }
    let mut m = Vec::with_capacity(n * n);
    for i in 0..mono {
        m.extend(x.iter().map(|&v| v.powi(i as i32)));
    }
    for i in 0..r {
        m.extend(x.iter().map(|&v| phi(tau - 1 - i as i32, v)));
    }
    Ok(linalg::det(n, &m))
}

/// Points on two levels; for one-level requests τ1 = τ2 and y = x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRequest {
    pub tau1: i32,
    pub x: Vec<f64>,
    pub tau2: i32,
    pub y: Vec<f64>,
}

impl DensityRequest {
    pub fn one_level(tau: i32, x: Vec<f64>) -> Self {
        Self { tau1: tau, x: x.clone(), tau2: tau, y: x }
    }

    pub fn two_level(tau1: i32, x: Vec<f64>, tau2: i32, y: Vec<f64>) -> Self {
        Self { tau1, x, tau2, y }
    }

    pub fn is_one_level(&self) -> bool {
        self.tau1 == self.tau2
    }

    fn validate(&self, k: &DtacKernel) -> Result<Regime> {
        let p = k.params();
        let regime = classify(p.rho, self.tau1, self.tau2)?;
        let n1 = level_size(p.r, p.rho, self.tau1)?;
        let n2 = level_size(p.r, p.rho, self.tau2)?;
        if self.x.len() != n1 || self.y.len() != n2 {
            return Err(Error::SizeMismatch(format!(
                "levels ({}, {}) carry ({n1}, {n2}) particles, got ({}, {})",
                self.tau1,
                self.tau2,
                self.x.len(),
                self.y.len()
            )));
        }
        if self.is_one_level() && self.x != self.y {
            return Err(Error::SizeMismatch("one-level request with distinct x and y".into()));
        }
        Ok(regime)
    }
}

fn sign_pow(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The prefactor D(τ1, x; τ2, y).
pub fn density_prefactor_d(k: &DtacKernel, req: &DensityRequest) -> Result<f64> {
    let regime = req.validate(k)?;
    let p = k.params();
    let (r, rho, beta) = (p.r, p.rho, p.beta);
    let det_gt = k.gamma().det_gamma_tilde;
    let xs = shifted(&req.x, beta);
    match regime {
        Regime::InStrip => {
            let c = 2f64.powi(r as i32 * (req.tau2 - req.tau1 + 1)) * det_gt;
            let a = delta_tilde(r, rho, req.tau1, &xs, Regime::InStrip)?;
            let b = delta_tilde(r, rho, rho - req.tau2, &negated(&req.y), Regime::InStrip)?;
            Ok(c * a * b)
        }
        Regime::AboveStrip => {
            let (n1, n2) = (req.x.len(), req.y.len());
            let mut c = sign_pow(n1 * (n1 - 1) / 2)
                * sign_pow(n2 * (n2 - 1) / 2)
                * 2f64.powi(r as i32 * (n2 as i32 - n1 as i32));
            c *= 2f64.powf(((n2 - r) * (n2 - r).saturating_sub(1)) as f64 / 2.0);
            c /= (0..n1 - r).map(|j| factorial(j as u32)).product::<f64>();
            c *= det_gt;
            let a = delta_tilde(r, rho, req.tau1, &xs, Regime::AboveStrip)?;
            let gauss: f64 = req.y.iter().map(|y| (-y * y).exp() / PI.sqrt()).product();
            Ok(c * a * gauss * linalg::vandermonde(&req.y))
        }
    }
}

/// Density by the closed form: D for one level, D·Vol for two levels.
pub fn density(k: &DtacKernel, req: &DensityRequest) -> Result<f64> {
    let d = density_prefactor_d(k, req)?;
    if req.is_one_level() {
        return Ok(d);
    }
    let x = LevelConfig { tau: req.tau1, points: req.x.clone() };
    let y = LevelConfig { tau: req.tau2, points: req.y.clone() };
    Ok(d * volume_det(req.tau1, &x, req.tau2, &y)?)
}

fn points(req: &DensityRequest) -> Vec<(i32, f64)> {
    let mut pts: Vec<(i32, f64)> = req.x.iter().map(|&v| (req.tau1, v)).collect();
    if !req.is_one_level() {
        pts.extend(req.y.iter().map(|&v| (req.tau2, v)));
    }
    pts
}

/// 2^N det[L̃(a; b)] over the N points of the request.
pub fn kernel_block_density(k: &DtacKernel, req: &DensityRequest) -> Result<f64> {
    req.validate(k)?;
    let pts = points(req);
    let n = pts.len();
    if n > 6 {
        return Err(Error::Intractable(format!("{n} points exceed the kernel-block limit of 6")));
    }
    let mut m = Vec::with_capacity(n * n);
    for &(ta, xa) in &pts {
        for &(tb, xb) in &pts {
            m.push(k.ltilde(ta, xa, tb, xb, Route::Series)?);
        }
    }
    Ok(2f64.powi(n as i32) * linalg::det(n, &m))
}

/// g_α(y⃗, x), α < |y|, solving Σ_α H̃_α(y_i) g_α = -H^{τ2-τ1}(2(y_i - x)).
pub fn solve_g(tau1: i32, x: f64, tau2: i32, y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let mut a = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n);
    for &yi in y {
        a.extend((0..n).map(|alpha| hermite(HermiteVariant::Tilde, alpha as i32, yi)));
        b.push(-heaviside_term(tau2, yi, tau1, x));
    }
    for i in 0..n {
        for j in i + 1..n {
            if y[i] == y[j] {
                return Err(Error::SingularSystem(format!("coincident points y = {}", y[i])));
            }
        }
    }
    linalg::solve(n, &a, &b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub det_a: f64,
    pub det_b: f64,
    pub block_det: f64,
    pub d_times_vol: f64,
    pub max_rel_discrepancy: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Builds the factor matrices (column j belongs to point j) and compares
/// 2^N det(A)det(B) with the kernel-block and closed-form densities.
pub fn factorization_check(k: &DtacKernel, req: &DensityRequest) -> Result<FactorizationReport> {
    let regime = req.validate(k)?;
    let (a, b) = factor_matrices(k, req, regime)?;
    let n = points(req).len();
    let det_a = linalg::det(n, &a);
    let det_b = linalg::det(n, &b);
    let block_det = kernel_block_density(k, req)?;
    let d_times_vol = density(k, req)?;
    let scaled = 2f64.powi(n as i32) * det_a * det_b;
    let max_rel_discrepancy = rel(scaled, block_det).max(rel(scaled, d_times_vol)).max(rel(block_det, d_times_vol));
    Ok(FactorizationReport { det_a, det_b, block_det, d_times_vol, max_rel_discrepancy })
}

// Row-major N×N matrices whose column j is the A (or B) vector of point j.
fn factor_matrices(k: &DtacKernel, req: &DensityRequest, regime: Regime) -> Result<(Vec<f64>, Vec<f64>)> {
    let cols: Vec<(Vec<f64>, Vec<f64>)> = match (regime, req.is_one_level()) {
        (Regime::InStrip, true) => req.x.iter().map(|&x| in_strip_one(k, req.tau1, x)).collect(),
        (Regime::AboveStrip, true) => {
            let g = k.g_coeffs(req.tau1)?;
            req.x.iter().map(|&x| above_one(k, &g, req.x.len(), x)).collect()
        }
        (Regime::InStrip, false) => in_strip_two(k, req)?,
        (Regime::AboveStrip, false) => above_two(k, req)?,
    };
    let n = cols.len();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    for (j, (ca, cb)) in cols.iter().enumerate() {
        for i in 0..n {
            a[i * n + j] = ca[i];
            b[i * n + j] = cb[i];
        }
    }
    Ok((a, b))
}

fn gt_phi(k: &DtacKernel, tau: i32, l: usize, x: f64) -> f64 {
    let p = k.params();
    let gt = &k.gamma().gamma_tilde;
    (0..p.r).map(|kk| gt[kk][l] * phi(p.rho - tau - kk as i32 - 1, -x)).sum()
}

fn in_strip_one(k: &DtacKernel, tau: i32, x: f64) -> (Vec<f64>, Vec<f64>) {
    let p = k.params();
    let e = (-0.5 * x * x).exp();
    let a = (0..p.r).map(|l| e * phi(tau - 1 - l as i32, x + p.beta / 2.0)).collect();
    let b = (0..p.r).map(|l| gt_phi(k, tau, l, x) / e).collect();
    (a, b)
}

fn above_one(k: &DtacKernel, g: &crate::tacnode_kernel::GCoeffs, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let r = k.params().r;
    let e = (-0.5 * x * x).exp();
    let mut a: Vec<f64> = (0..n - r).map(|al| hermite(HermiteVariant::Tilde, al as i32, x)).collect();
    a.extend((0..r).map(|kk| g.g(kk, x)));
    let a = a.into_iter().map(|v| v * e / PI.sqrt()).collect();
    let b = (0..n).map(|al| e * hermite(HermiteVariant::Hat, al as i32, x)).collect();
    (a, b)
}

fn in_strip_two(k: &DtacKernel, req: &DensityRequest) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let p = k.params();
    let (r, beta) = (p.r, p.beta);
    let (t1, t2) = (req.tau1, req.tau2);
    let mut cols = Vec::new();
    for &x in &req.x {
        let e = (-0.5 * x * x).exp();
        let mut a = vec![0.0; r];
        a.extend((0..r).map(|l| e * phi(t1 - 1 - l as i32, x + beta / 2.0)));
        let mut b: Vec<f64> = solve_g(t1, x, t2, &req.y)?.into_iter().map(|g| g / e).collect();
        b.extend((0..r).map(|l| gt_phi(k, t1, l, x) / e));
        cols.push((a, b));
    }
    for &y in &req.y {
        let e = (-0.5 * y * y).exp();
        let mut a: Vec<f64> = (0..r).map(|al| e * hermite(HermiteVariant::Tilde, al as i32, y)).collect();
        a.extend((0..r).map(|l| e * phi(t2 - 1 - l as i32, y + beta / 2.0)));
        let mut b = vec![0.0; r];
        b.extend((0..r).map(|l| gt_phi(k, t2, l, y) / e));
        cols.push((a, b));
    }
    Ok(cols)
}

fn above_two(k: &DtacKernel, req: &DensityRequest) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let r = k.params().r;
    let (t1, t2) = (req.tau1, req.tau2);
    let (n1, n2) = (req.x.len(), req.y.len());
    let g1 = k.g_coeffs(t1)?;
    let g2 = k.g_coeffs(t2)?;
    let sqpi = PI.sqrt();
    let mut cols = Vec::new();
    for &x in &req.x {
        let e = (-0.5 * x * x).exp();
        let mut a = vec![0.0; n2];
        a.extend((0..n1 - r).map(|al| hermite(HermiteVariant::Tilde, al as i32, x) * e / sqpi));
        a.extend((0..r).map(|kk| g1.g(kk, x) * e / sqpi));
        let g = solve_g(t1, x, t2, &req.y)?;
        let mut b: Vec<f64> = (n2 - n1..n2).map(|al| sqpi / e * g[al]).collect();
        b.extend((0..n2 - n1).map(|al| sqpi / e * (phi((n2 - n1 - al) as i32 - 1, -x) + g[al])));
        b.extend((0..n1).map(|al| e * hermite(HermiteVariant::Hat, al as i32, x)));
        cols.push((a, b));
    }
    for &y in &req.y {
        let e = (-0.5 * y * y).exp();
        let mut a: Vec<f64> = (n2 - n1..n2).map(|al| hermite(HermiteVariant::Tilde, al as i32, y) * e / sqpi).collect();
        a.extend((0..n2 - r).map(|al| hermite(HermiteVariant::Tilde, al as i32, y) * e / sqpi));
        a.extend((0..r).map(|kk| g2.g(kk, y) * e / sqpi));
        let mut b = vec![0.0; n1];
        b.extend((0..n2).map(|al| e * hermite(HermiteVariant::Hat, al as i32, y)));
        cols.push((a, b));
    }
    Ok(cols)
}

/// Both sides of the Fay identity for the g system with |x| = |y| = r:
/// det(g_{j-1}(y⃗, x_i)) and (-1)^r 2^{r(m-1)} Vol / (Δ_r(y) ∏_{k<r} 2^k/k!),
/// with m = τ2 - τ1 and Δ_r(y) = det[y_i^{j-1}].
pub fn fay_identity(tau1: i32, x: &[f64], tau2: i32, y: &[f64]) -> Result<(f64, f64)> {
    let r = y.len();
    if x.len() != r {
        return Err(Error::SizeMismatch(format!("need |x| = |y|, got {} and {r}", x.len())));
    }
    let mut gm = Vec::with_capacity(r * r);
    for &xi in x {
        gm.extend(solve_g(tau1, xi, tau2, y)?);
    }
    let lhs = linalg::det(r, &gm);
    let vol = volume_det(
        tau1,
        &LevelConfig { tau: tau1, points: x.to_vec() },
        tau2,
        &LevelConfig { tau: tau2, points: y.to_vec() },
    )?;
    let m = tau2 - tau1;
    let lead: f64 = (0..r).map(|k| 2f64.powi(k as i32) / factorial(k as u32)).product();
    let rhs = sign_pow(r) * 2f64.powi(r as i32 * (m - 1)) * vol / (linalg::vandermonde(y) * lead);
    Ok((lhs, rhs))
}

/// Step-function determinant det[H^m(2(y_i - x_j))] (used in tests of the
/// Fay identity).
pub fn heaviside_block_det(m: i32, x: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let mut a = Vec::with_capacity(n * n);
    for &yi in y {
        a.extend(x.iter().map(|&xj| heaviside_pow(m, 2.0 * (yi - xj))));
    }
    linalg::det(n, &a)
}

/// ∫ p(τ, x) dx over ordered configurations, for levels with one or two
/// particles. The integrand is symmetric, so the two-particle case is half the
/// integral over the square. Composite Gauss-Legendre on [-12, 12].
pub fn one_level_mass(k: &DtacKernel, tau: i32) -> Result<f64> {
    let p = k.params();
    let n = level_size(p.r, p.rho, tau)?;
    let (gx, gw) = crate::special_functions::gauss_legendre(20);
    let (a, b, panels) = (-12.0, 12.0, 48);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * gx.len());
    for q in 0..panels {
        let mid = a + (q as f64 + 0.5) * h;
        nodes.extend(gx.iter().zip(&gw).map(|(s, w)| (mid + 0.5 * h * s, 0.5 * h * w)));
    }
    match n {
        1 => nodes.iter().try_fold(0.0, |acc, &(x, w)| {
            Ok(acc + w * density_prefactor_d(k, &DensityRequest::one_level(tau, vec![x]))?)
        }),
        2 => {
            let mut total = 0.0;
            for (i, &(x1, w1)) in nodes.iter().enumerate() {
                // lower triangle only, diagonal counted at half weight
                for &(x2, w2) in &nodes[..=i] {
                    let f = density_prefactor_d(k, &DensityRequest::one_level(tau, vec![x1, x2]))?;
                    let wt = if x1 == x2 { 0.5 } else { 1.0 };
                    total += wt * w1 * w2 * f;
                }
            }
            Ok(total)
        }
        _ => Err(Error::Intractable(format!("normalization with {n} particles"))),
    }
}

/// Joint density of a whole interlacing chain: D(τ1, x; τ2, y) on valid
/// chains, 0 otherwise.
pub fn gibbs_joint_density(k: &DtacKernel, chain: &InterlacingChain) -> Result<f64> {
    if chain.levels.len() < 2 || !chain.is_valid() {
        return Ok(0.0);
    }
    let first = &chain.levels[0];
    let last = &chain.levels[chain.levels.len() - 1];
    let req = DensityRequest::two_level(first.tau, first.points.clone(), last.tau, last.points.clone());
    density_prefactor_d(k, &req)
}
