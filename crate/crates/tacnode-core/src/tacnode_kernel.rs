//! The GUE-minor kernel and the discrete tacnode kernel, evaluated both by
//! double contour integrals and by finite Hermite/Φ sums.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contours::QuadratureRule;
use crate::error::{Error, Result};
use crate::special_functions::{heaviside_pow, hermite, phi, HermiteVariant};
use crate::theta_integrals::{
    gamma_coeffs, theta_minus_from_e, theta_pm, theta_r, theta_r_from_q, GammaTable, KernelParams, Sign,
};

const DEFAULT_K_MAX: usize = 24;

/// A level τ and a continuum position θ on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub tau: i32,
    pub theta: f64,
}

impl KernelPoint {
    pub fn new(tau: i32, theta: f64) -> Self {
        Self { tau, theta }
    }

    /// Point with θ = -2x.
    pub fn from_x(tau: i32, x: f64) -> Self {
        Self { tau, theta: -2.0 * x }
    }

    pub fn x(&self) -> f64 {
        -0.5 * self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Series,
    Contour,
}

/// The step term H^{τ1-τ2}(2(x-y)) in x-variables. The factor 2 lives here only.
pub fn heaviside_term(tau1: i32, x: f64, tau2: i32, y: f64) -> f64 {
    heaviside_pow(tau1 - tau2, 2.0 * (x - y))
}

/// K^GUE by its finite sum: -H^{n1-n2}(x1-x2) + Σ_j H̃_{n1-1-j}(x1/2) Φ_{j-n2}(-x2/2).
pub fn kernel_gue_minor(n1: i32, x1: f64, n2: i32, x2: f64) -> f64 {
    let mut val = -heaviside_pow(n1 - n2, x1 - x2);
    for j in 0..n1.max(0) {
        val += hermite(HermiteVariant::Tilde, n1 - 1 - j, x1 / 2.0) * phi(j - n2, -x2 / 2.0);
    }
    val
}

/// K^GUE with the double integral over Γ_0 (u) and the line (v).
pub fn kernel_gue_minor_contour(
    circle: &QuadratureRule,
    line: &QuadratureRule,
    n1: i32,
    x1: f64,
    n2: i32,
    x2: f64,
) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, wu) in circle.nodes() {
        let a = wu * u.powi(-n1) * (-u * u + x1 * u).exp();
        for (v, wv) in line.nodes() {
            acc += a * wv * v.powi(n2) * (v * v - x2 * v).exp() / (v - u);
        }
    }
    if !acc.re.is_finite() {
        return Err(Error::NonFinite("GUE-minor double integral".into()));
    }
    Ok(acc.re - heaviside_pow(n1 - n2, x1 - x2))
}

/// Θ tables on the node grids used by the contour route.
#[derive(Debug)]
struct ContourTables {
    circle2: QuadratureRule,
    // Θ_r(u_i, v_j), u on the circle, v on the line
    theta_cl: Vec<Complex64>,
    // Θ^+_{r-1}(u_i, v_j), both on the line; empty when r = 1
    theta_plus_ll: Vec<Complex64>,
    // Θ^-_{r+1}(u_i, v_j), u on the circle, v on the inner circle
    theta_minus_cc: Vec<Complex64>,
}

/// Which of the five pieces of the contour form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Gue,
    L1,
    L2,
    L3,
    L4,
}

/// The discrete tacnode kernel for fixed (r, ρ, β) with its cached tables.
#[derive(Debug)]
pub struct DtacKernel {
    params: KernelParams,
    gamma: GammaTable,
    tables: OnceLock<ContourTables>,
}

/// Coefficients C_{k,α} for a fixed level τ1 and the functions G^{(τ1)}.
#[derive(Debug, Clone, PartialEq)]
pub struct GCoeffs {
    pub tau1: i32,
    /// c[k][α], k < r, α < τ1 - ρ
    pub c: Vec<Vec<f64>>,
    gamma_tilde: Vec<Vec<f64>>,
    beta: f64,
}

impl GCoeffs {
    /// G^{(τ1)}_{τ1-ρ+k}(x).
    pub fn g(&self, k: usize, x: f64) -> f64 {
        let mut val = 0.0;
        for (alpha, c) in self.c[k].iter().enumerate() {
            val += c * hermite(HermiteVariant::Tilde, alpha as i32, x);
        }
        for (i, gt) in self.gamma_tilde[k].iter().enumerate() {
            val += gt * phi(self.tau1 - i as i32 - 1, x + self.beta / 2.0);
        }
        val
    }
}

impl DtacKernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        let gamma = gamma_coeffs(&params, DEFAULT_K_MAX)?;
        Ok(Self { params, gamma, tables: OnceLock::new() })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn gamma(&self) -> &GammaTable {
        &self.gamma
    }

    pub fn g_coeffs(&self, tau1: i32) -> Result<GCoeffs> {
        let r = self.params.r;
        let above = (tau1 - self.params.rho).max(0) as usize;
        let extended;
        let table = if above > self.gamma.k_max + 1 {
            extended = gamma_coeffs(&self.params, above)?;
            &extended
        } else {
            &self.gamma
        };
        let c = (0..r).map(|k| (0..above).map(|alpha| table.series_coeff(k, above - alpha - 1)).collect()).collect();
        Ok(GCoeffs { tau1, c, gamma_tilde: self.gamma.gamma_tilde.clone(), beta: self.params.beta })
    }

    fn supported(&self, t1: i32, t2: i32) -> bool {
        let rho = self.params.rho;
        (t1 >= rho && t2 >= rho) || ((0..=rho).contains(&t1) && (0..=rho).contains(&t2))
    }

    /// Hermite/Φ series form; valid for both levels ≥ ρ or both in [0, ρ].
    pub fn series(&self, p1: KernelPoint, p2: KernelPoint) -> Result<f64> {
        let (t1, t2) = (p1.tau, p2.tau);
        if !self.supported(t1, t2) {
            return Err(Error::Unsupported(format!("levels ({t1}, {t2}) straddle the strip boundary")));
        }
        let rho = self.params.rho;
        let (x, y) = (p1.x(), p2.x());
        let mut val = -heaviside_term(t1, x, t2, y);
        for alpha in 0..(t1 - rho).max(0) {
            val += hermite(HermiteVariant::Tilde, alpha, x) * phi(t1 - t2 - alpha - 1, -y);
        }
        let g = self.g_coeffs(t1)?;
        for k in 0..self.params.r {
            val += g.g(k, x) * phi(rho - t2 - k as i32 - 1, -y);
        }
        Ok(val)
    }

    /// The L1 term as the finite sum Σ C_{k,α} H̃_α(x) Φ_{ρ-τ2-k-1}(-y).
    pub fn series_l1(&self, p1: KernelPoint, p2: KernelPoint) -> Result<f64> {
        let g = self.g_coeffs(p1.tau)?;
        let (x, y) = (p1.x(), p2.x());
        let mut val = 0.0;
        for (k, row) in g.c.iter().enumerate() {
            let f = phi(self.params.rho - p2.tau - k as i32 - 1, -y);
            for (alpha, c) in row.iter().enumerate() {
                val += c * hermite(HermiteVariant::Tilde, alpha as i32, x) * f;
            }
        }
        Ok(val)
    }

    fn tables(&self) -> &ContourTables {
        self.tables.get_or_init(|| self.build_tables())
    }

    fn build_tables(&self) -> ContourTables {
        let p = &self.params;
        let r = p.r;
        let (circle, line) = (&p.circle, &p.line);
        let nc = circle.len();
        let circle2 = QuadratureRule::circle_with_phase(0.7 * circle_radius(circle), nc, PI / nc as f64);

        let mut theta_cl = Vec::with_capacity(nc * line.len());
        for &u in &circle.points {
            let q = p.cauchy_moments(u, 2 * r - 1);
            for &v in &line.points {
                theta_cl.push(theta_r_from_q(p, &q, v - u));
            }
        }

        let mut theta_plus_ll = Vec::new();
        if r > 1 {
            theta_plus_ll.reserve(line.len() * line.len());
            for &u in &line.points {
                for &v in &line.points {
                    theta_plus_ll.push(theta_pm(p, Sign::Plus, u, v).expect("plus form has no poles"));
                }
            }
        }

        let n = r + 1;
        let qa: Vec<Vec<Complex64>> = circle.points.iter().map(|&u| p.cauchy_moments(u, 2 * n - 1)).collect();
        let qb: Vec<Vec<Complex64>> = circle2.points.iter().map(|&v| p.cauchy_moments(v, 2 * n - 1)).collect();
        let mut theta_minus_cc = Vec::with_capacity(nc * nc);
        for (ui, qu) in circle.points.iter().zip(&qa) {
            for (vi, qv) in circle2.points.iter().zip(&qb) {
                let e: Vec<Complex64> = qu.iter().zip(qv).map(|(a, b)| (a - b) / (vi - ui)).collect();
                theta_minus_cc.push(theta_minus_from_e(n, &e));
            }
        }
        ContourTables { circle2, theta_cl, theta_plus_ll, theta_minus_cc }
    }

    /// The five pieces K^GUE, L1, .., L4 of the contour form, as complex sums.
    pub fn contour_terms(&self, p1: KernelPoint, p2: KernelPoint) -> Result<[Complex64; 5]> {
        let p = &self.params;
        let tb = self.tables();
        let (rho, beta, r) = (p.rho, p.beta, p.r);
        let (t1, th1, t2, th2) = (p1.tau, p1.theta, p2.tau, p2.theta);
        let t00 = p.theta00();
        let (circle, line, circle2) = (&p.circle, &p.line, &tb.circle2);
        let nl = line.len();
        let zero = Complex64::new(0.0, 0.0);

        let gue = Complex64::new(kernel_gue_minor_contour(circle, line, t1 - rho, -th1, t2 - rho, -th2)?, 0.0);

        // L1 and L3 share the circle × line grid.
        let a1: Vec<Complex64> = circle.nodes().map(|(u, w)| w * u.powi(rho - t1) * (-u * u - th1 * u).exp()).collect();
        let b1: Vec<Complex64> = line.nodes().map(|(v, w)| w * v.powi(t2 - rho) * (v * v + th2 * v).exp()).collect();
        let a3: Vec<Complex64> =
            circle.nodes().map(|(u, w)| w * u.powi(t2) * (-u * u + (th2 - beta) * u).exp()).collect();
        let b3: Vec<Complex64> =
            line.nodes().map(|(v, w)| w * v.powi(-t1) * (v * v - (th1 - beta) * v).exp()).collect();
        let (mut l1, mut l3) = (zero, zero);
        for (i, &u) in circle.points.iter().enumerate() {
            let (mut s1, mut s3) = (zero, zero);
            for (j, &v) in line.points.iter().enumerate() {
                let th = tb.theta_cl[i * nl + j] / t00;
                let inv = (v - u).inv();
                s1 += b1[j] * inv * (th - 1.0);
                s3 += b3[j] * inv * th;
            }
            l1 += a1[i] * s1;
            l3 += a3[i] * s3;
        }

        let a2: Vec<Complex64> =
            line.nodes().map(|(u, w)| w * u.powi(-t1) * (u * u - (th1 - beta) * u).exp()).collect();
        let mut l2 = zero;
        if r == 1 {
            let sb: Complex64 = b1.iter().sum();
            l2 = a2.iter().sum::<Complex64>() * sb;
        } else {
            for (i, a) in a2.iter().enumerate() {
                let row = &tb.theta_plus_ll[i * nl..(i + 1) * nl];
                let s: Complex64 = row.iter().zip(&b1).map(|(t, b)| t * b).sum();
                l2 += a * s;
            }
        }
        l2 *= r as f64 / t00;

        let b4: Vec<Complex64> =
            circle2.nodes().map(|(v, w)| w * v.powi(t2) * (-v * v + (th2 - beta) * v).exp()).collect();
        let nc2 = circle2.len();
        let mut l4 = zero;
        for (i, a) in a1.iter().enumerate() {
            let row = &tb.theta_minus_cc[i * nc2..(i + 1) * nc2];
            let s: Complex64 = row.iter().zip(&b4).map(|(t, b)| t * b).sum();
            l4 += a * s;
        }
        l4 *= -1.0 / ((r + 1) as f64 * t00);

        let terms = [gue, l1, l2, l3, l4];
        if terms.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("contour kernel terms".into()));
        }
        Ok(terms)
    }

    /// Contour form with its imaginary residue.
    pub fn contour_complex(&self, p1: KernelPoint, p2: KernelPoint) -> Result<Complex64> {
        Ok(self.contour_terms(p1, p2)?.iter().sum())
    }

    pub fn contour(&self, p1: KernelPoint, p2: KernelPoint) -> Result<f64> {
        Ok(self.contour_complex(p1, p2)?.re)
    }

    /// Series where supported, contour elsewhere.
    pub fn eval(&self, p1: KernelPoint, p2: KernelPoint) -> Result<(f64, Route)> {
        if self.supported(p1.tau, p2.tau) {
            Ok((self.series(p1, p2)?, Route::Series))
        } else {
            Ok((self.contour(p1, p2)?, Route::Contour))
        }
    }

    pub fn eval_route(&self, p1: KernelPoint, p2: KernelPoint, route: Route) -> Result<f64> {
        match route {
            Route::Series => self.series(p1, p2),
            Route::Contour => self.contour(p1, p2),
        }
    }

    /// L̃(τ1,x;τ2,y) = e^{y²/2} L(τ1,-2x;τ2,-2y) e^{-x²/2}.
    pub fn ltilde(&self, tau1: i32, x: f64, tau2: i32, y: f64, route: Route) -> Result<f64> {
        let l = self.eval_route(KernelPoint::from_x(tau1, x), KernelPoint::from_x(tau2, y), route)?;
        Ok((0.5 * y * y).exp() * l * (-0.5 * x * x).exp())
    }

    /// Integrand of one contour term at a single node pair, assembled from
    /// the Θ functions directly (no tables). Weights are not included.
    pub fn term_integrand(
        &self,
        term: Term,
        p1: KernelPoint,
        p2: KernelPoint,
        u: Complex64,
        v: Complex64,
    ) -> Result<Complex64> {
        let p = &self.params;
        let (rho, beta, r) = (p.rho, p.beta, p.r as f64);
        let (t1, th1, t2, th2) = (p1.tau, p1.theta, p2.tau, p2.theta);
        let t00 = p.theta00();
        let base = || v.powi(t2 - rho) * u.powi(rho - t1) * (-u * u - th1 * u).exp() * (v * v + th2 * v).exp();
        Ok(match term {
            Term::Gue => base() / (v - u),
            Term::L1 => base() / (v - u) * (theta_r(p, u, v)? - t00) / t00,
            Term::L2 => {
                r * v.powi(t2 - rho)
                    * u.powi(-t1)
                    * (u * u - (th1 - beta) * u).exp()
                    * (v * v + th2 * v).exp()
                    * theta_pm(p, Sign::Plus, u, v)?
                    / t00
            }
            Term::L3 => {
                u.powi(t2)
                    * v.powi(-t1)
                    * (-u * u + (th2 - beta) * u).exp()
                    * (v * v - (th1 - beta) * v).exp()
                    * theta_r(p, u, v)?
                    / ((v - u) * t00)
            }
            Term::L4 => {
                -1.0 / (r + 1.0)
                    * v.powi(t2)
                    * u.powi(rho - t1)
                    * (-u * u - th1 * u).exp()
                    * (-v * v + (th2 - beta) * v).exp()
                    * theta_pm(p, Sign::Minus, u, v)?
                    / t00
            }
        })
    }

    /// Nodes of the inner circle used by the L4 term.
    pub fn inner_circle(&self) -> QuadratureRule {
        self.tables().circle2.clone()
    }
}

fn circle_radius(rule: &QuadratureRule) -> f64 {
    rule.points.first().map_or(0.5, |z| z.norm())
}

/// The point pair related to (p1, p2) by the involution
/// (τ1,θ1;τ2,θ2) ↦ (ρ-τ2, β-θ2; ρ-τ1, β-θ1).
pub fn involution(params: &KernelParams, p1: KernelPoint, p2: KernelPoint) -> (KernelPoint, KernelPoint) {
    (
        KernelPoint::new(params.rho - p2.tau, params.beta - p2.theta),
        KernelPoint::new(params.rho - p1.tau, params.beta - p1.theta),
    )
}

pub fn kernel_dtac_contour(k: &DtacKernel, p1: KernelPoint, p2: KernelPoint) -> Result<f64> {
    k.contour(p1, p2)
}

pub fn kernel_dtac_series(k: &DtacKernel, p1: KernelPoint, p2: KernelPoint) -> Result<f64> {
    k.series(p1, p2)
}

pub fn kernel_ltilde(k: &DtacKernel, tau1: i32, x: f64, tau2: i32, y: f64) -> Result<f64> {
    let route = if k.supported(tau1, tau2) { Route::Series } else { Route::Contour };
    k.ltilde(tau1, x, tau2, y, route)
}
