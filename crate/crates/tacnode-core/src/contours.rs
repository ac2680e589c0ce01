//! Trapezoidal rules on the upward vertical line and the counterclockwise
//! circle, with the 1/(2πi) factor folded into the weights.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContourKind {
    VerticalLine { sigma: f64, halfwidth: f64, nodes: usize },
    Circle { radius: f64, nodes: usize, phase: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: ContourKind,
    pub points: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl QuadratureRule {
    /// Nodes σ + it on [-halfwidth, halfwidth]; dv/(2πi) = dt/(2π).
    pub fn vertical_line(sigma: f64, halfwidth: f64, nodes: usize) -> Self {
        assert!(sigma > 0.0 && nodes >= 2, "vertical line needs sigma > 0 and two nodes");
        let h = 2.0 * halfwidth / (nodes - 1) as f64;
        let points = (0..nodes).map(|k| Complex64::new(sigma, -halfwidth + k as f64 * h)).collect();
        let weights = vec![Complex64::new(h / (2.0 * PI), 0.0); nodes];
        Self { kind: ContourKind::VerticalLine { sigma, halfwidth, nodes }, points, weights }
    }

    pub fn circle(radius: f64, nodes: usize) -> Self {
        Self::circle_with_phase(radius, nodes, 0.0)
    }

    /// Circle rule rotated by `phase` radians; dz/(2πi) = z dφ/(2π).
    pub fn circle_with_phase(radius: f64, nodes: usize, phase: f64) -> Self {
        assert!(radius > 0.0 && nodes >= 1, "circle needs a positive radius");
        let points: Vec<Complex64> =
            (0..nodes).map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64 + phase)).collect();
        let weights = points.iter().map(|z| z / nodes as f64).collect();
        Self { kind: ContourKind::Circle { radius, nodes, phase }, points, weights }
    }

    pub fn default_line() -> Self {
        Self::vertical_line(1.0, 8.0, 513)
    }

    pub fn default_circle() -> Self {
        Self::circle(0.5, 128)
    }

    /// Same contour with twice the node count (line keeps the old nodes).
    pub fn doubled(&self) -> Self {
        match self.kind {
            ContourKind::VerticalLine { sigma, halfwidth, nodes } => {
                Self::vertical_line(sigma, halfwidth, 2 * nodes - 1)
            }
            ContourKind::Circle { radius, nodes, phase } => Self::circle_with_phase(radius, 2 * nodes, phase),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn check_finite(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn integrate_1d<F: Fn(Complex64) -> Complex64>(rule: &QuadratureRule, f: F) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (z, w) in rule.nodes() {
        acc += w * check_finite(f(z), "integrand")?;
    }
    Ok(acc)
}

/// Full tensor-product sum over up to four rules.
pub fn integrate_nd<F: Fn(&[Complex64]) -> Complex64>(rules: &[&QuadratureRule], f: F) -> Result<Complex64> {
    let k = rules.len();
    if k > 4 {
        return Err(Error::DimensionTooLarge(k));
    }
    let mut idx = vec![0usize; k];
    let mut point = vec![Complex64::new(0.0, 0.0); k];
    let mut acc = Complex64::new(0.0, 0.0);
    if rules.iter().any(|r| r.is_empty()) {
        return Ok(acc);
    }
    loop {
        let mut w = Complex64::new(1.0, 0.0);
        for d in 0..k {
            point[d] = rules[d].points[idx[d]];
            w *= rules[d].weights[idx[d]];
        }
        acc += w * check_finite(f(&point), "integrand")?;
        // odometer increment
        let mut d = k;
        loop {
            if d == 0 {
                return Ok(acc);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rules[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Φ_n(η) by direct quadrature of e^{v²+2ηv} v^{-n-1} along the line.
pub fn phi_by_contour(rule: &QuadratureRule, n: i32, eta: f64) -> Result<f64> {
    integrate_1d(rule, |v| (v * v + 2.0 * eta * v).exp() * v.powi(-n - 1)).map(|z| z.re)
}
