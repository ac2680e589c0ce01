//! The hexagon with two opposite cuts, its coordinate systems and the map
//! from lattice positions to kernel points.
//!
//! Horizontal lines m = 0..=N carry the red tiles as particles at integer
//! positions. A lozenge at lattice position (m, x) sits on oblique line
//! η = m + x with ξ = m - x - 1.

use serde::{Deserialize, Serialize};
use tacnode_core::tacnode_kernel::KernelPoint;

use crate::error::{Result, TilingError};

/// Edge and cut sizes of the region. `n` is the number of horizontal lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeometryDoc", into = "GeometryDoc")]
pub struct HexagonWithCuts {
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub m1: i64,
    pub m2: i64,
    pub n1: i64,
    pub n2: i64,
    pub n: i64,
}

/// Serialized form: the edges plus the derived r and ρ (ignored on input).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryDoc {
    b: i64,
    c: i64,
    d: i64,
    m1: i64,
    m2: i64,
    n1: i64,
    n2: i64,
    #[serde(default)]
    n: Option<i64>,
    #[serde(default)]
    r: Option<i64>,
    #[serde(default)]
    rho: Option<i64>,
}

impl TryFrom<GeometryDoc> for HexagonWithCuts {
    type Error = TilingError;

    fn try_from(doc: GeometryDoc) -> Result<Self> {
        let g = Self::with_lines(doc.b, doc.c, doc.d, doc.m1, doc.m2, doc.n1, doc.n2, doc.n.unwrap_or(doc.b + doc.c))?;
        if doc.r.is_some_and(|r| r != g.r()) || doc.rho.is_some_and(|rho| rho != g.rho()) {
            return Err(TilingError::InvalidGeometry("stored r or rho disagrees with the edges".into()));
        }
        Ok(g)
    }
}

impl From<HexagonWithCuts> for GeometryDoc {
    fn from(g: HexagonWithCuts) -> Self {
        Self {
            b: g.b,
            c: g.c,
            d: g.d,
            m1: g.m1,
            m2: g.m2,
            n1: g.n1,
            n2: g.n2,
            n: Some(g.n),
            r: Some(g.r()),
            rho: Some(g.rho()),
        }
    }
}

impl HexagonWithCuts {
    /// Region with the default N = b + c.
    pub fn new(b: i64, c: i64, d: i64, m1: i64, m2: i64, n1: i64, n2: i64) -> Result<Self> {
        Self::with_lines(b, c, d, m1, m2, n1, n2, b + c)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_lines(b: i64, c: i64, d: i64, m1: i64, m2: i64, n1: i64, n2: i64, n: i64) -> Result<Self> {
        let g = Self { b, c, d, m1, m2, n1, n2, n };
        for (name, v) in [("b", b), ("c", c), ("m1", m1), ("m2", m2), ("n1", n1), ("n2", n2), ("N", n)] {
            if v <= 0 {
                return Err(TilingError::InvalidGeometry(format!("{name} = {v} must be positive")));
            }
        }
        if d < 0 {
            return Err(TilingError::InvalidGeometry(format!("d = {d} must be non-negative")));
        }
        if b < d {
            return Err(TilingError::InvalidGeometry(format!("r = b - d = {} is negative", b - d)));
        }
        let (rho1, rho2) = (n1 - m1 + b - d, m2 - n2 + b - d);
        if rho1 != rho2 {
            return Err(TilingError::InvalidGeometry(format!(
                "strip width disagrees: n1 - m1 + b - d = {rho1} but m2 - n2 + b - d = {rho2}"
            )));
        }
        let rows_ok = |row: &[i64]| row.windows(2).all(|w| w[0] < w[1]);
        if !rows_ok(&g.bottom_row()) || !rows_ok(&g.top_row()) {
            return Err(TilingError::InvalidGeometry("boundary label ranges overlap".into()));
        }
        Ok(g)
    }

    pub fn r(&self) -> i64 {
        self.b - self.d
    }

    pub fn rho(&self) -> i64 {
        self.n1 - self.m1 + self.b - self.d
    }

    /// Red particles per horizontal line.
    pub fn particles_per_line(&self) -> usize {
        (self.d + self.n) as usize
    }

    /// Messages for a line count that does not match the boundary labels.
    pub fn consistency_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n != self.b + self.c {
            w.push(format!(
                "N = {} differs from b + c = {}; the boundary rows no longer close the hexagon",
                self.n,
                self.b + self.c
            ));
        }
        w
    }

    /// Fixed particles on line 0: the exterior block and the lower cut.
    pub fn bottom_row(&self) -> Vec<i64> {
        let (d, n, m1) = (self.d, self.n, self.m1);
        (-d - n..-d).chain(m1 - d..m1).collect()
    }

    /// Fixed particles on line N: exterior block, upper cut, right block.
    pub fn top_row(&self) -> Vec<i64> {
        let (c, d, n) = (self.c, self.d, self.n);
        let s = self.m1 + self.m2;
        (-d - n..-d - c).chain(self.n1 - c - d..self.n1 - c).chain(s - c..s).collect()
    }

    /// Whether the point (x, m) in the affine picture lies inside the region
    /// (open polygon, cuts removed).
    pub fn contains(&self, x: f64, m: f64) -> bool {
        let (b, c, d, n) = (self.b as f64, self.c as f64, self.d as f64, self.n as f64);
        let s = (self.m1 + self.m2) as f64;
        let m1 = self.m1 as f64;
        let n1 = self.n1 as f64;
        if !(0.0 < m && m < n) {
            return false;
        }
        let xl = if m <= c { -d - 0.5 - m } else { -d - c - 0.5 };
        let xr = if m <= b { s - 0.5 } else { s - 0.5 - (m - b) };
        if !(xl < x && x < xr) {
            return false;
        }
        if m < d && m1 - d - 0.5 < x && x < m1 - 0.5 - m {
            return false;
        }
        !(m > n - d && n1 - c - d - 0.5 + (n - m) < x && x < n1 - c - 0.5)
    }

    /// Oblique lines that can meet the region.
    pub fn eta_range(&self) -> (i64, i64) {
        (1 - self.d - self.n, self.m1 + self.m2 + self.n + 1)
    }

    /// Anchor (η0, ξ0) = (m1, N - m1 - 1) of the kernel coordinates.
    pub fn anchor(&self) -> (i64, i64) {
        (self.m1, self.n - self.m1 - 1)
    }

    /// First and last oblique line of the strip.
    pub fn strip_lines(&self) -> (i64, i64) {
        (self.m1, self.m1 + self.rho())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// (m, x) → (η, ξ) = (m + x, m - x - 1).
pub fn coords_lozenge_to_oblique(m: i64, x: i64) -> (i64, i64) {
    (m + x, m - x - 1)
}

/// Inverse of [`coords_lozenge_to_oblique`]; None when η + ξ is even.
pub fn coords_oblique_to_lozenge(eta: i64, xi: i64) -> Option<(i64, i64)> {
    let s = eta + xi + 1;
    (s % 2 == 0).then(|| (s / 2, (eta - xi - 1) / 2))
}

/// Scaling of the geometry with the cut size d → ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    pub d: i64,
    pub kappa: f64,
    pub r: i64,
    pub rho: i64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
}

/// Exact minus rounded value of each scaled edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingResiduals {
    pub c: f64,
    pub m1: f64,
    pub m2: f64,
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 1.0 && self.kappa < 3.0) {
            return Err(TilingError::InvalidGeometry(format!("kappa = {} must lie in (1, 3)", self.kappa)));
        }
        if self.d <= 0 || self.r < 0 || self.rho < self.r {
            return Err(TilingError::InvalidGeometry(format!(
                "need d > 0 and 0 <= r <= rho, got d = {}, r = {}, rho = {}",
                self.d, self.r, self.rho
            )));
        }
        for (name, v) in
            [("beta1", self.beta1), ("beta2", self.beta2), ("gamma1", self.gamma1), ("gamma2", self.gamma2)]
        {
            if !v.is_finite() {
                return Err(TilingError::InvalidGeometry(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// a = 2√(κ/(κ-1)).
    pub fn a(&self) -> f64 {
        2.0 * (self.kappa / (self.kappa - 1.0)).sqrt()
    }

    /// β = -β1 - β2.
    pub fn beta(&self) -> f64 {
        -self.beta1 - self.beta2
    }

    /// Rounded edges and the residuals left by rounding.
    pub fn geometry(&self) -> Result<(HexagonWithCuts, RoundingResiduals)> {
        self.validate()?;
        let (k, d) = (self.kappa, self.d as f64);
        let lead = (k + 1.0) / (k - 1.0);
        let spread = (k / (k - 1.0)).sqrt() * d.sqrt();
        let c_exact = k * d;
        let m1_exact = lead * (d + spread * self.beta1 + self.gamma1);
        let m2_exact = lead * (d + spread * self.beta2 + self.gamma2);
        let (c, m1, m2) = (c_exact.round() as i64, m1_exact.round() as i64, m2_exact.round() as i64);
        let b = self.d + self.r;
        let shift = self.rho - self.r;
        let g = HexagonWithCuts::new(b, c, self.d, m1, m2, m1 + shift, m2 - shift)?;
        let res = RoundingResiduals { c: c_exact - c as f64, m1: m1_exact - m1 as f64, m2: m2_exact - m2 as f64 };
        Ok((g, res))
    }

    /// Spacing in θ between neighbouring sites on one oblique line.
    pub fn theta_step(&self) -> f64 {
        2.0 * self.a() / ((self.kappa + 1.0) * (self.d as f64).sqrt())
    }
}

/// τ = η - η0 and θ = a(ξ - ξ0)/((κ+1)√d) - β2.
pub fn scale_to_kernel_point(sp: &ScalingParams, geom: &HexagonWithCuts, eta: i64, xi: i64) -> KernelPoint {
    let (eta0, xi0) = geom.anchor();
    let theta = sp.a() * (xi - xi0) as f64 / ((sp.kappa + 1.0) * (sp.d as f64).sqrt()) - sp.beta2;
    KernelPoint::new((eta - eta0) as i32, theta)
}

/// Nearest lattice line and coordinate for a kernel point (ξ rounded).
pub fn kernel_point_to_oblique(sp: &ScalingParams, geom: &HexagonWithCuts, p: KernelPoint) -> (i64, i64) {
    let (eta0, xi0) = geom.anchor();
    let xi = (p.theta + sp.beta2) * (sp.kappa + 1.0) * (sp.d as f64).sqrt() / sp.a();
    (eta0 + p.tau as i64, xi0 + xi.round() as i64)
}
