//! Interlacing cones between two levels: particle counts, the determinant
//! volume formula, independent volume oracles and a uniform chain sampler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::special_functions::{gauss_legendre, heaviside_pow, hermite, HermiteVariant};
use crate::theta_integrals::KernelParams;

const MAX_CHAIN: i32 = 4;
const MAX_SIZE: usize = 3;
const MAX_REJECTION_TRIES: u64 = 50_000_000;

/// Particle positions on one level, stored largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub tau: i32,
    pub points: Vec<f64>,
}

impl LevelConfig {
    /// Sorts the points largest first.
    pub fn new(tau: i32, mut points: Vec<f64>) -> Self {
        points.sort_by(|a, b| b.total_cmp(a));
        Self { tau, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_ordered(&self) -> bool {
        self.points.windows(2).all(|w| w[0] >= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlacingChain {
    pub levels: Vec<LevelConfig>,
}

impl InterlacingChain {
    /// Consecutive levels, each interlacing the next.
    pub fn is_valid(&self) -> bool {
        self.levels.iter().all(LevelConfig::is_ordered)
            && self.levels.windows(2).all(|w| w[1].tau == w[0].tau + 1 && interlaces(&w[0].points, &w[1].points))
    }
}

/// n_τ = (τ-ρ)_+ + r for τ ≥ 0.
pub fn level_size(r: usize, rho: i32, tau: i32) -> Result<usize> {
    if tau < 0 {
        return Err(Error::NegativeLevel(tau));
    }
    Ok((tau - rho).max(0) as usize + r)
}

pub fn count_particles(params: &KernelParams, tau: i32) -> Result<usize> {
    level_size(params.r, params.rho, tau)
}

/// z ≺ u for largest-first vectors with |u| ∈ {|z|, |z|+1}:
/// z_i ≤ u_i and u_{i+1} ≤ z_i.
pub fn interlaces(z: &[f64], u: &[f64]) -> bool {
    if u.len() != z.len() && u.len() != z.len() + 1 {
        return false;
    }
    z.iter().enumerate().all(|(i, &zi)| zi <= u[i] && u.get(i + 1).is_none_or(|&next| next <= zi))
}

fn check_sizes(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<()> {
    if tau2 <= tau1 {
        return Err(Error::SizeMismatch(format!("need tau1 < tau2, got {tau1} and {tau2}")));
    }
    let (n1, n2) = (x.len(), y.len());
    if n2 < n1 || (n2 - n1) as i32 > tau2 - tau1 {
        return Err(Error::SizeMismatch(format!("sizes {n1} -> {n2} cannot be joined over {} levels", tau2 - tau1)));
    }
    if !x.is_ordered() || !y.is_ordered() {
        return Err(Error::SizeMismatch("levels must be stored largest first".into()));
    }
    Ok(())
}

/// Determinant volume: rows i over y, columns H^{τ2-τ1}(y_i - x_j) followed by
/// H̄_{n2-n1-1}(y_i), .., H̄_0(y_i).
pub fn volume_det(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<f64> {
    check_sizes(tau1, x, tau2, y)?;
    let (n1, n2) = (x.len(), y.len());
    let gap = tau2 - tau1;
    let mut m = Vec::with_capacity(n2 * n2);
    for &yi in &y.points {
        for &xj in &x.points {
            m.push(heaviside_pow(gap, yi - xj));
        }
        for k in 0..n2 - n1 {
            m.push(hermite(HermiteVariant::Bar, (n2 - n1 - 1 - k) as i32, yi));
        }
    }
    Ok(linalg::det(n2, &m))
}

/// Same volume with the H̄ columns moved first in ascending order.
pub fn volume_det_reordered(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<f64> {
    check_sizes(tau1, x, tau2, y)?;
    let (n1, n2) = (x.len(), y.len());
    let gap = tau2 - tau1;
    let mut m = Vec::with_capacity(n2 * n2);
    for &yi in &y.points {
        for k in 0..n2 - n1 {
            m.push(hermite(HermiteVariant::Bar, k as i32, yi));
        }
        for &xj in &x.points {
            m.push(heaviside_pow(gap, yi - xj));
        }
    }
    let k = n2 - n1;
    let sign = if (k * (n2 + n1 - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * linalg::det(n2, &m))
}

/// Sizes of levels τ1..=τ2; growth happens on the last n2-n1 steps.
fn chain_sizes(gap: i32, n1: usize, n2: usize) -> Vec<usize> {
    let g = (n2 - n1) as i32;
    (0..=gap).map(|k| n1 + (k - (gap - g)).max(0) as usize).collect()
}

/// Tight per-coordinate bounds for all levels of the cone, or None if the
/// interlacing inequalities cannot hold.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBounds {
    pub lo: Vec<Vec<f64>>,
    pub hi: Vec<Vec<f64>>,
}

impl ChainBounds {
    pub fn box_volume(&self) -> f64 {
        let k = self.lo.len();
        (1..k.saturating_sub(1))
            .map(|t| self.lo[t].iter().zip(&self.hi[t]).map(|(l, h)| (h - l).max(0.0)).product::<f64>())
            .product()
    }
}

pub fn chain_bounds(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<Option<ChainBounds>> {
    check_sizes(tau1, x, tau2, y)?;
    let sizes = chain_sizes(tau2 - tau1, x.len(), y.len());
    let last = sizes.len() - 1;
    let mut lo: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![f64::NEG_INFINITY; n]).collect();
    let mut hi: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![f64::INFINITY; n]).collect();
    lo[0].clone_from(&x.points);
    hi[0].clone_from(&x.points);
    lo[last].clone_from(&y.points);
    hi[last].clone_from(&y.points);
    // Each constraint is a ≤ b between two coordinates; relax until stable.
    let mut edges = Vec::new();
    for t in 0..last {
        for i in 0..sizes[t] {
            edges.push(((t, i), (t + 1, i)));
            if i + 1 < sizes[t + 1] {
                edges.push(((t + 1, i + 1), (t, i)));
            }
        }
    }
    for _ in 0..=edges.len() {
        let mut changed = false;
        for &((ta, ia), (tb, ib)) in &edges {
            if lo[ta][ia] > lo[tb][ib] {
                lo[tb][ib] = lo[ta][ia];
                changed = true;
            }
            if hi[tb][ib] < hi[ta][ia] {
                hi[ta][ia] = hi[tb][ib];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let feasible = lo.iter().flatten().zip(hi.iter().flatten()).all(|(l, h)| l <= h);
    Ok(feasible.then_some(ChainBounds { lo, hi }))
}

/// Whether any chain joins x to y.
pub fn is_feasible(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<bool> {
    Ok(chain_bounds(tau1, x, tau2, y)?.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMethod {
    RecursiveQuadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

fn check_desk_scale(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<()> {
    if tau2 - tau1 > MAX_CHAIN || x.len() > MAX_SIZE || y.len() > MAX_SIZE {
        return Err(Error::Intractable(format!(
            "chain length {} with sizes {} -> {} exceeds the oracle limits",
            tau2 - tau1,
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Volume by an independent route; returns (value, standard error).
pub fn volume_oracle(
    tau1: i32,
    x: &LevelConfig,
    tau2: i32,
    y: &LevelConfig,
    method: VolumeMethod,
) -> Result<(f64, f64)> {
    check_sizes(tau1, x, tau2, y)?;
    check_desk_scale(tau1, x, tau2, y)?;
    let Some(bounds) = chain_bounds(tau1, x, tau2, y)? else {
        return Ok((0.0, 0.0));
    };
    match method {
        VolumeMethod::RecursiveQuadrature => Ok((nested_integral(x, y, &bounds, &|_| 1.0, 0), 0.0)),
        VolumeMethod::MonteCarlo { samples, seed } => {
            use rand::SeedableRng;
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            Ok(monte_carlo(&mut rng, x, y, &bounds, samples))
        }
    }
}

/// Expected sum of the coordinates on the level just below y, under the
/// uniform law on the cone, by nested quadrature.
pub fn top_level_mean(tau1: i32, x: &LevelConfig, tau2: i32, y: &LevelConfig) -> Result<f64> {
    check_sizes(tau1, x, tau2, y)?;
    check_desk_scale(tau1, x, tau2, y)?;
    if tau2 - tau1 < 2 {
        return Err(Error::SizeMismatch("need at least one interior level".into()));
    }
    let bounds = chain_bounds(tau1, x, tau2, y)?.ok_or(Error::EmptyPolytope)?;
    let vol = nested_integral(x, y, &bounds, &|_| 1.0, 0);
    if vol <= 0.0 {
        return Err(Error::EmptyPolytope);
    }
    let weighted = nested_integral(x, y, &bounds, &|z: &[f64]| z.iter().sum(), 1);
    Ok(weighted / vol)
}

// Nested integration: V_1(u) = 1{x ≺ u}, V_{t+1}(w) = ∫_{z ≺ w} V_t(z) dz, with
// every coordinate interval split at the data values so the integrand is a
// polynomial on each piece and Gauss-Legendre is exact.
fn nested_integral(
    x: &LevelConfig,
    y: &LevelConfig,
    b: &ChainBounds,
    top_weight: &dyn Fn(&[f64]) -> f64,
    extra_deg: usize,
) -> f64 {
    let last = b.lo.len() - 1;
    if last == 1 {
        return if interlaces(&x.points, &y.points) { 1.0 } else { 0.0 };
    }
    let mut breaks: Vec<f64> = x.points.iter().chain(&y.points).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let ctx = Nested { x, b, breaks, top_weight, extra_deg, last };
    ctx.level(last, &y.points)
}

struct Nested<'a> {
    x: &'a LevelConfig,
    b: &'a ChainBounds,
    breaks: Vec<f64>,
    top_weight: &'a dyn Fn(&[f64]) -> f64,
    extra_deg: usize,
    last: usize,
}

impl Nested<'_> {
    // Value of V at level t (index into the chain) with coordinates w.
    fn level(&self, t: usize, w: &[f64]) -> f64 {
        if t == 1 {
            return if interlaces(&self.x.points, w) { 1.0 } else { 0.0 };
        }
        let zl = t - 1;
        let n = self.b.lo[zl].len();
        let dims_below: usize = (1..zl).map(|s| self.b.lo[s].len()).sum();
        let deg = dims_below + if t == self.last { self.extra_deg } else { 0 };
        let (gx, gw) = gauss_legendre(deg / 2 + 1);
        // Per-coordinate node lists on the split intervals.
        let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut a = self.b.lo[zl][i];
            let mut c = self.b.hi[zl][i];
            if let Some(&next) = w.get(i + 1) {
                a = a.max(next);
            }
            c = c.min(w[i]);
            if c <= a {
                return 0.0;
            }
            let mut cuts = vec![a];
            cuts.extend(self.breaks.iter().copied().filter(|&v| v > a && v < c));
            cuts.push(c);
            let mut nodes = Vec::new();
            for seg in cuts.windows(2) {
                let (mid, half) = (0.5 * (seg[0] + seg[1]), 0.5 * (seg[1] - seg[0]));
                for (s, wt) in gx.iter().zip(&gw) {
                    nodes.push((mid + half * s, half * wt));
                }
            }
            axes.push(nodes);
        }
        let mut idx = vec![0usize; n];
        let mut z = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            for i in 0..n {
                let (p, wt) = axes[i][idx[i]];
                z[i] = p;
                weight *= wt;
            }
            let mut val = self.level(zl, &z);
            if t == self.last && val != 0.0 {
                val *= (self.top_weight)(&z);
            }
            total += weight * val;
            let mut d = n;
            loop {
                if d == 0 {
                    return total;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
}

fn draw_interior<R: Rng + ?Sized>(rng: &mut R, b: &ChainBounds, levels: &mut [Vec<f64>]) {
    for t in 1..levels.len() - 1 {
        for (i, z) in levels[t].iter_mut().enumerate() {
            let (l, h) = (b.lo[t][i], b.hi[t][i]);
            *z = if h > l { rng.random_range(l..h) } else { l };
        }
    }
}

fn chain_ok(levels: &[Vec<f64>]) -> bool {
    levels.windows(2).all(|w| interlaces(&w[0], &w[1]))
}

fn monte_carlo<R: Rng + ?Sized>(
    rng: &mut R,
    x: &LevelConfig,
    y: &LevelConfig,
    b: &ChainBounds,
    samples: u64,
) -> (f64, f64) {
    let mut levels: Vec<Vec<f64>> = b.lo.clone();
    let last = levels.len() - 1;
    levels[0].clone_from(&x.points);
    levels[last].clone_from(&y.points);
    if last == 1 {
        return (if chain_ok(&levels) { 1.0 } else { 0.0 }, 0.0);
    }
    let boxvol = b.box_volume();
    let mut hits = 0u64;
    for _ in 0..samples {
        draw_interior(rng, b, &mut levels);
        if chain_ok(&levels) {
            hits += 1;
        }
    }
    let f = hits as f64 / samples as f64;
    (boxvol * f, boxvol * (f * (1.0 - f) / samples as f64).sqrt())
}

/// Uniform sample from the cone of chains joining x to y, by rejection from
/// the tight bounding box.
pub fn sample_chain<R: Rng + ?Sized>(
    rng: &mut R,
    tau1: i32,
    x: &LevelConfig,
    tau2: i32,
    y: &LevelConfig,
) -> Result<InterlacingChain> {
    let b = chain_bounds(tau1, x, tau2, y)?.ok_or(Error::EmptyPolytope)?;
    let last = b.lo.len() - 1;
    let mut levels: Vec<Vec<f64>> = b.lo.clone();
    levels[0].clone_from(&x.points);
    levels[last].clone_from(&y.points);
    if last > 1 && b.box_volume() <= 0.0 {
        return Err(Error::EmptyPolytope);
    }
    for _ in 0..MAX_REJECTION_TRIES {
        draw_interior(rng, &b, &mut levels);
        if chain_ok(&levels) {
            let levels = levels
                .into_iter()
                .enumerate()
                .map(|(k, points)| LevelConfig { tau: tau1 + k as i32, points })
                .collect();
            return Ok(InterlacingChain { levels });
        }
        if last == 1 {
            break;
        }
    }
    Err(Error::EmptyPolytope)
}

/// Endpoints of a random chain from level τ1 to τ2 with the level sizes of
/// the (r, ρ) model. x is uniform on [-spread, spread]; each step up draws
/// every particle uniformly from its interlacing interval, with the open ends
/// extended by at most `spread`.
pub fn random_cone_endpoints<R: Rng + ?Sized>(
    rng: &mut R,
    r: usize,
    rho: i32,
    tau1: i32,
    tau2: i32,
    spread: f64,
) -> Result<(LevelConfig, LevelConfig)> {
    let n1 = level_size(r, rho, tau1)?;
    let x = LevelConfig::new(tau1, (0..n1).map(|_| rng.random_range(-spread..spread)).collect());
    let mut z = x.points.clone();
    for t in tau1 + 1..=tau2 {
        let n = level_size(r, rho, t)?;
        let u: Vec<f64> = (0..n)
            .map(|i| {
                let hi = if i == 0 { z[0] + spread } else { z[i - 1] };
                let lo = z.get(i).copied().unwrap_or(z[z.len() - 1] - spread);
                rng.random_range(lo..=hi)
            })
            .collect();
        z = u;
    }
    Ok((x, LevelConfig::new(tau2, z)))
}
