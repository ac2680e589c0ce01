//! Markov chain sampler for uniform lozenge tilings of the hexagon with cuts.
//!
//! A tiling is stored as its red tiles: on each horizontal line m = 0..=N a
//! sorted list of d + N integer positions, consecutive lines interlacing as
//! p_k ≤ p'_k < p_{k+1}. Lines 0 and N are fixed by the boundary, and the
//! cuts show up as particles that can never move.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tacnode_core::densities::{density, DensityRequest};
use tacnode_core::interlace_polytope::{interlaces, level_size};
use tacnode_core::special_functions::gauss_legendre;
use tacnode_core::tacnode_kernel::{DtacKernel, Route};
use tacnode_core::theta_integrals::KernelParams;

use crate::error::{Result, TilingError};
use crate::geometry::{scale_to_kernel_point, HexagonWithCuts, ScalingParams};

#[derive(Debug, Clone)]
pub struct TilingState {
    geometry: HexagonWithCuts,
    /// Lines stored back to back, each padded with a sentinel at both ends
    /// so the interval of a particle needs no bounds checks.
    pos: Vec<i64>,
    stride: usize,
    /// Flat index of every particle that moves in some tiling.
    movable: Vec<usize>,
    /// Heat-bath sweeps done so far; odd sweeps scan in reverse.
    scans: u64,
}

/// Two states are equal when they describe the same tiling.
impl PartialEq for TilingState {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.pos == other.pos
    }
}

impl Eq for TilingState {}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    geometry: HexagonWithCuts,
    lines: Vec<Vec<i64>>,
}

/// Lower bounds pushed up from the bottom row until stable: the pointwise
/// smallest family of interlacing lines. Untileable when the top row is not
/// reachable.
fn extremal(geom: &HexagonWithCuts, lowest: bool) -> Result<Vec<Vec<i64>>> {
    let n = geom.n as usize;
    let (bottom, top) = (geom.bottom_row(), geom.top_row());
    let k = bottom.len();
    let mut p = vec![if lowest { bottom.clone() } else { top.clone() }; n + 1];
    p[0] = bottom;
    p[n] = top;
    // The bound graph is acyclic in this order, so one pass suffices.
    if lowest {
        for j in 0..k {
            for m in 1..n {
                let mut lo = p[m - 1][j];
                if j > 0 {
                    lo = lo.max(p[m + 1][j - 1] + 1);
                }
                p[m][j] = lo;
            }
        }
    } else {
        for j in (0..k).rev() {
            for m in (1..n).rev() {
                let mut hi = p[m + 1][j];
                if j + 1 < k {
                    hi = hi.min(p[m - 1][j + 1] - 1);
                }
                p[m][j] = hi;
            }
        }
    }
    if !lines_interlace(&p) {
        return Err(TilingError::Untileable(format!(
            "no interlacing family joins the boundary rows (b={}, c={}, d={}, m1={}, m2={}, n1={}, n2={}, N={})",
            geom.b, geom.c, geom.d, geom.m1, geom.m2, geom.n1, geom.n2, geom.n
        )));
    }
    Ok(p)
}

fn lines_interlace(p: &[Vec<i64>]) -> bool {
    p.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        a.len() == b.len() && (0..a.len()).all(|j| a[j] <= b[j] && (j + 1 == a.len() || b[j] < a[j + 1]))
    })
}

/// The tiling with the smallest height function.
pub fn init_tiling(geom: &HexagonWithCuts) -> Result<TilingState> {
    let lo = extremal(geom, true)?;
    let hi = extremal(geom, false)?;
    let stride = geom.particles_per_line() + 2;
    let mut state = TilingState { geometry: *geom, pos: Vec::new(), stride, movable: Vec::new(), scans: 0 };
    state.set_lines(&lo);
    for m in 1..lo.len() - 1 {
        for j in 0..lo[m].len() {
            if lo[m][j] != hi[m][j] {
                state.movable.push(m * stride + j + 1);
            }
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    /// Propose a ±1 shift of one free particle (one hexagon rotation) and
    /// accept if the result is a tiling.
    Rotation,
    /// Resample every free particle uniformly over its allowed interval,
    /// scanning forward and backward on alternate sweeps.
    HeatBath,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub observable: String,
    pub tau_int: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub sweeps: u64,
    pub proposals: u64,
    pub accepted: u64,
    /// Fraction of proposals that changed the tiling.
    pub acceptance_rate: f64,
    pub autocorrelation: Vec<Autocorrelation>,
}

impl ChainStats {
    pub fn merge(&mut self, other: &ChainStats) {
        self.sweeps += other.sweeps;
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.acceptance_rate = if self.proposals == 0 { 0.0 } else { self.accepted as f64 / self.proposals as f64 };
        self.autocorrelation.extend(other.autocorrelation.iter().cloned());
    }
}

impl TilingState {
    pub fn geometry(&self) -> &HexagonWithCuts {
        &self.geometry
    }

    /// Red particle positions on line m, increasing.
    pub fn line(&self, m: usize) -> &[i64] {
        let start = m * self.stride + 1;
        &self.pos[start..start + self.stride - 2]
    }

    pub fn lines(&self) -> Vec<Vec<i64>> {
        (0..self.pos.len() / self.stride).map(|m| self.line(m).to_vec()).collect()
    }

    fn set_lines(&mut self, lines: &[Vec<i64>]) {
        // sentinels far enough out that ±1 never overflows
        let (lo, hi) = (i64::MIN / 4, i64::MAX / 4);
        self.pos.clear();
        for l in lines {
            self.pos.push(lo);
            self.pos.extend_from_slice(l);
            self.pos.push(hi);
        }
    }

    pub fn free_particles(&self) -> usize {
        self.movable.len()
    }

    /// Interval of positions for the particle at flat index i.
    #[inline]
    fn allowed(&self, i: usize) -> (i64, i64) {
        let s = self.stride;
        let lo = self.pos[i - s].max(self.pos[i + s - 1] + 1);
        let hi = self.pos[i + s].min(self.pos[i - s + 1] - 1);
        (lo, hi)
    }

    /// Boundary rows intact and all consecutive lines interlacing.
    pub fn is_valid(&self) -> bool {
        let lines = self.lines();
        let n = lines.len() - 1;
        lines[0] == self.geometry.bottom_row() && lines[n] == self.geometry.top_row() && lines_interlace(&lines)
    }

    /// Whether the unit square with lower-left lattice index (x, m) is a blue
    /// tile: it lies in the region and no red tile crosses it.
    fn is_blue(&self, x: i64, m: usize) -> bool {
        let below = self.line(m).partition_point(|&p| p <= x + 1);
        let above = self.line(m + 1).partition_point(|&p| p <= x);
        let xv = x as f64 + 0.5;
        let mf = m as f64;
        below == above
            && self.geometry.contains(xv + 1.0 / 3.0, mf + 1.0 / 3.0)
            && self.geometry.contains(xv + 2.0 / 3.0, mf + 2.0 / 3.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Snapshot { geometry: self.geometry, lines: self.lines() })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(s)?;
        let mut state = init_tiling(&snap.geometry)?;
        let k = state.stride - 2;
        if snap.lines.len() != state.geometry.n as usize + 1 || snap.lines.iter().any(|l| l.len() != k) {
            return Err(TilingError::InvalidGeometry("snapshot has the wrong shape".into()));
        }
        state.set_lines(&snap.lines);
        if !state.is_valid() {
            return Err(TilingError::InvalidGeometry("snapshot lines do not form a tiling".into()));
        }
        Ok(state)
    }

    /// SVG drawing in the triangular-lattice picture: red, blue and green
    /// lozenges assembled from their two triangles.
    pub fn to_svg(&self) -> String {
        let g = &self.geometry;
        let unit = 12.0;
        let h = 3f64.sqrt() / 2.0;
        let screen = |x: f64, m: f64| (unit * (x + 0.5 * m), unit * h * (g.n as f64 - m));
        let (xmin, xmax) = (-g.d - g.n - 2, g.m1 + g.m2 + 1);
        let (w0, _) = screen(xmin as f64, 0.0);
        let (w1, _) = screen(xmax as f64 + 1.0, g.n as f64);
        let mut body = String::new();
        for m in 0..g.n as usize {
            for x in xmin..=xmax {
                let xv = x as f64 + 0.5;
                let mf = m as f64;
                let blue = self.is_blue(x, m);
                // lower triangle (xv, m), (xv+1, m), (xv, m+1); upper one fills the square
                let tris = [
                    ([(xv, mf), (xv + 1.0, mf), (xv, mf + 1.0)], (1.0 / 3.0, 1.0 / 3.0), m),
                    ([(xv + 1.0, mf), (xv, mf + 1.0), (xv + 1.0, mf + 1.0)], (2.0 / 3.0, 2.0 / 3.0), m + 1),
                ];
                for (verts, (cx, cm), red_line) in tris {
                    if !g.contains(xv + cx, mf + cm) {
                        continue;
                    }
                    let red = self.line(red_line).binary_search(&(x + 1)).is_ok();
                    let colour = if blue {
                        "#3b6fd0"
                    } else if red {
                        "#d04a3b"
                    } else {
                        "#4caf50"
                    };
                    let pts: Vec<String> = verts
                        .iter()
                        .map(|&(a, b)| {
                            let (sx, sy) = screen(a, b);
                            format!("{:.2},{:.2}", sx - w0, sy)
                        })
                        .collect();
                    let _ = writeln!(
                        body,
                        r#"<polygon points="{}" fill="{colour}" stroke="{colour}" stroke-width="0.3"/>"#,
                        pts.join(" ")
                    );
                }
            }
        }
        let (width, height) = (w1 - w0, unit * h * g.n as f64);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.2} {height:.2}\">\n{body}</svg>\n"
        )
    }
}

/// One sweep: as many proposals as there are free particles.
pub fn mcmc_sweep<R: Rng + ?Sized>(state: &mut TilingState, rng: &mut R, kind: MoveKind) -> ChainStats {
    let total = state.movable.len();
    let mut accepted = 0u64;
    match kind {
        MoveKind::Rotation => {
            for _ in 0..total {
                let i = state.movable[rng.random_range(0..total)];
                let step = if rng.random_bool(0.5) { 1 } else { -1 };
                let (lo, hi) = state.allowed(i);
                let next = state.pos[i] + step;
                if (lo..=hi).contains(&next) {
                    state.pos[i] = next;
                    accepted += 1;
                }
            }
        }
        MoveKind::HeatBath => {
            let reverse = state.scans % 2 == 1;
            state.scans += 1;
            for i in 0..total {
                let i = state.movable[if reverse { total - 1 - i } else { i }];
                let (lo, hi) = state.allowed(i);
                let next = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                if next != state.pos[i] {
                    state.pos[i] = next;
                    accepted += 1;
                }
            }
        }
    }
    ChainStats {
        sweeps: 1,
        proposals: total as u64,
        accepted,
        acceptance_rate: if total == 0 { 0.0 } else { accepted as f64 / total as f64 },
        autocorrelation: Vec::new(),
    }
}

/// ξ-coordinates of the blue tiles on oblique line η, largest first.
pub fn extract_blue(state: &TilingState, eta: i64) -> Result<Vec<i64>> {
    let (lo, hi) = state.geometry.eta_range();
    if !(lo..=hi).contains(&eta) {
        return Err(TilingError::OutOfRange { eta, lo, hi });
    }
    let mut xi: Vec<i64> = (0..state.geometry.n as usize)
        .filter_map(|m| {
            let x = eta - m as i64 - 2;
            state.is_blue(x, m).then_some(m as i64 - x - 1)
        })
        .collect();
    xi.sort_unstable_by(|a, b| b.cmp(a));
    Ok(xi)
}

/// Integrated autocorrelation time with Geyer's initial positive sequence,
/// and the resulting effective sample size.
pub fn integrated_autocorrelation(series: &[f64]) -> (f64, f64) {
    let n = series.len();
    if n < 4 {
        return (1.0, n as f64);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return (1.0, n as f64);
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag).map(|i| (series[i] - mean) * (series[i + lag] - mean)).sum::<f64>() / (n as f64 * c0)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    let tau = tau.max(1.0);
    (tau, n as f64 / tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    pub levels: Vec<i32>,
    pub sweeps: u64,
    pub burnin: u64,
    /// Sweeps between recorded samples.
    #[serde(default = "default_thin")]
    pub thin: u64,
    /// Target bin width in θ; bins always hold a whole number of sites.
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Histogram window [-theta_max, theta_max].
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default = "default_move")]
    pub moves: MoveKind,
}

fn default_thin() -> u64 {
    1
}

fn default_bin_width() -> f64 {
    0.5
}

fn default_theta_max() -> f64 {
    6.0
}

fn default_move() -> MoveKind {
    MoveKind::HeatBath
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub tau: i32,
    pub theta_bin_lo: f64,
    pub theta_bin_hi: f64,
    /// Mean number of particles per sample in the bin.
    pub empirical: f64,
    /// Expected number from the limiting one-point density.
    pub theory: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub tau: i32,
    pub samples: u64,
    /// Half the L1 distance between the normalized histograms.
    pub tv_distance: f64,
    /// Largest gap between the cumulative histograms.
    pub ks_distance: f64,
    pub ess: f64,
    pub count_mismatches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<HistRow>,
    pub levels: Vec<LevelSummary>,
    pub stats: ChainStats,
    pub interlacing_violations: u64,
}

/// Raw counts of one or more chains; merging is a plain sum.
#[derive(Debug, Clone)]
struct Tally {
    counts: Vec<Vec<u64>>,
    samples: u64,
    count_mismatches: Vec<u64>,
    interlacing_violations: u64,
    means: Vec<Vec<f64>>,
    stats: ChainStats,
}

/// Site-aligned bins for one level: (first ξ, sites per bin, bin count).
struct Binning {
    xi_lo: i64,
    sites: i64,
    bins: usize,
}

impl Binning {
    fn new(sp: &ScalingParams, geom: &HexagonWithCuts, cfg: &ComparisonConfig, tau: i32) -> Self {
        let step = sp.theta_step();
        let sites = ((cfg.bin_width / step).round() as i64).max(1);
        // dots on line η have ξ of parity opposite to η
        let eta = geom.anchor().0 + tau as i64;
        let (_, xi0) = geom.anchor();
        let span = (cfg.theta_max / step).ceil() as i64;
        let centre = xi0 + ((sp.beta2 * (sp.kappa + 1.0) * (sp.d as f64).sqrt() / sp.a()).round() as i64);
        let mut xi_lo = centre - 2 * span;
        if (xi_lo + eta) % 2 == 0 {
            xi_lo -= 1;
        }
        let bins = ((4 * span) / (2 * sites)).max(1) as usize;
        Self { xi_lo, sites, bins }
    }

    fn bin_of(&self, xi: i64) -> Option<usize> {
        let k = (xi - self.xi_lo).div_euclid(2 * self.sites);
        (0..self.bins as i64).contains(&k).then_some(k as usize)
    }

    /// θ-edges of bin k (half a site beyond the outer dots).
    fn edges(&self, sp: &ScalingParams, geom: &HexagonWithCuts, tau: i32, k: usize) -> (f64, f64) {
        let eta = geom.anchor().0 + tau as i64;
        let first = self.xi_lo + 2 * self.sites * k as i64;
        let last = first + 2 * (self.sites - 1);
        let half = 0.5 * sp.theta_step();
        (
            scale_to_kernel_point(sp, geom, eta, first).theta - half,
            scale_to_kernel_point(sp, geom, eta, last).theta + half,
        )
    }
}

fn run_chain(
    sp: &ScalingParams,
    geom: &HexagonWithCuts,
    cfg: &ComparisonConfig,
    seed: u64,
) -> Result<(Tally, TilingState)> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut state = init_tiling(geom)?;
    let binnings: Vec<Binning> = cfg.levels.iter().map(|&t| Binning::new(sp, geom, cfg, t)).collect();
    let (r, rho) = (sp.r as usize, sp.rho as i32);
    let expected: Vec<usize> =
        cfg.levels.iter().map(|&t| level_size(r, rho, t)).collect::<std::result::Result<_, _>>()?;
    let mut tally = Tally {
        counts: binnings.iter().map(|b| vec![0; b.bins]).collect(),
        samples: 0,
        count_mismatches: vec![0; cfg.levels.len()],
        interlacing_violations: 0,
        means: vec![Vec::new(); cfg.levels.len()],
        stats: ChainStats::default(),
    };
    for _ in 0..cfg.burnin {
        tally.stats.merge(&mcmc_sweep(&mut state, &mut rng, cfg.moves));
    }
    let eta0 = geom.anchor().0;
    let thin = cfg.thin.max(1);
    for s in 0..cfg.sweeps {
        tally.stats.merge(&mcmc_sweep(&mut state, &mut rng, cfg.moves));
        if (s + 1) % thin != 0 {
            continue;
        }
        tally.samples += 1;
        let mut prev: Option<(i32, Vec<f64>)> = None;
        for (li, &tau) in cfg.levels.iter().enumerate() {
            let xi = extract_blue(&state, eta0 + tau as i64)?;
            if xi.len() != expected[li] {
                tally.count_mismatches[li] += 1;
            }
            let mut x = Vec::with_capacity(xi.len());
            let mut sum = 0.0;
            for &v in &xi {
                if let Some(k) = binnings[li].bin_of(v) {
                    tally.counts[li][k] += 1;
                }
                let theta = scale_to_kernel_point(sp, geom, eta0 + tau as i64, v).theta;
                sum += theta;
                x.push(-0.5 * theta);
            }
            tally.means[li].push(if xi.is_empty() { 0.0 } else { sum / xi.len() as f64 });
            // kernel coordinates x = -θ/2 are stored largest first after the flip
            x.reverse();
            if let Some((pt, px)) = &prev {
                if *pt + 1 == tau && !interlaces(px, &x) {
                    tally.interlacing_violations += 1;
                }
            }
            prev = Some((tau, x));
        }
    }
    Ok((tally, state))
}

/// One-point intensity in θ at level τ: density() when the level carries one
/// particle, the kernel diagonal otherwise.
fn intensity(k: &DtacKernel, n: usize, tau: i32, theta: f64) -> Result<f64> {
    let x = -0.5 * theta;
    let v = if n == 1 {
        0.5 * density(k, &DensityRequest::one_level(tau, vec![x]))?
    } else {
        k.ltilde(tau, x, tau, x, Route::Series)?
    };
    Ok(v)
}

fn summarize(
    sp: &ScalingParams,
    geom: &HexagonWithCuts,
    cfg: &ComparisonConfig,
    tallies: Vec<Tally>,
) -> Result<Comparison> {
    let kernel = DtacKernel::new(KernelParams::new(sp.r as usize, sp.rho as i32, sp.beta())?)?;
    let (gx, gw) = gauss_legendre(8);
    let mut stats = ChainStats::default();
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    let samples: u64 = tallies.iter().map(|t| t.samples).sum();
    let violations = tallies.iter().map(|t| t.interlacing_violations).sum();
    for t in &tallies {
        stats.merge(&t.stats);
    }
    for (li, &tau) in cfg.levels.iter().enumerate() {
        let binning = Binning::new(sp, geom, cfg, tau);
        let n = level_size(sp.r as usize, sp.rho as i32, tau)?;
        let mut ess = 0.0;
        let mut tau_int = 0.0;
        for t in &tallies {
            let (ti, e) = integrated_autocorrelation(&t.means[li]);
            ess += e;
            tau_int += ti / tallies.len() as f64;
        }
        stats.autocorrelation.push(Autocorrelation { observable: format!("mean_theta_tau_{tau}"), tau_int, ess });
        let (mut l1, mut cum_e, mut cum_t, mut ks) = (0.0, 0.0, 0.0, 0.0f64);
        for k in 0..binning.bins {
            let (lo, hi) = binning.edges(sp, geom, tau, k);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut theory = 0.0;
            for (s, w) in gx.iter().zip(&gw) {
                theory += half * w * intensity(&kernel, n, tau, mid + half * s)?;
            }
            let count: u64 = tallies.iter().map(|t| t.counts[li][k]).sum();
            let empirical = if samples == 0 { 0.0 } else { count as f64 / samples as f64 };
            let var = theory.max(0.0) * (1.0 - theory / n as f64).max(0.0) / ess.max(1.0);
            let z = if var > 0.0 { (empirical - theory) / var.sqrt() } else { 0.0 };
            l1 += (empirical - theory).abs();
            cum_e += empirical;
            cum_t += theory;
            ks = ks.max((cum_e - cum_t).abs() / n as f64);
            rows.push(HistRow { tau, theta_bin_lo: lo, theta_bin_hi: hi, empirical, theory, z });
        }
        levels.push(LevelSummary {
            tau,
            samples,
            tv_distance: 0.5 * l1 / n as f64,
            ks_distance: ks,
            ess,
            count_mismatches: tallies.iter().map(|t| t.count_mismatches[li]).sum(),
        });
    }
    Ok(Comparison { rows, levels, stats, interlacing_violations: violations })
}

/// Histograms of scaled blue positions against the limiting densities, from
/// a single chain seeded with `seed`.
pub fn empirical_vs_theory(sp: &ScalingParams, cfg: &ComparisonConfig, seed: u64) -> Result<Comparison> {
    empirical_vs_theory_chains(sp, cfg, &[seed])
}

/// Same comparison pooled over independent chains, one per seed, run in
/// parallel.
pub fn empirical_vs_theory_chains(sp: &ScalingParams, cfg: &ComparisonConfig, seeds: &[u64]) -> Result<Comparison> {
    Ok(empirical_vs_theory_with_states(sp, cfg, seeds)?.0)
}

/// Pooled comparison together with the final tiling of each chain.
pub fn empirical_vs_theory_with_states(
    sp: &ScalingParams,
    cfg: &ComparisonConfig,
    seeds: &[u64],
) -> Result<(Comparison, Vec<TilingState>)> {
    let (geom, _) = sp.geometry()?;
    if sp.r < 1 {
        return Err(TilingError::InvalidGeometry("the comparison needs r >= 1".into()));
    }
    let runs: Vec<(Tally, TilingState)> =
        seeds.par_iter().map(|&s| run_chain(sp, &geom, cfg, s)).collect::<Result<_>>()?;
    let (tallies, states): (Vec<Tally>, Vec<TilingState>) = runs.into_iter().unzip();
    Ok((summarize(sp, &geom, cfg, tallies)?, states))
}
