//! The five commands. Each writes its artifacts into the output directory
//! and returns the list of flagged rows or failed checks.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use tacnode_core::densities::{classify, density, factorization_check, one_level_mass, DensityRequest, Regime};
use tacnode_core::interlace_polytope::{volume_det, volume_det_reordered, volume_oracle, LevelConfig, VolumeMethod};
use tacnode_core::tacnode_kernel::{involution, DtacKernel, KernelPoint, Route};
use tacnode_core::Error as CoreError;
use tacnode_tiling::tiling_sim::{empirical_vs_theory_with_states, init_tiling, mcmc_sweep, ChainStats};

use crate::config::{LabConfig, SimulateSection};
use crate::error::{LabError, Result};
use crate::provenance::{fmt_f64, fmt_list, fmt_opt, write_csv, write_json, write_svg, Provenance};
use crate::suites::{self, majority_allowance, run_suite, SuiteResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    Kernel,
    Density,
    Volume,
    Verify,
    Simulate,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kernel => "kernel",
            Self::Density => "density",
            Self::Volume => "volume",
            Self::Verify => "verify",
            Self::Simulate => "simulate",
        }
    }
}

/// Flagged rows or failed checks; empty on success.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

pub struct RunContext<'a> {
    pub config: &'a LabConfig,
    pub config_text: &'a str,
    pub out: &'a Path,
    pub seed: u64,
    pub only: Option<&'a str>,
}

impl RunContext<'_> {
    fn provenance(&self, cmd: CommandKind) -> Provenance {
        Provenance::new(cmd.name(), self.config_text, self.seed)
    }
}

pub fn run(cmd: CommandKind, ctx: &RunContext) -> Result<Outcome> {
    if ctx.only.is_some() && cmd != CommandKind::Verify {
        return Err(LabError::config("--only", "only applies to verify"));
    }
    fs::create_dir_all(ctx.out).map_err(|e| LabError::io(ctx.out, e))?;
    match cmd {
        CommandKind::Kernel => cmd_kernel(ctx),
        CommandKind::Density => cmd_density(ctx),
        CommandKind::Volume => cmd_volume(ctx),
        CommandKind::Verify => cmd_verify(ctx),
        CommandKind::Simulate => cmd_simulate(ctx),
    }
}

struct KernelRow {
    p1: KernelPoint,
    p2: KernelPoint,
    route: &'static str,
    value: Option<f64>,
    contour: Option<f64>,
    series: Option<f64>,
    agreement: Option<f64>,
    involution: Option<f64>,
    status: String,
}

fn kernel_row(k: &DtacKernel, p1: KernelPoint, p2: KernelPoint, tol: f64) -> KernelRow {
    let contour = k.contour(p1, p2);
    let series = k.series(p1, p2);
    let (q1, q2) = involution(k.params(), p1, p2);
    let invol = match (&contour, k.contour(q1, q2)) {
        (Ok(a), Ok(b)) => Some((a - b).abs()),
        _ => None,
    };
    let agreement = match (&contour, &series) {
        (Ok(c), Ok(s)) => Some((c - s).abs()),
        _ => None,
    };
    let status = match (&contour, &series) {
        (Err(e), _) => format!("error: {e}"),
        (_, Err(CoreError::Unsupported(_))) => "unsupported".into(),
        (_, Err(e)) => format!("error: {e}"),
        _ if agreement.is_some_and(|a| a > tol) => "disagree".into(),
        _ => "ok".into(),
    };
    let (route, value) = match (&series, &contour) {
        (Ok(s), _) => (Route::Series, Some(*s)),
        (_, Ok(c)) => (Route::Contour, Some(*c)),
        _ => (Route::Contour, None),
    };
    KernelRow {
        p1,
        p2,
        route: if route == Route::Series { "series" } else { "contour" },
        value,
        contour: contour.ok(),
        series: series.ok(),
        agreement,
        involution: invol,
        status,
    }
}

fn cmd_kernel(ctx: &RunContext) -> Result<Outcome> {
    let cfg = ctx.config;
    let k = cfg.kernel()?;
    let g = &cfg.kernel;
    let mut points = Vec::new();
    for &t1 in &g.tau1 {
        for &th1 in &g.theta1 {
            for &t2 in &g.tau2 {
                for &th2 in &g.theta2 {
                    points.push((KernelPoint::new(t1, th1), KernelPoint::new(t2, th2)));
                }
            }
        }
    }
    let rows: Vec<KernelRow> = points.par_iter().map(|&(p1, p2)| kernel_row(&k, p1, p2, g.tolerance)).collect();
    let header = [
        "tau1",
        "theta1",
        "tau2",
        "theta2",
        "route",
        "value",
        "contour",
        "series",
        "agreement",
        "involution",
        "status",
    ];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.p1.tau.to_string(),
                fmt_f64(r.p1.theta),
                r.p2.tau.to_string(),
                fmt_f64(r.p2.theta),
                r.route.to_string(),
                fmt_opt(r.value),
                fmt_opt(r.contour),
                fmt_opt(r.series),
                fmt_opt(r.agreement),
                fmt_opt(r.involution),
                r.status.clone(),
            ]
        })
        .collect();
    write_csv(&ctx.out.join("kernel.csv"), &ctx.provenance(CommandKind::Kernel), &header, &table)?;
    let max_inv = rows.iter().filter_map(|r| r.involution).fold(0.0, f64::max);
    let max_agree = rows.iter().filter_map(|r| r.agreement).fold(0.0, f64::max);
    println!("kernel: {} grid points", rows.len());
    println!("max involution discrepancy: {max_inv:.3e}");
    println!("max series/contour discrepancy: {max_agree:.3e} (tolerance {:.1e})", g.tolerance);
    let failures = rows
        .iter()
        .filter(|r| r.status != "ok")
        .map(|r| format!("({},{};{},{}): {}", r.p1.tau, r.p1.theta, r.p2.tau, r.p2.theta, r.status))
        .collect();
    Ok(Outcome { failures })
}

fn cmd_density(ctx: &RunContext) -> Result<Outcome> {
    let cfg = ctx.config;
    let k = cfg.kernel()?;
    let sec = &cfg.density;
    let prov = ctx.provenance(CommandKind::Density);
    let reqs: Vec<DensityRequest> = sec
        .points
        .iter()
        .map(|p| match (p.tau2, &p.y) {
            (Some(t2), Some(y)) => DensityRequest::two_level(p.tau1, p.x.clone(), t2, y.clone()),
            _ => DensityRequest::one_level(p.tau1, p.x.clone()),
        })
        .collect();
    let evaluated: Vec<_> = reqs.par_iter().map(|req| evaluate_density(&k, req, sec.tolerance)).collect();
    let header = [
        "index",
        "tau1",
        "x",
        "tau2",
        "y",
        "regime",
        "density",
        "kernel_block",
        "factorization",
        "max_rel_discrepancy",
        "status",
    ];
    let mut failures = Vec::new();
    let mut table = Vec::new();
    for (i, (req, ev)) in reqs.iter().zip(&evaluated).enumerate() {
        if ev.status != "ok" && ev.status != "kernel-block-skipped" {
            failures.push(format!("density point {i}: {}", ev.status));
        }
        table.push(vec![
            i.to_string(),
            req.tau1.to_string(),
            fmt_list(&req.x),
            req.tau2.to_string(),
            fmt_list(&req.y),
            ev.regime.clone(),
            fmt_opt(ev.density),
            fmt_opt(ev.kernel_block),
            fmt_opt(ev.factorization),
            fmt_opt(ev.discrepancy),
            ev.status.clone(),
        ]);
    }
    write_csv(&ctx.out.join("density.csv"), &prov, &header, &table)?;
    println!("density: {} requests", reqs.len());

    if !sec.normalize.is_empty() {
        let masses: Vec<Result<f64>> = sec.normalize.par_iter().map(|&t| Ok(one_level_mass(&k, t)?)).collect();
        let mut rows = Vec::new();
        for (&tau, m) in sec.normalize.iter().zip(masses) {
            let (mass, status) = match m {
                Ok(m) if (m - 1.0).abs() <= sec.mass_tolerance => (Some(m), "ok".to_string()),
                Ok(m) => (Some(m), "mass-off".to_string()),
                Err(e) => (None, format!("error: {e}")),
            };
            if status != "ok" {
                failures.push(format!("normalization at tau {tau}: {status}"));
            }
            println!("mass at tau {tau}: {}", mass.map(|m| format!("{m:.9}")).unwrap_or_else(|| "n/a".into()));
            rows.push(vec![tau.to_string(), fmt_opt(mass), fmt_opt(mass.map(|m| m - 1.0)), status]);
        }
        write_csv(&ctx.out.join("normalization.csv"), &prov, &["tau", "mass", "deviation", "status"], &rows)?;
    }
    Ok(Outcome { failures })
}

struct DensityEval {
    regime: String,
    density: Option<f64>,
    kernel_block: Option<f64>,
    factorization: Option<f64>,
    discrepancy: Option<f64>,
    status: String,
}

fn evaluate_density(k: &DtacKernel, req: &DensityRequest, tol: f64) -> DensityEval {
    let regime = match classify(k.params().rho, req.tau1, req.tau2) {
        Ok(Regime::InStrip) => "in-strip".to_string(),
        Ok(Regime::AboveStrip) => "above-strip".to_string(),
        Err(_) => "unsupported".to_string(),
    };
    let mut ev = DensityEval {
        regime,
        density: None,
        kernel_block: None,
        factorization: None,
        discrepancy: None,
        status: "ok".into(),
    };
    match density(k, req) {
        Ok(d) => ev.density = Some(d),
        Err(e) => {
            ev.status = format!("error: {e}");
            return ev;
        }
    }
    match factorization_check(k, req) {
        Ok(rep) => {
            ev.kernel_block = Some(rep.block_det);
            let n = if req.is_one_level() { req.x.len() } else { req.x.len() + req.y.len() };
            ev.factorization = Some(2f64.powi(n as i32) * rep.det_a * rep.det_b);
            ev.discrepancy = Some(rep.max_rel_discrepancy);
            if rep.max_rel_discrepancy > tol {
                ev.status = "disagree".into();
            }
        }
        Err(CoreError::Intractable(_)) => ev.status = "kernel-block-skipped".into(),
        Err(e) => ev.status = format!("error: {e}"),
    }
    ev
}

fn cmd_volume(ctx: &RunContext) -> Result<Outcome> {
    let sec = &ctx.config.volume;
    let insts: Vec<(LevelConfig, LevelConfig)> = sec
        .instances
        .iter()
        .map(|v| (LevelConfig::new(v.tau1, v.x.clone()), LevelConfig::new(v.tau2, v.y.clone())))
        .collect();
    let seed = ctx.seed;
    let rows: Vec<(Vec<String>, Option<String>)> = insts
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| volume_row(i, x, y, sec.samples, sec.tolerance, seed.wrapping_add(i as u64)))
        .collect();
    let header = [
        "index",
        "tau1",
        "x",
        "tau2",
        "y",
        "determinant",
        "reordered",
        "quadrature",
        "monte_carlo",
        "mc_stderr",
        "status",
    ];
    let (table, flags): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    write_csv(&ctx.out.join("volume.csv"), &ctx.provenance(CommandKind::Volume), &header, &table)?;
    println!("volume: {} instances", table.len());
    Ok(Outcome { failures: flags.into_iter().flatten().collect() })
}

fn volume_row(
    i: usize,
    x: &LevelConfig,
    y: &LevelConfig,
    samples: u64,
    tol: f64,
    seed: u64,
) -> (Vec<String>, Option<String>) {
    let base = vec![i.to_string(), x.tau.to_string(), fmt_list(&x.points), y.tau.to_string(), fmt_list(&y.points)];
    let det = match volume_det(x.tau, x, y.tau, y) {
        Ok(d) => d,
        Err(e) => {
            let status = format!("error: {e}");
            let mut row = base;
            row.extend(["", "", "", "", ""].map(String::from));
            row.push(status.clone());
            return (row, Some(format!("volume instance {i}: {status}")));
        }
    };
    // the reordered form only differs when the sizes differ
    let reordered = volume_det_reordered(x.tau, x, y.tau, y).ok();
    let quad = volume_oracle(x.tau, x, y.tau, y, VolumeMethod::RecursiveQuadrature);
    let mc = volume_oracle(x.tau, x, y.tau, y, VolumeMethod::MonteCarlo { samples, seed });
    let mut status = "ok".to_string();
    let (q, (m, se)) = match (quad, mc) {
        (Ok((q, _)), Ok(m)) => (Some(q), (Some(m.0), Some(m.1))),
        (Err(CoreError::Intractable(_)), _) | (_, Err(CoreError::Intractable(_))) => {
            status = "oracle-skipped".into();
            (None, (None, None))
        }
        (Err(e), _) | (_, Err(e)) => {
            status = format!("error: {e}");
            (None, (None, None))
        }
    };
    if let Some(q) = q {
        let scale = det.abs().max(q.abs());
        if scale > 0.0 && (det - q).abs() > tol * scale {
            status = "quadrature-disagrees".into();
        }
    }
    if let (Some(m), Some(se)) = (m, se) {
        if status == "ok" && (m - det).abs() > 3.0 * se + 1e-12 {
            status = "monte-carlo-disagrees".into();
        }
    }
    if let Some(r) = reordered {
        if status == "ok" && (r - det).abs() > 1e-12 * det.abs().max(1.0) {
            status = "reordering-disagrees".into();
        }
    }
    let flag = (status != "ok" && status != "oracle-skipped").then(|| format!("volume instance {i}: {status}"));
    let mut row = base;
    row.extend([fmt_f64(det), fmt_opt(reordered), fmt_opt(q), fmt_opt(m), fmt_opt(se), status]);
    (row, flag)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    passed: bool,
    suites: &'a [SuiteResult],
}

fn cmd_verify(ctx: &RunContext) -> Result<Outcome> {
    let names = suites::select(ctx.only)?;
    let v = &ctx.config.verify;
    let mut results = Vec::new();
    for name in names {
        let tol = v.tolerances.get(name).copied().unwrap_or_else(|| {
            if name == "convergence" {
                majority_allowance(v.convergence.seeds)
            } else {
                suites::default_tolerance(name)
            }
        });
        let r = run_suite(name, tol, ctx.seed, &v.convergence);
        println!(
            "{:<4} {:<20} {:>12.3e} {:>4} {:<10.1e} {:>8.2}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.discrepancy,
            if r.rule == suites::Rule::AtMost { "<=" } else { ">=" },
            r.tolerance,
            r.seconds,
            r.detail
        );
        results.push(r);
    }
    let failures: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    let report = VerifyReport { passed: failures.is_empty(), suites: &results };
    write_json(&ctx.out.join("report.json"), &ctx.provenance(CommandKind::Verify), &report)?;
    Ok(Outcome { failures })
}

#[derive(Serialize)]
struct RegionSummary<'a> {
    geometry: &'a tacnode_tiling::geometry::HexagonWithCuts,
    warnings: Vec<String>,
    stats: ChainStats,
}

fn cmd_simulate(ctx: &RunContext) -> Result<Outcome> {
    let sec: &SimulateSection = ctx
        .config
        .simulate
        .as_ref()
        .ok_or_else(|| LabError::config("simulate", "section is required for this command"))?;
    let prov = ctx.provenance(CommandKind::Simulate);
    let seeds: Vec<u64> = (0..sec.chains).map(|k| ctx.seed.wrapping_add(k)).collect();
    if let Some(region) = &sec.region {
        // explicit region: sample it and keep the final tiling
        let mut state = init_tiling(region)?;
        let mut rng = StdRng::seed_from_u64(ctx.seed);
        let mut stats = ChainStats::default();
        for _ in 0..sec.chain.burnin + sec.chain.sweeps {
            stats.merge(&mcmc_sweep(&mut state, &mut rng, sec.chain.moves));
        }
        let summary = RegionSummary { geometry: region, warnings: region.consistency_warnings(), stats };
        write_json(&ctx.out.join("summary.json"), &prov, &summary)?;
        write_snapshot(ctx.out, &prov, &state)?;
        println!("simulate: {} sweeps on the given region", summary.stats.sweeps);
        return Ok(Outcome::default());
    }
    let sp = sec.scaling.expect("validated: scaling or region");
    let (geom, residuals) = sp.geometry()?;
    let (cmp, states) = empirical_vs_theory_with_states(&sp, &sec.chain, &seeds)?;
    let header = ["tau", "theta_bin_lo", "theta_bin_hi", "empirical", "theory", "z"];
    let table: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.tau.to_string(),
                fmt_f64(r.theta_bin_lo),
                fmt_f64(r.theta_bin_hi),
                fmt_f64(r.empirical),
                fmt_f64(r.theory),
                fmt_f64(r.z),
            ]
        })
        .collect();
    write_csv(&ctx.out.join("histogram.csv"), &prov, &header, &table)?;
    let summary = serde_json::json!({
        "scaling": sp,
        "geometry": geom,
        "rounding_residuals": residuals,
        "seeds": seeds,
        "levels": cmp.levels,
        "stats": cmp.stats,
        "interlacing_violations": cmp.interlacing_violations,
    });
    write_json(&ctx.out.join("summary.json"), &prov, &summary)?;
    write_snapshot(ctx.out, &prov, &states[0])?;
    for l in &cmp.levels {
        println!(
            "tau {}: {} samples, TV {:.4}, KS {:.4}, ESS {:.0}, count mismatches {}",
            l.tau, l.samples, l.tv_distance, l.ks_distance, l.ess, l.count_mismatches
        );
    }
    let mut failures = Vec::new();
    if cmp.interlacing_violations > 0 {
        failures.push(format!("{} sampled states broke interlacing", cmp.interlacing_violations));
    }
    failures.extend(
        cmp.levels.iter().filter(|l| l.count_mismatches > 0).map(|l| format!("level {} count mismatches", l.tau)),
    );
    Ok(Outcome { failures })
}

fn write_snapshot(out: &Path, prov: &Provenance, state: &tacnode_tiling::tiling_sim::TilingState) -> Result<()> {
    let snap: serde_json::Value = serde_json::from_str(&state.to_json()?)?;
    write_json(&out.join("snapshot.json"), prov, &snap)?;
    write_svg(&out.join("snapshot.svg"), prov, &state.to_svg())
}
