use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tacnode_core::interlace_polytope::interlaces;
use tacnode_tiling::geometry::{HexagonWithCuts, ScalingParams};
use tacnode_tiling::tiling_sim::{
    empirical_vs_theory, empirical_vs_theory_chains, extract_blue, init_tiling, integrated_autocorrelation, mcmc_sweep,
    ComparisonConfig, MoveKind, TilingState,
};
use tacnode_tiling::TilingError;

fn fig4() -> HexagonWithCuts {
    HexagonWithCuts::new(3, 7, 2, 4, 6, 5, 5).unwrap()
}

fn hexagon222() -> HexagonWithCuts {
    HexagonWithCuts::new(2, 2, 0, 1, 1, 1, 1).unwrap()
}

/// Every family of interlacing lines between the boundary rows, by brute
/// force over the box spanned by the rows.
fn enumerate(g: &HexagonWithCuts) -> Vec<Vec<Vec<i64>>> {
    let (bottom, top) = (g.bottom_row(), g.top_row());
    let n = g.n as usize;
    let ok = |a: &[i64], b: &[i64]| (0..a.len()).all(|j| a[j] <= b[j] && (j + 1 == a.len() || b[j] < a[j + 1]));
    fn rec(
        m: usize,
        n: usize,
        prefix: &mut Vec<Vec<i64>>,
        top: &[i64],
        ok: &dyn Fn(&[i64], &[i64]) -> bool,
        out: &mut Vec<Vec<Vec<i64>>>,
    ) {
        let prev = prefix.last().unwrap().clone();
        if m == n {
            if ok(&prev, top) {
                let mut t = prefix.clone();
                t.push(top.to_vec());
                out.push(t);
            }
            return;
        }
        let k = prev.len();
        let mut cur = vec![0i64; k];
        fn fill(j: usize, cur: &mut Vec<i64>, prev: &[i64], top: &[i64], each: &mut dyn FnMut(&[i64])) {
            if j == cur.len() {
                each(cur);
                return;
            }
            let hi = if j + 1 < prev.len() { prev[j + 1] - 1 } else { top[j] };
            for v in prev[j]..=hi {
                cur[j] = v;
                fill(j + 1, cur, prev, top, each);
            }
        }
        let mut lines = Vec::new();
        fill(0, &mut cur, &prev, top, &mut |c| lines.push(c.to_vec()));
        for line in lines {
            prefix.push(line);
            rec(m + 1, n, prefix, top, ok, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, &mut vec![bottom], &top, &ok, &mut out);
    out
}

/// Blue positions in kernel orientation (x ∝ -ξ), largest first.
fn level_x(state: &TilingState, eta: i64) -> Vec<f64> {
    extract_blue(state, eta).unwrap().iter().rev().map(|&xi| -(xi as f64)).collect()
}

#[test]
fn hexagon_222_has_twenty_tilings() {
    let all = enumerate(&hexagon222());
    assert_eq!(all.len(), 20);
    let s = init_tiling(&hexagon222()).unwrap();
    assert!(all.contains(&s.lines()));
    assert!(s.is_valid());
}

fn chi_squared_uniformity(kind: MoveKind, seed: u64) -> f64 {
    let g = hexagon222();
    let index: HashMap<Vec<Vec<i64>>, usize> = enumerate(&g).into_iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut state = init_tiling(&g).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut counts = vec![0u64; index.len()];
    let (sweeps, thin) = (100_000, 10);
    for _ in 0..1000 {
        mcmc_sweep(&mut state, &mut rng, kind);
    }
    for s in 0..sweeps {
        let st = mcmc_sweep(&mut state, &mut rng, kind);
        assert!((0.0..=1.0).contains(&st.acceptance_rate));
        if s % thin == 0 {
            counts[index[&state.lines()]] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(chi2)
}

#[test]
fn rotation_chain_is_uniform_on_hexagon_222() {
    let p = chi_squared_uniformity(MoveKind::Rotation, 3);
    assert!(p > 0.01, "chi-squared p-value {p}");
}

#[test]
fn heat_bath_chain_is_uniform_on_hexagon_222() {
    let p = chi_squared_uniformity(MoveKind::HeatBath, 4);
    assert!(p > 0.01, "chi-squared p-value {p}");
}

#[test]
fn strip_invariant_and_interlacing_hold_on_every_state() {
    let g = fig4();
    let mut state = init_tiling(&g).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let (first, last) = g.strip_lines();
    for sweep in 0..4000 {
        let kind = if sweep % 2 == 0 { MoveKind::Rotation } else { MoveKind::HeatBath };
        mcmc_sweep(&mut state, &mut rng, kind);
        assert!(state.is_valid());
        for eta in first..=last {
            let xi = extract_blue(&state, eta).unwrap();
            assert_eq!(xi.len() as i64, g.r(), "line {eta}");
            assert!(xi.iter().all(|v| (eta + v).rem_euclid(2) == 1));
        }
        // levels τ = 0.. interlace upwards, growing by one above the strip
        for eta in first..last + 2 {
            let (z, u) = (level_x(&state, eta), level_x(&state, eta + 1));
            let tau = eta + 1 - first;
            assert_eq!(u.len() as i64, (tau - g.rho()).max(0) + g.r());
            assert!(interlaces(&z, &u), "sweep {sweep}: {z:?} / {u:?}");
        }
    }
}

#[test]
fn zero_width_path_family_leaves_strip_empty() {
    // b = d gives r = 0
    let g = HexagonWithCuts::new(2, 3, 2, 3, 3, 4, 2).unwrap();
    assert_eq!((g.r(), g.rho()), (0, 1));
    let mut state = init_tiling(&g).unwrap();
    let mut rng = StdRng::seed_from_u64(2);
    let (first, last) = g.strip_lines();
    for _ in 0..200 {
        mcmc_sweep(&mut state, &mut rng, MoveKind::HeatBath);
        for eta in first..=last {
            assert!(extract_blue(&state, eta).unwrap().is_empty());
        }
    }
}

#[test]
fn infeasible_region_is_untileable() {
    let g = HexagonWithCuts::with_lines(2, 2, 0, 1, 1, 1, 1, 1).unwrap();
    assert!(matches!(init_tiling(&g), Err(TilingError::Untileable(_))));
}

#[test]
fn lines_outside_the_region_are_rejected() {
    let s = init_tiling(&fig4()).unwrap();
    let (lo, hi) = fig4().eta_range();
    assert!(matches!(extract_blue(&s, hi + 1), Err(TilingError::OutOfRange { .. })));
    assert!(extract_blue(&s, lo).unwrap().is_empty());
}

#[test]
fn snapshots_round_trip() {
    let g = fig4();
    let mut state = init_tiling(&g).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        mcmc_sweep(&mut state, &mut rng, MoveKind::HeatBath);
    }
    let back = TilingState::from_json(&state.to_json().unwrap()).unwrap();
    assert_eq!(back, state);
    let svg = state.to_svg();
    assert!(svg.starts_with("<svg"));
    for colour in ["#3b6fd0", "#d04a3b", "#4caf50"] {
        assert!(svg.contains(colour));
    }
    let broken = state.to_json().unwrap().replacen("[-12,", "[-13,", 1);
    assert!(TilingState::from_json(&broken).is_err());
}

#[test]
fn autocorrelation_of_known_series() {
    let mut rng = StdRng::seed_from_u64(9);
    let iid: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
    let (tau, ess) = integrated_autocorrelation(&iid);
    assert!(tau < 1.2, "{tau}");
    assert!(ess > 15_000.0);
    // AR(1) with φ = 0.5 has τ = (1 + φ)/(1 - φ) = 3
    let mut x = 0.0;
    let ar: Vec<f64> = (0..100_000)
        .map(|_| {
            x = 0.5 * x + rng.random::<f64>() - 0.5;
            x
        })
        .collect();
    let (tau, _) = integrated_autocorrelation(&ar);
    assert!((tau - 3.0).abs() < 0.4, "{tau}");
}

fn small_scaling() -> ScalingParams {
    ScalingParams { d: 8, kappa: 2.0, r: 1, rho: 1, beta1: 0.0, beta2: 0.0, gamma1: 0.0, gamma2: 0.0 }
}

#[test]
fn comparison_table_is_consistent_and_seed_determined() {
    let sp = small_scaling();
    let cfg = ComparisonConfig {
        levels: vec![0, 1, 2],
        sweeps: 2000,
        burnin: 500,
        thin: 5,
        bin_width: 0.5,
        theta_max: 6.0,
        moves: MoveKind::HeatBath,
    };
    let a = empirical_vs_theory(&sp, &cfg, 21).unwrap();
    let b = empirical_vs_theory(&sp, &cfg, 21).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.interlacing_violations, 0);
    for lvl in &a.levels {
        assert_eq!(lvl.count_mismatches, 0);
        assert_eq!(lvl.samples, 400);
        assert!(lvl.tv_distance >= 0.0 && lvl.tv_distance <= 1.0);
    }
    // the window holds essentially all theoretical mass: n_τ particles
    for (tau, n) in [(0, 1.0), (1, 1.0), (2, 2.0)] {
        let mass: f64 = a.rows.iter().filter(|r| r.tau == tau).map(|r| r.theory).sum();
        assert!((mass - n).abs() < 1e-3, "tau {tau}: {mass}");
        let emp: f64 = a.rows.iter().filter(|r| r.tau == tau).map(|r| r.empirical).sum();
        assert!(emp <= n + 1e-12);
    }
    let pooled = empirical_vs_theory_chains(&sp, &cfg, &[1, 2]).unwrap();
    assert_eq!(pooled.levels[0].samples, 800);
    assert_eq!(pooled.stats.sweeps, 2 * 2500);
}
