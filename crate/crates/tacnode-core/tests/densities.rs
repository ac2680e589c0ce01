use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tacnode_core::densities::{
    classify, delta_tilde, density, density_prefactor_d, factorization_check, fay_identity, gibbs_joint_density,
    heaviside_block_det, kernel_block_density, one_level_mass, solve_g, DensityRequest, Regime,
};
use tacnode_core::interlace_polytope::{random_cone_endpoints, InterlacingChain, LevelConfig};
use tacnode_core::special_functions::{hermite, phi, HermiteVariant};
use tacnode_core::tacnode_kernel::DtacKernel;
use tacnode_core::theta_integrals::KernelParams;
use tacnode_core::{linalg, Error};

fn kernel(r: usize, rho: i32, beta: f64) -> DtacKernel {
    DtacKernel::new(KernelParams::new(r, rho, beta).unwrap()).unwrap()
}

const MODELS: [(usize, i32, f64); 3] = [(1, 1, 0.0), (1, 2, 0.5), (2, 2, -0.3)];

fn kernels() -> Vec<DtacKernel> {
    MODELS.iter().map(|&(r, rho, b)| kernel(r, rho, b)).collect()
}

/// Random (model index, request) pairs whose point count stays within the
/// kernel-block limit.
fn random_requests(regime: Regime, count: usize, seed: u64) -> Vec<(usize, DensityRequest)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = MODELS;
    let mut out = Vec::new();
    while out.len() < count {
        let idx = rng.random_range(0..models.len());
        let (r, rho, _) = models[idx];
        let (t1, t2) = match regime {
            Regime::InStrip => {
                let t1 = rng.random_range(0..=rho);
                (t1, rng.random_range(t1..=rho))
            }
            Regime::AboveStrip => {
                let t1 = rng.random_range(rho..=rho + 2);
                (t1, rng.random_range(t1..=rho + 2))
            }
        };
        let n = |t: i32| (t - rho).max(0) as usize + r;
        let points = if t1 == t2 { n(t1) } else { n(t1) + n(t2) };
        if points > 6 {
            continue;
        }
        let (x, y) = random_cone_endpoints(&mut rng, r, rho, t1, t2, 1.5).unwrap();
        let req = if t1 == t2 {
            DensityRequest::one_level(t1, x.points)
        } else {
            DensityRequest::two_level(t1, x.points, t2, y.points)
        };
        out.push((idx, req));
    }
    out
}

#[test]
fn three_routes_agree_in_strip() {
    let ks = kernels();
    for (i, req) in random_requests(Regime::InStrip, 20, 31) {
        let rep = factorization_check(&ks[i], &req).unwrap();
        assert!(rep.max_rel_discrepancy < 1e-8, "{req:?}: {rep:?}");
    }
}

#[test]
fn three_routes_agree_above_strip() {
    let ks = kernels();
    for (i, req) in random_requests(Regime::AboveStrip, 20, 32) {
        let rep = factorization_check(&ks[i], &req).unwrap();
        assert!(rep.max_rel_discrepancy < 1e-8, "{req:?}: {rep:?}");
    }
}

#[test]
fn densities_are_positive_on_ordered_points() {
    let ks = kernels();
    for regime in [Regime::InStrip, Regime::AboveStrip] {
        for (i, req) in random_requests(regime, 30, 33) {
            let d = density(&ks[i], &req).unwrap();
            assert!(d >= 0.0, "{req:?}: {d}");
        }
    }
}

#[test]
fn one_level_densities_integrate_to_one() {
    for (r, rho, taus) in [(1usize, 1i32, [0, 1, 2]), (1, 2, [0, 2, 3])] {
        let k = kernel(r, rho, 0.0);
        for tau in taus {
            let mass = one_level_mass(&k, tau).unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "(r,rho,tau)=({r},{rho},{tau}): mass {mass}");
        }
    }
    // a shifted β leaves the total mass alone
    let mass = one_level_mass(&kernel(1, 2, 0.7), 1).unwrap();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn fay_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for r in 1..=3usize {
        for gap in 1..=3 {
            for _ in 0..4 {
                let (x, y) = random_cone_endpoints(&mut rng, r, 10, 0, gap, 1.5).unwrap();
                let (lhs, rhs) = fay_identity(0, &x.points, gap, &y.points).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-12),
                    "r={r} gap={gap}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

#[test]
fn g_system_reproduces_step_function() {
    // Σ_α H̃_α(y_i) g_α = -H^{τ2-τ1}(2(y_i - x)) at each collocation point.
    let y = [1.2, 0.3, -0.7];
    let x = 0.1;
    let g = solve_g(0, x, 2, &y).unwrap();
    for &yi in &y {
        let lhs: f64 = g.iter().enumerate().map(|(a, ga)| hermite(HermiteVariant::Tilde, a as i32, yi) * ga).sum();
        let step = if yi > x { 2.0 * (yi - x) } else { 0.0 };
        assert!((lhs + step).abs() < 1e-12);
    }
    assert!(matches!(solve_g(0, x, 2, &[0.4, 0.4]), Err(Error::SingularSystem(_))));
}

#[test]
fn step_block_is_triangular_for_sorted_points() {
    // y_i > x_i ≥ y_{i+1}: the matrix is upper triangular.
    let x = [0.9, -0.2];
    let y = [1.4, 0.5];
    let d = heaviside_block_det(2, &x, &y);
    assert!((d - 2.0 * 0.5 * 2.0 * 0.7).abs() < 1e-14);
}

#[test]
fn in_strip_single_particle_closed_form() {
    // r = 1, one level in the strip: D = 2 Γ̃00 Φ_{τ-1}(x + β/2) Φ_{ρ-τ-1}(-x)
    let (rho, beta) = (2, 0.5);
    let k = kernel(1, rho, beta);
    let g00 = k.gamma().gamma_tilde[0][0];
    for tau in 0..=rho {
        for x in [-1.0, 0.2, 1.3] {
            let d = density_prefactor_d(&k, &DensityRequest::one_level(tau, vec![x])).unwrap();
            let expect = 2.0 * g00 * phi(tau - 1, x + beta / 2.0) * phi(rho - tau - 1, -x);
            assert!((d - expect).abs() < 1e-14 * expect.abs().max(1.0), "tau {tau} x {x}");
        }
    }
}

#[test]
fn one_level_kernel_block_is_diagonal_kernel() {
    let k = kernel(1, 1, 0.0);
    let x = 0.35;
    let block = kernel_block_density(&k, &DensityRequest::one_level(1, vec![x])).unwrap();
    let diag = k.ltilde(1, x, 1, x, tacnode_core::tacnode_kernel::Route::Series).unwrap();
    assert!((block - 2.0 * diag).abs() < 1e-14);
}

#[test]
fn prefactor_is_symmetric_under_swaps() {
    let k = kernel(2, 2, -0.3);
    let a = density_prefactor_d(&k, &DensityRequest::one_level(3, vec![1.1, 0.2, -0.9])).unwrap();
    let b = density_prefactor_d(&k, &DensityRequest::one_level(3, vec![0.2, 1.1, -0.9])).unwrap();
    assert!((a - b).abs() < 1e-13 * a.abs());
    // each Wronskian factor alone flips sign
    let p = [1.1, 0.2, -0.9];
    let q = [0.2, 1.1, -0.9];
    let da = delta_tilde(2, 2, 3, &p, Regime::AboveStrip).unwrap();
    let db = delta_tilde(2, 2, 3, &q, Regime::AboveStrip).unwrap();
    assert!((da + db).abs() < 1e-13 * da.abs());
}

#[test]
fn delta_tilde_small_cases() {
    // r = 1 in the strip: just Φ_{τ-1}(x)
    let v = delta_tilde(1, 3, 2, &[0.4], Regime::InStrip).unwrap();
    assert_eq!(v, phi(1, 0.4));
    // r = 1, one level above: det [[1, 1], [Φ_{τ-1}(x1), Φ_{τ-1}(x2)]]
    let v = delta_tilde(1, 1, 2, &[0.8, -0.3], Regime::AboveStrip).unwrap();
    assert!((v - (phi(1, -0.3) - phi(1, 0.8))).abs() < 1e-14);
    let m = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(linalg::det(2, &m), -2.0);
    assert!(matches!(delta_tilde(1, 1, 2, &[0.8], Regime::AboveStrip), Err(Error::SizeMismatch(_))));
}

#[test]
fn regimes_and_bad_requests() {
    assert_eq!(classify(2, 0, 2).unwrap(), Regime::InStrip);
    assert_eq!(classify(2, 2, 3).unwrap(), Regime::AboveStrip);
    assert!(matches!(classify(2, 1, 3), Err(Error::Unsupported(_))));
    let k = kernel(1, 1, 0.0);
    let bad = DensityRequest::one_level(2, vec![0.1]);
    assert!(matches!(density(&k, &bad), Err(Error::SizeMismatch(_))));
    let big = kernel(2, 2, 0.0);
    let req = DensityRequest::two_level(3, vec![0.9, 0.1, -0.8], 4, vec![1.2, 0.5, -0.3, -1.1]);
    assert!(matches!(kernel_block_density(&big, &req), Err(Error::Intractable(_))));
}

#[test]
fn gibbs_density_needs_a_valid_chain() {
    let k = kernel(1, 1, 0.0);
    let good = InterlacingChain {
        levels: vec![
            LevelConfig::new(1, vec![0.1]),
            LevelConfig::new(2, vec![0.6, -0.4]),
            LevelConfig::new(3, vec![0.9, 0.3, -1.0]),
        ],
    };
    let d = gibbs_joint_density(&k, &good).unwrap();
    let expect = density_prefactor_d(&k, &DensityRequest::two_level(1, vec![0.1], 3, vec![0.9, 0.3, -1.0])).unwrap();
    assert_eq!(d, expect);
    assert!(d > 0.0);
    let mut bad = good.clone();
    bad.levels[1].points = vec![0.6, 0.2];
    assert_eq!(gibbs_joint_density(&k, &bad).unwrap(), 0.0);
}
