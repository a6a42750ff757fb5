use std::collections::BTreeMap;

use loopcft::bootstrap::*;
use loopcft::cft::{self, Coupling, KacIndex};
use loopcft::special::{barnes_double_gamma, log_gamma};
use loopcft::Error;

fn coupling(q: f64) -> Coupling {
    Coupling::from_q(q).unwrap()
}

/// Ising (q = 2) connectivities from the closed-form c = 1/2 blocks:
/// G/λ = (σ(1-σ))^{-1/8} [√((1+s)/2) ± √((1-s)/2)], s = √(1-σ).
fn ising_shape(bc: BoundaryCondition, sigma: f64) -> f64 {
    let s = (1.0 - sigma).sqrt();
    let sign = match bc {
        BoundaryCondition::Wired => 1.0,
        BoundaryCondition::Free => -1.0,
    };
    (sigma * (1.0 - sigma)).powf(-0.125) * (((1.0 + s) / 2.0).sqrt() + sign * ((1.0 - s) / 2.0).sqrt())
}

#[test]
fn ising_connectivities_match_exact_blocks() {
    let c = coupling(2.0);
    let lambda = two_point_result(BoundaryCondition::Wired, &c).unwrap().lambda;
    for bc in [BoundaryCondition::Wired, BoundaryCondition::Free] {
        for sigma in [0.05, 0.2, 0.5, 0.8, 0.95] {
            let g = g_connectivity(bc, sigma, &c).unwrap();
            let exact = lambda * ising_shape(bc, sigma);
            assert!((g - exact).abs() < 1e-8 * exact.abs(), "{bc:?} σ={sigma}: {g} vs {exact}");
        }
    }
}

#[test]
fn ising_amplitude_ratios() {
    // From the exact shape: μ_wired = √2 λ, μ_free = λ/√2.
    let c = coupling(2.0);
    let w = two_point_result(BoundaryCondition::Wired, &c).unwrap();
    let f = two_point_result(BoundaryCondition::Free, &c).unwrap();
    assert!((w.ratio - 0.5f64.sqrt()).abs() < 1e-8, "{}", w.ratio);
    assert!((f.ratio - 2f64.sqrt()).abs() < 1e-8, "{}", f.ratio);
    assert_eq!(w.boundary_weight, 0.0);
    assert!((f.boundary_weight - 0.5).abs() < 1e-14);
}

/// log Γ_β(x) through the 1/β shift from `x + k/β`, instead of the β shift
/// used internally.
fn log_barnes_dual_path(x: f64, beta: f64) -> (f64, i8) {
    let bi = 1.0 / beta;
    let mut k = 0;
    while x + (k as f64) * bi < 2.5 {
        k += 1;
    }
    let top = barnes_double_gamma(x + k as f64 * bi, beta).unwrap();
    let (mut log, mut sign) = (top.log_abs, top.sign);
    for j in (0..k).rev() {
        let y = x + j as f64 * bi;
        // Γ_β(y + 1/β) = √(2π) β^{1/2 - y/β} / Γ(y/β) · Γ_β(y)
        let g = log_gamma(y * bi).unwrap();
        log -= 0.5 * (2.0 * std::f64::consts::PI).ln() + (0.5 - y * bi) * beta.ln() - g.log_abs;
        sign *= g.sign;
    }
    (log, sign)
}

#[test]
fn spin_structure_constant_pin() {
    let c = coupling(2.0);
    let beta = c.beta();
    let pi = std::f64::consts::PI;
    let p = c.momentum(KacIndex::new(1, 1));
    let half_q = (beta + 1.0 / beta) / 2.0;
    let (mut log, mut sign) = ((16.0 * p).abs().ln(), if p < 0.0 { -1i8 } else { 1 });
    for e in [1.0, -1.0] {
        let sn = (pi * beta.powf(2.0 * e)).sin();
        log += sn.abs().ln();
        sign *= if sn < 0.0 { -1 } else { 1 };
        let (l, s) = log_barnes_dual_path(2.0 * e * p, beta);
        log += l;
        sign *= s;
    }
    for e1 in [1.0, -1.0] {
        for e2 in [1.0, -1.0] {
            for e3 in [1.0, -1.0] {
                let arg = half_q + (e1 * 0.5 + e2 * 0.5) / (2.0 * beta) + e3 * p;
                let (l, s) = log_barnes_dual_path(arg, beta);
                log -= l;
                sign *= s;
            }
        }
    }
    let oracle = f64::from(sign) * log.exp();
    let value = cft::ope_coefficient(1, KacIndex::SPIN, KacIndex::SPIN, &c).unwrap();
    assert!((value - oracle).abs() < 1e-10 * oracle.abs(), "{value} vs {oracle}");
    // pinned: negative, while λ = C R > 0 since R_(1,1) = -√3/2
    assert!((value + 0.894_700_5).abs() < 1e-6, "{value}");
}

#[test]
fn lambda_from_leading_term() {
    for q in [1.0, 2.0, 3.0] {
        let c = coupling(q);
        assert!(c.weight(KacIndex::degenerate(3)) > 0.0);
        assert!(c.weight(KacIndex::degenerate(2)) > 0.0);
        let w = two_point_result(BoundaryCondition::Wired, &c).unwrap();
        let f = two_point_result(BoundaryCondition::Free, &c).unwrap();
        assert_eq!(w.lambda, f.lambda);
        assert!((w.lambda_numeric - w.lambda).abs() < 1e-6 * w.lambda);
        let spin = KacIndex::SPIN;
        let sigma = 1e-7;
        let f1 = f_function(1, spin, spin, sigma, 31, &c).unwrap().value;
        let lead = f1 * sigma.powf(2.0 * c.weight(spin));
        assert!((lead - w.lambda).abs() < 1e-3 * w.lambda, "q={q}: {lead} vs {}", w.lambda);
    }
}

#[test]
fn f_function_edge_cases() {
    let c = coupling(2.5);
    let spin = KacIndex::SPIN;
    assert_eq!(f_function(2, spin, spin, 0.5, 1, &c).unwrap().value, 0.0);
    assert!(matches!(f_function(1, spin, spin, 1.0, 31, &c), Err(Error::Domain(_))));
    assert!(matches!(f_function(1, spin, spin, 0.0, 31, &c), Err(Error::Domain(_))));
    // R_(1,N) vanishes at q = 4 for every N
    let c4 = coupling(4.0);
    for n in 1..=5 {
        assert!(cft::one_point_amplitude(n, &c4).abs() < 1e-14);
    }
    let f = f_function(1, spin, spin, 0.5, 31, &c4).unwrap().value;
    assert!(f.abs() < 1e-8, "{f}");
}

#[test]
fn wired_minus_free_is_twice_f2() {
    let spin = KacIndex::SPIN;
    for q in [1.5, 2.0] {
        let c = coupling(q);
        for sigma in [0.2, 0.6] {
            let w = g_connectivity(BoundaryCondition::Wired, sigma, &c).unwrap();
            let f = g_connectivity(BoundaryCondition::Free, sigma, &c).unwrap();
            let f2 = f_function(2, spin, spin, sigma, 31, &c).unwrap().value;
            assert!((w - f - 2.0 * f2).abs() < 1e-10 * w.abs());
            assert!(w > f);
        }
    }
}

#[test]
fn connectivities_are_nonnegative() {
    for q in [1.0, 2.0, 3.0] {
        let c = coupling(q);
        for i in 0..=9 {
            let sigma = 0.05 + 0.1 * i as f64;
            for bc in [BoundaryCondition::Wired, BoundaryCondition::Free] {
                assert!(g_connectivity(bc, sigma, &c).unwrap() >= 0.0, "q={q} σ={sigma}");
            }
        }
    }
}

#[test]
fn truncation_stability() {
    let c = coupling(2.5);
    let base = BootstrapConfig::default();
    let doubled = BootstrapConfig { n_s: 2 * base.n_s, ..base };
    for bc in [BoundaryCondition::Wired, BoundaryCondition::Free] {
        let a = g_connectivity_with(bc, 0.5, &c, &base).unwrap();
        let b = g_connectivity_with(bc, 0.5, &c, &doubled).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs());
    }
}

#[test]
fn crossing_zero_bulk_side() {
    let c = coupling(2.5);
    let cfg = BootstrapConfig::default();
    let bulk = BulkSide::Explicit { f1: KacIndex::SPIN, f2: KacIndex::SPIN, constants: BTreeMap::new() };
    let sol = solve_crossing(&bulk, &(&cfg).into(), &c, &cfg).unwrap();
    assert_eq!(sol.residual, 0.0);
    assert!(sol.boundary_constants.values().all(|&d| d == 0.0));
}

#[test]
fn crossing_explicit_matches_connectivity() {
    let c = coupling(2.5);
    let cfg = BootstrapConfig::default();
    let ansatz = SpectrumAnsatz::from(&cfg);
    let reference = solve_crossing(&BulkSide::Connectivity(BoundaryCondition::Wired), &ansatz, &c, &cfg).unwrap();
    let bulk = BulkSide::Explicit {
        f1: KacIndex::SPIN,
        f2: KacIndex::SPIN,
        constants: reference.bulk_constants.clone(),
    };
    let sol = solve_crossing(&bulk, &ansatz, &c, &cfg).unwrap();
    assert!(sol.residual < 1e-8);
    let (a, b) = (sol.boundary_constants[&1], reference.boundary_constants[&1]);
    assert!((a - b).abs() < 1e-9 * b.abs());
    assert_eq!(sol.sample_points.len(), 40);
    // even boundary indices are excluded: their blocks diverge for spin externals
    assert_eq!(sol.excluded, vec![2, 4, 6, 8, 10, 12]);
}

#[test]
fn crossing_leading_constant_is_mu() {
    let c = coupling(2.0);
    let cfg = BootstrapConfig::default();
    let sol = solve_crossing(&BulkSide::Connectivity(BoundaryCondition::Wired), &(&cfg).into(), &c, &cfg).unwrap();
    assert!(sol.residual < 1e-8);
    // direct σ → 1 limit of (1-σ)^{2Δ} G
    let d = c.weight(KacIndex::SPIN);
    let g = |s: f64| g_connectivity(BoundaryCondition::Wired, s, &c).unwrap() * (1.0 - s).powf(2.0 * d);
    let (a, b) = (g(0.999), g(0.9999));
    // leading correction is (1-σ)^{Δ_(3,1)} = (1-σ)^{1/2}
    let limit = (b * 0.001f64.sqrt() - a * 0.0001f64.sqrt()) / (0.001f64.sqrt() - 0.0001f64.sqrt());
    assert!((limit - sol.boundary_constants[&1]).abs() < 1e-3 * limit, "{limit}");
}

#[test]
fn ill_conditioned_and_underdetermined() {
    let c = coupling(2.5);
    let cfg = BootstrapConfig { samples: 6, ..BootstrapConfig::default() };
    let r = solve_crossing(&BulkSide::Connectivity(BoundaryCondition::Wired), &(&cfg).into(), &c, &cfg);
    assert!(matches!(r, Err(Error::Domain(_))));
    let cfg = BootstrapConfig { condition_bound: 1.0, ..BootstrapConfig::default() };
    let r = solve_crossing(&BulkSide::Connectivity(BoundaryCondition::Wired), &(&cfg).into(), &c, &cfg);
    assert!(matches!(r, Err(Error::IllConditioned { .. })));
}

#[test]
fn fuseau_parity_and_symmetry() {
    let c = coupling(2.0);
    for sigma in [0.1, 0.5, 0.9] {
        assert_eq!(g_fuseau(1, 2, sigma, &c).unwrap(), 0.0);
        assert_eq!(g_fuseau(2, 3, sigma, &c).unwrap(), 0.0);
    }
    let cfg = BootstrapConfig::default();
    let sol = solve_crossing(&BulkSide::Fuseau(1, 2), &(&cfg).into(), &c, &cfg).unwrap();
    assert!(sol.boundary_constants.values().all(|d| d.abs() < 1e-8));

    let g31 = g_fuseau_with(1, 1, 0.5, &c, &cfg).unwrap();
    let g41 = g_fuseau_with(1, 1, 0.5, &c, &BootstrapConfig { n_s: 41, ..cfg }).unwrap();
    assert!(g31.is_finite() && g31 > 0.0);
    assert!((g31 - g41).abs() < 1e-10 * g31);

    let c = coupling(2.5);
    assert_eq!(g_fuseau(2, 2, 0.4, &c).unwrap(), g_fuseau(2, 2, 0.4, &c).unwrap());
    // unequal even pairs: the identity block diverges while C^(1,1) does not vanish
    for (n, m) in [(1, 3), (3, 1)] {
        assert!(matches!(g_fuseau(n, m, 0.4, &c), Err(Error::Regularization(_))));
    }
}

#[test]
fn fuseau_crossing_has_a_solution() {
    let c = coupling(2.5);
    let cfg = BootstrapConfig::default();
    let sol = solve_crossing(&BulkSide::Fuseau(2, 2), &(&cfg).into(), &c, &cfg).unwrap();
    assert!(sol.residual < 1e-6, "{}", sol.residual);
    assert!(sol.boundary_constants.values().any(|d| d.abs() > 1e-6));
}
