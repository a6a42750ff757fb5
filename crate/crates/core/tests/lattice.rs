use loopcft::bootstrap::BoundaryCondition::{self, Free, Wired};
use loopcft::lattice::*;
use loopcft::Error;

fn geometries(width: usize, q: f64) -> Vec<Geometry> {
    let mut g = vec![Geometry::strip(width, Free, q).unwrap(), Geometry::strip(width, Wired, q).unwrap()];
    if width >= 3 {
        g.push(Geometry::cylinder(width, q).unwrap());
    }
    g
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn state_counts() {
    let count = |g: &Geometry, s| enumerate_states(g, s).unwrap().len();
    let free1 = Geometry::strip(1, Free, 2.0).unwrap();
    assert_eq!(count(&free1, Sector::Unmarked), 1);
    let free3 = Geometry::strip(3, Free, 2.0).unwrap();
    assert_eq!(count(&free3, Sector::Unmarked), 5);
    // {123} and {13}{2}
    let wired3 = Geometry::strip(3, Wired, 2.0).unwrap();
    assert_eq!(count(&wired3, Sector::Unmarked), 2);
    // marks: 1+2+2+2+3 parts, pairs 0+1+1+1+3
    assert_eq!(count(&free3, Sector::OneMark), 10);
    assert_eq!(count(&free3, Sector::TwoMarks), 6);
    let cyl = Geometry::cylinder(5, 2.0).unwrap();
    assert_eq!(count(&cyl, Sector::Unmarked), 42);
}

#[test]
fn capacity_guard() {
    assert!(matches!(Geometry::strip(15, Free, 2.0), Err(Error::Capacity(_))));
    assert!(matches!(Geometry::strip(4, Free, 2.0), Err(Error::Domain(_))));
}

#[test]
fn single_edge_by_hand() {
    // two sites joined by one vertical edge: Z = q² + v q
    let g = Geometry::strip(1, Free, 2.0).unwrap();
    let v = 2f64.sqrt();
    let b = brute_force_oracle(&g, 2, (0, 0), (1, 0)).unwrap();
    assert!(rel(b.z, 4.0 + 2.0 * v) < 1e-15);
    assert!(rel(b.connectivity, v * 2.0 / (4.0 + 2.0 * v)) < 1e-15);
    let tm = finite_connectivity(&g, 2, (0, 0), (1, 0), None).unwrap();
    assert!(rel(tm.connectivity, b.connectivity) < 1e-14);
}

#[test]
fn empty_lattice_self_connectivity() {
    let g = Geometry::strip(1, Free, 2.0).unwrap();
    assert_eq!(brute_force_oracle(&g, 0, (0, 0), (0, 0)).unwrap().connectivity, 1.0);
}

#[test]
fn transfer_matrix_matches_brute_force() {
    let mut checked = 0;
    for q in [1.0, 2.0, 3.25] {
        for (l, rows) in [(1, 6), (3, 2), (3, 3), (3, 4), (5, 2), (5, 3), (3, 5)] {
            for g in geometries(l, q) {
                let edges = rows * g.horizontal_edges().len() + (rows - 1) * l;
                if edges > 22 {
                    continue;
                }
                let mid = g.middle();
                let pairs = [((0, mid), (rows - 1, mid)), ((0, 0), (rows - 1, l - 1)), ((1, mid), (1, mid)), ((0, l - 1), (1, 0))];
                for (z1, z2) in pairs {
                    let b = brute_force_oracle(&g, rows, z1, z2).unwrap();
                    let t = finite_connectivity(&g, rows, z1, z2, None).unwrap();
                    assert!(rel(t.log_z.exp(), b.z) < 1e-10, "{} rows={rows}: Z {} vs {}", g.label(), t.log_z.exp(), b.z);
                    assert!(
                        rel(t.connectivity, b.connectivity) < 1e-10,
                        "{} rows={rows} {z1:?}-{z2:?}: {} vs {}",
                        g.label(),
                        t.connectivity,
                        b.connectivity
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn brute_force_capacity() {
    let g = Geometry::strip(5, Free, 2.0).unwrap();
    assert!(matches!(brute_force_oracle(&g, 5, (0, 0), (1, 1)), Err(Error::Capacity(_))));
}

#[test]
fn ising_exactness() {
    for l in [1, 3, 5, 7] {
        for g in geometries(l, 2.0) {
            for rows in [1, 2, 5, 14] {
                let mid = g.middle();
                for (z1, z2) in [((0, mid), (rows - 1, mid)), ((rows / 2, 0), (rows / 2, l - 1)), ((rows / 3, mid), (rows - 1, 0))] {
                    let s = ising_spin_correlator(&g, rows, z1, z2).unwrap();
                    let t = finite_connectivity(&g, rows, z1, z2, None).unwrap();
                    assert!(rel(t.connectivity, s) < 1e-10, "{} rows={rows}: {} vs {s}", g.label(), t.connectivity);
                }
            }
        }
    }
}

#[test]
fn probability_bounds() {
    for q in [1.0, 2.0, 3.25] {
        for g in geometries(5, q) {
            for r in 0..8 {
                let p = finite_connectivity(&g, 8, (0, 2), (r, (r * 3) % 5), None).unwrap().connectivity;
                assert!((0.0..=1.0 + 1e-12).contains(&p), "{} r={r}: {p}", g.label());
            }
        }
    }
}

#[test]
fn coincident_points_connected() {
    for g in geometries(3, 3.25) {
        let c = correlator(&g, 12, None).unwrap();
        assert!((c.values[0] - 1.0).abs() < 1e-12);
        assert!(c.values.iter().all(|&x| x > 0.0 && x <= 1.0 + 1e-12));
    }
}

#[test]
fn correlator_requires_window() {
    let g = Geometry::strip(5, Free, 2.0).unwrap();
    assert!(matches!(correlator(&g, 10, None), Err(Error::Domain(_))));
}

#[test]
fn infinite_correlator_is_the_long_finite_limit() {
    // points in the middle rows of a long finite lattice
    for g in geometries(3, 2.5) {
        let inf = correlator(&g, 12, None).unwrap();
        let rows = 60;
        for u in [1, 3, 6] {
            let f = finite_connectivity(&g, rows, (rows / 2 - 3, 1), (rows / 2 - 3 + u, 1), None).unwrap();
            assert!(rel(f.connectivity, inf.values[u]) < 1e-9, "{} u={u}: {} vs {}", g.label(), f.connectivity, inf.values[u]);
        }
    }
}

#[test]
fn wired_plateau_free_decay() {
    let wired = correlator(&Geometry::strip(5, Wired, 2.0).unwrap(), 200, None).unwrap();
    let free = correlator(&Geometry::strip(5, Free, 2.0).unwrap(), 200, None).unwrap();
    let w = amplitude_and_gap(&wired.values, FitMode::Plateau).unwrap();
    assert!(w.background > 0.05, "{w:?}");
    assert!(*free.values.last().unwrap() < 1e-10);
    assert!(wired.values.windows(2).all(|p| p[1] <= p[0] + 1e-12));
}

#[test]
fn synthetic_fits() {
    let pure: Vec<f64> = (0..80).map(|u| 3.0 * (-0.2 * u as f64).exp()).collect();
    let f = amplitude_and_gap(&pure, FitMode::Decaying).unwrap();
    assert!((f.amplitude - 3.0).abs() < 1e-10 && (f.gap - 0.2).abs() < 1e-12);
    let shifted: Vec<f64> = (0..80).map(|u| 0.5 + 3.0 * (-0.2 * u as f64).exp()).collect();
    let f = amplitude_and_gap(&shifted, FitMode::Plateau).unwrap();
    assert!((f.background - 0.5).abs() < 1e-10, "{f:?}");
    assert!((f.amplitude - 3.0).abs() < 1e-4 && (f.gap - 0.2).abs() < 1e-6, "{f:?}");
    let drifting: Vec<f64> = (0..80).map(|u| 1.0 / (1.0 + u as f64).powi(2)).collect();
    assert!(matches!(amplitude_and_gap(&drifting, FitMode::Decaying), Err(Error::NotStabilized(_))));
}

#[test]
fn extrapolation_recovers_polynomials() {
    let sizes = [5, 7, 9, 11];
    let f = |l: usize| 1.3 + 0.7 / l as f64 - 2.0 / (l * l) as f64;
    let vals: Vec<f64> = sizes.iter().map(|&l| f(l)).collect();
    assert!((extrapolate(&sizes[..3], &vals[..3], 2).unwrap() - 1.3).abs() < 1e-10);
    assert!((extrapolate(&sizes, &vals, 3).unwrap() - 1.3).abs() < 1e-9);
    assert!(matches!(extrapolate(&sizes[..2], &vals[..2], 2), Err(Error::DegenerateFit(_))));
}

#[test]
fn cylinder_gap_scaling() {
    let gap = |l| {
        let c = correlator(&Geometry::cylinder(l, 2.0).unwrap(), 400, None).unwrap();
        amplitude_and_gap(&c.values, FitMode::Decaying).unwrap().gap * l as f64
    };
    let (g5, g7) = (gap(5), gap(7));
    // CFT: 4πΔ = π/4
    assert!((g7 / g5 - 1.0).abs() < 0.1, "{g5} {g7}");
    assert!((g7 / (std::f64::consts::PI / 4.0) - 1.0).abs() < 0.1, "{g7}");
}

#[test]
fn state_cache_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Geometry::strip(5, Wired, 2.0).unwrap();
    let space = enumerate_states(&g, Sector::TwoMarks).unwrap();
    let path = dir.path().join("s.bin");
    save_state_space(&space, &g, &path).unwrap();
    let back = load_state_space(&path, &g, Sector::TwoMarks).unwrap();
    assert_eq!(back.keys(), space.keys());
    let other = Geometry::strip(5, Free, 2.0).unwrap();
    assert!(matches!(load_state_space(&path, &other, Sector::TwoMarks), Err(Error::Cache(_))));
    // cached and fresh builds agree
    let a = finite_connectivity(&g, 4, (0, 2), (3, 2), Some(dir.path())).unwrap();
    let b = finite_connectivity(&g, 4, (0, 2), (3, 2), Some(dir.path())).unwrap();
    let c = finite_connectivity(&g, 4, (0, 2), (3, 2), None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn zero_vector_stays_zero() {
    let g = Geometry::strip(5, Free, 2.0).unwrap();
    let tm = TransferMatrix::new(g, &[Sector::Unmarked], &[Sector::Unmarked], None).unwrap();
    let x = StateVector { parts: [vec![0.0; tm.sizes()[0]], Vec::new(), Vec::new()], log_scale: 0.0 };
    assert!(tm.apply_row(&x).unwrap().parts[0].iter().all(|&a| a == 0.0));
    let bad = StateVector { parts: [vec![0.0; 3], Vec::new(), Vec::new()], log_scale: 0.0 };
    assert!(matches!(tm.apply_row(&bad), Err(Error::IndexMismatch(_))));
}

#[allow(dead_code)]
fn bc_name(bc: BoundaryCondition) -> &'static str {
    bc.name()
}
