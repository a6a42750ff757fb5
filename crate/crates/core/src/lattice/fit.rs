//! Amplitude/gap extraction, strip–cylinder amplitude ratios and 1/L
//! extrapolation.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::correlator::InfiniteCorrelator;
use super::{BoundaryCondition, Geometry};
use crate::cft::{Coupling, KacIndex};
use crate::error::{Error, Result};

const GAP_STABILITY: f64 = 1e-8;
const AMPLITUDE_STABILITY: f64 = 1e-6;
/// Differences below this fraction of C(u) are treated as rounding noise.
const NOISE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// C(u) ≈ A e^{−mu}
    Decaying,
    /// C(u) ≈ B + A e^{−mu}; B is the quantity of interest.
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFit {
    pub amplitude: f64,
    pub gap: f64,
    /// Constant term (0 in decaying mode).
    pub background: f64,
    /// Last distance used.
    pub u: usize,
}

fn last_quarter(n: usize) -> usize {
    n - (n / 4).max(2)
}

pub fn amplitude_and_gap(values: &[f64], mode: FitMode) -> Result<AmplitudeFit> {
    match mode {
        FitMode::Decaying => decaying(values),
        FitMode::Plateau => plateau(values),
    }
}

fn decaying(c: &[f64]) -> Result<AmplitudeFit> {
    if c.len() < 8 {
        return Err(Error::NotStabilized(format!("{} points are too few", c.len())));
    }
    if c.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::NotStabilized("non-positive correlator value".into()));
    }
    // (gap, amplitude) estimated from consecutive pairs
    let est: Vec<(f64, f64)> = (0..c.len() - 1)
        .map(|u| {
            let m = (c[u] / c[u + 1]).ln();
            (m, c[u + 1] * ((u + 1) as f64 * m).exp())
        })
        .collect();
    let (m, a) = *est.last().unwrap();
    let window = &est[last_quarter(est.len())..];
    let gap_drift = window.iter().fold(0.0f64, |d, e| d.max((e.0 - m).abs()));
    let amp_drift = window.iter().fold(0.0f64, |d, e| d.max((e.1 / a - 1.0).abs()));
    if gap_drift > GAP_STABILITY || amp_drift > AMPLITUDE_STABILITY {
        return Err(Error::NotStabilized(format!("gap drift {gap_drift:.2e}, amplitude drift {amp_drift:.2e}")));
    }
    Ok(AmplitudeFit { amplitude: a, gap: m, background: 0.0, u: c.len() - 1 })
}

fn plateau(c: &[f64]) -> Result<AmplitudeFit> {
    if c.len() < 8 {
        return Err(Error::NotStabilized(format!("{} points are too few", c.len())));
    }
    let d: Vec<f64> = c.windows(2).map(|w| w[0] - w[1]).collect();
    let mut backgrounds = Vec::with_capacity(d.len() - 1);
    let mut decay = None;
    for u in 0..d.len() - 1 {
        let scale = c[u + 2].abs().max(f64::MIN_POSITIVE);
        let r = d[u + 1] / d[u];
        if d[u + 1].abs() > NOISE * scale && r > 0.0 && r < 1.0 {
            backgrounds.push(c[u + 2] - d[u + 1] * r / (1.0 - r));
            let m = -r.ln();
            decay = Some((m, d[u] / ((1.0 - r) * (-(u as f64) * m).exp()), u));
        } else {
            backgrounds.push(c[u + 2]);
        }
    }
    let b = *backgrounds.last().unwrap();
    let drift = backgrounds[last_quarter(backgrounds.len())..]
        .iter()
        .fold(0.0f64, |m, x| m.max((x - b).abs()));
    if drift > GAP_STABILITY * b.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotStabilized(format!("background drift {drift:.2e}")));
    }
    let (gap, amplitude) = decay.map_or((f64::INFINITY, 0.0), |(m, a, _)| (m, a));
    Ok(AmplitudeFit { amplitude, gap, background: b, u: c.len() - 1 })
}

/// Least-squares polynomial in 1/L of the given degree, evaluated at 1/L = 0.
pub fn extrapolate(sizes: &[usize], values: &[f64], degree: usize) -> Result<f64> {
    if sizes.len() != values.len() {
        return Err(Error::DegenerateFit(format!("{} sizes vs {} values", sizes.len(), values.len())));
    }
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < degree + 1 || distinct.contains(&0) {
        return Err(Error::DegenerateFit(format!(
            "degree {degree} needs {} distinct positive sizes, got {sizes:?}",
            degree + 1
        )));
    }
    let x = DMatrix::from_fn(sizes.len(), degree + 1, |i, k| (1.0 / sizes[i] as f64).powi(k as i32));
    let y = DVector::from_column_slice(values);
    let coeffs = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    Ok(coeffs[0])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioOptions {
    pub cache_dir: Option<PathBuf>,
    /// First window length tried (at least 4L is enforced).
    pub rows_start: usize,
    /// Give up beyond this many rows.
    pub rows_cap: usize,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions { cache_dir: None, rows_start: 64, rows_cap: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRatio {
    pub width: usize,
    pub q: f64,
    pub bc: BoundaryCondition,
    pub ratio: f64,
    pub cylinder: AmplitudeFit,
    pub strip: AmplitudeFit,
    /// Bulk spin weight Δ and leading boundary weight Δ_b used in the
    /// conversion factor.
    pub delta: f64,
    pub delta_boundary: f64,
}

fn fit_geometry(geometry: Geometry, mode: FitMode, opts: &RatioOptions) -> Result<AmplitudeFit> {
    let mut corr = InfiniteCorrelator::new(geometry, opts.cache_dir.as_deref())?;
    let mut rows = opts.rows_start.max(4 * geometry.width);
    loop {
        corr.extend_to(rows)?;
        match amplitude_and_gap(corr.values(), mode) {
            Ok(fit) => {
                log::info!("{}: {fit:?}", geometry.label());
                return Ok(fit);
            }
            Err(Error::NotStabilized(msg)) if rows < opts.rows_cap => {
                log::debug!("{} at {rows} rows: {msg}", geometry.label());
                rows = (2 * rows).min(opts.rows_cap);
            }
            Err(e) => return Err(e),
        }
    }
}

/// λ/μ from the middle-column connectivities of an infinite cylinder and an
/// infinite strip of width L:
///
///   cylinder: C ≈ λ (2π/L)^{4Δ} e^{−4πΔu/L}
///   strip:    C ≈ μ (π/L)^{4Δ} 2^{2Δ_b−4Δ} e^{−πΔ_b u/L}
///
/// (logarithmic maps of the plane and the half-plane, points at mid-width),
/// which gives λ/μ = (A_cyl/A_strip)·2^{2Δ_b−8Δ}. Wired strips saturate
/// (Δ_b = 0), so their amplitude is the plateau.
pub fn lattice_ratio(width: usize, q: f64, bc: BoundaryCondition) -> Result<LatticeRatio> {
    lattice_ratio_with(width, q, bc, &RatioOptions::default())
}

pub fn lattice_ratio_with(width: usize, q: f64, bc: BoundaryCondition, opts: &RatioOptions) -> Result<LatticeRatio> {
    let coupling = Coupling::from_q(q)?;
    let delta = coupling.weight(KacIndex::SPIN);
    let (mode, delta_boundary) = match bc {
        BoundaryCondition::Wired => (FitMode::Plateau, 0.0),
        BoundaryCondition::Free => (FitMode::Decaying, coupling.weight(KacIndex::boundary(3))),
    };
    let cylinder = fit_geometry(Geometry::cylinder(width, q)?, FitMode::Decaying, opts)?;
    let strip = fit_geometry(Geometry::strip(width, bc, q)?, mode, opts)?;
    let a_strip = match mode {
        FitMode::Plateau => strip.background,
        FitMode::Decaying => strip.amplitude,
    };
    let ratio = cylinder.amplitude / a_strip * 2f64.powf(2.0 * delta_boundary - 8.0 * delta);
    Ok(LatticeRatio { width, q, bc, ratio, cylinder, strip, delta, delta_boundary })
}
