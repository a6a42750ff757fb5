//! F-functions, the boundary crossing equation and the universal ratio λ/μ.
//!
//! At rational `β²` individual structure constants and blocks have coincident
//! poles whose sum is finite. Every public entry point therefore evaluates at
//! `β² ± ε, β² ± 2ε` and Richardson-extrapolates when the coupling is
//! rational (see [`regularized`]).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blocks::{BlockEngine, DEFAULT_ORDER, MAX_ORDER};
use crate::cft::{self, Coupling, KacIndex};
use crate::error::{Error, Result};
use crate::special::LogValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Wired,
}

impl BoundaryCondition {
    /// Sign of `F^{(2)}` in the connectivity. With C and R as implemented
    /// the identity-carrying (wired) solution is `F^{(1)} + F^{(2)}`.
    pub fn sign(self) -> f64 {
        match self {
            BoundaryCondition::Free => -1.0,
            BoundaryCondition::Wired => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Wired => "wired",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(BoundaryCondition::Free),
            "wired" => Ok(BoundaryCondition::Wired),
            other => Err(Error::Domain(format!("unknown boundary condition {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Largest s-channel level N in (1,N).
    pub n_s: u32,
    /// Largest t-channel index N in (N,1).
    pub n_t: u32,
    pub block_order: usize,
    pub samples: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub condition_bound: f64,
    pub residual_bound: f64,
    /// β² shift for rational couplings.
    pub regularization_eps: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_s: 31,
            n_t: 12,
            block_order: DEFAULT_ORDER,
            samples: 40,
            sigma_min: 0.1,
            sigma_max: 0.9,
            condition_bound: 1e12,
            residual_bound: 1e-6,
            regularization_eps: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnsatz {
    pub n_s: u32,
    pub n_t: u32,
}

impl SpectrumAnsatz {
    pub fn s_channel(&self) -> Vec<KacIndex> {
        (1..=self.n_s as i32).map(KacIndex::degenerate).collect()
    }

    pub fn t_channel(&self) -> Vec<KacIndex> {
        (1..=self.n_t as i32).map(KacIndex::boundary).collect()
    }
}

impl From<&BootstrapConfig> for SpectrumAnsatz {
    fn from(c: &BootstrapConfig) -> Self {
        SpectrumAnsatz { n_s: c.n_s, n_t: c.n_t }
    }
}

/// Evaluate `f` directly, or around a rational `β²` by symmetric shifts and
/// Richardson extrapolation. Each output component is extrapolated separately.
pub fn regularized<F>(coupling: &Coupling, eps: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Coupling) -> Result<Vec<f64>>,
{
    if !coupling.is_rational() {
        return f(coupling);
    }
    let at = |d: f64| Coupling::from_beta_sq(coupling.beta_sq + d).and_then(|c| f(&c));
    let sym = |d: f64| -> Result<Vec<f64>> {
        let (a, b) = (at(d)?, at(-d)?);
        Ok(a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect())
    };
    let g1 = sym(eps)?;
    let g2 = sym(2.0 * eps)?;
    Ok(g1.iter().zip(&g2).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
}

fn regularized_scalar<F>(coupling: &Coupling, eps: f64, f: F) -> Result<f64>
where
    F: Fn(&Coupling) -> Result<f64>,
{
    Ok(regularized(coupling, eps, |c| f(c).map(|v| vec![v]))?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub value: f64,
    /// Last included term exceeded 1e-12 of the partial sum.
    pub truncation_warning: bool,
}

fn s_engine(f1: KacIndex, f2: KacIndex, coupling: &Coupling, order: usize) -> Result<BlockEngine> {
    let (d1, d2) = (coupling.weight(f1), coupling.weight(f2));
    BlockEngine::new(*coupling, [d1, d2, d2, d1], order)
}

/// Run `body` on an s-channel engine, retrying once at the largest order
/// when the series has not converged (σ close to 1).
fn with_s_engine<T>(
    f1: KacIndex,
    f2: KacIndex,
    coupling: &Coupling,
    order: usize,
    body: impl Fn(&BlockEngine) -> Result<T>,
) -> Result<T> {
    match body(&s_engine(f1, f2, coupling, order)?) {
        Err(Error::NonConvergence(_)) if order < MAX_ORDER => body(&s_engine(f1, f2, coupling, MAX_ORDER)?),
        other => other,
    }
}

/// Bulk-channel constant `D = C R` at level N, when finite.
pub fn bulk_constant(n: u32, f1: KacIndex, f2: KacIndex, coupling: &Coupling) -> Result<f64> {
    Ok(cft::ope_coefficient(n, f1, f2, coupling)? * cft::one_point_amplitude(n, coupling))
}

/// `C R F_s` for level N as a log-scale value.
fn f_term(n: u32, f1: KacIndex, f2: KacIndex, engine: &BlockEngine, x: f64) -> Result<LogValue> {
    let coupling = engine.coupling();
    let kac = KacIndex::degenerate(n as i32);
    let p = coupling.momentum(kac);
    let split = engine.pole_split(kac, x)?;
    let direct = match split {
        Some(_) => None,
        None => match cft::ope_coefficient_at(p, f1, f2, coupling) {
            Ok(c) => Some(c * LogValue::from_f64(cft::one_point_amplitude(n, coupling))),
            Err(Error::StructurePole { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    let prefactor = LogValue { log_abs: engine.log_prefactor(coupling.weight(kac), x), sign: 1 };
    if let Some(cr) = direct {
        return Ok(cr * prefactor * LogValue::from_f64(engine.value_at_kac(kac, x)?.series));
    }

    // C R is only known near P; its limit (and, against a block pole, its
    // derivative in Δ) comes from symmetric shifts.
    let cr_at = |q: f64| -> Result<LogValue> {
        Ok(cft::ope_coefficient_at(q, f1, f2, coupling)? * LogValue::from_f64(cft::one_point_at(q, coupling)))
    };
    let reference = cr_at(p + JOINT_DELTAS[0])?.log_abs;
    let rel = |v: LogValue| f64::from(v.sign) * (v.log_abs - reference).exp();
    let mut avg = Vec::new();
    let mut slope = Vec::new();
    for d in JOINT_DELTAS {
        let (hi, lo) = (rel(cr_at(p + d)?), rel(cr_at(p - d)?));
        avg.push((hi + lo) / 2.0);
        let dw = coupling.weight_of_momentum(p + d) - coupling.weight_of_momentum(p - d);
        slope.push((hi - lo) / dw);
    }
    let cr = richardson(&avg, kac)?;
    let total = match split {
        None => cr * engine.value_at_kac(kac, x)?.series,
        Some(sp) => {
            // a pole in the block survives unless C R vanishes there
            if cr.abs() > 1e-8 * avg[0].abs().max(1.0) {
                return Err(Error::Regularization(format!(
                    "block pole at {kac} is not cancelled by the structure constant"
                )));
            }
            let deriv = richardson(&slope, kac)?;
            deriv * sp.residue * sp.polar
        }
    };
    Ok(LogValue::from_f64(total) * LogValue { log_abs: reference, sign: 1 } * prefactor)
}

const JOINT_DELTAS: [f64; 3] = [2e-3, 1e-3, 5e-4];

/// Limit of `g(δ) = g0 + a δ² + b δ⁴ + …` from three successive halvings.
fn richardson(g: &[f64], kac: KacIndex) -> Result<f64> {
    let r1 = (4.0 * g[1] - g[0]) / 3.0;
    let r2 = (4.0 * g[2] - g[1]) / 3.0;
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if (r1 - r2).abs() > 1e-7 * scale.max(1e-300) {
        return Err(Error::Regularization(format!("joint limit unstable at {kac}")));
    }
    Ok((16.0 * r2 - r1) / 15.0)
}

fn f_function_exact(
    k: u32,
    f1: KacIndex,
    f2: KacIndex,
    sigma: f64,
    n_max: u32,
    engine: &BlockEngine,
) -> Result<FValue> {
    let mut sum = 0.0;
    let mut last = 0.0;
    let mut n = k;
    while n <= n_max {
        let t = f_term(n, f1, f2, engine, sigma)?.value();
        sum += t;
        last = t;
        n += 2;
    }
    Ok(FValue { value: sum, truncation_warning: last.abs() > 1e-12 * sum.abs() })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("cross-ratio must lie in (0,1), got {sigma}")))
    }
}

/// `F^{(k)}_{f1 f2}(σ) = Σ_{N = k, k+2, …} C^{(1,N)} R_{(1,N)} F_s(Δ_(1,N) | σ)`.
pub fn f_function(
    k: u32,
    f1: KacIndex,
    f2: KacIndex,
    sigma: f64,
    n_max: u32,
    coupling: &Coupling,
) -> Result<FValue> {
    f_function_with(k, f1, f2, sigma, n_max, coupling, &BootstrapConfig::default())
}

pub fn f_function_with(
    k: u32,
    f1: KacIndex,
    f2: KacIndex,
    sigma: f64,
    n_max: u32,
    coupling: &Coupling,
    config: &BootstrapConfig,
) -> Result<FValue> {
    check_sigma(sigma)?;
    if k == 0 {
        return Err(Error::Domain("F-function seed k must be >= 1".into()));
    }
    if n_max < k {
        return Ok(FValue { value: 0.0, truncation_warning: false });
    }
    let warn = std::cell::Cell::new(false);
    let value = regularized_scalar(coupling, config.regularization_eps, |c| {
        let v = with_s_engine(f1, f2, c, config.block_order, |e| {
            f_function_exact(k, f1, f2, sigma, n_max, e)
        })?;
        warn.set(warn.get() || v.truncation_warning);
        Ok(v.value)
    })?;
    Ok(FValue { value, truncation_warning: warn.get() })
}

fn connectivity_exact(bc: BoundaryCondition, sigma: f64, c: &Coupling, config: &BootstrapConfig) -> Result<f64> {
    let spin = KacIndex::SPIN;
    with_s_engine(spin, spin, c, config.block_order, |e| {
        let f1 = f_function_exact(1, spin, spin, sigma, config.n_s, e)?;
        let f2 = f_function_exact(2, spin, spin, sigma, config.n_s, e)?;
        Ok(f1.value + bc.sign() * f2.value)
    })
}

/// Two-point connectivity `G = F^{(1)} ± F^{(2)}` (+ wired, − free).
pub fn g_connectivity(bc: BoundaryCondition, sigma: f64, coupling: &Coupling) -> Result<f64> {
    g_connectivity_with(bc, sigma, coupling, &BootstrapConfig::default())
}

pub fn g_connectivity_with(
    bc: BoundaryCondition,
    sigma: f64,
    coupling: &Coupling,
    config: &BootstrapConfig,
) -> Result<f64> {
    check_sigma(sigma)?;
    regularized_scalar(coupling, config.regularization_eps, |c| connectivity_exact(bc, sigma, c, config))
}

/// `<V_(N/2,0) V_(M/2,0)>` with free boundary: `F^{(1)}`, zero unless N+M is even.
pub fn g_fuseau(n: u32, m: u32, sigma: f64, coupling: &Coupling) -> Result<f64> {
    g_fuseau_with(n, m, sigma, coupling, &BootstrapConfig::default())
}

pub fn g_fuseau_with(n: u32, m: u32, sigma: f64, coupling: &Coupling, config: &BootstrapConfig) -> Result<f64> {
    check_sigma(sigma)?;
    if n == 0 || m == 0 {
        return Err(Error::Domain("fuseau leg numbers must be >= 1".into()));
    }
    if (n + m) % 2 == 1 {
        return Ok(0.0);
    }
    let (a, b) = (KacIndex::fuseau(n as i32), KacIndex::fuseau(m as i32));
    Ok(f_function_with(1, a, b, sigma, config.n_s, coupling, config)?.value)
}

/// Known bulk-channel data of a two-point function.
#[derive(Debug, Clone, PartialEq)]
pub enum BulkSide {
    Connectivity(BoundaryCondition),
    Fuseau(u32, u32),
    /// Explicit `N → D^bulk_(1,N)` for the externals `f1, f2`; only
    /// meaningful at the coupling it was built for.
    Explicit { f1: KacIndex, f2: KacIndex, constants: BTreeMap<u32, f64> },
}

impl BulkSide {
    fn externals(&self) -> (KacIndex, KacIndex) {
        match self {
            BulkSide::Fuseau(n, m) => (KacIndex::fuseau(*n as i32), KacIndex::fuseau(*m as i32)),
            BulkSide::Explicit { f1, f2, .. } => (*f1, *f2),
            BulkSide::Connectivity(_) => (KacIndex::SPIN, KacIndex::SPIN),
        }
    }

    fn value(&self, sigma: f64, engine: &BlockEngine, n_s: u32) -> Result<f64> {
        let (f1, f2) = self.externals();
        match self {
            BulkSide::Connectivity(bc) => {
                let a = f_function_exact(1, f1, f2, sigma, n_s, engine)?.value;
                let b = f_function_exact(2, f1, f2, sigma, n_s, engine)?.value;
                Ok(a + bc.sign() * b)
            }
            BulkSide::Fuseau(n, m) => {
                if (n + m) % 2 == 1 {
                    Ok(0.0)
                } else {
                    Ok(f_function_exact(1, f1, f2, sigma, n_s, engine)?.value)
                }
            }
            BulkSide::Explicit { constants: map, .. } => {
                let mut s = 0.0;
                for (&n, &d) in map {
                    if d != 0.0 {
                        s += d * engine.value_at_kac(KacIndex::degenerate(n as i32), sigma)?.value();
                    }
                }
                Ok(s)
            }
        }
    }

    fn constants(&self, coupling: &Coupling, n_s: u32) -> BTreeMap<u32, f64> {
        let (f1, f2) = self.externals();
        match self {
            BulkSide::Explicit { constants, .. } => constants.clone(),
            BulkSide::Fuseau(n, m) if (n + m) % 2 == 1 => BTreeMap::new(),
            BulkSide::Fuseau(..) => (1..=n_s)
                .step_by(2)
                .filter_map(|k| bulk_constant(k, f1, f2, coupling).ok().map(|d| (k, d)))
                .collect(),
            BulkSide::Connectivity(bc) => (1..=n_s)
                .filter_map(|k| {
                    let sign = if k % 2 == 0 { bc.sign() } else { 1.0 };
                    bulk_constant(k, f1, f2, coupling).ok().map(|d| (k, sign * d))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSolution {
    pub bulk_constants: BTreeMap<u32, f64>,
    /// Solved `D^bdy_(N,1)`, keyed by N.
    pub boundary_constants: BTreeMap<u32, f64>,
    /// t-channel indices left out because their block diverges for these externals.
    pub excluded: Vec<u32>,
    pub residual: f64,
    pub condition_number: f64,
    pub sample_points: Vec<f64>,
}

/// Chebyshev nodes on `[lo, hi]`.
pub fn chebyshev_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = (PI * (i as f64 + 0.5) / n as f64).cos();
            (lo + hi) / 2.0 + (hi - lo) / 2.0 * t
        })
        .collect()
}

struct RawSolution {
    constants: Vec<(u32, f64)>,
    excluded: Vec<u32>,
    residual: f64,
    cond: f64,
}

fn solve_exact(
    bulk: &BulkSide,
    ansatz: &SpectrumAnsatz,
    coupling: &Coupling,
    config: &BootstrapConfig,
    points: &[f64],
) -> Result<RawSolution> {
    let (f1, f2) = bulk.externals();
    let s_eng = s_engine(f1, f2, coupling, config.block_order)?;
    let (d1, d2) = (coupling.weight(f1), coupling.weight(f2));
    let t_eng = BlockEngine::new(*coupling, [d1, d1, d2, d2], config.block_order)?;

    let mut admitted = Vec::new();
    let mut excluded = Vec::new();
    for kac in ansatz.t_channel() {
        let n = (kac.r2() / 2) as u32;
        let divergent = (n as usize) <= t_eng.order() && !t_eng.residue_vanishes(n as usize, 1);
        if divergent {
            excluded.push(n);
        } else {
            admitted.push((n, kac));
        }
    }

    let rhs: Vec<f64> = points
        .iter()
        .map(|&s| bulk.value(s, &s_eng, ansatz.n_s))
        .collect::<Result<_>>()?;
    let rows = points.len();
    let cols = admitted.len();
    if rows < 2 * cols {
        return Err(Error::Domain(format!(
            "need at least {} sample points for {cols} unknowns",
            2 * cols
        )));
    }
    let mut a = DMatrix::zeros(rows, cols);
    for (i, &s) in points.iter().enumerate() {
        for (j, &(_, kac)) in admitted.iter().enumerate() {
            a[(i, j)] = t_eng.value_at_kac(kac, 1.0 - s)?.value();
        }
    }
    // Equilibrate columns before solving.
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm().max(1e-300)).collect();
    for (j, sc) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / sc);
    }
    let b = DVector::from_vec(rhs.clone());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > config.condition_bound {
        return Err(Error::IllConditioned { cond, bound: config.condition_bound });
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Domain(e.to_string()))?;
    let fitted = &a * &x;
    let mut residual: f64 = 0.0;
    for i in 0..rows {
        let diff = (fitted[i] - rhs[i]).abs();
        let r = if rhs[i] != 0.0 { diff / rhs[i].abs() } else { diff };
        residual = residual.max(r);
    }
    let constants = admitted
        .iter()
        .enumerate()
        .map(|(j, &(n, _))| (n, x[j] / scales[j]))
        .collect();
    Ok(RawSolution { constants, excluded, residual, cond })
}

/// Least-squares solution of the crossing equation for the boundary-channel
/// constants, given the bulk channel.
pub fn solve_crossing(
    bulk: &BulkSide,
    ansatz: &SpectrumAnsatz,
    coupling: &Coupling,
    config: &BootstrapConfig,
) -> Result<CrossingSolution> {
    let points = chebyshev_points(config.samples, config.sigma_min, config.sigma_max);
    if matches!(bulk, BulkSide::Explicit { .. }) && coupling.is_rational() {
        let raw = solve_exact(bulk, ansatz, coupling, config, &points)?;
        return finish(bulk, ansatz, coupling, config, points, raw);
    }
    // Shifted evaluations share admitted/excluded sets; pack (residual, cond, constants).
    let meta = std::cell::RefCell::new(None::<(Vec<u32>, Vec<u32>)>);
    let worst = std::cell::Cell::new((0.0f64, 0.0f64));
    let packed = regularized(coupling, config.regularization_eps, |c| {
        let raw = solve_exact(bulk, ansatz, c, config, &points)?;
        let (r, k) = worst.get();
        worst.set((r.max(raw.residual), k.max(raw.cond)));
        let keys: Vec<u32> = raw.constants.iter().map(|p| p.0).collect();
        let mut m = meta.borrow_mut();
        match m.as_ref() {
            Some((k0, _)) if *k0 != keys => {
                return Err(Error::Regularization("t-channel content changed under shift".into()))
            }
            _ => *m = Some((keys, raw.excluded.clone())),
        }
        Ok(raw.constants.iter().map(|p| p.1).collect())
    })?;
    let (keys, excluded) = meta.into_inner().expect("at least one evaluation");
    let (residual, cond) = worst.get();
    let raw = RawSolution {
        constants: keys.into_iter().zip(packed).collect(),
        excluded,
        residual,
        cond,
    };
    finish(bulk, ansatz, coupling, config, points, raw)
}

fn finish(
    bulk: &BulkSide,
    ansatz: &SpectrumAnsatz,
    coupling: &Coupling,
    config: &BootstrapConfig,
    points: Vec<f64>,
    raw: RawSolution,
) -> Result<CrossingSolution> {
    if raw.residual > config.residual_bound {
        return Err(Error::NoSolution(raw.residual));
    }
    Ok(CrossingSolution {
        bulk_constants: bulk.constants(coupling, ansatz.n_s),
        boundary_constants: raw.constants.into_iter().collect(),
        excluded: raw.excluded,
        residual: raw.residual,
        condition_number: raw.cond,
        sample_points: points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointResult {
    pub bc: BoundaryCondition,
    pub lambda: f64,
    pub mu: f64,
    pub ratio: f64,
    pub boundary_weight: f64,
    pub crossing_residual: f64,
    /// σ^{2Δ} G(σ) extrapolated to σ = 0 numerically.
    pub lambda_numeric: f64,
}

/// Cross-ratios used to confirm λ numerically.
pub const LAMBDA_CHECK_SIGMAS: [f64; 2] = [1e-6, 1e-7];
pub const LAMBDA_CHECK_TOL: f64 = 1e-6;

/// λ, μ and λ/μ for the spin two-point connectivity.
pub fn two_point_result(bc: BoundaryCondition, coupling: &Coupling) -> Result<TwoPointResult> {
    two_point_result_with(bc, coupling, &BootstrapConfig::default())
}

pub fn two_point_result_with(
    bc: BoundaryCondition,
    coupling: &Coupling,
    config: &BootstrapConfig,
) -> Result<TwoPointResult> {
    let spin = KacIndex::SPIN;
    let lambda = regularized_scalar(coupling, config.regularization_eps, |c| bulk_constant(1, spin, spin, c))?;

    let delta = coupling.weight(spin);
    let a = coupling.weight(KacIndex::degenerate(2)).min(coupling.weight(KacIndex::degenerate(3)));
    let [s1, s2] = LAMBDA_CHECK_SIGMAS;
    let g1 = g_connectivity_with(bc, s1, coupling, config)? * s1.powf(2.0 * delta);
    let g2 = g_connectivity_with(bc, s2, coupling, config)? * s2.powf(2.0 * delta);
    // remove the leading σ^a correction
    let lambda_numeric = (g2 * s1.powf(a) - g1 * s2.powf(a)) / (s1.powf(a) - s2.powf(a));
    if (lambda_numeric - lambda).abs() > LAMBDA_CHECK_TOL * lambda.abs() {
        return Err(Error::InconsistentLimit { analytic: lambda, numeric: lambda_numeric });
    }

    let solution = solve_crossing(&BulkSide::Connectivity(bc), &config.into(), coupling, config)?;
    let (lead, boundary_weight) = match bc {
        BoundaryCondition::Wired => (1, 0.0),
        BoundaryCondition::Free => (3, coupling.weight(KacIndex::boundary(3))),
    };
    let mu = *solution
        .boundary_constants
        .get(&lead)
        .ok_or_else(|| Error::Domain(format!("t-channel ansatz lacks ({lead},1)")))?;
    Ok(TwoPointResult {
        bc,
        lambda,
        mu,
        ratio: lambda / mu,
        boundary_weight,
        crossing_residual: solution.residual,
        lambda_numeric,
    })
}

/// `(λ/μ)_wired = -sin(πβ²) / cos(π/(2β²))`.
pub fn ratio_wired_closed_form(coupling: &Coupling) -> Result<f64> {
    let den = (PI / (2.0 * coupling.beta_sq)).cos();
    if den.abs() < 1e-14 {
        return Err(Error::Pole { function: "wired ratio", x: coupling.beta_sq });
    }
    Ok(-(PI * coupling.beta_sq).sin() / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let r = |q: f64| ratio_wired_closed_form(&Coupling::from_q(q).unwrap()).unwrap();
        assert!((r(2.0) - 2f64.sqrt()).abs() < 1e-14);
        assert!((r(1.0) - 1.5f64.sqrt()).abs() < 1e-14);
        assert!((r(3.0) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn closed_form_pole() {
        let c = Coupling::from_beta_sq(1.0).unwrap();
        assert!(matches!(ratio_wired_closed_form(&c), Err(Error::Pole { .. })));
        // the q → 0 end is regular
        let c = Coupling::from_beta_sq(0.5 + 1e-12).unwrap();
        assert!((ratio_wired_closed_form(&c).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_f_sum() {
        let c = Coupling::from_q(2.5).unwrap();
        let v = f_function(2, KacIndex::SPIN, KacIndex::SPIN, 0.5, 1, &c).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn chebyshev_nodes_inside_interval() {
        let p = chebyshev_points(40, 0.1, 0.9);
        assert_eq!(p.len(), 40);
        assert!(p.iter().all(|&s| s > 0.1 && s < 0.9));
    }
}
