//! Two-point connectivity in an infinitely long strip or cylinder.
//!
//! Both points sit in the same column, `u` rows apart, far from the ends:
//!
//!   C(u) = <Φ| T₁^u I₁ |ψ₀> / (Λ₀^u <φ₀|ψ₀>)
//!
//! with ψ₀, φ₀ the right/left Perron vectors of the unmarked transfer matrix,
//! I₁ the first insertion and T₁ the one-mark block. The final insertion and
//! the semi-infinite future are folded into Φ: if the second site is in the
//! marked part the future is φ₀, otherwise it is the two-mark vector F₂, the
//! fixed point of F₂ = (T₂₂ᵀ F₂ + T₂₀ᵀ φ₀)/Λ₀ (the marks must merge before
//! either closes).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::state::{Sector, NO_MARK};
use super::transfer::{StateVector, TransferMatrix};
use super::Geometry;
use crate::error::{Error, Result};

const EIGEN_TOL: f64 = 1e-14;
const MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSeries {
    pub geometry: Geometry,
    pub column: usize,
    /// `values[u]` = P(z₁ ~ z₂) at vertical distance u.
    pub values: Vec<f64>,
    /// ln Λ₀ per row.
    pub log_eigenvalue: f64,
}

pub struct InfiniteCorrelator {
    tm: TransferMatrix,
    column: usize,
    phi: Vec<f64>,
    overlap: f64,
    state: StateVector,
    log_lambda: f64,
    values: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Power iteration on the unmarked block; returns the vector normalized to
/// unit max together with Λ₀.
fn perron(tm: &TransferMatrix, transposed: bool) -> Result<(Vec<f64>, f64)> {
    let n = tm.sizes()[0];
    let mut x = StateVector { parts: [vec![1.0; n], Vec::new(), Vec::new()], log_scale: 0.0 };
    let mut lambda = 0.0;
    for it in 0..MAX_ITER {
        let mut y = if transposed { tm.apply_row_transposed(&x)? } else { tm.apply_row(&x)? };
        y.log_scale = 0.0;
        let new_lambda = y.normalize();
        let diff = max_diff(&x.parts[0], &y.parts[0]);
        x = y;
        if diff < EIGEN_TOL && (new_lambda - lambda).abs() <= EIGEN_TOL * new_lambda {
            log::debug!("Perron vector after {it} iterations, Λ₀ = {new_lambda}");
            let [v, _, _] = x.parts;
            return Ok((v, new_lambda));
        }
        lambda = new_lambda;
    }
    Err(Error::NotStabilized(format!("power iteration did not converge in {MAX_ITER} rows")))
}

impl InfiniteCorrelator {
    pub fn new(geometry: Geometry, cache_dir: Option<&Path>) -> Result<Self> {
        let all = [Sector::Unmarked, Sector::OneMark, Sector::TwoMarks];
        let tm = TransferMatrix::new(geometry, &all, &[Sector::Unmarked, Sector::OneMark], cache_dir)?;
        let (psi, lambda) = perron(&tm, false)?;
        let (phi0, _) = perron(&tm, true)?;
        let psi_vec = StateVector { parts: [psi.clone(), Vec::new(), Vec::new()], log_scale: 0.0 };
        let t_psi = tm.apply_row(&psi_vec)?;
        let overlap = dot(&phi0, &psi);
        let lambda = {
            let rq = dot(&phi0, &t_psi.parts[0]) / overlap;
            debug_assert!((rq - lambda).abs() < 1e-10 * lambda);
            rq
        };

        let f2 = Self::two_mark_future(&tm, &phi0, lambda)?;
        let column = geometry.middle();
        let s0 = tm.space(Sector::Unmarked).expect("built");
        let s1 = tm.space(Sector::OneMark).expect("built");
        let s2 = tm.space(Sector::TwoMarks).expect("built");
        let phi: Vec<f64> = (0..s1.len())
            .map(|t| {
                let mut row = s1.row(t);
                let a = row.marks[0];
                let c = row.labels[column];
                if c == a {
                    row.marks = [NO_MARK; 2];
                    phi0[s0.find(&row).expect("unmarked state")]
                } else {
                    row.marks = [a, c];
                    f2[s2.find(&row).expect("two-mark state")]
                }
            })
            .collect();

        let inserted = tm.insert_first(&psi_vec, column)?;
        let [_, v1, _] = inserted.parts;
        let state = StateVector { parts: [Vec::new(), v1, Vec::new()], log_scale: 0.0 };
        let c0 = dot(&phi, &state.parts[1]) / overlap;
        Ok(InfiniteCorrelator { tm, column, phi, overlap, state, log_lambda: lambda.ln(), values: vec![c0] })
    }

    fn two_mark_future(tm: &TransferMatrix, phi0: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let n2 = tm.sizes()[2];
        let mut f2 = vec![0.0; n2];
        for it in 0..MAX_ITER {
            let x = StateVector { parts: [phi0.to_vec(), Vec::new(), f2.clone()], log_scale: 0.0 };
            let y = tm.apply_row_transposed(&x)?;
            let [_, _, mut g] = y.parts;
            g.iter_mut().for_each(|a| *a /= lambda);
            let scale = g.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            let diff = max_diff(&f2, &g);
            f2 = g;
            if it > 0 && diff < EIGEN_TOL * scale {
                log::debug!("two-mark future vector after {it} iterations");
                return Ok(f2);
            }
        }
        Err(Error::NotStabilized("two-mark future vector did not converge".into()))
    }

    pub fn geometry(&self) -> &Geometry {
        self.tm.geometry()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Transfer until `values` covers u = 0..=u_max.
    pub fn extend_to(&mut self, u_max: usize) -> Result<&[f64]> {
        while self.values.len() <= u_max {
            let u = self.values.len();
            self.state = self.tm.apply_row(&self.state)?;
            self.state.normalize();
            let d = dot(&self.phi, &self.state.parts[1]) / self.overlap;
            let log_c = self.state.log_scale - u as f64 * self.log_lambda;
            let c = d * log_c.exp();
            if d != 0.0 && (c == 0.0 || !c.is_normal()) {
                return Err(Error::Underflow(format!("C({u}) = {d:e} * exp({log_c})")));
            }
            self.values.push(c);
        }
        Ok(&self.values)
    }

    pub fn series(&self) -> CorrelatorSeries {
        CorrelatorSeries {
            geometry: *self.tm.geometry(),
            column: self.column,
            values: self.values.clone(),
            log_eigenvalue: self.log_lambda,
        }
    }
}

/// Connectivity of two middle-column sites `u = 0..=u_max` rows apart.
pub fn correlator(geometry: &Geometry, u_max: usize, cache_dir: Option<&Path>) -> Result<CorrelatorSeries> {
    if u_max < 4 * geometry.width {
        return Err(Error::Domain(format!("u_max = {u_max} < 4L = {}", 4 * geometry.width)));
    }
    let mut c = InfiniteCorrelator::new(*geometry, cache_dir)?;
    c.extend_to(u_max)?;
    Ok(c.series())
}
