//! Virasoro four-point conformal blocks.
//!
//! Blocks are evaluated with Zamolodchikov's recursion in the elliptic nome
//! `q(x) = exp(-π K(1-x)/K(x))`:
//!
//! ```text
//! F(x) = (16q)^{P²} x^{(c-1)/24-Δ1-Δ2} (1-x)^{(c-1)/24-Δ1-Δ4} θ3(q)^{(c-1)/2-4ΣΔi} H(q),
//! H(q) = 1 + Σ_{m,n≥1} (16q)^{mn} R_{m,n} / (Δ - Δ_(m,n)) H_{Δ_(m,-n)}(q).
//! ```
//!
//! The four external weights are ordered as in `<V1(x) V2(0) V3(∞) V4(1)>`,
//! so the block is normalized as `x^{Δ-Δ1-Δ2} (1 + O(x))`.
//!
//! [`gram_oracle`] computes the same x-expansion from scratch out of Virasoro
//! commutators and is only used to cross-check the recursion.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cft::{Coupling, KacIndex};
use crate::error::{Error, Result};
use crate::series;

pub const DEFAULT_ORDER: usize = 24;
pub const MAX_ORDER: usize = 48;
/// Relative change allowed between the order-(n-4) and order-n partial sums.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-8;
/// A fusion factor below `VANISHING_RESIDUE` times its scale is an exact zero.
const VANISHING_RESIDUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Internal {
    Kac(KacIndex),
    Weight(f64),
}

/// A block with external weights in mirror pairs `(Δi, Δj, Δj, Δi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockQuery {
    pub coupling: Coupling,
    pub external_1: f64,
    pub external_2: f64,
    pub internal: Internal,
    pub channel: Channel,
}

impl BlockQuery {
    /// External weights ordered for the engine. The t-channel block at σ is
    /// the s-channel block of `(Δi, Δi, Δj, Δj)` at `1-σ`.
    pub fn engine_externals(&self) -> [f64; 4] {
        let (a, b) = (self.external_1, self.external_2);
        match self.channel {
            Channel::S => [a, b, b, a],
            Channel::T => [a, a, b, b],
        }
    }

    pub fn swapped(&self) -> Self {
        let channel = match self.channel {
            Channel::S => Channel::T,
            Channel::T => Channel::S,
        };
        BlockQuery { channel, ..*self }
    }

    fn internal_weight(&self) -> f64 {
        match self.internal {
            Internal::Kac(k) => self.coupling.weight(k),
            Internal::Weight(w) => w,
        }
    }
}

/// Series coefficients of `F(x) / x^{Δ-Δ1-Δ2}`; `coefficients[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSeries {
    pub query: BlockQuery,
    pub truncation_order: usize,
    pub coefficients: Vec<f64>,
}

/// Pieces of `H` around a pole with non-vanishing residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSplit {
    pub weight: f64,
    pub residue: f64,
    pub regular: f64,
    pub polar: f64,
}

/// `value = exp(log_prefactor) * series`, kept apart to survive large `P²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockValue {
    pub log_prefactor: f64,
    pub series: f64,
}

impl BlockValue {
    pub fn value(&self) -> f64 {
        self.log_prefactor.exp() * self.series
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (na, nb) = ((a + b) / 2.0, (a * b).sqrt());
        if (na - nb).abs() <= 1e-16 * na {
            return na;
        }
        a = na;
        b = nb;
    }
    a
}

/// Complete elliptic integral of the first kind, parameter `m = k²`.
pub fn elliptic_k(m: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}

/// Elliptic nome of the cross-ratio `x ∈ (0,1)`.
pub fn nome(x: f64) -> f64 {
    (-PI * elliptic_k(1.0 - x) / elliptic_k(x)).exp()
}

pub fn theta3(q: f64) -> f64 {
    let mut sum = 1.0;
    let mut n = 1u32;
    loop {
        let t = 2.0 * q.powi((n * n) as i32);
        sum += t;
        if t < 1e-18 * sum {
            return sum;
        }
        n += 1;
    }
}

#[derive(Debug, Clone)]
struct Pole {
    m: usize,
    n: usize,
    weight: f64,
    /// Exactly zero when it vanishes for these externals.
    residue: f64,
    /// h_j(Δ_(m,-n)) for j = 0..=order-mn
    table: Vec<f64>,
}

/// Recursion tables for one coupling and one ordered set of external weights.
#[derive(Debug, Clone)]
pub struct BlockEngine {
    coupling: Coupling,
    externals: [f64; 4],
    order: usize,
    poles: Vec<Pole>,
    convergence_tol: f64,
}

fn external_momentum(coupling: &Coupling, delta: f64) -> Result<f64> {
    let p11 = coupling.momentum(KacIndex::new(1, 1));
    let p2 = delta + p11 * p11;
    if p2 < -1e-14 {
        return Err(Error::Domain(format!("external weight {delta} has imaginary momentum")));
    }
    Ok(p2.max(0.0).sqrt())
}

impl BlockEngine {
    pub fn new(coupling: Coupling, externals: [f64; 4], order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Domain(format!("block order must be in 1..={MAX_ORDER}")));
        }
        let p = externals.map(|d| external_momentum(&coupling, d));
        let [p1, p2, p3, p4] = [p[0].clone()?, p[1].clone()?, p[2].clone()?, p[3].clone()?];
        let mom = |r: i32, s: i32| coupling.momentum(KacIndex::new(r, s));

        let mut poles = Vec::new();
        for m in 1..=order {
            for n in 1..=order / m {
                let (mi, ni) = (m as i32, n as i32);
                let mut num = 1.0;
                // R vanishes exactly iff one fusion factor does; each factor
                // is compared with its own scale
                let mut vanishes = false;
                for r in (1 - mi..mi).step_by(2) {
                    for s in (1 - ni..ni).step_by(2) {
                        let prs = mom(r, s);
                        for (f, scale) in [
                            (p2 + p1 + prs, p2.abs() + p1.abs() + prs.abs()),
                            (p2 - p1 + prs, p2.abs() + p1.abs() + prs.abs()),
                            (p3 + p4 + prs, p3.abs() + p4.abs() + prs.abs()),
                            (p3 - p4 + prs, p3.abs() + p4.abs() + prs.abs()),
                        ] {
                            num *= f;
                            vanishes |= f.abs() <= VANISHING_RESIDUE * scale;
                        }
                    }
                }
                let mut den = 1.0;
                for r in 1 - mi..=mi {
                    for s in 1 - ni..=ni {
                        if (r == 0 && s == 0) || (r == mi && s == ni) {
                            continue;
                        }
                        den *= 2.0 * mom(r, s);
                    }
                }
                // R does not depend on the internal weight, so a vanishing
                // residue removes the pole for every Δ.
                let residue = if vanishes { 0.0 } else { -num / (2.0 * den) };
                poles.push(Pole {
                    m,
                    n,
                    weight: coupling.weight(KacIndex::new(mi, ni)),
                    residue,
                    table: vec![0.0; order - m * n + 1],
                });
            }
        }

        // h_j(Δ_(m,-n)) by increasing j.
        let shifted: Vec<f64> = poles
            .iter()
            .map(|pl| coupling.weight(KacIndex::new(pl.m as i32, -(pl.n as i32))))
            .collect();
        for pl in poles.iter_mut() {
            pl.table[0] = 1.0;
        }
        for j in 1..=order {
            for a in 0..poles.len() {
                let level = poles[a].m * poles[a].n;
                if level + j > order {
                    continue;
                }
                let mut acc = 0.0;
                for pb in &poles {
                    let lb = pb.m * pb.n;
                    if lb > j || pb.residue == 0.0 {
                        continue;
                    }
                    acc += pb.residue / (shifted[a] - pb.weight) * pb.table[j - lb];
                }
                poles[a].table[j] = acc;
            }
        }

        Ok(BlockEngine {
            coupling,
            externals,
            order,
            poles,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
        })
    }

    pub fn with_convergence_tol(mut self, tol: f64) -> Self {
        self.convergence_tol = tol;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn externals(&self) -> [f64; 4] {
        self.externals
    }

    /// Coefficients `h_k` of `H = Σ h_k (16q)^k` at internal weight `delta`.
    pub fn h_coefficients(&self, delta: f64) -> Vec<f64> {
        let mut h = vec![0.0; self.order + 1];
        h[0] = 1.0;
        for pl in &self.poles {
            if pl.residue == 0.0 {
                continue;
            }
            let level = pl.m * pl.n;
            let factor = pl.residue / (delta - pl.weight);
            for (k, t) in pl.table.iter().enumerate() {
                h[level + k] += factor * t;
            }
        }
        h
    }

    /// Block at internal momentum `p` and cross-ratio `x`.
    pub fn value_at_momentum(&self, p: f64, x: f64) -> Result<BlockValue> {
        let delta = self.coupling.weight_of_momentum(p);
        let series = self.series_at_weight(delta, x)?;
        Ok(BlockValue { log_prefactor: self.log_prefactor(delta, x), series })
    }

    /// `H(Δ | q(x))`, the elliptic series without the prefactor.
    pub fn series_at_weight(&self, delta: f64, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("cross-ratio must lie in (0,1), got {x}")));
        }
        let h = self.h_coefficients(delta);
        let y = 16.0 * nome(x);
        let mut sum = 0.0;
        let mut early = 0.0;
        let mut yk = 1.0;
        for (k, hk) in h.iter().enumerate() {
            sum += hk * yk;
            if k + 4 == self.order {
                early = sum;
            }
            yk *= y;
        }
        if self.order >= 4 && (sum - early).abs() > self.convergence_tol * sum.abs() {
            return Err(Error::NonConvergence(format!(
                "x = {x}, internal weight {delta}: order {} vs {} differ by {:.2e}",
                self.order - 4,
                self.order,
                ((sum - early) / sum).abs()
            )));
        }
        Ok(sum)
    }

    /// Log of the non-series prefactor at internal weight `delta`.
    pub fn log_prefactor(&self, delta: f64, x: f64) -> f64 {
        let q = nome(x);
        let p11 = self.coupling.momentum(KacIndex::new(1, 1));
        let c24 = -p11 * p11;
        let [d1, d2, d3, d4] = self.externals;
        (delta - c24) * (16.0 * q).ln()
            + (c24 - d1 - d2) * x.ln()
            + (c24 - d1 - d4) * (1.0 - x).ln()
            + (12.0 * c24 - 4.0 * (d1 + d2 + d3 + d4)) * theta3(q).ln()
    }

    /// Residue of the pole at `Δ_(m,n)` vanishes for these externals.
    pub fn residue_vanishes(&self, m: usize, n: usize) -> bool {
        self.poles
            .iter()
            .find(|pl| pl.m == m && pl.n == n)
            .map(|pl| pl.residue == 0.0)
            .unwrap_or(true)
    }

    /// Degenerate internal index `(m,n)` whose pole lies inside the truncation.
    fn degenerate_pole(&self, kac: KacIndex) -> Option<(usize, usize)> {
        let (r2, s2) = (kac.r2(), kac.s2());
        if r2 > 0 && s2 > 0 && r2 % 2 == 0 && s2 % 2 == 0 {
            let (m, n) = ((r2 / 2) as usize, (s2 / 2) as usize);
            if m * n <= self.order {
                return Some((m, n));
            }
        }
        None
    }

    /// Block at a Kac internal index. At a degenerate index the pole must
    /// have vanishing residue; the remaining terms are then regular there.
    pub fn value_at_kac(&self, kac: KacIndex, x: f64) -> Result<BlockValue> {
        if let Some((m, n)) = self.degenerate_pole(kac) {
            if !self.residue_vanishes(m, n) {
                return Err(Error::Regularization(format!(
                    "block diverges at internal {kac}: residue does not vanish for these externals"
                )));
            }
        }
        self.value_at_momentum(self.coupling.momentum(kac), x)
    }

    /// Split of `H` at a degenerate index with non-vanishing residue:
    /// `H(Δ) = regular + residue / (Δ - Δ_(m,n)) * polar`, with `regular`
    /// evaluated at the degenerate weight.
    pub fn pole_split(&self, kac: KacIndex, x: f64) -> Result<Option<PoleSplit>> {
        let Some((m, n)) = self.degenerate_pole(kac) else {
            return Ok(None);
        };
        let Some(pole) = self.poles.iter().find(|pl| pl.m == m && pl.n == n && pl.residue != 0.0) else {
            return Ok(None);
        };
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("cross-ratio must lie in (0,1), got {x}")));
        }
        let y = 16.0 * nome(x);
        let delta = pole.weight;
        let mut regular = 0.0;
        let mut yk = 1.0;
        let mut h = vec![0.0; self.order + 1];
        h[0] = 1.0;
        for pl in &self.poles {
            if pl.residue == 0.0 || (pl.m == m && pl.n == n) {
                continue;
            }
            let factor = pl.residue / (delta - pl.weight);
            for (k, t) in pl.table.iter().enumerate() {
                h[pl.m * pl.n + k] += factor * t;
            }
        }
        for hk in &h {
            regular += hk * yk;
            yk *= y;
        }
        let level = m * n;
        let polar: f64 = pole.table.iter().enumerate().map(|(k, t)| t * y.powi((level + k) as i32)).sum();
        Ok(Some(PoleSplit { weight: delta, residue: pole.residue, regular, polar }))
    }

    /// x-expansion of the block, from the recursion.
    pub fn series_coefficients(&self, delta: f64, len: usize) -> Vec<f64> {
        let len = len.min(self.order + 1);
        let h = self.h_coefficients(delta);
        let q = series::nome_series(len + 1);
        // 16 q(x) / x, and 16 q(x) itself
        let sixteen_q_over_x: Vec<f64> = (0..len).map(|i| 16.0 * q[i + 1]).collect();
        let y: Vec<f64> = (0..len).map(|i| 16.0 * q[i]).collect();
        let p11 = self.coupling.momentum(KacIndex::new(1, 1));
        let c24 = -p11 * p11;
        let [d1, d2, d3, d4] = self.externals;

        let lead = series::pow(&sixteen_q_over_x, delta - c24, len);
        let mut one_minus_x = vec![0.0; len];
        one_minus_x[0] = 1.0;
        if len > 1 {
            one_minus_x[1] = -1.0;
        }
        let omx = series::pow(&one_minus_x, c24 - d1 - d4, len);
        let mut theta_coeffs = vec![0.0; len];
        theta_coeffs[0] = 1.0;
        let mut n = 1usize;
        while n * n < len {
            theta_coeffs[n * n] = 2.0;
            n += 1;
        }
        let qx: Vec<f64> = q[..len].to_vec();
        let theta = series::compose(&theta_coeffs, &qx, len);
        let theta_pow = series::pow(&theta, 12.0 * c24 - 4.0 * (d1 + d2 + d3 + d4), len);
        let hx = series::compose(&h[..len], &y, len);
        let out = series::mul(&lead, &omx, len);
        let out = series::mul(&out, &theta_pow, len);
        series::mul(&out, &hx, len)
    }
}

/// Conformal block at `sigma`, including its leading power.
pub fn block_value(query: &BlockQuery, sigma: f64, order: usize) -> Result<f64> {
    let engine = BlockEngine::new(query.coupling, query.engine_externals(), order)?;
    let x = match query.channel {
        Channel::S => sigma,
        Channel::T => 1.0 - sigma,
    };
    let v = match query.internal {
        Internal::Kac(k) => engine.value_at_kac(k, x)?,
        Internal::Weight(w) => {
            let p11 = query.coupling.momentum(KacIndex::new(1, 1));
            let p2 = w + p11 * p11;
            if p2 < 0.0 {
                return Err(Error::Domain(format!("internal weight {w} below the P=0 threshold")));
            }
            engine.value_at_momentum(p2.sqrt(), x)?
        }
    };
    Ok(v.value())
}

/// x-expansion of the block from the recursion, up to `order`.
pub fn block_series(query: &BlockQuery, order: usize) -> Result<BlockSeries> {
    let engine = BlockEngine::new(query.coupling, query.engine_externals(), order.max(1))?;
    let coefficients = engine.series_coefficients(query.internal_weight(), order + 1);
    Ok(BlockSeries { query: *query, truncation_order: order, coefficients })
}

fn partitions(n: usize) -> Vec<Vec<i32>> {
    fn rec(n: usize, max: usize, prefix: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            prefix.push(k as i32);
            rec(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

struct Virasoro {
    delta: f64,
    c: f64,
    memo: HashMap<Vec<i32>, f64>,
}

impl Virasoro {
    /// `<Δ| L_{w0} L_{w1} ... |Δ>`
    fn expect(&mut self, word: &[i32]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        if word.iter().sum::<i32>() != 0 || word[word.len() - 1] > 0 || word[0] < 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(word) {
            return v;
        }
        let result = if let Some(z) = word.iter().position(|&w| w == 0) {
            let level: i32 = -word[z + 1..].iter().sum::<i32>();
            let mut rest = word.to_vec();
            rest.remove(z);
            (self.delta + f64::from(level)) * self.expect(&rest)
        } else {
            let i = word.iter().rposition(|&w| w > 0).expect("positive mode present");
            let (a, b) = (word[i], word[i + 1]);
            let mut swapped = word.to_vec();
            swapped.swap(i, i + 1);
            let mut total = self.expect(&swapped);
            let mut merged = word[..i].to_vec();
            merged.push(a + b);
            merged.extend_from_slice(&word[i + 2..]);
            total += f64::from(a - b) * self.expect(&merged);
            if a + b == 0 {
                let mut dropped = word[..i].to_vec();
                dropped.extend_from_slice(&word[i + 2..]);
                total += self.c / 12.0 * f64::from(a * a * a - a) * self.expect(&dropped);
            }
            total
        };
        self.memo.insert(word.to_vec(), result);
        result
    }
}

/// Three-point factor `∏_i (Δ + Σ_{j>i} k_j + k_i Δ_v - Δ_s)`.
fn vertex_factor(parts: &[i32], delta: f64, dv: f64, ds: f64) -> f64 {
    let mut out = 1.0;
    for i in 0..parts.len() {
        let above: i32 = parts[i + 1..].iter().sum();
        out *= delta + f64::from(above) + f64::from(parts[i]) * dv - ds;
    }
    out
}

/// Block coefficients up to `level` built directly from the Virasoro algebra.
pub fn gram_oracle(query: &BlockQuery, level: usize) -> Result<Vec<f64>> {
    if level > 6 {
        return Err(Error::Domain("Gram oracle is limited to level 6".into()));
    }
    let delta = query.internal_weight();
    let [d1, d2, d3, d4] = query.engine_externals();
    let mut alg = Virasoro { delta, c: query.coupling.central_charge, memo: HashMap::new() };
    let mut out = vec![1.0];
    for n in 1..=level {
        let basis = partitions(n);
        let dim = basis.len();
        let gram = DMatrix::from_fn(dim, dim, |i, j| {
            // bra of L_{-k1}..L_{-kn}|Δ> is <Δ|L_{kn}..L_{k1}
            let mut word: Vec<i32> = basis[i].iter().rev().copied().collect();
            word.extend(basis[j].iter().map(|k| -k));
            alg.expect(&word)
        });
        let left = DVector::from_iterator(dim, basis.iter().map(|p| vertex_factor(p, delta, d4, d3)));
        let right = DVector::from_iterator(dim, basis.iter().map(|p| vertex_factor(p, delta, d1, d2)));
        let svd = gram.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-13 * smax) {
            return Err(Error::SingularGram { level: n });
        }
        let solved = gram.lu().solve(&right).ok_or(Error::SingularGram { level: n })?;
        out.push(left.dot(&solved));
    }
    Ok(out)
}
