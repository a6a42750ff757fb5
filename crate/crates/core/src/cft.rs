//! Coulomb-gas parametrization of the critical FK line, Kac indices and the
//! analytic structure constants entering the bulk channel.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{barnes_double_gamma, LogValue};

/// A point `(Q, β², c)` on the dense branch `β² ∈ (1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub q: f64,
    pub beta_sq: f64,
    pub central_charge: f64,
}

impl Coupling {
    /// Coupling with `Q = 4cos²(πβ²)` on the dense branch.
    pub fn from_q(q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 4.0) {
            return Err(Error::Domain(format!("Q must lie in (0, 4], got {q}")));
        }
        let beta_sq = (-(q.sqrt()) / 2.0).clamp(-1.0, 1.0).acos() / PI;
        Ok(Self::from_beta_sq_unchecked(beta_sq))
    }

    /// Any `β² > 0`; used for small off-branch shifts around rational couplings.
    pub fn from_beta_sq(beta_sq: f64) -> Result<Self> {
        if !(beta_sq > 0.0 && beta_sq.is_finite()) {
            return Err(Error::Domain(format!("beta^2 must be positive, got {beta_sq}")));
        }
        Ok(Self::from_beta_sq_unchecked(beta_sq))
    }

    fn from_beta_sq_unchecked(beta_sq: f64) -> Self {
        let beta = beta_sq.sqrt();
        let c = (PI * beta_sq).cos();
        Coupling {
            q: 4.0 * c * c,
            beta_sq,
            central_charge: 1.0 - 6.0 * (beta - 1.0 / beta).powi(2),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta_sq.sqrt()
    }

    /// `Q/2 = (β + 1/β)/2`, the Gamma_β normalization point.
    pub fn half_background(&self) -> f64 {
        let b = self.beta();
        (b + 1.0 / b) / 2.0
    }

    /// True when `β²` is a rational with small denominator. At such points
    /// individual blocks and structure constants hit coincident poles.
    pub fn is_rational(&self) -> bool {
        rational_approx(self.beta_sq, 120, 1e-10).is_some()
    }

    pub fn momentum(&self, kac: KacIndex) -> f64 {
        let b = self.beta();
        (kac.r() * b - kac.s() / b) / 2.0
    }

    pub fn weight(&self, kac: KacIndex) -> f64 {
        weight(kac, self)
    }

    /// Conformal weight `P² - P_{(1,1)}²` of an arbitrary momentum.
    pub fn weight_of_momentum(&self, p: f64) -> f64 {
        let p11 = self.momentum(KacIndex::new(1, 1));
        p * p - p11 * p11
    }
}

pub(crate) fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    (1..=max_den).find_map(|d| {
        let n = (x * d as f64).round();
        ((x - n / d as f64).abs() < tol).then_some((n as i64, d))
    })
}

/// Kac indices `(r, s)`, each an integer or half-integer, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KacIndex {
    r2: i32,
    s2: i32,
}

impl KacIndex {
    pub const fn new(r: i32, s: i32) -> Self {
        KacIndex { r2: 2 * r, s2: 2 * s }
    }

    /// Indices given as `(2r, 2s)`.
    pub const fn doubled(r2: i32, s2: i32) -> Self {
        KacIndex { r2, s2 }
    }

    pub fn r(&self) -> f64 {
        f64::from(self.r2) / 2.0
    }

    pub fn s(&self) -> f64 {
        f64::from(self.s2) / 2.0
    }

    pub fn r2(&self) -> i32 {
        self.r2
    }

    pub fn s2(&self) -> i32 {
        self.s2
    }

    pub fn negated(&self) -> Self {
        KacIndex { r2: -self.r2, s2: -self.s2 }
    }

    pub const SPIN: KacIndex = KacIndex::doubled(0, 1);

    pub const fn fuseau(n: i32) -> Self {
        KacIndex::doubled(n, 0)
    }

    pub const fn degenerate(n: i32) -> Self {
        KacIndex::new(1, n)
    }

    pub const fn boundary(n: i32) -> Self {
        KacIndex::new(n, 1)
    }
}

impl fmt::Display for KacIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: i32| {
            if v % 2 == 0 {
                format!("{}", v / 2)
            } else {
                format!("{v}/2")
            }
        };
        write!(f, "({},{})", show(self.r2), show(self.s2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    /// N-leg bulk operator.
    BulkFuseau(u32),
    /// FK cluster (spin) operator.
    BulkSpin,
    /// Diagonal degenerate bulk field of level N.
    BulkDegenerate(u32),
    /// Boundary (N-1)-leg operator.
    Boundary(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldLabel {
    pub kind: FieldKind,
    pub kac: KacIndex,
}

impl FieldLabel {
    pub fn new(kind: FieldKind) -> Self {
        let kac = match kind {
            FieldKind::BulkFuseau(n) => KacIndex::fuseau(n as i32),
            FieldKind::BulkSpin => KacIndex::SPIN,
            FieldKind::BulkDegenerate(n) => KacIndex::degenerate(n as i32),
            FieldKind::Boundary(n) => KacIndex::boundary(n as i32),
        };
        FieldLabel { kind, kac }
    }

    /// Left and right conformal weights. Bulk `(r,s)` has `(Δ_(r,s), Δ_(r,-s))`.
    pub fn weights(&self, coupling: &Coupling) -> (f64, f64) {
        match self.kind {
            FieldKind::Boundary(_) => (weight(self.kac, coupling), 0.0),
            _ => (
                weight(self.kac, coupling),
                weight(KacIndex::doubled(self.kac.r2, -self.kac.s2), coupling),
            ),
        }
    }
}

/// Kac weight `Δ_(r,s) = P_(r,s)² - P_(1,1)²`.
pub fn weight(kac: KacIndex, coupling: &Coupling) -> f64 {
    coupling.weight_of_momentum(coupling.momentum(kac))
}

/// Bulk-channel OPE coefficient `C^{(1,N)}_{f1 f2}`.
pub fn ope_coefficient(n: u32, f1: KacIndex, f2: KacIndex, coupling: &Coupling) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("degenerate level N must be >= 1".into()));
    }
    let p = coupling.momentum(KacIndex::degenerate(n as i32));
    Ok(ope_coefficient_at(p, f1, f2, coupling)?.value())
}

/// The same formula with the exchanged momentum `P` left free, in log scale.
pub fn ope_coefficient_at(p: f64, f1: KacIndex, f2: KacIndex, coupling: &Coupling) -> Result<LogValue> {
    let b = coupling.beta();
    let half_q = coupling.half_background();
    let gamma_b = |x: f64, signs: [i8; 3]| {
        barnes_double_gamma(x, b).map_err(|e| match e {
            Error::Pole { .. } => Error::StructurePole { signs, x },
            other => other,
        })
    };

    let mut num = LogValue::from_f64(16.0 * p)
        * LogValue::from_f64((PI * coupling.beta_sq).sin())
        * LogValue::from_f64((PI / coupling.beta_sq).sin());
    if p == 0.0 {
        return Err(Error::StructurePole { signs: [0, 0, 1], x: 0.0 });
    }
    num = num * gamma_b(2.0 * p, [0, 0, 1])? * gamma_b(-2.0 * p, [0, 0, -1])?;

    let mut den = LogValue::ONE;
    for e1 in [1i8, -1] {
        for e2 in [1i8, -1] {
            let rr = (f64::from(e1) * f1.r() + f64::from(e2) * f2.r()).abs();
            let ss = f64::from(e1) * f1.s() + f64::from(e2) * f2.s();
            for e3 in [1i8, -1] {
                let x = half_q + b / 2.0 * rr + ss / (2.0 * b) + f64::from(e3) * p;
                den = den * gamma_b(x, [e1, e2, e3])?;
            }
        }
    }
    Ok(num / den)
}

/// One-point amplitude `R_(1,N) = sin(2π P_(1,N) / β)`.
pub fn one_point_amplitude(n: u32, coupling: &Coupling) -> f64 {
    one_point_at(coupling.momentum(KacIndex::degenerate(n as i32)), coupling)
}

pub fn one_point_at(p: f64, coupling: &Coupling) -> f64 {
    (2.0 * PI * p / coupling.beta()).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ising_and_percolation_couplings() {
        let c = Coupling::from_q(2.0).unwrap();
        assert!((c.beta_sq - 0.75).abs() < 1e-15);
        assert!((c.central_charge - 0.5).abs() < 1e-14);
        let c = Coupling::from_q(1.0).unwrap();
        assert!((c.beta_sq - 2.0 / 3.0).abs() < 1e-15);
        assert!(c.central_charge.abs() < 1e-14);
        let c = Coupling::from_q(4.0).unwrap();
        assert_eq!(c.beta_sq, 1.0);
        assert!((c.central_charge - 1.0).abs() < 1e-15);
        let c = Coupling::from_q(3.0).unwrap();
        assert!((c.central_charge - 0.8).abs() < 1e-14);
    }

    #[test]
    fn coupling_domain() {
        for q in [0.0, -1.0, 4.5, f64::NAN] {
            assert!(Coupling::from_q(q).is_err());
        }
    }

    #[test]
    fn q_round_trip() {
        for q in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5] {
            let c = Coupling::from_q(q).unwrap();
            assert!((c.q - q).abs() < 1e-14, "{q}");
        }
    }

    #[test]
    fn kac_weights_at_ising() {
        let c = Coupling::from_q(2.0).unwrap();
        assert!(weight(KacIndex::new(1, 1), &c).abs() < 1e-15);
        assert!((weight(KacIndex::SPIN, &c) - 1.0 / 16.0).abs() < 1e-15);
        assert!((weight(KacIndex::new(3, 1), &c) - 0.5).abs() < 1e-15);
        assert!((weight(KacIndex::new(2, 1), &c) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn weight_reflection() {
        let c = Coupling::from_q(2.7).unwrap();
        for r2 in -6..=6 {
            for s2 in -6..=6 {
                let k = KacIndex::doubled(r2, s2);
                assert!((weight(k, &c) - weight(k.negated(), &c)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn one_point_values() {
        let c = Coupling::from_q(2.0).unwrap();
        assert!((one_point_amplitude(1, &c) + 3f64.sqrt() / 2.0).abs() < 1e-14);
        // P_(1,2) = (β - 2/β)/2 → 2πP/β = π(1 - 2/β²) = -5π/3
        assert!((one_point_amplitude(2, &c) - 3f64.sqrt() / 2.0).abs() < 1e-14);
        let c4 = Coupling::from_q(4.0).unwrap();
        assert!(one_point_amplitude(1, &c4).abs() < 1e-15);
    }

    #[test]
    fn field_labels() {
        assert_eq!(FieldLabel::new(FieldKind::BulkSpin).kac, KacIndex::doubled(0, 1));
        assert_eq!(FieldLabel::new(FieldKind::BulkFuseau(3)).kac, KacIndex::doubled(3, 0));
        assert_eq!(FieldLabel::new(FieldKind::BulkDegenerate(2)).kac, KacIndex::new(1, 2));
        assert_eq!(FieldLabel::new(FieldKind::Boundary(3)).kac, KacIndex::new(3, 1));
        let c = Coupling::from_q(2.0).unwrap();
        let (l, r) = FieldLabel::new(FieldKind::BulkSpin).weights(&c);
        assert!((l - r).abs() < 1e-15);
        assert_eq!(KacIndex::SPIN.to_string(), "(0,1/2)");
    }

    #[test]
    fn rational_detection() {
        assert!(Coupling::from_q(2.0).unwrap().is_rational());
        assert!(Coupling::from_q(1.0).unwrap().is_rational());
        assert!(!Coupling::from_q(2.5).unwrap().is_rational());
        assert!(!Coupling::from_q(1.5).unwrap().is_rational());
    }

    #[test]
    fn ope_symmetric_and_pole_reporting() {
        let c = Coupling::from_q(2.5).unwrap();
        let a = KacIndex::SPIN;
        let f = KacIndex::fuseau(2);
        for n in 1..6 {
            let x = ope_coefficient(n, a, f, &c).unwrap();
            let y = ope_coefficient(n, f, a, &c).unwrap();
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
        let c4 = Coupling::from_q(4.0).unwrap();
        assert!(matches!(
            ope_coefficient(1, a, a, &c4),
            Err(Error::StructurePole { .. })
        ));
    }
}
