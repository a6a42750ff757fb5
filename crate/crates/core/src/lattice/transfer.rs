//! Per-edge sparse operators and row application.
//!
//! Every edge operator maps a state to itself (with an "identity" weight) plus
//! at most one other state (the "image"). Tables store the image index and a
//! weight code per source state; forward application gathers over reversed
//! tables so each output amplitude depends on a bounded preimage only.

use std::path::Path;

use rayon::prelude::*;

use super::cache;
use super::state::{Row, Sector, StateSpace, NO_MARK};
use super::Geometry;
use crate::error::{Error, Result};

/// `(row, column)`, both 0-based.
pub type Site = (usize, usize);

const NONE: u32 = u32::MAX;
const TO_UNMARKED: u32 = 1 << 31;

// weight codes: (identity weight, image weight)
const OPEN: u8 = 0; // (v, 1): vertical edge absent, part survives
const SELF_CLOSE: u8 = 1; // (v + q, -): singleton part closes, state unchanged
const KILL: u8 = 2; // (v, -): marked singleton closes -> weight 0
const DOUBLE: u8 = 3; // (1 + v, -): edge state irrelevant to connectivity
const JOIN: u8 = 4; // (1, v)
const BOUNDARY_CLOSE: u8 = 5; // (v + q1, -)

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeOp {
    Vertical(usize),
    Horizontal(usize, usize),
}

#[derive(Debug, Default)]
struct OpTable {
    code: Vec<u8>,
    dest: Vec<u32>,
}

#[derive(Debug, Default)]
struct Preimages {
    offsets: Vec<u32>,
    src: Vec<u32>,
}

impl Preimages {
    fn of(&self, t: usize) -> &[u32] {
        &self.src[self.offsets[t] as usize..self.offsets[t + 1] as usize]
    }
}

/// Amplitudes per sector; an empty sector vector means "not in use".
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub parts: [Vec<f64>; 3],
    /// Accumulated log of the factors divided out by [`StateVector::normalize`].
    pub log_scale: f64,
}

impl StateVector {
    pub fn empty() -> StateVector {
        StateVector { parts: [Vec::new(), Vec::new(), Vec::new()], log_scale: 0.0 }
    }

    pub fn sector(&self, s: Sector) -> &[f64] {
        &self.parts[s as usize]
    }

    pub fn max_abs(&self) -> f64 {
        self.parts.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Divide by the largest amplitude, recording its log. Zero vectors are
    /// left alone.
    pub fn normalize(&mut self) -> f64 {
        let m = self.max_abs();
        if m > 0.0 && m.is_finite() {
            for x in self.parts.iter_mut().flatten() {
                *x /= m;
            }
            self.log_scale += m.ln();
        }
        m
    }
}

pub struct TransferMatrix {
    geometry: Geometry,
    ops: Vec<EdgeOp>,
    spaces: [Option<StateSpace>; 3],
    tables: [Vec<OpTable>; 3],
    pre: [Vec<Preimages>; 3],
    cross: Vec<Preimages>,
    weights: [(f64, f64); 6],
}

impl std::fmt::Debug for TransferMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransferMatrix")
            .field("geometry", &self.geometry)
            .field("sizes", &self.sizes())
            .finish()
    }
}

impl TransferMatrix {
    /// Build tables for `sectors` (the unmarked one is always included).
    /// Sectors listed in `forward` also get preimage tables for
    /// [`TransferMatrix::apply_row`]; the rest only support the transpose.
    pub fn new(geometry: Geometry, sectors: &[Sector], forward: &[Sector], cache_dir: Option<&Path>) -> Result<Self> {
        let mut ops: Vec<EdgeOp> = (0..geometry.width).map(EdgeOp::Vertical).collect();
        ops.extend(geometry.horizontal_edges().into_iter().map(|(a, b)| EdgeOp::Horizontal(a, b)));

        let mut spaces: [Option<StateSpace>; 3] = [None, None, None];
        for s in [Sector::Unmarked, Sector::OneMark, Sector::TwoMarks] {
            if s == Sector::Unmarked || sectors.contains(&s) || forward.contains(&s) {
                spaces[s as usize] = Some(cache::state_space(&geometry, s, cache_dir)?);
            }
        }
        let (v, q, q1) = (geometry.v, geometry.q, geometry.q1);
        let weights = [(v, 1.0), (v + q, 0.0), (v, 0.0), (1.0 + v, 0.0), (1.0, v), (v + q1, 0.0)];
        let mut tm = TransferMatrix {
            geometry,
            ops,
            spaces,
            tables: Default::default(),
            pre: Default::default(),
            cross: Vec::new(),
            weights,
        };
        for k in 0..3 {
            if tm.spaces[k].is_some() {
                tm.tables[k] = tm.ops.iter().map(|&op| tm.build_table(k, op)).collect::<Result<_>>()?;
            }
        }
        for k in 0..3 {
            if tm.spaces[k].is_some() && (k == 0 || forward.contains(&Sector::from_marks(k))) {
                let n = tm.len(k);
                tm.pre[k] = tm.tables[k].iter().map(|t| invert(t, n, false)).collect();
            }
        }
        if forward.contains(&Sector::TwoMarks) {
            let n0 = tm.len(0);
            tm.cross = tm.tables[2].iter().map(|t| invert(t, n0, true)).collect();
        }
        log::info!("transfer matrix {}: sector sizes {:?}", geometry.label(), tm.sizes());
        Ok(tm)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn space(&self, s: Sector) -> Option<&StateSpace> {
        self.spaces[s as usize].as_ref()
    }

    fn len(&self, k: usize) -> usize {
        self.spaces[k].as_ref().map_or(0, |s| s.len())
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.len(0), self.len(1), self.len(2)]
    }

    fn build_table(&self, k: usize, op: EdgeOp) -> Result<OpTable> {
        let space = self.spaces[k].as_ref().expect("sector present");
        let g = &self.geometry;
        let n = space.len();
        let mut table = OpTable { code: Vec::with_capacity(n), dest: Vec::with_capacity(n) };
        for i in 0..n {
            let row = space.row(i);
            let (code, image) = match op {
                EdgeOp::Vertical(j) if g.is_boundary_column(j) => (DOUBLE, None),
                EdgeOp::Vertical(j) => {
                    let p = row.labels[j];
                    if row.part_size(p) > 1 {
                        let mut r = row;
                        r.detach(j);
                        (OPEN, Some(r))
                    } else if row.is_marked(p) {
                        (KILL, None)
                    } else if g.is_wired() && p == row.labels[0] {
                        (BOUNDARY_CLOSE, None)
                    } else {
                        (SELF_CLOSE, None)
                    }
                }
                EdgeOp::Horizontal(a, b) => {
                    if row.labels[a] == row.labels[b] {
                        (DOUBLE, None)
                    } else {
                        let mut r = row;
                        r.join(a, b);
                        (JOIN, Some(r))
                    }
                }
            };
            let dest = match image {
                None => NONE,
                Some(r) => {
                    let sector = r.sector();
                    let target = self.spaces[sector as usize].as_ref();
                    let idx = target.and_then(|s| s.find(&r)).ok_or_else(|| {
                        Error::IndexMismatch(format!("image of state {i} under {op:?} not enumerated"))
                    })?;
                    if sector as usize == k {
                        idx as u32
                    } else {
                        debug_assert!(sector == Sector::Unmarked);
                        idx as u32 | TO_UNMARKED
                    }
                }
            };
            table.code.push(code);
            table.dest.push(dest);
        }
        Ok(table)
    }

    fn check(&self, x: &StateVector, forward: bool) -> Result<()> {
        for k in 0..3 {
            let n = x.parts[k].len();
            if n == 0 {
                continue;
            }
            if n != self.len(k) {
                return Err(Error::IndexMismatch(format!("sector {k}: vector {n}, space {}", self.len(k))));
            }
            if forward && self.pre[k].is_empty() {
                return Err(Error::IndexMismatch(format!("sector {k} built without forward tables")));
            }
        }
        if forward && !x.parts[2].is_empty() && self.cross.is_empty() {
            return Err(Error::IndexMismatch("two-mark sector needs forward cross tables".into()));
        }
        Ok(())
    }

    fn apply_op(&self, i: usize, x: &StateVector) -> StateVector {
        let w = &self.weights;
        let mut y = StateVector { parts: Default::default(), log_scale: x.log_scale };
        for k in 0..3 {
            let xk = &x.parts[k];
            if xk.is_empty() {
                continue;
            }
            let table = &self.tables[k][i];
            let pre = &self.pre[k][i];
            let cross = (k == 0 && !x.parts[2].is_empty()).then(|| (&self.cross[i], &self.tables[2][i], &x.parts[2]));
            let mut yk = vec![0.0; xk.len()];
            yk.par_iter_mut().enumerate().for_each(|(t, out)| {
                let mut acc = w[table.code[t] as usize].0 * xk[t];
                for &s in pre.of(t) {
                    acc += w[table.code[s as usize] as usize].1 * xk[s as usize];
                }
                if let Some((cross, t2, x2)) = cross {
                    for &s in cross.of(t) {
                        acc += w[t2.code[s as usize] as usize].1 * x2[s as usize];
                    }
                }
                *out = acc;
            });
            y.parts[k] = yk;
        }
        // two-mark amplitudes flowing into an unused unmarked sector
        if x.parts[0].is_empty() && !x.parts[2].is_empty() {
            let table2 = &self.tables[2][i];
            let cross = &self.cross[i];
            let x2 = &x.parts[2];
            let mut y0 = vec![0.0; self.len(0)];
            y0.par_iter_mut().enumerate().for_each(|(t, out)| {
                *out = cross.of(t).iter().map(|&s| w[table2.code[s as usize] as usize].1 * x2[s as usize]).sum();
            });
            y.parts[0] = y0;
        }
        y
    }

    fn apply_op_transposed(&self, i: usize, x: &StateVector) -> StateVector {
        let w = &self.weights;
        let mut y = StateVector { parts: Default::default(), log_scale: x.log_scale };
        for k in 0..3 {
            let xk = &x.parts[k];
            if xk.is_empty() {
                continue;
            }
            let table = &self.tables[k][i];
            let x0 = &x.parts[0];
            let mut yk = vec![0.0; xk.len()];
            yk.par_iter_mut().enumerate().for_each(|(s, out)| {
                let (wi, wm) = w[table.code[s] as usize];
                let mut acc = wi * xk[s];
                let d = table.dest[s];
                if d != NONE {
                    acc += wm * if d & TO_UNMARKED != 0 { x0.get((d & !TO_UNMARKED) as usize).copied().unwrap_or(0.0) } else { xk[d as usize] };
                }
                *out = acc;
            });
            y.parts[k] = yk;
        }
        y
    }

    /// Vertical edges into the next row, then that row's horizontal edges.
    pub fn apply_row(&self, x: &StateVector) -> Result<StateVector> {
        self.check(x, true)?;
        let mut y = self.apply_op(0, x);
        for i in 1..self.ops.len() {
            y = self.apply_op(i, &y);
        }
        Ok(y)
    }

    /// Only the horizontal edges (the first row of a finite lattice).
    pub fn apply_horizontal(&self, x: &StateVector) -> Result<StateVector> {
        self.check(x, true)?;
        let mut y = x.clone();
        for i in self.geometry.width..self.ops.len() {
            y = self.apply_op(i, &y);
        }
        Ok(y)
    }

    /// Transpose of [`TransferMatrix::apply_row`]. A two-mark amplitude whose
    /// image lands in the unmarked sector reads the unmarked part of `x`.
    pub fn apply_row_transposed(&self, x: &StateVector) -> Result<StateVector> {
        self.check(x, false)?;
        let mut y = x.clone();
        for i in (0..self.ops.len()).rev() {
            y = self.apply_op_transposed(i, &y);
        }
        Ok(y)
    }

    /// All sites in separate parts (boundary columns joined when wired).
    pub fn initial_row(&self) -> StateVector {
        let g = &self.geometry;
        let mut row = Row { len: g.width, labels: [0; super::MAX_WIDTH], marks: [NO_MARK; 2] };
        for j in 0..g.width {
            row.labels[j] = j as u8;
        }
        if g.is_wired() {
            row.labels[g.width - 1] = 0;
        }
        let space = self.spaces[0].as_ref().expect("unmarked sector");
        let mut x = vec![0.0; space.len()];
        x[space.find(&row).expect("initial state enumerated")] = 1.0;
        StateVector { parts: [x, Vec::new(), Vec::new()], log_scale: 0.0 }
    }

    /// Weight of closing every remaining part at the top of a finite lattice.
    pub fn closing_weights(&self) -> Vec<f64> {
        let g = &self.geometry;
        let space = self.spaces[0].as_ref().expect("unmarked sector");
        (0..space.len())
            .map(|i| {
                let parts = space.row(i).part_count() as i32;
                if g.is_wired() {
                    g.q.powi(parts - 1) * g.q1
                } else {
                    g.q.powi(parts)
                }
            })
            .collect()
    }

    /// Mark the part containing column `col` (unmarked -> one mark).
    pub fn insert_first(&self, x: &StateVector, col: usize) -> Result<StateVector> {
        let (s0, s1) = (self.need(Sector::Unmarked)?, self.need(Sector::OneMark)?);
        self.check(x, false)?;
        let x0 = &x.parts[0];
        let y1 = (0..s1.len())
            .map(|t| {
                let mut row = s1.row(t);
                if row.labels[col] != row.marks[0] || x0.is_empty() {
                    return 0.0;
                }
                row.marks = [NO_MARK; 2];
                x0[s0.find(&row).expect("unmarked state")]
            })
            .collect();
        Ok(StateVector { parts: [vec![0.0; s0.len()], y1, Vec::new()], log_scale: x.log_scale })
    }

    /// Second insertion at column `col`: if its part carries the mark the
    /// points are connected (-> unmarked), otherwise mark it too.
    pub fn insert_second(&self, x: &StateVector, col: usize) -> Result<StateVector> {
        let (s0, s1, s2) = (self.need(Sector::Unmarked)?, self.need(Sector::OneMark)?, self.need(Sector::TwoMarks)?);
        self.check(x, false)?;
        let x1 = &x.parts[1];
        if x1.is_empty() {
            return Err(Error::IndexMismatch("second insertion needs a one-mark vector".into()));
        }
        let y0 = (0..s0.len())
            .map(|t| {
                let mut row = s0.row(t);
                row.marks = [row.labels[col], NO_MARK];
                x1[s1.find(&row).expect("one-mark state")]
            })
            .collect();
        let y2 = (0..s2.len())
            .map(|t| {
                let mut row = s2.row(t);
                let c = row.labels[col];
                let other = match row.marks {
                    [a, b] if a == c => b,
                    [a, b] if b == c => a,
                    _ => return 0.0,
                };
                row.marks = [other, NO_MARK];
                x1[s1.find(&row).expect("one-mark state")]
            })
            .collect();
        Ok(StateVector { parts: [y0, vec![0.0; s1.len()], y2], log_scale: x.log_scale })
    }

    fn need(&self, s: Sector) -> Result<&StateSpace> {
        self.space(s).ok_or_else(|| Error::IndexMismatch(format!("sector {s:?} not built")))
    }
}

fn invert(table: &OpTable, targets: usize, cross: bool) -> Preimages {
    let lands = |d: u32| d != NONE && ((d & TO_UNMARKED != 0) == cross);
    let mut counts = vec![0u32; targets + 1];
    for &d in &table.dest {
        if lands(d) {
            counts[(d & !TO_UNMARKED) as usize + 1] += 1;
        }
    }
    for t in 0..targets {
        counts[t + 1] += counts[t];
    }
    let mut fill = counts.clone();
    let mut src = vec![0u32; counts[targets] as usize];
    for (s, &d) in table.dest.iter().enumerate() {
        if lands(d) {
            let t = (d & !TO_UNMARKED) as usize;
            src[fill[t] as usize] = s as u32;
            fill[t] += 1;
        }
    }
    Preimages { offsets: counts, src }
}

/// Partition functions of a finite lattice with and without the constraint
/// that two sites are FK-connected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteConnectivity {
    pub log_z: f64,
    pub log_z_connected: f64,
    pub connectivity: f64,
}

/// Exact `P(z1 ~ z2)` on `rows` rows of width `geometry.width`; wired strips
/// count connection through the boundary.
pub fn finite_connectivity(geometry: &Geometry, rows: usize, z1: Site, z2: Site, cache_dir: Option<&Path>) -> Result<FiniteConnectivity> {
    let (z1, z2) = if z1.0 <= z2.0 { (z1, z2) } else { (z2, z1) };
    for z in [z1, z2] {
        if z.0 >= rows || z.1 >= geometry.width {
            return Err(Error::Domain(format!("site {z:?} outside {rows}x{}", geometry.width)));
        }
    }
    let all = [Sector::Unmarked, Sector::OneMark, Sector::TwoMarks];
    let tm = TransferMatrix::new(*geometry, &all, &all, cache_dir)?;
    let closing = tm.closing_weights();
    let finish = |x: &StateVector| -> f64 {
        let z: f64 = x.parts[0].iter().zip(&closing).map(|(a, w)| a * w).sum();
        z.ln() + x.log_scale
    };

    let mut x = tm.apply_horizontal(&tm.initial_row())?;
    let mut m = x.clone();
    for r in 0..rows {
        if r > 0 {
            x = tm.apply_row(&x)?;
            m = tm.apply_row(&m)?;
        }
        if r == z1.0 {
            m = tm.insert_first(&m, z1.1)?;
        }
        if r == z2.0 {
            m = tm.insert_second(&m, z2.1)?;
        }
        x.normalize();
        m.normalize();
    }
    let log_z = finish(&x);
    let log_z_connected = finish(&m);
    Ok(FiniteConnectivity { log_z, log_z_connected, connectivity: (log_z_connected - log_z).exp() })
}
