//! Row connectivity states: non-crossing set partitions of the row sites,
//! with up to two marked parts, packed into a `u64`.
//!
//! Layout: 4 bits per site label (restricted growth string), then two 4-bit
//! mark slots at bits 52 and 56 (`NO_MARK` when empty). Mark slots are kept
//! sorted, so two marks are unordered.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Geometry, Topology};
use crate::bootstrap::BoundaryCondition;

pub const MAX_WIDTH: usize = 13;
pub(crate) const NO_MARK: u8 = 0xF;
const MARK_SHIFT: u32 = 52;

/// Number of marked parts carried by a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Unmarked = 0,
    OneMark = 1,
    TwoMarks = 2,
}

impl Sector {
    pub fn marks(self) -> usize {
        self as usize
    }

    pub(crate) fn from_marks(n: usize) -> Sector {
        match n {
            0 => Sector::Unmarked,
            1 => Sector::OneMark,
            _ => Sector::TwoMarks,
        }
    }
}

/// Decoded row state; labels need not be canonical until [`Row::encode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub len: usize,
    pub labels: [u8; MAX_WIDTH],
    pub marks: [u8; 2],
}

impl Row {
    pub fn decode(key: u64, len: usize) -> Row {
        let mut labels = [0u8; MAX_WIDTH];
        for (i, l) in labels.iter_mut().enumerate().take(len) {
            *l = ((key >> (4 * i)) & 0xF) as u8;
        }
        let marks = [
            ((key >> MARK_SHIFT) & 0xF) as u8,
            ((key >> (MARK_SHIFT + 4)) & 0xF) as u8,
        ];
        Row { len, labels, marks }
    }

    /// Relabel in order of first appearance and pack.
    pub fn encode(&self) -> u64 {
        let mut map = [NO_MARK; 16];
        let mut next = 0u8;
        let mut key = 0u64;
        for i in 0..self.len {
            let l = self.labels[i] as usize;
            if map[l] == NO_MARK {
                map[l] = next;
                next += 1;
            }
            key |= u64::from(map[l]) << (4 * i);
        }
        let mut m = self.marks.map(|x| if x == NO_MARK { NO_MARK } else { map[x as usize] });
        m.sort_unstable();
        key | (u64::from(m[0]) << MARK_SHIFT) | (u64::from(m[1]) << (MARK_SHIFT + 4))
    }

    pub fn sector(&self) -> Sector {
        Sector::from_marks(self.marks.iter().filter(|&&m| m != NO_MARK).count())
    }

    pub fn is_marked(&self, label: u8) -> bool {
        self.marks.contains(&label)
    }

    pub fn part_size(&self, label: u8) -> usize {
        self.labels[..self.len].iter().filter(|&&l| l == label).count()
    }

    pub fn part_count(&self) -> usize {
        let mut seen = 0u16;
        for &l in &self.labels[..self.len] {
            seen |= 1 << l;
        }
        seen.count_ones() as usize
    }

    fn unused_label(&self) -> u8 {
        let mut seen = 0u16;
        for &l in &self.labels[..self.len] {
            seen |= 1 << l;
        }
        (!seen).trailing_zeros() as u8
    }

    /// Give site `j` a fresh singleton part.
    pub(crate) fn detach(&mut self, j: usize) {
        self.labels[j] = self.unused_label();
    }

    /// Merge the parts of sites `a` and `b`. Two distinct marked parts merge
    /// into an unmarked one (the cluster then contains both points).
    pub(crate) fn join(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.labels[a], self.labels[b]);
        if la == lb {
            return;
        }
        for l in self.labels[..self.len].iter_mut() {
            if *l == lb {
                *l = la;
            }
        }
        let (ma, mb) = (self.is_marked(la), self.is_marked(lb));
        if ma && mb {
            self.marks = [NO_MARK; 2];
        } else if mb {
            for m in self.marks.iter_mut() {
                if *m == lb {
                    *m = la;
                }
            }
        }
    }
}

/// All non-crossing partitions of `n` sites as label strings.
fn non_crossing(n: usize) -> Vec<[u8; MAX_WIDTH]> {
    fn rec(i: usize, n: usize, cur: &mut [u8; MAX_WIDTH], stack: &mut Vec<u8>, next: u8, out: &mut Vec<[u8; MAX_WIDTH]>) {
        if i == n {
            out.push(*cur);
            return;
        }
        // new block
        cur[i] = next;
        stack.push(next);
        rec(i + 1, n, cur, stack, next + 1, out);
        stack.pop();
        // join a visible block; blocks above it close for good
        for k in (0..stack.len()).rev() {
            let saved: Vec<u8> = stack[k + 1..].to_vec();
            stack.truncate(k + 1);
            cur[i] = stack[k];
            rec(i + 1, n, cur, stack, next, out);
            stack.extend_from_slice(&saved);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = [0u8; MAX_WIDTH];
    rec(0, n, &mut cur, &mut Vec::new(), 0, &mut out);
    out
}

/// Dense index over the admissible states of one sector.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub width: usize,
    pub topology: Topology,
    pub bc: BoundaryCondition,
    pub sector: Sector,
    keys: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl StateSpace {
    pub(crate) fn from_keys(geometry: &Geometry, sector: Sector, keys: Vec<u64>) -> Result<StateSpace> {
        if keys.len() >= u32::MAX as usize / 2 {
            return Err(Error::Capacity(format!("{} states", keys.len())));
        }
        let index = keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        Ok(StateSpace {
            width: geometry.width,
            topology: geometry.topology,
            bc: geometry.bc,
            sector,
            keys,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn row(&self, i: usize) -> Row {
        Row::decode(self.keys[i], self.width)
    }

    pub fn find(&self, row: &Row) -> Option<usize> {
        self.index.get(&row.encode()).map(|&i| i as usize)
    }

    pub(crate) fn matches(&self, geometry: &Geometry, sector: Sector) -> bool {
        self.width == geometry.width
            && self.topology == geometry.topology
            && self.bc == geometry.bc
            && self.sector == sector
    }
}

/// Enumerate every admissible state of a sector.
///
/// Wired strips keep sites 1 and L in one (boundary) part. The cylinder uses
/// the same set as the strip: non-crossing on the line equals non-crossing on
/// the circle.
pub fn enumerate_states(geometry: &Geometry, sector: Sector) -> Result<StateSpace> {
    let n = geometry.width;
    if n > MAX_WIDTH {
        return Err(Error::Capacity(format!("width {n} exceeds the limit {MAX_WIDTH}")));
    }
    let wired = geometry.is_wired();
    let mut keys = Vec::new();
    for labels in non_crossing(n) {
        if wired && labels[0] != labels[n - 1] {
            continue;
        }
        let parts = labels[..n].iter().copied().max().map_or(0, |m| m + 1);
        let base = Row { len: n, labels, marks: [NO_MARK; 2] };
        match sector {
            Sector::Unmarked => keys.push(base.encode()),
            Sector::OneMark => {
                for a in 0..parts {
                    keys.push(Row { marks: [a, NO_MARK], ..base }.encode());
                }
            }
            Sector::TwoMarks => {
                for a in 0..parts {
                    for b in a + 1..parts {
                        keys.push(Row { marks: [a, b], ..base }.encode());
                    }
                }
            }
        }
    }
    log::debug!("L={n} {:?} {:?} {:?}: {} states", geometry.topology, geometry.bc, sector, keys.len());
    StateSpace::from_keys(geometry, sector, keys)
}
