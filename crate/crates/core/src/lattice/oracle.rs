//! Independent references for the transfer matrix: exhaustive edge-subset
//! sums and, at q = 2, the Ising spin transfer matrix.

use super::transfer::Site;
use super::Geometry;
use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_EDGES: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForce {
    pub z: f64,
    pub z_connected: f64,
    pub connectivity: f64,
}

fn edges(geometry: &Geometry, rows: usize) -> Vec<(usize, usize)> {
    let l = geometry.width;
    let mut e = Vec::new();
    for r in 0..rows {
        for (a, b) in geometry.horizontal_edges() {
            e.push((r * l + a, r * l + b));
        }
        if r + 1 < rows {
            for j in 0..l {
                e.push((r * l + j, (r + 1) * l + j));
            }
        }
    }
    e
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Σ over all edge subsets A of v^{|A|} q^{K₀} q₁^{K₁}, plain and restricted
/// to z₁ ~ z₂. Wired strips attach every boundary-column site to a ghost
/// vertex whose cluster is the only one weighted by q₁.
pub fn brute_force_oracle(geometry: &Geometry, rows: usize, z1: Site, z2: Site) -> Result<BruteForce> {
    let l = geometry.width;
    if rows == 0 {
        return if l == 1 && z1 == z2 {
            Ok(BruteForce { z: 1.0, z_connected: 1.0, connectivity: 1.0 })
        } else {
            Err(Error::Domain("an empty lattice only has the trivial self-connectivity".into()))
        };
    }
    for z in [z1, z2] {
        if z.0 >= rows || z.1 >= l {
            return Err(Error::Domain(format!("site {z:?} outside {rows}x{l}")));
        }
    }
    let e = edges(geometry, rows);
    if e.len() > MAX_BRUTE_FORCE_EDGES {
        return Err(Error::Capacity(format!("{} edges > {MAX_BRUTE_FORCE_EDGES}", e.len())));
    }
    let n = rows * l;
    let ghost = n;
    let wired = geometry.is_wired();
    let (i1, i2) = (z1.0 * l + z1.1, z2.0 * l + z2.1);
    // up to 2^26 terms: compensated sums keep the oracle at ~1e-15
    let mut z = Kahan::default();
    let mut zc = Kahan::default();
    let mut parent = vec![0usize; n + 1];
    for mask in 0u64..(1u64 << e.len()) {
        for (i, p) in parent.iter_mut().enumerate() {
            *p = i;
        }
        if wired {
            for r in 0..rows {
                for j in [0, l - 1] {
                    let a = find(&mut parent, r * l + j);
                    parent[a] = ghost;
                }
            }
        }
        for (k, &(a, b)) in e.iter().enumerate() {
            if mask >> k & 1 == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // keep the ghost as a root
                    if rb == ghost {
                        parent[ra] = rb;
                    } else {
                        parent[rb] = ra;
                    }
                }
            }
        }
        let mut w = geometry.v.powi(mask.count_ones() as i32);
        for x in 0..n {
            if parent[x] == x {
                w *= geometry.q;
            }
        }
        if wired {
            w *= geometry.q1;
        }
        z.add(w);
        if find(&mut parent, i1) == find(&mut parent, i2) {
            zc.add(w);
        }
    }
    let (z, zc) = (z.sum, zc.sum);
    Ok(BruteForce { z, z_connected: zc, connectivity: zc / z })
}

/// ⟨σ(z₁)σ(z₂)⟩ of the critical Ising model, K = ln(1+√2)/2, by a 2^L spin
/// transfer matrix. Wired strips fix both boundary columns to +.
pub fn ising_spin_correlator(geometry: &Geometry, rows: usize, z1: Site, z2: Site) -> Result<f64> {
    if (geometry.q - 2.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("spin representation needs q = 2, got {}", geometry.q)));
    }
    let l = geometry.width;
    for z in [z1, z2] {
        if z.0 >= rows || z.1 >= l {
            return Err(Error::Domain(format!("site {z:?} outside {rows}x{l}")));
        }
    }
    let k = (1.0 + 2f64.sqrt()).ln() / 2.0;
    let n = 1usize << l;
    let spin = |c: usize, j: usize| if c >> j & 1 == 1 { 1.0 } else { -1.0 };
    let allowed = |c: usize| !geometry.is_wired() || (spin(c, 0) > 0.0 && spin(c, l - 1) > 0.0);
    let hedges = geometry.horizontal_edges();
    let row_weight: Vec<f64> = (0..n)
        .map(|c| {
            if !allowed(c) {
                return 0.0;
            }
            (k * hedges.iter().map(|&(a, b)| spin(c, a) * spin(c, b)).sum::<f64>()).exp()
        })
        .collect();
    let insert = |w: &mut [f64], r: usize| {
        for z in [z1, z2] {
            if z.0 == r {
                for (c, x) in w.iter_mut().enumerate() {
                    *x *= spin(c, z.1);
                }
            }
        }
    };
    let (ep, em) = (k.exp(), (-k).exp());
    let mut w = row_weight.clone();
    let mut wm = row_weight.clone();
    insert(&mut wm, 0);
    for r in 1..rows {
        for vec in [&mut w, &mut wm] {
            for j in 0..l {
                let bit = 1 << j;
                let old = vec.clone();
                for (c, x) in vec.iter_mut().enumerate() {
                    let same = old[c];
                    let flipped = old[c ^ bit];
                    *x = same * ep + flipped * em;
                }
            }
            for (x, rw) in vec.iter_mut().zip(&row_weight) {
                *x *= rw;
            }
        }
        insert(&mut wm, r);
        let m = w.iter().fold(0.0f64, |a, &b| a.max(b));
        for x in w.iter_mut().chain(wm.iter_mut()) {
            *x /= m;
        }
    }
    Ok(wm.iter().sum::<f64>() / w.iter().sum::<f64>())
}
