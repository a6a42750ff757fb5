//! Fortuin–Kasteleyn transfer matrices on critical square-lattice strips and
//! cylinders.
//!
//! Rows are processed as L vertical-edge operators followed by the
//! horizontal-edge operators of the new row. States are non-crossing
//! partitions of the row sites; wired strips keep the two boundary columns in
//! one part, which stands for every cluster touching the boundary.

mod cache;
mod correlator;
mod fit;
mod oracle;
mod state;
mod transfer;

use serde::{Deserialize, Serialize};

pub use crate::bootstrap::BoundaryCondition;
use crate::error::{Error, Result};

pub use cache::{load_state_space, save_state_space, CACHE_VERSION};
pub use correlator::{correlator, CorrelatorSeries, InfiniteCorrelator};
pub use fit::{amplitude_and_gap, extrapolate, lattice_ratio, lattice_ratio_with, AmplitudeFit, FitMode, LatticeRatio, RatioOptions};
pub use oracle::{brute_force_oracle, ising_spin_correlator, BruteForce, MAX_BRUTE_FORCE_EDGES};
pub use state::{enumerate_states, Row, Sector, StateSpace, MAX_WIDTH};
pub use transfer::{finite_connectivity, FiniteConnectivity, Site, StateVector, TransferMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Strip,
    Cylinder,
}

/// Lattice width, topology and the critical FK weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub topology: Topology,
    /// Meaningful for strips only; cylinders carry `Free`.
    pub bc: BoundaryCondition,
    pub q: f64,
    pub v: f64,
    pub q1: f64,
}

impl Geometry {
    pub fn strip(width: usize, bc: BoundaryCondition, q: f64) -> Result<Geometry> {
        Self::build(width, Topology::Strip, bc, q)
    }

    pub fn cylinder(width: usize, q: f64) -> Result<Geometry> {
        if width < 3 {
            return Err(Error::Domain(format!("cylinder width {width} < 3")));
        }
        Self::build(width, Topology::Cylinder, BoundaryCondition::Free, q)
    }

    fn build(width: usize, topology: Topology, bc: BoundaryCondition, q: f64) -> Result<Geometry> {
        if width == 0 || width % 2 == 0 {
            return Err(Error::Domain(format!("width must be odd and positive, got {width}")));
        }
        if width > state::MAX_WIDTH {
            return Err(Error::Capacity(format!("width {width} exceeds the limit {}", state::MAX_WIDTH)));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("q must be positive, got {q}")));
        }
        let q1 = match bc {
            BoundaryCondition::Wired => 1.0,
            BoundaryCondition::Free => q,
        };
        Ok(Geometry { width, topology, bc, q, v: q.sqrt(), q1 })
    }

    pub fn is_wired(&self) -> bool {
        self.topology == Topology::Strip && self.bc == BoundaryCondition::Wired
    }

    /// 0-based middle column.
    pub fn middle(&self) -> usize {
        self.width / 2
    }

    /// Horizontal edges of one row, as column pairs.
    pub fn horizontal_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = (0..self.width.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        if self.topology == Topology::Cylinder {
            edges.push((self.width - 1, 0));
        }
        edges
    }

    pub fn is_boundary_column(&self, j: usize) -> bool {
        self.is_wired() && (j == 0 || j + 1 == self.width)
    }

    pub fn label(&self) -> String {
        match self.topology {
            Topology::Cylinder => format!("cylinder L={} q={}", self.width, self.q),
            Topology::Strip => format!("{} strip L={} q={}", self.bc.name(), self.width, self.q),
        }
    }
}
