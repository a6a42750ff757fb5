//! Binary cache of enumerated state spaces.
//!
//! Layout (little endian): magic `LCFTSTAT`, version u32, width u32,
//! topology u8, bc u8, sector u8, count u64, then `count` packed keys.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::state::{enumerate_states, Sector, StateSpace};
use super::{BoundaryCondition, Geometry, Topology};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LCFTSTAT";
/// Bumped whenever the key layout changes.
pub const CACHE_VERSION: u32 = 1;

fn header(geometry: &Geometry, sector: Sector) -> [u8; 3] {
    [
        matches!(geometry.topology, Topology::Cylinder) as u8,
        matches!(geometry.bc, BoundaryCondition::Wired) as u8,
        sector as u8,
    ]
}

fn file_name(geometry: &Geometry, sector: Sector) -> PathBuf {
    let [t, b, s] = header(geometry, sector);
    PathBuf::from(format!("states-v{CACHE_VERSION}-L{}-t{t}-b{b}-m{s}.bin", geometry.width))
}

pub fn save_state_space(space: &StateSpace, geometry: &Geometry, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Cache(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(geometry.width as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&header(geometry, space.sector)).map_err(io)?;
    w.write_all(&(space.len() as u64).to_le_bytes()).map_err(io)?;
    for k in space.keys() {
        w.write_all(&k.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_state_space(path: &Path, geometry: &Geometry, sector: Sector) -> Result<StateSpace> {
    let io = |e: std::io::Error| Error::Cache(format!("{}: {e}", path.display()));
    let mut r = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(io)?;
    if &buf != MAGIC {
        return Err(Error::Cache(format!("{}: bad magic", path.display())));
    }
    let mut u = [0u8; 4];
    r.read_exact(&mut u).map_err(io)?;
    let version = u32::from_le_bytes(u);
    r.read_exact(&mut u).map_err(io)?;
    let width = u32::from_le_bytes(u) as usize;
    let mut h = [0u8; 3];
    r.read_exact(&mut h).map_err(io)?;
    if version != CACHE_VERSION || width != geometry.width || h != header(geometry, sector) {
        return Err(Error::Cache(format!(
            "{}: header mismatch (version {version}, width {width}, flags {h:?})",
            path.display()
        )));
    }
    r.read_exact(&mut buf).map_err(io)?;
    let count = u64::from_le_bytes(buf) as usize;
    let mut keys = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut buf).map_err(io)?;
        keys.push(u64::from_le_bytes(buf));
    }
    StateSpace::from_keys(geometry, sector, keys)
}

/// Load from `dir` when a valid file exists, otherwise enumerate (and store
/// the result if a directory was given). Unreadable files are replaced.
pub(crate) fn state_space(geometry: &Geometry, sector: Sector, dir: Option<&Path>) -> Result<StateSpace> {
    let Some(dir) = dir else {
        return enumerate_states(geometry, sector);
    };
    let path = dir.join(file_name(geometry, sector));
    if path.exists() {
        match load_state_space(&path, geometry, sector) {
            Ok(space) if space.matches(geometry, sector) => return Ok(space),
            Ok(_) => log::warn!("{}: stale cache entry, rebuilding", path.display()),
            Err(e) => log::warn!("{e}; rebuilding"),
        }
    }
    let space = enumerate_states(geometry, sector)?;
    fs::create_dir_all(dir).map_err(|e| Error::Cache(format!("{}: {e}", dir.display())))?;
    save_state_space(&space, geometry, &path)?;
    Ok(space)
}
