//! On-disk instance bundles.
//!
//! A bundle is a directory holding `manifest.json`, `geometry.json`, `matrices.bin` and
//! `build_report.json`. `matrices.bin` stores the boundary maps ∂_1..∂_t:
//!
//! ```text
//! magic "HDXB" | version u32 = 1 | e u32 | t u32
//! per level i = 1..t: rows u32 | cols u32 | nnz u64 | nnz × (row u32, col u32, value u16)
//! ```
//!
//! All integers little-endian; triplets sorted by (row, col).

use std::path::{Path, PathBuf};

use serde::Serialize;

use hdx_core::ff2e::{FieldMatrix, Gf};
use hdx_core::sheaf::SheafComplex;

use crate::manifest::{Instance, Manifest};
use crate::CliError;

pub const MAGIC: &[u8; 4] = b"HDXB";
pub const VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";
pub const GEOMETRY: &str = "geometry.json";
pub const MATRICES: &str = "matrices.bin";
pub const BUILD_REPORT: &str = "build_report.json";

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io(path, e))
}

pub fn encode_matrices(sc: &SheafComplex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&sc.field().degree().to_le_bytes());
    out.extend_from_slice(&(sc.t() as u32).to_le_bytes());
    for i in 1..=sc.t() {
        let m = sc.partial(i).expect("level in range");
        out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
        out.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
        for (r, c, v) in m.triplets() {
            out.extend_from_slice(&(r as u32).to_le_bytes());
            out.extend_from_slice(&(c as u32).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CliError::Bundle(format!("{MATRICES}: truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CliError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Field degree and boundary maps ∂_1..∂_t.
pub fn decode_matrices(buf: &[u8]) -> Result<(u32, Vec<FieldMatrix>), CliError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CliError::Bundle(format!("{MATRICES}: bad magic")));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CliError::Bundle(format!("{MATRICES}: unsupported version {version}")));
    }
    let e = r.u32()?;
    let t = r.u32()? as usize;
    let mut maps = Vec::with_capacity(t);
    for _ in 0..t {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let nnz = r.u64()? as usize;
        let mut trip = Vec::with_capacity(nnz.min(buf.len() / 10));
        for _ in 0..nnz {
            let (i, j, v) = (r.u32()? as usize, r.u32()? as usize, r.u16()? as Gf);
            if i >= rows || j >= cols {
                return Err(CliError::Bundle(format!("{MATRICES}: entry ({i}, {j}) outside {rows}x{cols}")));
            }
            trip.push((i, j, v));
        }
        maps.push(FieldMatrix::from_triplets(rows, cols, trip));
    }
    if r.pos != buf.len() {
        return Err(CliError::Bundle(format!("{MATRICES}: {} trailing bytes", buf.len() - r.pos)));
    }
    Ok((e, maps))
}

#[derive(Serialize)]
struct GeometryTables {
    t: usize,
    group_size: usize,
    n: usize,
    level_sizes: Vec<usize>,
    chain_dims: Vec<usize>,
    /// permutations[j][a][g] = image of g under generator a of direction j.
    permutations: Vec<Vec<Vec<u32>>>,
}

pub fn geometry_json(sc: &SheafComplex) -> String {
    let g = sc.geometry();
    let tables = GeometryTables {
        t: g.t(),
        group_size: g.group_size(),
        n: g.n(),
        level_sizes: (0..=g.t()).map(|k| g.level_size(k)).collect(),
        chain_dims: sc.chain_dims(),
        permutations: g.permsets().iter().map(|p| (0..p.n()).map(|a| p.perm(a).to_vec()).collect()).collect(),
    };
    serde_json::to_string(&tables).expect("plain data")
}

pub struct Bundle {
    pub dir: PathBuf,
    pub instance: Instance,
    /// Boundary maps as stored on disk.
    pub stored: Vec<FieldMatrix>,
    pub stored_degree: u32,
}

impl Bundle {
    pub fn write(dir: &Path, inst: &Instance, build_report: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut manifest = serde_json::to_string_pretty(&inst.manifest).expect("plain data");
        manifest.push('\n');
        write_file(&dir.join(MANIFEST), manifest)?;
        write_file(&dir.join(GEOMETRY), geometry_json(&inst.sheaf) + "\n")?;
        write_file(&dir.join(MATRICES), encode_matrices(&inst.sheaf))?;
        write_file(&dir.join(BUILD_REPORT), build_report)
    }

    /// Rebuilds the instance from the stored manifest and loads the stored matrices.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        if !dir.join(MANIFEST).is_file() {
            return Err(CliError::Bundle(format!("{}: no {MANIFEST}", dir.display())));
        }
        let manifest = Manifest::load(&dir.join(MANIFEST))?;
        let path = dir.join(MATRICES);
        let buf = std::fs::read(&path).map_err(|e| io(&path, e))?;
        let (stored_degree, stored) = decode_matrices(&buf)?;
        let instance = Instance::build(manifest)?;
        Ok(Bundle { dir: dir.to_path_buf(), instance, stored, stored_degree })
    }
}
