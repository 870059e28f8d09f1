//! Bit-exact on-disk formats: VREG1 volumes/fields and VMESH1 meshes.
//!
//! VREG1: `VREG1 <kind> <nx> <ny> <nz> <channels> <sx> <sy> <sz> <ox> <oy> <oz>\n`
//! then little-endian f32 values, x fastest, channels interleaved.
//! VMESH1: `VMESH1 <nv> <nf>\n`, `ranges <st> <sv> <md>\n`, `nv` lines `x y z`,
//! then `nf` lines `i j k`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::deform::{Ddf, Space};
use crate::error::{Error, Result};
use crate::grid::{ProbMaskSet, Volume, VoxelGrid};
use crate::phantom::CorrespondenceMesh;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn bad(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| bad(path, "not UTF-8"))
}

/// A decoded VREG1 file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawVolume {
    pub kind: String,
    pub grid: VoxelGrid,
    pub channels: usize,
    /// Interleaved: value `c` of voxel `i` is at `i * channels + c`.
    pub data: Vec<f32>,
}

pub fn encode_vreg(raw: &RawVolume) -> Vec<u8> {
    let g = &raw.grid;
    let header = format!(
        "VREG1 {} {} {} {} {} {} {} {} {} {} {}\n",
        raw.kind,
        g.dims[0],
        g.dims[1],
        g.dims[2],
        raw.channels,
        g.spacing[0],
        g.spacing[1],
        g.spacing[2],
        g.origin[0],
        g.origin[1],
        g.origin[2]
    );
    let mut out = header.into_bytes();
    out.reserve(4 * raw.data.len());
    for v in &raw.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_vreg(path: &Path, bytes: &[u8]) -> Result<RawVolume> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad(path, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad(path, "header is not UTF-8"))?;
    let tok: Vec<&str> = header.split(' ').collect();
    if tok.len() != 12 || tok[0] != "VREG1" {
        return Err(bad(path, format!("bad VREG1 header {header:?}")));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(path, format!("bad integer {s:?}")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| bad(path, format!("bad number {s:?}")));
    let dims = [int(tok[2])?, int(tok[3])?, int(tok[4])?];
    let channels = int(tok[5])?;
    let spacing = [real(tok[6])?, real(tok[7])?, real(tok[8])?];
    let origin = [real(tok[9])?, real(tok[10])?, real(tok[11])?];
    let grid = VoxelGrid::new(dims, spacing, origin).map_err(|e| bad(path, e.to_string()))?;
    let body = &bytes[nl + 1..];
    let n = grid.len() * channels;
    if channels == 0 || body.len() != 4 * n {
        return Err(bad(path, format!("expected {n} values, found {} bytes", body.len())));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(RawVolume {
        kind: tok[1].to_string(),
        grid,
        channels,
        data,
    })
}

fn read_raw(path: &Path, kind: &str, channels: usize) -> Result<RawVolume> {
    let raw = decode_vreg(path, &read_bytes(path)?)?;
    if raw.kind != kind || raw.channels != channels {
        return Err(bad(
            path,
            format!("expected {kind} with {channels} channels, found {} with {}", raw.kind, raw.channels),
        ));
    }
    Ok(raw)
}

fn interleave(grid: VoxelGrid, channels: &[&[f64]]) -> Vec<f32> {
    let mut out = Vec::with_capacity(grid.len() * channels.len());
    for i in 0..grid.len() {
        out.extend(channels.iter().map(|c| c[i] as f32));
    }
    out
}

fn deinterleave(raw: &RawVolume) -> Vec<Vec<f64>> {
    (0..raw.channels)
        .map(|c| raw.data.iter().skip(c).step_by(raw.channels).map(|&v| v as f64).collect())
        .collect()
}

pub fn write_volume(path: &Path, vol: &Volume) -> Result<()> {
    let raw = RawVolume {
        kind: "image".into(),
        grid: vol.grid,
        channels: 1,
        data: interleave(vol.grid, &[&vol.values]),
    };
    write_bytes(path, &encode_vreg(&raw))
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let raw = read_raw(path, "image", 1)?;
    let values = deinterleave(&raw).swap_remove(0);
    Ok(Volume { grid: raw.grid, values })
}

pub fn write_masks(path: &Path, m: &ProbMaskSet) -> Result<()> {
    let [a, b, c] = &m.channels;
    let raw = RawVolume {
        kind: "masks".into(),
        grid: m.grid,
        channels: 3,
        data: interleave(m.grid, &[a, b, c]),
    };
    write_bytes(path, &encode_vreg(&raw))
}

pub fn read_masks(path: &Path) -> Result<ProbMaskSet> {
    let raw = read_raw(path, "masks", 3)?;
    let [a, b, c]: [Vec<f64>; 3] = deinterleave(&raw).try_into().expect("three channels");
    ProbMaskSet::new(raw.grid, [a, b, c]).map_err(|e| bad(path, e.to_string()))
}

fn ddf_kind(domain: Space, codomain: Space) -> String {
    format!("ddf:{}>{}", domain.name(), codomain.name())
}

pub fn write_ddf(path: &Path, d: &Ddf) -> Result<()> {
    let flat: Vec<f32> = d.displacement.iter().flat_map(|v| v.map(|x| x as f32)).collect();
    let raw = RawVolume {
        kind: ddf_kind(d.domain, d.codomain),
        grid: d.grid,
        channels: 3,
        data: flat,
    };
    write_bytes(path, &encode_vreg(&raw))
}

pub fn read_ddf(path: &Path) -> Result<Ddf> {
    let raw = decode_vreg(path, &read_bytes(path)?)?;
    let (domain, codomain) = [(Space::Atlas, Space::Subject), (Space::Subject, Space::Atlas)]
        .into_iter()
        .find(|(a, b)| ddf_kind(*a, *b) == raw.kind)
        .ok_or_else(|| bad(path, format!("not a displacement field: kind {:?}", raw.kind)))?;
    if raw.channels != 3 {
        return Err(bad(path, "displacement fields have 3 channels"));
    }
    let displacement = raw
        .data
        .chunks_exact(3)
        .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
        .collect();
    Ok(Ddf {
        grid: raw.grid,
        displacement,
        domain,
        codomain,
    })
}

pub fn encode_mesh(m: &CorrespondenceMesh) -> String {
    use std::fmt::Write as _;
    let c = m.class_counts;
    let mut s = format!("VMESH1 {} {}\nranges {} {} {}\n", m.vertices.len(), m.faces.len(), c[0], c[1], c[2]);
    for v in &m.vertices {
        writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]).expect("string write");
    }
    for f in &m.faces {
        writeln!(s, "{} {} {}", f[0], f[1], f[2]).expect("string write");
    }
    s
}

pub fn decode_mesh(path: &Path, text: &str) -> Result<CorrespondenceMesh> {
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(path, format!("missing {what}")));
    let head: Vec<&str> = next("header")?.split(' ').collect();
    if head.len() != 3 || head[0] != "VMESH1" {
        return Err(bad(path, "bad VMESH1 header"));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(path, format!("bad integer {s:?}")));
    let (nv, nf) = (int(head[1])?, int(head[2])?);
    let ranges: Vec<&str> = next("ranges line")?.split(' ').collect();
    if ranges.len() != 4 || ranges[0] != "ranges" {
        return Err(bad(path, "bad ranges line"));
    }
    let class_counts = [int(ranges[1])?, int(ranges[2])?, int(ranges[3])?];
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t: Vec<&str> = next("vertex")?.split(' ').collect();
        let p: Vec<f64> = t
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(path, format!("bad coordinate {s:?}"))))
            .collect::<Result<_>>()?;
        if p.len() != 3 {
            return Err(bad(path, "vertex lines have three coordinates"));
        }
        vertices.push([p[0], p[1], p[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let t: Vec<usize> = next("face")?.split(' ').map(int).collect::<Result<_>>()?;
        if t.len() != 3 {
            return Err(bad(path, "face lines have three indices"));
        }
        faces.push([t[0], t[1], t[2]]);
    }
    if lines.next().is_some_and(|l| !l.is_empty()) {
        return Err(bad(path, "trailing content"));
    }
    CorrespondenceMesh::new(vertices, faces, class_counts).map_err(|e| bad(path, e.to_string()))
}

pub fn write_mesh(path: &Path, m: &CorrespondenceMesh) -> Result<()> {
    write_bytes(path, encode_mesh(m).as_bytes())
}

pub fn read_mesh(path: &Path) -> Result<CorrespondenceMesh> {
    decode_mesh(path, &read_text(path)?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| bad(path, e.to_string()))?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| bad(path, e.to_string()))
}
