//! Plain-text mesh format.
//!
//! ```text
//! dim nv nf nc
//! x y [z]            (nv lines)
//! m v1 .. vm         (nf lines, 1-based vertex indices)
//! m ±f1 .. ±fm       (nc lines, 1-based face indices, sign = orientation)
//! ```
//!
//! Lines starting with `#` are ignored.

use super::{PolytopalMesh, SignedFace};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh(mesh: &PolytopalMesh) -> String {
    let mut s = String::new();
    let dim = mesh.dim();
    let _ = writeln!(s, "{} {} {} {}", dim, mesh.num_vertices(), mesh.num_faces(), mesh.num_cells());
    for p in mesh.vertices() {
        let coords: Vec<String> = p[..dim].iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{}", coords.join(" "));
    }
    for f in 0..mesh.num_faces() {
        let verts = mesh.face_vertices(f);
        let ids: Vec<String> = verts.iter().map(|v| (v + 1).to_string()).collect();
        let _ = writeln!(s, "{} {}", verts.len(), ids.join(" "));
    }
    for c in 0..mesh.num_cells() {
        let faces = mesh.cell_faces(c);
        let ids: Vec<String> = faces
            .iter()
            .map(|sf| (i64::from(sf.sign) * (sf.face as i64 + 1)).to_string())
            .collect();
        let _ = writeln!(s, "{} {}", faces.len(), ids.join(" "));
    }
    s
}

pub fn read_mesh(text: &str) -> Result<PolytopalMesh> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .map(|(n, l)| (n + 1, l.split_whitespace().collect()))
            .ok_or_else(|| parse_err(format!("unexpected end of file while reading {what}")))
    };
    let (n, header) = next("header")?;
    if header.len() != 4 {
        return Err(parse_err(format!("line {n}: header needs `dim nv nf nc`")));
    }
    let h: Vec<usize> = header.iter().map(|t| parse_num(t, n)).collect::<Result<_>>()?;
    let (dim, nv, nf, nc) = (h[0], h[1], h[2], h[3]);
    if dim != 2 && dim != 3 {
        return Err(parse_err(format!("line {n}: dimension {dim} is not 2 or 3")));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, toks) = next("vertices")?;
        if toks.len() != dim {
            return Err(parse_err(format!("line {n}: expected {dim} coordinates")));
        }
        let mut p = [0.0; 3];
        for (i, t) in toks.iter().enumerate() {
            p[i] = parse_num(t, n)?;
        }
        vertices.push(p);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (n, ids) = counted_list::<usize>(next("faces")?)?;
        if ids.iter().any(|&v| v == 0 || v > nv) {
            return Err(parse_err(format!("line {n}: vertex index out of range 1..={nv}")));
        }
        faces.push(ids.into_iter().map(|v| v - 1).collect());
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, ids) = counted_list::<i64>(next("cells")?)?;
        let mut cell = Vec::with_capacity(ids.len());
        for id in ids {
            let face = id.unsigned_abs() as usize;
            if face == 0 || face > nf {
                return Err(parse_err(format!("line {n}: face index out of range 1..={nf}")));
            }
            cell.push(SignedFace { face: face - 1, sign: if id > 0 { 1 } else { -1 } });
        }
        cells.push(cell);
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(format!("line {n}: trailing content")));
    }
    PolytopalMesh::new(dim, vertices, faces, cells)
}

impl PolytopalMesh {
    pub fn load(path: &Path) -> Result<Self> {
        read_mesh(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, write_mesh(self))?;
        Ok(())
    }
}

fn counted_list<T: std::str::FromStr>((n, toks): (usize, Vec<&str>)) -> Result<(usize, Vec<T>)> {
    let count: usize = parse_num(toks.first().copied().unwrap_or(""), n)?;
    if toks.len() != count + 1 {
        return Err(parse_err(format!("line {n}: expected {count} indices")));
    }
    let vals = toks[1..].iter().map(|t| parse_num(t, n)).collect::<Result<_>>()?;
    Ok((n, vals))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| parse_err(format!("line {line}: cannot parse `{tok}`")))
}

fn parse_err(detail: String) -> Error {
    Error::Parse { what: "mesh".into(), detail }
}
