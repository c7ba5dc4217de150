//! Minimal Wavefront OBJ input/output: `v x y z` and triangular `f i j k`
//! records only. Faces with more than three vertices are rejected.
//!
//! Surface-of-revolution grid metadata survives the round trip through a
//! comment line `# revolution-grid n_u n_v staggered` that other OBJ tools
//! simply ignore.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{RevolutionGrid, SurfaceError, TriMesh};

const GRID_COMMENT: &str = "# revolution-grid";

pub fn read_obj(reader: impl BufRead) -> Result<TriMesh, SurfaceError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut grid = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SurfaceError::Io(e.to_string()))?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix(GRID_COMMENT) {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() == 3 {
                if let (Ok(n_u), Ok(n_v), Ok(st)) = (
                    parts[0].parse::<usize>(),
                    parts[1].parse::<usize>(),
                    parts[2].parse::<u8>(),
                ) {
                    grid = Some(RevolutionGrid {
                        n_u,
                        n_v,
                        staggered: st != 0,
                    });
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = |what: &str| -> Result<f64, SurfaceError> {
                    parts
                        .next()
                        .ok_or_else(|| {
                            SurfaceError::Io(format!("line {}: missing {what}", lineno + 1))
                        })?
                        .parse::<f64>()
                        .map_err(|e| SurfaceError::Io(format!("line {}: {e}", lineno + 1)))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                vertices.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(SurfaceError::Io(format!(
                        "line {}: face with {} vertices (triangles only)",
                        lineno + 1,
                        idx.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (slot, token) in tri.iter_mut().zip(&idx) {
                    // Allow `i`, `i/t`, `i//n`, `i/t/n`; only the vertex index is used.
                    let index_part = token.split('/').next().unwrap_or(token);
                    let i: i64 = index_part
                        .parse()
                        .map_err(|e| SurfaceError::Io(format!("line {}: {e}", lineno + 1)))?;
                    if i < 1 {
                        return Err(SurfaceError::Io(format!(
                            "line {}: nonpositive vertex index {i}",
                            lineno + 1
                        )));
                    }
                    *slot = (i - 1) as usize;
                }
                triangles.push(tri);
            }
            // Normals, texture coordinates, groups etc. are ignored.
            _ => {}
        }
    }
    let mut mesh = TriMesh::new(vertices, triangles)?;
    if let Some(grid) = grid {
        if grid.n_u * grid.n_v == mesh.num_vertices() {
            mesh.grid = Some(grid);
        }
    }
    Ok(mesh)
}

pub fn read_obj_file(path: impl AsRef<Path>) -> Result<TriMesh, SurfaceError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| SurfaceError::Io(format!("open {}: {e}", path.as_ref().display())))?;
    read_obj(std::io::BufReader::new(file))
}

/// Write with 17 significant digits so positions round-trip bit-exactly.
pub fn write_obj(mesh: &TriMesh, mut writer: impl Write) -> Result<(), SurfaceError> {
    let io_err = |e: std::io::Error| SurfaceError::Io(e.to_string());
    if let Some(grid) = mesh.grid {
        writeln!(
            writer,
            "{GRID_COMMENT} {} {} {}",
            grid.n_u,
            grid.n_v,
            u8::from(grid.staggered)
        )
        .map_err(io_err)?;
    }
    for v in mesh.vertices() {
        writeln!(writer, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).map_err(io_err)?;
    }
    for t in mesh.triangles() {
        writeln!(writer, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_obj_file(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), SurfaceError> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| SurfaceError::Io(format!("create {}: {e}", path.as_ref().display())))?;
    write_obj(mesh, std::io::BufWriter::new(file))
}
