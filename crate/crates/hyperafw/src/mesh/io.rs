//! Mesh import/export: a plain ASCII format and legacy VTK unstructured grids.
//!
//! ASCII layout: a header line `nv nc`, then `nv` lines `x y`, then `nc`
//! lines with three 0-based vertex indices.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{Mesh, MeshError, Point};

pub fn write_ascii<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {}", mesh.num_vertices(), mesh.num_cells())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e}", p.x, p.y)?;
    }
    for c in &mesh.cells {
        writeln!(w, "{} {} {}", c[0], c[1], c[2])?;
    }
    Ok(())
}

pub fn read_ascii<R: BufRead>(r: R) -> Result<Mesh, MeshError> {
    let mut tokens: Vec<String> = Vec::new();
    for line in r.lines() {
        let line = line?;
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| MeshError::Parse(format!("missing {what}")));
    let parse_usize = |s: String| s.parse::<usize>().map_err(|e| MeshError::Parse(format!("{s}: {e}")));
    let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| MeshError::Parse(format!("{s}: {e}")));
    let nv = parse_usize(next("vertex count")?)?;
    let nc = parse_usize(next("cell count")?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next("x")?)?;
        let y = parse_f64(next("y")?)?;
        vertices.push(Point::new(x, y));
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let mut t = [0usize; 3];
        for v in t.iter_mut() {
            *v = parse_usize(next("cell index")?)?;
            if *v >= nv {
                return Err(MeshError::Parse(format!("vertex index {v} out of range")));
            }
        }
        cells.push(t);
    }
    if next("end").is_ok() {
        return Err(MeshError::Parse("trailing data".into()));
    }
    Mesh::new(vertices, cells, None)
}

/// Field attached to a VTK export.
pub enum VtkField<'a> {
    PointScalar(&'a str, &'a [f64]),
    PointVector(&'a str, &'a [[f64; 2]]),
    CellScalar(&'a str, &'a [f64]),
    /// Row-major 2x2 tensor per cell, padded to 3x3 on output.
    CellTensor(&'a str, &'a [[f64; 4]]),
}

pub fn vtk_string(mesh: &Mesh, title: &str, fields: &[VtkField]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.num_cells(), 4 * mesh.num_cells());
    for c in &mesh.cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_cells());
    for _ in &mesh.cells {
        let _ = writeln!(s, "5");
    }
    let point_fields: Vec<&VtkField> = fields
        .iter()
        .filter(|f| matches!(f, VtkField::PointScalar(..) | VtkField::PointVector(..)))
        .collect();
    let cell_fields: Vec<&VtkField> = fields
        .iter()
        .filter(|f| matches!(f, VtkField::CellScalar(..) | VtkField::CellTensor(..)))
        .collect();
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
        for f in point_fields {
            write_field(&mut s, f);
        }
    }
    if !cell_fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {}", mesh.num_cells());
        for f in cell_fields {
            write_field(&mut s, f);
        }
    }
    s
}

fn write_field(s: &mut String, f: &VtkField) {
    match f {
        VtkField::PointScalar(name, v) | VtkField::CellScalar(name, v) => {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v.iter() {
                let _ = writeln!(s, "{x:.12e}");
            }
        }
        VtkField::PointVector(name, v) => {
            let _ = writeln!(s, "VECTORS {name} double");
            for x in v.iter() {
                let _ = writeln!(s, "{:.12e} {:.12e} 0", x[0], x[1]);
            }
        }
        VtkField::CellTensor(name, v) => {
            let _ = writeln!(s, "TENSORS {name} double");
            for t in v.iter() {
                let _ = writeln!(s, "{:.12e} {:.12e} 0\n{:.12e} {:.12e} 0\n0 0 0", t[0], t[1], t[2], t[3]);
            }
        }
    }
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_geometry, Domain};

    #[test]
    fn ascii_round_trip() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let mut buf = Vec::new();
        write_ascii(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("{} {}", m.num_vertices(), m.num_cells()));
        let back = read_ascii(&buf[..]).unwrap();
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.vertices, m.vertices);
    }

    #[test]
    fn ascii_rejects_bad_index() {
        let text = "3 1\n0 0\n1 0\n0 1\n0 1 3\n";
        assert!(read_ascii(text.as_bytes()).is_err());
        let text = "3 1\n0 0\n1 0\n0 1\n0 1\n";
        assert!(read_ascii(text.as_bytes()).is_err());
    }

    #[test]
    fn vtk_has_sections() {
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let cell: Vec<f64> = (0..m.num_cells()).map(|c| c as f64).collect();
        let s = vtk_string(&m, "t", &[VtkField::CellScalar("eta", &cell)]);
        assert!(s.contains("CELLS 8 32"));
        assert!(s.contains("CELL_TYPES 8"));
        assert!(s.contains("CELL_DATA 8"));
        assert!(s.contains("SCALARS eta double 1"));
    }
}
