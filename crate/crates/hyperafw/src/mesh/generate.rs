//! Structured initial meshes for the supported geometries.

use std::f64::consts::PI;
use std::str::FromStr;

use super::{Arc, Mesh, MeshError, Point};

pub const DEFAULT_MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    LShape,
    NotchedPlate,
}

impl FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit_square" => Ok(Domain::UnitSquare),
            "l_shape" => Ok(Domain::LShape),
            "notched_plate" => Ok(Domain::NotchedPlate),
            other => Err(format!("unknown domain '{other}'")),
        }
    }
}

pub const NOTCH_CENTER: (f64, f64) = (0.0, 11.0);
pub const NOTCH_RADIUS: f64 = 2.0;

pub fn build_geometry(domain: Domain, target_h: f64) -> Result<Mesh, MeshError> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(MeshError::InfeasibleSize {
            h: target_h,
            reason: "mesh size must be positive".into(),
        });
    }
    let mesh = match domain {
        Domain::UnitSquare => unit_square(target_h)?,
        Domain::LShape => l_shape(target_h)?,
        Domain::NotchedPlate => notched_plate(target_h)?,
    };
    mesh.check_min_angle(DEFAULT_MIN_ANGLE_DEG)?;
    Ok(mesh)
}

fn divisions(length: f64, h: f64) -> Result<usize, MeshError> {
    let n = (length / h).round().max(1.0);
    if n > 1e5 {
        return Err(MeshError::InfeasibleSize {
            h,
            reason: "too many divisions".into(),
        });
    }
    Ok(n as usize)
}

// Criss-cross grid on [0,1]^2 with alternating diagonals.
fn unit_square(h: f64) -> Result<Mesh, MeshError> {
    let n = divisions(1.0, h)?;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            } else {
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            }
        }
    }
    Mesh::with_longest_edge_refinement(vertices, cells, None)
}

// (-1,1)^2 minus [0,1]x[-1,0]; every grid square is split into four
// triangles through its center.
fn l_shape(h: f64) -> Result<Mesh, MeshError> {
    let n = divisions(1.0, h)?;
    let m = 2 * n;
    let step = 1.0 / n as f64;
    let mut vertices = Vec::new();
    let mut grid = vec![usize::MAX; (m + 1) * (m + 1)];
    let removed_square = |i: usize, j: usize| i >= n && j < n;
    let inside_node = |i: usize, j: usize| !(i > n && j < n);
    for j in 0..=m {
        for i in 0..=m {
            if inside_node(i, j) {
                grid[j * (m + 1) + i] = vertices.len();
                vertices.push(Point::new(-1.0 + i as f64 * step, -1.0 + j as f64 * step));
            }
        }
    }
    let mut cells = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if removed_square(i, j) {
                continue;
            }
            let a = grid[j * (m + 1) + i];
            let b = grid[j * (m + 1) + i + 1];
            let c = grid[(j + 1) * (m + 1) + i + 1];
            let d = grid[(j + 1) * (m + 1) + i];
            let center = vertices.len();
            vertices.push(Point::new(-1.0 + (i as f64 + 0.5) * step, -1.0 + (j as f64 + 0.5) * step));
            cells.push([a, b, center]);
            cells.push([b, c, center]);
            cells.push([c, d, center]);
            cells.push([d, a, center]);
        }
    }
    Mesh::with_longest_edge_refinement(vertices, cells, None)
}

/// Points of the notched plate boundary top curve: arc from (0,9) to
/// (sqrt 3,10) followed by the straight edge to (10,10).
fn plate_top(n_arc: usize, n_line: usize) -> Vec<Point> {
    let c = Point::new(NOTCH_CENTER.0, NOTCH_CENTER.1);
    let mut pts = Vec::with_capacity(n_arc + n_line + 1);
    let a0 = -PI / 2.0;
    let a1 = -PI / 6.0;
    for k in 0..n_arc {
        let t = a0 + (a1 - a0) * k as f64 / n_arc as f64;
        pts.push(c + Point::new(t.cos(), t.sin()) * NOTCH_RADIUS);
    }
    let x0 = 3f64.sqrt();
    for k in 0..=n_line {
        let x = x0 + (10.0 - x0) * k as f64 / n_line as f64;
        pts.push(Point::new(x, 10.0));
    }
    pts[0] = Point::new(0.0, 9.0);
    pts[n_arc] = Point::new(x0, 10.0);
    pts
}

// Transfinite (Coons) map of a structured grid onto the plate
// (0,10)x(-10,10) minus the disk of radius 2 centered at (0,11).
fn notched_plate(h: f64) -> Result<Mesh, MeshError> {
    let nx = divisions(10.0, h)?;
    let ny = divisions(20.0, h)?;
    let arc_len = NOTCH_RADIUS * PI / 3.0;
    let line_len = 10.0 - 3f64.sqrt();
    let n_arc = ((arc_len / (arc_len + line_len)) * nx as f64).round() as usize;
    let n_arc = n_arc.max(2);
    if n_arc + 1 > nx {
        return Err(MeshError::InfeasibleSize {
            h,
            reason: "notch arc cannot be resolved".into(),
        });
    }
    let chord = 2.0 * NOTCH_RADIUS * (PI / 6.0 / n_arc as f64).sin();
    let sagitta = chord * chord / (8.0 * NOTCH_RADIUS);
    if sagitta > h * h {
        return Err(MeshError::InfeasibleSize {
            h,
            reason: "notch chord deviation exceeds h^2".into(),
        });
    }
    let top = plate_top(n_arc, nx - n_arc);
    let bottom = |i: usize| Point::new(10.0 * i as f64 / nx as f64, -10.0);
    let left = |j: usize| Point::new(0.0, -10.0 + 19.0 * j as f64 / ny as f64);
    let right = |j: usize| Point::new(10.0, -10.0 + 20.0 * j as f64 / ny as f64);
    let (b0, b1, t0, t1) = (bottom(0), bottom(nx), top[0], top[nx]);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let t = j as f64 / ny as f64;
        for i in 0..=nx {
            let s = i as f64 / nx as f64;
            let p = bottom(i) * (1.0 - t) + top[i] * t + left(j) * (1.0 - s) + right(j) * s
                - (b0 * ((1.0 - s) * (1.0 - t)) + b1 * (s * (1.0 - t)) + t0 * ((1.0 - s) * t) + t1 * (s * t));
            vertices.push(p);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let diag_ac = (vertices[a] - vertices[c]).norm();
            let diag_bd = (vertices[b] - vertices[d]).norm();
            if diag_ac <= diag_bd {
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            } else {
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            }
        }
    }
    let arc = Arc {
        center: Point::new(NOTCH_CENTER.0, NOTCH_CENTER.1),
        radius: NOTCH_RADIUS,
    };
    let mesh = Mesh::with_longest_edge_refinement(vertices, cells, Some(arc))?;
    if mesh.min_angle() < DEFAULT_MIN_ANGLE_DEG {
        return Err(MeshError::InfeasibleSize {
            h,
            reason: format!("minimum angle {:.2} deg near the notch", mesh.min_angle()),
        });
    }
    Ok(mesh)
}

////////////////////////////////////////////////////////////////////////////////
