//! Files written by a run: the CSV log, VTK snapshots and the summary report.

use std::fmt::Write as _;
use std::path::Path;

use crate::adaptivity::{MeshSnapshot, RunLog, RunRecord};
use crate::fe::DisplacementField;
use crate::mesh::io::{vtk_string, VtkField};
use crate::Error;

/// Column names of `run.csv`, in order.
pub const CSV_COLUMNS: [&str; 19] = [
    "loop",
    "k",
    "nu",
    "ncells",
    "eta_disc",
    "eta_lin",
    "eta_quad",
    "eta_osc",
    "total_bound",
    "energy_error",
    "ieff",
    "newton_residual",
    "wall_ms",
    "basic_bound",
    "unsplit_bound",
    "eta_sharp",
    "eta_flat",
    "quad_ok",
    "lin_ok",
];

pub fn write_csv(path: &Path, log: &RunLog) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    if log.records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in &log.records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, Error> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if headers != CSV_COLUMNS {
        return Err(Error::Config(format!("{} does not have the run.csv columns", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// VTK snapshot of a finished mesh: vertex displacements, cellwise trace of
/// the strain, the four local estimators and the reconstructed stresses at
/// cell centroids.
pub fn snapshot_vtk(s: &MeshSnapshot) -> String {
    let mesh = s.mesh;
    let nv = mesh.num_vertices();
    let displacement: Vec<[f64; 2]> = (0..nv).map(|v| [s.u[2 * v], s.u[2 * v + 1]]).collect();
    let field = DisplacementField::new(s.u.to_vec());
    let third = [1.0 / 3.0; 3];
    let mut tr_strain = Vec::with_capacity(mesh.num_cells());
    let mut disc = Vec::with_capacity(mesh.num_cells());
    let mut lin = Vec::with_capacity(mesh.num_cells());
    let mut total = Vec::with_capacity(mesh.num_cells());
    let afw = &s.reconstructor.space;
    for c in 0..mesh.num_cells() {
        let g = field.gradient(s.space, c, &third, &mesh.barycentric_gradients(c));
        tr_strain.push(g[0] + g[3]);
        let x = mesh.map_point(c, &third);
        let d = s.evaluation.disc.eval(afw, c, &x).0;
        let l = s.evaluation.lin.eval(afw, c, &x).0;
        disc.push(d);
        lin.push(l);
        total.push([d[0] + l[0], d[1] + l[1], d[2] + l[2], d[3] + l[3]]);
    }
    let local = &s.evaluation.local;
    vtk_string(
        mesh,
        &format!("mesh {} after {} Newton iterations", s.mesh_loop, s.newton_iterations),
        &[
            VtkField::PointVector("displacement", &displacement),
            VtkField::CellScalar("tr_strain", &tr_strain),
            VtkField::CellScalar("eta_disc", &local.disc),
            VtkField::CellScalar("eta_lin", &local.lin),
            VtkField::CellScalar("eta_quad", &local.quad),
            VtkField::CellScalar("eta_osc", &local.osc),
            VtkField::CellTensor("sigma_disc", &disc),
            VtkField::CellTensor("sigma_lin", &lin),
            VtkField::CellTensor("sigma_h", &total),
        ],
    )
}

/// One line per mesh from the last record of each mesh.
pub fn mesh_table(log: &RunLog) -> String {
    let counts = log.newton_counts();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>8} {:>6} {:>3} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>7}",
        "loop", "ncells", "newton", "nu", "eta_disc", "eta_lin", "eta_quad", "total", "basic", "error", "ieff"
    );
    for r in log.final_records() {
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |v| format!("{v:.prec$e}"));
        let _ = writeln!(
            s,
            "{:>4} {:>8} {:>6} {:>3} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11} {:>7}",
            r.mesh_loop,
            r.ncells,
            counts[r.mesh_loop],
            r.nu,
            r.eta_disc,
            r.eta_lin,
            r.eta_quad,
            r.total_bound,
            r.basic_bound,
            opt(r.energy_error, 4),
            r.ieff.map_or("-".to_string(), |v| format!("{v:.4}")),
        );
    }
    s
}

/// Newton iterations per mesh of two runs side by side.
pub fn write_newton_counts(path: &Path, residual: &RunLog, adaptive: &RunLog) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["loop", "ncells_residual", "newton_residual", "ncells_adaptive", "newton_adaptive"])?;
    let (a, b) = (residual.final_records(), adaptive.final_records());
    let (ca, cb) = (residual.newton_counts(), adaptive.newton_counts());
    for i in 0..a.len().max(b.len()) {
        let cell = |recs: &[&RunRecord], counts: &[usize], f: fn(&RunRecord, usize) -> String| {
            recs.get(i).map_or(String::new(), |r| f(r, counts[i]))
        };
        w.write_record([
            i.to_string(),
            cell(&a, &ca, |r, _| r.ncells.to_string()),
            cell(&a, &ca, |_, n| n.to_string()),
            cell(&b, &cb, |r, _| r.ncells.to_string()),
            cell(&b, &cb, |_, n| n.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;

    fn record(mesh_loop: usize, k: usize, energy: Option<f64>) -> RunRecord {
        RunRecord {
            mesh_loop,
            k,
            nu: 4,
            ncells: 48 * (mesh_loop + 1),
            eta_disc: 0.5,
            eta_lin: 1e-3 / k as f64,
            eta_quad: 1e-9,
            eta_osc: 0.0,
            total_bound: 1.25,
            energy_error: energy,
            ieff: energy.map(|e| 0.6 / e),
            newton_residual: 1e-13,
            wall_ms: 12.5,
            basic_bound: 0.6,
            unsplit_bound: 1.1,
            eta_sharp: 0.3,
            eta_flat: 0.2,
            quad_ok: true,
            lin_ok: k > 1,
        }
    }

    #[test]
    fn csv_round_trip_keeps_the_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let log = RunLog {
            records: vec![record(0, 1, Some(0.5)), record(0, 2, Some(0.5)), record(1, 1, None)],
            warnings: vec![],
        };
        write_csv(&path, &log).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert!(text.lines().nth(3).unwrap().contains(",,,"));
        assert_eq!(read_csv(&path).unwrap(), log.records);
    }

    #[test]
    fn empty_log_still_has_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_csv(&path, &RunLog::default()).unwrap();
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn newton_count_table_pairs_meshes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let a = RunLog {
            records: vec![record(0, 1, None), record(0, 2, None), record(0, 3, None), record(1, 1, None)],
            warnings: vec![],
        };
        let b = RunLog {
            records: vec![record(0, 1, None), record(0, 2, None)],
            warnings: vec![],
        };
        write_newton_counts(&path, &a, &b).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "0,48,3,48,2");
        assert_eq!(lines[2], "1,96,1,,");
    }
}
