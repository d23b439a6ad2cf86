//! Output writers: report CSV, legacy ASCII VTK, interface polyline CSV and
//! Matrix Market dumps.

use crate::analysis::{ConvergenceReport, SolvedLevel};
use crate::cut::Side;
use crate::error::Result;
use crate::solver::Csr;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => String::new(),
    }
}

/// Writes `report.csv` with one row per refinement level. The leading `#`
/// lines record the run configuration.
pub fn write_report(path: &Path, report: &ConvergenceReport, header_lines: &[String]) -> Result<()> {
    let mut out = String::new();
    for l in header_lines {
        writeln!(out, "# {l}").unwrap();
    }
    writeln!(out, "level,h,ndof,l2,l2_eoc,h1,h1_eoc,jump,geom_if,geom_bnd").unwrap();
    for r in &report.rows {
        writeln!(
            out,
            "{},{:.8e},{},{:.8e},{},{:.8e},{},{:.8e},{:.8e},{:.8e}",
            r.level,
            r.h,
            r.ndof,
            r.l2,
            fmt_opt(r.l2_eoc),
            r.h1,
            fmt_opt(r.h1_eoc),
            r.jump,
            r.geom_if,
            r.geom_bnd
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Legacy ASCII VTK of the solved level: each element side is subsampled on a
/// reference lattice, mapped through the mesh deformation and written as a
/// disconnected triangle patch with the solution as point data. Cut elements
/// contribute their sub-triangles, so the two sides of a cut element appear
/// as separate patches.
pub fn write_vtk(path: &Path, lv: &SolvedLevel) -> Result<()> {
    let n_sub = lv.space.k.max(1) + 1;
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut patch = |elem: usize, side: Side, verts: [[f64; 2]; 3]| {
        // lattice over the reference-coordinate triangle `verts`
        let base = points.len();
        let mut index = vec![vec![0usize; 0]; n_sub + 1];
        for i in 0..=n_sub {
            for j in 0..=(n_sub - i) {
                let (a, b) = (i as f64 / n_sub as f64, j as f64 / n_sub as f64);
                let xi = [
                    verts[0][0] + a * (verts[1][0] - verts[0][0]) + b * (verts[2][0] - verts[0][0]),
                    verts[0][1] + a * (verts[1][1] - verts[0][1]) + b * (verts[2][1] - verts[0][1]),
                ];
                index[i].push(points.len() - base);
                points.push(lv.bundle.map(&lv.mesh, &lv.space, elem, xi));
                values.push(lv.sol.eval(&lv.space, &lv.cs, elem, side, xi));
            }
        }
        for i in 0..n_sub {
            for j in 0..(n_sub - i) {
                let (p00, p10, p01) = (index[i][j], index[i + 1][j], index[i][j + 1]);
                tris.push([base + p00, base + p10, base + p01]);
                if j + 1 <= n_sub - i - 1 {
                    let p11 = index[i + 1][j + 1];
                    tris.push([base + p10, base + p11, base + p01]);
                }
            }
        }
    };
    let ref_tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    for t in 0..lv.mesh.triangles.len() {
        match lv.topo.labels[t] {
            crate::cut::Label::Neg => patch(t, Side::Neg, ref_tri),
            crate::cut::Label::Pos => patch(t, Side::Pos, ref_tri),
            crate::cut::Label::Cut => {
                let cut = lv.topo.cuts[t].as_ref().unwrap();
                for st in &cut.subtris {
                    patch(t, st.side, st.verts);
                }
            }
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nunfitted interface solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", points.len()).unwrap();
    for p in &points {
        writeln!(out, "{:.10e} {:.10e} 0.0", p[0], p[1]).unwrap();
    }
    writeln!(out, "CELLS {} {}", tris.len(), 4 * tris.len()).unwrap();
    for t in &tris {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", tris.len()).unwrap();
    for _ in &tris {
        writeln!(out, "5").unwrap();
    }
    writeln!(out, "POINT_DATA {}", points.len()).unwrap();
    writeln!(out, "SCALARS u double 1\nLOOKUP_TABLE default").unwrap();
    for v in &values {
        writeln!(out, "{v:.10e}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Legacy ASCII VTK of the undeformed triangulation.
pub fn write_mesh_vtk(path: &Path, mesh: &crate::mesh::Mesh) -> Result<()> {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nbackground mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", mesh.vertices.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(out, "{:.10e} {:.10e} 0.0", p[0], p[1]).unwrap();
    }
    writeln!(out, "CELLS {} {}", mesh.triangles.len(), 4 * mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", mesh.triangles.len()).unwrap();
    for _ in &mesh.triangles {
        writeln!(out, "5").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Legacy ASCII VTK of the mapped interface as polyline cells.
pub fn write_interface_vtk(path: &Path, lv: &SolvedLevel, samples_per_segment: usize) -> Result<()> {
    let n = samples_per_segment.max(1);
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut lines: Vec<[usize; 2]> = Vec::new();
    for seg in &lv.topo.segments {
        let base = points.len();
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let xi = [
                seg.ends_ref[0][0] + s * (seg.ends_ref[1][0] - seg.ends_ref[0][0]),
                seg.ends_ref[0][1] + s * (seg.ends_ref[1][1] - seg.ends_ref[0][1]),
            ];
            points.push(lv.bundle.map(&lv.mesh, &lv.space, seg.elem, xi));
            if i > 0 {
                lines.push([base + i - 1, base + i]);
            }
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nmapped interface\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", points.len()).unwrap();
    for p in &points {
        writeln!(out, "{:.10e} {:.10e} 0.0", p[0], p[1]).unwrap();
    }
    writeln!(out, "CELLS {} {}", lines.len(), 3 * lines.len()).unwrap();
    for l in &lines {
        writeln!(out, "2 {} {}", l[0], l[1]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", lines.len()).unwrap();
    for _ in &lines {
        writeln!(out, "3").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Mapped interface polyline as CSV rows `x0,y0,x1,y1`, one row per sampled
/// sub-segment.
pub fn write_interface_csv(path: &Path, lv: &SolvedLevel, samples_per_segment: usize) -> Result<()> {
    let mut out = String::from("x0,y0,x1,y1\n");
    let n = samples_per_segment.max(1);
    for seg in &lv.topo.segments {
        let mut prev: Option<[f64; 2]> = None;
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let xi = [
                seg.ends_ref[0][0] + s * (seg.ends_ref[1][0] - seg.ends_ref[0][0]),
                seg.ends_ref[0][1] + s * (seg.ends_ref[1][1] - seg.ends_ref[0][1]),
            ];
            let x = lv.bundle.map(&lv.mesh, &lv.space, seg.elem, xi);
            if let Some(p) = prev {
                writeln!(out, "{:.10e},{:.10e},{:.10e},{:.10e}", p[0], p[1], x[0], x[1]).unwrap();
            }
            prev = Some(x);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Matrix Market coordinate dump (1-based, general).
pub fn write_matrix_market(path: &Path, a: &Csr) -> Result<()> {
    let nnz = a.vals.iter().filter(|&&v| v != 0.0).count();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(out, "{} {} {}", a.n, a.n, nnz).unwrap();
    for r in 0..a.n {
        for i in a.ptr[r]..a.ptr[r + 1] {
            if a.vals[i] != 0.0 {
                writeln!(out, "{} {} {:.16e}", r + 1, a.cols[i] + 1, a.vals[i]).unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}
