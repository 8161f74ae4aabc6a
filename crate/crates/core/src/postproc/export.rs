use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ConvergenceRow, FieldErrors, PostprocError};
use crate::error::Error;
use crate::fem::FeFunction;
use crate::mesh::Mesh;
use crate::scheme::EnergyEntry;

fn write_file(path: &Path, body: &str) -> crate::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = Option<f64>>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        first = false;
        if let Some(v) = c {
            write!(out, "{v:.16e}").expect("write to string");
        }
    }
    out.push('\n');
}

/// Columns `one_over_h, err_*, rate_*`; rate cells of the first row are empty.
pub fn write_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> crate::Result<()> {
    let mut out = String::from("one_over_h");
    for n in FieldErrors::NAMES {
        write!(out, ",err_{n}").expect("write to string");
    }
    for n in FieldErrors::NAMES {
        write!(out, ",rate_{n}").expect("write to string");
    }
    out.push('\n');
    for r in rows {
        let rates = r.rates.map(|x| x.to_array());
        let cells = std::iter::once(Some(r.one_over_h))
            .chain(r.errors.to_array().into_iter().map(Some))
            .chain((0..7).map(|k| rates.map(|a| a[k])));
        push_row(&mut out, cells);
    }
    write_file(path, &out)
}

pub fn export_energy_csv(entries: &[EnergyEntry], path: &Path) -> crate::Result<()> {
    let mut out = EnergyEntry::COLUMNS.join(",");
    out.push('\n');
    for e in entries {
        push_row(&mut out, e.values().into_iter().map(Some));
    }
    write_file(path, &out)
}

/// Header and rows of a numeric CSV file; empty cells are `None`.
pub fn read_csv(path: &Path) -> crate::Result<(Vec<String>, Vec<Vec<Option<f64>>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| PostprocError::Csv("empty file".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|_| PostprocError::Csv(format!("row {}: bad number {c:?}", i + 1)))
                }
            })
            .collect::<Result<_, _>>()?;
        if cells.len() != header.len() {
            return Err(PostprocError::Csv(format!(
                "row {} has {} cells, header {}",
                i + 1,
                cells.len(),
                header.len()
            ))
            .into());
        }
        rows.push(cells);
    }
    Ok((header, rows))
}

/// A point field for [`export_vtk`]: one scalar or one 2-vector per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkField {
    pub name: String,
    pub components: usize,
    /// Node-major values.
    pub values: Vec<f64>,
}

impl VtkField {
    pub fn from_function(name: &str, f: &FeFunction) -> Self {
        VtkField {
            name: name.to_owned(),
            components: f.space().components(),
            values: vertex_values(f),
        }
    }
}

/// Values at the mesh vertices, node-major. P2 fields keep their vertex
/// coefficients (numbered first) and drop the edge midpoints.
pub fn vertex_values(f: &FeFunction) -> Vec<f64> {
    let s = f.space();
    let nv = s.mesh().node_count();
    let ns = s.scalar_dof_count();
    let nc = s.components();
    let mut out = Vec::with_capacity(nv * nc);
    for v in 0..nv {
        for c in 0..nc {
            out.push(f.coeffs()[c * ns + v]);
        }
    }
    out
}

/// Legacy ASCII VTK unstructured grid of triangles with point data.
pub fn export_vtk(mesh: &Mesh, fields: &[VtkField], path: &Path) -> crate::Result<()> {
    let nv = mesh.node_count();
    for f in fields {
        if f.values.len() != nv * f.components {
            return Err(PostprocError::FieldLength {
                name: f.name.clone(),
                expected: nv,
                found: f.values.len() / f.components.max(1),
            }
            .into());
        }
    }
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "# vtk DataFile Version 3.0").unwrap();
    writeln!(w, "mrbc fields").unwrap();
    writeln!(w, "ASCII").unwrap();
    writeln!(w, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(w, "POINTS {nv} double").unwrap();
    for p in mesh.nodes() {
        writeln!(w, "{:.16e} {:.16e} 0", p[0], p[1]).unwrap();
    }
    let nt = mesh.triangle_count();
    writeln!(w, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(w, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        writeln!(w, "5").unwrap();
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {nv}").unwrap();
    }
    for f in fields {
        let name = f.name.replace(char::is_whitespace, "_");
        if f.components == 1 {
            writeln!(w, "SCALARS {name} double 1").unwrap();
            writeln!(w, "LOOKUP_TABLE default").unwrap();
            for v in &f.values {
                writeln!(w, "{v:.16e}").unwrap();
            }
        } else {
            writeln!(w, "VECTORS {name} double").unwrap();
            for v in f.values.chunks(f.components) {
                writeln!(w, "{:.16e} {:.16e} 0", v[0], v[1]).unwrap();
            }
        }
    }
    write_file(path, &out)
}
