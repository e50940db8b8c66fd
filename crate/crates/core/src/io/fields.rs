//! CSV and legacy VTK writers for macroscopic fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lattice::MacroFields;

use super::config::ResolvedConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Vtk,
}

impl FieldFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            FieldFormat::Csv => "csv",
            FieldFormat::Vtk => "vtk",
        }
    }
}

/// `<dir>/<run>_<step>.<ext>`, the step zero-padded to eight digits.
pub fn output_path(dir: &Path, run: &str, step: u64, format: FieldFormat) -> PathBuf {
    dir.join(format!("{run}_{step:08}.{}", format.extension()))
}

fn check_finite(fields: &MacroFields) -> Result<()> {
    let finite = fields.rho.iter().chain(&fields.p).all(|x| x.is_finite())
        && fields
            .u
            .iter()
            .all(|u| u[0].is_finite() && u[1].is_finite());
    if finite {
        Ok(())
    } else {
        Err(Error::Domain("fields contain non-finite values".into()))
    }
}

/// Columns `x, y, rho, ux, uy, p` with `x, y` the cell indices. Lines of
/// `header` are written first as `#` comments.
pub fn fields_csv(fields: &MacroFields, header: &str) -> String {
    let mut s = String::new();
    for line in header.lines() {
        if line.starts_with('#') {
            let _ = writeln!(s, "{line}");
        } else {
            let _ = writeln!(s, "# {line}");
        }
    }
    s.push_str("x,y,rho,ux,uy,p\n");
    for y in 0..fields.ny {
        for x in 0..fields.nx {
            let c = fields.index(x, y);
            let _ = writeln!(
                s,
                "{x},{y},{:.16e},{:.16e},{:.16e},{:.16e}",
                fields.rho[c], fields.u[c][0], fields.u[c][1], fields.p[c]
            );
        }
    }
    s
}

/// Legacy ASCII structured points with point data `rho`, `velocity`, `p`.
pub fn fields_vtk(fields: &MacroFields, title: &str) -> String {
    let n = fields.nx * fields.ny;
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let mut s = format!(
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS\n\
         DIMENSIONS {} {} 1\nORIGIN 0 0 0\nSPACING 1 1 1\nPOINT_DATA {n}\n",
        fields.nx, fields.ny
    );
    s.push_str("SCALARS rho double 1\nLOOKUP_TABLE default\n");
    for r in &fields.rho {
        let _ = writeln!(s, "{r:.16e}");
    }
    s.push_str("VECTORS velocity double\n");
    for u in &fields.u {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", u[0], u[1]);
    }
    s.push_str("SCALARS p double 1\nLOOKUP_TABLE default\n");
    for p in &fields.p {
        let _ = writeln!(s, "{p:.16e}");
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one snapshot; the configuration, when given, heads the CSV file.
pub fn write_fields(
    fields: &MacroFields,
    format: FieldFormat,
    path: &Path,
    config: Option<&ResolvedConfig>,
) -> Result<()> {
    check_finite(fields)?;
    let text = match format {
        FieldFormat::Csv => fields_csv(fields, &config.map(|c| c.header()).unwrap_or_default()),
        FieldFormat::Vtk => fields_vtk(
            fields,
            &config.map_or_else(
                || "hlbm fields".to_string(),
                |c| format!("hlbm {} fields", c.provenance.version),
            ),
        ),
    };
    write_text(path, &text)
}

pub fn read_fields_csv(path: &Path) -> Result<MacroFields> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_fields_csv(&text)
}

/// Inverse of [`fields_csv`]; rows may come in any order.
pub fn parse_fields_csv(text: &str) -> Result<MacroFields> {
    let bad = |line: usize, msg: &str| Error::Domain(format!("csv line {line}: {msg}"));
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "x,y,rho,ux,uy,p" {
                return Err(bad(i + 1, "expected header x,y,rho,ux,uy,p"));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad(i + 1, "expected 6 columns"));
        }
        let x: usize = cols[0].parse().map_err(|_| bad(i + 1, "bad x"))?;
        let y: usize = cols[1].parse().map_err(|_| bad(i + 1, "bad y"))?;
        let mut v = [0.0; 4];
        for (slot, col) in v.iter_mut().zip(&cols[2..]) {
            *slot = col.parse().map_err(|_| bad(i + 1, "bad number"))?;
        }
        rows.push((x, y, v));
    }
    let nx = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let ny = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    if rows.len() != nx * ny {
        return Err(Error::Domain(format!(
            "csv holds {} rows for a {nx}x{ny} grid",
            rows.len()
        )));
    }
    let n = nx * ny;
    let mut fields = MacroFields {
        nx,
        ny,
        rho: vec![f64::NAN; n],
        u: vec![[f64::NAN; 2]; n],
        p: vec![f64::NAN; n],
    };
    for (x, y, v) in rows {
        let c = fields.index(x, y);
        if !fields.rho[c].is_nan() {
            return Err(Error::Domain(format!("cell ({x}, {y}) appears twice")));
        }
        fields.rho[c] = v[0];
        fields.u[c] = [v[1], v[2]];
        fields.p[c] = v[3];
    }
    Ok(fields)
}
