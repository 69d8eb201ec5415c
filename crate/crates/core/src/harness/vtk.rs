//! Legacy ASCII VTK (unstructured grid) snapshots.
//!
//! Values are written in shortest round-trip form, so reading a snapshot
//! back yields bit-identical fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::{Point, TriMesh};

const VTK_TRIANGLE: u8 = 5;

/// Fields of one snapshot: cell data (`u`) and point data (`μ`, `w`).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VtkSnapshot {
    pub title: String,
    pub points: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    pub cell_data: Vec<(String, Vec<f64>)>,
    pub point_data: Vec<(String, Vec<f64>)>,
}

impl VtkSnapshot {
    pub fn new(mesh: &TriMesh, title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            points: mesh.vertices().to_vec(),
            cells: mesh.cells().to_vec(),
            ..Default::default()
        }
    }

    pub fn with_cell_data(mut self, name: &str, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.cells.len(), "cell data length for {name}");
        self.cell_data.push((name.into(), values.to_vec()));
        self
    }

    pub fn with_point_data(mut self, name: &str, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.points.len(), "point data length for {name}");
        self.point_data.push((name.into(), values.to_vec()));
        self
    }

    pub fn cell_field(&self, name: &str) -> Option<&[f64]> {
        self.cell_data.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn point_field(&self, name: &str) -> Option<&[f64]> {
        self.point_data.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_vtk_string(&self) -> String {
        let mut s = String::with_capacity(64 * (self.points.len() + self.cells.len()));
        // the title line may not contain newlines
        let title = self.title.replace('\n', " ");
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
        }
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), 4 * self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for _ in &self.cells {
            let _ = writeln!(s, "{VTK_TRIANGLE}");
        }
        let mut section = |kind: &str, n: usize, data: &[(String, Vec<f64>)]| {
            if data.is_empty() {
                return;
            }
            let _ = writeln!(s, "{kind} {n}");
            for (name, vals) in data {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in vals {
                    let _ = writeln!(s, "{v:e}");
                }
            }
        };
        section("CELL_DATA", self.cells.len(), &self.cell_data);
        section("POINT_DATA", self.points.len(), &self.point_data);
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_vtk_string())
    }

    /// Parse the subset of the legacy format produced by [`to_vtk_string`].
    ///
    /// [`to_vtk_string`]: VtkSnapshot::to_vtk_string
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| format!("unexpected end of file reading {what}"));
        if !next("version")?.starts_with("# vtk DataFile") {
            return Err("missing vtk header".into());
        }
        let title = next("title")?.to_string();
        if next("format")?.trim() != "ASCII" {
            return Err("only ASCII files are supported".into());
        }
        if next("dataset")?.trim() != "DATASET UNSTRUCTURED_GRID" {
            return Err("only unstructured grids are supported".into());
        }
        let mut tokens = lines_after(text, 4).peekable();
        let mut snap = VtkSnapshot {
            title,
            ..Default::default()
        };
        let expect = |tok: Option<&str>, want: &str| match tok {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want}, found {other:?}")),
        };
        let count = |tok: Option<&str>| -> Result<usize, String> {
            tok.ok_or("missing count")?.parse::<usize>().map_err(|e| e.to_string())
        };
        let float = |tok: Option<&str>| -> Result<f64, String> {
            tok.ok_or("missing value")?.parse::<f64>().map_err(|e| e.to_string())
        };
        expect(tokens.next(), "POINTS")?;
        let np = count(tokens.next())?;
        tokens.next();
        for _ in 0..np {
            let (x, y) = (float(tokens.next())?, float(tokens.next())?);
            float(tokens.next())?;
            snap.points.push([x, y]);
        }
        expect(tokens.next(), "CELLS")?;
        let nc = count(tokens.next())?;
        count(tokens.next())?;
        for _ in 0..nc {
            if count(tokens.next())? != 3 {
                return Err("only triangles are supported".into());
            }
            snap.cells.push([count(tokens.next())?, count(tokens.next())?, count(tokens.next())?]);
        }
        expect(tokens.next(), "CELL_TYPES")?;
        count(tokens.next())?;
        for _ in 0..nc {
            count(tokens.next())?;
        }
        let mut target: Option<(bool, usize)> = None;
        while let Some(tok) = tokens.next() {
            match tok {
                "CELL_DATA" => target = Some((true, count(tokens.next())?)),
                "POINT_DATA" => target = Some((false, count(tokens.next())?)),
                "SCALARS" => {
                    let (is_cell, n) = target.ok_or("SCALARS outside a data section")?;
                    let name = tokens.next().ok_or("missing field name")?.to_string();
                    tokens.next();
                    tokens.next();
                    expect(tokens.next(), "LOOKUP_TABLE")?;
                    tokens.next();
                    let vals = (0..n).map(|_| float(tokens.next())).collect::<Result<Vec<_>, _>>()?;
                    if is_cell {
                        snap.cell_data.push((name, vals));
                    } else {
                        snap.point_data.push((name, vals));
                    }
                }
                other => return Err(format!("unexpected token {other}")),
            }
        }
        Ok(snap)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        Self::parse(&text)
    }
}

fn lines_after(text: &str, skip: usize) -> impl Iterator<Item = &str> {
    text.lines().skip(skip).flat_map(str::split_whitespace)
}

/// `snap_<step>.vtk`.
pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step}.vtk")
}
