//! Text formats: CSV tables, field files, PGM images, `key = value`
//! configuration and run manifests.
//!
//! Numbers are written in their shortest round-trip form, so output is
//! identical across platforms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use shfront_core::connect::OrbitTrace;
use shfront_core::lattice::{strip_membership, Direction, LatticeVector};
use shfront_core::pattern::{Field2D, Grid};
use shfront_core::spectrum::ModeSpectrum;

use crate::error::{Error, Result};

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// A CSV table built row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        Table { text: cols.join(",") + "\n" }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let cells: Vec<&str> = cells.iter().map(|s| s.as_ref()).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn numbers(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.row(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Field CSV: a line `nx,ny,Lx,Ly,x0,y0` with the grid, then one line of
/// `nx` values per row `j`.
pub fn field_csv(f: &Field2D) -> String {
    let g = &f.grid;
    let mut s = format!("{},{},{},{},{},{}\n", g.nx, g.ny, num(g.lx), num(g.ly), num(g.x0), num(g.y0));
    for row in f.values.chunks(g.nx) {
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_field_csv(text: &str, path: &Path) -> Result<Field2D> {
    let err = |line: usize, msg: &str| Error::Parse { path: path.into(), line, msg: msg.into() };
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let h: Vec<&str> = head.split(',').map(str::trim).collect();
    if h.len() != 6 {
        return Err(err(1, "header needs nx,ny,Lx,Ly,x0,y0"));
    }
    let nx: usize = h[0].parse().map_err(|_| err(1, "bad nx"))?;
    let ny: usize = h[1].parse().map_err(|_| err(1, "bad ny"))?;
    let mut g = [0.0; 4];
    for (k, v) in g.iter_mut().enumerate() {
        *v = h[k + 2].parse().map_err(|_| err(1, "bad grid value"))?;
    }
    let grid = Grid::new(nx, ny, g[0], g[1], g[2], g[3]).map_err(|e| err(1, &e.to_string()))?;
    let mut values = Vec::with_capacity(nx * ny);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| err(i + 1, "bad value"))?;
            if !v.is_finite() {
                return Err(err(i + 1, "non-finite value"));
            }
            values.push(v);
        }
    }
    if values.len() != nx * ny {
        return Err(err(0, &format!("expected {} values, found {}", nx * ny, values.len())));
    }
    Ok(Field2D { grid, values })
}

pub fn read_field_csv(path: &Path) -> Result<Field2D> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field_csv(&text, path)
}

/// 8-bit ASCII PGM with linear min/max scaling; the top image row is the
/// largest `y`.
pub fn field_pgm(f: &Field2D) -> String {
    let (lo, hi) = f.min_max();
    let span = hi - lo;
    let g = &f.grid;
    let mut s = format!("P2\n# min={} max={}\n{} {}\n255\n", num(lo), num(hi), g.nx, g.ny);
    for j in (0..g.ny).rev() {
        let row: Vec<String> = f.values[j * g.nx..(j + 1) * g.nx]
            .iter()
            .map(|v| {
                let q = if span > 0.0 { ((v - lo) / span * 255.0).round() } else { 0.0 };
                (q as u8).to_string()
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Orbit CSV: `xi`, the state columns of the variant, then `H`.
pub fn orbit_csv(t: &OrbitTrace) -> String {
    let mut header = vec!["xi".to_string()];
    header.extend(t.variant.labels());
    header.push("H".into());
    let mut table = Table::new(&header);
    for ((xi, s), h) in t.xi.iter().zip(&t.states).zip(&t.energies) {
        let mut row = vec![*xi];
        row.extend_from_slice(s.as_slice());
        row.push(*h);
        table.numbers(&row);
    }
    table.text
}

/// Lattice dump: `n1,n2,kx,ky,axial,transverse,in_strip`.
pub fn lattice_csv(points: &[LatticeVector], dir: &Direction) -> Result<String> {
    let mut table = Table::new(&["n1", "n2", "kx", "ky", "axial", "transverse", "in_strip"]);
    for g in points {
        let s = strip_membership(g, dir)?;
        table.row(&[
            g.n1.to_string(),
            g.n2.to_string(),
            num(g.kx),
            num(g.ky),
            num(dir.axial(g)),
            num(dir.transverse(g)),
            u8::from(s.in_critical_strip).to_string(),
        ]);
    }
    Ok(table.text)
}

/// Spectrum CSV: `n1,n2,re1,im1,...,re4,im4,class1..4`.
pub fn spectrum_csv(modes: &[ModeSpectrum]) -> String {
    let mut header = vec!["n1".to_string(), "n2".to_string()];
    for k in 1..=4 {
        header.push(format!("re{k}"));
        header.push(format!("im{k}"));
    }
    header.extend((1..=4).map(|k| format!("class{k}")));
    let mut table = Table::new(&header);
    for m in modes {
        let mut row = vec![m.gamma.n1.to_string(), m.gamma.n2.to_string()];
        for r in m.roots {
            row.push(num(r.re));
            row.push(num(r.im));
        }
        row.extend(m.classes.iter().map(|c| c.label().to_string()));
        table.row(&row);
    }
    table.text
}

/// Parsed `key = value` file; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    pub entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse { path: path.into(), line: i + 1, msg: msg.into() };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(err("empty key"));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(&format!("duplicate key `{k}`")));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Record of one command-line run, written next to its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_time: f64,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "wall_time = {:.3}", self.wall_time);
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "param.{k} = {v}");
        }
        for o in &self.outputs {
            let _ = writeln!(s, "output = {}", o.display());
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.txt");
        write_file(&path, &self.to_text())?;
        Ok(path)
    }
}
