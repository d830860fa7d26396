//! The `shfront` command line.
//!
//! Every subcommand resolves its parameters in three layers: built-in
//! defaults and an optional preset, then a `--config` file, then explicit
//! flags. Tables go to stdout, or into `--out DIR` together with a
//! `manifest.txt`; summaries go to stderr. Exit status is 0 on success, 1
//! on domain errors and 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use shfront_core::amplitude::ModelParams;
use shfront_core::connect::{shoot, ShootConfig};
use shfront_core::equilibria::{self, catalogue_in_direction, mixed_mode_window, mu1, trivial_mode, Branch};
use shfront_core::frontspeed::{marginal_exact, marginal_leading, predicted_speed};
use shfront_core::lattice::{enumerate_lattice, make_direction, AngleSpec, Direction, LatticeKind};
use shfront_core::pattern::{sample_equilibrium_pattern, sample_interface, Field2D, Grid};
use shfront_core::spectrum::{gap_report, mode_spectrum, Bands, DispersionContext};

use crate::error::{Error, Result};
use crate::io::{self, num, KeyValues, RunManifest, Table};
use crate::pde::{run_experiment, PdeConfig, StripNorm};

const MODEL_KEYS: &[&str] = &["lattice", "angle", "mu0", "c0", "eps", "beta2", "K0", "K2", "K1"];

#[derive(Parser, Debug)]
#[command(name = "shfront", version, about = "Spectra, equilibria, heteroclinic fronts and front speeds for planar Swift-Hohenberg pattern interfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spatial eigenvalues of every lattice point in a disc
    Spectrum(SpectrumArgs),
    /// Spectral-gap counts (more-central, less-central, hyperbolic)
    Gap(SpectrumArgs),
    /// Equilibrium catalogue with Landau and spatial stability
    #[command(after_help = "Presets:\n  fig44   trivial-state eigenvalues at (d.k1)^2 = 0.9, mu0 = 1, c0 in {0.8, 3.795, 4}")]
    Equilibria(ModelArgs),
    /// Equilibrium catalogue over a mu0 sweep
    #[command(after_help = "Presets:\n  fig43a  hex, beta2 = 1, (K0, K2) = (-0.3, -0.6)\n  fig43b  hex, beta2 = 1, (K0, K2) = (-1.2, -0.6)")]
    Bifurcation(BifurcationArgs),
    /// Heteroclinic connection between two equilibria
    #[command(after_help = "Presets:\n  appendixB  hex, theta = 0, mu0 = 1, beta2 = 1, K0 = -3, K2 = -6, c0 = 2, hex_down -> trivial\n  rolls      hex, theta = 0, K0 = -1.2, K2 = -0.6, mu0 = 1.1 mu1, c0 = 2, rolls -> trivial\n  squares    square, theta = 0, mu0 = 1, K0 = -3, K1 = -6, c0 = 2, squares -> trivial")]
    Shoot(ShootArgs),
    /// Marginal-stability front speeds over a transverse wavenumber grid
    Frontspeed(FrontspeedArgs),
    /// Leading-order pattern fields of equilibria and interfaces
    #[command(after_help = "Presets:\n  appendixB, rolls, squares  as for shoot; select the interface with --mode interface")]
    Pattern(PatternArgs),
    /// Direct simulation and front-speed measurement
    #[command(after_help = "Presets:\n  appendixB-theta0  eps = 0.3, front along k1, 1024 x 96 grid, T = 100, fit [20, 80]\n  appendixB-pi6     eps = 0.3, front at pi/6, 1024 x 128 grid, T = 100, fit [30, 80]")]
    Pde(PdeArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Named parameter set (listed below)
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory for tables, fields and the manifest
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
#[command(allow_negative_numbers = true)]
pub struct ModelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// hex or square
    #[arg(long)]
    pub lattice: Option<String>,
    /// Front direction: 0, p/q (cot theta = sqrt3 p/q on hex, p/q on square) or pi/6
    #[arg(long)]
    pub angle: Option<String>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long = "K0")]
    pub k0: Option<f64>,
    #[arg(long = "K2")]
    pub k2: Option<f64>,
    #[arg(long = "K1")]
    pub k1: Option<f64>,
}

impl ModelArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let f = |v: Option<f64>| v.map(num);
        vec![
            ("lattice", self.lattice.clone()),
            ("angle", self.angle.clone()),
            ("mu0", f(self.mu0)),
            ("c0", f(self.c0)),
            ("eps", f(self.eps)),
            ("beta2", f(self.beta2)),
            ("K0", f(self.k0)),
            ("K2", f(self.k2)),
            ("K1", f(self.k1)),
        ]
    }
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Radius of the lattice disc
    #[arg(long)]
    pub radius: Option<f64>,
    /// More-central band constant: |Re| < kmc eps
    #[arg(long)]
    pub kmc: Option<f64>,
    /// Less-central band constant: |Re| < klc sqrt(eps)
    #[arg(long)]
    pub klc: Option<f64>,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct BifurcationArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "mu0-min")]
    pub mu0_min: Option<f64>,
    #[arg(long = "mu0-max")]
    pub mu0_max: Option<f64>,
    /// Number of sweep points
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct ShootArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Source branch, e.g. hex_down
    #[arg(long)]
    pub source: Option<String>,
    /// Target branch, e.g. trivial
    #[arg(long)]
    pub target: Option<String>,
    /// Number of seeds on the unstable sphere
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct FrontspeedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest |k_perp| of the grid
    #[arg(long = "kperp-max")]
    pub kperp_max: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct PatternArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// equilibrium or interface
    #[arg(long)]
    pub mode: Option<String>,
    /// Branch to draw (equilibrium mode)
    #[arg(long)]
    pub branch: Option<String>,
    /// Interface source branch
    #[arg(long)]
    pub source: Option<String>,
    /// Interface target branch
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long = "Lx")]
    pub lx: Option<f64>,
    #[arg(long = "Ly")]
    pub ly: Option<f64>,
    /// Time at which the interface is drawn
    #[arg(long)]
    pub t: Option<f64>,
    /// Factor applied to the field for display
    #[arg(long)]
    pub amplify: Option<f64>,
    /// csv or pgm
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
#[command(allow_negative_numbers = true)]
pub struct PdeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub angle: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long = "K0")]
    pub k0: Option<f64>,
    #[arg(long = "K2")]
    pub k2: Option<f64>,
    #[arg(long = "Lx")]
    pub lx: Option<f64>,
    #[arg(long = "Ly")]
    pub ly: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long = "strip-width")]
    pub strip_width: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Start of the fit window
    #[arg(long)]
    pub t0: Option<f64>,
    /// End of the fit window
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long = "output-interval")]
    pub output_interval: Option<f64>,
    /// normalized or raw
    #[arg(long = "strip-norm")]
    pub strip_norm: Option<String>,
    #[arg(long = "stop-fraction")]
    pub stop_fraction: Option<f64>,
    /// Comma-separated snapshot times, written with --out
    #[arg(long)]
    pub snapshots: Option<String>,
}

const PDE_KEYS: &[&str] = &[
    "angle",
    "eps",
    "mu0",
    "beta2",
    "K0",
    "K2",
    "Lx",
    "Ly",
    "nx",
    "ny",
    "x0",
    "dt",
    "T",
    "ell",
    "phi",
    "strip_width",
    "threshold",
    "t0",
    "t1",
    "output_interval",
    "strip_norm",
    "stop_fraction",
    "snapshots",
];

impl PdeArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let f = |v: Option<f64>| v.map(num);
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        vec![
            ("angle", self.angle.clone()),
            ("eps", f(self.eps)),
            ("mu0", f(self.mu0)),
            ("beta2", f(self.beta2)),
            ("K0", f(self.k0)),
            ("K2", f(self.k2)),
            ("Lx", f(self.lx)),
            ("Ly", f(self.ly)),
            ("nx", u(self.nx)),
            ("ny", u(self.ny)),
            ("x0", f(self.x0)),
            ("dt", f(self.dt)),
            ("T", f(self.t_end)),
            ("ell", f(self.ell)),
            ("phi", f(self.phi)),
            ("strip_width", f(self.strip_width)),
            ("threshold", f(self.threshold)),
            ("t0", f(self.t0)),
            ("t1", f(self.t1)),
            ("output_interval", f(self.output_interval)),
            ("strip_norm", self.strip_norm.clone()),
            ("stop_fraction", f(self.stop_fraction)),
            ("snapshots", self.snapshots.clone()),
        ]
    }
}

/// Parameters after merging defaults, preset, config file and flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub values: BTreeMap<String, String>,
}

fn layer(values: &mut BTreeMap<String, String>, pairs: &[(&str, &str)]) {
    for (k, v) in pairs {
        values.insert(k.to_string(), v.to_string());
    }
}

/// Merges the layers; config keys outside `allowed` are rejected.
pub fn resolve(
    allowed: &[&str],
    base: &[(&str, &str)],
    preset: &[(String, String)],
    config: Option<&Path>,
    flags: &[(&'static str, Option<String>)],
) -> Result<Resolved> {
    let mut values = BTreeMap::new();
    layer(&mut values, base);
    for (k, v) in preset {
        values.insert(k.clone(), v.clone());
    }
    if let Some(path) = config {
        for (k, v) in KeyValues::read(path)?.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::UnknownKey(k));
            }
            values.insert(k, v);
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            values.insert(k.to_string(), v.clone());
        }
    }
    Ok(Resolved { values })
}

impl Resolved {
    pub fn str(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| Error::Usage(format!("missing parameter `{key}`")))
    }

    pub fn opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.str(key)?.parse().map_err(|e: T::Err| Error::InvalidValue { key: key.into(), msg: e.to_string() })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parsed(key)?;
        if !v.is_finite() {
            return Err(Error::InvalidValue { key: key.into(), msg: "must be finite".into() });
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parsed(key)
    }

    pub fn branch(&self, key: &str) -> Result<Branch> {
        self.parsed(key)
    }

    pub fn lattice(&self) -> Result<LatticeKind> {
        match self.str("lattice")? {
            "hex" => Ok(LatticeKind::Hex),
            "square" => Ok(LatticeKind::Square),
            other => Err(Error::InvalidValue { key: "lattice".into(), msg: format!("expected hex or square, got {other}") }),
        }
    }

    pub fn angle(&self) -> Result<AngleSpec> {
        AngleSpec::parse(self.str("angle")?).map_err(|e| Error::InvalidValue { key: "angle".into(), msg: e.to_string() })
    }

    pub fn direction(&self) -> Result<Direction> {
        Ok(make_direction(self.lattice()?, self.angle()?)?)
    }

    pub fn model(&self) -> Result<ModelParams> {
        let p = match self.lattice()? {
            LatticeKind::Hex => ModelParams::hex(self.f64("mu0")?, self.f64("c0")?, self.f64("beta2")?, self.f64("K0")?, self.f64("K2")?),
            LatticeKind::Square => ModelParams::square(self.f64("mu0")?, self.f64("c0")?, self.f64("K0")?, self.f64("K1")?),
        };
        p.validate()?;
        Ok(p)
    }
}

const MODEL_BASE: &[(&str, &str)] = &[
    ("lattice", "hex"),
    ("angle", "0"),
    ("mu0", "1"),
    ("c0", "1"),
    ("eps", "0.01"),
    ("beta2", "1"),
    ("K0", "-3"),
    ("K2", "-6"),
    ("K1", "-6"),
];

fn owned(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn preset_values(sub: &str, name: Option<&str>) -> Result<Vec<(String, String)>> {
    let Some(name) = name else { return Ok(Vec::new()) };
    let v = match (sub, name) {
        ("equilibria", "fig44") => owned(&[("mu0", "1"), ("dk_sq", "0.9"), ("c0_list", "0.8,3.795,4")]),
        ("bifurcation", "fig43a") => owned(&[("lattice", "hex"), ("beta2", "1"), ("K0", "-0.3"), ("K2", "-0.6"), ("mu0_min", "-0.2"), ("mu0_max", "3"), ("steps", "33")]),
        ("bifurcation", "fig43b") => owned(&[("lattice", "hex"), ("beta2", "1"), ("K0", "-1.2"), ("K2", "-0.6"), ("mu0_min", "-0.2"), ("mu0_max", "6"), ("steps", "32")]),
        ("shoot" | "pattern", "appendixB") => owned(&[
            ("lattice", "hex"),
            ("angle", "0"),
            ("mu0", "1"),
            ("beta2", "1"),
            ("K0", "-3"),
            ("K2", "-6"),
            ("c0", "2"),
            ("source", "hex_down"),
            ("target", "trivial"),
        ]),
        ("shoot" | "pattern", "rolls") => {
            let p = ModelParams::hex(1.0, 2.0, 1.0, -1.2, -0.6);
            let m = mu1(&p).ok_or_else(|| Error::Usage("no mu1 for the rolls preset".into()))?;
            let mut v = owned(&[("lattice", "hex"), ("angle", "0"), ("beta2", "1"), ("K0", "-1.2"), ("K2", "-0.6"), ("c0", "2"), ("source", "rolls"), ("target", "trivial")]);
            v.push(("mu0".into(), num(1.1 * m)));
            v
        }
        ("shoot" | "pattern", "squares") => owned(&[
            ("lattice", "square"),
            ("angle", "0"),
            ("mu0", "1"),
            ("c0", "2"),
            ("K0", "-3"),
            ("K1", "-6"),
            ("source", "squares"),
            ("target", "trivial"),
        ]),
        ("pde", "appendixB-theta0") => pde_values(&PdeConfig::appendix_b_theta0()),
        ("pde", "appendixB-pi6") => pde_values(&PdeConfig::appendix_b_pi6()),
        _ => return Err(Error::Usage(format!("unknown preset `{name}` for {sub}"))),
    };
    Ok(v)
}

fn pde_values(c: &PdeConfig) -> Vec<(String, String)> {
    let mut v = vec![
        ("angle", c.angle.to_string()),
        ("eps", num(c.eps)),
        ("mu0", num(c.mu0)),
        ("beta2", num(c.beta2)),
        ("Lx", num(c.lx)),
        ("Ly", num(c.ly)),
        ("nx", c.nx.to_string()),
        ("ny", c.ny.to_string()),
        ("x0", num(c.x0)),
        ("dt", num(c.dt)),
        ("T", num(c.t_end)),
        ("ell", num(c.ell)),
        ("phi", num(c.phi)),
        ("strip_width", num(c.strip_width)),
        ("threshold", num(c.threshold)),
        ("t0", num(c.fit_window.0)),
        ("t1", num(c.fit_window.1)),
        ("output_interval", num(c.output_interval)),
        ("strip_norm", c.strip_norm.to_string()),
        ("stop_fraction", num(c.stop_fraction)),
    ];
    if let Some(k) = c.k0 {
        v.push(("K0", num(k)));
    }
    if let Some(k) = c.k2 {
        v.push(("K2", num(k)));
    }
    v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn pde_config(r: &Resolved) -> Result<PdeConfig> {
    let cfg = PdeConfig {
        eps: r.f64("eps")?,
        mu0: r.f64("mu0")?,
        beta2: r.f64("beta2")?,
        k0: r.opt("K0").map(|_| r.f64("K0")).transpose()?,
        k2: r.opt("K2").map(|_| r.f64("K2")).transpose()?,
        lx: r.f64("Lx")?,
        ly: r.f64("Ly")?,
        nx: r.usize("nx")?,
        ny: r.usize("ny")?,
        x0: r.f64("x0")?,
        dt: r.f64("dt")?,
        t_end: r.f64("T")?,
        angle: AngleSpec::parse(r.str("angle")?).map_err(|e| Error::InvalidValue { key: "angle".into(), msg: e.to_string() })?,
        ell: r.f64("ell")?,
        phi: r.f64("phi")?,
        strip_width: r.f64("strip_width")?,
        threshold: r.f64("threshold")?,
        fit_window: (r.f64("t0")?, r.f64("t1")?),
        output_interval: r.f64("output_interval")?,
        strip_norm: r.parsed::<StripNorm>("strip_norm")?,
        stop_fraction: r.f64("stop_fraction")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// What a subcommand produced.
struct Outcome {
    /// Main table, printed when no output directory is given.
    primary: (String, String),
    /// Further files, written only with `--out`.
    extra: Vec<(String, String)>,
    summary: Vec<String>,
}

fn list(r: &Resolved, key: &str) -> Result<Vec<f64>> {
    r.str(key)?
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidValue { key: key.into(), msg: e.to_string() }))
        .collect()
}

fn bands(r: &Resolved) -> Result<Bands> {
    Ok(Bands { k_mc: r.f64("kmc")?, k_lc: r.f64("klc")? })
}

fn spectrum_cmd(r: &Resolved, gap: bool) -> Result<Outcome> {
    let dir = r.direction()?;
    let ctx = DispersionContext::new(r.f64("mu0")?, r.f64("c0")?, r.f64("eps")?, dir)?;
    let radius = r.f64("radius")?;
    let bands = bands(r)?;
    if !gap {
        let modes = enumerate_lattice(dir.kind, radius).iter().map(|g| mode_spectrum(g, &ctx, &bands)).collect::<shfront_core::Result<Vec<_>>>()?;
        return Ok(Outcome { primary: ("spectrum.csv".into(), io::spectrum_csv(&modes)), extra: vec![], summary: vec![] });
    }
    let rep = gap_report(&ctx, radius, &bands)?;
    let lattice = io::lattice_csv(&enumerate_lattice(dir.kind, radius), &dir)?;
    Ok(Outcome {
        primary: ("gap.csv".into(), io::spectrum_csv(&rep.modes)),
        extra: vec![("lattice.csv".into(), lattice)],
        summary: vec![
            format!("n_mc={}", rep.n_more_central),
            format!("n_lc={}", rep.n_less_central),
            format!("n_h={}", rep.n_hyperbolic),
            format!("min_hyperbolic_gap={}", num(rep.min_hyperbolic_gap)),
            format!("min_less_central_real={}", num(rep.min_less_central_real)),
        ],
    })
}

const CATALOGUE_HEADER: &[&str] = &["mu0", "branch", "A1", "A2", "A3", "energy", "n_unstable_landau", "n_stable_spatial"];

fn catalogue_rows(table: &mut Table, p: &ModelParams, dir: &Direction) -> Result<()> {
    for rec in catalogue_in_direction(p, dir)?.iter().filter(|r| r.exists) {
        let a = rec.amplitudes;
        table.row(&[
            num(p.mu0),
            rec.branch.to_string(),
            num(a[0]),
            num(a[1]),
            num(a[2]),
            num(rec.energy),
            rec.n_unstable_landau().to_string(),
            rec.spatial_counts.map(|c| c.0.to_string()).unwrap_or_default(),
        ]);
    }
    Ok(())
}

fn equilibria_cmd(r: &Resolved, fig44: bool) -> Result<Outcome> {
    if fig44 {
        let mut t = Table::new(&["c0", "dk_sq", "re1", "im1", "re2", "im2", "oscillatory", "c_crit"]);
        let dk = r.f64("dk_sq")?;
        for c0 in list(r, "c0_list")? {
            let m = trivial_mode(dk, r.f64("mu0")?, c0)?;
            t.row(&[
                num(c0),
                num(dk),
                num(m.lambda[0].re),
                num(m.lambda[0].im),
                num(m.lambda[1].re),
                num(m.lambda[1].im),
                u8::from(m.oscillatory).to_string(),
                num(m.c_crit),
            ]);
        }
        return Ok(Outcome { primary: ("trivial_modes.csv".into(), t.as_str().into()), extra: vec![], summary: vec![] });
    }
    let p = r.model()?;
    let dir = r.direction()?;
    let mut t = Table::new(CATALOGUE_HEADER);
    catalogue_rows(&mut t, &p, &dir)?;
    let mut summary = Vec::new();
    if p.kind == LatticeKind::Hex {
        let rank = equilibria::energy_ranking(&p)?;
        if let Some(b) = rank.lowest_nontrivial() {
            summary.push(format!("lowest_nontrivial={b}"));
        }
        if let Some(m) = rank.mu1 {
            summary.push(format!("mu1={}", num(m)));
        }
    }
    for m in equilibria::trivial_mode_classification(&p, &dir)? {
        summary.push(format!("trivial_mode{}: oscillatory={} c_crit={}", m.mode + 1, m.oscillatory, num(m.c_crit)));
    }
    Ok(Outcome { primary: ("equilibria.csv".into(), t.as_str().into()), extra: vec![], summary })
}

fn bifurcation_cmd(r: &Resolved) -> Result<Outcome> {
    let p = r.model()?;
    let dir = r.direction()?;
    let (lo, hi, n) = (r.f64("mu0_min")?, r.f64("mu0_max")?, r.usize("steps")?);
    if n < 2 || !(hi > lo) {
        return Err(Error::InvalidValue { key: "steps".into(), msg: "need steps >= 2 and mu0_max > mu0_min".into() });
    }
    let mut t = Table::new(CATALOGUE_HEADER);
    for i in 0..n {
        let mu0 = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        if mu0 == 0.0 {
            continue;
        }
        catalogue_rows(&mut t, &p.with_mu0(mu0), &dir)?;
    }
    let mut summary = Vec::new();
    if p.kind == LatticeKind::Hex {
        if let Some(m) = mu1(&p) {
            summary.push(format!("mu1={}", num(m)));
        }
        let (a, b) = mixed_mode_window(&p);
        summary.push(format!("mixed_window=({}, {})", num(a), num(b)));
    }
    Ok(Outcome { primary: ("bifurcation.csv".into(), t.as_str().into()), extra: vec![], summary })
}

fn shoot_report(r: &Resolved) -> Result<shfront_core::connect::ShootReport> {
    let p = r.model()?;
    let dir = r.direction()?;
    let cat = catalogue_in_direction(&p, &dir)?;
    let pick = |key: &str| -> Result<&equilibria::EquilibriumRecord> {
        let b = r.branch(key)?;
        equilibria::find(&cat, b).ok_or_else(|| Error::Core(shfront_core::Error::InvalidParameter(format!("{b} does not exist for these parameters"))))
    };
    let (src, tgt) = (pick("source")?, pick("target")?);
    let cfg = ShootConfig { n_seeds: r.usize("seeds")?, ..ShootConfig::default() };
    Ok(shoot(src, tgt, &p, &dir, &cfg)?)
}

fn shoot_cmd(r: &Resolved) -> Result<Outcome> {
    let rep = shoot_report(r)?;
    let mut summary = vec![
        format!("seed={} of {} ({} converged)", rep.seed_index, rep.seeds_tried, rep.seeds_converged),
        format!("endpoint_distance={}", num(rep.endpoint_distance)),
        format!("endpoint_residual={}", num(rep.endpoint_residual)),
        format!("persistence={:?}", rep.persistence),
    ];
    for (b, d) in &rep.near_visits {
        summary.push(format!("near_visit={b} distance={}", num(*d)));
    }
    Ok(Outcome { primary: ("orbit.csv".into(), io::orbit_csv(&rep.trace)), extra: vec![], summary })
}

fn frontspeed_cmd(r: &Resolved) -> Result<Outcome> {
    let (mu0, eps) = (r.f64("mu0")?, r.f64("eps")?);
    let (kmax, n) = (r.f64("kperp_max")?, r.usize("n")?);
    if n < 2 || !(kmax > 0.0 && kmax < 1.0) {
        return Err(Error::InvalidValue { key: "kperp_max".into(), msg: "need n >= 2 and 0 < kperp_max < 1".into() });
    }
    let mut t = Table::new(&["kperp", "c_exact", "c_leading", "omega"]);
    for i in 0..n {
        let k = kmax * i as f64 / (n - 1) as f64;
        let ex = marginal_exact(k, eps * eps * mu0)?;
        let lead = marginal_leading(k, mu0, eps)?;
        t.numbers(&[k, ex.c, lead.c, ex.omega]);
    }
    let (c, kp) = predicted_speed(&r.direction()?, mu0, eps)?;
    Ok(Outcome { primary: ("frontspeed.csv".into(), t.as_str().into()), extra: vec![], summary: vec![format!("c_pred={} kperp={}", num(c), num(kp))] })
}

fn pattern_cmd(r: &Resolved) -> Result<Outcome> {
    let p = r.model()?;
    let eps = r.f64("eps")?;
    let (lx, ly) = (r.f64("Lx")?, r.f64("Ly")?);
    let grid = Grid::new(r.usize("nx")?, r.usize("ny")?, lx, ly, -0.5 * lx, -0.5 * ly)?;
    let mut field: Field2D = match r.str("mode")? {
        "equilibrium" => {
            let b = r.branch("branch")?;
            let cat = equilibria::catalogue(&p);
            let rec = equilibria::find(&cat, b).ok_or_else(|| Error::Core(shfront_core::Error::InvalidParameter(format!("{b} does not exist for these parameters"))))?;
            sample_equilibrium_pattern(&rec.amplitudes, eps, p.kind, &grid)
        }
        "interface" => {
            let rep = shoot_report(r)?;
            sample_interface(&rep.trace, eps, p.c0, &r.direction()?, r.f64("t")?, &grid)?
        }
        other => return Err(Error::InvalidValue { key: "mode".into(), msg: format!("expected equilibrium or interface, got {other}") }),
    };
    let amp = r.f64("amplify")?;
    field.values.iter_mut().for_each(|v| *v *= amp);
    let (lo, hi) = field.min_max();
    let primary = match r.str("format")? {
        "csv" => ("pattern.csv".to_string(), io::field_csv(&field)),
        "pgm" => ("pattern.pgm".to_string(), io::field_pgm(&field)),
        other => return Err(Error::InvalidValue { key: "format".into(), msg: format!("expected csv or pgm, got {other}") }),
    };
    Ok(Outcome { primary, extra: vec![], summary: vec![format!("min={} max={}", num(lo), num(hi))] })
}

fn pde_cmd(r: &Resolved) -> Result<Outcome> {
    let cfg = pde_config(r)?;
    let snaps = match r.opt("snapshots") {
        Some(_) => list(r, "snapshots")?,
        None => Vec::new(),
    };
    let exp = run_experiment(&cfg, &snaps)?;
    let rep = &exp.report;
    let mut t = Table::new(&["t", "x_f"]);
    for (a, b) in rep.times.iter().zip(&rep.x_f) {
        t.numbers(&[*a, *b]);
    }
    let mut extra = Vec::new();
    for (time, f) in &exp.snapshots {
        let stem = format!("snapshot_t{}", num(*time));
        extra.push((format!("{stem}.csv"), io::field_csv(f)));
        extra.push((format!("{stem}.pgm"), io::field_pgm(f)));
    }
    let mut summary = Table::new(&["fitted", "c_pred", "rel_err"]);
    summary.numbers(&[rep.fitted_speed, rep.c_pred, rep.relative_error]);
    extra.push(("summary.csv".into(), summary.as_str().into()));
    Ok(Outcome {
        primary: ("front.csv".into(), t.as_str().into()),
        extra,
        summary: summary.as_str().lines().map(String::from).collect(),
    })
}

fn with_keys(base: &[&'static str], more: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(more).copied().collect()
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let model_flags = |m: &ModelArgs, more: Vec<(&'static str, Option<String>)>| {
        let mut f = m.flags();
        f.extend(more);
        f
    };
    let f = |v: Option<f64>| v.map(num);
    let u = |v: Option<usize>| v.map(|x| x.to_string());
    let (name, common, allowed, base, flags): (&str, CommonArgs, Vec<&str>, Vec<(&str, &str)>, Vec<(&'static str, Option<String>)>) = match &cli.command {
        Command::Spectrum(a) | Command::Gap(a) => (
            if matches!(cli.command, Command::Gap(_)) { "gap" } else { "spectrum" },
            a.model.common.clone(),
            with_keys(MODEL_KEYS, &["radius", "kmc", "klc"]),
            [MODEL_BASE, &[("radius", "6"), ("kmc", "2"), ("klc", "6")]].concat(),
            model_flags(&a.model, vec![("radius", f(a.radius)), ("kmc", f(a.kmc)), ("klc", f(a.klc))]),
        ),
        Command::Equilibria(a) => ("equilibria", a.common.clone(), with_keys(MODEL_KEYS, &["dk_sq", "c0_list"]), MODEL_BASE.to_vec(), a.flags()),
        Command::Bifurcation(a) => (
            "bifurcation",
            a.model.common.clone(),
            with_keys(MODEL_KEYS, &["mu0_min", "mu0_max", "steps"]),
            [MODEL_BASE, &[("mu0_min", "0.05"), ("mu0_max", "3"), ("steps", "60")]].concat(),
            model_flags(&a.model, vec![("mu0_min", f(a.mu0_min)), ("mu0_max", f(a.mu0_max)), ("steps", u(a.steps))]),
        ),
        Command::Shoot(a) => (
            "shoot",
            a.model.common.clone(),
            with_keys(MODEL_KEYS, &["source", "target", "seeds"]),
            [MODEL_BASE, &[("seeds", "48")]].concat(),
            model_flags(&a.model, vec![("source", a.source.clone()), ("target", a.target.clone()), ("seeds", u(a.seeds))]),
        ),
        Command::Frontspeed(a) => (
            "frontspeed",
            a.model.common.clone(),
            with_keys(MODEL_KEYS, &["kperp_max", "n"]),
            [MODEL_BASE, &[("kperp_max", "0.95"), ("n", "20")]].concat(),
            model_flags(&a.model, vec![("kperp_max", f(a.kperp_max)), ("n", u(a.n))]),
        ),
        Command::Pattern(a) => (
            "pattern",
            a.model.common.clone(),
            with_keys(MODEL_KEYS, &["mode", "branch", "source", "target", "seeds", "nx", "ny", "Lx", "Ly", "t", "amplify", "format"]),
            [
                MODEL_BASE,
                &[
                    ("mode", "equilibrium"),
                    ("branch", "hex_down"),
                    ("source", "hex_down"),
                    ("target", "trivial"),
                    ("seeds", "48"),
                    ("nx", "128"),
                    ("ny", "128"),
                    ("Lx", "25.132741228718345"),
                    ("Ly", "25.132741228718345"),
                    ("t", "0"),
                    ("amplify", "1"),
                    ("format", "csv"),
                ],
            ]
            .concat(),
            model_flags(
                &a.model,
                vec![
                    ("mode", a.mode.clone()),
                    ("branch", a.branch.clone()),
                    ("source", a.source.clone()),
                    ("target", a.target.clone()),
                    ("nx", u(a.nx)),
                    ("ny", u(a.ny)),
                    ("Lx", f(a.lx)),
                    ("Ly", f(a.ly)),
                    ("t", f(a.t)),
                    ("amplify", f(a.amplify)),
                    ("format", a.format.clone()),
                ],
            ),
        ),
        Command::Pde(a) => ("pde", a.common.clone(), PDE_KEYS.to_vec(), Vec::new(), a.flags()),
    };
    let preset_name = common.preset.as_deref().or(if name == "pde" { Some("appendixB-theta0") } else { None });
    let preset = preset_values(name, preset_name)?;
    let resolved = resolve(&allowed, &base, &preset, common.config.as_deref(), &flags)?;
    let outcome = match &cli.command {
        Command::Spectrum(_) => spectrum_cmd(&resolved, false)?,
        Command::Gap(_) => spectrum_cmd(&resolved, true)?,
        Command::Equilibria(_) => equilibria_cmd(&resolved, preset_name == Some("fig44"))?,
        Command::Bifurcation(_) => bifurcation_cmd(&resolved)?,
        Command::Shoot(_) => shoot_cmd(&resolved)?,
        Command::Frontspeed(_) => frontspeed_cmd(&resolved)?,
        Command::Pattern(_) => pattern_cmd(&resolved)?,
        Command::Pde(_) => pde_cmd(&resolved)?,
    };
    let stdio = |e: std::io::Error| Error::io("<stdout>", e);
    match &common.out {
        Some(dir) => {
            let mut outputs = Vec::new();
            for (file, text) in std::iter::once(&outcome.primary).chain(&outcome.extra) {
                let path = dir.join(file);
                io::write_file(&path, text)?;
                outputs.push(path);
            }
            let mut parameters = resolved.values.clone();
            if let Some(p) = preset_name {
                parameters.insert("preset".into(), p.into());
            }
            RunManifest { subcommand: name.into(), parameters, outputs, version: env!("CARGO_PKG_VERSION").into(), wall_time: start.elapsed().as_secs_f64() }
                .write(dir)?;
        }
        None => out.write_all(outcome.primary.1.as_bytes()).map_err(stdio)?,
    }
    for line in &outcome.summary {
        writeln!(err, "{line}").map_err(stdio)?;
    }
    Ok(())
}

/// Runs the command line; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
