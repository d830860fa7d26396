//! Pseudospectral solver for the quadratic-cubic Swift-Hohenberg equation
//!
//! ```text
//! u_t = -(1 + Laplacian)^2 u + mu u - beta |grad u|^2 - u^3,   mu = eps^2 mu0, beta = eps beta2
//! ```
//!
//! and the front-speed measurement built on it.
//!
//! Coordinates follow the front: `x` runs along `d` and `y` along `d_perp`,
//! and the hexagonal lattice is rotated into that frame. The `x` direction
//! carries homogeneous Neumann conditions through a cosine basis (the even
//! reflection of the field); `y` is periodic.
//! Time stepping is ETD-RK2 with the linear symbol treated exactly and a
//! 2/3-rule dealiased nonlinearity.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustdct::{DctPlanner, TransformType2And3};
use shfront_core::amplitude::coefficients_qcsh;
use shfront_core::frontspeed::predicted_speed;
use shfront_core::lattice::{make_direction, AngleSpec, Direction, LatticeKind, LatticeVector};
use shfront_core::pattern::{Field2D, Grid};

use crate::error::{Error, Result};

/// How the strip `L^2` norm is scaled before comparing with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripNorm {
    /// Divided by the square root of the strip area (an RMS value).
    Normalized,
    Raw,
}

impl std::str::FromStr for StripNorm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normalized" => Ok(StripNorm::Normalized),
            "raw" => Ok(StripNorm::Raw),
            _ => Err(format!("expected normalized or raw, got {s}")),
        }
    }
}

impl std::fmt::Display for StripNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StripNorm::Normalized => "normalized",
            StripNorm::Raw => "raw",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeConfig {
    pub eps: f64,
    pub mu0: f64,
    pub beta2: f64,
    /// Cubic coefficients for the initial amplitude; computed from the
    /// equation when `None`.
    pub k0: Option<f64>,
    pub k2: Option<f64>,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    /// Left edge of the domain along `d`.
    pub x0: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Front direction on the hexagonal lattice.
    pub angle: AngleSpec,
    /// Width of the initial `tanh` envelope.
    pub ell: f64,
    /// Position of the initial front along `d`.
    pub phi: f64,
    pub strip_width: f64,
    pub threshold: f64,
    pub fit_window: (f64, f64),
    pub output_interval: f64,
    pub strip_norm: StripNorm,
    /// Tracking stops once the front passes `x0 + stop_fraction * lx`.
    pub stop_fraction: f64,
}

impl PdeConfig {
    /// Front along `x` into the trivial state, hexagons behind it.
    pub fn appendix_b_theta0() -> Self {
        PdeConfig {
            eps: 0.3,
            mu0: 1.0,
            beta2: 1.0,
            k0: Some(-3.0),
            k2: Some(-6.0),
            lx: 40.0 * PI,
            ly: 4.0 * 3f64.sqrt() * PI,
            nx: 1024,
            ny: 96,
            x0: -4.0 * PI,
            dt: 0.02,
            t_end: 100.0,
            angle: AngleSpec::AxisX,
            ell: 3.0,
            phi: 0.0,
            strip_width: 2.0 * PI,
            threshold: 0.05 / 2f64.sqrt(),
            fit_window: (20.0, 80.0),
            output_interval: 0.5,
            strip_norm: StripNorm::Normalized,
            stop_fraction: 0.8,
        }
    }

    /// Front at angle pi/6 to the lattice, in the rotated frame.
    pub fn appendix_b_pi6() -> Self {
        PdeConfig {
            ly: 8.0 * PI,
            ny: 128,
            angle: AngleSpec::Rational { p: 1, q: 1 },
            phi: 2.0 * PI,
            fit_window: (30.0, 80.0),
            ..Self::appendix_b_theta0()
        }
    }

    pub fn direction(&self) -> Result<Direction> {
        Ok(make_direction(LatticeKind::Hex, self.angle)?)
    }

    /// Critical wave vectors `(d . k_j, d_perp . k_j)` in the front frame.
    pub fn frame_modes(&self) -> Result<[[f64; 2]; 3]> {
        let dir = self.direction()?;
        Ok(core::array::from_fn(|j| {
            let k = LatticeVector::mode(LatticeKind::Hex, j);
            [k.dot(dir.d), k.dot(dir.d_perp)]
        }))
    }

    pub fn mu(&self) -> f64 {
        self.eps * self.eps * self.mu0
    }

    pub fn beta(&self) -> f64 {
        self.eps * self.beta2
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.nx, self.ny, self.lx, self.ly, self.x0, -0.5 * self.ly)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::InvalidValue { key: key.into(), msg: msg.into() });
        if !(self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.t_end > 0.0) {
            return bad("T", "must be positive");
        }
        if self.nx < 8 || self.ny < 8 {
            return bad("nx", "grid needs at least 8 points per direction");
        }
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return bad("Lx", "extents must be positive");
        }
        if !(self.eps > 0.0) {
            return bad("eps", "must be positive");
        }
        if !(self.ell > 0.0) {
            return bad("ell", "must be positive");
        }
        if !(self.output_interval >= self.dt) {
            return bad("output_interval", "must be at least dt");
        }
        if !(self.strip_width > 0.0 && self.strip_width < self.lx) {
            return bad("strip_width", "must lie in (0, Lx)");
        }
        for m in self.frame_modes()? {
            let periods = self.ly * m[1] / (2.0 * PI);
            if (periods - periods.round()).abs() > 1e-8 * (1.0 + periods.abs()) {
                return bad("Ly", "not a multiple of the transverse period of the lattice");
            }
        }
        Ok(())
    }

    /// `(K0, K2)` used for the initial amplitude.
    pub fn cubic_coefficients(&self) -> Result<(f64, f64)> {
        match (self.k0, self.k2) {
            (Some(a), Some(b)) => Ok((a, b)),
            (k0, k2) => {
                let c = coefficients_qcsh(self.beta(), LatticeKind::Hex)?;
                Ok((k0.unwrap_or(c.k0), k2.unwrap_or(c.k_cross)))
            }
        }
    }
}

/// Amplitude of the initial hexagons, the larger root of
/// `mu0 + beta2 A + (K0 + 2 K2) A^2 = 0`.
pub fn hexagon_amplitude(mu0: f64, beta2: f64, k0: f64, k2: f64) -> Result<f64> {
    let k = k0 + 2.0 * k2;
    let disc = beta2 * beta2 - 4.0 * mu0 * k;
    if !(k < 0.0) || !(disc >= 0.0) {
        return Err(Error::InvalidValue { key: "K0".into(), msg: "K0 + 2 K2 must be negative with a real root".into() });
    }
    Ok((-beta2 - disc.sqrt()) / (2.0 * k))
}

/// Hexagons behind a `tanh` envelope centred at `phi`:
/// `u0 = eps A_hex sum_j cos(k_j . x) (1 - tanh((x . d - phi) / ell)) / 2`.
pub fn init_front(cfg: &PdeConfig) -> Result<Field2D> {
    cfg.validate()?;
    let (k0, k2) = cfg.cubic_coefficients()?;
    let a = hexagon_amplitude(cfg.mu0, cfg.beta2, k0, k2)?;
    let modes = cfg.frame_modes()?;
    Ok(Field2D::from_fn(cfg.grid()?, |p| {
        let s: f64 = modes.iter().map(|k| (k[0] * p[0] + k[1] * p[1]).cos()).sum();
        cfg.eps * a * s * 0.5 * (1.0 - ((p[0] - cfg.phi) / cfg.ell).tanh())
    }))
}

/// `(E, (E - 1) / L, (E - 1 - h L) / (h L^2))` with `E = exp(h L)`.
fn etd_coefficients(l: f64, h: f64) -> (f64, f64, f64) {
    let z = h * l;
    let e = z.exp();
    if z.abs() < 1e-3 {
        let p1 = h * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
        let p2 = h * (0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0);
        (e, p1, p2)
    } else {
        let em1 = z.exp_m1();
        (e, em1 / l, (em1 - z) / (h * l * l))
    }
}

/// ETD-RK2 stepper.
///
/// Physical buffers are row-major with `x` fastest (`j * nx + i`).
/// Spectral coefficients are indexed `i * nyh + j` with cosine index `i`
/// in `x` and half-spectrum index `j` in `y`.
pub struct Solver {
    nx: usize,
    ny: usize,
    nyh: usize,
    grid: Grid,
    dct: Arc<dyn TransformType2And3<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    mask: Vec<bool>,
    e: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    scale: f64,
    beta: f64,
    nonlinear: bool,
    uh: Vec<Complex64>,
    a: Vec<Complex64>,
    n0: Vec<Complex64>,
    n1: Vec<Complex64>,
    u: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    row: Vec<Complex64>,
    scratch_c: Vec<Complex64>,
    scratch_r: Vec<f64>,
    steps: usize,
    dt: f64,
}

#[derive(Clone, Copy)]
enum Basis {
    Cos,
    Sin,
}

impl Solver {
    /// Sets up the stepper for `mu`, `beta` and the grid of `u0`.
    pub fn new(u0: &Field2D, mu: f64, beta: f64, dt: f64) -> Result<Self> {
        let grid = u0.grid;
        let (nx, ny) = (grid.nx, grid.ny);
        let nyh = ny / 2 + 1;
        if !(dt > 0.0) {
            return Err(Error::InvalidValue { key: "dt".into(), msg: "must be positive".into() });
        }
        let dct = DctPlanner::new().plan_dct2(nx);
        let mut planner = RealFftPlanner::new();
        let r2c = planner.plan_fft_forward(ny);
        let c2r = planner.plan_fft_inverse(ny);
        let scratch_c = vec![Complex64::new(0.0, 0.0); r2c.get_scratch_len().max(c2r.get_scratch_len())];
        let scratch_r = vec![0.0; dct.get_scratch_len()];
        let kx: Vec<f64> = (0..nx).map(|m| PI * m as f64 / grid.lx).collect();
        let ky: Vec<f64> = (0..nyh).map(|j| 2.0 * PI * j as f64 / grid.ly).collect();
        let n = nx * nyh;
        let mut mask = vec![false; n];
        let (mut e, mut phi1, mut phi2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..nx {
            for j in 0..nyh {
                let idx = i * nyh + j;
                mask[idx] = 3 * i < 2 * nx && 3 * j < ny;
                let k2 = kx[i] * kx[i] + ky[j] * ky[j];
                let l = -(1.0 - k2) * (1.0 - k2) + mu;
                (e[idx], phi1[idx], phi2[idx]) = etd_coefficients(l, dt);
            }
        }
        let zc = vec![Complex64::new(0.0, 0.0); n];
        let zr = vec![0.0; nx * ny];
        let mut s = Solver {
            nx,
            ny,
            nyh,
            grid,
            dct,
            r2c,
            c2r,
            kx,
            ky,
            mask,
            e,
            phi1,
            phi2,
            scale: 2.0 / (nx * ny) as f64,
            beta,
            nonlinear: true,
            uh: zc.clone(),
            a: zc.clone(),
            n0: zc.clone(),
            n1: zc,
            u: zr.clone(),
            ux: zr.clone(),
            uy: zr.clone(),
            t1: zr.clone(),
            t2: zr,
            row: vec![Complex64::new(0.0, 0.0); nyh],
            scratch_c,
            scratch_r,
            steps: 0,
            dt,
        };
        s.set_field(u0)?;
        Ok(s)
    }

    /// Replaces the state by `u`, dealiased.
    pub fn set_field(&mut self, u: &Field2D) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::Usage("field grid does not match the solver".into()));
        }
        let mut p = std::mem::take(&mut self.u);
        let mut out = std::mem::take(&mut self.uh);
        p.copy_from_slice(&u.values);
        self.forward(&mut p, &mut out);
        for (v, keep) in out.iter_mut().zip(&self.mask) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.u = p;
        self.uh = out;
        self.steps = 0;
        Ok(())
    }

    /// Drops the nonlinear terms (for checking the linear propagator).
    pub fn set_nonlinear(&mut self, on: bool) {
        self.nonlinear = on;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Spectral coefficients, unnormalised.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.uh
    }

    /// Wavenumbers `(kx, ky)` of spectral index `idx`.
    pub fn wavenumber(&self, idx: usize) -> (f64, f64) {
        (self.kx[idx / self.nyh], self.ky[idx % self.nyh])
    }

    /// Fraction of spectral energy outside the 2/3 band.
    pub fn aliased_energy_fraction(&self) -> f64 {
        let mut hi = 0.0;
        let mut total = 0.0;
        for (v, keep) in self.uh.iter().zip(&self.mask) {
            let p = v.norm_sqr();
            total += p;
            if !keep {
                hi += p;
            }
        }
        if total > 0.0 {
            hi / total
        } else {
            0.0
        }
    }

    /// Unnormalised DCT-II in `x`, then a real FFT in `y`.
    fn forward(&mut self, p: &mut [f64], out: &mut [Complex64]) {
        let (nx, ny, nyh) = (self.nx, self.ny, self.nyh);
        for row in p.chunks_exact_mut(nx) {
            self.dct.process_dct2_with_scratch(row, &mut self.scratch_r);
        }
        transpose(p, &mut self.t1, ny, nx);
        for i in 0..nx {
            // Lengths are fixed at construction, so this cannot fail.
            let _ = self.r2c.process_with_scratch(&mut self.t1[i * ny..(i + 1) * ny], &mut out[i * nyh..(i + 1) * nyh], &mut self.scratch_c);
        }
    }

    /// Inverse real FFT in `y` of `s` (times `i ky` if `dy`), written
    /// transposed into `out`.
    fn inverse_y(&mut self, s: &[Complex64], dy: bool, out: &mut [f64]) {
        let (ny, nyh) = (self.ny, self.nyh);
        for i in 0..self.nx {
            for j in 0..nyh {
                let v = s[i * nyh + j];
                self.row[j] = if dy { v * Complex64::new(0.0, self.ky[j]) } else { v };
            }
            self.row[0].im = 0.0;
            if ny % 2 == 0 {
                self.row[nyh - 1].im = 0.0;
            }
            let _ = self.c2r.process_with_scratch(&mut self.row, &mut out[i * ny..(i + 1) * ny], &mut self.scratch_c);
        }
    }

    /// Cosine (or, for coefficients already multiplied by `-kx`, sine)
    /// synthesis in `x` of transposed data `t`, scaled into `out`.
    fn inverse_x(&mut self, t: &[f64], basis: Basis, out: &mut [f64]) {
        let nx = self.nx;
        transpose(t, out, nx, self.ny);
        for row in out.chunks_exact_mut(nx) {
            match basis {
                Basis::Cos => self.dct.process_dct3_with_scratch(row, &mut self.scratch_r),
                Basis::Sin => {
                    row.rotate_left(1);
                    row[nx - 1] = 0.0;
                    self.dct.process_dst3_with_scratch(row, &mut self.scratch_r);
                }
            }
            row.iter_mut().for_each(|v| *v *= self.scale);
        }
    }

    /// Fills `u`, `u_x`, `u_y` from spectral data `s`.
    fn gradient(&mut self, s: &[Complex64]) {
        let (ny, nx) = (self.ny, self.nx);
        let mut t1 = std::mem::take(&mut self.t1);
        let mut t2 = std::mem::take(&mut self.t2);
        let mut u = std::mem::take(&mut self.u);
        let mut ux = std::mem::take(&mut self.ux);
        let mut uy = std::mem::take(&mut self.uy);
        self.inverse_y(s, true, &mut t2);
        self.inverse_x(&t2, Basis::Cos, &mut uy);
        self.inverse_y(s, false, &mut t1);
        self.inverse_x(&t1, Basis::Cos, &mut u);
        for i in 0..nx {
            let k = -self.kx[i];
            t1[i * ny..(i + 1) * ny].iter_mut().for_each(|v| *v *= k);
        }
        // inverse_x transposes into its output; t2 is free again.
        self.inverse_x(&t1, Basis::Sin, &mut ux);
        self.t1 = t1;
        self.t2 = t2;
        self.u = u;
        self.ux = ux;
        self.uy = uy;
    }

    /// Dealiased transform of `-beta |grad u|^2 - u^3`; false if it is not
    /// finite.
    fn nonlinear_term(&mut self, s: &[Complex64], out: &mut [Complex64]) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        if !self.nonlinear {
            out.iter_mut().for_each(|v| *v = zero);
            return true;
        }
        self.gradient(s);
        let mut finite = true;
        let mut p = std::mem::take(&mut self.u);
        for ((v, ux), uy) in p.iter_mut().zip(&self.ux).zip(&self.uy) {
            let u = *v;
            *v = -self.beta * (ux * ux + uy * uy) - u * u * u;
            finite &= v.is_finite();
        }
        self.forward(&mut p, out);
        self.u = p;
        for (v, keep) in out.iter_mut().zip(&self.mask) {
            if !keep {
                *v = zero;
            }
        }
        finite
    }

    /// One ETD-RK2 step.
    pub fn step(&mut self) -> Result<()> {
        let mut uh = std::mem::take(&mut self.uh);
        let mut n0 = std::mem::take(&mut self.n0);
        let mut n1 = std::mem::take(&mut self.n1);
        let mut a = std::mem::take(&mut self.a);
        let mut finite = self.nonlinear_term(&uh, &mut n0);
        for k in 0..uh.len() {
            a[k] = uh[k] * self.e[k] + n0[k] * self.phi1[k];
        }
        finite &= self.nonlinear_term(&a, &mut n1);
        for k in 0..uh.len() {
            uh[k] = a[k] + (n1[k] - n0[k]) * self.phi2[k];
            finite &= uh[k].re.is_finite() && uh[k].im.is_finite();
        }
        self.uh = uh;
        self.n0 = n0;
        self.n1 = n1;
        self.a = a;
        self.steps += 1;
        if !finite {
            return Err(Error::BlowUp { step: self.steps });
        }
        Ok(())
    }

    /// Physical field.
    pub fn field(&mut self) -> Field2D {
        let s = std::mem::take(&mut self.uh);
        let mut t1 = std::mem::take(&mut self.t1);
        let mut values = vec![0.0; self.nx * self.ny];
        self.inverse_y(&s, false, &mut t1);
        self.inverse_x(&t1, Basis::Cos, &mut values);
        self.uh = s;
        self.t1 = t1;
        Field2D { grid: self.grid, values }
    }

    /// `(u, u_x, u_y)` of the current state.
    pub fn gradient_fields(&mut self) -> [Vec<f64>; 3] {
        let s = std::mem::take(&mut self.uh);
        self.gradient(&s);
        self.uh = s;
        [self.u.clone(), self.ux.clone(), self.uy.clone()]
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Squared field integrated over `y`, per `x` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub column_sq: Vec<f64>,
}

impl Frame {
    pub fn from_field(t: f64, u: &Field2D) -> Self {
        let (nx, ny, dy) = (u.grid.nx, u.grid.ny, u.grid.dy());
        let mut column_sq = vec![0.0; nx];
        for j in 0..ny {
            for (c, v) in column_sq.iter_mut().zip(&u.values[j * nx..(j + 1) * nx]) {
                *c += v * v;
            }
        }
        column_sq.iter_mut().for_each(|c| *c *= dy);
        Frame { t, column_sq }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSpeedReport {
    pub times: Vec<f64>,
    pub x_f: Vec<f64>,
    pub fitted_speed: f64,
    pub fit_window: (f64, f64),
    pub c_pred: f64,
    pub relative_error: f64,
}

/// Left edge of the rightmost strip whose norm exceeds the threshold.
pub fn front_position(frame: &Frame, cfg: &PdeConfig) -> Option<f64> {
    let nx = frame.column_sq.len();
    let dx = cfg.lx / nx as f64;
    let w = ((cfg.strip_width / dx).round() as usize).clamp(1, nx);
    let scale = match cfg.strip_norm {
        StripNorm::Normalized => 1.0 / (w as f64 * dx * cfg.ly),
        StripNorm::Raw => 1.0,
    };
    let mut prefix = Vec::with_capacity(nx + 1);
    prefix.push(0.0);
    for c in &frame.column_sq {
        prefix.push(prefix.last().unwrap() + c);
    }
    (0..=nx - w)
        .rev()
        .find(|&s| ((prefix[s + w] - prefix[s]) * dx * scale).sqrt() > cfg.threshold)
        .map(|s| cfg.x0 + s as f64 * dx)
}

/// Fronts per frame, then a least-squares speed over the fit window.
pub fn track_front(frames: &[Frame], cfg: &PdeConfig) -> Result<FrontSpeedReport> {
    let stop = cfg.x0 + cfg.stop_fraction * cfg.lx;
    let mut times = Vec::new();
    let mut x_f = Vec::new();
    for f in frames {
        let Some(x) = front_position(f, cfg) else { continue };
        if x > stop {
            break;
        }
        times.push(f.t);
        x_f.push(x);
    }
    if times.is_empty() {
        return Err(Error::NoFront);
    }
    let (t0, t1) = cfg.fit_window;
    let (ft, fx): (Vec<f64>, Vec<f64>) = times.iter().zip(&x_f).filter(|(t, _)| **t >= t0 && **t <= t1).unzip();
    if ft.len() < 2 {
        return Err(Error::Usage(format!("fewer than two tracked frames in the fit window [{t0}, {t1}]")));
    }
    let fitted_speed = least_squares_slope(&ft, &fx);
    let (c_pred, _) = predicted_speed(&cfg.direction()?, cfg.mu0, cfg.eps)?;
    Ok(FrontSpeedReport {
        times,
        x_f,
        fitted_speed,
        fit_window: cfg.fit_window,
        c_pred,
        relative_error: (fitted_speed - c_pred).abs() / c_pred,
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: FrontSpeedReport,
    /// Fields at the requested snapshot times (nearest output step).
    pub snapshots: Vec<(f64, Field2D)>,
}

/// Initial front, time stepping to `t_end` with tracking frames every
/// `output_interval`, and the speed fit.
pub fn run_experiment(cfg: &PdeConfig, snapshot_times: &[f64]) -> Result<Experiment> {
    let u0 = init_front(cfg)?;
    let mut solver = Solver::new(&u0, cfg.mu(), cfg.beta(), cfg.dt)?;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let every = ((cfg.output_interval / cfg.dt).round() as usize).max(1);
    let snap_steps: Vec<usize> = snapshot_times.iter().map(|t| (t / cfg.dt).round() as usize).collect();
    let mut frames = vec![Frame::from_field(0.0, &u0)];
    let mut snapshots = Vec::new();
    if snap_steps.contains(&0) {
        snapshots.push((0.0, u0));
    }
    for n in 1..=n_steps {
        solver.step()?;
        let snap = snap_steps.contains(&n);
        if n % every == 0 || snap {
            let u = solver.field();
            if n % every == 0 {
                frames.push(Frame::from_field(solver.time(), &u));
            }
            if snap {
                snapshots.push((solver.time(), u));
            }
        }
    }
    Ok(Experiment { report: track_front(&frames, cfg)?, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(nx: usize, ny: usize) -> Grid {
        Grid::new(nx, ny, 8.0 * PI, 4.0 * PI / 3f64.sqrt(), 0.0, 0.0).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let u0 = Field2D::zeros(small_grid(32, 16));
        let mut s = Solver::new(&u0, 0.09, 0.3, 0.02).unwrap();
        for _ in 0..10 {
            s.step().unwrap();
        }
        assert_eq!(s.field().max_abs(), 0.0);
    }

    #[test]
    fn linear_modes_evolve_by_their_exact_factor() {
        let g = small_grid(64, 32);
        let (kx, ky) = (0.75, 2.0 * PI / g.ly);
        let u0 = Field2D::from_fn(g, |p| (kx * p[0]).cos() * (ky * p[1]).cos());
        let (mu, dt) = (0.09, 0.05);
        let mut s = Solver::new(&u0, mu, 0.3, dt).unwrap();
        s.set_nonlinear(false);
        let before = s.spectrum().to_vec();
        s.step().unwrap();
        for (idx, (b, a)) in before.iter().zip(s.spectrum()).enumerate() {
            let (qx, qy) = s.wavenumber(idx);
            let q2 = qx * qx + qy * qy;
            let factor = ((-(1.0 - q2) * (1.0 - q2) + mu) * dt).exp();
            assert!((a - b * factor).norm() <= 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn constant_state_matches_the_scalar_ode() {
        // u' = -u + mu u - u^3 for constant u; reference by fine RK4.
        let g = small_grid(16, 8);
        let (mu, a0) = (0.09, 0.4);
        let f = |u: f64| -u + mu * u - u * u * u;
        let reference = |h: f64| {
            let n = 2000;
            let k = h / n as f64;
            let mut u = a0;
            for _ in 0..n {
                let k1 = f(u);
                let k2 = f(u + 0.5 * k * k1);
                let k3 = f(u + 0.5 * k * k2);
                let k4 = f(u + k * k3);
                u += k / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            u
        };
        let mut errs = Vec::new();
        for dt in [0.1, 0.05] {
            let mut s = Solver::new(&Field2D::from_fn(g, |_| a0), mu, 0.7, dt).unwrap();
            s.step().unwrap();
            let u = s.field();
            assert!(u.values.iter().all(|v| (v - u.values[0]).abs() < 1e-14));
            errs.push((u.values[0] - reference(dt)).abs());
        }
        assert!(errs[0] < 1e-4);
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 2.7, "local order {order}");
    }

    #[test]
    fn dealiasing_keeps_the_upper_third_empty() {
        let cfg = PdeConfig { nx: 128, ny: 32, lx: 16.0 * PI, ..PdeConfig::appendix_b_theta0() };
        let u0 = init_front(&cfg).unwrap();
        let mut s = Solver::new(&u0, cfg.mu(), cfg.beta(), cfg.dt).unwrap();
        for _ in 0..20 {
            s.step().unwrap();
            assert!(s.aliased_energy_fraction() <= 1e-8);
        }
    }

    #[test]
    fn spectral_derivatives_are_exact() {
        let g = Grid::new(64, 32, 10.0, 7.0, -3.0, 1.0).unwrap();
        let (kx, ky) = (5.0 * PI / g.lx, 2.0 * 2.0 * PI / g.ly);
        let f = |p: [f64; 2]| {
            let (x, y) = (p[0] - g.x0, p[1] - g.y0);
            (
                (kx * x).cos() * (ky * y).sin() + 0.3,
                -kx * (kx * x).sin() * (ky * y).sin(),
                ky * (kx * x).cos() * (ky * y).cos(),
            )
        };
        let u0 = Field2D::from_fn(g, |p| f(p).0);
        let mut s = Solver::new(&u0, 0.0, 0.0, 0.1).unwrap();
        let [u, ux, uy] = s.gradient_fields();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (a, b, c) = f(g.point(i, j));
                let k = j * g.nx + i;
                assert!((u[k] - a).abs() < 1e-12 && (ux[k] - b).abs() < 1e-12 && (uy[k] - c).abs() < 1e-12);
            }
        }
        assert!((s.field().values[7] - u0.values[7]).abs() < 1e-13);
    }

    #[test]
    fn initial_amplitude_and_envelope() {
        let a = hexagon_amplitude(1.0, 1.0, -3.0, -6.0).unwrap();
        assert!((a - (1.0 + 61f64.sqrt()) / 30.0).abs() < 1e-15);
        // Residual of the hexagon equation.
        assert!((1.0 + a + (-15.0) * a * a).abs() < 1e-14);
        let cfg = PdeConfig { nx: 256, ny: 32, ..PdeConfig::appendix_b_theta0() };
        let u = init_front(&cfg).unwrap();
        let bound = cfg.eps * a * 3.0 * 0.5 * (1.0 - 5f64.tanh());
        for j in 0..cfg.ny {
            for i in 0..cfg.nx {
                if u.grid.point(i, j)[0] > cfg.phi + 5.0 * cfg.ell {
                    assert!(u.get(i, j).abs() <= bound);
                }
            }
        }
        assert!(hexagon_amplitude(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn transverse_period_is_enforced() {
        assert!(PdeConfig::appendix_b_theta0().validate().is_ok());
        assert!(PdeConfig::appendix_b_pi6().validate().is_ok());
        let bad = PdeConfig { ly: 10.0, ..PdeConfig::appendix_b_theta0() };
        assert!(matches!(bad.validate(), Err(Error::InvalidValue { .. })));
    }

    #[test]
    fn tracking_a_synthetic_front() {
        let cfg = PdeConfig { nx: 512, ny: 16, ..PdeConfig::appendix_b_theta0() };
        let grid = cfg.grid().unwrap();
        let frames: Vec<Frame> = (0..=200)
            .map(|n| {
                let t = 0.5 * n as f64;
                let front = 1.1 * t;
                Frame::from_field(t, &Field2D::from_fn(grid, |p| if p[0] < front { 0.2 * p[1].cos() } else { 0.0 }))
            })
            .collect();
        let r = track_front(&frames, &cfg).unwrap();
        assert!((r.fitted_speed - 1.1).abs() < 0.01, "{}", r.fitted_speed);
        assert!((r.c_pred - 1.2).abs() < 1e-12);
        assert!(r.x_f.iter().all(|x| *x <= cfg.x0 + 0.8 * cfg.lx));
        let still = vec![Frame::from_field(0.0, &Field2D::from_fn(grid, |_| 1e-3))];
        assert!(matches!(track_front(&still, &cfg), Err(Error::NoFront)));
    }
}
