//! Leading-order pattern fields `u(x) = 2 eps sum_j A_j cos(k_j . x)`.

use alloc::vec::Vec;

use crate::connect::OrbitTrace;
use crate::lattice::{Direction, LatticeKind, LatticeVector};
use crate::math::{abs, cos};
use crate::{Error, Result};

/// A cell-centred rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) || !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidParameter("grid needs positive sizes and extents".into()));
        }
        Ok(Grid { nx, ny, lx, ly, x0, y0 })
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Centre of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + (i as f64 + 0.5) * self.dx(), self.y0 + (j as f64 + 0.5) * self.dy()]
    }
}

/// Sampled scalar field; `values[j * nx + i]` belongs to cell `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid) -> Self {
        Field2D { grid, values: alloc::vec![0.0; grid.nx * grid.ny] }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn<F: FnMut([f64; 2]) -> f64>(grid: Grid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.point(i, j)));
            }
        }
        Field2D { grid, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(abs(*v)))
    }
}

/// `2 eps sum_j A_j cos(k_j . x)` at one point.
pub fn pattern_value(a: &[f64; 3], eps: f64, kind: LatticeKind, x: [f64; 2]) -> f64 {
    let mut u = 0.0;
    for (j, aj) in a.iter().enumerate().take(kind.n_modes()) {
        u += aj * cos(LatticeVector::mode(kind, j).dot(x));
    }
    2.0 * eps * u
}

/// Leading-order field of an equilibrium.
pub fn sample_equilibrium_pattern(a: &[f64; 3], eps: f64, kind: LatticeKind, grid: &Grid) -> Field2D {
    Field2D::from_fn(*grid, |x| pattern_value(a, eps, kind, x))
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("interpolation nodes must be strictly increasing".into()));
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut m = alloc::vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / libm::sqrt(s);
                m[i] = t * a * delta[i];
                m[i + 1] = t * b * delta[i];
            }
        }
        Ok(MonotoneCubic { x, y, m })
    }

    /// Value at `t`, clamped to the end values outside the node range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|v| *v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }
}

/// Amplitude profiles of an orbit: monotone cubic in `xi` inside the trace,
/// the endpoint equilibria outside.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceProfile {
    kind: LatticeKind,
    xi_min: f64,
    xi_max: f64,
    left: [f64; 3],
    right: [f64; 3],
    curves: Vec<MonotoneCubic>,
}

impl InterfaceProfile {
    pub fn new(orbit: &OrbitTrace) -> Result<Self> {
        let (src, tgt) = match (orbit.source, orbit.target) {
            (Some(s), Some(t)) => (s, t),
            _ => return Err(Error::InvalidParameter("orbit needs source and target equilibria".into())),
        };
        let mut xs = Vec::with_capacity(orbit.len());
        let mut idx = Vec::with_capacity(orbit.len());
        for (i, x) in orbit.xi.iter().enumerate() {
            if xs.last().map_or(true, |l| x > l) {
                xs.push(*x);
                idx.push(i);
            }
        }
        if xs.len() < 2 {
            return Err(Error::InvalidParameter("orbit has fewer than two nodes".into()));
        }
        let kind = orbit.variant.kind();
        let curves = (0..kind.n_modes())
            .map(|j| {
                let ys = idx.iter().map(|&i| orbit.states[i].amplitudes()[j]).collect();
                MonotoneCubic::new(xs.clone(), ys)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InterfaceProfile {
            kind,
            xi_min: xs[0],
            xi_max: xs[xs.len() - 1],
            left: src.amplitudes,
            right: tgt.amplitudes,
            curves,
        })
    }

    pub fn amplitudes(&self, xi: f64) -> [f64; 3] {
        if xi < self.xi_min {
            return self.left;
        }
        if xi > self.xi_max {
            return self.right;
        }
        let mut a = [0.0; 3];
        for (j, c) in self.curves.iter().enumerate() {
            a[j] = c.eval(xi);
        }
        a
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }
}

/// Leading-order interface `2 eps sum_j A_j(eps (d.x - eps c0 t)) cos(k_j . x)`.
pub fn sample_interface(orbit: &OrbitTrace, eps: f64, c0: f64, dir: &Direction, t: f64, grid: &Grid) -> Result<Field2D> {
    if dir.kind != orbit.variant.kind() {
        return Err(Error::KindMismatch);
    }
    let prof = InterfaceProfile::new(orbit)?;
    let kind = dir.kind;
    Ok(Field2D::from_fn(*grid, |x| {
        let xi = eps * (dir.d[0] * x[0] + dir.d[1] * x[1] - eps * c0 * t);
        pattern_value(&prof.amplitudes(xi), eps, kind, x)
    }))
}
