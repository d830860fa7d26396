//! Hexagonal and square Fourier lattices and exactly representable front
//! directions.
//!
//! Hexagonal generators are `k1 = (1, 0)`, `k2 = (-1/2, sqrt(3)/2)` and
//! `k3 = -k1 - k2`; square generators are `k1 = (1, 0)`, `k2 = (0, 1)`.
//! A direction is `d = (cos t, sin t)` with `d_perp = (-sin t, cos t)`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{abs, atan2, gcd, sqrt};
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Hex,
    Square,
}

impl LatticeKind {
    /// Number of critical modes carried by the amplitude equations.
    pub fn n_modes(self) -> usize {
        match self {
            LatticeKind::Hex => 3,
            LatticeKind::Square => 2,
        }
    }

    /// Exact squared norm of `n1 k1 + n2 k2`.
    pub fn norm_sq_int(self, n1: i32, n2: i32) -> i64 {
        let (a, b) = (n1 as i64, n2 as i64);
        match self {
            LatticeKind::Hex => a * a - a * b + b * b,
            LatticeKind::Square => a * a + b * b,
        }
    }

    /// Lattice coordinates of the critical mode `k_j`, `j` zero-based.
    pub fn mode_coords(self, j: usize) -> (i32, i32) {
        match (self, j) {
            (_, 0) => (1, 0),
            (_, 1) => (0, 1),
            (LatticeKind::Hex, 2) => (-1, -1),
            _ => panic!("mode index {j} out of range for {self:?}"),
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatticeKind::Hex => "hex",
            LatticeKind::Square => "square",
        })
    }
}

/// A lattice point `n1 k1 + n2 k2` together with its Cartesian value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeVector {
    pub n1: i32,
    pub n2: i32,
    pub kx: f64,
    pub ky: f64,
    pub kind: LatticeKind,
}

impl LatticeVector {
    pub fn new(kind: LatticeKind, n1: i32, n2: i32) -> Self {
        let (kx, ky) = match kind {
            LatticeKind::Hex => (n1 as f64 - 0.5 * n2 as f64, 0.5 * SQRT3 * n2 as f64),
            LatticeKind::Square => (n1 as f64, n2 as f64),
        };
        LatticeVector { n1, n2, kx, ky, kind }
    }

    /// Critical mode `k_j` (zero-based `j`).
    pub fn mode(kind: LatticeKind, j: usize) -> Self {
        let (n1, n2) = kind.mode_coords(j);
        Self::new(kind, n1, n2)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.kind, -self.n1, -self.n2)
    }

    pub fn norm_sq(&self) -> f64 {
        self.kind.norm_sq_int(self.n1, self.n2) as f64
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.norm_sq())
    }

    /// True for the critical modes on the unit circle.
    pub fn is_critical(&self) -> bool {
        self.kind.norm_sq_int(self.n1, self.n2) == 1
    }

    pub fn dot(&self, v: [f64; 2]) -> f64 {
        self.kx * v[0] + self.ky * v[1]
    }
}

/// Exact angle token: the x axis, or `cot t = sqrt(3) p/q` (hex) and
/// `cot t = p/q` (square).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngleSpec {
    AxisX,
    Rational { p: u32, q: u32 },
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleSpec::AxisX => f.write_str("0"),
            AngleSpec::Rational { p, q } => write!(f, "{p}/{q}"),
        }
    }
}

impl AngleSpec {
    /// Parses `0`/`axis`, `p/q`, or the alias `pi/6` (hex `1/1`).
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "0" | "axis" | "axis_x" | "AXIS_X" => return Ok(AngleSpec::AxisX),
            "pi/6" => return Ok(AngleSpec::Rational { p: 1, q: 1 }),
            _ => {}
        }
        let bad = || Error::InvalidParameter(format!("angle token {t:?}"));
        let (p, q) = t.split_once('/').ok_or_else(bad)?;
        let p: u32 = p.trim().parse().map_err(|_| bad())?;
        let q: u32 = q.trim().parse().map_err(|_| bad())?;
        if p == 0 || q == 0 {
            return Err(bad());
        }
        Ok(AngleSpec::Rational { p, q })
    }
}

/// Squared transverse offset `(d_perp . gamma)^2 = num / den` in exact
/// integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransverseSq {
    pub num: i64,
    pub den: i64,
}

/// An admissible front direction with its projections onto the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub kind: LatticeKind,
    pub spec: AngleSpec,
    pub d: [f64; 2],
    pub d_perp: [f64; 2],
    /// `d . k_j` for `j = 1..n_modes` (`k3` included on the hex lattice).
    pub proj: [f64; 3],
    /// Zero-based index of the mode with `d . k_j = 0`, if any.
    pub degenerate_mode: Option<usize>,
    /// Always true: only rational angles are representable.
    pub gap_admissible: bool,
}

/// Builds the direction for an exact angle token.
pub fn make_direction(kind: LatticeKind, spec: AngleSpec) -> Result<Direction> {
    let (d, spec) = match spec {
        AngleSpec::AxisX => ([1.0, 0.0], spec),
        AngleSpec::Rational { p, q } => {
            let g = gcd(p as u64, q as u64) as u32;
            let (p, q) = (p / g, q / g);
            let inside = match kind {
                LatticeKind::Hex => p >= q,
                LatticeKind::Square => p > q,
            };
            if !inside {
                return Err(Error::AngleOutOfSector(format!("{kind} {p}/{q}")));
            }
            let (x, y) = match kind {
                LatticeKind::Hex => (SQRT3 * p as f64, q as f64),
                LatticeKind::Square => (p as f64, q as f64),
            };
            let n = sqrt(x * x + y * y);
            ([x / n, y / n], AngleSpec::Rational { p, q })
        }
    };
    let d_perp = [-d[1], d[0]];
    let mut proj = [0.0; 3];
    for (j, pj) in proj.iter_mut().enumerate().take(kind.n_modes()) {
        *pj = LatticeVector::mode(kind, j).dot(d);
    }
    let degenerate_mode = match (kind, spec) {
        (LatticeKind::Hex, AngleSpec::Rational { p, q }) if p == q => Some(1),
        (LatticeKind::Square, AngleSpec::AxisX) => Some(1),
        _ => None,
    };
    if let Some(j) = degenerate_mode {
        proj[j] = 0.0;
    }
    Ok(Direction { kind, spec, d, d_perp, proj, degenerate_mode, gap_admissible: true })
}

impl Direction {
    pub fn theta(&self) -> f64 {
        atan2(self.d[1], self.d[0])
    }

    pub fn n_modes(&self) -> usize {
        self.kind.n_modes()
    }

    /// Diffusion coefficients `4 (d . k_j)^2`.
    pub fn diffusion(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for j in 0..self.n_modes() {
            out[j] = 4.0 * self.proj[j] * self.proj[j];
        }
        out
    }

    pub fn axial(&self, g: &LatticeVector) -> f64 {
        g.dot(self.d)
    }

    pub fn transverse(&self, g: &LatticeVector) -> f64 {
        g.dot(self.d_perp)
    }

    /// `(d_perp . gamma)^2` as an exact ratio of integers.
    pub fn transverse_sq(&self, n1: i32, n2: i32) -> TransverseSq {
        let (a, b) = (n1 as i64, n2 as i64);
        match (self.kind, self.spec) {
            (LatticeKind::Hex, AngleSpec::AxisX) => TransverseSq { num: 3 * b * b, den: 4 },
            (LatticeKind::Square, AngleSpec::AxisX) => TransverseSq { num: b * b, den: 1 },
            (LatticeKind::Hex, AngleSpec::Rational { p, q }) => {
                let (p, q) = (p as i64, q as i64);
                let t = -2 * q * a + (q + 3 * p) * b;
                TransverseSq { num: t * t, den: 4 * (3 * p * p + q * q) }
            }
            (LatticeKind::Square, AngleSpec::Rational { p, q }) => {
                let (p, q) = (p as i64, q as i64);
                let t = -q * a + p * b;
                TransverseSq { num: t * t, den: p * p + q * q }
            }
        }
    }
}

/// Geometry of a lattice point relative to the critical strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripInfo {
    pub transverse_offset: f64,
    pub axial_offset: f64,
    pub in_critical_strip: bool,
    /// The line `gamma + s d` touches the unit circle tangentially.
    pub tangent: bool,
}

pub fn strip_membership(g: &LatticeVector, dir: &Direction) -> Result<StripInfo> {
    if g.kind != dir.kind {
        return Err(Error::KindMismatch);
    }
    let t = dir.transverse_sq(g.n1, g.n2);
    Ok(StripInfo {
        transverse_offset: dir.transverse(g),
        axial_offset: dir.axial(g),
        in_critical_strip: t.num <= t.den,
        tangent: t.num == t.den,
    })
}

/// All lattice points with `|gamma| <= radius`, sorted by norm then by
/// coordinates.
pub fn enumerate_lattice(kind: LatticeKind, radius: f64) -> Vec<LatticeVector> {
    let r2 = radius * radius * (1.0 + 1e-12) + 1e-12;
    // On both lattices |gamma|^2 >= 3/4 max(|n1|, |n2|)^2.
    let m = (radius * 2.0 / SQRT3) as i32 + 2;
    let mut pts: Vec<(i64, i32, i32)> = Vec::new();
    for n1 in -m..=m {
        for n2 in -m..=m {
            let s = kind.norm_sq_int(n1, n2);
            if (s as f64) <= r2 {
                pts.push((s, n1, n2));
            }
        }
    }
    pts.sort_unstable();
    pts.into_iter().map(|(_, a, b)| LatticeVector::new(kind, a, b)).collect()
}

/// Smallest `|d_perp . gamma| - 1` over lattice points outside the strip.
pub fn hyperbolic_margin(dir: &Direction, radius: f64) -> Option<f64> {
    enumerate_lattice(dir.kind, radius)
        .iter()
        .filter_map(|g| {
            let t = dir.transverse_sq(g.n1, g.n2);
            (t.num > t.den).then(|| abs(dir.transverse(g)) - 1.0)
        })
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(spec: AngleSpec) -> Direction {
        make_direction(LatticeKind::Hex, spec).unwrap()
    }

    #[test]
    fn axis_direction_projections() {
        let d = hex(AngleSpec::AxisX);
        assert_eq!(d.d, [1.0, 0.0]);
        assert_eq!(d.proj, [1.0, -0.5, -0.5]);
        assert_eq!(d.degenerate_mode, None);
    }

    #[test]
    fn pi_over_six_is_degenerate_in_k2() {
        let d = hex(AngleSpec::Rational { p: 1, q: 1 });
        assert!((d.theta() - core::f64::consts::FRAC_PI_6).abs() < 1e-15);
        assert_eq!(d.degenerate_mode, Some(1));
        assert_eq!(d.proj[1], 0.0);
        assert!((d.proj[0] - SQRT3 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn square_sector_boundary_rejected() {
        let e = make_direction(LatticeKind::Square, AngleSpec::Rational { p: 1, q: 1 });
        assert!(matches!(e, Err(Error::AngleOutOfSector(_))));
        let e = make_direction(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 2 });
        assert!(matches!(e, Err(Error::AngleOutOfSector(_))));
        assert_eq!(
            make_direction(LatticeKind::Square, AngleSpec::AxisX).unwrap().degenerate_mode,
            Some(1)
        );
    }

    #[test]
    fn non_reduced_rationals_are_reduced() {
        let a = hex(AngleSpec::Rational { p: 4, q: 2 });
        assert_eq!(a.spec, AngleSpec::Rational { p: 2, q: 1 });
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_lattice(LatticeKind::Hex, 1.0).len(), 7);
        assert_eq!(enumerate_lattice(LatticeKind::Square, 1.0).len(), 5);
        // brute-force oracle over a box that certainly covers radius 2
        let mut n = 0;
        for a in -3..=3i32 {
            for b in -3..=3i32 {
                let x = a as f64 - 0.5 * b as f64;
                let y = 0.5 * 3f64.sqrt() * b as f64;
                if (x * x + y * y).sqrt() <= 2.0 + 1e-12 {
                    n += 1;
                }
            }
        }
        assert_eq!(n, 19);
        assert_eq!(enumerate_lattice(LatticeKind::Hex, 2.0).len(), n);
    }

    #[test]
    fn enumeration_is_sorted_and_starts_at_origin() {
        let pts = enumerate_lattice(LatticeKind::Hex, 3.0);
        assert_eq!((pts[0].n1, pts[0].n2), (0, 0));
        for w in pts.windows(2) {
            let a = (LatticeKind::Hex.norm_sq_int(w[0].n1, w[0].n2), w[0].n1, w[0].n2);
            let b = (LatticeKind::Hex.norm_sq_int(w[1].n1, w[1].n2), w[1].n1, w[1].n2);
            assert!(a < b);
        }
    }

    #[test]
    fn critical_modes_are_the_six_hex_neighbours() {
        let crit: Vec<_> = enumerate_lattice(LatticeKind::Hex, 1.5)
            .into_iter()
            .filter(|g| g.is_critical())
            .map(|g| (g.n1, g.n2))
            .collect();
        assert_eq!(crit.len(), 6);
        for c in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)] {
            assert!(crit.contains(&c));
        }
    }

    #[test]
    fn strip_examples() {
        let d0 = hex(AngleSpec::AxisX);
        let s = strip_membership(&LatticeVector::new(LatticeKind::Hex, 1, 0), &d0).unwrap();
        assert_eq!(s.transverse_offset, 0.0);
        assert_eq!(s.axial_offset, 1.0);
        assert!(s.in_critical_strip);
        let s = strip_membership(&LatticeVector::new(LatticeKind::Hex, 0, 2), &d0).unwrap();
        assert!((s.transverse_offset - SQRT3).abs() < 1e-15);
        assert!(!s.in_critical_strip);
        let d6 = hex(AngleSpec::Rational { p: 1, q: 1 });
        let s = strip_membership(&LatticeVector::new(LatticeKind::Hex, 0, 1), &d6).unwrap();
        assert!((s.transverse_offset - 1.0).abs() < 1e-15);
        assert!(s.in_critical_strip && s.tangent);
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let d0 = hex(AngleSpec::AxisX);
        let g = LatticeVector::new(LatticeKind::Square, 1, 0);
        assert_eq!(strip_membership(&g, &d0), Err(Error::KindMismatch));
    }

    #[test]
    fn exact_transverse_matches_float() {
        for spec in [AngleSpec::AxisX, AngleSpec::Rational { p: 3, q: 2 }, AngleSpec::Rational { p: 1, q: 1 }] {
            let d = hex(spec);
            for g in enumerate_lattice(LatticeKind::Hex, 6.0) {
                let t = d.transverse_sq(g.n1, g.n2);
                let f = d.transverse(&g);
                assert!((t.num as f64 / t.den as f64 - f * f).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn hyperbolic_margin_is_positive() {
        for spec in [AngleSpec::AxisX, AngleSpec::Rational { p: 2, q: 1 }, AngleSpec::Rational { p: 5, q: 3 }] {
            let d = hex(spec);
            let m = hyperbolic_margin(&d, 20.0).unwrap();
            assert!(m > 1e-3, "{spec}: {m}");
        }
    }

    #[test]
    fn angle_tokens_parse() {
        assert_eq!(AngleSpec::parse("0").unwrap(), AngleSpec::AxisX);
        assert_eq!(AngleSpec::parse("pi/6").unwrap(), AngleSpec::Rational { p: 1, q: 1 });
        assert_eq!(AngleSpec::parse(" 3/2 ").unwrap(), AngleSpec::Rational { p: 3, q: 2 });
        assert!(AngleSpec::parse("0.5").is_err());
        assert!(AngleSpec::parse("1/0").is_err());
    }
}
