//! Spatial-dynamics spectrum per lattice mode.
//!
//! For a mode `gamma` the spatial eigenvalues are the roots of
//! `p(l) = -(1 + (d l + i gamma).(d l + i gamma))^2 + eps^2 mu0 + eps c0 l`.
//! Roots are classified by the size of their real part into more-central
//! (`O(eps)`), less-central (`O(sqrt eps)`) and hyperbolic ones.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::lattice::{enumerate_lattice, strip_membership, Direction, LatticeVector};
use crate::linalg::{poly_roots, polyval};
use crate::math::{abs, ln, powf, sqrt};
use crate::{Error, Result};

/// Absolute tolerance for treating `c0` as the critical speed.
pub const CRITICAL_SPEED_TOL: f64 = 1e-10;
/// Relative window around `c_crit` flagged as near-critical.
pub const NEAR_CRITICAL_REL: f64 = 1e-3;
/// Root clustering radius for the Jordan structure at `eps = 0`.
pub const CLUSTER_RADIUS: f64 = 1e-6;
/// Relative width of the ambiguity zone around each band edge.
pub const BAND_AMBIGUITY: f64 = 0.05;

/// Parameters of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionContext {
    pub mu0: f64,
    pub c0: f64,
    pub eps: f64,
    pub dir: Direction,
}

impl DispersionContext {
    pub fn new(mu0: f64, c0: f64, eps: f64, dir: Direction) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter("c0 must be positive".into()));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParameter("eps must lie in [0, 1)".into()));
        }
        Ok(DispersionContext { mu0, c0, eps, dir })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.mu0, self.c0, eps, self.dir)
    }
}

/// Band constants: more-central roots have `|Re| <= k_mc eps`, less-central
/// roots `|Re| <= k_lc sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    pub k_mc: f64,
    pub k_lc: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands { k_mc: 2.0, k_lc: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootClass {
    MoreCentral,
    LessCentral,
    Hyperbolic,
    /// On the imaginary axis (only at `eps = 0`).
    Imaginary,
}

impl RootClass {
    pub fn label(self) -> &'static str {
        match self {
            RootClass::MoreCentral => "mc",
            RootClass::LessCentral => "lc",
            RootClass::Hyperbolic => "h",
            RootClass::Imaginary => "i",
        }
    }
}

/// Multiplicity pattern of the roots at `eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JordanStructure {
    /// Two imaginary double roots (transversal intersection).
    TwoPlusTwo,
    /// One quadruple imaginary root (tangential intersection).
    Four,
    /// Two double roots off the imaginary axis.
    HyperbolicTwoPlusTwo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpectrum {
    pub gamma: LatticeVector,
    pub roots: [C64; 4],
    pub classes: [RootClass; 4],
    pub jordan: JordanStructure,
}

/// Coefficients of `p(l; gamma, eps)` in ascending powers of `l`.
pub fn dispersion_poly(g: &LatticeVector, ctx: &DispersionContext) -> [C64; 5] {
    let a = ctx.dir.axial(g);
    let b = 1.0 - g.norm_sq();
    let i = C64::new(0.0, 1.0);
    // q(l) = l^2 + 2 i a l + b, p = -q^2 + eps c0 l + eps^2 mu0
    [
        C64::new(-b * b + ctx.eps * ctx.eps * ctx.mu0, 0.0),
        -i * (4.0 * a * b) + ctx.eps * ctx.c0,
        C64::new(-(2.0 * b - 4.0 * a * a), 0.0),
        -i * (4.0 * a),
        C64::new(-1.0, 0.0),
    ]
}

/// Residual `|p(l)|` of a candidate root.
pub fn residual(g: &LatticeVector, ctx: &DispersionContext, l: C64) -> f64 {
    polyval(&dispersion_poly(g, ctx), l).norm()
}

fn sort_roots(r: &mut [C64]) {
    r.sort_by(|x, y| x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re)));
}

/// Roots at `eps = 0`: `p = -q^2`, so the roots of the quadratic `q`,
/// each doubled.
pub fn unperturbed_roots(g: &LatticeVector, dir: &Direction) -> Result<[C64; 4]> {
    let a = dir.axial(g);
    let b = 1.0 - g.norm_sq();
    let q = [C64::new(b, 0.0), C64::new(0.0, 2.0 * a), C64::new(1.0, 0.0)];
    let r = poly_roots(&q)?;
    let mut out = [r[0], r[0], r[1], r[1]];
    sort_roots(&mut out);
    Ok(out)
}

/// Jordan structure at `eps = 0` from root clustering, confirmed against the
/// exact tangency test `|d_perp . gamma| = 1`.
pub fn jordan_structure(g: &LatticeVector, dir: &Direction) -> Result<JordanStructure> {
    let r = unperturbed_roots(g, dir)?;
    let clustered = if (r[0] - r[3]).norm() < CLUSTER_RADIUS {
        JordanStructure::Four
    } else if r.iter().all(|z| abs(z.re) < CLUSTER_RADIUS) {
        JordanStructure::TwoPlusTwo
    } else {
        JordanStructure::HyperbolicTwoPlusTwo
    };
    let s = strip_membership(g, dir)?;
    let geometric = if s.tangent {
        JordanStructure::Four
    } else if s.in_critical_strip {
        JordanStructure::TwoPlusTwo
    } else {
        JordanStructure::HyperbolicTwoPlusTwo
    };
    if clustered != geometric {
        return Err(Error::Misclustered { n1: g.n1, n2: g.n2 });
    }
    Ok(geometric)
}

/// The four roots of the quartic, sorted by imaginary then real part.
pub fn roots_at(g: &LatticeVector, ctx: &DispersionContext) -> Result<[C64; 4]> {
    if ctx.eps == 0.0 {
        return unperturbed_roots(g, &ctx.dir);
    }
    let r = poly_roots(&dispersion_poly(g, ctx))?;
    let mut out = [r[0], r[1], r[2], r[3]];
    sort_roots(&mut out);
    Ok(out)
}

/// Classifies a real part for `eps > 0`; `None` inside an ambiguity zone.
pub fn classify(re: f64, eps: f64, bands: &Bands) -> Option<RootClass> {
    let x = abs(re);
    if eps == 0.0 {
        return Some(if x < CLUSTER_RADIUS { RootClass::Imaginary } else { RootClass::Hyperbolic });
    }
    let e1 = bands.k_mc * eps;
    let e2 = bands.k_lc * sqrt(eps);
    for e in [e1, e2] {
        if abs(x - e) <= BAND_AMBIGUITY * e {
            return None;
        }
    }
    Some(if x <= e1 {
        RootClass::MoreCentral
    } else if x <= e2 {
        RootClass::LessCentral
    } else {
        RootClass::Hyperbolic
    })
}

pub fn mode_spectrum(g: &LatticeVector, ctx: &DispersionContext, bands: &Bands) -> Result<ModeSpectrum> {
    if g.kind != ctx.dir.kind {
        return Err(Error::KindMismatch);
    }
    let roots = roots_at(g, ctx)?;
    let mut classes = [RootClass::Imaginary; 4];
    for (k, r) in roots.iter().enumerate() {
        classes[k] = classify(r.re, ctx.eps, bands).ok_or(Error::AmbiguousClassification {
            n1: g.n1,
            n2: g.n2,
            index: k,
            re: r.re,
        })?;
    }
    Ok(ModeSpectrum { gamma: *g, roots, classes, jordan: jordan_structure(g, &ctx.dir)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McBranch {
    Generic,
    CriticalSpeed,
    Perpendicular,
}

/// Leading-order coefficients `nu` of the more-central eigenvalues
/// `lambda = eps nu + ...` of a critical mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McAsymptotic {
    pub branch: McBranch,
    pub nu_plus: C64,
    pub nu_minus: C64,
    /// Generic branch within a relative `1e-3` of the critical speed.
    pub near_critical: bool,
}

/// Critical speed `4 |d.k| sqrt(mu0)` of a critical mode.
pub fn c_crit(d_dot_k: f64, mu0: f64) -> f64 {
    4.0 * abs(d_dot_k) * sqrt(mu0)
}

pub fn mc_eigenvalues_asymptotic(g: &LatticeVector, ctx: &DispersionContext) -> Result<McAsymptotic> {
    if !g.is_critical() {
        return Err(Error::InvalidParameter("mode is not on the critical circle".into()));
    }
    if !(ctx.eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let (mu0, c0) = (ctx.mu0, ctx.c0);
    if strip_membership(g, &ctx.dir)?.tangent {
        let nu = C64::new(-mu0 / c0, 0.0);
        return Ok(McAsymptotic { branch: McBranch::Perpendicular, nu_plus: nu, nu_minus: nu, near_critical: false });
    }
    let a = ctx.dir.axial(g);
    let a2 = a * a;
    let cc = c_crit(a, mu0);
    if abs(c0 - cc) < CRITICAL_SPEED_TOL {
        // i^{3/2} for d.k > 0; the mode -k carries the conjugate pair.
        let w = if a > 0.0 {
            C64::from_polar(1.0, 0.75 * core::f64::consts::PI)
        } else {
            C64::from_polar(1.0, -0.75 * core::f64::consts::PI)
        };
        let base = C64::new(-c0 / (8.0 * a2), 0.0);
        let corr = w * (sqrt(ctx.eps) * powf(mu0, 0.75) / (2.0 * core::f64::consts::SQRT_2 * a2));
        return Ok(McAsymptotic {
            branch: McBranch::CriticalSpeed,
            nu_plus: base + corr,
            nu_minus: base - corr,
            near_critical: false,
        });
    }
    let disc = C64::new(c0 * c0 - 16.0 * a2 * mu0, 0.0).sqrt();
    Ok(McAsymptotic {
        branch: McBranch::Generic,
        nu_plus: (-c0 + disc) / (8.0 * a2),
        nu_minus: (-c0 - disc) / (8.0 * a2),
        near_critical: abs(c0 - cc) < NEAR_CRITICAL_REL * cc,
    })
}

/// Aggregated spectral counts over a lattice disc.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub n_more_central: usize,
    pub n_less_central: usize,
    pub n_hyperbolic: usize,
    /// Smallest `|Re|` among hyperbolic roots.
    pub min_hyperbolic_gap: f64,
    /// Smallest `|Re|` among less-central roots.
    pub min_less_central_real: f64,
    pub modes: Vec<ModeSpectrum>,
}

pub fn gap_report(ctx: &DispersionContext, radius: f64, bands: &Bands) -> Result<GapReport> {
    if radius < 2.0 {
        return Err(Error::InvalidParameter("radius must be at least 2".into()));
    }
    if !(ctx.eps > 0.0) {
        return Err(Error::InvalidParameter("gap report needs eps > 0".into()));
    }
    let mut rep = GapReport {
        n_more_central: 0,
        n_less_central: 0,
        n_hyperbolic: 0,
        min_hyperbolic_gap: f64::INFINITY,
        min_less_central_real: f64::INFINITY,
        modes: Vec::new(),
    };
    for g in enumerate_lattice(ctx.dir.kind, radius) {
        let m = mode_spectrum(&g, ctx, bands)?;
        for (r, c) in m.roots.iter().zip(m.classes) {
            match c {
                RootClass::MoreCentral => rep.n_more_central += 1,
                RootClass::LessCentral => {
                    rep.n_less_central += 1;
                    rep.min_less_central_real = rep.min_less_central_real.min(abs(r.re));
                }
                RootClass::Hyperbolic => {
                    rep.n_hyperbolic += 1;
                    rep.min_hyperbolic_gap = rep.min_hyperbolic_gap.min(abs(r.re));
                }
                RootClass::Imaginary => {}
            }
        }
        rep.modes.push(m);
    }
    Ok(rep)
}

/// Which root family a scaling probe follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeBranch {
    /// `max |lambda - eps nu_pm|` for the two roots near zero of a
    /// transversal critical mode.
    MoreCentralError,
    /// `max |Re lambda|` over roots emanating from nonzero imaginary roots.
    LessCentralReal,
    /// Mean `|lambda|` of the three fast roots at a size-four block at zero.
    JordanFast,
    /// Mean displacement of the four roots at a tangential nonzero root.
    TangentialHyperbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingProbe {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Log-log least-squares slope.
    pub exponent: f64,
}

/// Geometric sweep `eps_max, eps_max/2, ...` with `n` points.
pub fn eps_sweep(eps_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| eps_max / powf(2.0, k as f64)).collect()
}

fn nearest(roots: &[C64], z: C64) -> usize {
    let mut best = 0;
    for (k, r) in roots.iter().enumerate() {
        if (r - z).norm() < (roots[best] - z).norm() {
            best = k;
        }
    }
    best
}

fn probe_value(
    g: &LatticeVector,
    ctx: &DispersionContext,
    branch: ProbeBranch,
    bands: &Bands,
) -> Result<f64> {
    let roots = roots_at(g, ctx)?;
    let r0 = unperturbed_roots(g, &ctx.dir)?;
    let mut selected: Vec<usize> = Vec::new();
    let value = match branch {
        ProbeBranch::MoreCentralError => {
            let asym = mc_eigenvalues_asymptotic(g, ctx)?;
            if asym.branch != McBranch::Generic {
                return Err(Error::InvalidParameter("more-central probe needs the generic branch".into()));
            }
            let mut worst: f64 = 0.0;
            for nu in [asym.nu_plus, asym.nu_minus] {
                let k = nearest(&roots, nu * ctx.eps);
                selected.push(k);
                worst = worst.max((roots[k] - nu * ctx.eps).norm());
            }
            worst
        }
        ProbeBranch::LessCentralReal => {
            if jordan_structure(g, &ctx.dir)? != JordanStructure::TwoPlusTwo {
                return Err(Error::InvalidParameter("less-central probe needs a transversal mode".into()));
            }
            let mut used = [false; 4];
            let mut worst: f64 = 0.0;
            for z in r0.iter().filter(|z| z.norm() > CLUSTER_RADIUS) {
                let mut best = None;
                for (k, r) in roots.iter().enumerate() {
                    if !used[k] && best.map_or(true, |b: usize| (r - z).norm() < (roots[b] - z).norm()) {
                        best = Some(k);
                    }
                }
                let k = best.expect("four roots");
                used[k] = true;
                selected.push(k);
                worst = worst.max(abs(roots[k].re));
            }
            worst
        }
        ProbeBranch::JordanFast => {
            if !(g.is_critical() && jordan_structure(g, &ctx.dir)? == JordanStructure::Four) {
                return Err(Error::InvalidParameter("fast-root probe needs a critical tangential mode".into()));
            }
            let mut idx = [0usize, 1, 2, 3];
            idx.sort_by(|&a, &b| roots[b].norm().total_cmp(&roots[a].norm()));
            selected.extend_from_slice(&idx[..3]);
            idx[..3].iter().map(|&k| roots[k].norm()).sum::<f64>() / 3.0
        }
        ProbeBranch::TangentialHyperbolic => {
            if g.is_critical() || jordan_structure(g, &ctx.dir)? != JordanStructure::Four {
                return Err(Error::InvalidParameter(
                    "tangential probe needs a non-critical tangential mode".into(),
                ));
            }
            selected.extend_from_slice(&[0, 1, 2, 3]);
            roots.iter().map(|r| (r - r0[0]).norm()).sum::<f64>() / 4.0
        }
    };
    for &k in &selected {
        if classify(roots[k].re, ctx.eps, bands).is_none() {
            return Err(Error::AmbiguousClassification { n1: g.n1, n2: g.n2, index: k, re: roots[k].re });
        }
    }
    Ok(value)
}

/// Fits the exponent `alpha` in `value ~ eps^alpha` over a sweep.
pub fn scaling_probe(
    g: &LatticeVector,
    ctx: &DispersionContext,
    sweep: &[f64],
    branch: ProbeBranch,
    bands: &Bands,
) -> Result<ScalingProbe> {
    if sweep.len() < 8 {
        return Err(Error::InvalidParameter("scaling probe needs at least 8 values of eps".into()));
    }
    if sweep.iter().any(|&e| !(e > 0.0 && e <= 1e-2)) {
        return Err(Error::InvalidParameter("sweep values must lie in (0, 1e-2]".into()));
    }
    let mut values = Vec::with_capacity(sweep.len());
    for &e in sweep {
        values.push(probe_value(g, &ctx.with_eps(e)?, branch, bands)?);
    }
    let lx: Vec<f64> = sweep.iter().map(|&e| ln(e)).collect();
    let ly: Vec<f64> = values.iter().map(|&v| ln(v)).collect();
    Ok(ScalingProbe { eps: sweep.to_vec(), values, exponent: crate::math::ls_slope(&lx, &ly) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_direction, AngleSpec, LatticeKind};

    fn ctx(kind: LatticeKind, spec: AngleSpec, mu0: f64, c0: f64, eps: f64) -> DispersionContext {
        DispersionContext::new(mu0, c0, eps, make_direction(kind, spec).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Independent evaluation of the dispersion relation straight from its
    /// vector form.
    fn p_direct(g: &LatticeVector, x: &DispersionContext, l: C64) -> C64 {
        let i = c(0.0, 1.0);
        let vx = l * x.dir.d[0] + i * g.kx;
        let vy = l * x.dir.d[1] + i * g.ky;
        let s = c(1.0, 0.0) + vx * vx + vy * vy;
        -(s * s) + x.eps * x.eps * x.mu0 + l * (x.eps * x.c0)
    }

    #[test]
    fn coefficients_match_direct_evaluation() {
        let x = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 3, q: 2 }, 0.7, 1.3, 0.05);
        for g in enumerate_lattice(LatticeKind::Hex, 3.0) {
            let co = dispersion_poly(&g, &x);
            for z in [c(0.3, -0.2), c(-1.1, 0.4), c(0.0, 2.0)] {
                assert!((polyval(&co, z) - p_direct(&g, &x, z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn k1_at_axis_is_minus_square_of_l2_plus_2il() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 0.0);
        let g = LatticeVector::new(LatticeKind::Hex, 1, 0);
        let co = dispersion_poly(&g, &x);
        // -(l^2 + 2 i l)^2 = -l^4 - 4 i l^3 + 4 l^2
        let want = [c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0), c(0.0, -4.0), c(-1.0, 0.0)];
        for k in 0..5 {
            assert!((co[k] - want[k]).norm() < 1e-15);
        }
        let m = mode_spectrum(&g, &x, &Bands::default()).unwrap();
        assert_eq!(m.jordan, JordanStructure::TwoPlusTwo);
        let r = m.roots;
        assert!(r[0].norm() < 1e-12 || (r[0] - c(0.0, -2.0)).norm() < 1e-12);
        assert_eq!(r.iter().filter(|z| z.norm() < 1e-12).count(), 2);
        assert_eq!(r.iter().filter(|z| (*z - c(0.0, -2.0)).norm() < 1e-12).count(), 2);
    }

    #[test]
    fn origin_mode_is_minus_square_of_one_plus_l2() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 0.0);
        let g = LatticeVector::new(LatticeKind::Hex, 0, 0);
        let co = dispersion_poly(&g, &x);
        let want = [c(-1.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        for k in 0..5 {
            assert!((co[k] - want[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn tangential_critical_mode_has_quadruple_zero() {
        let x = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }, 1.0, 2.0, 0.03);
        let g = LatticeVector::new(LatticeKind::Hex, 0, 1);
        let co = dispersion_poly(&g, &x);
        let e = 0.03;
        let want = [c(e * e, 0.0), c(2.0 * e, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        for k in 0..5 {
            assert!((co[k] - want[k]).norm() < 1e-15, "{k}");
        }
        let x0 = x.with_eps(0.0).unwrap();
        let m = mode_spectrum(&g, &x0, &Bands::default()).unwrap();
        assert_eq!(m.jordan, JordanStructure::Four);
        assert!(m.roots.iter().all(|z| z.norm() < 1e-7));
    }

    #[test]
    fn hyperbolic_double_roots_at_sqrt_two() {
        // |d_perp . gamma| = sqrt 3 at theta = 0 for gamma = 2 k2
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 0.0);
        let g = LatticeVector::new(LatticeKind::Hex, 0, 2);
        let m = mode_spectrum(&g, &x, &Bands::default()).unwrap();
        assert_eq!(m.jordan, JordanStructure::HyperbolicTwoPlusTwo);
        let s2 = 2f64.sqrt();
        assert_eq!(m.roots.iter().filter(|z| (z.re - s2).abs() < 1e-12).count(), 2);
        assert_eq!(m.roots.iter().filter(|z| (z.re + s2).abs() < 1e-12).count(), 2);
    }

    #[test]
    fn roots_have_small_residuals() {
        for (kind, spec) in [
            (LatticeKind::Hex, AngleSpec::AxisX),
            (LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }),
            (LatticeKind::Square, AngleSpec::Rational { p: 2, q: 1 }),
        ] {
            let x = ctx(kind, spec, 1.0, 1.0, 0.01);
            for g in enumerate_lattice(kind, 6.0) {
                for r in roots_at(&g, &x).unwrap() {
                    let bound = 1e-9 * (1.0 + r.norm().powi(4));
                    assert!(residual(&g, &x, r) <= bound, "{g:?} {r}");
                }
            }
        }
    }

    #[test]
    fn opposite_modes_have_conjugate_spectra() {
        let x = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 5, q: 2 }, 1.0, 1.5, 0.02);
        for g in enumerate_lattice(LatticeKind::Hex, 4.0) {
            let a = roots_at(&g, &x).unwrap();
            let b = roots_at(&g.neg(), &x).unwrap();
            for z in a {
                let m = b.iter().map(|w| (w.conj() - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(m < 1e-9);
            }
        }
    }

    #[test]
    fn generic_branch_example() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 5.0, 1e-3);
        let g = LatticeVector::mode(LatticeKind::Hex, 0);
        let a = mc_eigenvalues_asymptotic(&g, &x).unwrap();
        assert_eq!(a.branch, McBranch::Generic);
        assert!((a.nu_plus - c(-0.25, 0.0)).norm() < 1e-15);
        assert!((a.nu_minus - c(-1.0, 0.0)).norm() < 1e-15);
        // companion roots agree to O(eps^2)
        let r = roots_at(&g, &x).unwrap();
        for nu in [a.nu_plus, a.nu_minus] {
            let m = r.iter().map(|z| (z - nu * 1e-3).norm()).fold(f64::INFINITY, f64::min);
            assert!(m < 10.0 * 1e-6, "{m}");
        }
    }

    #[test]
    fn perpendicular_branch_example() {
        let x = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }, 1.0, 2.0, 1e-3);
        let a = mc_eigenvalues_asymptotic(&LatticeVector::mode(LatticeKind::Hex, 1), &x).unwrap();
        assert_eq!(a.branch, McBranch::Perpendicular);
        assert_eq!(a.nu_plus, c(-0.5, 0.0));
    }

    #[test]
    fn critical_branch_matches_quartic_for_both_signs_of_d_dot_k() {
        let eps = 1e-6;
        for (g, cc) in [
            (LatticeVector::new(LatticeKind::Hex, 1, 0), 4.0),
            (LatticeVector::new(LatticeKind::Hex, -1, 0), 4.0),
            (LatticeVector::new(LatticeKind::Hex, 0, 1), 2.0),
        ] {
            let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, cc, eps);
            let a = mc_eigenvalues_asymptotic(&g, &x).unwrap();
            assert_eq!(a.branch, McBranch::CriticalSpeed);
            let r = roots_at(&g, &x).unwrap();
            for nu in [a.nu_plus, a.nu_minus] {
                let m = r.iter().map(|z| (z - nu * eps).norm()).fold(f64::INFINITY, f64::min);
                // the correction is eps^{3/2}; the remainder is O(eps^2)
                assert!(m < 0.05 * eps.powf(1.5), "{g:?} {m}");
            }
        }
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 4.0, 1e-3);
        let a = mc_eigenvalues_asymptotic(&LatticeVector::mode(LatticeKind::Hex, 0), &x).unwrap();
        assert!((a.nu_plus + a.nu_minus - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn near_critical_speed_is_flagged() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 4.0 + 1e-6, 1e-3);
        let a = mc_eigenvalues_asymptotic(&LatticeVector::mode(LatticeKind::Hex, 0), &x).unwrap();
        assert_eq!(a.branch, McBranch::Generic);
        assert!(a.near_critical);
    }

    #[test]
    fn mc_asymptotic_refuses_zero_eps() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 0.0);
        assert!(mc_eigenvalues_asymptotic(&LatticeVector::mode(LatticeKind::Hex, 0), &x).is_err());
    }

    #[test]
    fn less_central_gap_scales_like_sqrt_eps() {
        let x = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 1e-2);
        let mut ratios = Vec::new();
        for e in eps_sweep(1e-2, 6) {
            let rep = gap_report(&x.with_eps(e).unwrap(), 6.0, &Bands::default()).unwrap();
            ratios.push(rep.min_less_central_real / sqrt(e));
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        assert!(hi / lo < 4.0, "{ratios:?}");
    }

    #[test]
    fn ambiguous_edge_is_reported() {
        let b = Bands::default();
        assert_eq!(classify(0.02, 0.01, &b), None);
        assert_eq!(classify(0.005, 0.01, &b), Some(RootClass::MoreCentral));
        assert_eq!(classify(0.05, 0.01, &b), Some(RootClass::LessCentral));
        assert_eq!(classify(0.6, 0.01, &b), None);
        assert_eq!(classify(2.0, 0.01, &b), Some(RootClass::Hyperbolic));
    }

    #[test]
    fn more_central_counts_per_lattice_and_angle() {
        let cases = [
            (LatticeKind::Hex, AngleSpec::AxisX, 12),
            (LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }, 10),
            (LatticeKind::Square, AngleSpec::Rational { p: 2, q: 1 }, 8),
            (LatticeKind::Square, AngleSpec::AxisX, 6),
        ];
        for (kind, spec, n) in cases {
            let rep = gap_report(&ctx(kind, spec, 1.0, 1.0, 1e-2), 6.0, &Bands::default()).unwrap();
            assert_eq!(rep.n_more_central, n, "{kind} {spec}");
            assert!(rep.min_hyperbolic_gap > 0.0);
        }
    }

    #[test]
    fn scaling_exponents() {
        let sweep = eps_sweep(1e-2, 11);
        let b = Bands::default();
        let hex0 = ctx(LatticeKind::Hex, AngleSpec::AxisX, 1.0, 1.0, 1e-2);
        let k1 = LatticeVector::mode(LatticeKind::Hex, 0);
        let mc = scaling_probe(&k1, &hex0, &sweep, ProbeBranch::MoreCentralError, &b).unwrap();
        assert!(mc.exponent >= 1.8, "{}", mc.exponent);
        let lc = scaling_probe(&k1, &hex0, &sweep, ProbeBranch::LessCentralReal, &b).unwrap();
        assert!(abs(lc.exponent - 0.5) <= 0.05, "{}", lc.exponent);
        // the fast roots grow like (eps c0)^(1/3) and cross the less-central
        // band edge near eps = 2e-5 c0^2; c0 = 1/2 keeps the sweep clear of it
        let hex6 = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }, 1.0, 0.5, 1e-2);
        let k2 = LatticeVector::mode(LatticeKind::Hex, 1);
        let jf = scaling_probe(&k2, &hex6, &sweep, ProbeBranch::JordanFast, &b).unwrap();
        assert!(abs(jf.exponent - 1.0 / 3.0) <= 0.05, "{}", jf.exponent);
        // 2k1 + 2k2 = (1, sqrt3) has d_perp component exactly 1 at pi/6
        let g = LatticeVector::new(LatticeKind::Hex, 2, 2);
        assert!(strip_membership(&g, &hex6.dir).unwrap().tangent);
        // the quarter-power roots cross the less-central band edge near
        // eps = (C/6)^4 with C ~ (c0 |d.g|)^(1/4); a fast front pushes that above the sweep
        let fast = ctx(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }, 1.0, 20.0, 1e-2);
        let th = scaling_probe(&g, &fast, &sweep, ProbeBranch::TangentialHyperbolic, &b).unwrap();
        assert!(abs(th.exponent - 0.25) <= 0.05, "{}", th.exponent);
    }
}
