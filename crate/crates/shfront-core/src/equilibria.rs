//! Equilibria of the stationary amplitude equations `f(A) = 0`, their Landau
//! linearisation, spatial stability and energy hierarchy.
//!
//! `n`, the number of positive eigenvalues of the Landau matrix `df/dA`,
//! fixes the spatial counts: a generic hexagonal direction has `3 + n`
//! stable and `3 - n` unstable eigenvalues, the degenerate one `2 + n` and
//! `3 - n`; on the square lattice `2 + n`/`2 - n` and `1 + n`/`2 - n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::amplitude::{landau_jacobian_raw, AmplitudeState, ModelParams, ReducedSystem, Variant};
use crate::lattice::{Direction, LatticeKind};
use crate::linalg;
use crate::math::{abs, powf, sqrt};
use crate::{Complex64, Error, Result};

/// Eigenvalues closer than this to the imaginary axis are marginal.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Largest accepted stationary residual of an existing equilibrium.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Equilibrium families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Trivial,
    Rolls,
    HexUp,
    HexDown,
    MixedModes,
    FalseHexagons,
    Squares,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Trivial => "trivial",
            Branch::Rolls => "rolls",
            Branch::HexUp => "hex_up",
            Branch::HexDown => "hex_down",
            Branch::MixedModes => "mixed_modes",
            Branch::FalseHexagons => "false_hexagons",
            Branch::Squares => "squares",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "trivial" | "t" => Branch::Trivial,
            "rolls" | "roll" | "r" => Branch::Rolls,
            "hex_up" | "h+" | "up" => Branch::HexUp,
            "hex_down" | "h-" | "down" => Branch::HexDown,
            "mixed_modes" | "mixed" => Branch::MixedModes,
            "false_hexagons" | "false_hex" => Branch::FalseHexagons,
            "squares" | "square" | "s" => Branch::Squares,
            other => return Err(Error::InvalidParameter(format!("unknown branch {other:?}"))),
        })
    }
}

/// One catalogue entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRecord {
    pub branch: Branch,
    /// `(A1, A2, A3)`; the third entry is zero on the square lattice.
    pub amplitudes: [f64; 3],
    pub exists: bool,
    /// The existence condition that fails, when `exists` is false.
    pub violated: Option<&'static str>,
    /// Lyapunov energy at rest, `NaN` when the branch does not exist.
    pub energy: f64,
    /// `max_j |f_j(A)|`.
    pub residual: f64,
    /// Eigenvalues of the Landau matrix, ascending.
    pub landau_eigs: Vec<f64>,
    /// `(n_stable, n_unstable)` for the direction, when one was given and
    /// the spectrum is hyperbolic.
    pub spatial_counts: Option<(usize, usize)>,
    /// Trivial state only: whether each mode decays with oscillations.
    pub per_mode_oscillatory: Option<Vec<bool>>,
}

impl EquilibriumRecord {
    fn new(branch: Branch, amplitudes: [f64; 3], params: &ModelParams) -> Self {
        let f = params.f_all(&amplitudes);
        let residual = f.iter().fold(0.0f64, |m, x| m.max(abs(*x)));
        let l = landau_jacobian(&amplitudes, params);
        EquilibriumRecord {
            branch,
            amplitudes,
            exists: true,
            violated: None,
            energy: params.potential(&amplitudes),
            residual,
            landau_eigs: linalg::symmetric_eigenvalues(&l),
            spatial_counts: None,
            per_mode_oscillatory: None,
        }
    }

    fn missing(branch: Branch, why: &'static str) -> Self {
        EquilibriumRecord {
            branch,
            amplitudes: [0.0; 3],
            exists: false,
            violated: Some(why),
            energy: f64::NAN,
            residual: f64::NAN,
            landau_eigs: Vec::new(),
            spatial_counts: None,
            per_mode_oscillatory: None,
        }
    }

    /// Number of positive Landau eigenvalues.
    pub fn n_unstable_landau(&self) -> usize {
        self.landau_eigs.iter().filter(|e| **e > 0.0).count()
    }

    /// The equilibrium as a state of the given layout.
    pub fn state(&self, variant: Variant) -> AmplitudeState {
        AmplitudeState::at_rest(variant, &self.amplitudes)
    }
}

/// `(A_H+, A_H-)` when hexagons exist.
pub fn hexagon_amplitudes(p: &ModelParams) -> Option<(f64, f64)> {
    let k = p.k0 + 2.0 * p.k_cross;
    let disc = p.beta2 * p.beta2 - 4.0 * p.mu0 * k;
    if p.kind != LatticeKind::Hex || k == 0.0 || !(disc > 0.0) {
        return None;
    }
    let s = sqrt(disc);
    Some(((-p.beta2 - s) / (2.0 * k), (-p.beta2 + s) / (2.0 * k)))
}

/// Bounds of the mixed-mode window in `mu0`; above the upper bound the
/// branch is labelled false hexagons.
pub fn mixed_mode_window(p: &ModelParams) -> (f64, f64) {
    let d = (p.k0 - p.k_cross) * (p.k0 - p.k_cross);
    let b2 = p.beta2 * p.beta2;
    (-p.k0 * b2 / d, -b2 * (2.0 * p.k0 + p.k_cross) / d)
}

/// All equilibrium branches of the parameter set, existing or not.
pub fn catalogue(params: &ModelParams) -> Vec<EquilibriumRecord> {
    let p = params;
    let mut out = vec![EquilibriumRecord::new(Branch::Trivial, [0.0; 3], p)];
    if p.mu0 * p.k0 < 0.0 {
        out.push(EquilibriumRecord::new(Branch::Rolls, [sqrt(-p.mu0 / p.k0), 0.0, 0.0], p));
    } else {
        out.push(EquilibriumRecord::missing(Branch::Rolls, "mu0*K0 < 0"));
    }
    match p.kind {
        LatticeKind::Hex => {
            match hexagon_amplitudes(p) {
                Some((plus, minus)) => {
                    for a in [plus, minus] {
                        let b = if a > 0.0 { Branch::HexUp } else { Branch::HexDown };
                        out.push(EquilibriumRecord::new(b, [a; 3], p));
                    }
                }
                None => {
                    let why = if p.k0 + 2.0 * p.k_cross == 0.0 {
                        "K0+2K2 != 0"
                    } else {
                        "beta2^2 - 4mu0(K0+2K2) > 0"
                    };
                    out.push(EquilibriumRecord::missing(Branch::HexUp, why));
                    out.push(EquilibriumRecord::missing(Branch::HexDown, why));
                }
            }
            out.push(mixed_modes(p));
        }
        LatticeKind::Square => {
            let k = p.k0 + p.k_cross;
            if p.mu0 * k < 0.0 {
                let a = sqrt(-p.mu0 / k);
                out.push(EquilibriumRecord::new(Branch::Squares, [a, a, 0.0], p));
            } else {
                out.push(EquilibriumRecord::missing(Branch::Squares, "mu0*(K0+K1) < 0"));
            }
        }
    }
    out
}

fn mixed_modes(p: &ModelParams) -> EquilibriumRecord {
    let (lo, hi) = mixed_mode_window(p);
    let label = if p.mu0 > lo && p.mu0 < hi { Branch::MixedModes } else { Branch::FalseHexagons };
    let dk = p.k0 - p.k_cross;
    let sk = p.k0 + p.k_cross;
    if dk == 0.0 || sk == 0.0 {
        return EquilibriumRecord::missing(label, "K0 != K2 and K0+K2 != 0");
    }
    let num = p.k0 * p.beta2 * p.beta2 + dk * dk * p.mu0;
    if !(num / sk < 0.0) {
        return EquilibriumRecord::missing(label, "(K0 beta2^2 + (K0-K2)^2 mu0)/(K0+K2) < 0");
    }
    let a1 = p.beta2 / dk;
    let a2 = sqrt(-num / (sk * dk * dk));
    EquilibriumRecord::new(label, [a1, a2, a2], p)
}

/// Catalogue with spatial counts (and per-mode oscillation of the trivial
/// state) for a direction.
pub fn catalogue_in_direction(params: &ModelParams, dir: &Direction) -> Result<Vec<EquilibriumRecord>> {
    let mut cat = catalogue(params);
    for rec in cat.iter_mut().filter(|r| r.exists) {
        rec.spatial_counts = match spatial_stability(&rec.amplitudes, params, dir) {
            Ok(s) => Some((s.n_stable, s.n_unstable)),
            Err(Error::Marginal { .. }) => None,
            Err(e) => return Err(e),
        };
        if rec.branch == Branch::Trivial && params.mu0 > 0.0 {
            let modes = trivial_mode_classification(params, dir)?;
            rec.per_mode_oscillatory = Some(modes.iter().map(|m| m.oscillatory).collect());
        }
    }
    Ok(cat)
}

/// First existing record of a branch.
pub fn find(cat: &[EquilibriumRecord], branch: Branch) -> Option<&EquilibriumRecord> {
    cat.iter().find(|r| r.exists && r.branch == branch)
}

/// Landau matrix `df/dA` (3x3 hexagonal, 2x2 square).
pub fn landau_jacobian(a: &[f64], params: &ModelParams) -> DMatrix<f64> {
    let n = params.kind.n_modes();
    let l = landau_jacobian_raw(a, params);
    DMatrix::from_fn(n, n, |i, j| l[i][j])
}

/// Spectrum of the spatial linearisation at an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub n_stable: usize,
    pub n_unstable: usize,
    /// Counts predicted from the number of positive Landau eigenvalues.
    pub predicted: (usize, usize),
}

/// Counts `(stable, unstable)` implied by `n` positive Landau eigenvalues.
pub fn predicted_counts(variant: Variant, n: usize) -> (usize, usize) {
    let m = variant.n_modes();
    match variant {
        Variant::HexGeneric | Variant::SquareGeneric => (m + n, m - n),
        Variant::HexDegenerate | Variant::SquareDegenerate => (m - 1 + n, m - n),
        Variant::HexInfiniteSpeed | Variant::SquareInfiniteSpeed => (n, m - n),
    }
}

fn count_spectrum(ev: Vec<Complex64>) -> Result<(Vec<Complex64>, usize, usize)> {
    if let Some(z) = ev.iter().find(|z| abs(z.re) < MARGINAL_TOL) {
        return Err(Error::Marginal { re: z.re, im: z.im });
    }
    let s = ev.iter().filter(|z| z.re < 0.0).count();
    let u = ev.len() - s;
    Ok((ev, s, u))
}

/// Spatial stability of the equilibrium `a` for the direction's reduced
/// system. Generic directions solve `D l^2 psi + c0 l psi + L psi = 0`
/// through its first-order companion form; degenerate directions use the
/// first-order linearisation directly.
pub fn spatial_stability(a: &[f64], params: &ModelParams, dir: &Direction) -> Result<SpatialSpectrum> {
    let sys = ReducedSystem::new(*params, dir)?;
    spatial_stability_of(&sys, a)
}

/// As [`spatial_stability`] for an explicit reduced system.
pub fn spatial_stability_of(sys: &ReducedSystem, a: &[f64]) -> Result<SpatialSpectrum> {
    let v = sys.variant;
    let y = AmplitudeState::at_rest(v, a);
    let n = v.dim();
    let jac = DMatrix::from_row_slice(n, n, &sys.jacobian(y.as_slice()));
    let l = landau_jacobian(a, &sys.params);
    let leig = linalg::symmetric_eigenvalues(&l);
    if let Some(e) = leig.iter().find(|e| abs(**e) < MARGINAL_TOL) {
        return Err(Error::Marginal { re: 0.0, im: *e });
    }
    let n_landau = leig.iter().filter(|e| **e > 0.0).count();
    let predicted = predicted_counts(v, n_landau);
    let (eigenvalues, n_stable, n_unstable) = count_spectrum(linalg::real_matrix_eigenvalues(&jac)?)?;
    if (n_stable, n_unstable) != predicted {
        return Err(Error::CountMismatch { observed: n_stable, predicted: predicted.0 });
    }
    Ok(SpatialSpectrum { eigenvalues, n_stable, n_unstable, predicted })
}

/// Eigenvalues of `D l^2 psi + c l psi + L psi = 0` for arbitrary
/// invertible `D` and any `L`, via the companion matrix
/// `[[0, I], [-D^-1 L, -c D^-1]]`.
pub fn qep_eigenvalues(d: &DMatrix<f64>, c: f64, l: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let m = d.nrows();
    if d.ncols() != m || l.nrows() != m || l.ncols() != m {
        return Err(Error::InvalidParameter("D and L must be square of equal size".into()));
    }
    let dinv = d
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("D must be invertible".into()))?;
    let mut comp = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let a = -&dinv * l;
    let b = -c * &dinv;
    for i in 0..m {
        comp[(i, m + i)] = 1.0;
        for j in 0..m {
            comp[(m + i, j)] = a[(i, j)];
            comp[(m + i, m + j)] = b[(i, j)];
        }
    }
    linalg::real_matrix_eigenvalues(&comp)
}

/// Smallest singular value of `D l^2 + c l + L`, the residual of a QEP
/// eigenvalue.
pub fn qep_residual(d: &DMatrix<f64>, c: f64, l: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let m = d.nrows();
    let mat = DMatrix::from_fn(m, m, |i, j| {
        lambda * lambda * d[(i, j)] + lambda * c * if i == j { 1.0 } else { 0.0 } + Complex64::new(l[(i, j)], 0.0)
    });
    linalg::min_singular_value(&mat)
}

/// Decay of one mode at the trivial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialMode {
    pub mode: usize,
    pub dk_sq: f64,
    /// Roots of `4 (d.k)^2 l^2 + c0 l + mu0`; a first-order mode has the
    /// single root `-mu0/c0` stored twice.
    pub lambda: [Complex64; 2],
    pub oscillatory: bool,
    /// `4 |d.k| sqrt(mu0)`, zero for a first-order mode.
    pub c_crit: f64,
}

/// Roots and oscillation of `4 s l^2 + c0 l + mu0` with `s = (d.k)^2`.
pub fn trivial_mode(dk_sq: f64, mu0: f64, c0: f64) -> Result<TrivialMode> {
    if !(mu0 > 0.0) {
        return Err(Error::InvalidParameter("the trivial-state classification needs mu0 > 0".into()));
    }
    if !(c0 > 0.0) || !(dk_sq >= 0.0) {
        return Err(Error::InvalidParameter("need c0 > 0 and (d.k)^2 >= 0".into()));
    }
    if dk_sq == 0.0 {
        let l = Complex64::new(-mu0 / c0, 0.0);
        return Ok(TrivialMode { mode: 0, dk_sq, lambda: [l, l], oscillatory: false, c_crit: 0.0 });
    }
    let a = 4.0 * dk_sq;
    let disc = c0 * c0 - 4.0 * a * mu0;
    let c_crit = 4.0 * sqrt(dk_sq) * sqrt(mu0);
    let lambda = if disc >= 0.0 {
        let s = sqrt(disc);
        [Complex64::new((-c0 - s) / (2.0 * a), 0.0), Complex64::new((-c0 + s) / (2.0 * a), 0.0)]
    } else {
        let s = sqrt(-disc);
        [Complex64::new(-c0 / (2.0 * a), -s / (2.0 * a)), Complex64::new(-c0 / (2.0 * a), s / (2.0 * a))]
    };
    Ok(TrivialMode { mode: 0, dk_sq, lambda, oscillatory: c0 < c_crit, c_crit })
}

/// Per-mode decay at the trivial state for a direction.
pub fn trivial_mode_classification(params: &ModelParams, dir: &Direction) -> Result<Vec<TrivialMode>> {
    params.validate()?;
    if params.kind != dir.kind {
        return Err(Error::KindMismatch);
    }
    (0..dir.n_modes())
        .map(|j| {
            let pj = dir.proj[j];
            trivial_mode(pj * pj, params.mu0, params.c0).map(|m| TrivialMode { mode: j, ..m })
        })
        .collect()
}

/// Branches ordered by energy, with the hexagon/roll crossing `mu1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRanking {
    /// Existing branches, lowest energy first.
    pub order: Vec<(Branch, [f64; 3], f64)>,
    /// Closed-form `mu1`, when `K0 < K2 < 0` on the hexagonal lattice.
    pub mu1: Option<f64>,
    /// `H(A_H+) - H(A_H-)` from the closed form, when hexagons exist.
    pub hex_gap: Option<f64>,
}

impl EnergyRanking {
    /// Lowest-energy branch other than the trivial state.
    pub fn lowest_nontrivial(&self) -> Option<Branch> {
        self.order.iter().map(|e| e.0).find(|b| *b != Branch::Trivial)
    }
}

/// `mu1` at which the down-hexagon and roll energies cross; defined for
/// `K0 < K2 < 0`.
pub fn mu1(p: &ModelParams) -> Option<f64> {
    let (k0, k2) = (p.k0, p.k_cross);
    if p.kind != LatticeKind::Hex || !(k0 < k2 && k2 < 0.0) {
        return None;
    }
    let s = k0 + k2;
    let den = 2.0 * sqrt(2.0) * sqrt(k0 * s * s * s) - 2.0 * k0 * (k0 + 3.0 * k2);
    Some(-p.beta2 * p.beta2 * k0 / den)
}

/// Closed form of `H(A_H+) - H(A_H-)`.
pub fn hexagon_energy_gap(p: &ModelParams) -> Option<f64> {
    hexagon_amplitudes(p)?;
    let k = p.k0 + 2.0 * p.k_cross;
    let disc = p.beta2 * p.beta2 - 4.0 * p.mu0 * k;
    Some(-p.beta2 * powf(disc, 1.5) / (4.0 * k * k * k))
}

/// Energies of all existing branches in increasing order.
pub fn energy_ranking(params: &ModelParams) -> Result<EnergyRanking> {
    if !(params.k0 < 0.0 && params.k_cross < 0.0) {
        return Err(Error::InvalidParameter("energy ranking needs K0 < 0 and the cross coefficient < 0".into()));
    }
    let mut order: Vec<(Branch, [f64; 3], f64)> =
        catalogue(params).into_iter().filter(|r| r.exists).map(|r| (r.branch, r.amplitudes, r.energy)).collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let hex_gap = hexagon_energy_gap(params);
    if let (Some(gap), Some((plus, minus))) = (hex_gap, hexagon_amplitudes(params)) {
        let direct = params.potential(&[plus; 3]) - params.potential(&[minus; 3]);
        if abs(direct - gap) > 1e-9 * (1.0 + abs(gap)) {
            return Err(Error::Numerical(format!("hexagon energy gap {direct} disagrees with closed form {gap}")));
        }
    }
    Ok(EnergyRanking { order, mu1: mu1(params), hex_gap })
}
