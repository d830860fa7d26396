//! Reduced amplitude equations on the centre manifold.
//!
//! For a non-degenerate direction every critical mode `k_j` carries a pair
//! `(A_j, B_j)` with
//!
//! ```text
//! A_j' = B_j
//! D_j B_j' = -(c0 B_j + f_j(A)),   D_j = 4 (d.k_j)^2
//! ```
//!
//! where `f_j = mu0 A_j + beta2 prod_{l != j} A_l + (K0 A_j^2 + Kc sum_{l != j} A_l^2) A_j`
//! (no quadratic term on the square lattice, `Kc` is `K2` on the hexagonal
//! and `K1` on the square lattice). A mode whose diffusion coefficient vanishes
//! obeys the first-order law `c0 A_j' = -f_j(A)`. Only leading-order terms
//! are kept.

use alloc::format;
use alloc::vec::Vec;

use crate::lattice::{Direction, LatticeKind, LatticeVector};
use crate::math::abs;
use crate::{Error, Result};

/// Layout of the reduced phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `(A1, B1, A2, B2, A3, B3)`.
    HexGeneric,
    /// `(A1, B1, A2, A3, B3)`, mode `k2` first order.
    HexDegenerate,
    /// `(A1, B1, A2, B2)`.
    SquareGeneric,
    /// `(A1, B1, A2)`, mode `k2` first order.
    SquareDegenerate,
    /// `(A1, A2, A3)` with `A' = -f(A)`, the `c0 -> infinity` limit.
    HexInfiniteSpeed,
    /// `(A1, A2)` with `A' = -f(A)`.
    SquareInfiniteSpeed,
}

impl Variant {
    pub fn kind(self) -> LatticeKind {
        match self {
            Variant::HexGeneric | Variant::HexDegenerate | Variant::HexInfiniteSpeed => LatticeKind::Hex,
            _ => LatticeKind::Square,
        }
    }

    pub fn n_modes(self) -> usize {
        self.kind().n_modes()
    }

    /// Whether mode `j` carries a slope variable `B_j`.
    pub fn second_order(self, j: usize) -> bool {
        match self {
            Variant::HexGeneric | Variant::SquareGeneric => true,
            Variant::HexDegenerate | Variant::SquareDegenerate => j != 1,
            Variant::HexInfiniteSpeed | Variant::SquareInfiniteSpeed => false,
        }
    }

    pub fn is_infinite_speed(self) -> bool {
        matches!(self, Variant::HexInfiniteSpeed | Variant::SquareInfiniteSpeed)
    }

    pub fn dim(self) -> usize {
        (0..self.n_modes()).map(|j| if self.second_order(j) { 2 } else { 1 }).sum()
    }

    /// Index of `A_j` in the state vector.
    pub fn a_index(self, j: usize) -> usize {
        (0..j).map(|l| if self.second_order(l) { 2 } else { 1 }).sum()
    }

    /// Index of `B_j`, if present.
    pub fn b_index(self, j: usize) -> Option<usize> {
        self.second_order(j).then(|| self.a_index(j) + 1)
    }

    /// Column names, e.g. `A1,B1,A2,A3,B3`.
    pub fn labels(self) -> Vec<alloc::string::String> {
        let mut out = Vec::new();
        for j in 0..self.n_modes() {
            out.push(format!("A{}", j + 1));
            if self.second_order(j) {
                out.push(format!("B{}", j + 1));
            }
        }
        out
    }

    /// The variant matching a direction's degeneracy.
    pub fn for_direction(dir: &Direction) -> Variant {
        match (dir.kind, dir.degenerate_mode.is_some()) {
            (LatticeKind::Hex, false) => Variant::HexGeneric,
            (LatticeKind::Hex, true) => Variant::HexDegenerate,
            (LatticeKind::Square, false) => Variant::SquareGeneric,
            (LatticeKind::Square, true) => Variant::SquareDegenerate,
        }
    }
}

/// Amplitude-level model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu0: f64,
    pub c0: f64,
    pub beta2: f64,
    pub k0: f64,
    /// `K2` on the hexagonal lattice, `K1` on the square lattice.
    pub k_cross: f64,
    pub kind: LatticeKind,
}

impl ModelParams {
    pub fn hex(mu0: f64, c0: f64, beta2: f64, k0: f64, k2: f64) -> Self {
        ModelParams { mu0, c0, beta2, k0, k_cross: k2, kind: LatticeKind::Hex }
    }

    /// Square lattice; the quadratic coefficient is zero.
    pub fn square(mu0: f64, c0: f64, k0: f64, k1: f64) -> Self {
        ModelParams { mu0, c0, beta2: 0.0, k0, k_cross: k1, kind: LatticeKind::Square }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidParameter("c0 must be positive".into()));
        }
        if self.kind == LatticeKind::Square && self.beta2 != 0.0 {
            return Err(Error::InvalidParameter("the square lattice has no quadratic coefficient".into()));
        }
        if ![self.mu0, self.c0, self.beta2, self.k0, self.k_cross].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(())
    }

    /// `K0 < 0` and `Kc < 0`, the regime with analytically known orbits.
    pub fn in_rigorous_regime(&self) -> bool {
        self.k0 < 0.0 && self.k_cross < 0.0
    }

    pub fn with_mu0(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    /// Stationary nonlinearity `f_j(A)`.
    pub fn f(&self, a: &[f64], j: usize) -> f64 {
        let n = self.kind.n_modes();
        let mut others_sq = 0.0;
        let mut prod = 1.0;
        for l in (0..n).filter(|&l| l != j) {
            others_sq += a[l] * a[l];
            prod *= a[l];
        }
        let quad = if self.kind == LatticeKind::Hex { self.beta2 * prod } else { 0.0 };
        self.mu0 * a[j] + quad + (self.k0 * a[j] * a[j] + self.k_cross * others_sq) * a[j]
    }

    /// All components of `f(A)`.
    pub fn f_all(&self, a: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate().take(self.kind.n_modes()) {
            *o = self.f(a, j);
        }
        out
    }

    /// Potential `V(A)` with `grad V = f`.
    pub fn potential(&self, a: &[f64]) -> f64 {
        let n = self.kind.n_modes();
        let mut v = 0.0;
        for j in 0..n {
            let s = a[j] * a[j];
            v += 0.5 * self.mu0 * s + 0.25 * self.k0 * s * s;
            for l in j + 1..n {
                v += 0.5 * self.k_cross * s * a[l] * a[l];
            }
        }
        if self.kind == LatticeKind::Hex {
            v += self.beta2 * a[0] * a[1] * a[2];
        }
        v
    }
}

/// A point of the reduced phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub variant: Variant,
    pub values: [f64; 6],
}

impl AmplitudeState {
    pub fn zero(variant: Variant) -> Self {
        AmplitudeState { variant, values: [0.0; 6] }
    }

    pub fn from_slice(variant: Variant, y: &[f64]) -> Result<Self> {
        if y.len() != variant.dim() {
            return Err(Error::VariantMismatch(format!(
                "{variant:?} needs {} values, got {}",
                variant.dim(),
                y.len()
            )));
        }
        let mut values = [0.0; 6];
        values[..y.len()].copy_from_slice(y);
        Ok(AmplitudeState { variant, values })
    }

    /// Equilibrium-style state with given amplitudes and zero slopes.
    pub fn at_rest(variant: Variant, a: &[f64]) -> Self {
        let mut s = Self::zero(variant);
        for j in 0..variant.n_modes() {
            s.values[variant.a_index(j)] = a[j];
        }
        s
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.variant.dim()]
    }

    pub fn amplitudes(&self) -> [f64; 3] {
        amplitudes(self.variant, self.as_slice())
    }
}

/// Amplitudes `A_j` of a raw state vector (unused slots zero).
pub fn amplitudes(variant: Variant, y: &[f64]) -> [f64; 3] {
    let mut a = [0.0; 3];
    for (j, aj) in a.iter_mut().enumerate().take(variant.n_modes()) {
        *aj = y[variant.a_index(j)];
    }
    a
}

/// A reduced system ready for integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSystem {
    pub variant: Variant,
    pub params: ModelParams,
    /// Diffusion coefficients `D_j = 4 (d.k_j)^2`; zero for first-order modes.
    pub diffusion: [f64; 3],
}

impl ReducedSystem {
    /// The system matching the direction's degeneracy.
    pub fn new(params: ModelParams, dir: &Direction) -> Result<Self> {
        Self::with_variant(params, dir, Variant::for_direction(dir))
    }

    /// Explicit layout. A degenerate variant on a non-degenerate direction is
    /// the slow subsystem: the small coefficient `D_2` is set to zero and the
    /// other coefficients keep their values for that direction.
    pub fn with_variant(params: ModelParams, dir: &Direction, variant: Variant) -> Result<Self> {
        params.validate()?;
        if params.kind != dir.kind || variant.kind() != dir.kind {
            return Err(Error::KindMismatch);
        }
        if variant.is_infinite_speed() {
            return Ok(Self::infinite_speed(params));
        }
        if Variant::for_direction(dir) != variant
            && !matches!(variant, Variant::HexDegenerate | Variant::SquareDegenerate)
        {
            return Err(Error::VariantMismatch(format!(
                "{variant:?} needs a non-degenerate direction, {} is degenerate",
                dir.spec
            )));
        }
        let full = dir.diffusion();
        let mut diffusion = [0.0; 3];
        for j in 0..variant.n_modes() {
            if variant.second_order(j) {
                diffusion[j] = full[j];
            }
        }
        Ok(ReducedSystem { variant, params, diffusion })
    }

    /// The direction-independent limit `A' = -f(A)`.
    pub fn infinite_speed(params: ModelParams) -> Self {
        let variant = match params.kind {
            LatticeKind::Hex => Variant::HexInfiniteSpeed,
            LatticeKind::Square => Variant::SquareInfiniteSpeed,
        };
        ReducedSystem { variant, params, diffusion: [0.0; 3] }
    }

    pub fn dim(&self) -> usize {
        self.variant.dim()
    }

    fn first_order_scale(&self) -> f64 {
        if self.variant.is_infinite_speed() {
            1.0
        } else {
            1.0 / self.params.c0
        }
    }

    /// Right-hand side, written into `dy`.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let v = self.variant;
        let a = amplitudes(v, y);
        let c0 = self.params.c0;
        let s = self.first_order_scale();
        for j in 0..v.n_modes() {
            let fj = self.params.f(&a, j);
            let ia = v.a_index(j);
            match v.b_index(j) {
                Some(ib) => {
                    dy[ia] = y[ib];
                    dy[ib] = -(c0 * y[ib] + fj) / self.diffusion[j];
                }
                None => dy[ia] = -s * fj,
            }
        }
    }

    pub fn rhs_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut dy = alloc::vec![0.0; y.len()];
        self.rhs(y, &mut dy);
        dy
    }

    /// Lyapunov function `H = sum D_j/2 B_j^2 + V(A)`; slopes of first-order
    /// modes are absent.
    pub fn energy(&self, y: &[f64]) -> f64 {
        let v = self.variant;
        let mut h = self.params.potential(&amplitudes(v, y));
        for j in 0..v.n_modes() {
            if let Some(ib) = v.b_index(j) {
                h += 0.5 * self.diffusion[j] * y[ib] * y[ib];
            }
        }
        h
    }

    /// Exact `dH/dXi` along the flow: `-c0 sum B_j^2` minus the first-order
    /// contributions `s f_j^2`.
    pub fn dissipation(&self, y: &[f64]) -> f64 {
        let v = self.variant;
        let a = amplitudes(v, y);
        let s = self.first_order_scale();
        let mut r = 0.0;
        for j in 0..v.n_modes() {
            match v.b_index(j) {
                Some(ib) => r -= self.params.c0 * y[ib] * y[ib],
                None => {
                    let fj = self.params.f(&a, j);
                    r -= s * fj * fj;
                }
            }
        }
        r
    }

    /// Gradient of `H` with respect to the state.
    pub fn energy_gradient(&self, y: &[f64]) -> Vec<f64> {
        let v = self.variant;
        let a = amplitudes(v, y);
        let mut g = alloc::vec![0.0; y.len()];
        for j in 0..v.n_modes() {
            g[v.a_index(j)] = self.params.f(&a, j);
            if let Some(ib) = v.b_index(j) {
                g[ib] = self.diffusion[j] * y[ib];
            }
        }
        g
    }

    /// Jacobian of the right-hand side, row-major `dim x dim`.
    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        let v = self.variant;
        let n = v.dim();
        let a = amplitudes(v, y);
        let l = landau_jacobian_raw(&a, &self.params);
        let s = self.first_order_scale();
        let mut jac = alloc::vec![0.0; n * n];
        let m = v.n_modes();
        for j in 0..m {
            let ia = v.a_index(j);
            match v.b_index(j) {
                Some(ib) => {
                    jac[ia * n + ib] = 1.0;
                    jac[ib * n + ib] = -self.params.c0 / self.diffusion[j];
                    for k in 0..m {
                        jac[ib * n + v.a_index(k)] = -l[j][k] / self.diffusion[j];
                    }
                }
                None => {
                    for k in 0..m {
                        jac[ia * n + v.a_index(k)] = -s * l[j][k];
                    }
                }
            }
        }
        jac
    }
}

/// `d f_j / d A_k`, the Landau linearisation (symmetric).
pub(crate) fn landau_jacobian_raw(a: &[f64], p: &ModelParams) -> [[f64; 3]; 3] {
    let n = p.kind.n_modes();
    let mut l = [[0.0; 3]; 3];
    for j in 0..n {
        let others: f64 = (0..n).filter(|&k| k != j).map(|k| a[k] * a[k]).sum();
        l[j][j] = p.mu0 + 3.0 * p.k0 * a[j] * a[j] + p.k_cross * others;
        for k in (0..n).filter(|&k| k != j) {
            let mut e = 2.0 * p.k_cross * a[j] * a[k];
            if p.kind == LatticeKind::Hex {
                let m = 3 - j - k;
                e += p.beta2 * a[m];
            }
            l[j][k] = e;
        }
    }
    l
}

/// Right-hand side for a state; the state's variant must match the
/// direction's degeneracy.
pub fn rhs(state: &AmplitudeState, params: &ModelParams, dir: &Direction) -> Result<AmplitudeState> {
    let sys = system_for(state.variant, params, dir)?;
    let mut out = AmplitudeState::zero(state.variant);
    sys.rhs(state.as_slice(), &mut out.values[..state.variant.dim()]);
    Ok(out)
}

/// Lyapunov function of a state.
pub fn lyapunov(state: &AmplitudeState, params: &ModelParams, dir: &Direction) -> Result<f64> {
    Ok(system_for(state.variant, params, dir)?.energy(state.as_slice()))
}

fn system_for(variant: Variant, params: &ModelParams, dir: &Direction) -> Result<ReducedSystem> {
    if variant.is_infinite_speed() {
        params.validate()?;
        if variant.kind() != params.kind {
            return Err(Error::KindMismatch);
        }
        return Ok(ReducedSystem::infinite_speed(*params));
    }
    if variant != Variant::for_direction(dir) {
        return Err(Error::VariantMismatch(format!("{variant:?} does not match direction {}", dir.spec)));
    }
    ReducedSystem::new(*params, dir)
}

/// Amplitude-equation coefficients of `N(u) = -beta |grad u|^2 - u^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub kind: LatticeKind,
    /// `eps * beta2` from the quadratic resonance, equal to `-beta` for
    /// this nonlinearity (zero on the square lattice). Divide by `eps`
    /// for the reduced coefficient.
    pub eps_beta2: f64,
    pub k0: f64,
    /// `K2` (hex) or `K1` (square).
    pub k_cross: f64,
    /// Coefficient of the mean mode: `psi_0 = 3 nu0 sum |A_j|^2`.
    pub nu0: f64,
    /// `nu_gamma` for every second-shell vector `gamma = k_j + k_l`.
    pub nu: Vec<(LatticeVector, f64)>,
}

impl CoefficientSet {
    /// Sign of the computed quadratic coefficient (`-1`, `0` or `1`).
    pub fn beta2_sign(&self) -> i8 {
        if self.eps_beta2 > 0.0 {
            1
        } else if self.eps_beta2 < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn nu_at(&self, n1: i32, n2: i32) -> Option<f64> {
        self.nu.iter().find(|(g, _)| g.n1 == n1 && g.n2 == n2).map(|(_, v)| *v)
    }
}

/// Symbol of `-(1 + Laplacian)^2`.
pub fn linear_symbol(g: &LatticeVector) -> f64 {
    let s = 1.0 - g.norm_sq();
    -s * s
}

fn n2(beta: f64, g1: &LatticeVector, g2: &LatticeVector) -> f64 {
    beta * (g1.kx * g2.kx + g1.ky * g2.ky)
}

const N3: f64 = -1.0;

fn add(a: &LatticeVector, b: &LatticeVector) -> LatticeVector {
    LatticeVector::new(a.kind, a.n1 + b.n1, a.n2 + b.n2)
}

/// Coefficients for the quadratic-cubic Swift-Hohenberg nonlinearity.
pub fn coefficients_qcsh(beta: f64, kind: LatticeKind) -> Result<CoefficientSet> {
    if !(abs(beta) < 1.0) {
        return Err(Error::InvalidParameter("|beta| must be below 1".into()));
    }
    let n = kind.n_modes();
    let mut modes = Vec::new();
    for j in 0..n {
        let k = LatticeVector::mode(kind, j);
        modes.push(k);
        modes.push(k.neg());
    }
    let zero = LatticeVector::new(kind, 0, 0);
    let k1 = modes[0];
    // psi_0 = -2 L(0)^{-1} sum_j |A_j|^2 N2(k_j, -k_j) =: 3 nu0 sum |A_j|^2
    let nu0 = -2.0 * n2(beta, &k1, &k1.neg()) / linear_symbol(&zero) / 3.0;
    let mut nu: Vec<(LatticeVector, f64)> = Vec::new();
    for (i, a) in modes.iter().enumerate() {
        for b in &modes[i..] {
            let g = add(a, b);
            let ns = kind.norm_sq_int(g.n1, g.n2);
            if ns == 0 || ns == 1 || nu.iter().any(|(h, _)| h.n1 == g.n1 && h.n2 == g.n2) {
                continue;
            }
            let l0 = linear_symbol(&g);
            if l0 == 0.0 {
                return Err(Error::Numerical(format!("second-shell mode ({}, {}) is critical", g.n1, g.n2)));
            }
            let mult = if a == b { 1.0 } else { 2.0 };
            nu.push((g, -mult * n2(beta, a, b) / l0));
        }
    }
    let lookup = |g: LatticeVector| -> f64 {
        nu.iter().find(|(h, _)| h.n1 == g.n1 && h.n2 == g.n2).map(|(_, v)| *v).unwrap_or(0.0)
    };
    let k2 = LatticeVector::mode(kind, 1);
    let two_k1 = add(&k1, &k1);
    let k1_minus_k2 = add(&k1, &k2.neg());
    let mean = n2(beta, &zero, &k1) * nu0;
    let k0 = 2.0 * (mean + n2(beta, &two_k1, &k1.neg()) * lookup(two_k1)) + 3.0 * N3;
    let (k_cross, eps_beta2) = match kind {
        LatticeKind::Hex => {
            let k3 = LatticeVector::mode(kind, 2);
            let k2c = 2.0 * (mean + n2(beta, &k1_minus_k2, &k2) * lookup(k1_minus_k2)) + 6.0 * N3;
            (k2c, 2.0 * n2(beta, &k2.neg(), &k3.neg()))
        }
        LatticeKind::Square => {
            let k1_plus_k2 = add(&k1, &k2);
            let k1c = 2.0
                * (mean
                    + n2(beta, &k1_plus_k2, &k2.neg()) * lookup(k1_plus_k2)
                    + n2(beta, &k1_minus_k2, &k2) * lookup(k1_minus_k2))
                + 6.0 * N3;
            (k1c, 0.0)
        }
    };
    Ok(CoefficientSet { kind, eps_beta2, k0, k_cross, nu0, nu })
}
