//! Orbits of the reduced systems: integration with energy monitoring,
//! unstable-manifold seeding and heteroclinic shooting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::amplitude::{AmplitudeState, ModelParams, ReducedSystem, Variant};
use crate::equilibria::{self, Branch, EquilibriumRecord};
use crate::lattice::{make_direction, AngleSpec, Direction, LatticeKind};
use crate::linalg::{self, dist2, norm2};
use crate::math::{abs, cos, sin, sqrt};
use crate::ode::{self, Control, OdeOptions, Step};
use crate::{Complex64, Error, Result};

/// Output nodes per unit of energy decrease.
const NODES_PER_ENERGY: f64 = 200.0;
const MAX_SUBDIVISION: usize = 2000;

/// An equilibrium at one end of an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub branch: Branch,
    pub amplitudes: [f64; 3],
}

impl From<&EquilibriumRecord> for Endpoint {
    fn from(r: &EquilibriumRecord) -> Self {
        Endpoint { branch: r.branch, amplitudes: r.amplitudes }
    }
}

/// A sampled orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    pub variant: Variant,
    pub xi: Vec<f64>,
    pub states: Vec<AmplitudeState>,
    pub energies: Vec<f64>,
    pub source: Option<Endpoint>,
    pub target: Option<Endpoint>,
    /// Closest approach to every catalogued equilibrium.
    pub min_distances: Vec<(Branch, f64)>,
}

impl OrbitTrace {
    fn empty(variant: Variant) -> Self {
        OrbitTrace {
            variant,
            xi: Vec::new(),
            states: Vec::new(),
            energies: Vec::new(),
            source: None,
            target: None,
            min_distances: Vec::new(),
        }
    }

    fn push(&mut self, sys: &ReducedSystem, xi: f64, y: &[f64]) {
        self.xi.push(xi);
        self.energies.push(sys.energy(y));
        self.states.push(AmplitudeState::from_slice(sys.variant, y).expect("state length matches variant"));
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn last_state(&self) -> Option<&AmplitudeState> {
        self.states.last()
    }

    /// Shifts `xi` so that the node where the energy is halfway between its
    /// end values sits at zero.
    pub fn centred(mut self) -> Self {
        if let (Some(first), Some(last)) = (self.energies.first(), self.energies.last()) {
            let mid = 0.5 * (first + last);
            let i = self.energies.iter().position(|e| (e - mid) * (first - mid) <= 0.0).unwrap_or(0);
            let x0 = self.xi[i];
            self.xi.iter_mut().for_each(|x| *x -= x0);
        }
        self
    }

    /// Largest energy increase between consecutive nodes (zero if none).
    pub fn max_energy_increase(&self) -> f64 {
        self.energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Fills `min_distances` for the existing records of a catalogue.
    pub fn record_distances(&mut self, cat: &[EquilibriumRecord]) {
        self.min_distances = cat
            .iter()
            .filter(|r| r.exists)
            .map(|r| {
                let eq = r.state(self.variant);
                let d = self.states.iter().map(|s| dist2(s.as_slice(), eq.as_slice())).fold(f64::INFINITY, f64::min);
                (r.branch, d)
            })
            .collect();
    }
}

fn node_count(sys: &ReducedSystem, step: &Step, y0: &[f64]) -> usize {
    let drop = sys.energy(y0) - sys.energy(&step.y1);
    let n = libm::ceil(abs(drop) * NODES_PER_ENERGY) as usize;
    n.clamp(1, MAX_SUBDIVISION)
}

/// Integrates `sys` from `y0` over `[xi0, xi1]` with nodes dense enough to
/// resolve the energy decay.
pub fn integrate(sys: &ReducedSystem, y0: &[f64], xi0: f64, xi1: f64, rtol: f64, atol: f64) -> Result<OrbitTrace> {
    integrate_until(sys, y0, xi0, xi1, &OdeOptions::tol(rtol, atol), |_| false).map(|(t, _)| t)
}

/// As [`integrate`], stopping after the first accepted step whose end state
/// satisfies `stop`. Returns the trace and whether `stop` fired.
pub fn integrate_until<S>(
    sys: &ReducedSystem,
    y0: &[f64],
    xi0: f64,
    xi1: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> Result<(OrbitTrace, bool)>
where
    S: FnMut(&[f64]) -> bool,
{
    if y0.len() != sys.dim() {
        return Err(Error::VariantMismatch(format!("{:?} needs {} values", sys.variant, sys.dim())));
    }
    let mut trace = OrbitTrace::empty(sys.variant);
    trace.push(sys, xi0, y0);
    let mut prev = y0.to_vec();
    let out = ode::integrate(|_, y, dy| sys.rhs(y, dy), xi0, y0, xi1, opts, |step| {
        let n = node_count(sys, step, &prev);
        for i in 1..n {
            let t = step.t0 + (step.t1 - step.t0) * i as f64 / n as f64;
            trace.push(sys, t, &step.dense(t));
        }
        trace.push(sys, step.t1, &step.y1);
        prev.copy_from_slice(&step.y1);
        if stop(&step.y1) {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    Ok((trace, out.stopped))
}

/// Orthonormal basis of the unstable eigenspace of the linearisation of
/// `sys` at the equilibrium `a`.
pub fn unstable_frame_of(sys: &ReducedSystem, a: &[f64]) -> Result<Vec<Vec<f64>>> {
    let spec = equilibria::spatial_stability_of(sys, a)?;
    if spec.n_unstable == 0 {
        return Ok(Vec::new());
    }
    let y = AmplitudeState::at_rest(sys.variant, a);
    let n = sys.dim();
    let jac = DMatrix::from_row_slice(n, n, &sys.jacobian(y.as_slice()));
    let frame = linalg::unstable_subspace(&jac)?;
    if frame.len() != spec.n_unstable {
        return Err(Error::Numerical(format!(
            "unstable subspace has dimension {}, expected {}",
            frame.len(),
            spec.n_unstable
        )));
    }
    Ok(frame)
}

/// Unstable frame of a catalogued equilibrium for the direction's system.
pub fn unstable_frame(eq: &EquilibriumRecord, params: &ModelParams, dir: &Direction) -> Result<Vec<Vec<f64>>> {
    unstable_frame_of(&ReducedSystem::new(*params, dir)?, &eq.amplitudes)
}

/// Real eigenvector of the weakest unstable eigenvalue (real part of the
/// complex eigenvector for a complex pair), oriented so that its amplitude
/// components sum to a nonnegative value.
pub fn leading_unstable_direction(sys: &ReducedSystem, a: &[f64]) -> Result<Vec<f64>> {
    let spec = equilibria::spatial_stability_of(sys, a)?;
    let lam = spec
        .eigenvalues
        .iter()
        .filter(|z| z.re > 0.0)
        .min_by(|x, y| x.re.total_cmp(&y.re).then(y.im.total_cmp(&x.im)))
        .copied()
        .ok_or_else(|| Error::InvalidParameter("source has no unstable direction".into()))?;
    let y = AmplitudeState::at_rest(sys.variant, a);
    let n = sys.dim();
    let jac = sys.jacobian(y.as_slice());
    let m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(jac[i * n + j], 0.0) - if i == j { lam } else { Complex64::new(0.0, 0.0) }
    });
    let v = linalg::null_vector(&m)?;
    // Rotate the phase so the real part carries the largest component.
    let big = v.iter().copied().fold(Complex64::new(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { Complex64::new(1.0, 0.0) };
    let mut w: Vec<f64> = v.iter().map(|z| (z * phase).re).collect();
    let nw = norm2(&w);
    w.iter_mut().for_each(|x| *x /= nw);
    let v0 = sys.variant;
    let sum: f64 = (0..v0.n_modes()).map(|j| w[v0.a_index(j)]).sum();
    let flip = if abs(sum) > 1e-8 { sum < 0.0 } else { w.iter().copied().fold(0.0, |b: f64, x| if abs(x) > abs(b) { x } else { b }) < 0.0 };
    if flip {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(w)
}

/// How seeds are placed around the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeding {
    /// Quasi-uniform points on the unit sphere of the unstable frame.
    Sphere,
    /// `+v` and `-v` along the weakest unstable eigenvector; selects a
    /// canonical member of a family of connections.
    Leading,
}

/// Shooting settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootConfig {
    pub eps_shoot: f64,
    pub converge_radius: f64,
    /// Defaults to `10 |source| + 10`.
    pub escape_radius: Option<f64>,
    /// Defaults to `500 / c0`.
    pub xi_max: Option<f64>,
    /// Number of sphere seeds for frames of dimension two or more.
    pub n_seeds: usize,
    pub rtol: f64,
    pub atol: f64,
    pub plateau_radius: f64,
    /// Objective evaluations allowed for refinement.
    pub refine_evals: usize,
    pub seeding: Seeding,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            eps_shoot: 1e-4,
            converge_radius: 1e-6,
            escape_radius: None,
            xi_max: None,
            n_seeds: 48,
            rtol: 1e-10,
            atol: 1e-12,
            plateau_radius: 0.05,
            refine_evals: 80,
            seeding: Seeding::Sphere,
        }
    }
}

/// Whether a connection is covered by the persistence result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Persistence {
    /// Ends at the trivial state with `mu0 > 0`, which is a stable node of
    /// full dimension.
    Persistent,
    NumericalOnly,
}

/// A successful shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootReport {
    pub trace: OrbitTrace,
    /// Index of the selected seed (refined seeds count as `n_seeds`).
    pub seed_index: usize,
    /// Unit direction in state space used to leave the source.
    pub direction: Vec<f64>,
    pub endpoint_distance: f64,
    /// `|rhs|` at the last node.
    pub endpoint_residual: f64,
    pub persistence: Persistence,
    /// Intermediate equilibria passed within the plateau radius.
    pub near_visits: Vec<(Branch, f64)>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
}

#[derive(Debug, Clone, Copy)]
struct Flight {
    miss: f64,
    converged: bool,
}

struct Shooter<'a> {
    sys: &'a ReducedSystem,
    source: Vec<f64>,
    target: Vec<f64>,
    cfg: ShootConfig,
    escape: f64,
    xi_max: f64,
    opts: OdeOptions,
}

impl Shooter<'_> {
    fn start(&self, dir: &[f64]) -> Vec<f64> {
        self.source.iter().zip(dir).map(|(s, d)| s + self.cfg.eps_shoot * d).collect()
    }

    fn fly(&self, dir: &[f64]) -> Flight {
        let y0 = self.start(dir);
        let mut miss = dist2(&y0, &self.target);
        let mut converged = false;
        let r = ode::integrate(|_, y, dy| self.sys.rhs(y, dy), 0.0, &y0, self.xi_max, &self.opts, |step| {
            let d = dist2(&step.y1, &self.target);
            miss = miss.min(d);
            if d <= self.cfg.converge_radius {
                converged = true;
                return Control::Stop;
            }
            if norm2(&step.y1) > self.escape {
                return Control::Stop;
            }
            Control::Continue
        });
        if r.is_err() {
            converged = false;
        }
        Flight { miss, converged }
    }

    fn trace(&self, dir: &[f64]) -> Result<OrbitTrace> {
        let y0 = self.start(dir);
        let r = self.cfg.converge_radius;
        let target = self.target.clone();
        let (trace, _) = integrate_until(self.sys, &y0, 0.0, self.xi_max, &self.opts, |y| dist2(y, &target) <= r)?;
        Ok(trace)
    }
}

fn embed(frame: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let n = frame[0].len();
    let mut v = vec![0.0; n];
    for (c, col) in coeffs.iter().zip(frame) {
        for (vi, x) in v.iter_mut().zip(col) {
            *vi += c * x;
        }
    }
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Unit vector from hyperspherical angles.
fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let k = angles.len() + 1;
    let mut out = vec![0.0; k];
    let mut s = 1.0;
    for (i, a) in angles.iter().enumerate() {
        out[i] = s * cos(*a);
        s *= sin(*a);
    }
    out[k - 1] = s;
    out
}

/// Quasi-uniform seed coefficients on the unit sphere in `R^k`.
pub fn sphere_seeds(k: usize, n: usize) -> Vec<Vec<f64>> {
    let pi = core::f64::consts::PI;
    match k {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n.max(2)).map(|i| sphere_point(&[2.0 * pi * i as f64 / n.max(2) as f64])).collect(),
        3 => {
            let n = n.max(4);
            let golden = pi * (3.0 - sqrt(5.0));
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = sqrt(1.0 - z * z);
                    let phi = golden * i as f64;
                    vec![r * cos(phi), r * sin(phi), z]
                })
                .collect()
        }
        _ => {
            let m = (libm::ceil(libm::pow(n as f64, 1.0 / (k - 1) as f64)) as usize).max(2);
            let mut out = Vec::new();
            let total = m.pow((k - 1) as u32);
            for idx in 0..total {
                let mut rest = idx;
                let angles: Vec<f64> = (0..k - 1)
                    .map(|d| {
                        let i = rest % m;
                        rest /= m;
                        if d == k - 2 {
                            2.0 * pi * i as f64 / m as f64
                        } else {
                            pi * (i as f64 + 0.5) / m as f64
                        }
                    })
                    .collect();
                out.push(sphere_point(&angles));
            }
            out
        }
    }
}

fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, evals: usize) -> (f64, f64) {
    let g = (sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..evals.saturating_sub(2) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64, evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut used = n + 1;
    while used < evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (worst.0[j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        used += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            used += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            used += 1;
            if fc < worst.1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..n).map(|j| best[j] + 0.5 * (p.0[j] - best[j])).collect();
                    p.1 = f(&x);
                    p.0 = x;
                    used += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Hyperspherical angles of a unit vector (inverse of `sphere_point`).
fn sphere_angles(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut out = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let tail = norm2(&v[i + 1..]);
        out.push(libm::atan2(tail, v[i]));
    }
    if k >= 2 && v[k - 1] < 0.0 {
        let last = out.len() - 1;
        out[last] = 2.0 * core::f64::consts::PI - out[last];
    }
    out
}

/// Shoots from `source` to `target` (amplitudes at rest) in an explicit
/// reduced system. `cat` supplies the equilibria whose closest approach is
/// recorded.
pub fn shoot_system(
    sys: &ReducedSystem,
    source: &EquilibriumRecord,
    target: &EquilibriumRecord,
    cat: &[EquilibriumRecord],
    cfg: &ShootConfig,
) -> Result<ShootReport> {
    if !source.exists || !target.exists {
        return Err(Error::InvalidParameter("source and target must exist".into()));
    }
    let v = sys.variant;
    let src = source.state(v).as_slice().to_vec();
    let tgt = target.state(v).as_slice().to_vec();
    let frame = match cfg.seeding {
        Seeding::Sphere => unstable_frame_of(sys, &source.amplitudes)?,
        Seeding::Leading => vec![leading_unstable_direction(sys, &source.amplitudes)?],
    };
    if frame.is_empty() {
        return Err(Error::InvalidParameter(format!("{} has no unstable directions", source.branch)));
    }
    let shooter = Shooter {
        sys,
        escape: cfg.escape_radius.unwrap_or(10.0 * norm2(&src) + 10.0),
        xi_max: cfg.xi_max.unwrap_or(500.0 / sys.params.c0),
        source: src,
        target: tgt.clone(),
        cfg: *cfg,
        opts: OdeOptions::tol(cfg.rtol, cfg.atol),
    };
    let k = frame.len();
    let seeds = sphere_seeds(k, cfg.n_seeds);
    let flights: Vec<Flight> = seeds.iter().map(|c| shooter.fly(&embed(&frame, c))).collect();
    let seeds_converged = flights.iter().filter(|f| f.converged).count();
    // Converged seeds tie; otherwise the smallest miss wins, ties by index.
    let best = match flights.iter().position(|f| f.converged) {
        Some(i) => i,
        None => (0..flights.len()).min_by(|&a, &b| flights[a].miss.total_cmp(&flights[b].miss)).unwrap_or(0),
    };
    let mut chosen = embed(&frame, &seeds[best]);
    let mut seed_index = best;
    let mut converged = flights[best].converged;
    let mut best_miss = flights[best].miss;
    if !converged && k >= 2 && cfg.refine_evals > 0 {
        let objective = |coeffs: &[f64]| shooter.fly(&embed(&frame, coeffs)).miss;
        let refined: Vec<f64> = if k == 2 {
            let m = seeds.len() as f64;
            let phi0 = 2.0 * core::f64::consts::PI * best as f64 / m;
            let h = 2.0 * core::f64::consts::PI / m;
            let (phi, _) = golden_section(|p| objective(&sphere_point(&[p])), phi0 - h, phi0 + h, cfg.refine_evals);
            sphere_point(&[phi])
        } else {
            let a0 = sphere_angles(&seeds[best]);
            let step = 2.0 / libm::sqrt(seeds.len() as f64);
            let (a, _) = nelder_mead(|a| objective(&sphere_point(a)), &a0, step, cfg.refine_evals);
            sphere_point(&a)
        };
        let fl = shooter.fly(&embed(&frame, &refined));
        if fl.miss < best_miss {
            best_miss = fl.miss;
            converged = fl.converged;
            chosen = embed(&frame, &refined);
            seed_index = seeds.len();
        }
    }
    if !converged {
        return Err(Error::ShootingFailed { best_miss });
    }
    let mut trace = shooter.trace(&chosen)?;
    trace.source = Some(source.into());
    trace.target = Some(target.into());
    trace.record_distances(cat);
    let last = trace.last_state().expect("trace has nodes").as_slice().to_vec();
    let endpoint_distance = dist2(&last, &tgt);
    let endpoint_residual = norm2(&sys.rhs_vec(&last));
    let persistence = persistence_of(sys, target);
    let near_visits = near_visits(&trace, cat, source, target, cfg.plateau_radius);
    Ok(ShootReport {
        trace,
        seed_index,
        direction: chosen,
        endpoint_distance,
        endpoint_residual,
        persistence,
        near_visits,
        seeds_tried: seeds.len(),
        seeds_converged,
    })
}

fn persistence_of(sys: &ReducedSystem, target: &EquilibriumRecord) -> Persistence {
    if target.branch != Branch::Trivial || !(sys.params.mu0 > 0.0) {
        return Persistence::NumericalOnly;
    }
    match equilibria::spatial_stability_of(sys, &target.amplitudes) {
        Ok(s) if s.n_stable == sys.dim() => Persistence::Persistent,
        _ => Persistence::NumericalOnly,
    }
}

fn near_visits(
    trace: &OrbitTrace,
    cat: &[EquilibriumRecord],
    source: &EquilibriumRecord,
    target: &EquilibriumRecord,
    radius: f64,
) -> Vec<(Branch, f64)> {
    let same = |r: &EquilibriumRecord, e: &EquilibriumRecord| dist2(&r.amplitudes, &e.amplitudes) < 1e-12;
    cat.iter()
        .filter(|r| r.exists && !same(r, source) && !same(r, target))
        .filter_map(|r| {
            let eq = r.state(trace.variant);
            let d = trace.states.iter().map(|s| dist2(s.as_slice(), eq.as_slice())).fold(f64::INFINITY, f64::min);
            (d < radius).then_some((r.branch, d))
        })
        .collect()
}

/// Shoots between two catalogued branches for a direction.
pub fn shoot(
    source: &EquilibriumRecord,
    target: &EquilibriumRecord,
    params: &ModelParams,
    dir: &Direction,
    cfg: &ShootConfig,
) -> Result<ShootReport> {
    let sys = ReducedSystem::new(*params, dir)?;
    shoot_system(&sys, source, target, &equilibria::catalogue(params), cfg)
}

/// Full-versus-slow comparison for one angle.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowComparison {
    pub angle: AngleSpec,
    /// `4 (d.k2)^2`.
    pub delta: f64,
    /// Symmetric Hausdorff distance between the full orbit, with `B2`
    /// dropped, and the slow orbit.
    pub deviation: f64,
}

/// Outcome of a slow-subsystem convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowReport {
    pub rows: Vec<SlowComparison>,
    /// Deviation decreases strictly as `delta` decreases.
    pub monotone: bool,
}

fn drop_index(y: &[f64], skip: usize) -> Vec<f64> {
    y.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, x)| *x).collect()
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let t = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d = 0.0;
    for i in 0..p.len() {
        let q = a[i] + t * (b[i] - a[i]) - p[i];
        d += q * q;
    }
    sqrt(d)
}

fn directed_hausdorff(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|p| {
            if to.len() == 1 {
                return dist2(p, &to[0]);
            }
            to.windows(2).map(|w| point_segment(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Compares, for each angle, the full system's connection with that of the
/// slow subsystem (the small diffusion coefficient of mode `k2` set to
/// zero). Both use [`Seeding::Leading`] so that the same member of a family
/// of connections is selected.
pub fn slow_subsystem_check(
    params: &ModelParams,
    angles: &[AngleSpec],
    source: Branch,
    target: Branch,
    cfg: &ShootConfig,
) -> Result<SlowReport> {
    let cat = equilibria::catalogue(params);
    let src = equilibria::find(&cat, source)
        .ok_or_else(|| Error::InvalidParameter(format!("{source} does not exist")))?;
    let tgt = equilibria::find(&cat, target)
        .ok_or_else(|| Error::InvalidParameter(format!("{target} does not exist")))?;
    let slow_variant = match params.kind {
        LatticeKind::Hex => Variant::HexDegenerate,
        LatticeKind::Square => Variant::SquareDegenerate,
    };
    let cfg = ShootConfig { seeding: Seeding::Leading, ..*cfg };
    let mut rows = Vec::new();
    for &angle in angles {
        let dir = make_direction(params.kind, angle)?;
        if dir.degenerate_mode.is_some() {
            return Err(Error::InvalidParameter(format!("angle {angle} is already degenerate")));
        }
        let full = ReducedSystem::new(*params, &dir)?;
        let slow = ReducedSystem::with_variant(*params, &dir, slow_variant)?;
        let fo = shoot_system(&full, src, tgt, &cat, &cfg)?;
        let so = shoot_system(&slow, src, tgt, &cat, &cfg)?;
        let b2 = Variant::for_direction(&dir).b_index(1).expect("generic variant has B2");
        let fp: Vec<Vec<f64>> = fo.trace.states.iter().map(|s| drop_index(s.as_slice(), b2)).collect();
        let sp: Vec<Vec<f64>> = so.trace.states.iter().map(|s| s.as_slice().to_vec()).collect();
        rows.push(SlowComparison { angle, delta: full.diffusion[1], deviation: hausdorff(&fp, &sp) });
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].delta.total_cmp(&rows[a].delta));
    let monotone = order.windows(2).all(|w| rows[w[1]].deviation < rows[w[0]].deviation);
    Ok(SlowReport { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{catalogue, find};

    fn hex_params() -> ModelParams {
        ModelParams::hex(1.0, 2.0, 1.0, -3.0, -6.0)
    }

    fn dir(kind: LatticeKind, spec: AngleSpec) -> Direction {
        make_direction(kind, spec).unwrap()
    }

    #[test]
    fn equilibrium_gives_constant_trace() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::AxisX);
        let sys = ReducedSystem::new(p, &d).unwrap();
        let cat = catalogue(&p);
        let y = find(&cat, Branch::HexDown).unwrap().state(sys.variant);
        let t = integrate(&sys, y.as_slice(), 0.0, 20.0, 1e-10, 1e-12).unwrap();
        for s in &t.states {
            assert!(dist2(s.as_slice(), y.as_slice()) < 1e-9);
        }
    }

    #[test]
    fn energy_is_monotone_along_traces() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::Rational { p: 2, q: 1 });
        let sys = ReducedSystem::new(p, &d).unwrap();
        let y0 = [0.2, 0.1, -0.3, 0.0, 0.1, -0.05];
        let t = integrate(&sys, &y0, 0.0, 40.0, 1e-10, 1e-12).unwrap();
        assert!(t.max_energy_increase() <= 1e-7);
        assert!(norm2(t.last_state().unwrap().as_slice()) < 1e-3);
    }

    #[test]
    fn frame_dimensions_at_the_trivial_state() {
        let d = dir(LatticeKind::Hex, AngleSpec::AxisX);
        let p = hex_params();
        let cat = catalogue(&p);
        let triv = find(&cat, Branch::Trivial).unwrap();
        assert!(unstable_frame(triv, &p, &d).unwrap().is_empty());
        let q = p.with_mu0(-1.0);
        let cat = catalogue(&q);
        let frame = unstable_frame(find(&cat, Branch::Trivial).unwrap(), &q, &d).unwrap();
        assert_eq!(frame.len(), 3);
        // The frame spans an invariant subspace: J v stays in the span.
        let sys = ReducedSystem::new(q, &d).unwrap();
        let jac = DMatrix::from_row_slice(6, 6, &sys.jacobian(&[0.0; 6]));
        for v in &frame {
            let jv = &jac * nalgebra::DVector::from_column_slice(v);
            let mut r: Vec<f64> = jv.iter().copied().collect();
            for q in &frame {
                let c: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
            assert!(norm2(&r) < 1e-10);
        }
    }

    #[test]
    fn roll_frame_matches_the_landau_count() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::Rational { p: 2, q: 1 });
        let cat = catalogue(&p);
        let rolls = find(&cat, Branch::Rolls).unwrap();
        let k = unstable_frame(rolls, &p, &d).unwrap().len();
        assert_eq!(k, 3 - rolls.n_unstable_landau());
    }

    #[test]
    fn hex_down_connects_to_trivial() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::AxisX);
        let cat = catalogue(&p);
        let r = shoot(find(&cat, Branch::HexDown).unwrap(), find(&cat, Branch::Trivial).unwrap(), &p, &d, &ShootConfig::default())
            .unwrap();
        assert!(r.endpoint_distance <= 1e-6 && r.endpoint_residual <= 1e-5);
        assert_eq!(r.persistence, Persistence::Persistent);
        assert!(r.trace.max_energy_increase() <= 1e-7);
    }

    #[test]
    fn shooting_is_reproducible() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::Rational { p: 2, q: 1 });
        let cat = catalogue(&p);
        let (s, t) = (find(&cat, Branch::HexDown).unwrap(), find(&cat, Branch::Trivial).unwrap());
        let cfg = ShootConfig { n_seeds: 12, ..ShootConfig::default() };
        let a = shoot(s, t, &p, &d, &cfg).unwrap();
        let b = shoot(s, t, &p, &d, &cfg).unwrap();
        assert_eq!(a.seed_index, b.seed_index);
        assert_eq!(a.direction, b.direction);
    }

    #[test]
    fn sphere_seeds_are_unit_vectors() {
        for k in 1..=5 {
            let s = sphere_seeds(k, 30);
            assert!(!s.is_empty());
            for v in s {
                assert_eq!(v.len(), k);
                assert!(abs(norm2(&v) - 1.0) < 1e-12);
            }
        }
        let v = [0.3, -0.5, 0.2, -0.7];
        let n = norm2(&v);
        let u: Vec<f64> = v.iter().map(|x| x / n).collect();
        let back = sphere_point(&sphere_angles(&u));
        assert!(dist2(&back, &u) < 1e-12);
    }

    #[test]
    fn hausdorff_of_identical_and_shifted_curves() {
        let a: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let b: Vec<Vec<f64>> = (0..19).map(|i| vec![i as f64 * 0.5, 0.1]).collect();
        assert!(abs(hausdorff(&a, &a)) < 1e-15);
        assert!(abs(hausdorff(&a, &b) - 0.1) < 1e-12);
    }

    #[test]
    fn missing_target_reports_best_miss() {
        let p = hex_params();
        let d = dir(LatticeKind::Hex, AngleSpec::AxisX);
        let cat = catalogue(&p);
        let cfg = ShootConfig { xi_max: Some(5.0), n_seeds: 6, refine_evals: 0, ..ShootConfig::default() };
        let r = shoot(find(&cat, Branch::HexDown).unwrap(), find(&cat, Branch::Trivial).unwrap(), &p, &d, &cfg);
        assert!(matches!(r, Err(Error::ShootingFailed { .. })), "{r:?}");
    }
}
