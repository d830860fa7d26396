//! Marginal-stability speeds of pulled fronts.
//!
//! The dispersion relation in a frame moving with speed `c` along `d`,
//! restricted to transverse wavenumber `k_perp`, is
//!
//! ```text
//! d(i omega, nu) = -(1 + nu^2 - k_perp^2)^2 + mu + c nu - i omega
//! ```
//!
//! and the selected speed solves `d = 0`, `d_nu d = 0` with `Re nu < 0`.
//! With `a = 1 - k_perp^2` and `s = sqrt(a^2 + 6 mu)`:
//!
//! ```text
//! nu    = -sqrt(s - a) / (2 sqrt 3) + i sqrt(s + 3a) / 2
//! c     = 4 (s + 2a) sqrt(s - a) / (3 sqrt 3)
//! omega = (s + 3a)^(3/2) sqrt(s - a) / (2 sqrt 3)
//! ```
//!
//! The complex-conjugate branch flips the signs of `Im nu` and `omega`.

use crate::lattice::Direction;
use crate::math::{abs, sqrt};
use crate::{Complex64, Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A pinched double root of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalSolution {
    pub k_perp: f64,
    pub mu: f64,
    /// Branch with `Im nu >= 0`.
    pub nu: Complex64,
    pub c: f64,
    pub omega: f64,
}

impl MarginalSolution {
    /// The conjugate branch `(conj nu, -omega)`.
    pub fn conjugate(&self) -> Self {
        MarginalSolution { nu: self.nu.conj(), omega: -self.omega, ..*self }
    }

    /// `(|d|, |d_nu d|)` at the solution.
    pub fn residuals(&self) -> (f64, f64) {
        let (d, dd) = dispersion(self.nu, self.k_perp, self.mu, self.c, self.omega);
        (d.norm(), dd.norm())
    }
}

/// Leading-order small-`eps` solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingSolution {
    pub nu: Complex64,
    pub c: f64,
    pub omega: f64,
}

/// `d` and `d_nu d`.
pub fn dispersion(nu: Complex64, k_perp: f64, mu: f64, c: f64, omega: f64) -> (Complex64, Complex64) {
    let a = nu * nu + (1.0 - k_perp * k_perp);
    let d = -a * a + mu + nu * c - Complex64::new(0.0, omega);
    let dd = -nu * a * 4.0 + c;
    (d, dd)
}

fn check_kperp(k_perp: f64) -> Result<f64> {
    if !(abs(k_perp) < 1.0) {
        return Err(Error::InvalidParameter("|k_perp| must be below 1".into()));
    }
    Ok(1.0 - k_perp * k_perp)
}

/// Closed-form marginal-stability solution.
pub fn marginal_exact(k_perp: f64, mu: f64) -> Result<MarginalSolution> {
    let a = check_kperp(k_perp)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter("a pulled front needs mu > 0".into()));
    }
    let s = sqrt(a * a + 6.0 * mu);
    // s - a without cancellation for small mu.
    let sma = 6.0 * mu / (s + a);
    let spa3 = s + 3.0 * a;
    let nu = Complex64::new(-sqrt(sma) / (2.0 * SQRT3), 0.5 * sqrt(spa3));
    let c = 4.0 * (s + 2.0 * a) * sqrt(sma) / (3.0 * SQRT3);
    let omega = spa3 * sqrt(spa3) * sqrt(sma) / (2.0 * SQRT3);
    Ok(MarginalSolution { k_perp, mu, nu, c, omega })
}

/// Leading-order expansion for `mu = eps^2 mu0`.
pub fn marginal_leading(k_perp: f64, mu0: f64, eps: f64) -> Result<LeadingSolution> {
    let a = check_kperp(k_perp)?;
    if !(mu0 > 0.0) {
        return Err(Error::InvalidParameter("a pulled front needs mu0 > 0".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter("eps must lie in (0, 0.5]".into()));
    }
    Ok(LeadingSolution {
        nu: Complex64::new(-0.5 * eps * sqrt(mu0 / a), sqrt(a)),
        c: 4.0 * eps * sqrt(a * mu0),
        omega: 4.0 * eps * a * sqrt(mu0),
    })
}

/// Leading-order speed of the fastest critical mode for a direction,
/// `k_perp = d_perp . k_j` with the smallest `|k_perp|`. Returns the speed
/// and that `k_perp`.
pub fn predicted_speed(dir: &Direction, mu0: f64, eps: f64) -> Result<(f64, f64)> {
    let kp = (0..dir.n_modes())
        .map(|j| crate::lattice::LatticeVector::mode(dir.kind, j).dot(dir.d_perp))
        .fold(f64::INFINITY, |b, k| if abs(k) < abs(b) { k } else { b });
    Ok((marginal_leading(kp, mu0, eps)?.c, kp))
}

/// Newton iteration on `(Re nu, Im nu, c, omega)` for `d = d_nu d = 0`,
/// started from `guess`. Independent of the closed forms; used to verify
/// them.
pub fn double_root_newton(k_perp: f64, mu: f64, guess: &MarginalSolution) -> Result<MarginalSolution> {
    let f = |x: &[f64; 4]| -> [f64; 4] {
        let (d, dd) = dispersion(Complex64::new(x[0], x[1]), k_perp, mu, x[2], x[3]);
        [d.re, d.im, dd.re, dd.im]
    };
    let mut x = [guess.nu.re, guess.nu.im, guess.c, guess.omega];
    for _ in 0..100 {
        let fx = f(&x);
        let norm = fx.iter().map(|v| v * v).sum::<f64>();
        if norm < 1e-30 {
            break;
        }
        let mut jac = nalgebra::Matrix4::<f64>::zeros();
        for j in 0..4 {
            let h = 1e-7 * (1.0 + abs(x[j]));
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(&xp), f(&xm));
            for i in 0..4 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::Vector4::new(-fx[0], -fx[1], -fx[2], -fx[3]);
        let dx = jac.lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular Newton step".into()))?;
        for j in 0..4 {
            x[j] += dx[j];
        }
    }
    let sol = MarginalSolution { k_perp, mu, nu: Complex64::new(x[0], x[1]), c: x[2], omega: x[3] };
    let (r1, r2) = sol.residuals();
    if r1 + r2 > 1e-10 {
        return Err(Error::Numerical(alloc::format!("double-root Newton did not converge ({:e})", r1 + r2)));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::ModelParams;
    use crate::equilibria::trivial_mode_classification;
    use crate::lattice::{make_direction, AngleSpec, LatticeKind};
    use crate::math::ls_slope;
    use alloc::vec::Vec;

    #[test]
    fn preset_speeds() {
        assert!(abs(marginal_leading(0.0, 1.0, 0.3).unwrap().c - 1.2) < 1e-14);
        assert!(abs(marginal_leading(-0.5, 1.0, 0.3).unwrap().c - 1.0392304845413263) < 1e-12);
    }

    #[test]
    fn exact_solution_has_zero_residual_on_a_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let k = -0.95 + 1.9 * i as f64 / 9.0;
                let mu = 1e-4 * libm::pow(10.0, 3.0 * j as f64 / 9.0);
                let s = marginal_exact(k, mu).unwrap();
                let (r1, r2) = s.residuals();
                assert!(r1 + r2 <= 1e-10, "k {k} mu {mu}: {r1} {r2}");
                assert!(s.nu.re < 0.0 && s.c > 0.0);
                let (q1, q2) = s.conjugate().residuals();
                assert!(q1 + q2 <= 1e-10);
            }
        }
    }

    #[test]
    fn newton_oracle_agrees_with_closed_form() {
        for (k, mu) in [(0.0, 0.09), (0.5, 0.01), (-0.8, 0.2), (0.3, 1.0)] {
            let exact = marginal_exact(k, mu).unwrap();
            let lead = marginal_leading(k, 1.0, sqrt(mu).min(0.5)).unwrap();
            let guess = MarginalSolution { k_perp: k, mu, nu: lead.nu, c: lead.c, omega: lead.omega };
            let n = double_root_newton(k, mu, &guess).unwrap();
            assert!((n.nu - exact.nu).norm() < 1e-8 && abs(n.c - exact.c) < 1e-8 && abs(n.omega - exact.omega) < 1e-8, "{n:?} vs {exact:?}");
        }
    }

    #[test]
    fn small_mu_limit() {
        let s = marginal_exact(0.6, 1e-12).unwrap();
        assert!(s.c < 1e-5);
        assert!((s.nu - Complex64::new(0.0, 0.8)).norm() < 1e-5);
    }

    #[test]
    fn expansion_error_is_second_order() {
        for k in [0.0, 0.5, -0.7] {
            let eps: Vec<f64> = (0..12).map(|i| 0.3 * libm::pow(0.5, i as f64)).filter(|e| *e >= 1e-3).collect();
            let err: Vec<f64> = eps
                .iter()
                .map(|&e| abs(marginal_exact(k, e * e).unwrap().c - marginal_leading(k, 1.0, e).unwrap().c))
                .collect();
            let slope = ls_slope(&eps.iter().map(|e| libm::log(*e)).collect::<Vec<_>>(), &err.iter().map(|e| libm::log(*e)).collect::<Vec<_>>());
            assert!(slope >= 1.8, "k {k}: slope {slope}");
            let lead = marginal_leading(k, 1.0, 0.01).unwrap();
            let ex = marginal_exact(k, 1e-4).unwrap();
            assert!((lead.nu - ex.nu).norm() < 1e-3 && abs(lead.omega - ex.omega) < 1e-3);
        }
    }

    #[test]
    fn speed_decreases_with_transverse_wavenumber() {
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let c = marginal_exact(i as f64 / 100.0, 0.09).unwrap().c;
            assert!(c < prev);
            prev = c;
        }
        assert!(marginal_exact(1.0, 0.1).is_err() && marginal_exact(0.0, 0.0).is_err());
    }

    #[test]
    fn leading_speed_matches_critical_speed() {
        let eps = 0.1;
        let p = ModelParams::hex(1.0, 1.0, 1.0, -3.0, -6.0);
        for spec in [AngleSpec::AxisX, AngleSpec::Rational { p: 2, q: 1 }, AngleSpec::Rational { p: 1, q: 1 }] {
            let d = make_direction(LatticeKind::Hex, spec).unwrap();
            let modes = trivial_mode_classification(&p, &d).unwrap();
            for m in modes.iter().filter(|m| m.dk_sq > 0.0) {
                let kp = crate::lattice::LatticeVector::mode(LatticeKind::Hex, m.mode).dot(d.d_perp);
                let c = marginal_leading(kp, 1.0, eps).unwrap().c;
                assert!(abs(c - eps * m.c_crit) < 1e-12);
            }
        }
        let d6 = make_direction(LatticeKind::Hex, AngleSpec::Rational { p: 1, q: 1 }).unwrap();
        let (c, kp) = predicted_speed(&d6, 1.0, 0.3).unwrap();
        assert!(abs(abs(kp) - 0.5) < 1e-12 && abs(c - 1.0392304845413263) < 1e-12);
    }
}
