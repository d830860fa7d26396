//! Dormand-Prince 5(4) with PI step-size control and the fifth-order
//! continuous extension.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, powf, sqrt};
use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    /// Largest allowed step.
    pub h_max: f64,
    /// Steps below this size count as a blow-up.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, h0: None, h_max: f64::INFINITY, h_min: 1e-12, max_steps: 1_000_000 }
    }
}

impl OdeOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Self::default() }
    }
}

/// An accepted step with its dense interpolant.
#[derive(Debug, Clone)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub y1: Vec<f64>,
    rcont: [Vec<f64>; 5],
}

impl Step {
    /// Interpolated state at `t` in `[t0, t1]`.
    pub fn dense(&self, t: f64) -> Vec<f64> {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

/// Whether to keep integrating after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Summary of a finished integration.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub stopped: bool,
}

fn weighted_rms(e: &[f64], y0: &[f64], y1: &[f64], o: &OdeOptions) -> f64 {
    let n = e.len() as f64;
    let s: f64 = e
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(ei, (a, b))| {
            let sk = o.atol + o.rtol * abs(*a).max(abs(*b));
            (ei / sk) * (ei / sk)
        })
        .sum();
    sqrt(s / n)
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], k1: &[f64], dir: f64, o: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let zeros = vec![0.0; y0.len()];
    let dnf = weighted_rms(k1, y0, &zeros, o);
    let dny = weighted_rms(y0, y0, &zeros, o);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(o.h_max);
    let y1: Vec<f64> = y0.iter().zip(k1).map(|(y, k)| y + dir * h * k).collect();
    let mut k2 = vec![0.0; y0.len()];
    f(t0 + dir * h, &y1, &mut k2);
    let diff: Vec<f64> = k2.iter().zip(k1).map(|(a, b)| a - b).collect();
    let der2 = weighted_rms(&diff, y0, &zeros, o) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (1e-6f64).max(h * 1e-3) } else { powf(0.01 / der12, 0.2) };
    (100.0 * h).min(h1).min(o.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observer` after
/// every accepted step.
pub fn integrate<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, o: &OdeOptions, mut observer: O) -> Result<OdeOutcome>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&Step) -> Control,
{
    if !(o.rtol > 0.0 && o.atol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be positive".into()));
    }
    if !(t0.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidParameter("integration span must be finite".into()));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = OdeOutcome { t, y: y.clone(), accepted: 0, rejected: 0, stopped: false };
    if t_end == t0 {
        return Ok(out);
    }
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    f(t, &y, &mut k1);
    let mut h = match o.h0 {
        Some(h) => h.min(o.h_max),
        None => initial_step(&mut f, t, &y, &k1, dir, o),
    };
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let (facc1, facc2) = (5.0, 0.1);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    for _ in 0..o.max_steps {
        if abs(h) < o.h_min.max(abs(t) * 4.0 * f64::EPSILON) {
            return Err(Error::Diverged { xi: t });
        }
        let mut last = false;
        if (t + dir * h - t_end) * dir >= 0.0 {
            h = abs(t_end - t);
            last = true;
        }
        let hs = dir * h;
        for i in 0..n {
            ys[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + hs, &ys, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + hs, &y1, &mut k7);
        for i in 0..n {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = weighted_rms(&err, &y, &y1, o);
        if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            h *= 0.1;
            last_rejected = true;
            out.rejected += 1;
            continue;
        }
        let fac11 = powf(e, expo1);
        if e <= 1.0 {
            let fac = (fac11 / powf(facold, beta) / safe).clamp(facc2, facc1);
            facold = e.max(1e-4);
            let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| hs * k1[i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - hs * k7[i] - bspl[i]).collect();
            let r5: Vec<f64> = (0..n)
                .map(|i| hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            let t1 = if last { t_end } else { t + hs };
            let step = Step { t0: t, t1, y1: y1.clone(), rcont: [y.clone(), ydiff, bspl, r4, r5] };
            t = t1;
            y.copy_from_slice(&y1);
            core::mem::swap(&mut k1, &mut k7);
            out.accepted += 1;
            let ctrl = observer(&step);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew.min(o.h_max);
            if ctrl == Control::Stop {
                out.stopped = true;
                break;
            }
            if last {
                break;
            }
        } else {
            h /= (fac11 / safe).min(facc1);
            last_rejected = true;
            out.rejected += 1;
        }
    }
    if !out.stopped && t != t_end {
        return Err(Error::Numerical("maximum number of steps reached".into()));
    }
    out.t = t;
    out.y = y;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin};

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let o = OdeOptions::tol(1e-10, 1e-12);
        let r = integrate(|_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        }, 0.0, &[1.0, 0.0], 10.0, &o, |_| Control::Continue)
        .unwrap();
        assert!(abs(r.y[0] - cos(10.0)) < 1e-8 && abs(r.y[1] + sin(10.0)) < 1e-8);
        assert_eq!(r.t, 10.0);
    }

    #[test]
    fn dense_output_is_fifth_order_accurate() {
        let o = OdeOptions::tol(1e-9, 1e-12);
        let mut worst: f64 = 0.0;
        integrate(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, &o, |s| {
            for k in 0..=10 {
                let t = s.t0 + (s.t1 - s.t0) * k as f64 / 10.0;
                worst = worst.max(abs(s.dense(t)[0] - libm::exp(-t)));
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn observer_can_stop() {
        let o = OdeOptions::default();
        let r = integrate(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 100.0, &o, |s| {
            if s.y1[0] > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(r.stopped && r.t < 100.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let o = OdeOptions::default();
        let r = integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &o, |_| Control::Continue);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }

    #[test]
    fn backward_integration() {
        let o = OdeOptions::tol(1e-10, 1e-12);
        let r = integrate(|_, y, dy| dy[0] = y[0], 1.0, &[1.0], 0.0, &o, |_| Control::Continue).unwrap();
        assert!(abs(r.y[0] - libm::exp(-1.0)) < 1e-9);
    }
}
