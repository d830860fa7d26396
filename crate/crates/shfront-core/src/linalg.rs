//! Small dense linear algebra: polynomial roots, eigenvalues of tiny
//! matrices, null vectors and a least-squares line fit.
//!
//! Eigenvalue iterations are delegated to `nalgebra`; balancing, root
//! polishing and the bookkeeping around them are local.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::math::{abs, sqrt};
use crate::{Error, Result};

/// Evaluates `sum c[k] z^k` (coefficients in ascending order).
pub fn polyval(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

/// Derivative coefficients, ascending order.
pub fn polyder(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, &ck)| ck * k as f64).collect()
}

/// Parlett-Reinsch balancing with powers of two, in place.
pub fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let radix = 2.0;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn complex_eigenvalues(m: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    let schur = m
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of a general real matrix.
pub fn real_matrix_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    complex_eigenvalues(m.map(|x| C64::new(x, 0.0)))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Roots of `sum c[k] z^k` with a nonzero leading coefficient.
///
/// Eigenvalues of the balanced companion matrix, then a guarded Newton
/// polish per root.
pub fn poly_roots(c: &[C64]) -> Result<Vec<C64>> {
    let n = c.len() - 1;
    let lead = c[n];
    if lead.norm() == 0.0 {
        return Err(Error::Numerical("zero leading coefficient".into()));
    }
    let mut comp = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    balance(&mut comp);
    let mut roots = complex_eigenvalues(comp)?;
    polish_roots(c, &mut roots);
    Ok(roots)
}

/// Newton steps that never move a root further than a third of the distance
/// to its nearest neighbour and stop as soon as the residual stops shrinking.
pub fn polish_roots(c: &[C64], roots: &mut [C64]) {
    let dc = polyder(c);
    for i in 0..roots.len() {
        let sep = roots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| (r - roots[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let mut z = roots[i];
        let mut pz = polyval(c, z).norm();
        for _ in 0..4 {
            let d = polyval(&dc, z);
            if d.norm() == 0.0 {
                break;
            }
            let step = polyval(c, z) / d;
            let cand = z - step;
            if (cand - roots[i]).norm() > sep / 3.0 {
                break;
            }
            let pc = polyval(c, cand).norm();
            if pc >= pz {
                break;
            }
            z = cand;
            pz = pc;
        }
        roots[i] = z;
    }
}

/// Unit vector spanning the (numerical) kernel of a square complex matrix.
pub fn null_vector(m: &DMatrix<C64>) -> Result<DVector<C64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Ok(vt.row(imin).transpose().map(|z| z.conj()))
}

/// Smallest singular value of a square complex matrix.
pub fn min_singular_value(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Modified Gram-Schmidt; columns whose residual norm drops below `tol`
/// are discarded.
pub fn orthonormalize(cols: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &out {
                let p: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= p * qi;
                }
            }
        }
        let n = sqrt(v.iter().map(|x| x * x).sum());
        if n > tol {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Orthonormal basis of the invariant subspace of `m` belonging to
/// eigenvalues with positive real part.
///
/// Newton iteration for the matrix sign function with determinant scaling,
/// then column-pivoted Gram-Schmidt on the spectral projector `(I + S)/2`.
pub fn unstable_subspace(m: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let n = m.nrows();
    let mut s = m.clone();
    for _ in 0..100 {
        let inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("matrix sign iteration hit a singular matrix".into()))?;
        let det = abs(s.determinant());
        let c = if det > 0.0 && det.is_finite() { crate::math::powf(det, -1.0 / n as f64) } else { 1.0 };
        let next = (&s * c + inv / c) * 0.5;
        let diff = (&next - &s).norm();
        let scale = next.norm();
        s = next;
        if diff <= 1e-13 * scale {
            break;
        }
    }
    let p = (DMatrix::<f64>::identity(n, n) + s) * 0.5;
    let rank = p.trace().round().max(0.0) as usize;
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| p.column(j).iter().copied().collect()).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for _ in 0..rank {
        let (jmax, nmax) = cols
            .iter()
            .enumerate()
            .map(|(j, c)| (j, norm2(c)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if nmax <= 1e-10 {
            return Err(Error::Numerical("unstable subspace is rank deficient".into()));
        }
        let q: Vec<f64> = cols[jmax].iter().map(|x| x / nmax).collect();
        for c in cols.iter_mut() {
            let d: f64 = c.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= d * qi;
            }
        }
        out.push(q);
    }
    Ok(orthonormalize(&out, 1e-12))
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let slope = crate::math::ls_slope(x, y);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    (slope, my - slope * mx)
}

/// Solves a small real linear system by Gaussian elimination with partial
/// pivoting.
pub fn solve_real(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.clone().lu();
    let x = lu
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::Numerical("singular linear system".into()))?;
    Ok(x.iter().copied().collect())
}

/// Maximum absolute value.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if abs(*x) > m { abs(*x) } else { m })
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Euclidean distance.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Dense real matrix from row slices.
pub fn from_rows(rows: &[&[f64]]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows[0].len();
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    DMatrix::from_row_slice(n, m, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn roots_of_product_of_linear_factors() {
        // (z-1)(z+2)(z-3i)(z+0.5+0.5i) expanded by repeated multiplication
        let rs = [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0), c(-0.5, -0.5)];
        let mut p = vec![c(1.0, 0.0)];
        for r in rs {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (k, pk) in p.iter().enumerate() {
                q[k + 1] += *pk;
                q[k] -= *pk * r;
            }
            p = q;
        }
        let got = poly_roots(&p).unwrap();
        for r in rs {
            let m = got.iter().map(|g| (g - r).norm()).fold(f64::INFINITY, f64::min);
            assert!(m < 1e-13, "{r} missing ({m})");
        }
    }

    #[test]
    fn symmetric_eigs_sorted() {
        let m = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = symmetric_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn null_vector_of_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let v = null_vector(&m).unwrap();
        let r = &m * &v;
        assert!(r.norm() < 1e-13);
        assert!((v.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gram_schmidt_drops_dependent_columns() {
        let q = orthonormalize(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]], 1e-12);
        assert_eq!(q.len(), 2);
        assert!((q[1][1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn line_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.5 * t - 1.0).collect();
        let (s, i) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
    }
}
