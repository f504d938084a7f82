//! Symmetric eigensolvers for the small matrices of the Dicke sector.
//!
//! [`eig_sorted`] is a cyclic Jacobi solver returning a fully sorted, gauge
//! fixed eigendecomposition. [`eig_tridiagonal`] gives the same result for
//! tridiagonal input, which every Hamiltonian of the sector is, at a
//! fraction of the cost. [`tridiagonal_lowest`] computes only the lowest
//! few eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence
//! bisection, which is what gap scans at large `N` need.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const JACOBI_TOLERANCE: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const GAUGE_TIE_TOLERANCE: f64 = 1e-12;
const QL_MAX_ITERATIONS: usize = 60;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            self.vectors[(r, c)] * self.values[c]
        });
        scaled * self.vectors.transpose()
    }
}

/// Diagonalizes a real symmetric matrix.
///
/// Eigenvalues are sorted ascending. Each eigenvector is signed so that its
/// largest-magnitude component is positive; ties go to the lowest index.
pub fn eig_sorted(h: &DMatrix<f64>) -> Result<Eigen> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.ncols(),
        });
    }
    let scale = h.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut asym = 0.0_f64;
    for r in 0..n {
        for c in r + 1..n {
            asym = asym.max((h[(r, c)] - h[(c, r)]).abs());
        }
    }
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let (values, vectors) = jacobi(h)?;
    Ok(sort_and_fix_gauge(values, vectors))
}

/// Eigenpairs of the symmetric tridiagonal matrix with diagonal `diag` and
/// first off-diagonal `off`, by implicit QL with Wilkinson shifts.
///
/// Same ordering and gauge as [`eig_sorted`].
pub fn eig_tridiagonal(diag: &[f64], off: &[f64]) -> Result<Eigen> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            found: off.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DMatrix::identity(n, n);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > QL_MAX_ITERATIONS {
                return Err(Error::EigenNoConvergence {
                    sweeps: iterations,
                    off_norm: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[(k, i + 1)];
                    let zk = z[(k, i)];
                    z[(k, i + 1)] = s * zk + c * zk1;
                    z[(k, i)] = c * zk - s * zk1;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(sort_and_fix_gauge(d, z))
}

fn sort_and_fix_gauge(values: Vec<f64>, vectors: DMatrix<f64>) -> Eigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let sorted_values = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut sorted_vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v = vectors.column(src).into_owned();
        fix_gauge(v.as_mut_slice());
        sorted_vectors.set_column(col, &v);
    }
    Eigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

fn fix_gauge(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max - GAUGE_TIE_TOLERANCE)
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Cyclic Jacobi with row-major scratch storage. Returns unsorted eigenpairs.
fn jacobi(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            // symmetrize to remove any sub-tolerance asymmetry
            a[r * n + c] = 0.5 * (h[(r, c)] + h[(c, r)]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOLERANCE * frob.max(f64::MIN_POSITIVE);

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                s += a[r * n + c] * a[r * n + c];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // skip rotations that can no longer change the diagonal
                if sweeps > 4
                    && (app.abs() + 100.0 * apq.abs() == app.abs())
                    && (aqq.abs() + 100.0 * apq.abs() == aqq.abs())
                {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let k = a[r * n + q];
                    let new_p = c * g - s * k;
                    let new_q = s * g + c * k;
                    a[r * n + p] = new_p;
                    a[p * n + r] = new_p;
                    a[r * n + q] = new_q;
                    a[q * n + r] = new_q;
                }
                for r in 0..n {
                    let g = v[r * n + p];
                    let k = v[r * n + q];
                    v[r * n + p] = c * g - s * k;
                    v[r * n + q] = s * g + c * k;
                }
            }
        }
    }

    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = DMatrix::from_row_slice(n, n, &v);
    Ok((values, vectors))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
///
/// Uses the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum
/// is the Hermitian spectrum with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            // Hermitian part only
            let z = 0.5 * (m[(r, c)] + m[(c, r)].conj());
            big[(r, c)] = z.re;
            big[(r + n, c + n)] = z.re;
            big[(r + n, c)] = z.im;
            big[(r, c + n)] = -z.im;
        }
    }
    let (mut values, _) = jacobi(&big)?;
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// The `count` smallest eigenvalues of the symmetric tridiagonal matrix with
/// diagonal `diag` and sub/super-diagonal `off`, ascending.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], count: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(invalid("empty tridiagonal matrix"));
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: off.len(),
        });
    }
    if count > n {
        return Err(invalid(format!("requested {count} eigenvalues of a {n}x{n} matrix")));
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = 4.0 * f64::EPSILON * scale;
    let pad = tol + 1e-12 * scale;
    lo -= pad;
    hi += pad;

    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (mut a, mut b) = (out.last().copied().unwrap_or(lo).max(lo), hi);
        // previous eigenvalue is a valid lower bracket only if counts agree
        if sturm_count(diag, off, a) > k {
            a = lo;
        }
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_input_sorts() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = eig_sorted(&h).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 3.0]);
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(e.vectors, expect);
    }

    #[test]
    fn rejects_asymmetric() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_sorted(&h), Err(Error::NotSymmetric { .. })));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(eig_sorted(&rect).is_err());
    }

    #[test]
    fn gauge_tie_goes_to_lowest_index() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let e = eig_sorted(&h).unwrap();
        // ground state (1, 1)/sqrt2, excited (1, -1)/sqrt2
        assert!(e.vectors[(0, 0)] > 0.0 && e.vectors[(1, 0)] > 0.0);
        assert!(e.vectors[(0, 1)] > 0.0 && e.vectors[(1, 1)] < 0.0);
    }

    #[test]
    fn hermitian_spectrum_of_pauli_y() {
        let i = Complex64::new(0.0, 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)]);
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14);
        assert!((ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sturm_matches_jacobi() {
        let diag = [2.0, -1.0, 0.5, 3.0, -2.5];
        let off = [1.0, 0.3, -0.7, 2.0];
        let mut dense = DMatrix::from_diagonal(&DVector::from_row_slice(&diag));
        for i in 0..4 {
            dense[(i, i + 1)] = off[i];
            dense[(i + 1, i)] = off[i];
        }
        let full = eig_sorted(&dense).unwrap();
        let low = tridiagonal_lowest(&diag, &off, 5).unwrap();
        for k in 0..5 {
            assert!((full.values[k] - low[k]).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn sturm_resolves_degenerate_pair() {
        let diag = [1.0, 1.0, 2.0];
        let off = [0.0, 0.0];
        let low = tridiagonal_lowest(&diag, &off, 3).unwrap();
        assert!((low[0] - 1.0).abs() < 1e-14);
        assert!((low[1] - 1.0).abs() < 1e-14);
        assert!((low[2] - 2.0).abs() < 1e-14);
    }

    fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    }

    proptest! {
        #[test]
        fn reconstructs_random_symmetric(h in symmetric(5)) {
            let e = eig_sorted(&h).unwrap();
            let err = (e.reconstruct() - &h).norm();
            prop_assert!(err < 1e-10, "reconstruction error {err}");
            let gram = e.vectors.transpose() * &e.vectors;
            prop_assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-12);
            for k in 1..5 {
                prop_assert!(e.values[k] >= e.values[k - 1]);
            }
            for k in 0..5 {
                let col = e.vectors.column(k);
                let imax = col.iamax();
                prop_assert!(col[imax] > 0.0 || (col[imax].abs() - col.amax()).abs() < 1e-12);
            }
        }

        #[test]
        fn tridiagonal_matches_jacobi(
            diag in proptest::collection::vec(-5.0f64..5.0, 1..12),
            seed in proptest::collection::vec(-2.0f64..2.0, 11),
        ) {
            let n = diag.len();
            let off: Vec<f64> = seed[..n - 1].to_vec();
            let h = DMatrix::from_fn(n, n, |r, c| {
                if r == c { diag[r] } else if r + 1 == c { off[r] } else if c + 1 == r { off[c] } else { 0.0 }
            });
            let t = eig_tridiagonal(&diag, &off).unwrap();
            let j = eig_sorted(&h).unwrap();
            prop_assert!((t.reconstruct() - &h).amax() < 1e-12);
            let gram = t.vectors.transpose() * &t.vectors;
            prop_assert!((gram - DMatrix::identity(n, n)).amax() < 1e-12);
            for k in 0..n {
                prop_assert!((t.values[k] - j.values[k]).abs() < 1e-11);
            }
        }

        #[test]
        fn hermitian_eigenvalues_real_case_agree(h in symmetric(4)) {
            let e = eig_sorted(&h).unwrap();
            let hc = h.map(|v| Complex64::new(v, 0.0));
            let ev = hermitian_eigenvalues(&hc).unwrap();
            for k in 0..4 {
                prop_assert!((ev[k] - e.values[k]).abs() < 1e-10);
            }
        }
    }
}
