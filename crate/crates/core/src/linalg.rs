//! Dense complex linear algebra helpers shared by the representation code:
//! deterministic summation, Hermitian eigen rank counting, and orthonormal
//! images of column sets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Largest entrywise magnitude.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Deviation of `u` from unitarity, as `max |u u* - I|`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let d = u.nrows();
    let mut prod = u * u.adjoint();
    for i in 0..d {
        prod[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    max_abs(&prod)
}

/// Sum matrices with a fixed pairwise (binary-counter) reduction tree, so
/// the floating result depends only on the term order, never on chunking.
pub fn tree_sum(terms: impl IntoIterator<Item = DMatrix<Complex64>>) -> Option<DMatrix<Complex64>> {
    // stack[k] holds the sum of a block of 2^k consecutive terms
    let mut stack: Vec<Option<DMatrix<Complex64>>> = Vec::new();
    for term in terms {
        let mut carry = term;
        let mut level = 0usize;
        loop {
            if stack.len() == level {
                stack.push(Some(carry));
                break;
            }
            match stack[level].take() {
                None => {
                    stack[level] = Some(carry);
                    break;
                }
                Some(prev) => {
                    carry = prev + carry;
                    level += 1;
                }
            }
        }
    }
    let mut acc: Option<DMatrix<Complex64>> = None;
    for slot in stack {
        if let Some(m) = slot {
            acc = Some(match acc {
                None => m,
                Some(a) => m + a, // lower levels (later terms) on the right
            });
        }
    }
    acc
}

/// Count eigenvalues of a (numerically) Hermitian matrix above `cut`.
pub fn hermitian_eigen_rank(m: &DMatrix<Complex64>, cut: f64) -> usize {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    eig.eigenvalues.iter().filter(|&&e| e > cut).count()
}

/// Orthonormal basis of the column span, with the rank decided by a relative
/// cut on the pivoted-QR diagonal.  Returns a matrix with `rank` columns
/// (possibly zero).
pub fn orthonormal_image(cols: &DMatrix<Complex64>, rel_tol: f64) -> DMatrix<Complex64> {
    let d = cols.nrows();
    let qr = cols.clone().col_piv_qr();
    let (q, r, _p) = qr.unpack();
    let k = r.nrows().min(r.ncols());
    let mut diag: Vec<f64> = (0..k).map(|i| r[(i, i)].norm()).collect();
    let scale = diag.iter().cloned().fold(1.0f64, f64::max);
    diag.retain(|&v| v > rel_tol * scale);
    let rank = diag.len();
    let mut out = DMatrix::<Complex64>::zeros(d, rank);
    for j in 0..rank {
        out.set_column(j, &q.column(j));
    }
    out
}

/// `max |a - b|` over entries.
pub fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    max_abs(&(a - b))
}

/// Squared norm of `m v - lambda v` maximized over the columns `v` of `b`,
/// as a plain residual for eigen-relation checks.
pub fn eigen_residual(m: &DMatrix<Complex64>, b: &DMatrix<Complex64>, lambda: Complex64) -> f64 {
    let mut worst = 0.0f64;
    let prod = m * b;
    for j in 0..b.ncols() {
        let col: DVector<Complex64> = prod.column(j).into_owned() - b.column(j).into_owned() * lambda;
        worst = worst.max(col.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tree_sum_matches_plain_sum_and_is_order_deterministic() {
        let terms: Vec<DMatrix<Complex64>> = (0..37)
            .map(|k| DMatrix::from_fn(3, 3, |i, j| c((k * i + j) as f64 * 0.25, k as f64 * 0.125)))
            .collect();
        let tree = tree_sum(terms.clone()).unwrap();
        let mut plain = DMatrix::<Complex64>::zeros(3, 3);
        for t in &terms {
            plain += t;
        }
        assert!(max_diff(&tree, &plain) < 1e-12);
        let again = tree_sum(terms).unwrap();
        assert_eq!(tree, again); // bitwise
    }

    #[test]
    fn tree_sum_empty_is_none() {
        assert!(tree_sum(Vec::<DMatrix<Complex64>>::new()).is_none());
    }

    #[test]
    fn eigen_rank_counts_unit_eigenvalues() {
        // projector onto 2 of 4 coordinates
        let mut p = DMatrix::<Complex64>::zeros(4, 4);
        p[(0, 0)] = c(1.0, 0.0);
        p[(2, 2)] = c(1.0, 0.0);
        assert_eq!(hermitian_eigen_rank(&p, 0.5), 2);
        assert_eq!(hermitian_eigen_rank(&p, 1.5), 0);
    }

    #[test]
    fn orthonormal_image_finds_rank_and_orthonormality() {
        // three columns spanning a plane (third = sum of first two)
        let a = DMatrix::from_columns(&[
            DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]),
            DVector::from_vec(vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]),
            DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)]),
        ]);
        let q = orthonormal_image(&a, 1e-9);
        assert_eq!(q.ncols(), 2);
        let gram = q.adjoint() * &q;
        assert!(max_diff(&gram, &DMatrix::identity(2, 2)) < 1e-12);
        // original columns lie in the span: (I - QQ*)a = 0
        let resid = &a - &q * (q.adjoint() * &a);
        assert!(max_abs(&resid) < 1e-12);
    }

    #[test]
    fn unitarity_defect_zero_for_rotation() {
        let th = 0.3f64;
        let u = DMatrix::from_row_slice(2, 2, &[
            c(th.cos(), 0.0), c(-th.sin(), 0.0),
            c(th.sin(), 0.0), c(th.cos(), 0.0),
        ]);
        assert!(unitarity_defect(&u) < 1e-15);
        let not_u = &u * c(2.0, 0.0);
        assert!(unitarity_defect(&not_u) > 1.0);
    }
}
