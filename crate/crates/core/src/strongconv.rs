//! The norm obstruction, quantified: exact trace moments of
//! z = S + S^-1 + T + T^-1 over SL2(Z) give certified lower bounds on the
//! regular-representation norm of z, which plateau strictly below 4 — while
//! every finite-dimensional representation pulled back from a finite
//! quotient SL4(Z/N) pins the norm to exactly 4.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::modring::ModMatrix;
use crate::reps::{rep_from_descriptor, UnitaryRep};
use crate::tolerances;

/// Largest supported moment index: coefficients of z^(2n) stay below 4^(2n),
/// so 14 keeps every intermediate far inside 128-bit range.
pub const MAX_MOMENT_INDEX: usize = 14;

/// Exact 2x2 integer matrix, the group element type for the group ring.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct IntMat2(pub [i64; 4]);

impl IntMat2 {
    pub fn identity() -> Self {
        IntMat2([1, 0, 0, 1])
    }

    pub fn mul(&self, other: &IntMat2) -> Option<IntMat2> {
        let a = &self.0;
        let b = &other.0;
        let e = |x: i64, y: i64, z: i64, w: i64| -> Option<i64> {
            x.checked_mul(y)?.checked_add(z.checked_mul(w)?)
        };
        Some(IntMat2([
            e(a[0], b[0], a[1], b[2])?,
            e(a[0], b[1], a[1], b[3])?,
            e(a[2], b[0], a[3], b[2])?,
            e(a[2], b[1], a[3], b[3])?,
        ]))
    }

    pub fn det(&self) -> i64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    /// Inverse, valid for determinant +1.
    pub fn inverse(&self) -> IntMat2 {
        let [a, b, c, d] = self.0;
        IntMat2([d, -b, -c, a])
    }

    /// Reduction mod N, embedded in the upper-left block of SL4(Z/N).
    pub fn reduce_embed(&self, modulus: u32) -> Result<ModMatrix> {
        ModMatrix::new(2, modulus, &self.0)?.embed_into(4, 0)
    }
}

/// S of order 4 and the shear T; together they generate SL2(Z).
pub fn std_generators() -> (IntMat2, IntMat2) {
    (IntMat2([0, -1, 1, 0]), IntMat2([1, 1, 0, 1]))
}

/// Finitely supported integer element of the group ring of SL2(Z).
#[derive(Clone, Debug, Default)]
pub struct GroupRingElement {
    coeffs: HashMap<IntMat2, i128>,
}

impl GroupRingElement {
    pub fn delta(g: IntMat2) -> Self {
        let mut coeffs = HashMap::new();
        coeffs.insert(g, 1);
        GroupRingElement { coeffs }
    }

    /// z = S + S^-1 + T + T^-1.
    pub fn standard_z() -> Self {
        let (s, t) = std_generators();
        let mut coeffs = HashMap::new();
        for g in [s, s.inverse(), t, t.inverse()] {
            *coeffs.entry(g).or_insert(0) += 1;
        }
        GroupRingElement { coeffs }
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, g: &IntMat2) -> i128 {
        self.coeffs.get(g).copied().unwrap_or(0)
    }

    /// Canonical trace: the coefficient at the identity.
    pub fn trace(&self) -> i128 {
        self.coefficient(&IntMat2::identity())
    }

    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let overflow = || Error::Internal("group ring coefficient overflow".into());
        let mut coeffs: HashMap<IntMat2, i128> = HashMap::new();
        for (a, &ca) in &self.coeffs {
            for (b, &cb) in &other.coeffs {
                let ab = a.mul(b).ok_or_else(overflow)?;
                let term = ca.checked_mul(cb).ok_or_else(overflow)?;
                let slot = coeffs.entry(ab).or_insert(0);
                *slot = slot.checked_add(term).ok_or_else(overflow)?;
            }
        }
        coeffs.retain(|_, c| *c != 0);
        Ok(GroupRingElement { coeffs })
    }
}

/// a_n = tau(z^(2n)) for n = 1..n_max, with the derived root bounds
/// b_n = a_n^(1/2n).
#[derive(Clone, Debug, Serialize)]
pub struct MomentSequence {
    pub n_max: usize,
    pub a: Vec<u64>,
    pub b: Vec<f64>,
}

/// b_n = a_n^(1/2n): each is a certified lower bound for the regular
/// representation norm of z, and log-convexity makes the sequence
/// nondecreasing.
pub fn lower_bounds(a: &[u64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(i, &an)| (an as f64).powf(1.0 / (2 * (i + 1)) as f64))
        .collect()
}

/// Exact even trace moments of z, by iterated convolution: with
/// w_n = z^n and z symmetric under inversion, tau(z^(2n)) is the
/// coefficient-square sum of w_n.
pub fn moments(n_max: usize) -> Result<MomentSequence> {
    if n_max == 0 || n_max > MAX_MOMENT_INDEX {
        return Err(Error::MomentIndexOutOfRange(n_max, MAX_MOMENT_INDEX));
    }
    let z = GroupRingElement::standard_z();
    let mut w = GroupRingElement::delta(IntMat2::identity());
    let mut a = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        w = w.convolve(&z)?;
        let mut sum: i128 = 0;
        for &c in w.coeffs.values() {
            sum = sum
                .checked_add(c.checked_mul(c).ok_or_else(|| {
                    Error::Internal("moment accumulation overflow".into())
                })?)
                .ok_or_else(|| Error::Internal("moment accumulation overflow".into()))?;
        }
        a.push(u64::try_from(sum).map_err(|_| {
            Error::Internal("moment exceeds the declared growth bound".into())
        })?);
    }

    // Cauchy-Schwarz on the moment functional: a_{n+1} a_{n-1} >= a_n^2,
    // exactly, in integers; hence the root sequence is nondecreasing.
    for i in 1..a.len() {
        if i + 1 < a.len() {
            let lhs = a[i + 1] as i128 * a[i - 1] as i128;
            let rhs = a[i] as i128 * a[i] as i128;
            if lhs < rhs {
                return Err(Error::Internal(format!(
                    "moment log-convexity violated at n={}",
                    i + 1
                )));
            }
        }
    }
    let b = lower_bounds(&a);
    for i in 1..b.len() {
        if b[i] + tolerances::MONOTONE_SLACK < b[i - 1] {
            return Err(Error::Internal(format!(
                "lower bounds decreased at n={}",
                i + 1
            )));
        }
    }
    if let Some(&last) = b.last() {
        if last >= 4.0 {
            return Err(Error::Internal(
                "lower bound reached 4; some length-2n word count is impossible".into(),
            ));
        }
    }
    Ok(MomentSequence { n_max, a, b })
}

/// Largest eigenvalue of rho(S) + rho(S)* + rho(T) + rho(T)* for a
/// representation of SL4(Z/N) restricted to the embedded upper-left SL2.
/// Equals 4 exactly when the restriction has an invariant vector.
pub fn rep_norm(rep: &UnitaryRep) -> Result<f64> {
    let level = rep.level();
    let (s, t) = std_generators();
    let rs = rep.eval(&s.reduce_embed(level)?)?;
    let rt = rep.eval(&t.reduce_embed(level)?)?;
    let m = &rs + rs.adjoint() + &rt + rt.adjoint();
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    Ok(eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Serialize)]
pub struct RepNormLine {
    pub descriptor: Value,
    pub dim: usize,
    pub norm: f64,
}

#[derive(Serialize)]
pub struct GapReport {
    pub moments: MomentSequence,
    pub norms: Vec<RepNormLine>,
    /// Last lower bound minus its predecessor (0 when n_max = 1).
    pub plateau_delta: f64,
    /// The certified lower bound at n_max; always strictly below 4.
    pub regular_bound: f64,
    /// True when every listed finite-dimensional norm is 4 within 1e-9.
    pub all_norms_four: bool,
}

/// The two sides of the obstruction in one report: the regular
/// representation stays bounded away from 4, the finite quotients reach it.
pub fn gap_report(n_max: usize, descriptors: &[Value], cap: usize) -> Result<GapReport> {
    let ms = moments(n_max)?;
    let mut norms = Vec::new();
    let mut all_four = true;
    for desc in descriptors {
        let rep = rep_from_descriptor(desc, cap)?;
        let norm = rep_norm(&rep)?;
        all_four &= (norm - 4.0).abs() <= tolerances::NORM;
        norms.push(RepNormLine { descriptor: desc.clone(), dim: rep.dim(), norm });
    }
    let b = &ms.b;
    let plateau_delta = if b.len() >= 2 {
        b[b.len() - 1] - b[b.len() - 2]
    } else {
        0.0
    };
    let regular_bound = *b.last().expect("n_max >= 1");
    Ok(GapReport { moments: ms, norms, plateau_delta, regular_bound, all_norms_four: all_four })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reps::{perm_rep_nonzero, perm_rep_vectors, trivial_rep};
    use serde_json::json;

    #[test]
    fn generator_relations() {
        let (s, t) = std_generators();
        let s2 = s.mul(&s).unwrap();
        assert_eq!(s2, IntMat2([-1, 0, 0, -1]));
        let s4 = s2.mul(&s2).unwrap();
        assert_eq!(s4, IntMat2::identity());
        let st = s.mul(&t).unwrap();
        let mut p = IntMat2::identity();
        for _ in 0..6 {
            p = p.mul(&st).unwrap();
        }
        assert_eq!(p, IntMat2::identity());
        assert_eq!(s.det(), 1);
        assert_eq!(t.det(), 1);
        assert_eq!(s.mul(&s.inverse()).unwrap(), IntMat2::identity());
    }

    #[test]
    fn empty_word_and_first_moment() {
        assert_eq!(GroupRingElement::delta(IntMat2::identity()).trace(), 1);
        let ms = moments(1).unwrap();
        // of the 16 length-2 words only the four x x^-1 patterns reach the
        // identity: S^2 = -I is not the identity in SL2(Z)
        assert_eq!(ms.a, vec![4]);
        assert!((ms.b[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_word_enumeration_matches_convolution() {
        let (s, t) = std_generators();
        let gens = [s, s.inverse(), t, t.inverse()];
        let ms = moments(4).unwrap();
        for n in 1..=4usize {
            let len = 2 * n;
            let mut count: u64 = 0;
            let mut stack = vec![(IntMat2::identity(), 0usize)];
            while let Some((m, depth)) = stack.pop() {
                if depth == len {
                    if m == IntMat2::identity() {
                        count += 1;
                    }
                    continue;
                }
                for g in &gens {
                    stack.push((m.mul(g).unwrap(), depth + 1));
                }
            }
            assert_eq!(count, ms.a[n - 1], "n={n}");
        }
    }

    #[test]
    fn moments_match_the_frozen_reference_sequence() {
        // cross-checked against an independent word-walk computation kept
        // outside this tree; the first four entries are also re-derived by
        // the brute-force test above
        let expected: [u64; 12] = [
            4,
            30,
            308,
            3654,
            46364,
            609916,
            8207672,
            112234694,
            1553487212,
            21710425300,
            305804198616,
            4335802122524,
        ];
        let ms = moments(12).unwrap();
        assert_eq!(ms.a, expected);
    }

    #[test]
    fn bounds_are_monotone_log_convex_and_below_four() {
        let ms = moments(12).unwrap();
        for i in 2..ms.a.len() {
            let lhs = ms.a[i] as i128 * ms.a[i - 2] as i128;
            let rhs = ms.a[i - 1] as i128 * ms.a[i - 1] as i128;
            assert!(lhs >= rhs, "log-convexity at {}", i + 1);
        }
        for i in 1..ms.b.len() {
            assert!(ms.b[i] >= ms.b[i - 1] - 1e-12);
        }
        let last = *ms.b.last().unwrap();
        assert!(last < 3.95);
        assert!(ms.b[11] - ms.b[10] < 0.05);
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(matches!(moments(0), Err(Error::MomentIndexOutOfRange(0, 14))));
        assert!(matches!(moments(15), Err(Error::MomentIndexOutOfRange(15, 14))));
    }

    #[test]
    fn finite_quotient_norms_are_exactly_four() {
        assert!((rep_norm(&trivial_rep(4, 2).unwrap()).unwrap() - 4.0).abs() < 1e-12);
        let r15 = perm_rep_nonzero(4, 2).unwrap();
        assert!((rep_norm(&r15).unwrap() - 4.0).abs() <= tolerances::NORM);
        let r256 = perm_rep_vectors(4, 4).unwrap();
        assert!((rep_norm(&r256).unwrap() - 4.0).abs() <= tolerances::NORM);
    }

    #[test]
    fn gap_report_contrasts_the_two_sides() {
        let report = gap_report(
            6,
            &[
                json!({"type": "perm", "space": "nonzero:Z2^4", "level": 2}),
                json!({"type": "perm", "space": "trivial", "level": 2}),
            ],
            1_000_000,
        )
        .unwrap();
        assert!(report.all_norms_four);
        assert_eq!(report.norms.len(), 2);
        assert_eq!(report.norms[0].dim, 15);
        assert!(report.regular_bound < 4.0);

        let bare = gap_report(1, &[], 1_000_000).unwrap();
        assert!(bare.norms.is_empty());
        assert_eq!(bare.plateau_delta, 0.0);
        assert!((bare.regular_bound - 2.0).abs() < 1e-15);
    }
}
