//! Exact arithmetic in Z[zeta_e] via power-basis coordinates mod the e-th
//! cyclotomic polynomial.
//!
//! Character values are stored as multiplicity vectors over all e-th roots of
//! unity; orthogonality sums are verified exactly by mapping each power
//! zeta^s to its coordinate vector and comparing integer coordinates, which
//! avoids both floating error and coefficient blowup.

use crate::fp::factorize;

pub fn euler_phi(e: u64) -> u64 {
    factorize(e).iter().fold(e, |acc, &(p, _)| acc / p * (p - 1))
}

/// Coefficients of the e-th cyclotomic polynomial, constant term first.
///
/// Computed by exact division of x^e - 1 by the product of Phi_d over proper
/// divisors d | e.
pub fn cyclotomic_polynomial(e: u64) -> Vec<i64> {
    assert!(e >= 1);
    let mut table: Vec<Vec<i64>> = Vec::new();
    for d in 1..=e {
        if e % d != 0 {
            table.push(Vec::new());
            continue;
        }
        // x^d - 1
        let mut num = vec![0i64; d as usize + 1];
        num[0] = -1;
        num[d as usize] = 1;
        for dd in 1..d {
            if d % dd == 0 {
                num = poly_div_exact(&num, &table[dd as usize - 1]);
            }
        }
        table.push(num);
    }
    table.pop().unwrap()
}

/// Exact polynomial division (remainder must vanish; panics otherwise since
/// callers only divide x^d - 1 by known cyclotomic factors).
fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    assert!(dd <= dn && den[dd] == 1);
    let mut rem = num.to_vec();
    let mut quot = vec![0i64; dn - dd + 1];
    for k in (0..=dn - dd).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        if c != 0 {
            for (i, &dc) in den.iter().enumerate() {
                rem[k + i] -= c * dc;
            }
        }
    }
    assert!(rem.iter().all(|&c| c == 0), "non-exact cyclotomic division");
    quot
}

/// Power-basis coordinates of every zeta_e^s, plus helpers for exact sums.
#[derive(Debug, Clone)]
pub struct CycloCtx {
    pub e: u64,
    pub phi: usize,
    /// coords[s] = coordinates of zeta^s in the basis 1, zeta, ..., zeta^(phi-1)
    coords: Vec<Vec<i64>>,
    minimal_poly: Vec<i64>,
}

impl CycloCtx {
    pub fn new(e: u64) -> Self {
        let minimal_poly = cyclotomic_polynomial(e);
        let phi = minimal_poly.len() - 1;
        let mut coords = Vec::with_capacity(e as usize);
        let mut cur = vec![0i64; phi.max(1)];
        cur[0] = 1;
        for _ in 0..e {
            coords.push(cur.clone());
            cur = shift_reduce(&cur, &minimal_poly);
        }
        CycloCtx { e, phi, coords, minimal_poly }
    }

    pub fn coords(&self, s: u64) -> &[i64] {
        &self.coords[(s % self.e) as usize]
    }

    /// Exact coordinates of sum_s spectrum[s] * zeta^s.
    pub fn value(&self, spectrum: &[i128]) -> Vec<i128> {
        assert_eq!(spectrum.len(), self.e as usize);
        let mut out = vec![0i128; self.phi.max(1)];
        for (s, &c) in spectrum.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (k, &q) in self.coords[s].iter().enumerate() {
                out[k] += c * q as i128;
            }
        }
        out
    }

    /// Is sum_s spectrum[s] * zeta^s equal to the rational integer `target`?
    pub fn equals_integer(&self, spectrum: &[i128], target: i128) -> bool {
        let v = self.value(spectrum);
        v[0] == target && v[1..].iter().all(|&c| c == 0)
    }

    /// Product of two power-basis elements, reduced mod Phi_e.
    pub fn mul(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        let mut prod = vec![0i64; 2 * self.phi.max(1)];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        // reduce degrees >= phi downward
        for k in (self.phi..prod.len()).rev() {
            let c = prod[k];
            if c != 0 {
                prod[k] = 0;
                for i in 0..self.phi {
                    prod[k - self.phi + i] -= c * self.minimal_poly[i];
                }
            }
        }
        prod.truncate(self.phi.max(1));
        prod
    }
}

/// Multiply by x and reduce mod the minimal polynomial.
fn shift_reduce(cur: &[i64], minimal_poly: &[i64]) -> Vec<i64> {
    let phi = minimal_poly.len() - 1;
    if phi == 0 {
        return cur.to_vec();
    }
    let mut next = vec![0i64; phi];
    let lead = cur[phi - 1];
    next[0] = -lead * minimal_poly[0];
    for k in 1..phi {
        next[k] = cur[k - 1] - lead * minimal_poly[k];
    }
    next
}
