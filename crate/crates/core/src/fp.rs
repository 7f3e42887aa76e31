//! Arithmetic in prime fields F_l (l < 2^31) and the small dense linear
//! algebra over them needed by the character-table solver.

use crate::error::{Error, Result};

/// Trial-division primality test; fine for the < 2^31 range used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Prime factorisation by trial division, as (prime, exponent) pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// The field F_l for a prime l < 2^31. All element values are canonical
/// representatives in 0..l.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    pub l: u64,
}

impl Fp {
    pub fn new(l: u64) -> Self {
        debug_assert!(is_prime(l) && l < (1 << 31));
        Fp { l }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.l {
            s - self.l
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.l - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.l - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.l
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.l;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    #[inline]
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.l != 0);
        self.pow(a, self.l - 2)
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: u64) -> u64 {
        let mut ord = self.l - 1;
        for (p, _) in factorize(self.l - 1) {
            while ord % p == 0 && self.pow(a, ord / p) == 1 {
                ord /= p;
            }
        }
        ord
    }

    /// Smallest primitive root mod l.
    pub fn primitive_root(&self) -> u64 {
        let factors = factorize(self.l - 1);
        'cand: for g in 2..self.l {
            for (p, _) in &factors {
                if self.pow(g, (self.l - 1) / p) == 1 {
                    continue 'cand;
                }
            }
            return g;
        }
        unreachable!("every prime field has a primitive root");
    }

    /// An element of exact multiplicative order d (requires d | l-1).
    pub fn root_of_unity(&self, d: u64) -> u64 {
        debug_assert!((self.l - 1) % d == 0);
        self.pow(self.primitive_root(), (self.l - 1) / d)
    }

    /// Tonelli-Shanks square root; `None` for quadratic non-residues.
    pub fn sqrt(&self, a: u64) -> Option<u64> {
        let l = self.l;
        if a == 0 {
            return Some(0);
        }
        if l == 2 {
            return Some(a);
        }
        if self.pow(a, (l - 1) / 2) != 1 {
            return None;
        }
        if l % 4 == 3 {
            return Some(self.pow(a, (l + 1) / 4));
        }
        // Write l-1 = q * 2^s with q odd.
        let mut q = l - 1;
        let mut s = 0u32;
        while q % 2 == 0 {
            q /= 2;
            s += 1;
        }
        let mut z = 2;
        while self.pow(z, (l - 1) / 2) == 1 {
            z += 1;
        }
        let mut m = s;
        let mut c = self.pow(z, q);
        let mut t = self.pow(a, q);
        let mut r = self.pow(a, (q + 1) / 2);
        while t != 1 {
            let mut i = 0u32;
            let mut tt = t;
            while tt != 1 {
                tt = self.mul(tt, tt);
                i += 1;
            }
            let b = self.pow(c, 1 << (m - i - 1));
            m = i;
            c = self.mul(b, b);
            t = self.mul(t, c);
            r = self.mul(r, b);
        }
        Some(r)
    }
}

/// Dense matrix over F_l, row-major. Sizes here are tiny (at most the number
/// of conjugacy classes squared), so no effort is spent on blocking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
    pub field: Fp,
}

impl FpMatrix {
    pub fn zero(field: Fp, rows: usize, cols: usize) -> Self {
        FpMatrix { rows, cols, data: vec![0; rows * cols], field }
    }

    pub fn identity(field: Fp, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.field.l;
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.rows);
        let f = self.field;
        let mut out = FpMatrix::zero(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = &mut out.data[i * other.cols + j];
                    *v = (*v + a * other.at(k, j)) % f.l;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        let f = self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                for j in 0..self.cols {
                    acc = f.add(acc, f.mul(self.at(i, j), v[j]));
                }
                acc
            })
            .collect()
    }

    /// In-place row reduction to reduced echelon form; returns pivot columns.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.at(r, col) != 0) else {
                continue;
            };
            for j in 0..self.cols {
                self.data.swap(row * self.cols + j, p * self.cols + j);
            }
            let inv = f.inv(self.at(row, col));
            for j in col..self.cols {
                let v = f.mul(self.at(row, j), inv);
                self.set(row, j, v);
            }
            for r in 0..self.rows {
                if r != row && self.at(r, col) != 0 {
                    let factor = self.at(r, col);
                    for j in col..self.cols {
                        let v = f.sub(self.at(r, j), f.mul(factor, self.at(row, j)));
                        self.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().len()
    }

    /// Basis of the right null space, as column vectors.
    pub fn kernel_basis(&self) -> Vec<Vec<u64>> {
        let f = self.field;
        let mut m = self.clone();
        let pivots = m.row_reduce();
        let mut basis = Vec::new();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut vec = vec![0u64; self.cols];
            vec[free] = 1;
            for (r, &p) in pivots.iter().enumerate() {
                vec[p] = f.neg(m.at(r, free));
            }
            basis.push(vec);
        }
        basis
    }

    /// Solve self * x = b for a single solution (columns of self must be
    /// independent); returns `None` when inconsistent.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        self.solve_multi(std::slice::from_ref(&b.to_vec()))
            .map(|mut cols| cols.pop().unwrap())
    }

    /// Solve self * X = B columnwise in one elimination pass; `None` when any
    /// column is inconsistent.
    pub fn solve_multi(&self, b_cols: &[Vec<u64>]) -> Option<Vec<Vec<u64>>> {
        let f = self.field;
        let extra = b_cols.len();
        let mut aug = FpMatrix::zero(f, self.rows, self.cols + extra);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.at(i, j));
            }
            for (k, col) in b_cols.iter().enumerate() {
                assert_eq!(col.len(), self.rows);
                aug.set(i, self.cols + k, col[i]);
            }
        }
        let pivots = aug.row_reduce();
        if pivots.iter().any(|&p| p >= self.cols) {
            return None; // inconsistent system
        }
        // rows below the pivot rows must be entirely zero on the RHS too
        for r in pivots.len()..self.rows {
            for k in 0..extra {
                if aug.at(r, self.cols + k) != 0 {
                    return None;
                }
            }
        }
        let mut out = vec![vec![0u64; self.cols]; extra];
        for (k, x) in out.iter_mut().enumerate() {
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = aug.at(r, self.cols + k);
            }
        }
        Some(out)
    }
}

/// Least prime l with l = 1 (mod e) and l > min, capped at 2^31.
pub fn least_prime_in_progression(e: u64, min: u64) -> Result<u64> {
    let mut candidate = e + 1;
    if candidate <= min {
        candidate += e * ((min - candidate) / e + 1);
    }
    while candidate < (1 << 31) {
        if is_prime(candidate) {
            return Ok(candidate);
        }
        candidate += e;
    }
    Err(Error::FieldSearchExhausted { e, min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small_cases() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(421));
        assert!(is_prime(337));
        assert!(!is_prime(341)); // 11 * 31
    }

    #[test]
    fn factorization_roundtrip() {
        for n in [2u64, 12, 420, 20160, 9999] {
            let f = factorize(n);
            let back: u64 = f.iter().map(|(p, e)| p.pow(*e)).product();
            assert_eq!(back, n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
    }

    #[test]
    fn field_ops() {
        let f = Fp::new(421);
        assert_eq!(f.mul(420, 420), 1); // (-1)^2
        assert_eq!(f.mul(f.inv(17), 17), 1);
        assert_eq!(f.pow(2, 420), 1); // Fermat
        let w = f.root_of_unity(420);
        assert_eq!(f.order(w), 420);
    }

    #[test]
    fn tonelli_shanks_all_residues() {
        for l in [7u64, 13, 337, 421] {
            let f = Fp::new(l);
            for a in 0..l {
                match f.sqrt(a) {
                    Some(r) => assert_eq!(f.mul(r, r), a),
                    None => assert_ne!(f.pow(a, (l - 1) / 2), 1),
                }
            }
        }
    }

    #[test]
    fn linear_algebra_rank_kernel_solve() {
        let f = Fp::new(7);
        let mut m = FpMatrix::zero(f, 3, 3);
        // rank-2 matrix: row3 = row1 + row2
        let rows = [[1u64, 2, 3], [4, 5, 6], [5, 0, 2]];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        assert_eq!(m.rank(), 2);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 1);
        assert!(m.mul_vec(&ker[0]).iter().all(|&v| v == 0));

        let id = FpMatrix::identity(f, 4);
        assert_eq!(id.rank(), 4);
        let b = vec![3, 1, 4, 1];
        assert_eq!(id.solve(&b), Some(b));
    }

    #[test]
    fn progression_search_matches_known_fields() {
        assert_eq!(least_prime_in_progression(6, 4).unwrap(), 7);
        assert_eq!(least_prime_in_progression(420, 284).unwrap(), 421);
        assert_eq!(least_prime_in_progression(84, 25).unwrap(), 337);
    }
}
