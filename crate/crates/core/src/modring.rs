//! Exact matrices over Z/N for n in {2,3,4}, N <= 256: the universal group
//! element of the toolkit.
//!
//! Entries are stored as canonical representatives in 0..N, so equality,
//! hashing and ordering are entrywise on canonical form. Determinants and
//! adjugates are computed on the integer lift (entries < 2^8 and n <= 4 keep
//! every intermediate far below 2^63), which avoids division in a ring with
//! zero divisors.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;
pub const MAX_MODULUS: u32 = 256;

/// Square matrix over Z/N. Copy-sized: entries pack into 16 bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModMatrix {
    n: u8,
    modulus: u32,
    entries: [u8; 16],
}

#[inline]
fn reduce(v: i64, modulus: u32) -> u8 {
    let m = modulus as i64;
    (((v % m) + m) % m) as u8
}

impl ModMatrix {
    pub fn new(n: usize, modulus: u32, entries: &[i64]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::BadDimension(n));
        }
        if modulus == 0 || modulus > MAX_MODULUS {
            return Err(Error::BadModulus(modulus as i64));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(n, entries.len()));
        }
        let mut packed = [0u8; 16];
        for (k, &v) in entries.iter().enumerate() {
            packed[k] = reduce(v, modulus);
        }
        Ok(ModMatrix { n: n as u8, modulus, entries: packed })
    }

    pub fn identity(n: usize, modulus: u32) -> Self {
        let mut m = ModMatrix::new(n, modulus, &vec![0; n * n]).expect("valid dims");
        for i in 0..n {
            m.entries[i * n + i] = reduce(1, modulus);
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Entry at (row, col), 0-based.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> u32 {
        debug_assert!(i < self.n() && j < self.n());
        self.entries[i * self.n() + j] as u32
    }

    pub fn is_identity(&self) -> bool {
        *self == ModMatrix::identity(self.n(), self.modulus)
    }

    /// Entries packed into one word; canonical because entries are canonical.
    /// Two matrices of equal shape and modulus collide iff they are equal.
    #[inline]
    pub fn key(&self) -> u128 {
        u128::from_le_bytes(self.entries)
    }

    /// Rebuild from a packed key (inverse of `key`); entries are validated
    /// against the modulus and unused positions must be zero.
    pub fn from_key(n: usize, modulus: u32, key: u128) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::BadDimension(n));
        }
        if modulus == 0 || modulus > MAX_MODULUS {
            return Err(Error::BadModulus(modulus as i64));
        }
        let entries = key.to_le_bytes();
        for (k, &v) in entries.iter().enumerate() {
            let in_range = k < n * n && (v as u32) < modulus;
            let unused_zero = k >= n * n && v == 0;
            if !in_range && !unused_zero {
                return Err(Error::Internal(format!("packed entry {v} at {k} out of range")));
            }
        }
        Ok(ModMatrix { n: n as u8, modulus, entries })
    }

    /// I + s*eps_ij with 1-based row i and column j, matching the visual
    /// numbering of matrix displays. i = j is rejected.
    pub fn elementary(i: usize, j: usize, s: i64, n: usize, modulus: u32) -> Result<Self> {
        if i == j {
            return Err(Error::DiagonalShift(i));
        }
        if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(Error::IndexOutOfRange(i, j, n));
        }
        let mut m = ModMatrix::identity(n, modulus);
        m.entries[(i - 1) * n + (j - 1)] = reduce(s, modulus);
        Ok(m)
    }

    pub fn mat_mul(&self, other: &ModMatrix) -> Result<ModMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n(), other.n()));
        }
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        let n = self.n();
        let mut out = *self;
        for i in 0..n {
            for j in 0..n {
                // max term 255*255, at most 4 terms: fits u32 comfortably
                let mut acc: u32 = 0;
                for k in 0..n {
                    acc += self.entry(i, k) * other.entry(k, j);
                }
                out.entries[i * n + j] = (acc % self.modulus) as u8;
            }
        }
        Ok(out)
    }

    /// Determinant of the integer lift, reduced mod N.
    pub fn det_mod(&self) -> u32 {
        reduce(self.int_det(), self.modulus) as u32
    }

    fn int_det(&self) -> i64 {
        let n = self.n();
        let e = |i: usize, j: usize| self.entries[i * n + j] as i64;
        match n {
            2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
            3 => {
                e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            }
            4 => {
                let mut det = 0i64;
                for j in 0..4 {
                    let minor = self.minor3(0, j);
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    det += sign * e(0, j) * minor;
                }
                det
            }
            _ => unreachable!(),
        }
    }

    /// 3x3 integer minor of a 4x4 matrix with row i and column j removed.
    fn minor3(&self, i: usize, j: usize) -> i64 {
        let n = self.n();
        let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let e = |a: usize, b: usize| self.entries[rows[a] * n + cols[b]] as i64;
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    }

    /// Integer cofactor expansion minor with row i, column j removed (any n).
    fn int_minor(&self, i: usize, j: usize) -> i64 {
        let n = self.n();
        let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let e = |a: usize, b: usize| self.entries[rows[a] * n + cols[b]] as i64;
        match n {
            2 => e(0, 0),
            3 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
            4 => {
                e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            }
            _ => unreachable!(),
        }
    }

    /// Inverse via adjugate times the modular inverse of the determinant.
    pub fn invert(&self) -> Result<ModMatrix> {
        let det = self.det_mod();
        let Some(det_inv) = unit_inverse(det, self.modulus) else {
            return Err(Error::NotInvertible { det, modulus: self.modulus });
        };
        let n = self.n();
        let mut out = *self;
        for i in 0..n {
            for j in 0..n {
                // adjugate: (i,j) entry is the (j,i) cofactor
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                let cof = reduce(sign * self.int_minor(j, i), self.modulus) as u64;
                out.entries[i * n + j] = ((cof * det_inv as u64) % self.modulus as u64) as u8;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> ModMatrix {
        let n = self.n();
        let mut out = *self;
        for i in 0..n {
            for j in 0..n {
                out.entries[i * n + j] = self.entries[j * n + i];
            }
        }
        out
    }

    pub fn pow(&self, mut exp: u64) -> ModMatrix {
        let mut base = *self;
        let mut acc = ModMatrix::identity(self.n(), self.modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mat_mul(&base).expect("same shape");
            }
            base = base.mat_mul(&base).expect("same shape");
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative order (the matrix must be invertible).
    pub fn mult_order(&self) -> u64 {
        let id = ModMatrix::identity(self.n(), self.modulus);
        let mut acc = *self;
        let mut k = 1u64;
        while acc != id {
            acc = acc.mat_mul(self).expect("same shape");
            k += 1;
            debug_assert!(k < 1 << 32, "non-invertible input to mult_order");
        }
        k
    }

    /// Reduce entries to a divisor of the modulus.
    pub fn reduce_to(&self, new_modulus: u32) -> Result<ModMatrix> {
        if new_modulus == 0 || self.modulus % new_modulus != 0 {
            return Err(Error::ModulusMismatch(self.modulus, new_modulus));
        }
        let entries: Vec<i64> = (0..self.n() * self.n()).map(|k| self.entries[k] as i64).collect();
        ModMatrix::new(self.n(), new_modulus, &entries)
    }

    /// Reinterpret entries at a multiple of the modulus (a section of the
    /// reduction map; entries keep their canonical representatives).
    pub fn lift_to(&self, new_modulus: u32) -> Result<ModMatrix> {
        if new_modulus == 0 || new_modulus % self.modulus != 0 {
            return Err(Error::ModulusMismatch(self.modulus, new_modulus));
        }
        let entries: Vec<i64> = (0..self.n() * self.n()).map(|k| self.entries[k] as i64).collect();
        ModMatrix::new(self.n(), new_modulus, &entries)
    }

    /// Upper-left embedding of a unimodular 2x2 block into dimension 4.
    pub fn embed_sl2(&self) -> Result<ModMatrix> {
        self.embed_block(2, 0)
    }

    /// Upper-left embedding of a unimodular 3x3 block into dimension 4.
    pub fn embed_sl3(&self) -> Result<ModMatrix> {
        self.embed_block(3, 0)
    }

    /// Embedding of a unimodular 2x2 block into rows/columns 2,3 of
    /// dimension 4 (the middle block position).
    pub fn embed_sl2_middle(&self) -> Result<ModMatrix> {
        self.embed_block(2, 1)
    }

    fn embed_block(&self, block: usize, offset: usize) -> Result<ModMatrix> {
        if self.n() != block {
            return Err(Error::DimensionMismatch(self.n(), block));
        }
        self.embed_into(4, offset)
    }

    /// Diagonal embedding into dimension `n` at row/column `offset`, padding
    /// with the identity.  Requires a unimodular block so the image stays in
    /// the special linear group.
    pub fn embed_into(&self, n: usize, offset: usize) -> Result<ModMatrix> {
        if n > MAX_DIM || self.n() + offset > n {
            return Err(Error::DimensionMismatch(self.n() + offset, n));
        }
        let det = self.det_mod();
        if det != 1 % self.modulus {
            return Err(Error::NotUnimodular { det, modulus: self.modulus });
        }
        let block = self.n();
        let mut out = ModMatrix::identity(n, self.modulus);
        for i in 0..block {
            for j in 0..block {
                out.entries[(i + offset) * n + (j + offset)] = self.entries[i * block + j];
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ModMatrix {
    /// Row-major integer rendering, e.g. `[[1,0],[2,3]]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n();
        write!(f, "[")?;
        for i in 0..n {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..n {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModMatrix(n={}, mod {}) {}", self.n, self.modulus, self)
    }
}

/// Inverse of a unit in Z/N by extended Euclid; `None` for non-units.
pub fn unit_inverse(a: u32, modulus: u32) -> Option<u32> {
    if modulus == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (modulus as i64, (a % modulus) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(reduce(t0, modulus) as u32)
}

/// A modulus N factored into prime powers, with precomputed recombination
/// weights so that split followed by combine is the identity.
#[derive(Debug, Clone)]
pub struct CrtSplitting {
    modulus: u32,
    factors: Vec<CrtFactor>,
}

#[derive(Debug, Clone, Copy)]
pub struct CrtFactor {
    pub p: u32,
    pub e: u32,
    pub pe: u32,
    /// (N/pe) * ((N/pe)^-1 mod pe), the idempotent-like recombination weight.
    weight: u64,
}

impl CrtSplitting {
    pub fn new(modulus: u32) -> Result<Self> {
        if modulus < 2 || modulus > MAX_MODULUS {
            return Err(Error::BadModulus(modulus as i64));
        }
        let mut factors = Vec::new();
        for (p, e) in crate::fp::factorize(modulus as u64) {
            let pe = (p as u32).pow(e);
            let rest = modulus / pe;
            let inv = unit_inverse(rest % pe, pe).expect("coprime cofactor");
            factors.push(CrtFactor { p: p as u32, e, pe, weight: rest as u64 * inv as u64 });
        }
        Ok(CrtSplitting { modulus, factors })
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn factors(&self) -> &[CrtFactor] {
        &self.factors
    }

    pub fn crt_split(&self, a: &ModMatrix) -> Result<Vec<ModMatrix>> {
        if a.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(a.modulus(), self.modulus));
        }
        self.factors.iter().map(|f| a.reduce_to(f.pe)).collect()
    }

    pub fn crt_combine(&self, parts: &[ModMatrix]) -> Result<ModMatrix> {
        if parts.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(parts.len(), self.factors.len()));
        }
        let n = parts.first().map(|m| m.n()).unwrap_or(0);
        for (part, f) in parts.iter().zip(&self.factors) {
            if part.modulus() != f.pe {
                return Err(Error::ModulusMismatch(part.modulus(), f.pe));
            }
            if part.n() != n {
                return Err(Error::DimensionMismatch(part.n(), n));
            }
        }
        let mut entries = vec![0i64; n * n];
        for (part, f) in parts.iter().zip(&self.factors) {
            for i in 0..n {
                for j in 0..n {
                    let term = part.entry(i, j) as u64 * f.weight % self.modulus as u64;
                    entries[i * n + j] = (entries[i * n + j] + term as i64) % self.modulus as i64;
                }
            }
        }
        ModMatrix::new(n, self.modulus, &entries)
    }
}
