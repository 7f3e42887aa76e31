//! Exact character tables of finite matrix groups via modular class algebra.
//!
//! The class algebra of a finite group acts on the space spanned by class
//! sums; its simultaneous eigenvectors are the central characters.  Working
//! modulo a prime `l ≡ 1 (mod exponent)` with `l > 2·sqrt(|G|)` makes every
//! character value a well-defined element of `F_l` (the field contains the
//! needed roots of unity) and keeps the integer data small enough to lift
//! back uniquely.  The pipeline is:
//!
//! 1. build the class matrices `M_i` with `(M_i)[j][k]` = number of ways
//!    `g_k` factors as (element of `C_i`)·(element of `C_j`);
//! 2. split the common eigenvector basis by seeded random combinations of
//!    the `M_i`;
//! 3. recover degrees from the second orthogonality relation (a square root
//!    in `F_l`, unambiguous because degrees are below `l/2`);
//! 4. lift each value to an exact multiplicity vector over the cyclotomic
//!    integers by a discrete Fourier transform along each cyclic subgroup.
//!
//! Everything after step 2 is deterministic; step 2 is deterministic given
//! the seed.  The table is re-verified exactly (over `Z[zeta]`, not floats)
//! before it is returned.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cyclotomic::CycloCtx;
use crate::error::{Error, Result};
use crate::fp::{least_prime_in_progression, Fp, FpMatrix};
use crate::grpstore::{class_matrix, ClassData, GroupStore};

/// Splitting rounds before we give up on a seed (plus two per class).
const MAX_SPLIT_ROUNDS: u32 = 64;

/// Largest cyclotomic order for which orthogonality is re-verified over
/// `Z[zeta]` rather than `F_l`; all named targets are far below it.
const EXACT_CYCLO_VERIFY_MAX_EXPONENT: u64 = 1024;

/// One row of the table: a single irreducible character.
#[derive(Debug, Clone, Serialize)]
pub struct Irreducible {
    pub degree: u64,
    /// Value on each conjugacy class, as an element of `F_l`.
    pub values_mod_l: Vec<u64>,
    /// Exact value on each class: `mult[k][s]` copies of `zeta_e^s`, stored
    /// sparsely as `(s, count)` pairs with `count > 0`.
    pub mult_vectors: Vec<Vec<(u32, u64)>>,
}

impl Irreducible {
    /// Exact complex value on class `k`, summed from the multiplicity vector.
    pub fn value(&self, k: usize, exponent: u64) -> Complex64 {
        let step = std::f64::consts::TAU / exponent as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for &(s, count) in &self.mult_vectors[k] {
            let (sin, cos) = (s as f64 * step).sin_cos();
            re += count as f64 * cos;
            im += count as f64 * sin;
        }
        Complex64::new(re, im)
    }
}

/// A fully verified character table.
#[derive(Debug, Clone, Serialize)]
pub struct CharacterTable {
    pub group_order: u64,
    pub num_classes: usize,
    pub exponent: u64,
    /// The working prime `l ≡ 1 (mod exponent)`, `l > 2·sqrt(|G|)`.
    pub ell: u64,
    /// The fixed primitive `exponent`-th root of unity in `F_l` that encodes
    /// `zeta_e` throughout `values_mod_l`.
    pub omega: u64,
    pub seed: u64,
    pub class_sizes: Vec<u64>,
    pub class_orders: Vec<u64>,
    pub class_reps: Vec<String>,
    /// Rows sorted by (degree, values lexicographic); the trivial character
    /// is always first.
    pub irreducibles: Vec<Irreducible>,
}

/// Smallest prime usable for the group: `l ≡ 1 (mod e)` and `l > 2·sqrt(order)`.
pub fn choose_field(exponent: u64, order: u64) -> Result<u64> {
    least_prime_in_progression(exponent, isqrt(4 * order))
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Compute the full character table of `store`'s group.
///
/// `seed` drives only the random class-matrix combinations used to split
/// eigenspaces; the returned table is canonical (sorted) and identical for
/// every seed that succeeds.
pub fn character_table(store: &GroupStore, cd: &ClassData, seed: u64) -> Result<CharacterTable> {
    let s = cd.num_classes();
    let order = store.order() as u64;
    let exponent = cd.exponent();
    let ell = choose_field(exponent, order)?;
    let f = Fp::new(ell);
    let omega = f.root_of_unity(exponent);

    let vectors = split_central_characters(store, cd, f, seed)?;

    // In the stored orientation (M_i)[j][k] = a_{ijk}, applying the central
    // character to  c_i c_j = sum_k a_{ijk} c_k  gives  M_i w = w_i w;  the
    // common eigenvector, scaled so its identity coordinate is 1, IS the
    // central character vector  w_k = |C_k| chi(g_k) / d.  The degree comes
    // from the second orthogonality relation
    //   sum_j w_j * w_{j'} / |C_j|  =  |G| / d^2   in F_l   (j' = inverse),
    // where the square root is unambiguous because d < sqrt(|G|) < l/2.
    let mut rows: Vec<Irreducible> = Vec::with_capacity(s);
    for w in &vectors {
        let mut inv_sum = 0u64;
        for j in 0..s {
            let jp = cd.inverse_class[j] as usize;
            let cj_inv = f.inv(cd.sizes[j] % ell);
            inv_sum = f.add(inv_sum, f.mul(f.mul(w[j], w[jp]), cj_inv));
        }
        let d_sq = f.mul(order % ell, f.inv(inv_sum));
        let root = f
            .sqrt(d_sq)
            .ok_or_else(|| Error::SplitFailed("degree-square has no root".into()))?;
        let degree = root.min(ell - root);
        if degree == 0 || degree * degree > order {
            return Err(Error::SplitFailed(format!("implausible degree {degree}")));
        }
        let values_mod_l: Vec<u64> = (0..s)
            .map(|j| f.mul(f.mul(degree, w[j]), f.inv(cd.sizes[j] % ell)))
            .collect();
        rows.push(Irreducible {
            degree,
            values_mod_l,
            mult_vectors: Vec::new(),
        });
    }

    rows.sort_by(|a, b| {
        (a.degree, &a.values_mod_l).cmp(&(b.degree, &b.values_mod_l))
    });

    // Lift every value to an exact eigenvalue-multiplicity vector.  On the
    // cyclic group generated by g_k (order o) the restriction of the
    // character decomposes into characters zeta_o^u with multiplicities
    //   mu_u = o^-1 * sum_t chi(g_k^t) * zeta_o^(-u t)   (computed in F_l),
    // which are genuine integers in [0, degree] and lift uniquely because
    // degree < l/2.
    for row in &mut rows {
        let mut mults = Vec::with_capacity(s);
        for k in 0..s {
            let o = cd.orders[k];
            let omega_o = f.pow(omega, exponent / o);
            let o_inv = f.inv(o % ell);
            let mut vec_k: Vec<(u32, u64)> = Vec::new();
            let mut total = 0u64;
            for u in 0..o {
                let mut acc = 0u64;
                for t in 0..o {
                    let cls = cd.power_class(k as u32, t) as usize;
                    let w = f.pow(omega_o, (u * t) % o);
                    acc = f.add(acc, f.mul(row.values_mod_l[cls], f.inv(w)));
                }
                let mu = f.mul(acc, o_inv);
                if mu > row.degree {
                    return Err(Error::LiftFailed(format!(
                        "eigenvalue multiplicity {mu} exceeds degree {}",
                        row.degree
                    )));
                }
                total += mu;
                if mu > 0 {
                    vec_k.push((((u * (exponent / o)) % exponent) as u32, mu));
                }
            }
            if total != row.degree {
                return Err(Error::LiftFailed(format!(
                    "multiplicities sum to {total}, expected {}",
                    row.degree
                )));
            }
            vec_k.sort_unstable();
            mults.push(vec_k);
        }
        row.mult_vectors = mults;
    }

    let table = CharacterTable {
        group_order: order,
        num_classes: s,
        exponent,
        ell,
        omega,
        seed,
        class_sizes: cd.sizes.clone(),
        class_orders: cd.orders.clone(),
        class_reps: cd.reps.iter().map(|r| format!("{}", store.element(*r))).collect(),
        irreducibles: rows,
    };
    verify_table(&table, cd)?;
    Ok(table)
}

/// Find the common eigenvector basis of the class-matrix family.
///
/// Class matrices are computed lazily, cheapest class first (building `M_i`
/// costs `|C_i| * s` group multiplications), because a handful of them
/// almost always separates all characters.  Returns the eigenvectors
/// normalized so the identity-class coordinate is 1, sorted.
fn split_central_characters(
    store: &GroupStore,
    cd: &ClassData,
    f: Fp,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    let s = cd.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Non-identity classes in order of increasing size (then index, for
    // determinism); the identity class matrix is the identity and useless.
    let mut class_order: Vec<usize> = (1..s).collect();
    class_order.sort_by_key(|&i| (cd.sizes[i], i));
    let mut pool: Vec<(usize, FpMatrix)> = Vec::new();
    let mut next_idx = 0usize;

    // Invariant subspaces of the class algebra, each given by an independent
    // column basis.  Start with the full space and refine.
    let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..s)
        .map(|i| {
            let mut e = vec![0u64; s];
            e[i] = 1;
            e
        })
        .collect()];

    let max_rounds = MAX_SPLIT_ROUNDS + 2 * s as u32;
    for round in 0..max_rounds {
        if spaces.iter().all(|sp| sp.len() == 1) {
            break;
        }
        if (pool.is_empty() || round % 2 == 0) && next_idx < class_order.len() {
            let i = class_order[next_idx];
            next_idx += 1;
            let raw = class_matrix(store, cd, i as u32);
            let mut m = FpMatrix::zero(f, s, s);
            for j in 0..s {
                for k in 0..s {
                    m.set(j, k, raw[j][k] % f.l);
                }
            }
            pool.push((i, m));
        }
        let mut combo = FpMatrix::zero(f, s, s);
        for (_, m) in &pool {
            let c = rng.gen_range(0..f.l);
            for r in 0..s {
                for q in 0..s {
                    combo.set(r, q, f.add(combo.at(r, q), f.mul(c, m.at(r, q))));
                }
            }
        }
        let mut next: Vec<Vec<Vec<u64>>> = Vec::with_capacity(spaces.len());
        for basis in &spaces {
            if basis.len() == 1 {
                next.push(basis.clone());
                continue;
            }
            for piece in split_one_space(&combo, basis, f)? {
                next.push(piece);
            }
        }
        next.sort_by(|a, b| a[0].cmp(&b[0]));
        spaces = next;
    }
    if spaces.iter().any(|sp| sp.len() != 1) {
        return Err(Error::SplitFailed("eigenspaces not fully separated".into()));
    }

    let mut vectors = Vec::with_capacity(s);
    for sp in &spaces {
        let v = &sp[0];
        // Entry 0 is the identity-class coordinate, proportional to the
        // degree, hence nonzero mod l.
        if v[0] == 0 {
            return Err(Error::SplitFailed("identity coordinate vanished".into()));
        }
        let scale = f.inv(v[0]);
        let v: Vec<u64> = v.iter().map(|&x| f.mul(x, scale)).collect();
        // cross-check: v is a simultaneous eigenvector of every class matrix
        // we materialized, with the eigenvalue the theory demands (its own
        // coordinate at that class)
        for (i, m) in &pool {
            let mv = m.mul_vec(&v);
            let lam = mv[0]; // v[0] == 1
            if lam != v[*i] {
                return Err(Error::SplitFailed("eigenvalue disagrees with coordinate".into()));
            }
            for (a, b) in mv.iter().zip(&v) {
                if *a != f.mul(lam, *b) {
                    return Err(Error::SplitFailed("eigen relation broke on recheck".into()));
                }
            }
        }
        vectors.push(v);
    }
    vectors.sort();
    Ok(vectors)
}

/// Split one invariant subspace into the eigenspaces of `combo` inside it.
fn split_one_space(
    combo: &FpMatrix,
    basis: &[Vec<u64>],
    f: Fp,
) -> Result<Vec<Vec<Vec<u64>>>> {
    let s = basis[0].len();
    let dim = basis.len();
    let mut bmat = FpMatrix::zero(f, s, dim);
    for (j, col) in basis.iter().enumerate() {
        for i in 0..s {
            bmat.set(i, j, col[i]);
        }
    }
    let images: Vec<Vec<u64>> = basis.iter().map(|col| combo.mul_vec(col)).collect();
    let a_cols = bmat
        .solve_multi(&images)
        .ok_or_else(|| Error::SplitFailed("subspace not invariant".into()))?;
    let mut a = FpMatrix::zero(f, dim, dim);
    for (j, col) in a_cols.iter().enumerate() {
        for i in 0..dim {
            a.set(i, j, col[i]);
        }
    }

    let poly = char_poly(&a, f);
    let mut pieces: Vec<Vec<Vec<u64>>> = Vec::new();
    let mut covered = 0usize;
    for lam in 0..f.l {
        if eval_poly(&poly, lam, f) != 0 {
            continue;
        }
        let mut shifted = a.clone();
        for i in 0..dim {
            shifted.set(i, i, f.sub(shifted.at(i, i), lam));
        }
        let kernel = shifted.kernel_basis();
        if kernel.is_empty() {
            continue;
        }
        covered += kernel.len();
        let piece: Vec<Vec<u64>> = kernel
            .iter()
            .map(|kv| {
                // map coordinates back through the ambient basis
                let mut v = vec![0u64; s];
                for (j, &c) in kv.iter().enumerate() {
                    for i in 0..s {
                        v[i] = f.add(v[i], f.mul(c, basis[j][i]));
                    }
                }
                v
            })
            .collect();
        pieces.push(piece);
        if covered == dim {
            break;
        }
    }
    // The class algebra is semisimple mod l, so eigenspaces must fill the
    // whole subspace; a shortfall means a repeated-eigenvalue collision and
    // the caller will retry with a fresh combination.
    if covered != dim {
        pieces = vec![basis.to_vec()];
    }
    Ok(pieces)
}

/// Characteristic polynomial of `a` by evaluation–interpolation, low degree
/// first.  Needs `l > dim`, which `l > 2·sqrt(|G|)` guarantees by a margin.
fn char_poly(a: &FpMatrix, f: Fp) -> Vec<u64> {
    let dim = a.rows;
    assert!((dim as u64) < f.l);
    let xs: Vec<u64> = (0..=dim as u64).collect();
    let ys: Vec<u64> = xs
        .iter()
        .map(|&x| {
            let mut shifted = a.clone();
            for i in 0..dim {
                shifted.set(i, i, f.sub(shifted.at(i, i), x));
            }
            det_in_place(shifted, f)
        })
        .collect();
    lagrange_interpolate(&xs, &ys, f)
}

fn det_in_place(mut m: FpMatrix, f: Fp) -> u64 {
    let n = m.rows;
    let mut det = 1u64;
    for col in 0..n {
        let pivot = (col..n).find(|&r| m.at(r, col) != 0);
        let Some(p) = pivot else { return 0 };
        if p != col {
            for j in 0..n {
                let (a, b) = (m.at(col, j), m.at(p, j));
                m.set(col, j, b);
                m.set(p, j, a);
            }
            det = f.neg(det);
        }
        let pv = m.at(col, col);
        det = f.mul(det, pv);
        let pv_inv = f.inv(pv);
        for r in col + 1..n {
            let factor = f.mul(m.at(r, col), pv_inv);
            if factor == 0 {
                continue;
            }
            for j in col..n {
                let val = f.sub(m.at(r, j), f.mul(factor, m.at(col, j)));
                m.set(r, j, val);
            }
        }
    }
    det
}

fn lagrange_interpolate(xs: &[u64], ys: &[u64], f: Fp) -> Vec<u64> {
    let n = xs.len();
    let mut poly = vec![0u64; n];
    for i in 0..n {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![0u64; n];
        basis[0] = 1;
        let mut deg = 0usize;
        let mut denom = 1u64;
        for j in 0..n {
            if j == i {
                continue;
            }
            denom = f.mul(denom, f.sub(xs[i], xs[j]));
            // basis *= (x - x_j)
            for k in (0..=deg).rev() {
                let b = basis[k];
                basis[k + 1] = f.add(basis[k + 1], b);
                basis[k] = f.mul(b, f.neg(xs[j]));
            }
            deg += 1;
        }
        let scale = f.mul(ys[i], f.inv(denom));
        for k in 0..n {
            poly[k] = f.add(poly[k], f.mul(scale, basis[k]));
        }
    }
    while poly.len() > 1 && *poly.last().unwrap() == 0 {
        poly.pop();
    }
    poly
}

fn eval_poly(poly: &[u64], x: u64, f: Fp) -> u64 {
    let mut acc = 0u64;
    for &c in poly.iter().rev() {
        acc = f.add(f.mul(acc, x), c);
    }
    acc
}

/// Exact re-verification of a finished table.  All identities are checked in
/// the cyclotomic integers `Z[zeta_e]` (via multiplicity vectors), never in
/// floating point:
///
/// * number of rows equals the number of classes;
/// * `sum d_i^2 = |G|` as plain integers;
/// * first orthogonality for every pair of rows;
/// * second (column) orthogonality for every pair of classes;
/// * the value on the inverse class is the complex conjugate (multiplicity
///   vector reversed mod e);
/// * every multiplicity vector re-evaluates to the stored `F_l` value under
///   `zeta_e -> omega`.
fn verify_table(table: &CharacterTable, cd: &ClassData) -> Result<()> {
    let s = table.num_classes;
    let e = table.exponent;
    if table.irreducibles.len() != s {
        return Err(Error::VerdictFailed(format!(
            "character count {} != class count {}",
            table.irreducibles.len(),
            s
        )));
    }
    let sq_sum: u64 = table.irreducibles.iter().map(|r| r.degree * r.degree).sum();
    if sq_sum != table.group_order {
        return Err(Error::VerdictFailed(format!(
            "sum of squared degrees {} != group order {}",
            sq_sum, table.group_order
        )));
    }

    let f = Fp::new(table.ell);
    for row in &table.irreducibles {
        for (k, mv) in row.mult_vectors.iter().enumerate() {
            let mut acc = 0u64;
            for &(pos, count) in mv {
                acc = f.add(acc, f.mul(count % table.ell, f.pow(table.omega, pos as u64)));
            }
            if acc != row.values_mod_l[k] {
                return Err(Error::VerdictFailed(
                    "multiplicity vector disagrees with mod-l value".into(),
                ));
            }
        }
    }

    // Orthogonality over the cyclotomic integers.  Beyond the exponent bound
    // the Z[zeta] arithmetic gets heavy, so very large exponents fall back to
    // the same relations verified in F_l (still exact equations, just under
    // the fixed embedding zeta -> omega); every group this crate targets by
    // name stays under the bound.
    let ctx = if e <= EXACT_CYCLO_VERIFY_MAX_EXPONENT {
        Some(CycloCtx::new(e))
    } else {
        None
    };
    // Row orthogonality: sum_k |C_k| chi_i(g_k) conj(chi_j(g_k)) = delta |G|.
    for i in 0..s {
        for j in i..s {
            let target = if i == j { table.group_order as i128 } else { 0 };
            if let Some(ctx) = &ctx {
                let mut spectrum = vec![0i128; e as usize];
                for k in 0..s {
                    let a = &table.irreducibles[i].mult_vectors[k];
                    let b = &table.irreducibles[j].mult_vectors[k];
                    accumulate_conj_product(&mut spectrum, a, b, table.class_sizes[k], e);
                }
                if !ctx.equals_integer(&spectrum, target) {
                    return Err(Error::VerdictFailed(format!(
                        "row orthogonality failed for characters {i} and {j}"
                    )));
                }
            } else {
                let mut acc = 0u64;
                for k in 0..s {
                    let a = table.irreducibles[i].values_mod_l[k];
                    let b = table.irreducibles[j].values_mod_l[cd.inverse_class[k] as usize];
                    acc = f.add(acc, f.mul(table.class_sizes[k] % table.ell, f.mul(a, b)));
                }
                if acc != (target.rem_euclid(table.ell as i128)) as u64 {
                    return Err(Error::VerdictFailed(format!(
                        "row orthogonality failed for characters {i} and {j}"
                    )));
                }
            }
        }
    }
    // Column orthogonality: sum_i chi_i(g_k) conj(chi_i(g_m)) = delta |G|/|C_k|.
    for k in 0..s {
        for m in k..s {
            let target = if k == m {
                (table.group_order / table.class_sizes[k]) as i128
            } else {
                0
            };
            if let Some(ctx) = &ctx {
                let mut spectrum = vec![0i128; e as usize];
                for row in &table.irreducibles {
                    accumulate_conj_product(
                        &mut spectrum,
                        &row.mult_vectors[k],
                        &row.mult_vectors[m],
                        1,
                        e,
                    );
                }
                if !ctx.equals_integer(&spectrum, target) {
                    return Err(Error::VerdictFailed(format!(
                        "column orthogonality failed for classes {k} and {m}"
                    )));
                }
            } else {
                let mut acc = 0u64;
                for row in &table.irreducibles {
                    let a = row.values_mod_l[k];
                    let b = row.values_mod_l[cd.inverse_class[m] as usize];
                    acc = f.add(acc, f.mul(a, b));
                }
                if acc != (target.rem_euclid(table.ell as i128)) as u64 {
                    return Err(Error::VerdictFailed(format!(
                        "column orthogonality failed for classes {k} and {m}"
                    )));
                }
            }
        }
    }
    // Inverse class = conjugate value.
    for row in &table.irreducibles {
        for k in 0..s {
            let kp = cd.inverse_class[k] as usize;
            let mut reversed: Vec<(u32, u64)> = row.mult_vectors[k]
                .iter()
                .map(|&(pos, c)| (((e as u32) - pos) % e as u32, c))
                .collect();
            reversed.sort_unstable();
            if reversed != row.mult_vectors[kp] {
                return Err(Error::VerdictFailed(format!(
                    "inverse-class conjugation failed on class {k}"
                )));
            }
        }
    }
    Ok(())
}

/// Add `weight * chi_a * conj(chi_b)` to `spectrum`, where both characters
/// are given as sparse multiplicity vectors over `zeta_e` powers.
fn accumulate_conj_product(
    spectrum: &mut [i128],
    a: &[(u32, u64)],
    b: &[(u32, u64)],
    weight: u64,
    e: u64,
) {
    for &(pa, ca) in a {
        for &(pb, cb) in b {
            let pos = ((pa as u64 + e - pb as u64) % e) as usize;
            spectrum[pos] += weight as i128 * ca as i128 * cb as i128;
        }
    }
}

impl CharacterTable {
    /// Exact complex value of character `i` on class `k`.
    pub fn evaluate_char(&self, i: usize, k: usize) -> Complex64 {
        self.irreducibles[i].value(k, self.exponent)
    }

    /// Degrees in table order.
    pub fn degrees(&self) -> Vec<u64> {
        self.irreducibles.iter().map(|r| r.degree).collect()
    }

    /// CSV rendering: one row per irreducible, one column per class, complex
    /// values to six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("character");
        for rep in &self.class_reps {
            let _ = write!(out, ",\"{}\"", rep);
        }
        out.push('\n');
        out.push_str("class_size");
        for sz in &self.class_sizes {
            let _ = write!(out, ",{}", sz);
        }
        out.push('\n');
        for (i, row) in self.irreducibles.iter().enumerate() {
            let _ = write!(out, "chi_{i}");
            for k in 0..self.num_classes {
                let v = row.value(k, self.exponent);
                let _ = write!(out, ",{:.6}{}{:.6}i", v.re, if v.im < 0.0 { "-" } else { "+" }, v.im.abs());
            }
            out.push('\n');
        }
        out
    }
}
