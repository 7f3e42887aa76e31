//! Exhaustive enumeration of finite matrix groups from generators, the named
//! subgroups used by the proof pipeline, conjugacy classes, power maps, and
//! class-algebra structure constants.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::modring::ModMatrix;

pub const DEFAULT_CAP: usize = 20_000_000;

/// A fully enumerated finite matrix group.
///
/// Element 0 is the identity; the rest are sorted by packed-entry encoding,
/// so ids are canonical for a given (n, N, generating set closure).
#[derive(Debug, Clone)]
pub struct GroupStore {
    n: usize,
    modulus: u32,
    elements: Vec<ModMatrix>,
    index: HashMap<u128, u32>,
    generators: Vec<u32>,
    inverse_ids: Vec<u32>,
}

impl GroupStore {
    /// Breadth-first closure of the generators under multiplication.
    ///
    /// The identity-only group is produced for an empty generator list, which
    /// is why the shape (n, modulus) is passed explicitly.
    pub fn enumerate_group(
        n: usize,
        modulus: u32,
        generators: &[ModMatrix],
        cap: usize,
    ) -> Result<GroupStore> {
        for g in generators {
            if g.n() != n {
                return Err(Error::DimensionMismatch(g.n(), n));
            }
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch(g.modulus(), modulus));
            }
            g.invert()?; // groups contain only invertible elements
        }
        let identity = ModMatrix::identity(n, modulus);
        let mut seen: HashMap<u128, ModMatrix> = HashMap::new();
        seen.insert(identity.key(), identity);
        let mut frontier = vec![identity];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for x in &frontier {
                for g in generators {
                    let y = x.mat_mul(g)?;
                    if seen.len() >= cap && !seen.contains_key(&y.key()) {
                        return Err(Error::CapExceeded { cap, reached: seen.len() + 1 });
                    }
                    if seen.insert(y.key(), y).is_none() {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        let mut elements: Vec<ModMatrix> = seen.into_values().collect();
        elements.sort_unstable();
        let id_pos = elements.binary_search(&identity).expect("identity in closure");
        elements.swap(0, id_pos);
        elements[1..].sort_unstable();
        Self::from_canonical_elements(n, modulus, elements, generators)
    }

    fn from_canonical_elements(
        n: usize,
        modulus: u32,
        elements: Vec<ModMatrix>,
        generators: &[ModMatrix],
    ) -> Result<GroupStore> {
        let index: HashMap<u128, u32> =
            elements.iter().enumerate().map(|(i, m)| (m.key(), i as u32)).collect();
        let generators = generators
            .iter()
            .map(|g| {
                index
                    .get(&g.key())
                    .copied()
                    .ok_or_else(|| Error::Internal("generator missing from closure".into()))
            })
            .collect::<Result<Vec<u32>>>()?;
        let inverse_ids = elements
            .iter()
            .map(|m| {
                let inv = m.invert().expect("group elements are invertible");
                index
                    .get(&inv.key())
                    .copied()
                    .ok_or_else(|| Error::Internal("inverse missing from closure".into()))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(GroupStore { n, modulus, elements, index, generators, inverse_ids })
    }

    /// All transvections I + eps_ij; these generate SL_n(Z/N).
    pub fn sl_generators(n: usize, modulus: u32) -> Vec<ModMatrix> {
        let mut gens = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                if i != j {
                    gens.push(ModMatrix::elementary(i, j, 1, n, modulus).expect("i != j"));
                }
            }
        }
        gens
    }

    pub fn enumerate_sl(n: usize, modulus: u32, cap: usize) -> Result<GroupStore> {
        Self::enumerate_group(n, modulus, &Self::sl_generators(n, modulus), cap)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, id: u32) -> &ModMatrix {
        &self.elements[id as usize]
    }

    pub fn elements(&self) -> &[ModMatrix] {
        &self.elements
    }

    pub fn generator_ids(&self) -> &[u32] {
        &self.generators
    }

    pub fn id_of(&self, m: &ModMatrix) -> Option<u32> {
        if m.n() != self.n || m.modulus() != self.modulus {
            return None;
        }
        self.index.get(&m.key()).copied()
    }

    pub fn contains(&self, m: &ModMatrix) -> bool {
        self.id_of(m).is_some()
    }

    pub fn mul_ids(&self, a: u32, b: u32) -> u32 {
        let prod = self.elements[a as usize]
            .mat_mul(&self.elements[b as usize])
            .expect("uniform shape");
        self.index[&prod.key()]
    }

    pub fn inverse_id(&self, a: u32) -> u32 {
        self.inverse_ids[a as usize]
    }

    /// Digest identifying (n, N, generator set); keys group caches.
    pub fn generator_digest(n: usize, modulus: u32, generators: &[ModMatrix]) -> [u8; 32] {
        let mut keys: Vec<u128> = generators.iter().map(|g| g.key()).collect();
        keys.sort_unstable();
        keys.dedup();
        let mut h = Sha256::new();
        h.update([n as u8]);
        h.update(modulus.to_le_bytes());
        for k in keys {
            h.update(k.to_le_bytes());
        }
        h.finalize().into()
    }
}

const CACHE_MAGIC: &[u8; 4] = b"SLGR";
const CACHE_VERSION: u8 = 1;

impl GroupStore {
    /// Binary cache: header (n, N, count), generator digest, then packed
    /// elements in canonical order.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let gens: Vec<ModMatrix> =
            self.generators.iter().map(|&id| self.elements[id as usize]).collect();
        let digest = Self::generator_digest(self.n, self.modulus, &gens);
        let mut buf = Vec::with_capacity(64 + self.elements.len() * 16);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.push(CACHE_VERSION);
        buf.push(self.n as u8);
        buf.extend_from_slice(&self.modulus.to_le_bytes());
        buf.extend_from_slice(&(self.elements.len() as u64).to_le_bytes());
        buf.extend_from_slice(&digest);
        buf.extend_from_slice(&(self.generators.len() as u32).to_le_bytes());
        for g in &self.generators {
            buf.extend_from_slice(&g.to_le_bytes());
        }
        for m in &self.elements {
            buf.extend_from_slice(&m.key().to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Load a cache previously written for exactly this generator set.
    pub fn read_cache(
        path: &Path,
        n: usize,
        modulus: u32,
        generators: &[ModMatrix],
    ) -> Result<GroupStore> {
        let bad = |reason: &str| Error::BadCache {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 55 || &buf[0..4] != CACHE_MAGIC || buf[4] != CACHE_VERSION {
            return Err(bad("bad header"));
        }
        if buf[5] as usize != n {
            return Err(bad("dimension mismatch"));
        }
        let modulus_in = u32::from_le_bytes(buf[6..10].try_into().unwrap());
        if modulus_in != modulus {
            return Err(bad("modulus mismatch"));
        }
        let count = u64::from_le_bytes(buf[10..18].try_into().unwrap()) as usize;
        let digest: [u8; 32] = buf[18..50].try_into().unwrap();
        if digest != Self::generator_digest(n, modulus, generators) {
            return Err(bad("generator digest mismatch"));
        }
        let gen_count = u32::from_le_bytes(buf[50..54].try_into().unwrap()) as usize;
        let mut off = 54;
        if buf.len() != off + gen_count * 4 + count * 16 {
            return Err(bad("truncated"));
        }
        off += gen_count * 4; // generator ids are recomputed below
        let mut elements = Vec::with_capacity(count);
        for k in 0..count {
            let key = u128::from_le_bytes(buf[off + 16 * k..off + 16 * k + 16].try_into().unwrap());
            elements.push(
                ModMatrix::from_key(n, modulus, key).map_err(|_| bad("invalid packed element"))?,
            );
        }
        if elements.is_empty() || !elements[0].is_identity() {
            return Err(bad("identity not first"));
        }
        if !elements[1..].windows(2).all(|w| w[0] < w[1]) {
            return Err(bad("elements not canonical"));
        }
        let store = Self::from_canonical_elements(n, modulus, elements, generators)
            .map_err(|_| bad("generators not in cached group"))?;
        // closure spot-check on a deterministic sample
        let step = (store.order() / 32).max(1);
        for id in (0..store.order()).step_by(step) {
            for &g in &store.generators {
                store.mul_ids(id as u32, g);
            }
        }
        Ok(store)
    }
}

/// The subgroups of SL4(Z/p^r) with a fixed coordinate shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupName {
    /// Upper-left 2x2 unimodular block.
    Sl2Block,
    /// Upper-left 3x3 unimodular block.
    Sl3Block,
    /// Column-4 unipotent group {I + a*e14 + b*e24 + c*e34}.
    U1,
    /// Column-3 upper unipotent pairs {I + v1*e13 + v2*e23}.
    U2,
    /// {I + x*e23 + z*e24 + y*e34}, the Heisenberg-shaped group acting on
    /// isotypic spaces.
    H,
    /// 2x2 unimodular block extended by column 3: all products of Sl2Block
    /// and U2 elements.
    G1,
    /// Middle 2x2 unimodular block (rows/columns 2,3).
    G2,
    /// {I + n*e23}, the unipotent upper-triangular part of G2.
    NSub,
    /// Kernel of reduction mod p^(r-1): {I + p^(r-1)*A, tr A = 0 mod p}.
    GKer,
    /// Cyclic group generated by I + p^(r-1)*eps_ij.
    Cij(usize, usize),
    Trivial,
}

impl fmt::Display for SubgroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupName::Sl2Block => write!(f, "SL2_block"),
            SubgroupName::Sl3Block => write!(f, "SL3_block"),
            SubgroupName::U1 => write!(f, "U1"),
            SubgroupName::U2 => write!(f, "U2"),
            SubgroupName::H => write!(f, "H"),
            SubgroupName::G1 => write!(f, "G1"),
            SubgroupName::G2 => write!(f, "G2"),
            SubgroupName::NSub => write!(f, "N_sub"),
            SubgroupName::GKer => write!(f, "G_ker"),
            SubgroupName::Cij(i, j) => write!(f, "C{i}{j}"),
            SubgroupName::Trivial => write!(f, "trivial"),
        }
    }
}

impl FromStr for SubgroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "SL2_block" => SubgroupName::Sl2Block,
            "SL3_block" => SubgroupName::Sl3Block,
            "U1" => SubgroupName::U1,
            "U2" => SubgroupName::U2,
            "H" => SubgroupName::H,
            "G1" => SubgroupName::G1,
            "G2" => SubgroupName::G2,
            "N_sub" => SubgroupName::NSub,
            "G_ker" => SubgroupName::GKer,
            "trivial" => SubgroupName::Trivial,
            _ => {
                let bytes = s.as_bytes();
                if bytes.len() == 3 && bytes[0] == b'C' {
                    let i = (bytes[1] - b'0') as usize;
                    let j = (bytes[2] - b'0') as usize;
                    if (1..=4).contains(&i) && (1..=4).contains(&j) && i != j {
                        return Ok(SubgroupName::Cij(i, j));
                    }
                }
                return Err(Error::UnknownSubgroup(s.to_string()));
            }
        })
    }
}

const SUBGROUP_MATERIALIZE_LIMIT: usize = 2_000_000;

fn checked_pow(p: u32, k: u32, limit: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(p as usize)
            .filter(|&v| v <= limit)
            .ok_or(Error::SubgroupTooLarge { size: usize::MAX, limit })?;
    }
    Ok(acc)
}

/// Expected order of the named subgroup at level p^r; forced by coordinate
/// counts (or the SL2/SL3 order product formulas).
pub fn expected_subgroup_order(name: SubgroupName, p: u32, r: u32) -> u128 {
    let pr = (p as u128).pow(r);
    let sl2 = pr.pow(3) / (p as u128).pow(2) * ((p as u128).pow(2) - 1);
    match name {
        SubgroupName::Sl2Block | SubgroupName::G2 => sl2,
        SubgroupName::Sl3Block => {
            // p^(3(r-1)) * |SL3(F_p)| * p^(5(r-1)) ... easier: |SL3(Z/p^r)| =
            // p^(8(r-1)) * |SL3(F_p)| with |SL3(F_p)| = p^3(p^3-1)(p^2-1)
            let q = p as u128;
            q.pow(8 * (r - 1)) * q.pow(3) * (q.pow(3) - 1) * (q.pow(2) - 1)
        }
        SubgroupName::U1 | SubgroupName::H => pr.pow(3),
        SubgroupName::U2 => pr.pow(2),
        SubgroupName::G1 => sl2 * pr.pow(2),
        SubgroupName::NSub => pr,
        SubgroupName::GKer => (p as u128).pow(15),
        SubgroupName::Cij(_, _) => p as u128,
        SubgroupName::Trivial => 1,
    }
}

/// Materialize the elements of a named subgroup of SL4(Z/p^r) directly from
/// its coordinate shape, without enumerating the ambient group. Sorted by
/// canonical encoding.
pub fn subgroup_elements(name: SubgroupName, p: u32, r: u32) -> Result<Vec<ModMatrix>> {
    let pr = checked_pow(p, r, crate::modring::MAX_MODULUS as usize)? as u32;
    let prl = pr as i64;
    let mut out: Vec<ModMatrix> = Vec::new();
    match name {
        SubgroupName::Trivial => out.push(ModMatrix::identity(4, pr)),
        SubgroupName::Cij(i, j) => {
            let layer = (pr / p) as i64;
            for t in 0..p as i64 {
                out.push(ModMatrix::elementary(i, j, t * layer, 4, pr)?);
            }
        }
        SubgroupName::NSub => {
            for n in 0..prl {
                out.push(ModMatrix::elementary(2, 3, n, 4, pr)?);
            }
        }
        SubgroupName::U1 => {
            for a in 0..prl {
                for b in 0..prl {
                    for c in 0..prl {
                        out.push(unipotent(pr, &[(0, 3, a), (1, 3, b), (2, 3, c)]));
                    }
                }
            }
        }
        SubgroupName::U2 => {
            for v1 in 0..prl {
                for v2 in 0..prl {
                    out.push(unipotent(pr, &[(0, 2, v1), (1, 2, v2)]));
                }
            }
        }
        SubgroupName::H => {
            for x in 0..prl {
                for y in 0..prl {
                    for z in 0..prl {
                        out.push(unipotent(pr, &[(1, 2, x), (1, 3, z), (2, 3, y)]));
                    }
                }
            }
        }
        SubgroupName::Sl2Block | SubgroupName::G2 | SubgroupName::G1 => {
            let sl2 = GroupStore::enumerate_sl(2, pr, SUBGROUP_MATERIALIZE_LIMIT)?;
            match name {
                SubgroupName::Sl2Block => {
                    out.extend(sl2.elements().iter().map(|m| m.embed_sl2().expect("unimodular")));
                }
                SubgroupName::G2 => {
                    out.extend(
                        sl2.elements().iter().map(|m| m.embed_sl2_middle().expect("unimodular")),
                    );
                }
                SubgroupName::G1 => {
                    for m in sl2.elements() {
                        let block = m.embed_sl2().expect("unimodular");
                        for v1 in 0..prl {
                            for v2 in 0..prl {
                                let tail = unipotent(pr, &[(0, 2, v1), (1, 2, v2)]);
                                out.push(block.mat_mul(&tail).expect("same shape"));
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        SubgroupName::Sl3Block => {
            let sl3 = GroupStore::enumerate_sl(3, pr, SUBGROUP_MATERIALIZE_LIMIT)?;
            out.extend(sl3.elements().iter().map(|m| m.embed_sl3().expect("unimodular")));
        }
        SubgroupName::GKer => {
            let size = checked_pow(p, 15, SUBGROUP_MATERIALIZE_LIMIT)?;
            out.reserve(size);
            let layer = (pr / p) as i64;
            // 15 free coordinates: all off-diagonal entries plus three
            // diagonal differences; the last diagonal entry balances the trace.
            let mut coeffs = [0i64; 16];
            gker_rec(&mut coeffs, 0, p as i64, layer, pr, &mut out);
        }
    }
    let expected = expected_subgroup_order(name, p, r);
    out.sort_unstable();
    out.dedup();
    if out.len() as u128 != expected {
        return Err(Error::Internal(format!(
            "subgroup {name} at level {p}^{r}: got {} elements, expected {expected}",
            out.len()
        )));
    }
    Ok(out)
}

fn gker_rec(coeffs: &mut [i64; 16], pos: usize, p: i64, layer: i64, pr: u32, out: &mut Vec<ModMatrix>) {
    // positions 0..15 free; entry 15 (bottom-right diagonal) fixed by trace
    if pos == 15 {
        coeffs[15] = -(coeffs[0] + coeffs[5] + coeffs[10]);
        let entries: Vec<i64> = (0..16)
            .map(|k| i64::from(k % 5 == 0) + layer * coeffs[k])
            .collect();
        out.push(ModMatrix::new(4, pr, &entries).expect("valid"));
        return;
    }
    for v in 0..p {
        coeffs[pos] = v;
        gker_rec(coeffs, pos + 1, p, layer, pr, out);
    }
}

/// I + sum of s*eps_(i,j) with 0-based positions.
fn unipotent(modulus: u32, shifts: &[(usize, usize, i64)]) -> ModMatrix {
    let mut entries = vec![0i64; 16];
    for d in 0..4 {
        entries[d * 4 + d] = 1;
    }
    for &(i, j, s) in shifts {
        entries[i * 4 + j] = s;
    }
    ModMatrix::new(4, modulus, &entries).expect("valid")
}

/// A named subgroup resolved against an enumerated parent store.
#[derive(Debug, Clone)]
pub struct NamedSubgroup {
    pub name: SubgroupName,
    pub p: u32,
    pub r: u32,
    pub member_ids: Vec<u32>,
}

/// Resolve a named subgroup inside an enumerated SL4(Z/p^r) store.
pub fn named_subgroup(
    store: &GroupStore,
    name: SubgroupName,
    p: u32,
    r: u32,
) -> Result<NamedSubgroup> {
    let pr = checked_pow(p, r, crate::modring::MAX_MODULUS as usize)? as u32;
    if store.n() != 4 || store.modulus() != pr {
        return Err(Error::ModulusMismatch(store.modulus(), pr));
    }
    let members = subgroup_elements(name, p, r)?;
    let member_ids = members
        .iter()
        .map(|m| {
            store.id_of(m).ok_or_else(|| {
                Error::Internal(format!("subgroup {name} member {m} missing from parent store"))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(NamedSubgroup { name, p, r, member_ids })
}

/// Conjugacy classes, power maps, and representatives of an enumerated group.
#[derive(Debug, Clone)]
pub struct ClassData {
    /// element id -> class id
    pub class_of: Vec<u32>,
    /// class id -> representative element id (least canonical encoding)
    pub reps: Vec<u32>,
    pub sizes: Vec<u64>,
    /// class id -> member element ids, ascending
    pub members: Vec<Vec<u32>>,
    /// multiplicative order of each class
    pub orders: Vec<u64>,
    pub inverse_class: Vec<u32>,
    /// class id -> class of rep^t for t = 0..order
    pub power_cycle: Vec<Vec<u32>>,
}

impl ClassData {
    pub fn num_classes(&self) -> usize {
        self.reps.len()
    }

    /// Class of g^t, reduced via the representative's power cycle.
    pub fn power_class(&self, class: u32, t: u64) -> u32 {
        let cycle = &self.power_cycle[class as usize];
        cycle[(t % cycle.len() as u64) as usize]
    }

    /// lcm of element orders.
    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1u64, |acc, &o| lcm(acc, o))
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Orbit partition under conjugation, by generator-orbit BFS from each
/// unvisited element in canonical order.
pub fn conjugacy_classes(store: &GroupStore) -> ClassData {
    let order = store.order();
    let gen_pairs: Vec<(u32, u32)> =
        store.generator_ids().iter().map(|&g| (g, store.inverse_id(g))).collect();
    let mut class_of = vec![u32::MAX; order];
    let mut reps = Vec::new();
    let mut members: Vec<Vec<u32>> = Vec::new();
    for start in 0..order as u32 {
        if class_of[start as usize] != u32::MAX {
            continue;
        }
        let class_id = reps.len() as u32;
        let mut orbit = vec![start];
        class_of[start as usize] = class_id;
        let mut head = 0;
        while head < orbit.len() {
            let x = orbit[head];
            head += 1;
            for &(g, g_inv) in &gen_pairs {
                let y = store.mul_ids(store.mul_ids(g, x), g_inv);
                if class_of[y as usize] == u32::MAX {
                    class_of[y as usize] = class_id;
                    orbit.push(y);
                }
            }
        }
        orbit.sort_unstable();
        reps.push(start); // = min of orbit: starts scan in canonical order
        members.push(orbit);
    }
    let sizes: Vec<u64> = members.iter().map(|m| m.len() as u64).collect();
    let orders: Vec<u64> = reps.iter().map(|&r| store.element(r).mult_order()).collect();
    let inverse_class: Vec<u32> =
        reps.iter().map(|&r| class_of[store.inverse_id(r) as usize]).collect();
    let power_cycle: Vec<Vec<u32>> = reps
        .iter()
        .zip(&orders)
        .map(|(&r, &o)| {
            let mut cycle = Vec::with_capacity(o as usize);
            let mut acc = 0u32; // identity id
            for _ in 0..o {
                cycle.push(class_of[acc as usize]);
                acc = store.mul_ids(acc, r);
            }
            cycle
        })
        .collect();
    ClassData { class_of, reps, sizes, members, orders, inverse_class, power_cycle }
}

/// a_ijk: the number of pairs (x,y) in C_i x C_j with xy equal to the fixed
/// representative of C_k.
pub fn class_mult_coeff(store: &GroupStore, cd: &ClassData, i: u32, j: u32, k: u32) -> u64 {
    let gk = cd.reps[k as usize];
    cd.members[i as usize]
        .iter()
        .filter(|&&x| cd.class_of[store.mul_ids(store.inverse_id(x), gk) as usize] == j)
        .count() as u64
}

/// The full class matrix M_i with (M_i)[j][k] = a_ijk, so that central
/// character vectors are simultaneous eigenvectors: M_i w = w_i w.
pub fn class_matrix(store: &GroupStore, cd: &ClassData, i: u32) -> Vec<Vec<u64>> {
    let s = cd.num_classes();
    let mut m = vec![vec![0u64; s]; s];
    for k in 0..s {
        let gk = cd.reps[k];
        for &x in &cd.members[i as usize] {
            let j = cd.class_of[store.mul_ids(store.inverse_id(x), gk) as usize];
            m[j as usize][k] += 1;
        }
    }
    m
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LayerIsoReport {
    pub p: u32,
    /// p^15 trace-zero matrices mod p, all mapped and checked.
    pub domain_size: u64,
    /// Exact group products verified against the additive rule.
    pub products_checked: u64,
}

/// Exhaustive verification that A -> I + pA is a group isomorphism from the
/// additive group of trace-zero 4x4 matrices over Z/p onto the kernel of
/// SL4(Z/p^2) -> SL4(Z/p).
///
/// Every A in the domain is mapped: the image has determinant 1 mod p^2,
/// reduces to the identity mod p, and A is recovered entrywise from the
/// image, so the map is injective into the kernel; the counts p^15 on both
/// sides make it onto. The product rule phi(A)phi(E) = phi(A+E) is multiplied
/// out exactly for every A against every basis element E of the domain; since
/// each B is a sum of basis elements, induction on that sum extends the rule
/// to every pair (A, B).
pub fn verify_layer_isomorphism(p: u32) -> Result<LayerIsoReport> {
    if p != 2 && p != 3 {
        return Err(Error::BadLevel(format!(
            "layer isomorphism check is exhaustive and sized for p in {{2, 3}}, got {p}"
        )));
    }
    let p2 = p * p;
    let domain_size = (p as u64).pow(15);
    debug_assert_eq!(domain_size as u128, expected_subgroup_order(SubgroupName::GKer, p, 2));

    // basis of the trace-zero matrices: 12 off-diagonal units and the three
    // diagonal differences e_kk - e_44
    let mut basis: Vec<[u32; 16]> = Vec::with_capacity(15);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let mut e = [0u32; 16];
                e[4 * i + j] = 1;
                basis.push(e);
            }
        }
    }
    for k in 0..3 {
        let mut e = [0u32; 16];
        e[4 * k + k] = 1;
        e[15] = p - 1;
        basis.push(e);
    }

    let phi = |a: &[u32; 16]| -> [u32; 16] {
        let mut m = [0u32; 16];
        for k in 0..16 {
            m[k] = (u32::from(k % 5 == 0) + p * a[k]) % p2;
        }
        m
    };
    let det_mod_p2 = |m: &[u32; 16]| -> u32 {
        let mut det: i64 = 0;
        // Laplace expansion along the first row
        for c0 in 0..4usize {
            let mut cols = [0usize; 3];
            let mut w = 0;
            for c in 0..4 {
                if c != c0 {
                    cols[w] = c;
                    w += 1;
                }
            }
            let minor3 = |r: [usize; 3], c: [usize; 3]| -> i64 {
                let e = |i: usize, j: usize| m[4 * r[i] + c[j]] as i64;
                e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            };
            let term = m[c0] as i64 * minor3([1, 2, 3], cols);
            det += if c0 % 2 == 0 { term } else { -term };
        }
        det.rem_euclid(p2 as i64) as u32
    };

    let mut products: u64 = 0;
    let mut a = [0u32; 16];
    for idx in 0..domain_size {
        // decode the 15 free entries; the last diagonal entry balances the
        // trace
        let mut rest = idx;
        let mut diag_sum = 0u32;
        let mut w = 0usize;
        for k in 0..16 {
            if k == 15 {
                a[15] = (3 * p - diag_sum % p) % p;
                break;
            }
            a[k] = (rest % p as u64) as u32;
            rest /= p as u64;
            if k % 5 == 0 {
                diag_sum += a[k];
            }
            w += 1;
        }
        debug_assert_eq!(w, 15);

        let m = phi(&a);
        if det_mod_p2(&m) != 1 {
            return Err(Error::VerdictFailed(format!(
                "image of a trace-zero matrix left SL4(Z/{p2})"
            )));
        }
        for k in 0..16 {
            let delta = u32::from(k % 5 == 0);
            if m[k] % p != delta || (m[k] - delta) / p != a[k] {
                return Err(Error::VerdictFailed(
                    "layer map failed to reduce to the identity or lost its input".into(),
                ));
            }
        }
        for e in &basis {
            let me = phi(e);
            let mut prod = [0u32; 16];
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0u32;
                    for t in 0..4 {
                        s += m[4 * i + t] * me[4 * t + j];
                    }
                    prod[4 * i + j] = s % p2;
                }
            }
            let mut sum = [0u32; 16];
            for k in 0..16 {
                sum[k] = (a[k] + e[k]) % p;
            }
            if prod != phi(&sum) {
                return Err(Error::VerdictFailed(
                    "group product disagreed with the additive rule".into(),
                ));
            }
            products += 1;
        }
    }
    Ok(LayerIsoReport { p, domain_size, products_checked: products })
}
