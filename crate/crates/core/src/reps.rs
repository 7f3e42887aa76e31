//! Concrete finite-dimensional unitary representations.
//!
//! Permutation actions (on vector tuples, on cosets of a named subgroup, on
//! the group itself) are the canonical source; direct sums, tensor products,
//! and compressions onto orthonormal subspace bases build everything else
//! the constructive pipeline needs.  Representations evaluate group elements
//! to dense unitary matrices; the averaging projector and the simultaneous
//! character-space split of an abelian subgroup are the two workhorses.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::rc::Rc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grpstore::{named_subgroup, GroupStore, SubgroupName};
use crate::linalg::{
    hermitian_eigen_rank, max_abs, max_diff, orthonormal_image, tree_sum, unitarity_defect,
};
use crate::modring::ModMatrix;
use crate::pipeline::{apply_to_vector, split_prime_power};
use crate::tolerances;

/// Hard cap on representation dimension (dense eigensolvers only).
pub const MAX_REP_DIM: usize = 4096;

/// Largest subgroup the averaging projector will enumerate.
pub const MAX_PROJECTOR_SUBGROUP: usize = 1_000_000;

/// A finite-dimensional unitary representation with an evaluator and a
/// reproducible construction descriptor.
#[derive(Clone)]
pub enum UnitaryRep {
    /// Permutation action on a listed set of coordinate tuples mod `level`.
    PermVectors {
        n: usize,
        level: u32,
        space: String,
        points: Vec<Vec<u32>>,
        index: HashMap<Vec<u32>, usize>,
    },
    /// Permutation action on left cosets of a named subgroup.
    PermCosets {
        store: Rc<GroupStore>,
        subgroup: String,
        coset_reps: Vec<u32>,
        coset_of: Vec<u32>,
    },
    /// Left translation on the whole listed group.
    PermRegular { store: Rc<GroupStore> },
    Sum(Vec<UnitaryRep>),
    Tensor(Vec<UnitaryRep>),
    /// `g -> B* rho(g) B` for an orthonormal basis `B` of an invariant
    /// subspace of the inner representation.
    Compressed {
        inner: Box<UnitaryRep>,
        basis: DMatrix<Complex64>,
        note: String,
    },
    /// `g -> rho(c g c^-1)`: the same space, with the group relabeled by an
    /// inner automorphism.
    Conjugated {
        inner: Box<UnitaryRep>,
        by: ModMatrix,
        by_inv: ModMatrix,
    },
}

fn all_tuples(n: usize, level: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity((level as usize).pow(n as u32));
    let mut cur = vec![0u32; n];
    loop {
        out.push(cur.clone());
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            cur[k] += 1;
            if cur[k] < level {
                break;
            }
            cur[k] = 0;
            k += 1;
        }
    }
}

fn points_rep(n: usize, level: u32, space: String, points: Vec<Vec<u32>>) -> Result<UnitaryRep> {
    if points.len() > MAX_REP_DIM {
        return Err(Error::DimensionCap(points.len(), MAX_REP_DIM));
    }
    let index = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Ok(UnitaryRep::PermVectors { n, level, space, points, index })
}

/// Permutation representation on all of `(Z/level)^n`.
pub fn perm_rep_vectors(n: usize, level: u32) -> Result<UnitaryRep> {
    points_rep(n, level, format!("Z{level}^{n}"), all_tuples(n, level))
}

/// Permutation representation on the nonzero tuples of `(Z/level)^n`.
pub fn perm_rep_nonzero(n: usize, level: u32) -> Result<UnitaryRep> {
    let points: Vec<Vec<u32>> = all_tuples(n, level)
        .into_iter()
        .filter(|p| p.iter().any(|&x| x != 0))
        .collect();
    points_rep(n, level, format!("nonzero:Z{level}^{n}"), points)
}

/// The trivial one-dimensional representation (action on the zero tuple).
pub fn trivial_rep(n: usize, level: u32) -> Result<UnitaryRep> {
    points_rep(n, level, "trivial".to_string(), vec![vec![0u32; n]])
}

/// Permutation representation on left cosets of a named subgroup.
pub fn perm_rep_cosets(
    store: Rc<GroupStore>,
    name: SubgroupName,
    p: u32,
    r: u32,
) -> Result<UnitaryRep> {
    let sub = named_subgroup(&store, name, p, r)?;
    let members: Vec<u32> = sub.member_ids.clone();
    let member_set: std::collections::HashSet<u32> = members.iter().copied().collect();
    let order = store.order();
    let mut coset_of = vec![u32::MAX; order];
    let mut coset_reps = Vec::new();
    for g in 0..order as u32 {
        if coset_of[g as usize] != u32::MAX {
            continue;
        }
        let c = coset_reps.len() as u32;
        coset_reps.push(g);
        for &h in &members {
            coset_of[store.mul_ids(g, h) as usize] = c;
        }
        let _ = &member_set;
    }
    if coset_reps.len() > MAX_REP_DIM {
        return Err(Error::DimensionCap(coset_reps.len(), MAX_REP_DIM));
    }
    Ok(UnitaryRep::PermCosets {
        store,
        subgroup: format!("{name}"),
        coset_reps,
        coset_of,
    })
}

/// Left-translation representation on the whole listed group.
pub fn perm_rep_regular(store: Rc<GroupStore>) -> Result<UnitaryRep> {
    if store.order() > MAX_REP_DIM {
        return Err(Error::DimensionCap(store.order(), MAX_REP_DIM));
    }
    Ok(UnitaryRep::PermRegular { store })
}

/// Direct sum; all parts must act on matrices of the same shape.
pub fn sum_rep(parts: Vec<UnitaryRep>) -> Result<UnitaryRep> {
    check_parts(&parts)?;
    Ok(UnitaryRep::Sum(parts))
}

/// Tensor product along the diagonal (every factor sees the same element).
pub fn tensor_rep(parts: Vec<UnitaryRep>) -> Result<UnitaryRep> {
    check_parts(&parts)?;
    let dim: usize = parts.iter().map(|p| p.dim()).product();
    if dim > MAX_REP_DIM {
        return Err(Error::DimensionCap(dim, MAX_REP_DIM));
    }
    Ok(UnitaryRep::Tensor(parts))
}

fn check_parts(parts: &[UnitaryRep]) -> Result<()> {
    if parts.is_empty() {
        return Err(Error::BadDescriptor("empty part list".into()));
    }
    let (n0, l0) = (parts[0].acting_dim(), parts[0].level());
    for p in parts {
        if p.acting_dim() != n0 || p.level() != l0 {
            return Err(Error::ModulusMismatch(p.level(), l0));
        }
    }
    let dim: usize = parts.iter().map(|p| p.dim()).sum();
    if dim > MAX_REP_DIM {
        return Err(Error::DimensionCap(dim, MAX_REP_DIM));
    }
    Ok(())
}

/// Compression of `inner` onto the span of the orthonormal columns of
/// `basis`.  Unitarity of the compressed images is only guaranteed on
/// elements that preserve the span; callers keep that contract.
pub fn compressed_rep(
    inner: UnitaryRep,
    basis: DMatrix<Complex64>,
    note: &str,
) -> Result<UnitaryRep> {
    if basis.nrows() != inner.dim() || basis.ncols() == 0 {
        return Err(Error::DimensionMismatch(basis.nrows(), inner.dim()));
    }
    let gram = basis.adjoint() * &basis;
    if max_diff(&gram, &DMatrix::identity(basis.ncols(), basis.ncols())) > tolerances::BASIS_ORTHO
    {
        return Err(Error::Internal("compression basis not orthonormal".into()));
    }
    Ok(UnitaryRep::Compressed { inner: Box::new(inner), basis, note: note.to_string() })
}

/// Relabel the acting group by the inner automorphism `g -> by g by^-1`.
pub fn conjugated_rep(inner: UnitaryRep, by: ModMatrix) -> Result<UnitaryRep> {
    if by.n() != inner.acting_dim() {
        return Err(Error::DimensionMismatch(by.n(), inner.acting_dim()));
    }
    if by.modulus() != inner.level() {
        return Err(Error::ModulusMismatch(by.modulus(), inner.level()));
    }
    let by_inv = by.invert()?;
    Ok(UnitaryRep::Conjugated { inner: Box::new(inner), by, by_inv })
}

impl UnitaryRep {
    pub fn dim(&self) -> usize {
        match self {
            UnitaryRep::PermVectors { points, .. } => points.len(),
            UnitaryRep::PermCosets { coset_reps, .. } => coset_reps.len(),
            UnitaryRep::PermRegular { store } => store.order(),
            UnitaryRep::Sum(parts) => parts.iter().map(|p| p.dim()).sum(),
            UnitaryRep::Tensor(parts) => parts.iter().map(|p| p.dim()).product(),
            UnitaryRep::Compressed { basis, .. } => basis.ncols(),
            UnitaryRep::Conjugated { inner, .. } => inner.dim(),
        }
    }

    /// Dimension of the matrices this representation accepts.
    pub fn acting_dim(&self) -> usize {
        match self {
            UnitaryRep::PermVectors { n, .. } => *n,
            UnitaryRep::PermCosets { store, .. } | UnitaryRep::PermRegular { store } => store.n(),
            UnitaryRep::Sum(parts) | UnitaryRep::Tensor(parts) => parts[0].acting_dim(),
            UnitaryRep::Compressed { inner, .. } | UnitaryRep::Conjugated { inner, .. } => {
                inner.acting_dim()
            }
        }
    }

    /// Modulus of the matrices this representation accepts.
    pub fn level(&self) -> u32 {
        match self {
            UnitaryRep::PermVectors { level, .. } => *level,
            UnitaryRep::PermCosets { store, .. } | UnitaryRep::PermRegular { store } => {
                store.modulus()
            }
            UnitaryRep::Sum(parts) | UnitaryRep::Tensor(parts) => parts[0].level(),
            UnitaryRep::Compressed { inner, .. } | UnitaryRep::Conjugated { inner, .. } => {
                inner.level()
            }
        }
    }

    /// Reproducible construction descriptor (round-trips through
    /// `rep_from_descriptor` for the descriptor-built shapes).
    pub fn descriptor(&self) -> Value {
        match self {
            UnitaryRep::PermVectors { space, level, .. } => {
                json!({"type": "perm", "space": space, "level": level})
            }
            UnitaryRep::PermCosets { store, subgroup, .. } => json!({
                "type": "perm",
                "space": format!("cosets:{subgroup}"),
                "level": store.modulus(),
            }),
            UnitaryRep::PermRegular { store } => json!({
                "type": "perm",
                "space": "regular",
                "level": store.modulus(),
            }),
            UnitaryRep::Sum(parts) => {
                json!({"sum": parts.iter().map(|p| p.descriptor()).collect::<Vec<_>>()})
            }
            UnitaryRep::Tensor(parts) => {
                json!({"tensor": parts.iter().map(|p| p.descriptor()).collect::<Vec<_>>()})
            }
            UnitaryRep::Compressed { inner, basis, note } => json!({
                "compressed": inner.descriptor(),
                "subspace_dim": basis.ncols(),
                "note": note,
            }),
            UnitaryRep::Conjugated { inner, by, .. } => {
                let n = by.n();
                let flat: Vec<u32> = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| by.entry(i, j))
                    .collect();
                json!({"conjugated": inner.descriptor(), "by": flat})
            }
        }
    }

    /// The permutation underlying a permutation-type representation:
    /// `sigma[j]` is where basis point `j` goes.
    fn permutation_of(&self, g: &ModMatrix) -> Result<Vec<usize>> {
        match self {
            UnitaryRep::PermVectors { n, level, points, index, .. } => {
                if g.n() != *n || g.modulus() != *level {
                    return Err(Error::ModulusMismatch(g.modulus(), *level));
                }
                points
                    .iter()
                    .map(|pt| {
                        let moved = apply_to_vector(g, pt);
                        index.get(&moved).copied().ok_or_else(|| {
                            Error::Internal("action left the listed point set".into())
                        })
                    })
                    .collect()
            }
            UnitaryRep::PermCosets { store, coset_reps, coset_of, .. } => {
                let gid = store
                    .id_of(g)
                    .ok_or_else(|| Error::Internal("element not in the acting group".into()))?;
                Ok(coset_reps
                    .iter()
                    .map(|&r| coset_of[store.mul_ids(gid, r) as usize] as usize)
                    .collect())
            }
            UnitaryRep::PermRegular { store } => {
                let gid = store
                    .id_of(g)
                    .ok_or_else(|| Error::Internal("element not in the acting group".into()))?;
                Ok((0..store.order() as u32)
                    .map(|x| store.mul_ids(gid, x) as usize)
                    .collect())
            }
            _ => Err(Error::Internal("not a permutation representation".into())),
        }
    }

    /// Evaluate to a dense unitary matrix.
    pub fn eval(&self, g: &ModMatrix) -> Result<DMatrix<Complex64>> {
        match self {
            UnitaryRep::PermVectors { .. }
            | UnitaryRep::PermCosets { .. }
            | UnitaryRep::PermRegular { .. } => {
                let sigma = self.permutation_of(g)?;
                let d = sigma.len();
                let mut m = DMatrix::<Complex64>::zeros(d, d);
                for (j, &i) in sigma.iter().enumerate() {
                    m[(i, j)] = Complex64::new(1.0, 0.0);
                }
                Ok(m)
            }
            UnitaryRep::Sum(parts) => {
                let d = self.dim();
                let mut m = DMatrix::<Complex64>::zeros(d, d);
                let mut off = 0usize;
                for p in parts {
                    let block = p.eval(g)?;
                    let k = block.nrows();
                    m.view_mut((off, off), (k, k)).copy_from(&block);
                    off += k;
                }
                Ok(m)
            }
            UnitaryRep::Tensor(parts) => {
                let mut m = parts[0].eval(g)?;
                for p in &parts[1..] {
                    m = m.kronecker(&p.eval(g)?);
                }
                Ok(m)
            }
            UnitaryRep::Compressed { inner, basis, .. } => {
                let full = inner.eval(g)?;
                Ok(basis.adjoint() * full * basis)
            }
            UnitaryRep::Conjugated { inner, by, by_inv } => {
                inner.eval(&by.mat_mul(g)?.mat_mul(by_inv)?)
            }
        }
    }
}

fn bad(msg: &str) -> Error {
    Error::BadDescriptor(msg.to_string())
}

/// Build a representation from its JSON descriptor.
///
/// Accepted shapes: `{"type":"perm","space":S,"level":N}` with `S` one of
/// `"Z<N>^4"`, `"nonzero:Z<N>^4"`, `"cosets:<subgroup>"`, `"trivial"`;
/// `{"sum":[...]}`; `{"tensor":[...]}`.  Coset spaces enumerate the full
/// group SL4(Z/N) under `cap`.
pub fn rep_from_descriptor(desc: &Value, cap: usize) -> Result<UnitaryRep> {
    let obj = desc.as_object().ok_or_else(|| bad("expected a JSON object"))?;
    if let Some(parts) = obj.get("sum") {
        let parts = parts.as_array().ok_or_else(|| bad("sum/tensor parts must be a list"))?;
        return sum_rep(
            parts
                .iter()
                .map(|p| rep_from_descriptor(p, cap))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if let Some(parts) = obj.get("tensor") {
        let parts = parts.as_array().ok_or_else(|| bad("sum/tensor parts must be a list"))?;
        return tensor_rep(
            parts
                .iter()
                .map(|p| rep_from_descriptor(p, cap))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if obj.get("type").and_then(Value::as_str) != Some("perm") {
        return Err(bad("unknown shape: expected perm, sum, or tensor"));
    }
    let space = obj
        .get("space")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing space"))?;
    let level = obj
        .get("level")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("missing level"))? as u32;
    if level == 0 {
        return Err(bad("level must be positive"));
    }

    let parse_space_level = |s: &str| -> Result<u32> {
        let inner = s.strip_prefix('Z').ok_or_else(|| bad("space must look like Z<N>^4"))?;
        let (lv, pow) = inner
            .split_once('^')
            .ok_or_else(|| bad("space must look like Z<N>^4"))?;
        if pow != "4" {
            return Err(bad("only rank-4 tuple spaces are supported"));
        }
        let lv: u32 = lv.parse().map_err(|_| bad("space must look like Z<N>^4"))?;
        if lv != level {
            return Err(bad("space modulus disagrees with level"));
        }
        Ok(lv)
    };

    if space == "trivial" {
        trivial_rep(4, level)
    } else if let Some(sub) = space.strip_prefix("cosets:") {
        let name: SubgroupName = sub.parse()?;
        let (p, r) = split_prime_power(level)?;
        let store = Rc::new(GroupStore::enumerate_sl(4, level, cap)?);
        perm_rep_cosets(store, name, p, r)
    } else if let Some(rest) = space.strip_prefix("nonzero:") {
        let lv = parse_space_level(rest)?;
        perm_rep_nonzero(4, lv)
    } else {
        let lv = parse_space_level(space)?;
        perm_rep_vectors(4, lv)
    }
}

/// Averaging projector `P = |H|^-1 sum_h rho(h)` and its rank (count of
/// eigenvalues above 1/2).  The summation uses a fixed pairwise tree over
/// the given member order, so outputs are bit-stable.
pub fn invariant_projector(
    rep: &UnitaryRep,
    members: &[ModMatrix],
) -> Result<(DMatrix<Complex64>, usize)> {
    if members.is_empty() {
        return Err(Error::BadDescriptor("empty member list".into()));
    }
    if members.len() > MAX_PROJECTOR_SUBGROUP {
        return Err(Error::SubgroupTooLarge { size: members.len(), limit: MAX_PROJECTOR_SUBGROUP });
    }
    let terms = members
        .iter()
        .map(|h| rep.eval(h))
        .collect::<Result<Vec<_>>>()?;
    let sum = tree_sum(terms).expect("nonempty");
    let p = sum / Complex64::new(members.len() as f64, 0.0);
    // A failed projector law means the member list was not a subgroup.
    let defect = max_diff(&(&p * &p), &p).max(max_diff(&p.adjoint(), &p));
    if defect > tolerances::PROJECTOR {
        return Err(Error::Internal(format!(
            "averaging operator is not a projector (defect {defect:.2e}); member list closed?"
        )));
    }
    let rank = hermitian_eigen_rank(&p, tolerances::PROJECTOR_RANK_CUT);
    Ok((p, rank))
}

/// One simultaneous character space of an abelian subgroup.
#[derive(Debug)]
pub struct IsotypicComponent {
    /// Frequency of each generator: `rho(g_i) v = exp(2*pi*i*label_i/p^r) v`.
    pub label: Vec<u32>,
    /// Orthonormal basis columns of the component.
    pub basis: DMatrix<Complex64>,
}

#[derive(Debug)]
pub struct IsotypicDecomposition {
    /// Character order `p^r`: labels live in `Z/p^r`.
    pub modulus: u32,
    pub components: Vec<IsotypicComponent>,
}

impl IsotypicDecomposition {
    pub fn component(&self, label: &[u32]) -> Option<&IsotypicComponent> {
        self.components.iter().find(|c| c.label == label)
    }

    /// Multiplicity (dimension) of one label, 0 when absent.
    pub fn multiplicity(&self, label: &[u32]) -> usize {
        self.component(label).map_or(0, |c| c.basis.ncols())
    }
}

/// Split a representation into the simultaneous character spaces of
/// commuting unitaries `rho(g_1), ..., rho(g_m)` of order dividing `pr`.
///
/// Labels are recovered per generator by rounding `arg(eigenvalue)*pr/2pi`
/// and verified against the eigen relation; the split is by exact Fourier
/// projectors `P_k = pr^-1 sum_t zeta^{-kt} U^t` on each previously found
/// component, orthonormalized.
pub fn isotypic_split(
    rep: &UnitaryRep,
    generators: &[ModMatrix],
    pr: u32,
) -> Result<IsotypicDecomposition> {
    let d = rep.dim();
    let units: Vec<DMatrix<Complex64>> = generators
        .iter()
        .map(|g| rep.eval(g))
        .collect::<Result<Vec<_>>>()?;
    for u in &units {
        let defect = unitarity_defect(u);
        if defect > tolerances::UNITARITY {
            return Err(Error::Internal(format!("generator image not unitary ({defect:.2e})")));
        }
    }
    for a in 0..units.len() {
        for b in a + 1..units.len() {
            let comm = max_diff(&(&units[a] * &units[b]), &(&units[b] * &units[a]));
            if comm > tolerances::UNITARITY {
                return Err(Error::NonCommuting(comm));
            }
        }
    }

    let mut components = vec![IsotypicComponent {
        label: Vec::new(),
        basis: DMatrix::identity(d, d),
    }];
    let zeta = Complex64::from_polar(1.0, TAU / pr as f64);
    for u in &units {
        let mut next = Vec::new();
        for comp in &components {
            let b = &comp.basis;
            let m = b.ncols();
            // restriction of u to the component (invariant: u commutes with
            // every operator whose eigenspace the component is)
            let a = b.adjoint() * u * b;
            // Fourier projectors onto the zeta^k eigenspaces
            let mut pow = DMatrix::<Complex64>::identity(m, m);
            let mut projs = vec![DMatrix::<Complex64>::zeros(m, m); pr as usize];
            for t in 0..pr {
                for (k, proj) in projs.iter_mut().enumerate() {
                    let phase = zeta.powu((k as u32 * t) % pr).conj();
                    *proj += &pow * (phase / pr as f64);
                }
                pow = &pow * &a;
            }
            // u^pr must be the identity on the component for the projectors
            // to resolve it; `pow` holds exactly u^pr now
            let id_defect = max_diff(&pow, &DMatrix::identity(m, m));
            if id_defect > tolerances::RESIDUAL {
                return Err(Error::Internal(format!(
                    "generator order does not divide {pr} (defect {id_defect:.2e})"
                )));
            }
            let mut found = 0usize;
            for (k, proj) in projs.iter().enumerate() {
                if max_abs(proj) < tolerances::GRAM_RANK {
                    continue;
                }
                let image = orthonormal_image(&(b * proj), tolerances::GRAM_RANK);
                if image.ncols() == 0 {
                    continue;
                }
                found += image.ncols();
                let mut label = comp.label.clone();
                label.push(k as u32);
                next.push(IsotypicComponent { label, basis: image });
            }
            if found != m {
                return Err(Error::Internal(format!(
                    "character spaces of a component sum to {found}, expected {m}"
                )));
            }
        }
        components = next;
    }
    components.sort_by(|x, y| x.label.cmp(&y.label));

    // verify labels the way the contract states them: round the Rayleigh
    // eigenvalue argument and check the eigen relation per generator
    for comp in &components {
        for (i, u) in units.iter().enumerate() {
            let v = comp.basis.column(0).into_owned();
            let lam = (u * &v).dotc(&v).conj();
            let mut freq = (lam.arg() / TAU * pr as f64).round() as i64;
            freq = freq.rem_euclid(pr as i64);
            let expected = zeta.powu(comp.label[i]);
            if (lam - expected).norm() > tolerances::LABEL_ROUNDING
                || freq as u32 != comp.label[i]
            {
                return Err(Error::Internal(format!(
                    "label {} of component {:?} fails rounding check",
                    comp.label[i], comp.label
                )));
            }
            let resid = max_abs(&(u * &comp.basis - &comp.basis * expected));
            if resid > tolerances::RESIDUAL {
                return Err(Error::Internal(format!(
                    "character relation residual {resid:.2e} on component {:?}",
                    comp.label
                )));
            }
        }
    }
    // completeness: the component bases reconstruct the identity
    let recon = tree_sum(components.iter().map(|c| &c.basis * c.basis.adjoint()))
        .unwrap_or_else(|| DMatrix::zeros(d, d));
    if max_diff(&recon, &DMatrix::identity(d, d)) > tolerances::PROJECTOR {
        return Err(Error::Internal("isotypic components do not span".into()));
    }
    Ok(IsotypicDecomposition { modulus: pr, components })
}

/// Check that the invariants of a tensor product under a product subgroup
/// have rank exactly `rank_A * rank_B`.  The product projector is averaged
/// honestly over all member pairs.
pub fn tensor_invariants_property(
    rep_a: &UnitaryRep,
    members_a: &[ModMatrix],
    rep_b: &UnitaryRep,
    members_b: &[ModMatrix],
) -> Result<bool> {
    if rep_a.dim() * rep_b.dim() > MAX_REP_DIM {
        return Err(Error::DimensionCap(rep_a.dim() * rep_b.dim(), MAX_REP_DIM));
    }
    let (_, rank_a) = invariant_projector(rep_a, members_a)?;
    let (_, rank_b) = invariant_projector(rep_b, members_b)?;
    let mats_a: Vec<DMatrix<Complex64>> = members_a
        .iter()
        .map(|g| rep_a.eval(g))
        .collect::<Result<Vec<_>>>()?;
    let mats_b: Vec<DMatrix<Complex64>> = members_b
        .iter()
        .map(|g| rep_b.eval(g))
        .collect::<Result<Vec<_>>>()?;
    let terms = mats_a
        .iter()
        .flat_map(|ma| mats_b.iter().map(move |mb| ma.kronecker(mb)));
    let sum = tree_sum(terms).expect("nonempty member lists");
    let p = sum / Complex64::new((members_a.len() * members_b.len()) as f64, 0.0);
    let rank = hermitian_eigen_rank(&p, tolerances::PROJECTOR_RANK_CUT);
    Ok(rank == rank_a * rank_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grpstore::{subgroup_elements, DEFAULT_CAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn u1_generators(modulus: u32) -> Vec<ModMatrix> {
        (1..=3)
            .map(|i| ModMatrix::elementary(i, 4, 1, 4, modulus).unwrap())
            .collect()
    }

    #[test]
    fn perm_rep_dimensions() {
        assert_eq!(perm_rep_vectors(4, 4).unwrap().dim(), 256);
        assert_eq!(perm_rep_nonzero(4, 2).unwrap().dim(), 15);
        assert_eq!(perm_rep_nonzero(2, 2).unwrap().dim(), 3);
        assert_eq!(trivial_rep(4, 4).unwrap().dim(), 1);
        assert!(matches!(perm_rep_vectors(4, 9), Err(Error::DimensionCap(..))));
    }

    #[test]
    fn perm_images_are_homomorphic_and_unitary() {
        let store = GroupStore::enumerate_sl(2, 3, DEFAULT_CAP).unwrap();
        let rep = perm_rep_vectors(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let g = store.element(rng.gen_range(0..store.order() as u32));
            let h = store.element(rng.gen_range(0..store.order() as u32));
            let gh = g.mat_mul(h).unwrap();
            let prod = rep.eval(g).unwrap() * rep.eval(h).unwrap();
            assert!(max_diff(&prod, &rep.eval(&gh).unwrap()) < 1e-10);
            assert!(unitarity_defect(&rep.eval(g).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn sum_and_tensor_shapes_and_homomorphism() {
        let a = perm_rep_nonzero(2, 2).unwrap(); // d=3
        let b = perm_rep_vectors(2, 2).unwrap(); // d=4
        let s = sum_rep(vec![a.clone(), b.clone()]).unwrap();
        let t = tensor_rep(vec![a, b]).unwrap();
        assert_eq!(s.dim(), 7);
        assert_eq!(t.dim(), 12);
        let store = GroupStore::enumerate_sl(2, 2, DEFAULT_CAP).unwrap();
        for ga in 0..store.order() as u32 {
            for gb in 0..store.order() as u32 {
                let (g, h) = (store.element(ga), store.element(gb));
                let gh = g.mat_mul(h).unwrap();
                for rep in [&s, &t] {
                    let prod = rep.eval(g).unwrap() * rep.eval(h).unwrap();
                    assert!(max_diff(&prod, &rep.eval(&gh).unwrap()) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn projector_ranks_match_orbit_counts() {
        // trivial rep: rank = dimension
        let t = trivial_rep(2, 2).unwrap();
        let members: Vec<ModMatrix> =
            GroupStore::enumerate_sl(2, 2, DEFAULT_CAP).unwrap().elements().to_vec();
        assert_eq!(invariant_projector(&t, &members).unwrap().1, 1);

        // SL2(Z/2) transitive on 3 nonzero vectors: single orbit
        let r3 = perm_rep_nonzero(2, 2).unwrap();
        assert_eq!(invariant_projector(&r3, &members).unwrap().1, 1);

        // SL4(Z/2) on 15 nonzero vectors under the SL2 block: 7 orbits
        let r15 = perm_rep_nonzero(4, 2).unwrap();
        let block = subgroup_elements(SubgroupName::Sl2Block, 2, 1).unwrap();
        let (p, rank) = invariant_projector(&r15, &block).unwrap();
        assert_eq!(rank, 7);
        // the projector commutes with the subgroup action
        for h in &block {
            let u = r15.eval(h).unwrap();
            assert!(max_diff(&(&u * &p), &(&p * &u)) < 1e-8);
        }
    }

    #[test]
    fn projector_detects_non_subgroup_member_lists() {
        let rep = perm_rep_nonzero(2, 2).unwrap();
        let s = ModMatrix::new(2, 2, &[0, 1, 1, 0]).unwrap();
        // {S} alone is not closed (S^2 = I missing)
        match invariant_projector(&rep, std::slice::from_ref(&s)) {
            Err(Error::Internal(_)) => {}
            other => panic!("expected projector-law failure, got {other:?}"),
        }
    }

    #[test]
    fn regular_rep_of_u1_splits_into_all_eight_characters() {
        let gens = u1_generators(2);
        let store =
            Rc::new(GroupStore::enumerate_group(4, 2, &gens, DEFAULT_CAP).unwrap());
        assert_eq!(store.order(), 8);
        let rep = perm_rep_regular(store).unwrap();
        let dec = isotypic_split(&rep, &gens, 2).unwrap();
        assert_eq!(dec.components.len(), 8);
        for c in &dec.components {
            assert_eq!(c.basis.ncols(), 1);
        }
        let labels: Vec<Vec<u32>> = dec.components.iter().map(|c| c.label.clone()).collect();
        let expect: Vec<Vec<u32>> = (0..8u32)
            .map(|b| vec![(b >> 2) & 1, (b >> 1) & 1, b & 1])
            .collect();
        let mut expect = expect;
        expect.sort();
        assert_eq!(labels, expect);
    }

    #[test]
    fn trivial_rep_has_single_zero_label() {
        let rep = trivial_rep(4, 4).unwrap();
        let dec = isotypic_split(&rep, &u1_generators(4), 4).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].label, vec![0, 0, 0]);
        assert_eq!(dec.components[0].basis.ncols(), 1);
    }

    #[test]
    fn vector_rep_level4_splits_completely_under_u1() {
        let rep = perm_rep_vectors(4, 4).unwrap();
        let dec = isotypic_split(&rep, &u1_generators(4), 4).unwrap();
        let total: usize = dec.components.iter().map(|c| c.basis.ncols()).sum();
        assert_eq!(total, 256);
        // pairwise orthogonality across components
        for x in 0..dec.components.len() {
            for y in x + 1..dec.components.len() {
                let cross = dec.components[x].basis.adjoint() * &dec.components[y].basis;
                assert!(max_abs(&cross) < 1e-8);
            }
        }
    }

    #[test]
    fn noncommuting_generators_rejected() {
        let rep = perm_rep_vectors(2, 3).unwrap();
        let t = ModMatrix::elementary(1, 2, 1, 2, 3).unwrap();
        let tt = ModMatrix::elementary(2, 1, 1, 2, 3).unwrap();
        match isotypic_split(&rep, &[t, tt], 3) {
            Err(Error::NonCommuting(_)) => {}
            other => panic!("expected NonCommuting, got {other:?}"),
        }
    }

    #[test]
    fn tensor_invariant_rank_is_multiplicative() {
        // trivial (x) trivial
        let ta = trivial_rep(2, 2).unwrap();
        let tb = trivial_rep(2, 3).unwrap();
        let ma: Vec<ModMatrix> =
            GroupStore::enumerate_sl(2, 2, DEFAULT_CAP).unwrap().elements().to_vec();
        let mb: Vec<ModMatrix> =
            GroupStore::enumerate_sl(2, 3, DEFAULT_CAP).unwrap().elements().to_vec();
        assert!(tensor_invariants_property(&ta, &ma, &tb, &mb).unwrap());

        // perm reps of different groups under the full product
        let ra = perm_rep_nonzero(2, 2).unwrap();
        let rb = perm_rep_nonzero(2, 3).unwrap();
        assert!(tensor_invariants_property(&ra, &ma, &rb, &mb).unwrap());

        // one factor trivial 1-dim: rank equals the other rank
        assert!(tensor_invariants_property(&ra, &ma, &tb, &mb).unwrap());
    }

    #[test]
    fn descriptors_round_trip() {
        let cases = [
            json!({"type": "perm", "space": "Z4^4", "level": 4}),
            json!({"type": "perm", "space": "nonzero:Z2^4", "level": 2}),
            json!({"sum": [
                {"type": "perm", "space": "nonzero:Z2^4", "level": 2},
                {"type": "perm", "space": "trivial", "level": 2},
            ]}),
            json!({"tensor": [
                {"type": "perm", "space": "nonzero:Z2^4", "level": 2},
                {"type": "perm", "space": "nonzero:Z2^4", "level": 2},
            ]}),
        ];
        for desc in &cases {
            let rep = rep_from_descriptor(desc, DEFAULT_CAP).unwrap();
            assert_eq!(&rep.descriptor(), desc);
        }
        assert_eq!(
            rep_from_descriptor(&cases[0], DEFAULT_CAP).unwrap().dim(),
            256
        );
        assert!(matches!(
            rep_from_descriptor(&json!({"type": "perm", "space": "Z3^4", "level": 2}), DEFAULT_CAP),
            Err(Error::BadDescriptor(_))
        ));
        assert!(matches!(
            rep_from_descriptor(&json!({"nope": 1}), DEFAULT_CAP),
            Err(Error::BadDescriptor(_))
        ));
    }

    #[test]
    fn coset_rep_dimension_and_action() {
        let store = Rc::new(GroupStore::enumerate_sl(4, 2, DEFAULT_CAP).unwrap());
        let rep = perm_rep_cosets(store.clone(), SubgroupName::U1, 2, 1).unwrap();
        assert_eq!(rep.dim(), 20160 / 8);
        let g = ModMatrix::elementary(1, 2, 1, 4, 2).unwrap();
        let u = rep.eval(&g).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn conjugated_rep_matches_direct_evaluation() {
        let rep = perm_rep_nonzero(4, 2).unwrap();
        let c = ModMatrix::elementary(2, 3, 1, 4, 2).unwrap();
        let twisted = conjugated_rep(rep.clone(), c.clone()).unwrap();
        assert_eq!(twisted.dim(), 15);
        let g = ModMatrix::elementary(1, 4, 1, 4, 2).unwrap();
        let direct = rep
            .eval(&c.mat_mul(&g).unwrap().mat_mul(&c.invert().unwrap()).unwrap())
            .unwrap();
        assert!(max_diff(&twisted.eval(&g).unwrap(), &direct) < 1e-14);
        // still a homomorphism
        let h = ModMatrix::elementary(3, 1, 1, 4, 2).unwrap();
        let prod = twisted.eval(&g).unwrap() * twisted.eval(&h).unwrap();
        assert!(max_diff(&prod, &twisted.eval(&g.mat_mul(&h).unwrap()).unwrap()) < 1e-12);
    }

    #[test]
    fn compression_onto_invariant_subspace_stays_unitary() {
        let rep = perm_rep_nonzero(4, 2).unwrap();
        let block = subgroup_elements(SubgroupName::Sl2Block, 2, 1).unwrap();
        let (p, rank) = invariant_projector(&rep, &block).unwrap();
        let basis = orthonormal_image(&p, tolerances::GRAM_RANK);
        assert_eq!(basis.ncols(), rank);
        let comp = compressed_rep(rep, basis, "block invariants").unwrap();
        assert_eq!(comp.dim(), 7);
        for h in &block {
            // on the invariant subspace every block element acts as identity
            let u = comp.eval(h).unwrap();
            assert!(max_diff(&u, &DMatrix::identity(7, 7)) < 1e-8);
        }
    }
}
