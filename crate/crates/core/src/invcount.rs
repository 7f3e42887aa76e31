//! Invariant-vector counts: multiplicity of the trivial representation in
//! the restriction of each irreducible character to a subgroup.
//!
//! The central claim this crate verifies at the finite-quotient level is
//! that every irreducible of SL4(Z/N) keeps an invariant vector under the
//! upper-left SL2 block, while SL3(Z/p) has irreducibles that lose all of
//! theirs.  Both directions reduce to the same exact pairing
//!
//!   m(chi, H)  =  (1/|H|) * sum_{h in H} chi(h),
//!
//! computed in `F_l` from a class tally of `H` and lifted to the unique
//! integer in `[0, deg chi]`.  Verdicts are decided on exact integers only.

use serde::Serialize;

use crate::dixon::CharacterTable;
use crate::error::{Error, Result};
use crate::fp::Fp;
use crate::grpstore::{
    conjugacy_classes, named_subgroup, ClassData, GroupStore, SubgroupName,
};
use crate::pipeline::split_prime_power;

/// One irreducible in a restriction report.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionRow {
    pub degree: u64,
    pub multiplicity: u64,
    pub verdict: String,
}

/// Restriction of a whole character table to one subgroup, with the verdict
/// the caller asked about ("PASS"/"FAIL" for the invariant-vector theorem,
/// "FOUND"/"NOT_FOUND" for counterexample hunting).
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionReport {
    pub group: String,
    pub group_order: u64,
    pub subgroup: String,
    pub subgroup_order: u64,
    /// Working prime of the table the rows came from.
    pub ell: u64,
    /// Group exponent used for the root of unity.
    pub exponent: u64,
    pub rows: Vec<RestrictionRow>,
    pub verdict: String,
}

const HAS_INVARIANT: &str = "has-invariant";
const NO_INVARIANT: &str = "no-invariant";

/// Count how many subgroup members land in each conjugacy class of the
/// ambient group.
pub fn class_tally(cd: &ClassData, member_ids: &[u32]) -> Vec<u64> {
    let mut tally = vec![0u64; cd.num_classes()];
    for &id in member_ids {
        tally[cd.class_of[id as usize] as usize] += 1;
    }
    tally
}

/// Multiplicity of the trivial representation of the subgroup with the given
/// members inside irreducible `irrep` of the ambient group.
///
/// The average is computed in `F_l` and lifted; the true value is an integer
/// in `[0, degree]`, so the lift is unique (`degree < l/2`) and a residue
/// outside that range proves the table and tally inconsistent.
pub fn restriction_multiplicity(
    table: &CharacterTable,
    cd: &ClassData,
    irrep: usize,
    member_ids: &[u32],
) -> Result<u64> {
    let f = Fp::new(table.ell);
    let tally = class_tally(cd, member_ids);
    let row = &table.irreducibles[irrep];
    let mut acc = 0u64;
    for (k, &count) in tally.iter().enumerate() {
        acc = f.add(acc, f.mul(count % table.ell, row.values_mod_l[k]));
    }
    let m = f.mul(acc, f.inv(member_ids.len() as u64 % table.ell));
    if m > row.degree {
        return Err(Error::LiftFailed(format!(
            "restriction multiplicity residue {m} exceeds degree {}",
            row.degree
        )));
    }
    Ok(m)
}

/// Member ids of the upper-left SL2 block inside an SL_n(Z/N) store.
pub fn sl2_block_ids(store: &GroupStore) -> Result<Vec<u32>> {
    let sl2 = GroupStore::enumerate_sl(2, store.modulus(), store.order())?;
    let mut ids: Vec<u32> = sl2
        .elements()
        .iter()
        .map(|m| {
            let embedded = m.embed_into(store.n(), 0)?;
            store
                .id_of(&embedded)
                .ok_or_else(|| Error::Internal("block element missing from group".into()))
        })
        .collect::<Result<Vec<u32>>>()?;
    ids.sort_unstable();
    Ok(ids)
}

/// Build the full report for one table and subgroup.  `positive_verdicts`
/// chooses the top-level verdict pair: `true` means PASS when every row has
/// an invariant vector, `false` means FOUND when some row has none.
fn build_report(
    table: &CharacterTable,
    cd: &ClassData,
    member_ids: &[u32],
    group: String,
    subgroup: String,
    positive_verdicts: bool,
) -> Result<RestrictionReport> {
    let mut rows = Vec::with_capacity(table.irreducibles.len());
    for i in 0..table.irreducibles.len() {
        let m = restriction_multiplicity(table, cd, i, member_ids)?;
        rows.push(RestrictionRow {
            degree: table.irreducibles[i].degree,
            multiplicity: m,
            verdict: if m > 0 { HAS_INVARIANT } else { NO_INVARIANT }.to_string(),
        });
    }
    // The trivial character of G restricts to the trivial character of H
    // with multiplicity exactly 1; anything else means a corrupted tally.
    if rows[0].multiplicity != 1 || table.irreducibles[0].degree != 1 {
        return Err(Error::Internal(
            "trivial character restricted with multiplicity != 1".into(),
        ));
    }
    let all_have = rows.iter().all(|r| r.multiplicity >= 1);
    let verdict = match (positive_verdicts, all_have) {
        (true, true) => "PASS",
        (true, false) => "FAIL",
        (false, true) => "NOT_FOUND",
        (false, false) => "FOUND",
    };
    Ok(RestrictionReport {
        group,
        group_order: table.group_order,
        subgroup,
        subgroup_order: member_ids.len() as u64,
        ell: table.ell,
        exponent: table.exponent,
        rows,
        verdict: verdict.to_string(),
    })
}

/// Verify, over the finite quotient SL4(Z/N), that every irreducible
/// contains a vector fixed by the upper-left SL2 block.
///
/// N must be 1 (trivially true) or a prime power small enough to enumerate
/// under `cap`.
pub fn verify_theorem_level(level: u32, cap: usize, seed: u64) -> Result<RestrictionReport> {
    if level == 1 {
        return Ok(RestrictionReport {
            group: "SL4(Z/1)".into(),
            group_order: 1,
            subgroup: format!("{}", SubgroupName::Sl2Block),
            subgroup_order: 1,
            ell: 3,
            exponent: 1,
            rows: vec![RestrictionRow {
                degree: 1,
                multiplicity: 1,
                verdict: HAS_INVARIANT.to_string(),
            }],
            verdict: "PASS".to_string(),
        });
    }
    let (p, r) = split_prime_power(level)?;
    let store = GroupStore::enumerate_sl(4, level, cap)?;
    let cd = conjugacy_classes(&store);
    let table = crate::dixon::character_table(&store, &cd, seed)?;
    let block = named_subgroup(&store, SubgroupName::Sl2Block, p, r)?;
    build_report(
        &table,
        &cd,
        &block.member_ids,
        format!("SL4(Z/{level})"),
        format!("{}", SubgroupName::Sl2Block),
        true,
    )
}

/// Hunt for irreducibles of SL3(Z/p) with no invariant vector under the
/// upper-left SL2 block; verdict FOUND when at least one exists.
pub fn find_sl3_counterexample(p: u32, cap: usize, seed: u64) -> Result<RestrictionReport> {
    let store = GroupStore::enumerate_sl(3, p, cap)?;
    let cd = conjugacy_classes(&store);
    let table = crate::dixon::character_table(&store, &cd, seed)?;
    let block = sl2_block_ids(&store)?;
    build_report(
        &table,
        &cd,
        &block,
        format!("SL3(Z/{p})"),
        format!("{}", SubgroupName::Sl2Block),
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grpstore::DEFAULT_CAP;
    use crate::modring::ModMatrix;
    use crate::pipeline::apply_to_vector;
    use nalgebra::DMatrix;

    fn setup(n: usize, modulus: u32) -> (GroupStore, ClassData, CharacterTable) {
        let store = GroupStore::enumerate_sl(n, modulus, DEFAULT_CAP).unwrap();
        let cd = conjugacy_classes(&store);
        let table = crate::dixon::character_table(&store, &cd, 3).unwrap();
        (store, cd, table)
    }

    /// Ids of the cyclic subgroup generated by one element.
    fn cyclic_ids(store: &GroupStore, g: u32) -> Vec<u32> {
        let mut ids = vec![store.id_of(&ModMatrix::identity(store.n(), store.modulus())).unwrap()];
        let mut cur = g;
        while cur != ids[0] {
            ids.push(cur);
            cur = store.mul_ids(cur, g);
        }
        ids.sort_unstable();
        ids
    }

    #[test]
    fn trivial_character_always_restricts_to_one() {
        let (store, cd, table) = setup(3, 2);
        let block = sl2_block_ids(&store).unwrap();
        assert_eq!(restriction_multiplicity(&table, &cd, 0, &block).unwrap(), 1);
        for g in [1u32, 17, 100] {
            let cyc = cyclic_ids(&store, g % store.order() as u32);
            assert_eq!(restriction_multiplicity(&table, &cd, 0, &cyc).unwrap(), 1);
        }
    }

    #[test]
    fn sl3_mod2_block_distribution_matches_hand_count() {
        // The order-6 block: 1 identity, 3 involutions, 2 elements of order 3.
        let (store, cd, _) = setup(3, 2);
        let block = sl2_block_ids(&store).unwrap();
        assert_eq!(block.len(), 6);
        let tally = class_tally(&cd, &block);
        let by_order: Vec<(u64, u64)> = tally
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (cd.orders[k], c))
            .collect();
        assert_eq!(by_order, vec![(1, 1), (2, 3), (3, 2)]);
    }

    #[test]
    fn sl3_mod2_degree3_rows_have_no_invariant_and_degree6_has_two() {
        let (store, cd, table) = setup(3, 2);
        let block = sl2_block_ids(&store).unwrap();
        let mults: Vec<(u64, u64)> = (0..6)
            .map(|i| {
                (
                    table.irreducibles[i].degree,
                    restriction_multiplicity(&table, &cd, i, &block).unwrap(),
                )
            })
            .collect();
        // hand check against the block distribution (1,3,2) over orders
        // (1,2,3): deg 3: (3-3+0)/6 = 0; deg 6: (6+6+0)/6 = 2;
        // deg 7: (7-3+2)/6 = 1; deg 8: (8+0-2)/6 = 1.
        assert_eq!(
            mults,
            vec![(1, 1), (3, 0), (3, 0), (6, 2), (7, 1), (8, 1)]
        );
        // cross-foot: sum of mult*degree = |G|/|H| (free translation action)
        let total: u64 = mults.iter().map(|(d, m)| d * m).sum();
        assert_eq!(total, 168 / 6);
    }

    #[test]
    fn counterexample_found_for_p2_and_p3() {
        let rep2 = find_sl3_counterexample(2, DEFAULT_CAP, 5).unwrap();
        assert_eq!(rep2.verdict, "FOUND");
        let zero_rows: Vec<u64> = rep2
            .rows
            .iter()
            .filter(|r| r.multiplicity == 0)
            .map(|r| r.degree)
            .collect();
        assert_eq!(zero_rows, vec![3, 3]);

        let rep3 = find_sl3_counterexample(3, DEFAULT_CAP, 5).unwrap();
        assert_eq!(rep3.group_order, 5616);
        assert_eq!(rep3.verdict, "FOUND");
        assert!(rep3.rows.iter().any(|r| r.multiplicity == 0));
    }

    #[test]
    fn counterexample_found_for_p5() {
        let rep = find_sl3_counterexample(5, DEFAULT_CAP, 5).unwrap();
        assert_eq!(rep.group_order, 372_000);
        assert_eq!(rep.verdict, "FOUND");
    }

    #[test]
    fn theorem_holds_for_level_2_and_trivially_for_level_1() {
        let rep = verify_theorem_level(2, DEFAULT_CAP, 11).unwrap();
        assert_eq!(rep.verdict, "PASS");
        assert_eq!(rep.rows.len(), 14);
        assert!(rep.rows.iter().all(|r| r.multiplicity >= 1));
        assert_eq!(rep.rows[0].multiplicity, 1);
        assert_eq!(rep.subgroup_order, 6);

        let rep1 = verify_theorem_level(1, DEFAULT_CAP, 11).unwrap();
        assert_eq!(rep1.verdict, "PASS");
    }

    #[test]
    fn fifteen_point_permutation_character_has_seven_block_invariants() {
        // Burnside on the 15 nonzero vectors of (Z/2)^4 under the SL2 block,
        // then the same count through the character table.
        let (store, cd, table) = setup(4, 2);
        let block = sl2_block_ids(&store).unwrap();
        let points: Vec<[u32; 4]> = (1u32..16)
            .map(|b| [b & 1, (b >> 1) & 1, (b >> 2) & 1, (b >> 3) & 1])
            .collect();
        let fix = |id: u32| {
            let m = store.element(id);
            points
                .iter()
                .filter(|pt| apply_to_vector(m, &pt[..]).as_slice() == &pt[..])
                .count() as u64
        };
        let orbit_count = block.iter().map(|&h| fix(h)).sum::<u64>() / block.len() as u64;
        assert_eq!(orbit_count, 7);

        // decompose the permutation character, then pair with per-irreducible
        // block multiplicities
        let f = Fp::new(table.ell);
        let perm_vals: Vec<u64> = cd.reps.iter().map(|&r| fix(r) % table.ell).collect();
        let mut total = 0u64;
        for i in 0..table.num_classes {
            let mut acc = 0u64;
            for k in 0..table.num_classes {
                let conj = table.irreducibles[i].values_mod_l[cd.inverse_class[k] as usize];
                acc = f.add(acc, f.mul(cd.sizes[k] % table.ell, f.mul(perm_vals[k], conj)));
            }
            let mult_in_perm = f.mul(acc, f.inv(table.group_order % table.ell));
            assert!(mult_in_perm <= 15, "implausible component multiplicity");
            let block_mult = restriction_multiplicity(&table, &cd, i, &block).unwrap();
            total += mult_in_perm * block_mult;
        }
        assert_eq!(total, 7);
    }

    #[test]
    fn conjugate_subgroups_give_identical_multiplicities() {
        let (store, cd, table) = setup(3, 2);
        let block = sl2_block_ids(&store).unwrap();
        let base: Vec<u64> = (0..6)
            .map(|i| restriction_multiplicity(&table, &cd, i, &block).unwrap())
            .collect();
        for g in [3u32, 59, 101, 166] {
            let ginv = store.inverse_id(g);
            let mut conj: Vec<u32> =
                block.iter().map(|&h| store.mul_ids(store.mul_ids(g, h), ginv)).collect();
            conj.sort_unstable();
            let moved: Vec<u64> = (0..6)
                .map(|i| restriction_multiplicity(&table, &cd, i, &conj).unwrap())
                .collect();
            assert_eq!(base, moved);
        }
    }

    #[test]
    fn float_evaluation_agrees_with_exact_lift() {
        for (n, modulus) in [(3usize, 2u32), (2, 3), (2, 4)] {
            let (store, cd, table) = setup(n, modulus);
            let block = sl2_block_ids(&store).unwrap();
            let tally = class_tally(&cd, &block);
            for i in 0..table.num_classes {
                let exact = restriction_multiplicity(&table, &cd, i, &block).unwrap();
                let mut acc = 0.0f64;
                for (k, &c) in tally.iter().enumerate() {
                    acc += c as f64 * table.evaluate_char(i, k).re;
                }
                let rounded = (acc / block.len() as f64).round();
                assert!(
                    (acc / block.len() as f64 - rounded).abs() < 1e-6,
                    "float multiplicity drifted"
                );
                assert_eq!(rounded as u64, exact);
            }
        }
    }

    #[test]
    fn sum_of_mult_times_degree_is_regular_invariant_rank() {
        // For |G| <= 200: sum_i m_i * d_i equals the rank of the averaging
        // projector of H on the regular representation (= number of H-orbits
        // on G by translation, = |G|/|H| since the action is free).
        for (n, modulus, gen) in [(2usize, 2u32, 2u32), (2, 3, 5), (2, 4, 7), (2, 5, 9)] {
            let (store, cd, table) = setup(n, modulus);
            let g_order = store.order();
            assert!(g_order <= 200);
            let h = cyclic_ids(&store, gen);
            let sum: u64 = (0..table.num_classes)
                .map(|i| {
                    table.irreducibles[i].degree
                        * restriction_multiplicity(&table, &cd, i, &h).unwrap()
                })
                .sum();

            let mut proj = DMatrix::<f64>::zeros(g_order, g_order);
            let w = 1.0 / h.len() as f64;
            for j in 0..g_order as u32 {
                for &hh in &h {
                    proj[(store.mul_ids(hh, j) as usize, j as usize)] += w;
                }
            }
            let eig = proj.symmetric_eigen();
            let rank = eig.eigenvalues.iter().filter(|&&e| e > 0.5).count() as u64;
            assert_eq!(sum, rank);
            assert_eq!(rank, (g_order / h.len()) as u64);
        }
    }

    #[test]
    fn block_ids_match_named_subgroup_in_dimension_4() {
        let store = GroupStore::enumerate_sl(4, 2, DEFAULT_CAP).unwrap();
        let via_embed = sl2_block_ids(&store).unwrap();
        let named = named_subgroup(&store, SubgroupName::Sl2Block, 2, 1).unwrap();
        let mut named_ids = named.member_ids.clone();
        named_ids.sort_unstable();
        assert_eq!(via_embed, named_ids);
    }

    #[test]
    fn lift_failure_detected_on_corrupted_tally() {
        // A "subgroup" that is not closed under the group law can push the
        // residue outside [0, degree]; use a deliberately broken member list.
        let (_, cd, table) = setup(3, 2);
        // 5 copies of one involution: the average of chi over it is chi(g)
        // itself, and the degree-3 rows take value -1 there -- residue l-1,
        // far outside [0, 3].
        let k2 = (0..cd.num_classes()).find(|&k| cd.orders[k] == 2).unwrap();
        let bad = vec![cd.reps[k2]; 5];
        let r = restriction_multiplicity(&table, &cd, 1, &bad);
        match r {
            Err(Error::LiftFailed(_)) => {}
            other => panic!("expected lift failure, got {other:?}"),
        }
    }
}
