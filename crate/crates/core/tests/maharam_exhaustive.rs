mod common;

use num::BigRational;
use proptest::prelude::*;
use sb_kit::maharam::*;
use sb_kit::rational::ratio;
use common::*;

#[test]
fn family_has_expected_size() {
    // C(4,1)·1 + C(4,2)·7 + C(4,3)·21 + C(4,4)·35
    assert_eq!(family().len(), 165);
}

#[test]
fn dominance_agrees_with_flow_on_every_pair() {
    let fam = family();
    let mut feasible = 0;
    for a in &fam {
        for b in &fam {
            let dom = tail_dominance_embeddable(a, b);
            assert_eq!(dom, tails_dominate(a, b));
            let plan = flow_embeddable(a, b).unwrap();
            assert_eq!(dom, plan.is_some(), "a={a:?} b={b:?}");
            if let Some(plan) = plan {
                plan.check(&a.block_weights(), &b.block_weights(), arc_rule(a, b)).unwrap();
                feasible += 1;
            }
        }
    }
    assert!(feasible > fam.len());
}

#[test]
fn mutual_dominance_forces_equality() {
    let fam = family();
    for a in &fam {
        for b in &fam {
            let both = tail_dominance_embeddable(a, b) && tail_dominance_embeddable(b, a);
            assert_eq!(both, a == b);
            let verdict = sb_decide(a, b).unwrap();
            assert_eq!(verdict.name() == "Isomorphic", a == b);
        }
    }
}

#[test]
fn is_isomorphic_is_an_equivalence() {
    let fam = family();
    for a in &fam {
        assert!(is_isomorphic(a, a));
        for b in &fam {
            assert_eq!(is_isomorphic(a, b), is_isomorphic(b, a));
        }
    }
}

fn raw_invariant() -> impl Strategy<Value = MaharamInvariant> {
    // integer parts of a common denominator, split between atoms and blocks
    (prop::collection::vec(1i64..6, 0..4), prop::collection::vec((1i64..6, 0u32..4), 0..5))
        .prop_filter("nonempty", |(a, b)| !a.is_empty() || !b.is_empty())
        .prop_map(|(atoms, blocks)| {
            let total: i64 = atoms.iter().sum::<i64>() + blocks.iter().map(|b| b.0).sum::<i64>();
            MaharamInvariant {
                atoms: atoms.iter().map(|&p| ratio(p, total)).collect(),
                blocks: blocks.iter().map(|&(p, k)| Block::new(ratio(p, total), k)).collect(),
            }
        })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(raw in raw_invariant()) {
        let n = normalize(&raw).unwrap();
        prop_assert_eq!(normalize(&n).unwrap(), n.clone());
        prop_assert!(n.is_normalized());
        prop_assert!(n.atoms.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(n.blocks.windows(2).all(|w| w[0].kappa > w[1].kappa));
    }

    #[test]
    fn shuffling_preserves_the_normal_form(raw in raw_invariant(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = raw.clone();
        shuffled.atoms.shuffle(&mut rng);
        shuffled.blocks.shuffle(&mut rng);
        let (x, y) = (normalize(&raw).unwrap(), normalize(&shuffled).unwrap());
        prop_assert!(is_isomorphic(&x, &y));
    }

    #[test]
    fn plans_with_shared_atoms_certify_dominance(a in raw_invariant(), b in raw_invariant()) {
        let a = normalize(&a).unwrap();
        let mut b = normalize(&b).unwrap();
        // rebuild b on a's atoms, rescaling its blocks to the remaining mass
        let atom_mass: BigRational = a.atoms.iter().sum();
        let block_mass: BigRational = b.blocks.iter().map(|x| x.weight.clone()).sum();
        if block_mass == ratio(0, 1) || a.blocks.is_empty() {
            return Ok(());
        }
        let rest = ratio(1, 1) - atom_mass;
        for blk in &mut b.blocks {
            blk.weight = &blk.weight * &rest / &block_mass;
        }
        b.atoms = a.atoms.clone();
        let b = normalize(&b).unwrap();
        let plan = flow_embeddable(&a, &b).unwrap();
        prop_assert_eq!(plan.is_some(), tail_dominance_embeddable(&a, &b));
        if let Some(plan) = plan {
            prop_assert!(plan.check(&a.block_weights(), &b.block_weights(), arc_rule(&a, &b)).is_ok());
        }
    }
}
