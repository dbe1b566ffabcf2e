//! Randomized invariants over the public API. Each property draws a market
//! shape and a seed; the instance itself comes from the library's own
//! deterministic generator, so failures reproduce from the printed inputs.

// explicit i/j indices mirror the i != j product the polynomial encodes
#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use stablelab::rng::{rng_from_seed, unit_f64};
use stablelab::*;

fn shapes(max_n1: usize, max_extra: usize) -> impl Strategy<Value = (usize, usize)> {
    (1..=max_n1, 0..=max_extra).prop_map(|(n1, e)| (n1, n1 + e))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn preference_tables_are_mutually_inverse((n1, n2) in shapes(8, 4), seed in any::<u64>()) {
        let inst = gen_instance(n1, n2, seed).unwrap();
        for i in 0..n1 {
            let mut seen = vec![false; n2];
            for (k, &w) in inst.men_pref[i].iter().enumerate() {
                prop_assert!(!seen[w as usize], "duplicate woman in a preference row");
                seen[w as usize] = true;
                prop_assert_eq!(inst.men_rank[i][w as usize] as usize, k + 1);
            }
        }
        for w in 0..n2 {
            let mut seen = vec![false; n1];
            for (k, &m) in inst.women_pref[w].iter().enumerate() {
                prop_assert!(!seen[m as usize], "duplicate man in a preference row");
                seen[m as usize] = true;
                prop_assert_eq!(inst.women_rank[w][m as usize] as usize, k + 1);
            }
        }
    }

    #[test]
    fn proposal_outcomes_are_stable_and_extremal((n1, n2) in shapes(9, 4), seed in any::<u64>()) {
        let inst = gen_instance(n1, n2, seed).unwrap();
        let (m1, rp1) = propose(&inst, Side::Men);
        let (m2, rp2) = propose(&inst, Side::Women);
        prop_assert!(is_stable(&inst, &m1).unwrap());
        prop_assert!(is_stable(&inst, &m2).unwrap());
        // men-optimal is women-pessimal and vice versa
        prop_assert!(rp1.q <= rp2.q);
        prop_assert!(rp1.r >= rp2.r);
        // with men proposing, every proposal bumps the proposer's rank sum
        prop_assert_eq!(rp1.proposals, Some(rp1.q));
        // with women proposing, each matched woman stops at her husband's
        // rank and each unmatched woman runs through all n1 men
        let exhausted = (n1 * (n2 - n1)) as u64;
        prop_assert_eq!(rp2.proposals, Some(rp2.r + exhausted));
        // ranks() recomputes what propose reported
        let back = ranks(&inst, &m1).unwrap();
        prop_assert_eq!((back.q, back.r), (rp1.q, rp1.r));
    }

    #[test]
    fn elimination_strictly_trades_q_for_r((n1, n2) in shapes(7, 3), seed in any::<u64>()) {
        let inst = gen_instance(n1, n2, seed).unwrap();
        let (mut m, mut rp) = propose(&inst, Side::Men);
        let women0 = m.unmatched_women();
        let mut steps = 0u32;
        loop {
            let rots = exposed_rotations(&inst, &m).unwrap();
            match rots.first() {
                None => break,
                Some(rot) => {
                    let next = eliminate(&inst, &m, rot).unwrap();
                    let nrp = ranks(&inst, &next).unwrap();
                    prop_assert!(nrp.q > rp.q, "elimination must cost the men");
                    prop_assert!(nrp.r < rp.r, "elimination must pay the women");
                    prop_assert_eq!(next.unmatched_women(), m.unmatched_women());
                    m = next;
                    rp = nrp;
                }
            }
            steps += 1;
            prop_assert!(steps < 10_000, "rotation walk failed to terminate");
        }
        // with nothing left to eliminate we are at the women-optimal end
        let (bottom, _) = propose(&inst, Side::Women);
        prop_assert_eq!(&m.wife_of, &bottom.wife_of);
        prop_assert_eq!(m.unmatched_women(), women0);
    }

    #[test]
    fn lattice_walk_matches_brute_force((n1, n2) in shapes(5, 3), seed in any::<u64>()) {
        let inst = gen_instance(n1, n2, seed).unwrap();
        let walk = enumerate_all(&inst, 1_000_000).unwrap();
        let bf = brute_force_all(&inst, 10_000_000).unwrap();
        let mut a: Vec<_> = walk.matchings.iter().map(|m| m.wife_of.clone()).collect();
        let mut b: Vec<_> = bf.matchings.iter().map(|m| m.wife_of.clone()).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(&walk.men_optimal().wife_of, &bf.men_optimal().wife_of);
        prop_assert_eq!(&walk.women_optimal().wife_of, &bf.women_optimal().wife_of);
        prop_assert_eq!(&walk.rotations, &bf.rotations);
        let mult = multiplicity(&walk);
        prop_assert!((0.0..=1.0).contains(&mult.m_frac));
        prop_assert!((0.0..=1.0).contains(&mult.w_frac));
        if walk.len() == 1 {
            prop_assert_eq!(mult.m_frac, 0.0);
            prop_assert_eq!(mult.total_rotation_length, 0);
        }
    }

    #[test]
    fn joint_polynomial_matches_direct_product(
        n1 in 1usize..=5,
        extra in 0usize..=3,
        seed in any::<u64>(),
    ) {
        let n2 = n1 + extra;
        let mut rng = rng_from_seed(seed);
        let x: Vec<f64> = (0..n1).map(|_| unit_f64(&mut rng)).collect();
        let y: Vec<f64> = (0..n1).map(|_| unit_f64(&mut rng)).collect();
        let poly = p_joint_poly(n1, n2, &x, &y).unwrap();

        let mut direct = 1.0;
        for &xv in &x {
            direct *= (1.0 - xv).powi(extra as i32);
        }
        for i in 0..n1 {
            for j in 0..n1 {
                if i != j {
                    direct *= 1.0 - x[i] * y[j];
                }
            }
        }
        let total = poly.sum();
        prop_assert!((total - direct).abs() <= 1e-9 * direct.max(1e-300));
        prop_assert!((poly.eval(1.0, 1.0) - total).abs() <= 1e-9 * total.max(1e-300));

        // the marginal factors keep every coefficient nonnegative, and
        // nothing lives beyond the joint degree bound
        let (du, dv) = poly.degree();
        prop_assert_eq!(du, n1 * (n1 - 1));
        prop_assert_eq!(dv, du);
        for u in 0..=du {
            for v in 0..=dv {
                let c = poly.get(u, v);
                prop_assert!(c >= 0.0);
                if u + v > du {
                    prop_assert_eq!(c, 0.0);
                }
            }
        }
    }

    #[test]
    fn matchings_survive_json((n1, n2) in shapes(6, 3), seed in any::<u64>()) {
        let inst = gen_instance(n1, n2, seed).unwrap();
        let (m, _) = propose(&inst, Side::Men);
        let js = serde_json::to_string(&m).unwrap();
        let back: Matching = serde_json::from_str(&js).unwrap();
        prop_assert_eq!(&back, &m);

        // breaking injectivity in the wire form must be rejected
        if n1 >= 2 {
            let mut v: serde_json::Value = serde_json::from_str(&js).unwrap();
            v["wife_of"][1] = v["wife_of"][0].clone();
            let res = serde_json::from_value::<Matching>(v);
            prop_assert!(res.is_err());
        }
    }
}
