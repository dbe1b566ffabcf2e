//! The full stable set via rotations.
//!
//! In a stable matching, man m's *successor* is found by scanning his list
//! strictly below his wife: the first woman who prefers m to her current
//! husband. The scan stops dead at the first unmatched woman — she would
//! take m outright, so no stable matching can move m past her, and men whose
//! scan hits her first have no successor at all. Following each man to the
//! husband of his successor gives a partial functional digraph whose cycles
//! are the *exposed rotations*; eliminating one (each man in the cycle takes
//! the next man's wife) steps down the lattice: the men's total rank q
//! strictly grows, the women's total rank r strictly shrinks, and the set of
//! matched women never changes. Walking all eliminations from the
//! men-optimal matching visits every stable matching.
//!
//! [`brute_force_all`] is the independent route — filter all injections by
//! the stability test — kept deliberately free of rotation logic so the two
//! can be checked against each other.

use crate::engine::{propose, stable_unchecked, Matching, Side, UNMATCHED};
use crate::error::{Error, Result};
use crate::prefgen::Instance;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A rotation: the cyclic list of (man, wife) pairs it moves, stored in
/// cycle order and rotated so the smallest man comes first. Always has at
/// least two pairs; men and women within are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rotation {
    pub pairs: Vec<(u32, u32)>,
}

impl Rotation {
    /// Canonicalize a cycle: rotate so the minimum man leads.
    fn from_cycle(mut pairs: Vec<(u32, u32)>) -> Rotation {
        debug_assert!(pairs.len() >= 2);
        let lead = pairs
            .iter()
            .enumerate()
            .min_by_key(|(_, &(m, _))| m)
            .map(|(i, _)| i)
            .unwrap();
        pairs.rotate_left(lead);
        Rotation { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a rotation has at least two pairs by construction
    }
}

/// Successor scan for one man; `None` when he has no successor. Positions
/// below the wife start at her 1-based rank (her own slot is rank - 1).
fn successor(inst: &Instance, m: &Matching, man: usize) -> Option<u32> {
    let wife = m.wife_of[man] as usize;
    let start = inst.men_rank[man][wife] as usize;
    for pos in start..inst.n2 {
        let w = inst.men_pref[man][pos] as usize;
        let h = m.husband_of[w];
        if h == UNMATCHED {
            return None; // she'd take him; the lattice cannot pass her
        }
        if inst.women_rank[w][man] < inst.women_rank[w][h as usize] {
            return Some(w as u32);
        }
    }
    None
}

/// All rotations exposed in a stable matching, in deterministic order
/// (sorted by their canonical pair lists). Errors if `m` is not stable.
pub fn exposed_rotations(inst: &Instance, m: &Matching) -> Result<Vec<Rotation>> {
    if !crate::engine::is_stable(inst, m)? {
        return Err(Error::NotStable);
    }
    Ok(exposed_unchecked(inst, m))
}

/// Rotation scan without the stability precheck, for matchings already
/// known stable (the enumeration loop).
fn exposed_unchecked(inst: &Instance, m: &Matching) -> Vec<Rotation> {
    let n1 = inst.n1;
    // next_man[u] = husband of u's successor, or NONE
    const NONE: u32 = u32::MAX;
    let mut next_man = vec![NONE; n1];
    for (man, slot) in next_man.iter_mut().enumerate() {
        if let Some(w) = successor(inst, m, man) {
            *slot = m.husband_of[w as usize];
        }
    }

    // cycle detection in a partial functional graph
    let mut rotations = Vec::new();
    let mut color = vec![0u8; n1]; // 0 fresh, 1 on current path, 2 settled
    let mut path = Vec::new();
    for start in 0..n1 {
        if color[start] != 0 {
            continue;
        }
        path.clear();
        let mut u = start;
        loop {
            color[u] = 1;
            path.push(u);
            let v = next_man[u];
            if v == NONE {
                break;
            }
            let v = v as usize;
            if color[v] == 1 {
                // the tail of `path` from v is a cycle
                let at = path.iter().position(|&x| x == v).unwrap();
                let pairs = path[at..]
                    .iter()
                    .map(|&man| (man as u32, m.wife_of[man]))
                    .collect();
                rotations.push(Rotation::from_cycle(pairs));
                break;
            }
            if color[v] == 2 {
                break;
            }
            u = v;
        }
        for &x in &path {
            color[x] = 2;
        }
    }
    rotations.sort_by(|a, b| a.pairs.cmp(&b.pairs));
    rotations
}

/// Apply a rotation: each man in the cycle marries the next man's wife.
/// Errors if `m` is unstable or the rotation is not exposed in `m`.
pub fn eliminate(inst: &Instance, m: &Matching, rot: &Rotation) -> Result<Matching> {
    if !crate::engine::is_stable(inst, m)? {
        return Err(Error::NotStable);
    }
    let r = rot.pairs.len();
    if r < 2 {
        return Err(Error::NotExposed);
    }
    for i in 0..r {
        let (man, wife) = rot.pairs[i];
        let (_, next_wife) = rot.pairs[(i + 1) % r];
        if man as usize >= inst.n1
            || m.wife_of[man as usize] != wife
            || successor(inst, m, man as usize) != Some(next_wife)
        {
            return Err(Error::NotExposed);
        }
    }
    Ok(eliminate_unchecked(m, rot))
}

fn eliminate_unchecked(m: &Matching, rot: &Rotation) -> Matching {
    let mut out = m.clone();
    let r = rot.pairs.len();
    for i in 0..r {
        let (man, _) = rot.pairs[i];
        let (_, next_wife) = rot.pairs[(i + 1) % r];
        out.wife_of[man as usize] = next_wife;
        out.husband_of[next_wife as usize] = man;
    }
    out
}

/// Every stable matching of an instance, with the extremes designated and
/// per-agent partner counts.
#[derive(Debug, Clone, Serialize)]
pub struct StableSet {
    /// Discovery order; `matchings[men_optimal]` is the men-optimal one.
    pub matchings: Vec<Matching>,
    pub men_optimal: usize,
    pub women_optimal: usize,
    /// Distinct rotations exposed anywhere in the set, sorted.
    pub rotations: Vec<Rotation>,
    /// Number of distinct stable partners per man / per woman (a woman
    /// unmatched throughout scores 0).
    pub per_man_partner_count: Vec<u32>,
    pub per_woman_partner_count: Vec<u32>,
}

impl StableSet {
    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn men_optimal(&self) -> &Matching {
        &self.matchings[self.men_optimal]
    }

    pub fn women_optimal(&self) -> &Matching {
        &self.matchings[self.women_optimal]
    }

    fn finish(
        inst: &Instance,
        matchings: Vec<Matching>,
        men_optimal: usize,
        women_optimal: usize,
        rotations: Vec<Rotation>,
    ) -> StableSet {
        let mut per_man = vec![HashSet::new(); inst.n1];
        let mut per_woman = vec![HashSet::new(); inst.n2];
        for m in &matchings {
            for (man, &w) in m.wife_of.iter().enumerate() {
                per_man[man].insert(w);
                per_woman[w as usize].insert(man as u32);
            }
        }
        StableSet {
            matchings,
            men_optimal,
            women_optimal,
            rotations,
            per_man_partner_count: per_man.iter().map(|s| s.len() as u32).collect(),
            per_woman_partner_count: per_woman.iter().map(|s| s.len() as u32).collect(),
        }
    }
}

/// Multiplicity summary of a stable set: the share of men (of n1) and of
/// women (of n2) with two or more stable partners, and the total length of
/// all distinct rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub m_frac: f64,
    pub w_frac: f64,
    pub total_rotation_length: u64,
}

pub fn multiplicity(set: &StableSet) -> Multiplicity {
    let n1 = set.per_man_partner_count.len();
    let n2 = set.per_woman_partner_count.len();
    let men = set.per_man_partner_count.iter().filter(|&&c| c >= 2).count();
    let women = set
        .per_woman_partner_count
        .iter()
        .filter(|&&c| c >= 2)
        .count();
    Multiplicity {
        m_frac: men as f64 / n1 as f64,
        w_frac: women as f64 / n2 as f64,
        total_rotation_length: set.rotations.iter().map(|r| r.len() as u64).sum(),
    }
}

/// Enumerate the whole stable set by depth-first rotation elimination from
/// the men-optimal matching. `cap` bounds the number of distinct matchings
/// ever held; exceeding it aborts with [`Error::CapExceeded`].
pub fn enumerate_all(inst: &Instance, cap: usize) -> Result<StableSet> {
    if cap < 1 {
        return Err(Error::Domain("cap must be at least 1".into()));
    }
    let m1 = propose(inst, Side::Men).0;
    debug_assert!(stable_unchecked(inst, &m1));

    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut rot_seen: HashSet<Rotation> = HashSet::new();
    let mut rotations = Vec::new();
    let mut matchings = Vec::new();
    let mut stack = vec![m1.clone()];
    seen.insert(m1.wife_of.clone());

    while let Some(m) = stack.pop() {
        for rot in exposed_unchecked(inst, &m) {
            let next = eliminate_unchecked(&m, &rot);
            if rot_seen.insert(rot.clone()) {
                rotations.push(rot);
            }
            if !seen.contains(&next.wife_of) {
                if seen.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                seen.insert(next.wife_of.clone());
                stack.push(next);
            }
        }
        matchings.push(m);
    }

    let wo = propose(inst, Side::Women).0;
    let men_optimal = matchings
        .iter()
        .position(|m| m.wife_of == m1.wife_of)
        .ok_or_else(|| Error::Internal("men-optimal matching lost during walk".into()))?;
    let women_optimal = matchings
        .iter()
        .position(|m| m.wife_of == wo.wife_of)
        .ok_or_else(|| {
            Error::Internal("women-optimal matching not reached by rotation walk".into())
        })?;
    rotations.sort_by(|a, b| a.pairs.cmp(&b.pairs));
    Ok(StableSet::finish(
        inst,
        matchings,
        men_optimal,
        women_optimal,
        rotations,
    ))
}

/// Number of injections from n1 men into n2 women, saturating.
fn injection_count(n1: usize, n2: usize) -> u128 {
    let mut total: u128 = 1;
    for k in 0..n1 {
        total = total.saturating_mul((n2 - k) as u128);
    }
    total
}

/// Independent oracle: enumerate *all* injections of men into women, keep
/// the stable ones. Refuses up front when the injection count exceeds
/// `bound`. The extremes are designated by the rank functionals alone —
/// men-optimal is the unique q-minimizer, women-optimal the unique
/// r-minimizer — so no proposal logic is involved.
pub fn brute_force_all(inst: &Instance, bound: u128) -> Result<StableSet> {
    let total = injection_count(inst.n1, inst.n2);
    if total > bound {
        return Err(Error::BoundExceeded {
            injections: total,
            bound,
        });
    }

    let (n1, n2) = (inst.n1, inst.n2);
    let mut matchings = Vec::new();
    let mut wife_of = vec![0u32; n1];
    let mut used = vec![false; n2];
    // depth-first over injections in lexicographic order
    fn rec(
        inst: &Instance,
        depth: usize,
        wife_of: &mut Vec<u32>,
        used: &mut Vec<bool>,
        out: &mut Vec<Matching>,
    ) {
        if depth == inst.n1 {
            let m = Matching::from_wives(wife_of.clone(), inst.n2)
                .expect("constructed injection is valid");
            if stable_unchecked(inst, &m) {
                out.push(m);
            }
            return;
        }
        for w in 0..inst.n2 as u32 {
            if !used[w as usize] {
                used[w as usize] = true;
                wife_of[depth] = w;
                rec(inst, depth + 1, wife_of, used, out);
                used[w as usize] = false;
            }
        }
    }
    rec(inst, 0, &mut wife_of, &mut used, &mut matchings);

    if matchings.is_empty() {
        // cannot happen: deferred acceptance always lands somewhere, but the
        // oracle must not silently produce nonsense
        return Err(Error::Internal("no stable matching found".into()));
    }

    let rp: Vec<(u64, u64)> = matchings
        .iter()
        .map(|m| {
            let rp = crate::engine::ranks(inst, m).expect("constructed matching fits");
            (rp.q, rp.r)
        })
        .collect();
    let men_optimal = (0..matchings.len()).min_by_key(|&i| rp[i].0).unwrap();
    let women_optimal = (0..matchings.len()).min_by_key(|&i| rp[i].1).unwrap();

    let mut rot_seen: HashSet<Rotation> = HashSet::new();
    let mut rotations = Vec::new();
    for m in &matchings {
        for rot in exposed_unchecked(inst, m) {
            if rot_seen.insert(rot.clone()) {
                rotations.push(rot);
            }
        }
    }
    rotations.sort_by(|a, b| a.pairs.cmp(&b.pairs));
    Ok(StableSet::finish(
        inst,
        matchings,
        men_optimal,
        women_optimal,
        rotations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ranks;
    use crate::prefgen::gen_instance;
    use crate::Instance;

    /// 2x2 with opposed tastes: two stable matchings, one rotation.
    fn square_2x2() -> Instance {
        Instance::from_prefs(
            2,
            2,
            vec![vec![0, 1], vec![1, 0]],
            vec![vec![1, 0], vec![0, 1]],
        )
        .unwrap()
    }

    #[test]
    fn rotation_on_the_classic_square() {
        let inst = square_2x2();
        let (m1, _) = propose(&inst, Side::Men);
        assert_eq!(m1.wife_of, vec![0, 1]);
        let rots = exposed_rotations(&inst, &m1).unwrap();
        assert_eq!(rots.len(), 1);
        assert_eq!(rots[0].pairs, vec![(0, 0), (1, 1)]);

        let m2 = eliminate(&inst, &m1, &rots[0]).unwrap();
        assert_eq!(m2.wife_of, vec![1, 0]);
        assert!(crate::engine::is_stable(&inst, &m2).unwrap());
        // the bottom of the lattice exposes nothing
        assert!(exposed_rotations(&inst, &m2).unwrap().is_empty());

        let set = enumerate_all(&inst, 1000).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.men_optimal().wife_of, vec![0, 1]);
        assert_eq!(set.women_optimal().wife_of, vec![1, 0]);
        let mult = multiplicity(&set);
        assert_eq!(mult.m_frac, 1.0);
        assert_eq!(mult.w_frac, 1.0);
        assert_eq!(mult.total_rotation_length, 2);
    }

    /// An unmatched woman in the middle of a man's list blocks his successor
    /// scan entirely; treating her as skippable would fabricate a rotation
    /// leading out of the stable set.
    #[test]
    fn unmatched_woman_terminates_the_scan() {
        let inst = Instance::from_prefs(
            2,
            3,
            vec![vec![0, 2, 1], vec![1, 0, 2]],
            vec![vec![1, 0], vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        let (m1, _) = propose(&inst, Side::Men);
        assert_eq!(m1.wife_of, vec![0, 1]);
        // m0's scan: next after w0 is w2, unmatched -> no successor, even
        // though the matched w1 further down prefers m0 to her husband
        assert_eq!(successor(&inst, &m1, 0), None);
        assert!(exposed_rotations(&inst, &m1).unwrap().is_empty());
        // so this market has exactly one stable matching
        let set = enumerate_all(&inst, 1000).unwrap();
        assert_eq!(set.len(), 1);
        let bf = brute_force_all(&inst, 10_000).unwrap();
        assert_eq!(bf.len(), 1);
        assert_eq!(bf.matchings[0].wife_of, m1.wife_of);
    }

    #[test]
    fn eliminate_rejects_garbage() {
        let inst = square_2x2();
        let (m1, _) = propose(&inst, Side::Men);
        let (m2w, _) = propose(&inst, Side::Women);
        let rots = exposed_rotations(&inst, &m1).unwrap();
        // exposed in m1, not in the women-optimal matching
        assert!(matches!(
            eliminate(&inst, &m2w, &rots[0]),
            Err(Error::NotExposed)
        ));
        // a single-pair "rotation" is never exposed
        let bad = Rotation {
            pairs: vec![(0, 1)],
        };
        assert!(matches!(
            eliminate(&inst, &m1, &bad),
            Err(Error::NotExposed)
        ));
        // unstable matchings are refused outright: here (m1, w0) blocks
        let inst3 = Instance::from_prefs(
            2,
            3,
            vec![vec![0, 1, 2], vec![0, 2, 1]],
            vec![vec![1, 0], vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        let unstable = Matching::from_wives(vec![0, 2], 3).unwrap();
        assert!(!crate::engine::is_stable(&inst3, &unstable).unwrap());
        assert!(matches!(
            exposed_rotations(&inst3, &unstable),
            Err(Error::NotStable)
        ));
        assert!(matches!(
            eliminate(&inst3, &unstable, &rots[0]),
            Err(Error::NotStable)
        ));
    }

    #[test]
    fn cap_is_respected() {
        let inst = square_2x2();
        assert!(matches!(
            enumerate_all(&inst, 1),
            Err(Error::CapExceeded { cap: 1 })
        ));
        assert!(enumerate_all(&inst, 2).is_ok());
        assert!(matches!(enumerate_all(&inst, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn bound_is_respected() {
        let inst = gen_instance(5, 8, 3).unwrap();
        // 8*7*6*5*4 = 6720 injections
        assert!(matches!(
            brute_force_all(&inst, 6719),
            Err(Error::BoundExceeded {
                injections: 6720,
                ..
            })
        ));
        assert!(brute_force_all(&inst, 6720).is_ok());
    }

    #[test]
    fn walk_agrees_with_brute_force_on_random_markets() {
        let mut multi = 0;
        for seed in 0..60 {
            let inst = gen_instance(4, 5, 1000 + seed).unwrap();
            let walk = enumerate_all(&inst, 1_000_000).unwrap();
            let bf = brute_force_all(&inst, 10_000_000).unwrap();
            let mut a: Vec<_> = walk.matchings.iter().map(|m| m.wife_of.clone()).collect();
            let mut b: Vec<_> = bf.matchings.iter().map(|m| m.wife_of.clone()).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b, "seed {seed}");
            assert_eq!(
                walk.men_optimal().wife_of,
                bf.men_optimal().wife_of,
                "seed {seed}"
            );
            assert_eq!(
                walk.women_optimal().wife_of,
                bf.women_optimal().wife_of,
                "seed {seed}"
            );
            assert_eq!(walk.rotations, bf.rotations, "seed {seed}");
            if walk.len() > 1 {
                multi += 1;
            }
        }
        assert!(multi > 0, "test corpus never exercised a nontrivial lattice");
    }

    #[test]
    fn elimination_moves_q_up_and_r_down_and_keeps_the_matched_set() {
        for seed in 0..40 {
            let inst = gen_instance(5, 7, 300 + seed).unwrap();
            let set = enumerate_all(&inst, 1_000_000).unwrap();
            let matched: Vec<_> = set.matchings[0].unmatched_women();
            for m in &set.matchings {
                assert_eq!(m.unmatched_women(), matched, "matched set drifted");
                for rot in exposed_rotations(&inst, m).unwrap() {
                    let next = eliminate(&inst, m, &rot).unwrap();
                    let before = ranks(&inst, m).unwrap();
                    let after = ranks(&inst, &next).unwrap();
                    assert!(after.q > before.q);
                    assert!(after.r < before.r);
                }
            }
        }
    }

    #[test]
    fn extremes_bound_every_member() {
        for seed in 0..40 {
            let inst = gen_instance(5, 6, 500 + seed).unwrap();
            let set = enumerate_all(&inst, 1_000_000).unwrap();
            let q_opt = ranks(&inst, set.men_optimal()).unwrap();
            let r_opt = ranks(&inst, set.women_optimal()).unwrap();
            for m in &set.matchings {
                let rp = ranks(&inst, m).unwrap();
                assert!(rp.q >= q_opt.q && rp.q <= r_opt.q);
                assert!(rp.r <= q_opt.r && rp.r >= r_opt.r);
            }
        }
    }
}
