//! Proposal engine and stability checks.
//!
//! [`propose`] runs sequential deferred acceptance from either side:
//! proposers are activated in index order, and a proposer displaced later is
//! re-activated immediately (the displacement chain runs to quiescence
//! before the next fresh proposer starts). Each proposer walks his list with
//! a cursor and never re-proposes, so a run costs O(n1·n2) in the worst case
//! and one table lookup per proposal.
//!
//! With men proposing the result is men-optimal (every man gets his best
//! stable partner) and women-pessimal; women proposing is the mirror image.

use crate::error::{Error, Result};
use crate::prefgen::Instance;
use serde::{Deserialize, Serialize};

/// Sentinel for "no partner" in `husband_of`. Every man is matched in any
/// stable matching of an n1 <= n2 market, so `wife_of` never holds it.
pub const UNMATCHED: u32 = u32::MAX;

/// Which side makes proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Men,
    Women,
}

/// A matching, stored redundantly from both sides. `wife_of[m]` is always a
/// valid woman; `husband_of[w]` is [`UNMATCHED`] for the n2 - n1 women left
/// over. Serializes as `wife_of` plus the list of unmatched women.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatchingWire", into = "MatchingWire")]
pub struct Matching {
    pub wife_of: Vec<u32>,
    pub husband_of: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct MatchingWire {
    wife_of: Vec<u32>,
    unmatched_women: Vec<u32>,
}

impl From<Matching> for MatchingWire {
    fn from(m: Matching) -> Self {
        MatchingWire {
            unmatched_women: m.unmatched_women(),
            wife_of: m.wife_of,
        }
    }
}

impl TryFrom<MatchingWire> for Matching {
    type Error = Error;
    fn try_from(w: MatchingWire) -> Result<Matching> {
        let n2 = w.wife_of.len() + w.unmatched_women.len();
        let m = Matching::from_wives(w.wife_of, n2)?;
        let mut listed = w.unmatched_women;
        listed.sort_unstable();
        if listed != m.unmatched_women() {
            return Err(Error::Domain(
                "unmatched_women does not complement wife_of".into(),
            ));
        }
        Ok(m)
    }
}

impl Matching {
    /// Build from the men's side, deriving the husband table. Fails unless
    /// `wife_of` is an injection into 0..n2.
    pub fn from_wives(wife_of: Vec<u32>, n2: usize) -> Result<Matching> {
        let mut husband_of = vec![UNMATCHED; n2];
        for (m, &w) in wife_of.iter().enumerate() {
            let wi = w as usize;
            if wi >= n2 {
                return Err(Error::Domain(format!(
                    "man {m} matched to woman {w}, but n2 = {n2}"
                )));
            }
            if husband_of[wi] != UNMATCHED {
                return Err(Error::Domain(format!("woman {w} matched twice")));
            }
            husband_of[wi] = m as u32;
        }
        Ok(Matching {
            wife_of,
            husband_of,
        })
    }

    /// The pairing m <-> m for m in 0..n1 (needs n2 >= n1).
    pub fn identity(n1: usize, n2: usize) -> Matching {
        let wife_of: Vec<u32> = (0..n1 as u32).collect();
        Matching::from_wives(wife_of, n2).expect("identity injection is valid")
    }

    pub fn n1(&self) -> usize {
        self.wife_of.len()
    }

    pub fn n2(&self) -> usize {
        self.husband_of.len()
    }

    /// Sorted list of women with no partner.
    pub fn unmatched_women(&self) -> Vec<u32> {
        self.husband_of
            .iter()
            .enumerate()
            .filter(|(_, &h)| h == UNMATCHED)
            .map(|(w, _)| w as u32)
            .collect()
    }
}

/// The two rank functionals of a matching: `q` sums each man's rank of his
/// wife, `r` sums each matched woman's rank of her husband (both 1-based).
/// `proposals` is set only on matchings built by [`propose`] and counts the
/// proposing side's proposals; with men proposing it always equals `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPair {
    pub q: u64,
    pub r: u64,
    pub proposals: Option<u64>,
}

/// Check a matching against an instance: right lengths, a valid injection,
/// both tables mutually inverse, every man matched.
fn validate(inst: &Instance, m: &Matching) -> Result<()> {
    if m.wife_of.len() != inst.n1 || m.husband_of.len() != inst.n2 {
        return Err(Error::Domain(format!(
            "matching shape ({}, {}) does not fit instance ({}, {})",
            m.wife_of.len(),
            m.husband_of.len(),
            inst.n1,
            inst.n2
        )));
    }
    let mut seen = vec![false; inst.n2];
    for (man, &w) in m.wife_of.iter().enumerate() {
        let wi = w as usize;
        if wi >= inst.n2 {
            return Err(Error::Domain(format!(
                "man {man} matched to nonexistent woman {w}"
            )));
        }
        if seen[wi] {
            return Err(Error::Domain(format!("woman {w} matched twice")));
        }
        seen[wi] = true;
        if m.husband_of[wi] != man as u32 {
            return Err(Error::Domain(format!(
                "tables disagree on woman {w}: wife_of says man {man}, husband_of says {}",
                m.husband_of[wi]
            )));
        }
    }
    for (w, &h) in m.husband_of.iter().enumerate() {
        if h != UNMATCHED && !seen[w] {
            return Err(Error::Domain(format!(
                "husband_of claims woman {w} is matched to man {h}, wife_of disagrees"
            )));
        }
    }
    Ok(())
}

/// Run deferred acceptance with the given side proposing.
///
/// Men proposing: every man ends matched (he cannot be rejected by all n2
/// women when only n1 - 1 rivals exist). Women proposing: exactly n2 - n1
/// women exhaust their lists and stay single. Returns the matching and its
/// rank pair with the proposal count filled in.
pub fn propose(inst: &Instance, side: Side) -> (Matching, RankPair) {
    match side {
        Side::Men => propose_men(inst),
        Side::Women => propose_women(inst),
    }
}

fn propose_men(inst: &Instance) -> (Matching, RankPair) {
    let (n1, n2) = (inst.n1, inst.n2);
    let mut next = vec![0u32; n1]; // cursor into each man's list
    let mut wife_of = vec![UNMATCHED; n1];
    let mut husband_of = vec![UNMATCHED; n2];
    let mut proposals = 0u64;

    for fresh in 0..n1 {
        let mut m = fresh as u32;
        loop {
            let pos = next[m as usize] as usize;
            debug_assert!(pos < n2, "man {m} exhausted his list");
            let w = inst.men_pref[m as usize][pos];
            next[m as usize] += 1;
            proposals += 1;
            let h = husband_of[w as usize];
            if h == UNMATCHED {
                husband_of[w as usize] = m;
                wife_of[m as usize] = w;
                break;
            }
            if inst.women_rank[w as usize][m as usize] < inst.women_rank[w as usize][h as usize] {
                husband_of[w as usize] = m;
                wife_of[m as usize] = w;
                wife_of[h as usize] = UNMATCHED;
                m = h; // displaced man continues immediately
            }
        }
    }

    let matching = Matching {
        wife_of,
        husband_of,
    };
    // each proposal advanced exactly one cursor, and each man's wife sits at
    // cursor - 1, so q == proposals by construction
    let q: u64 = next.iter().map(|&c| c as u64).sum();
    debug_assert_eq!(q, proposals);
    let r = sum_r(inst, &matching);
    (
        matching,
        RankPair {
            q,
            r,
            proposals: Some(proposals),
        },
    )
}

fn propose_women(inst: &Instance) -> (Matching, RankPair) {
    let (n1, n2) = (inst.n1, inst.n2);
    let mut next = vec![0u32; n2];
    let mut wife_of = vec![UNMATCHED; n1];
    let mut husband_of = vec![UNMATCHED; n2];
    let mut proposals = 0u64;

    for fresh in 0..n2 {
        let mut w = fresh as u32;
        loop {
            let pos = next[w as usize] as usize;
            if pos == n1 {
                break; // list exhausted; she stays single
            }
            let m = inst.women_pref[w as usize][pos];
            next[w as usize] += 1;
            proposals += 1;
            let cur = wife_of[m as usize];
            if cur == UNMATCHED {
                wife_of[m as usize] = w;
                husband_of[w as usize] = m;
                break;
            }
            if inst.men_rank[m as usize][w as usize] < inst.men_rank[m as usize][cur as usize] {
                wife_of[m as usize] = w;
                husband_of[w as usize] = m;
                husband_of[cur as usize] = UNMATCHED;
                w = cur;
            }
        }
    }

    let matching = Matching {
        wife_of,
        husband_of,
    };
    let q = sum_q(inst, &matching);
    let r = sum_r(inst, &matching);
    (
        matching,
        RankPair {
            q,
            r,
            proposals: Some(proposals),
        },
    )
}

fn sum_q(inst: &Instance, m: &Matching) -> u64 {
    m.wife_of
        .iter()
        .enumerate()
        .map(|(man, &w)| inst.men_rank[man][w as usize] as u64)
        .sum()
}

fn sum_r(inst: &Instance, m: &Matching) -> u64 {
    m.husband_of
        .iter()
        .enumerate()
        .filter(|(_, &h)| h != UNMATCHED)
        .map(|(w, &h)| inst.women_rank[w][h as usize] as u64)
        .sum()
}

/// Rank pair of an arbitrary matching (no proposal count).
pub fn ranks(inst: &Instance, m: &Matching) -> Result<RankPair> {
    validate(inst, m)?;
    Ok(RankPair {
        q: sum_q(inst, m),
        r: sum_r(inst, m),
        proposals: None,
    })
}

/// Stability test. A pair (m, w) blocks when m prefers w to his wife and w
/// is either single or prefers m to her husband; a matching is stable when
/// no pair blocks. Cost is one scan of each man's list down to his wife.
pub fn is_stable(inst: &Instance, m: &Matching) -> Result<bool> {
    validate(inst, m)?;
    Ok(stable_unchecked(inst, m))
}

/// Same scan without revalidating; for matchings this crate built itself.
pub(crate) fn stable_unchecked(inst: &Instance, m: &Matching) -> bool {
    for man in 0..inst.n1 {
        let wife = m.wife_of[man] as usize;
        let wife_rank = inst.men_rank[man][wife];
        for pos in 0..wife_rank as usize - 1 {
            let w = inst.men_pref[man][pos] as usize;
            let h = m.husband_of[w];
            if h == UNMATCHED || inst.women_rank[w][man] < inst.women_rank[w][h as usize] {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefgen::{gen_instance, Instance};

    fn tiny_2x3() -> Instance {
        // men: m0 w0>w1>w2, m1 w0>w2>w1; women: w0 m1>m0, w1 m0>m1, w2 m0>m1
        Instance::from_prefs(
            2,
            3,
            vec![vec![0, 1, 2], vec![0, 2, 1]],
            vec![vec![1, 0], vec![0, 1], vec![0, 1]],
        )
        .unwrap()
    }

    #[test]
    fn men_proposing_on_the_tiny_market() {
        let inst = tiny_2x3();
        let (m, rp) = propose(&inst, Side::Men);
        assert_eq!(m.wife_of, vec![1, 0]);
        assert_eq!(m.unmatched_women(), vec![2]);
        assert_eq!(rp.q, 3); // m0 got his 2nd choice, m1 his 1st
        assert_eq!(rp.r, 2); // both matched women got their 1st
        assert_eq!(rp.proposals, Some(3));
        assert!(is_stable(&inst, &m).unwrap());
    }

    #[test]
    fn women_proposing_reaches_the_same_unique_matching() {
        let inst = tiny_2x3();
        let (mw, rp) = propose(&inst, Side::Women);
        assert_eq!(mw.wife_of, vec![1, 0]); // unique stable matching here
        assert!(rp.proposals.unwrap() >= 2);
        assert!(is_stable(&inst, &mw).unwrap());
    }

    #[test]
    fn proposals_equal_q_with_men_proposing() {
        for seed in 0..50 {
            let inst = gen_instance(7, 11, seed).unwrap();
            let (_, rp) = propose(&inst, Side::Men);
            assert_eq!(rp.proposals, Some(rp.q));
        }
    }

    #[test]
    fn both_sides_produce_stable_matchings() {
        for seed in 100..150 {
            let inst = gen_instance(8, 13, seed).unwrap();
            let (mm, _) = propose(&inst, Side::Men);
            let (mw, _) = propose(&inst, Side::Women);
            assert!(is_stable(&inst, &mm).unwrap());
            assert!(is_stable(&inst, &mw).unwrap());
            // optimality of the proposing side, pessimality of the other:
            let (qm, qw) = (sum_q(&inst, &mm), sum_q(&inst, &mw));
            let (rm, rw) = (sum_r(&inst, &mm), sum_r(&inst, &mw));
            assert!(qm <= qw);
            assert!(rm >= rw);
        }
    }

    #[test]
    fn detects_blocking_pairs() {
        let inst = tiny_2x3();
        // m0-w0, m1-w1 leaves w0 preferring m1 and m1 preferring w0: blocked
        let m = Matching::from_wives(vec![0, 1], 3).unwrap();
        assert!(!is_stable(&inst, &m).unwrap());
        // and a matching leaving a woman that some man prefers unmatched
        let m2 = Matching::from_wives(vec![1, 2], 3).unwrap();
        assert!(!is_stable(&inst, &m2).unwrap());
    }

    #[test]
    fn unmatched_women_rank_below_every_wife() {
        // in any stable matching, every man prefers his wife to every
        // unmatched woman (else they would block)
        for seed in 0..30 {
            let inst = gen_instance(4, 9, seed).unwrap();
            let (m, _) = propose(&inst, Side::Men);
            for man in 0..inst.n1 {
                let wr = inst.men_rank[man][m.wife_of[man] as usize];
                for &w in &m.unmatched_women() {
                    assert!(inst.men_rank[man][w as usize] > wr);
                }
            }
        }
    }

    #[test]
    fn ranks_and_validation_errors() {
        let inst = tiny_2x3();
        let m = Matching::from_wives(vec![1, 0], 3).unwrap();
        let rp = ranks(&inst, &m).unwrap();
        assert_eq!((rp.q, rp.r, rp.proposals), (3, 2, None));

        // wrong shape
        let bad = Matching::from_wives(vec![0], 3).unwrap();
        assert!(matches!(ranks(&inst, &bad), Err(Error::Domain(_))));
        // inconsistent tables
        let mut twisted = m.clone();
        twisted.husband_of[0] = UNMATCHED;
        assert!(matches!(is_stable(&inst, &twisted), Err(Error::Domain(_))));
        // duplicate wife rejected at construction
        assert!(Matching::from_wives(vec![1, 1], 3).is_err());
        assert!(Matching::from_wives(vec![0, 7], 3).is_err());
    }

    #[test]
    fn matching_json_round_trip() {
        let inst = tiny_2x3();
        let (m, _) = propose(&inst, Side::Men);
        let js = serde_json::to_string(&m).unwrap();
        assert!(js.contains("unmatched_women"));
        let back: Matching = serde_json::from_str(&js).unwrap();
        assert_eq!(back, m);

        let bad = r#"{"wife_of":[1,0],"unmatched_women":[1]}"#;
        assert!(serde_json::from_str::<Matching>(bad).is_err());
    }
}
