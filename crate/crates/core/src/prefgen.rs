//! Random preference systems.
//!
//! A market has `n1` men and `n2 >= n1` women. Every man ranks all `n2`
//! women, every woman ranks all `n1` men, all orderings independent and
//! uniform. Two generation routes are provided: direct shuffling
//! ([`gen_instance`]) and the latent-matrix route ([`gen_latents`] +
//! [`instance_from_latents`]) where each side orders the other by i.i.d.
//! uniform scores. Both induce the same distribution on preference systems;
//! the latent route additionally exposes the scores themselves.

use crate::error::{Error, Result};
use crate::rng::{index_below, rng_from_seed, unit_f64};
use serde::{Deserialize, Serialize};

/// A fully specified preference system plus the inverse (rank) tables.
///
/// `men_pref[m]` is a permutation of `0..n2`, most preferred first;
/// `women_pref[w]` a permutation of `0..n1`. `men_rank[m][w]` is the 1-based
/// position of woman `w` on man `m`'s list, and symmetrically for
/// `women_rank`. Rank tables are rebuilt on deserialization and never travel
/// over the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire", into = "InstanceWire")]
pub struct Instance {
    pub n1: usize,
    pub n2: usize,
    pub men_pref: Vec<Vec<u32>>,
    pub women_pref: Vec<Vec<u32>>,
    pub men_rank: Vec<Vec<u32>>,
    pub women_rank: Vec<Vec<u32>>,
}

/// Wire form: shape and the two preference tables, nothing derived.
#[derive(Serialize, Deserialize)]
struct InstanceWire {
    n1: usize,
    n2: usize,
    men_pref: Vec<Vec<u32>>,
    women_pref: Vec<Vec<u32>>,
}

impl From<Instance> for InstanceWire {
    fn from(inst: Instance) -> Self {
        InstanceWire {
            n1: inst.n1,
            n2: inst.n2,
            men_pref: inst.men_pref,
            women_pref: inst.women_pref,
        }
    }
}

impl TryFrom<InstanceWire> for Instance {
    type Error = Error;
    fn try_from(w: InstanceWire) -> Result<Instance> {
        Instance::from_prefs(w.n1, w.n2, w.men_pref, w.women_pref)
    }
}

fn check_shape(n1: usize, n2: usize) -> Result<()> {
    if n1 < 1 {
        return Err(Error::Domain("n1 must be at least 1".into()));
    }
    if n2 < n1 {
        return Err(Error::Domain(format!(
            "need n2 >= n1, got n1={n1}, n2={n2}"
        )));
    }
    Ok(())
}

/// 1-based rank table for one side's preference rows.
fn rank_table(pref: &[Vec<u32>], width: usize) -> Vec<Vec<u32>> {
    pref.iter()
        .map(|row| {
            let mut rk = vec![0u32; width];
            for (pos, &other) in row.iter().enumerate() {
                rk[other as usize] = pos as u32 + 1;
            }
            rk
        })
        .collect()
}

fn check_permutation(row: &[u32], width: usize, what: &str, idx: usize) -> Result<()> {
    if row.len() != width {
        return Err(Error::Domain(format!(
            "{what} {idx}: expected {width} entries, got {}",
            row.len()
        )));
    }
    let mut seen = vec![false; width];
    for &v in row {
        let v = v as usize;
        if v >= width || seen[v] {
            return Err(Error::Domain(format!(
                "{what} {idx} is not a permutation of 0..{width}"
            )));
        }
        seen[v] = true;
    }
    Ok(())
}

impl Instance {
    /// Build and validate an instance from explicit preference tables
    /// (this is the entry point for untrusted input, e.g. JSON).
    pub fn from_prefs(
        n1: usize,
        n2: usize,
        men_pref: Vec<Vec<u32>>,
        women_pref: Vec<Vec<u32>>,
    ) -> Result<Instance> {
        check_shape(n1, n2)?;
        if men_pref.len() != n1 {
            return Err(Error::Domain(format!(
                "expected {n1} men's rows, got {}",
                men_pref.len()
            )));
        }
        if women_pref.len() != n2 {
            return Err(Error::Domain(format!(
                "expected {n2} women's rows, got {}",
                women_pref.len()
            )));
        }
        for (m, row) in men_pref.iter().enumerate() {
            check_permutation(row, n2, "men_pref row", m)?;
        }
        for (w, row) in women_pref.iter().enumerate() {
            check_permutation(row, n1, "women_pref row", w)?;
        }
        let men_rank = rank_table(&men_pref, n2);
        let women_rank = rank_table(&women_pref, n1);
        Ok(Instance {
            n1,
            n2,
            men_pref,
            women_pref,
            men_rank,
            women_rank,
        })
    }
}

/// Fisher–Yates over the whole slice, high index down.
fn shuffle(rng: &mut rand_chacha::ChaCha8Rng, v: &mut [u32]) {
    for i in (1..v.len()).rev() {
        let j = index_below(rng, i as u32 + 1) as usize;
        v.swap(i, j);
    }
}

/// Generate a uniform preference system. Draw order is fixed (men's rows
/// 0..n1, then women's rows 0..n2), so a given seed always yields the same
/// instance.
pub fn gen_instance(n1: usize, n2: usize, seed: u64) -> Result<Instance> {
    check_shape(n1, n2)?;
    let mut rng = rng_from_seed(seed);
    let mut men_pref = Vec::with_capacity(n1);
    for _ in 0..n1 {
        let mut row: Vec<u32> = (0..n2 as u32).collect();
        shuffle(&mut rng, &mut row);
        men_pref.push(row);
    }
    let mut women_pref = Vec::with_capacity(n2);
    for _ in 0..n2 {
        let mut row: Vec<u32> = (0..n1 as u32).collect();
        shuffle(&mut rng, &mut row);
        women_pref.push(row);
    }
    let men_rank = rank_table(&men_pref, n2);
    let women_rank = rank_table(&women_pref, n1);
    Ok(Instance {
        n1,
        n2,
        men_pref,
        women_pref,
        men_rank,
        women_rank,
    })
}

/// Latent score matrices. `x[i][j]` is man `i`'s score for woman `j` (lower
/// = better), `y[i][j]` is woman `j`'s score for man `i`. Rows of `x` and
/// columns of `y` are duplicate-free by construction.
#[derive(Debug, Clone)]
pub struct LatentMatrices {
    pub n1: usize,
    pub n2: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

fn has_dup(vals: &mut [f64]) -> bool {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.windows(2).any(|w| w[0] == w[1])
}

/// Draw the latent matrices: `x` filled row by row, `y` column by column,
/// every entry an independent uniform in [0,1). A row of `x` (column of `y`)
/// containing a duplicate is redrawn whole — vanishingly rare with 53-bit
/// uniforms, but it keeps the sorted orders well-defined.
pub fn gen_latents(n1: usize, n2: usize, seed: u64) -> Result<LatentMatrices> {
    check_shape(n1, n2)?;
    let mut rng = rng_from_seed(seed);
    let mut x = vec![vec![0.0f64; n2]; n1];
    for row in x.iter_mut() {
        loop {
            for v in row.iter_mut() {
                *v = unit_f64(&mut rng);
            }
            let mut copy = row.clone();
            if !has_dup(&mut copy) {
                break;
            }
        }
    }
    let mut y = vec![vec![0.0f64; n2]; n1];
    for j in 0..n2 {
        loop {
            for row in y.iter_mut() {
                row[j] = unit_f64(&mut rng);
            }
            let mut col: Vec<f64> = y.iter().map(|row| row[j]).collect();
            if !has_dup(&mut col) {
                break;
            }
        }
    }
    Ok(LatentMatrices { n1, n2, x, y })
}

/// Order both sides by their latent scores, ascending (a smaller score means
/// a more desirable partner). Fails if any row of `x` or column of `y`
/// contains ties or out-of-range values.
pub fn instance_from_latents(lat: &LatentMatrices) -> Result<Instance> {
    check_shape(lat.n1, lat.n2)?;
    if lat.x.len() != lat.n1 || lat.y.len() != lat.n1 {
        return Err(Error::Domain("latent matrices have the wrong row count".into()));
    }
    for row in lat.x.iter().chain(lat.y.iter()) {
        if row.len() != lat.n2 {
            return Err(Error::Domain("latent matrices have the wrong row width".into()));
        }
        if row.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::Domain("latent scores must lie in [0,1)".into()));
        }
    }
    let mut men_pref = Vec::with_capacity(lat.n1);
    for i in 0..lat.n1 {
        let mut idx: Vec<u32> = (0..lat.n2 as u32).collect();
        idx.sort_by(|&a, &b| {
            lat.x[i][a as usize]
                .partial_cmp(&lat.x[i][b as usize])
                .unwrap()
        });
        for w in idx.windows(2) {
            if lat.x[i][w[0] as usize] == lat.x[i][w[1] as usize] {
                return Err(Error::Domain(format!("tie in latent row {i} of x")));
            }
        }
        men_pref.push(idx);
    }
    let mut women_pref = Vec::with_capacity(lat.n2);
    for j in 0..lat.n2 {
        let mut idx: Vec<u32> = (0..lat.n1 as u32).collect();
        idx.sort_by(|&a, &b| {
            lat.y[a as usize][j]
                .partial_cmp(&lat.y[b as usize][j])
                .unwrap()
        });
        for m in idx.windows(2) {
            if lat.y[m[0] as usize][j] == lat.y[m[1] as usize][j] {
                return Err(Error::Domain(format!("tie in latent column {j} of y")));
            }
        }
        women_pref.push(idx);
    }
    Instance::from_prefs(lat.n1, lat.n2, men_pref, women_pref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_seed;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(gen_instance(0, 3, 1), Err(Error::Domain(_))));
        assert!(matches!(gen_instance(4, 3, 1), Err(Error::Domain(_))));
        assert!(matches!(gen_latents(3, 2, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn generated_instances_validate_and_are_deterministic() {
        let a = gen_instance(6, 9, 123).unwrap();
        let b = gen_instance(6, 9, 123).unwrap();
        assert_eq!(a.men_pref, b.men_pref);
        assert_eq!(a.women_pref, b.women_pref);
        let c = gen_instance(6, 9, 124).unwrap();
        assert_ne!(a.men_pref, c.men_pref);
        // round-trip through the validating constructor
        let rebuilt =
            Instance::from_prefs(a.n1, a.n2, a.men_pref.clone(), a.women_pref.clone()).unwrap();
        assert_eq!(rebuilt.men_rank, a.men_rank);
        assert_eq!(rebuilt.women_rank, a.women_rank);
    }

    #[test]
    fn rank_tables_invert_preferences() {
        let inst = gen_instance(5, 8, 7).unwrap();
        for m in 0..inst.n1 {
            for (pos, &w) in inst.men_pref[m].iter().enumerate() {
                assert_eq!(inst.men_rank[m][w as usize], pos as u32 + 1);
            }
        }
        for w in 0..inst.n2 {
            for (pos, &m) in inst.women_pref[w].iter().enumerate() {
                assert_eq!(inst.women_rank[w][m as usize], pos as u32 + 1);
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let inst = gen_instance(3, 5, 42).unwrap();
        let js = serde_json::to_string(&inst).unwrap();
        assert!(!js.contains("men_rank"), "rank tables must not travel");
        let back: Instance = serde_json::from_str(&js).unwrap();
        assert_eq!(back.men_pref, inst.men_pref);
        assert_eq!(back.men_rank, inst.men_rank);

        let bad = r#"{"n1":2,"n2":2,"men_pref":[[0,0],[1,0]],"women_pref":[[0,1],[1,0]]}"#;
        assert!(serde_json::from_str::<Instance>(bad).is_err());
    }

    #[test]
    fn latent_route_matches_shapes_and_rejects_ties() {
        let lat = gen_latents(4, 6, 99).unwrap();
        let inst = instance_from_latents(&lat).unwrap();
        assert_eq!(inst.n1, 4);
        assert_eq!(inst.n2, 6);

        let mut tied = lat.clone();
        tied.x[2][1] = tied.x[2][4];
        assert!(matches!(
            instance_from_latents(&tied),
            Err(Error::Domain(_))
        ));
    }

    /// First-position frequency under direct generation: man 0 puts woman 0
    /// first with probability 1/7 at n2 = 7. Binomial 3-sigma band at 10^4
    /// seeds is ±0.0105.
    #[test]
    fn direct_route_first_choice_frequency() {
        let trials = 10_000u64;
        let mut hits = 0u64;
        for t in 0..trials {
            let inst = gen_instance(5, 7, child_seed(2024, 7, t)).unwrap();
            if inst.men_pref[0][0] == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!(
            (freq - 1.0 / 7.0).abs() <= 0.0105,
            "first-choice frequency {freq} out of band"
        );
    }

    /// Latent route distribution check at n1 = n2 = 2: all 16 preference
    /// systems should be uniform. Chi-square with 15 degrees of freedom,
    /// p = 0.001 critical value 37.70.
    #[test]
    fn latent_route_uniform_over_small_systems() {
        let trials = 100_000u64;
        let mut counts = [0u64; 16];
        for t in 0..trials {
            let lat = gen_latents(2, 2, child_seed(31, 8, t)).unwrap();
            let inst = instance_from_latents(&lat).unwrap();
            let code = (inst.men_pref[0][0] as usize)
                | (inst.men_pref[1][0] as usize) << 1
                | (inst.women_pref[0][0] as usize) << 2
                | (inst.women_pref[1][0] as usize) << 3;
            counts[code] += 1;
        }
        let expect = trials as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 37.70, "chi-square {chi2} too large: {counts:?}");
    }

    /// Same check for the direct route at (3,3), man 0's row over 6 orders.
    /// Chi-square df 5, p = 0.001 critical value 20.52.
    #[test]
    fn direct_route_uniform_over_orderings() {
        let trials = 10_000u64;
        let mut counts = std::collections::HashMap::new();
        for t in 0..trials {
            let inst = gen_instance(3, 3, child_seed(77, 9, t)).unwrap();
            *counts.entry(inst.men_pref[0].clone()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expect = trials as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 20.52, "chi-square {chi2} too large");
    }
}
