//! Monte Carlo evaluation of the exact stability integrals.
//!
//! The probability that a fixed injection (say the identity) is stable in a
//! random (n1, n2) market is a 2·n1-dimensional integral over latent scores
//! x, y in [0,1]: the product of (1 - x_i·y_j) over ordered pairs i != j,
//! times (1 - x_h)^(n2-n1) for every man h. [`p_stable_mc`] samples it
//! directly. Refinements share the machinery: [`p_kl_mc`] resolves the
//! probability by the joint values (q, r) of the rank functionals through a
//! generating polynomial in two markers ([`p_joint_poly`]), and
//! [`p_rotation_mc`] gives the probability that stability comes with a
//! prescribed exposed rotation. [`empirical_p_stable`] and
//! [`empirical_p_rotation`] estimate the same quantities by drawing whole
//! markets, giving an independent cross-check of both the integrands and
//! the combinatorics.

// the kernels spell out products like prod_{i != j} (1 - x_i y_j); explicit
// indices keep the code aligned with that notation
#![allow(clippy::needless_range_loop)]
//!
//! All estimators split work into batches with per-batch child streams and
//! fold results in batch order, so values are identical under any thread
//! count. Errors come from batch means.

use crate::engine::{stable_unchecked, Matching};
use crate::error::{Error, Result};
use crate::lattice::{exposed_rotations, Rotation};
use crate::prefgen::gen_instance;
use crate::rng::{child_seed, rng_from_seed, unit_f64, STREAM_BATCH, STREAM_EMPIRICAL};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its one-sigma error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Largest n1 for which the dense (n1(n1-1)+1)² coefficient matrix is
/// considered reasonable.
pub const POLY_N1_MAX: usize = 6;

const BATCHES: u64 = 64;

fn batch_sizes(samples: u64) -> Vec<u64> {
    let b = BATCHES.min(samples);
    let base = samples / b;
    let rem = samples % b;
    (0..b).map(|i| base + u64::from(i < rem)).collect()
}

/// Weighted batch-means error bar: se² = Σ n_b (m_b - m̄)² / (N (B-1)).
fn fold_batches(batches: &[(u64, f64)]) -> Estimate {
    let n: u64 = batches.iter().map(|&(nb, _)| nb).sum();
    let total: f64 = batches.iter().map(|&(_, s)| s).sum();
    let mean = total / n as f64;
    let b = batches.len();
    let std_error = if b >= 2 {
        let ss: f64 = batches
            .iter()
            .map(|&(nb, s)| {
                let d = s / nb as f64 - mean;
                nb as f64 * d * d
            })
            .sum();
        (ss / (n as f64 * (b as f64 - 1.0))).sqrt()
    } else {
        f64::INFINITY
    };
    Estimate {
        value: mean,
        std_error,
        samples: n,
    }
}

/// Run a scalar integrand over `samples` points split into seeded batches.
fn mc_scalar<F>(samples: u64, seed: u64, integrand: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let sizes = batch_sizes(samples);
    let batches: Vec<(u64, f64)> = sizes
        .par_iter()
        .enumerate()
        .map(|(bi, &nb)| {
            let mut rng = rng_from_seed(child_seed(seed, STREAM_BATCH, bi as u64));
            let mut sum = 0.0;
            for _ in 0..nb {
                sum += integrand(&mut rng);
            }
            (nb, sum)
        })
        .collect();
    fold_batches(&batches)
}

fn check_market(n1: usize, n2: usize) -> Result<()> {
    if n1 < 1 || n2 < n1 {
        return Err(Error::Domain(format!(
            "need 1 <= n1 <= n2, got ({n1}, {n2})"
        )));
    }
    Ok(())
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::Domain(
            "need at least 2 samples for an error bar".into(),
        ));
    }
    Ok(())
}

/// Draw the 2·n1 latent coordinates for one sample, x first then y.
fn draw_xy(rng: &mut ChaCha8Rng, x: &mut [f64], y: &mut [f64]) {
    for v in x.iter_mut() {
        *v = unit_f64(rng);
    }
    for v in y.iter_mut() {
        *v = unit_f64(rng);
    }
}

fn tail_factor(x: &[f64], n2: usize, n1: usize) -> f64 {
    let e = (n2 - n1) as f64;
    if n2 == n1 {
        return 1.0;
    }
    x.iter().map(|&xi| (1.0 - xi).powf(e)).product()
}

/// P(identity stable): the plain stability integral.
pub fn p_stable_mc(n1: usize, n2: usize, samples: u64, seed: u64) -> Result<Estimate> {
    check_market(n1, n2)?;
    check_samples(samples)?;
    Ok(mc_scalar(samples, seed, move |rng| {
        let mut x = vec![0.0; n1];
        let mut y = vec![0.0; n1];
        draw_xy(rng, &mut x, &mut y);
        let mut g = tail_factor(&x, n2, n1);
        for i in 0..n1 {
            for j in 0..n1 {
                if i != j {
                    g *= 1.0 - x[i] * y[j];
                }
            }
        }
        g
    }))
}

/// Dense polynomial in two markers; `coeffs[u][v]` multiplies ξ^u·η^v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoly {
    pub coeffs: Vec<Vec<f64>>,
}

impl BivariatePoly {
    fn constant(c: f64, dim: usize) -> BivariatePoly {
        let mut coeffs = vec![vec![0.0; dim]; dim];
        coeffs[0][0] = c;
        BivariatePoly { coeffs }
    }

    /// Multiply in place by (a + b·ξ + c·η), tracking the occupied degrees
    /// `d1`, `d2` so only the live corner is touched. Descending order makes
    /// the update self-referencing safe.
    fn mul_trilinear(&mut self, a: f64, b: f64, c: f64, d1: usize, d2: usize) {
        for u in (0..=d1 + 1).rev() {
            for v in (0..=d2 + 1).rev() {
                let mut acc = a * self.coeffs[u][v];
                if u > 0 {
                    acc += b * self.coeffs[u - 1][v];
                }
                if v > 0 {
                    acc += c * self.coeffs[u][v - 1];
                }
                self.coeffs[u][v] = acc;
            }
        }
    }

    pub fn degree(&self) -> (usize, usize) {
        let d = self.coeffs.len() - 1;
        (d, d)
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.coeffs
            .get(u)
            .and_then(|row| row.get(v))
            .copied()
            .unwrap_or(0.0)
    }

    /// Evaluate by nested Horner.
    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut r = 0.0;
            for &c in row.iter().rev() {
                r = r * eta + c;
            }
            acc = acc * xi + r;
        }
        acc
    }

    /// Sum of all coefficients (= eval at ξ = η = 1, summed cell by cell).
    pub fn sum(&self) -> f64 {
        self.coeffs.iter().flatten().sum()
    }
}

/// The joint generating polynomial of one latent sample: the product over
/// ordered pairs i != j of
///
/// ```text
/// (1-x_i)(1-y_j)  +  x_i(1-y_j)·ξ  +  (1-x_i)y_j·η
/// ```
///
/// times (1-x_h)^(n2-n1) over all h. The ξ-marker counts pairs where the man
/// ranks the other woman above his wife; the η-marker counts pairs where
/// the woman ranks the other man above her husband. Averaged over samples,
/// the coefficient of ξ^(k-n1)·η^(l-n1) is the probability that the identity
/// is stable with q = k and r = l. At ξ = η = 1 each factor collapses to
/// 1 - x_i·y_j and the plain integrand reappears.
pub fn p_joint_poly(n1: usize, n2: usize, x: &[f64], y: &[f64]) -> Result<BivariatePoly> {
    check_market(n1, n2)?;
    if n1 > POLY_N1_MAX {
        return Err(Error::Domain(format!(
            "joint polynomial limited to n1 <= {POLY_N1_MAX} (dense degree n1(n1-1))"
        )));
    }
    if x.len() != n1 || y.len() != n1 {
        return Err(Error::Domain(format!(
            "latent vectors must have length n1 = {n1}"
        )));
    }
    for &v in x.iter().chain(y.iter()) {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain("latent coordinates must lie in [0,1]".into()));
        }
    }
    let dim = n1 * (n1 - 1) + 1;
    let mut poly = BivariatePoly::constant(tail_factor(x, n2, n1), dim);
    let mut deg = 0usize;
    for i in 0..n1 {
        for j in 0..n1 {
            if i != j {
                let (xi, yj) = (x[i], y[j]);
                poly.mul_trilinear(
                    (1.0 - xi) * (1.0 - yj),
                    xi * (1.0 - yj),
                    (1.0 - xi) * yj,
                    deg.min(dim - 2),
                    deg.min(dim - 2),
                );
                deg += 1;
            }
        }
    }
    Ok(poly)
}

/// The joint distribution estimates: cell (k, l) is the probability that
/// the identity injection is stable with men's total rank k and women's
/// total rank l. Both indices run from n1 to n1²; `values[u][v]` holds
/// (k, l) = (n1 + u, n1 + v). `total` restates the whole-stability estimate
/// from the same sample stream.
#[derive(Debug, Clone, Serialize)]
pub struct KlEstimates {
    pub n1: usize,
    pub n2: usize,
    pub k_min: usize,
    pub values: Vec<Vec<Estimate>>,
    pub total: Estimate,
}

impl KlEstimates {
    pub fn get(&self, k: usize, l: usize) -> Option<&Estimate> {
        if k < self.k_min || l < self.k_min {
            return None;
        }
        self.values.get(k - self.k_min)?.get(l - self.k_min)
    }

    /// Sum of all cell values; matches `total.value` up to summation order.
    pub fn total_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|e| e.value)
            .sum()
    }
}

/// Estimate the whole joint table by averaging the generating polynomial's
/// coefficients over latent samples.
pub fn p_kl_mc(n1: usize, n2: usize, samples: u64, seed: u64) -> Result<KlEstimates> {
    check_market(n1, n2)?;
    check_samples(samples)?;
    if n1 > POLY_N1_MAX {
        return Err(Error::Domain(format!(
            "joint table limited to n1 <= {POLY_N1_MAX}"
        )));
    }
    let dim = n1 * (n1 - 1) + 1;
    let sizes = batch_sizes(samples);

    struct Batch {
        nb: u64,
        sums: Vec<f64>, // flattened dim x dim
        total: f64,
    }

    let batches: Vec<Batch> = sizes
        .par_iter()
        .enumerate()
        .map(|(bi, &nb)| {
            let mut rng = rng_from_seed(child_seed(seed, STREAM_BATCH, bi as u64));
            let mut x = vec![0.0; n1];
            let mut y = vec![0.0; n1];
            let mut sums = vec![0.0f64; dim * dim];
            let mut total = 0.0f64;
            for _ in 0..nb {
                draw_xy(&mut rng, &mut x, &mut y);
                let poly = p_joint_poly(n1, n2, &x, &y).expect("validated arguments");
                let mut sample_total = 0.0;
                for u in 0..dim {
                    for v in 0..dim {
                        let c = poly.coeffs[u][v];
                        sums[u * dim + v] += c;
                        sample_total += c;
                    }
                }
                total += sample_total;
            }
            Batch { nb, sums, total }
        })
        .collect();

    let mut values = vec![vec![Estimate { value: 0.0, std_error: 0.0, samples }; dim]; dim];
    let mut cell: Vec<(u64, f64)> = Vec::with_capacity(batches.len());
    for u in 0..dim {
        for v in 0..dim {
            cell.clear();
            cell.extend(batches.iter().map(|b| (b.nb, b.sums[u * dim + v])));
            values[u][v] = fold_batches(&cell);
        }
    }
    let total_batches: Vec<(u64, f64)> = batches.iter().map(|b| (b.nb, b.total)).collect();
    let total = fold_batches(&total_batches);
    Ok(KlEstimates {
        n1,
        n2,
        k_min: n1,
        values,
        total,
    })
}

/// P(identity stable and the cyclic shift on men 0..r is an exposed
/// rotation): same integral with the r diagonal-successor factors
/// (i, i+1 mod r) replaced by the density x_i·y_i of "successor exactly
/// there".
pub fn p_rotation_mc(n1: usize, n2: usize, r: usize, samples: u64, seed: u64) -> Result<Estimate> {
    check_market(n1, n2)?;
    check_samples(samples)?;
    if r < 2 || r > n1 {
        return Err(Error::Domain(format!(
            "rotation length must satisfy 2 <= r <= n1, got r={r}, n1={n1}"
        )));
    }
    Ok(mc_scalar(samples, seed, move |rng| {
        let mut x = vec![0.0; n1];
        let mut y = vec![0.0; n1];
        draw_xy(rng, &mut x, &mut y);
        let mut g = tail_factor(&x, n2, n1);
        for k in 0..r {
            g *= x[k] * y[k];
        }
        for i in 0..n1 {
            for j in 0..n1 {
                if i == j || (i < r && j == (i + 1) % r) {
                    continue;
                }
                g *= 1.0 - x[i] * y[j];
            }
        }
        g
    }))
}

/// Same event, measured on whole markets: the share of seeds whose random
/// instance makes the identity injection stable. The error bar is the exact
/// binomial one.
pub fn empirical_p_stable(n1: usize, n2: usize, trials: u64, seed: u64) -> Result<Estimate> {
    check_market(n1, n2)?;
    if trials < 1 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = gen_instance(n1, n2, child_seed(seed, STREAM_EMPIRICAL, t))
                .expect("validated shape");
            let idm = Matching::identity(n1, n2);
            u64::from(stable_unchecked(&inst, &idm))
        })
        .sum();
    Ok(binomial_estimate(hits, trials))
}

/// Share of seeds where the identity is stable *and* the cyclic shift on
/// men 0..r is exposed, the market-level counterpart of [`p_rotation_mc`].
pub fn empirical_p_rotation(
    n1: usize,
    n2: usize,
    r: usize,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    check_market(n1, n2)?;
    if r < 2 || r > n1 {
        return Err(Error::Domain(format!(
            "rotation length must satisfy 2 <= r <= n1, got r={r}, n1={n1}"
        )));
    }
    if trials < 1 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let target = Rotation {
        pairs: (0..r as u32).map(|i| (i, i)).collect(),
    };
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = gen_instance(n1, n2, child_seed(seed, STREAM_EMPIRICAL, t))
                .expect("validated shape");
            let idm = Matching::identity(n1, n2);
            if !stable_unchecked(&inst, &idm) {
                return 0;
            }
            let rots = exposed_rotations(&inst, &idm).expect("identity just checked stable");
            u64::from(rots.contains(&target))
        })
        .sum();
    Ok(binomial_estimate(hits, trials))
}

fn binomial_estimate(hits: u64, trials: u64) -> Estimate {
    let p = hits as f64 / trials as f64;
    Estimate {
        value: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        samples: trials,
    }
}
