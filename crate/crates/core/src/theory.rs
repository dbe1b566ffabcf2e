//! Closed-form predictors for large unbalanced markets.
//!
//! Everything here is a function of the market shape (n1 men, n2 > n1
//! women) through the single parameter s = ln(n2/(n2-n1)):
//!
//! * the expected number of stable matchings and its three regime limits,
//! * the concentration centers for the two rank functionals, q near n2·s
//!   and r near n1²·f(s) with f(x) = 1/x - 1/(e^x - 1),
//! * the tolerance scales delta and delta* controlling how tight those
//!   concentrations are,
//! * the husband-rank shift h(s) = 2 - s/(e^s - 1),
//! * the exact coupon-collector mean n2·(H(n2) - H(n2-n1)) for the number
//!   of proposals in a men-proposing run,
//! * spacing statistics of uniform points on [0,1], the combinatorial
//!   engine behind the concentration proofs, estimated by simulation.

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed, unit_f64, STREAM_SPACINGS};
use serde::{Deserialize, Serialize};

/// A validated unbalanced market shape: 1 <= n1 < n2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketShape {
    pub n1: usize,
    pub n2: usize,
}

impl MarketShape {
    pub fn new(n1: usize, n2: usize) -> Result<MarketShape> {
        if n1 < 1 || n2 <= n1 {
            return Err(Error::Domain(format!(
                "predictors need 1 <= n1 < n2, got ({n1}, {n2})"
            )));
        }
        Ok(MarketShape { n1, n2 })
    }

    /// s = ln(n2/(n2-n1)). Always at least n1/n2.
    pub fn s(&self) -> f64 {
        (self.n2 as f64 / (self.n2 - self.n1) as f64).ln()
    }
}

/// f(x) = 1/x - 1/(e^x - 1) for x > 0: strictly decreasing from the limit
/// f(0+) = 1/2 toward 0. Uses the series below x = 0.01 to dodge the
/// cancellation between the two reciprocals.
pub fn f_of(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("f is defined for x > 0, got {x}")));
    }
    if x < 1e-2 {
        // 1/2 - x/12 + x^3/720 - ...; the dropped term is below 1e-14 here
        Ok(0.5 - x / 12.0 + x * x * x / 720.0)
    } else {
        Ok(1.0 / x - 1.0 / x.exp_m1())
    }
}

/// The x -> 0+ limit of [`f_of`].
pub fn f_at_zero() -> f64 {
    0.5
}

/// h(s) = 2 - s/(e^s - 1): the mean rank a matched woman gives her husband,
/// per matched woman, in the women-optimal matching as markets grow.
pub fn h_of(s: f64) -> Result<f64> {
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::Domain(format!("h is defined for s > 0, got {s}")));
    }
    Ok(2.0 - s / s.exp_m1())
}

/// Expected number of stable matchings:
/// n1 · exp(s/(e^s - 1) - 1) / ((n2 - n1) · s).
pub fn expected_stable_matchings(shape: MarketShape) -> f64 {
    let s = shape.s();
    let n1 = shape.n1 as f64;
    let gap = (shape.n2 - shape.n1) as f64;
    n1 * (s / s.exp_m1() - 1.0).exp() / (gap * s)
}

/// Limit of the expected count when the gap stays tiny relative to n1
/// (s -> infinity): e^{-1} · n1 / ((n2 - n1) · ln n1). Needs n1 >= 2.
pub fn es_limit_small_gap(shape: MarketShape) -> Result<f64> {
    if shape.n1 < 2 {
        return Err(Error::Domain("small-gap limit needs n1 >= 2".into()));
    }
    Ok((-1.0f64).exp() * shape.n1 as f64
        / ((shape.n2 - shape.n1) as f64 * (shape.n1 as f64).ln()))
}

/// Limit when n2/n1 -> infinity: a unique stable matching, count 1.
pub fn es_limit_wide() -> f64 {
    1.0
}

/// lambda(c) = (c/(c-1))^(c-1) for a fixed ratio n2/n1 = c > 1.
pub fn lambda_of(c: f64) -> Result<f64> {
    if c <= 1.0 || !c.is_finite() {
        return Err(Error::Domain(format!("lambda needs c > 1, got {c}")));
    }
    Ok(((c - 1.0) * (c / (c - 1.0)).ln()).exp())
}

/// Limit of the expected count per n1 -> infinity at fixed ratio c = n2/n1:
/// e^{-1} · lambda(c) / ln lambda(c).
pub fn es_limit_fixed_ratio(c: f64) -> Result<f64> {
    let lam = lambda_of(c)?;
    Ok((-1.0f64).exp() * lam / lam.ln())
}

/// Default switch point between the two tolerance regimes.
pub const TAU_DEFAULT: f64 = 3.0;

/// The concentration tolerance delta(n) and its derived scale
/// delta* = delta / (s·f(s)). For s > tau the tolerance is s^{-b},
/// otherwise n1^{-a}; both exponents must sit strictly inside (0, 1/2).
pub fn tolerances_with_tau(shape: MarketShape, a: f64, b: f64, tau: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 0.5 && b > 0.0 && b < 0.5) {
        return Err(Error::Domain(format!(
            "tolerance exponents must lie in (0, 1/2), got a={a}, b={b}"
        )));
    }
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let s = shape.s();
    let delta = if s > tau {
        s.powf(-b)
    } else {
        (shape.n1 as f64).powf(-a)
    };
    let delta_star = delta / (s * f_of(s)?);
    Ok((delta, delta_star))
}

/// [`tolerances_with_tau`] at the default switch point.
pub fn tolerances(shape: MarketShape, a: f64, b: f64) -> Result<(f64, f64)> {
    tolerances_with_tau(shape, a, b, TAU_DEFAULT)
}

/// Exact mean number of proposals in a men-proposing run on a market where
/// women's sides are drawn fresh per proposal: n2 · (H(n2) - H(n2-n1)).
/// This is the coupon-collector mean for reaching n1 distinct women out of
/// n2 and upper-bounds the true mean proposal count.
pub fn coupon_mean(shape: MarketShape) -> f64 {
    // sum ascending in magnitude for accuracy
    let mut acc = 0.0f64;
    for j in (shape.n2 - shape.n1 + 1..=shape.n2).rev() {
        acc += 1.0 / j as f64;
    }
    shape.n2 as f64 * acc
}

/// One shape's worth of predictions, bundled for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub s: f64,
    /// Expected number of stable matchings.
    pub es: f64,
    /// Concentration center of the men's total rank q: n2 · s.
    pub q_center: f64,
    /// Concentration center of the women's total rank r: n1² · f(s).
    pub r_center: f64,
    pub delta: f64,
    pub delta_star: f64,
    /// Mean per-woman husband rank shift h(s).
    pub h: f64,
    /// Coupon-collector mean proposal count.
    pub coupon_mean: f64,
}

impl Prediction {
    pub fn compute(shape: MarketShape, a: f64, b: f64, tau: f64) -> Result<Prediction> {
        let s = shape.s();
        let (delta, delta_star) = tolerances_with_tau(shape, a, b, tau)?;
        Ok(Prediction {
            s,
            es: expected_stable_matchings(shape),
            q_center: shape.n2 as f64 * s,
            r_center: (shape.n1 as f64) * (shape.n1 as f64) * f_of(s)?,
            delta,
            delta_star,
            h: h_of(s)?,
            coupon_mean: coupon_mean(shape),
        })
    }
}

/// Spacing statistics of n-1 independent uniform points on [0,1], averaged
/// over seeded trials: with L_1..L_n the gaps, T = sum of L², L+ = max L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingsStats {
    /// Mean of n·T (tends to 2; exactly 2n/(n+1) in expectation).
    pub mean_n_tn: f64,
    /// Mean of L+ / (ln n / n) (tends to 1).
    pub mean_lplus_scaled: f64,
    /// Fraction of trials with n·T >= 3 (decays like 1/n).
    pub p_n_tn_ge_3: f64,
    pub trials: u64,
}

pub fn spacings_stats(n: usize, trials: u64, seed: u64) -> Result<SpacingsStats> {
    if n < 2 {
        return Err(Error::Domain("spacings need n >= 2".into()));
    }
    if trials < 1 {
        return Err(Error::Domain("at least one trial".into()));
    }
    let scale = (n as f64).ln() / n as f64;
    let mut sum_ntn = 0.0;
    let mut sum_lplus = 0.0;
    let mut ge3 = 0u64;
    let mut pts = vec![0.0f64; n - 1];
    for t in 0..trials {
        let mut rng = rng_from_seed(child_seed(seed, STREAM_SPACINGS, t));
        for p in pts.iter_mut() {
            *p = unit_f64(&mut rng);
        }
        pts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut tn = 0.0;
        let mut lplus = 0.0f64;
        let mut prev = 0.0;
        for &p in pts.iter().chain(std::iter::once(&1.0)) {
            let gap = p - prev;
            tn += gap * gap;
            lplus = lplus.max(gap);
            prev = p;
        }
        let ntn = n as f64 * tn;
        sum_ntn += ntn;
        sum_lplus += lplus / scale;
        if ntn >= 3.0 {
            ge3 += 1;
        }
    }
    Ok(SpacingsStats {
        mean_n_tn: sum_ntn / trials as f64,
        mean_lplus_scaled: sum_lplus / trials as f64,
        p_n_tn_ge_3: ge3 as f64 / trials as f64,
        trials,
    })
}
