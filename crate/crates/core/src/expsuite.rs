//! Batch experiments over random markets.
//!
//! [`run_experiment`] draws seeded instances, runs both one-sided proposal
//! passes, optionally enumerates the whole stable set, and logs one record
//! per trial together with structural-invariant violations (there should
//! never be any). [`verify`] turns a report into named pass/fail verdicts
//! against the closed-form predictions. [`sweep`] strings experiments over
//! a list of shapes into a JSON-lines trial log and a CSV summary, and can
//! resume an interrupted run: shapes already complete in the log are kept,
//! anything partial is redone.
//!
//! Trials derive child seeds by index, so reports are reproducible on any
//! thread count; `wall_time` is the one field that varies between runs.

use crate::engine::{propose, ranks, stable_unchecked, Side};
use crate::error::{Error, Result};
use crate::lattice::{brute_force_all, enumerate_all, multiplicity};
use crate::prefgen::gen_instance;
use crate::rng::{child_seed, STREAM_ORACLE, STREAM_SWEEP, STREAM_TRIAL};
use crate::theory::{f_of, MarketShape, Prediction, TAU_DEFAULT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

/// Whether a trial enumerates the full stable set or only the two extremes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Enumerate,
    ExtremesOnly,
}

/// Everything a run needs. Build with [`RunConfig::new`] and adjust fields;
/// the verification thresholds come pre-set to the defaults discussed on
/// [`verify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Safety cap on distinct matchings per instance in ENUMERATE mode.
    pub cap: usize,
    /// Relative tolerance for the q-concentration check.
    pub q_tol: f64,
    /// Relative tolerance for the r-concentration check; `None` selects
    /// q_tol · max(1, 1/(s·f(s))), which widens the band exactly when the
    /// r-center sits deep below n1².
    pub r_tol: Option<f64>,
    /// Largest acceptable share of trials violating a concentration band.
    pub conc_fail_frac: f64,
    /// Acceptance band for observed/predicted mean stable-set size.
    pub es_band: (f64, f64),
    /// Largest acceptable mean multiplicity fraction on either side.
    pub mult_threshold: f64,
    /// Proposals may exceed the coupon-collector mean by this factor.
    pub coupon_slack: f64,
    /// Tolerance exponents and regime switch for the predicted scales.
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl RunConfig {
    /// Defaults: ENUMERATE below n1 = 2000 (extremes only above), cap 10^6,
    /// q tolerance 0.15, derived r tolerance, 5% allowed violations, count
    /// band [0.7, 1.3], multiplicity threshold 0.10, coupon slack 1.02,
    /// exponents a = b = 0.4, switch tau = 3.
    pub fn new(n1: usize, n2: usize, trials: u64, seed: u64) -> RunConfig {
        RunConfig {
            n1,
            n2,
            trials,
            seed,
            mode: if n1 < 2000 {
                Mode::Enumerate
            } else {
                Mode::ExtremesOnly
            },
            cap: 1_000_000,
            q_tol: 0.15,
            r_tol: None,
            conc_fail_frac: 0.05,
            es_band: (0.7, 1.3),
            mult_threshold: 0.10,
            coupon_slack: 1.02,
            a: 0.4,
            b: 0.4,
            tau: TAU_DEFAULT,
        }
    }
}

/// One trial's worth of observations. `S` (the stable-set size) is absent
/// when the trial was censored by the cap or ran in extremes-only mode with
/// distinct extremes; the extremes themselves are always exact, and so are
/// `m_frac`/`w_frac` (an agent has two stable partners exactly when its
/// partners at the two extremes differ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "S")]
    pub s: Option<u64>,
    pub q_min: u64,
    pub q_max: u64,
    pub r_min: u64,
    pub r_max: u64,
    pub proposals_men: u64,
    pub m_frac: f64,
    pub w_frac: f64,
    pub total_rotation_length: Option<u64>,
    pub wall_time: f64,
    pub censored: bool,
}

/// Five-number summary (plus mean and count) of one logged field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub count: u64,
}

fn field_stats(values: &[f64]) -> Option<FieldStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    Some(FieldStats {
        mean,
        std: var.sqrt(),
        min: sorted[0],
        max: *sorted.last().unwrap(),
        median,
        count: values.len() as u64,
    })
}

/// A full experiment: per-trial log, aggregates, predictions, violations.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    /// Absent for balanced shapes (n1 = n2), where the predictors blow up.
    pub prediction: Option<Prediction>,
    pub trials: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, FieldStats>,
    pub structural_violations: Vec<String>,
    pub censored: u64,
}

fn run_trial(cfg: &RunConfig, t: u64) -> (TrialRecord, Vec<String>) {
    let tseed = child_seed(cfg.seed, STREAM_TRIAL, t);
    let start = Instant::now();
    let inst = gen_instance(cfg.n1, cfg.n2, tseed).expect("config shape validated");
    let (m1, rp1) = propose(&inst, Side::Men);
    let (m2, rp2) = propose(&inst, Side::Women);

    let mut violations = Vec::new();
    let mut flag = |msg: String| violations.push(format!("trial {t}: {msg}"));

    if !stable_unchecked(&inst, &m1) {
        flag("men-proposing result is unstable".into());
    }
    if !stable_unchecked(&inst, &m2) {
        flag("women-proposing result is unstable".into());
    }
    if rp1.proposals != Some(rp1.q) {
        flag(format!(
            "proposal count {:?} != men-optimal q {}",
            rp1.proposals, rp1.q
        ));
    }
    if m1.unmatched_women() != m2.unmatched_women() {
        flag("women-set: extremes leave different women unmatched".into());
    }
    if rp1.q > rp2.q || rp1.r < rp2.r {
        flag("extremes: one-sided optima are not extremal".into());
    }

    let mut censored = false;
    let mut s_count: Option<u64> = None;
    let mut mfrac_wfrac_rot: Option<(f64, f64, u64)> = None;

    if cfg.mode == Mode::Enumerate {
        match enumerate_all(&inst, cfg.cap) {
            Ok(set) => {
                s_count = Some(set.len() as u64);
                let mut q_lo = u64::MAX;
                let mut q_hi = 0;
                let mut r_lo = u64::MAX;
                let mut r_hi = 0;
                for m in &set.matchings {
                    let rp = ranks(&inst, m).expect("enumerated matching fits");
                    q_lo = q_lo.min(rp.q);
                    q_hi = q_hi.max(rp.q);
                    r_lo = r_lo.min(rp.r);
                    r_hi = r_hi.max(rp.r);
                    if m.unmatched_women() != m1.unmatched_women() {
                        flag("women-set: matched set drifted within the lattice".into());
                    }
                }
                if q_lo != rp1.q || r_hi != rp1.r {
                    flag(format!(
                        "extremes: men-optimal ranks ({}, {}) vs set extremes ({q_lo}, {r_hi})",
                        rp1.q, rp1.r
                    ));
                }
                if q_hi != rp2.q || r_lo != rp2.r {
                    flag(format!(
                        "extremes: women-optimal ranks ({}, {}) vs set extremes ({q_hi}, {r_lo})",
                        rp2.q, rp2.r
                    ));
                }
                if set.women_optimal().wife_of != m2.wife_of {
                    flag("extremes: lattice bottom differs from women-proposing result".into());
                }
                let mult = multiplicity(&set);
                mfrac_wfrac_rot =
                    Some((mult.m_frac, mult.w_frac, mult.total_rotation_length));
            }
            Err(Error::CapExceeded { .. }) => censored = true,
            Err(e) => flag(format!("enumeration failed: {e}")),
        }
    }

    // extremes-only path, also the fallback for censored trials: the
    // extremes pin S = 1 exactly when they coincide, and the per-agent
    // partner differences are exact by lattice extremality
    let (m_frac, w_frac, total_rotation_length) = match mfrac_wfrac_rot {
        Some((mf, wf, rot)) => (mf, wf, Some(rot)),
        None => {
            if m1.wife_of == m2.wife_of {
                s_count = Some(1);
            }
            let men_moved = m1
                .wife_of
                .iter()
                .zip(&m2.wife_of)
                .filter(|(a, b)| a != b)
                .count();
            let women_moved = m1
                .husband_of
                .iter()
                .zip(&m2.husband_of)
                .filter(|(a, b)| a != b)
                .count();
            (
                men_moved as f64 / cfg.n1 as f64,
                women_moved as f64 / cfg.n2 as f64,
                None,
            )
        }
    };

    let rec = TrialRecord {
        seed: tseed,
        n1: cfg.n1,
        n2: cfg.n2,
        s: s_count,
        q_min: rp1.q,
        q_max: rp2.q,
        r_min: rp2.r,
        r_max: rp1.r,
        proposals_men: rp1.proposals.unwrap_or(rp1.q),
        m_frac,
        w_frac,
        total_rotation_length,
        wall_time: start.elapsed().as_secs_f64(),
        censored,
    };
    (rec, violations)
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    if cfg.n1 < 1 || cfg.n2 < cfg.n1 {
        return Err(Error::Domain(format!(
            "need 1 <= n1 <= n2, got ({}, {})",
            cfg.n1, cfg.n2
        )));
    }
    if cfg.trials < 1 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    if cfg.cap < 1 {
        return Err(Error::Domain("cap must be at least 1".into()));
    }
    let prediction = if cfg.n2 > cfg.n1 {
        Some(Prediction::compute(
            MarketShape::new(cfg.n1, cfg.n2)?,
            cfg.a,
            cfg.b,
            cfg.tau,
        )?)
    } else {
        None
    };

    let results: Vec<(TrialRecord, Vec<String>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect();

    let mut trials = Vec::with_capacity(results.len());
    let mut structural_violations = Vec::new();
    for (rec, mut v) in results {
        trials.push(rec);
        structural_violations.append(&mut v);
    }
    let censored = trials.iter().filter(|t| t.censored).count() as u64;

    type Getter = fn(&TrialRecord) -> Option<f64>;
    let mut aggregates = BTreeMap::new();
    let fields: [(&str, Getter); 10] = [
        ("S", |t| t.s.map(|v| v as f64)),
        ("q_min", |t| Some(t.q_min as f64)),
        ("q_max", |t| Some(t.q_max as f64)),
        ("r_min", |t| Some(t.r_min as f64)),
        ("r_max", |t| Some(t.r_max as f64)),
        ("proposals_men", |t| Some(t.proposals_men as f64)),
        ("m_frac", |t| Some(t.m_frac)),
        ("w_frac", |t| Some(t.w_frac)),
        ("total_rotation_length", |t| {
            t.total_rotation_length.map(|v| v as f64)
        }),
        ("wall_time", |t| Some(t.wall_time)),
    ];
    for (name, f) in fields {
        let values: Vec<f64> = trials.iter().filter_map(f).collect();
        if let Some(st) = field_stats(&values) {
            aggregates.insert(name.to_string(), st);
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        prediction,
        trials,
        aggregates,
        structural_violations,
        censored,
    })
}

/// One named check's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub observed: f64,
    pub reference: f64,
    pub detail: String,
}

fn verdict(check: &str, passed: bool, observed: f64, reference: f64, detail: String) -> Verdict {
    Verdict {
        check: check.into(),
        passed,
        observed,
        reference,
        detail,
    }
}

/// Effective r tolerance for a report: explicit override, or
/// q_tol · max(1, 1/(s·f(s))).
pub fn effective_r_tol(cfg: &RunConfig, s: f64) -> f64 {
    cfg.r_tol.unwrap_or_else(|| {
        let scale = 1.0 / (s * f_of(s).expect("s > 0 for unbalanced shapes"));
        cfg.q_tol * scale.max(1.0)
    })
}

/// Judge a report: STRUCTURAL and WOMEN_SET must be violation-free;
/// ES_RATIO compares the mean stable-set size to the prediction; Q_CONC and
/// R_CONC demand that at most `conc_fail_frac` of trials put any stable
/// matching outside the relative band around the predicted centers (the
/// extremes bound every member, so checking them checks all); MULT_FRAC
/// bounds the mean share of agents with several stable partners; COUPON
/// bounds mean proposals by the coupon-collector mean. Checks that need a
/// prediction pass vacuously on balanced shapes.
pub fn verify(report: &ExperimentReport) -> Vec<Verdict> {
    let cfg = &report.config;
    let mut out = Vec::new();

    let women_set = report
        .structural_violations
        .iter()
        .filter(|v| v.contains("women-set:"))
        .count();
    let other = report.structural_violations.len() - women_set;
    out.push(verdict(
        "STRUCTURAL",
        other == 0,
        other as f64,
        0.0,
        format!("{other} violations of proposal/extremal invariants"),
    ));
    out.push(verdict(
        "WOMEN_SET",
        women_set == 0,
        women_set as f64,
        0.0,
        format!("{women_set} trials changed the matched-women set"),
    ));

    let pred = match &report.prediction {
        Some(p) => p,
        None => {
            for name in ["ES_RATIO", "Q_CONC", "R_CONC", "MULT_FRAC", "COUPON"] {
                out.push(verdict(
                    name,
                    true,
                    f64::NAN,
                    f64::NAN,
                    "not applicable: balanced shape has no predictions".into(),
                ));
            }
            return out;
        }
    };

    match report.aggregates.get("S") {
        Some(st) if cfg.mode == Mode::Enumerate => {
            let ratio = st.mean / pred.es;
            out.push(verdict(
                "ES_RATIO",
                ratio >= cfg.es_band.0 && ratio <= cfg.es_band.1,
                ratio,
                pred.es,
                format!(
                    "mean stable-set size {:.4} vs predicted {:.4} over {} trials",
                    st.mean, pred.es, st.count
                ),
            ));
        }
        _ => out.push(verdict(
            "ES_RATIO",
            true,
            f64::NAN,
            pred.es,
            "not applicable: no enumerated set sizes".into(),
        )),
    }

    let conc = |center: f64, lo: u64, hi: u64, tol: f64| -> bool {
        let d1 = (lo as f64 / center - 1.0).abs();
        let d2 = (hi as f64 / center - 1.0).abs();
        d1.max(d2) > tol
    };
    let q_bad = report
        .trials
        .iter()
        .filter(|t| conc(pred.q_center, t.q_min, t.q_max, cfg.q_tol))
        .count();
    let q_frac = q_bad as f64 / report.trials.len() as f64;
    out.push(verdict(
        "Q_CONC",
        q_frac <= cfg.conc_fail_frac,
        q_frac,
        cfg.conc_fail_frac,
        format!(
            "{q_bad} of {} trials outside |q/{:.2} - 1| <= {}",
            report.trials.len(),
            pred.q_center,
            cfg.q_tol
        ),
    ));

    let r_tol = effective_r_tol(cfg, pred.s);
    let r_bad = report
        .trials
        .iter()
        .filter(|t| conc(pred.r_center, t.r_min, t.r_max, r_tol))
        .count();
    let r_frac = r_bad as f64 / report.trials.len() as f64;
    out.push(verdict(
        "R_CONC",
        r_frac <= cfg.conc_fail_frac,
        r_frac,
        cfg.conc_fail_frac,
        format!(
            "{r_bad} of {} trials outside |r/{:.2} - 1| <= {:.4}",
            report.trials.len(),
            pred.r_center,
            r_tol
        ),
    ));

    let mean_m = report.aggregates["m_frac"].mean;
    let mean_w = report.aggregates["w_frac"].mean;
    out.push(verdict(
        "MULT_FRAC",
        mean_m <= cfg.mult_threshold && mean_w <= cfg.mult_threshold,
        mean_m.max(mean_w),
        cfg.mult_threshold,
        format!("mean multiplicity fractions: men {mean_m:.4}, women {mean_w:.4}"),
    ));

    let mean_props = report.aggregates["proposals_men"].mean;
    let ratio = mean_props / pred.coupon_mean;
    out.push(verdict(
        "COUPON",
        ratio <= cfg.coupon_slack,
        ratio,
        cfg.coupon_slack,
        format!(
            "mean proposals {:.2} vs coupon mean {:.2}",
            mean_props, pred.coupon_mean
        ),
    ));

    out
}

/// Run a list of shapes, appending each completed shape's trial records to
/// the JSON-lines log at `log_path` and finally (re)writing the CSV summary.
/// A rerun with the same arguments keeps shapes whose trial count in the log
/// is already complete and redoes the rest, so an interrupted sweep picks up
/// where it left off.
pub fn sweep(
    shapes: &[(usize, usize)],
    trials: u64,
    seed: u64,
    mode: Option<Mode>,
    log_path: &Path,
    csv_path: Option<&Path>,
) -> Result<Vec<ExperimentReport>> {
    if shapes.is_empty() {
        return Err(Error::Domain("sweep needs at least one shape".into()));
    }
    {
        let mut dedup = shapes.to_vec();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != shapes.len() {
            return Err(Error::Domain(
                "duplicate shapes would make the resume log ambiguous".into(),
            ));
        }
    }

    // which shapes are already complete in the log?
    let mut kept_lines: Vec<String> = Vec::new();
    let mut complete: std::collections::HashSet<(usize, usize)> = Default::default();
    if log_path.exists() {
        let mut per_shape: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
        let file = std::fs::File::open(log_path)
            .map_err(|e| Error::Domain(format!("cannot read {}: {e}", log_path.display())))?;
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::Domain(format!("log read: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TrialRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Domain(format!("corrupt log line: {e}")))?;
            per_shape.entry((rec.n1, rec.n2)).or_default().push(line);
        }
        for (shape, lines) in per_shape {
            if shapes.contains(&shape) && lines.len() as u64 == trials {
                complete.insert(shape);
                kept_lines.extend(lines);
            }
        }
    }

    // rewrite the log with only the complete shapes, then append new ones
    let mut log = std::fs::File::create(log_path)
        .map_err(|e| Error::Domain(format!("cannot write {}: {e}", log_path.display())))?;
    for line in &kept_lines {
        writeln!(log, "{line}").map_err(|e| Error::Domain(format!("log write: {e}")))?;
    }

    let mut reports = Vec::new();
    for (idx, &(n1, n2)) in shapes.iter().enumerate() {
        let mut cfg = RunConfig::new(n1, n2, trials, child_seed(seed, STREAM_SWEEP, idx as u64));
        if let Some(m) = mode {
            cfg.mode = m;
        }
        let report = run_experiment(&cfg)?;
        if !complete.contains(&(n1, n2)) {
            for rec in &report.trials {
                let line = serde_json::to_string(rec)
                    .map_err(|e| Error::Internal(format!("record serialization: {e}")))?;
                writeln!(log, "{line}").map_err(|e| Error::Domain(format!("log write: {e}")))?;
            }
            log.flush().ok();
        }
        reports.push(report);
    }

    if let Some(csv) = csv_path {
        write_csv(csv, &reports)?;
    }
    Ok(reports)
}

fn write_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut out = String::from(
        "n1,n2,trials,mean_S,pred_S,mean_qmin,mean_qmax,q_center,mean_rmin,mean_rmax,r_center,m_frac,w_frac,coupon_mean,mean_proposals\n",
    );
    for rep in reports {
        let agg = |name: &str| -> String {
            rep.aggregates
                .get(name)
                .map(|s| format!("{:.6}", s.mean))
                .unwrap_or_default()
        };
        let pred = rep.prediction.as_ref();
        let pf = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            rep.config.n1,
            rep.config.n2,
            rep.config.trials,
            agg("S"),
            pf(pred.map(|p| p.es)),
            agg("q_min"),
            agg("q_max"),
            pf(pred.map(|p| p.q_center)),
            agg("r_min"),
            agg("r_max"),
            pf(pred.map(|p| p.r_center)),
            agg("m_frac"),
            agg("w_frac"),
            pf(pred.map(|p| p.coupon_mean)),
            agg("proposals_men"),
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Domain(format!("cannot write CSV: {e}")))
}

/// Cross-check report: lattice enumeration vs brute force over a grid of
/// small shapes.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instances: u64,
    pub shapes: Vec<(usize, usize)>,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

/// Compare [`enumerate_all`] against [`brute_force_all`] on `instances`
/// random markets spread round-robin over all shapes with 2 <= n1 <= max_n1
/// and n1 <= n2 <= n1 + n2_extra: the matching sets, both extremes, and the
/// rotation inventories must agree exactly.
pub fn oracle_check(
    max_n1: usize,
    n2_extra: usize,
    instances: u64,
    cap: usize,
    bound: u128,
    seed: u64,
) -> Result<OracleReport> {
    if max_n1 < 2 {
        return Err(Error::Domain("oracle check needs max_n1 >= 2".into()));
    }
    if instances < 1 {
        return Err(Error::Domain("oracle check needs at least one instance".into()));
    }
    let mut shapes = Vec::new();
    for n1 in 2..=max_n1 {
        for n2 in n1..=n1 + n2_extra {
            shapes.push((n1, n2));
        }
    }

    let outcomes: Vec<Option<String>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let (n1, n2) = shapes[(k % shapes.len() as u64) as usize];
            let iseed = child_seed(seed, STREAM_ORACLE, k);
            let inst = gen_instance(n1, n2, iseed).expect("shape grid is valid");
            let walk = match enumerate_all(&inst, cap) {
                Ok(s) => s,
                Err(e) => return Some(format!("instance {k} ({n1},{n2}) seed {iseed}: walk: {e}")),
            };
            let bf = match brute_force_all(&inst, bound) {
                Ok(s) => s,
                Err(e) => {
                    return Some(format!(
                        "instance {k} ({n1},{n2}) seed {iseed}: brute force: {e}"
                    ))
                }
            };
            let mut a: Vec<_> = walk.matchings.iter().map(|m| &m.wife_of).collect();
            let mut b: Vec<_> = bf.matchings.iter().map(|m| &m.wife_of).collect();
            a.sort();
            b.sort();
            if a != b
                || walk.men_optimal().wife_of != bf.men_optimal().wife_of
                || walk.women_optimal().wife_of != bf.women_optimal().wife_of
                || walk.rotations != bf.rotations
            {
                return Some(format!(
                    "instance {k} ({n1},{n2}) seed {iseed}: walk found {} matchings, brute force {}",
                    walk.len(),
                    bf.len()
                ));
            }
            None
        })
        .collect();

    let mismatches = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    let first_mismatch = outcomes.into_iter().flatten().next();
    Ok(OracleReport {
        instances,
        shapes,
        mismatches,
        first_mismatch,
    })
}
