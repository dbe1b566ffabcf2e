//! Command-line driver for the stable-matching laboratory.
//!
//! Every subcommand prints one JSON document (to stdout, or to `--out`);
//! progress and verdict lines go to stderr. Exit codes: 0 on success, 1 when
//! a judged run fails its checks or any input is invalid, 2 for bad usage.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stablelab::{
    empirical_p_rotation, empirical_p_stable, enumerate_all, gen_instance, gen_latents,
    instance_from_latents, multiplicity, oracle_check, p_kl_mc, p_rotation_mc, p_stable_mc,
    propose, run_experiment, spacings_stats, sweep, verify, Instance, MarketShape, Mode,
    Prediction, RunConfig, Side, TrialRecord, Verdict,
};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "stablelab", version, about = "Stable matchings in unbalanced random markets")]
struct Cli {
    /// Master seed; all randomness derives from it, so equal seeds mean
    /// equal results on any thread count
    #[arg(long, global = true, env = "STABLELAB_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the JSON result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Men,
    Women,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Enumerate below 2000 men, extremes only above
    Auto,
    /// Walk the whole lattice per trial
    Enumerate,
    /// Only the two one-sided optima per trial
    ExtremesOnly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormulaArg {
    /// P(a fixed matching is stable), integral route
    Stable,
    /// Joint distribution of both rank sums over stable outcomes
    Joint,
    /// P(matching stable and a full-cycle rotation exposed), integral route
    Rotation,
    /// P(identity matching stable), sampled over random markets
    StableEmp,
    /// Rotation probability, sampled over random markets
    RotationEmp,
}

/// Where a preference system comes from: a JSON file or the seeded generator.
#[derive(Args)]
struct InstanceSource {
    /// Read the preference system from this JSON file ("-" for stdin)
    #[arg(long, conflicts_with_all = ["n1", "n2"])]
    input: Option<PathBuf>,

    /// Men count for a generated market
    #[arg(long, required_unless_present = "input")]
    n1: Option<usize>,

    /// Women count for a generated market
    #[arg(long, required_unless_present = "input")]
    n2: Option<usize>,
}

impl InstanceSource {
    fn load(&self, seed: u64) -> Result<Instance, Box<dyn std::error::Error>> {
        match &self.input {
            Some(path) => {
                let text = if path.as_os_str() == "-" {
                    let mut buf = String::new();
                    std::io::stdin().read_to_string(&mut buf)?;
                    buf
                } else {
                    std::fs::read_to_string(path)?
                };
                Ok(serde_json::from_str(&text)?)
            }
            None => Ok(gen_instance(self.n1.unwrap(), self.n2.unwrap(), seed)?),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random preference system and print it as JSON
    Generate {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        /// Rank independent latent scores instead of shuffling directly
        /// (same distribution, different stream)
        #[arg(long)]
        latent: bool,
    },

    /// Run one-sided deferred acceptance and print the matching with its
    /// rank sums
    Match {
        #[command(flatten)]
        src: InstanceSource,
        /// Which side proposes
        #[arg(long, value_enum)]
        side: SideArg,
    },

    /// Enumerate every stable matching of one market
    Enumerate {
        #[command(flatten)]
        src: InstanceSource,
        /// Abort if the stable set grows beyond this many matchings
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
        /// Include the full matching list, not just the summary
        #[arg(long)]
        full: bool,
    },

    /// Closed-form predictions for a market shape
    Predict {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        /// Tolerance exponent in the men's concentration scale
        #[arg(long, default_value_t = 0.4)]
        a: f64,
        /// Tolerance exponent in the women's concentration scale
        #[arg(long, default_value_t = 0.4)]
        b: f64,
        /// Regime switch between the two tolerance scales
        #[arg(long, default_value_t = 3.0)]
        tau: f64,
    },

    /// Monte Carlo estimates of the exact probability integrals
    Integrate {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, value_enum)]
        formula: FormulaArg,
        /// Integral sample count, or trial count for the sampled routes
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Rotation length for the rotation formulas
        #[arg(long, default_value_t = 2)]
        rot_len: usize,
    },

    /// Run a batch of seeded trials and judge the aggregates
    Simulate {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Abort enumeration of one trial beyond this many matchings
        /// (the trial is kept, flagged censored, with exact extremes)
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
        /// Relative band around the men's rank-sum center
        #[arg(long)]
        q_tol: Option<f64>,
        /// Relative band around the women's rank-sum center
        /// (default: derived from the shape)
        #[arg(long)]
        r_tol: Option<f64>,
        /// Largest acceptable share of trials outside a band
        #[arg(long)]
        conc_fail_frac: Option<f64>,
        /// Lower edge of the observed/predicted count band
        #[arg(long)]
        es_lo: Option<f64>,
        /// Upper edge of the observed/predicted count band
        #[arg(long)]
        es_hi: Option<f64>,
        /// Largest acceptable mean share of multiply-partnered agents
        #[arg(long)]
        mult_threshold: Option<f64>,
        /// Proposals may exceed the coupon-collector mean by this factor
        #[arg(long)]
        coupon_slack: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Append every trial as one JSON line to this file
        #[arg(long)]
        trial_log: Option<PathBuf>,
        /// Keep the per-trial array inside the JSON report
        #[arg(long)]
        include_trials: bool,
    },

    /// Run several shapes into one trial log plus a CSV summary; an
    /// interrupted sweep resumes, keeping shapes whose logs are complete
    /// (verdict lines on stderr are informational)
    Sweep {
        /// Comma-separated shapes like 200x201,1000x1100
        #[arg(long, value_delimiter = ',', required = true)]
        shapes: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// JSON-lines trial log, also the resume point
        #[arg(long)]
        log: PathBuf,
        /// Write a per-shape CSV summary here
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Compare lattice enumeration against brute-force search on a grid of
    /// small markets
    OracleCheck {
        #[arg(long, default_value_t = 4)]
        max_n1: usize,
        /// Check shapes n1 <= n2 <= n1 + n2-extra
        #[arg(long, default_value_t = 2)]
        n2_extra: usize,
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
        /// Largest injection count brute force will walk
        #[arg(long, default_value_t = 10_000_000)]
        bound: u128,
    },

    /// Uniform-spacings statistics behind the rank-sum limit laws
    Spacings {
        /// Number of gaps (n-1 points on the unit interval)
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
}

fn emit(out: &Option<PathBuf>, doc: &serde_json::Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("serializable");
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{text}")
        }
    }
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        eprintln!(
            "[{}] {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.check,
            v.detail
        );
    }
}

fn write_trial_log(path: &Path, trials: &[TrialRecord]) -> Result<(), Box<dyn std::error::Error>> {
    let mut f = std::fs::File::create(path)?;
    for t in trials {
        writeln!(f, "{}", serde_json::to_string(t)?)?;
    }
    Ok(())
}

fn parse_shapes(specs: &[String]) -> Result<Vec<(usize, usize)>, Box<dyn std::error::Error>> {
    let mut shapes = Vec::new();
    for spec in specs {
        let (a, b) = spec
            .split_once('x')
            .ok_or_else(|| format!("shape {spec:?} is not of the form N1xN2"))?;
        shapes.push((a.trim().parse()?, b.trim().parse()?));
    }
    Ok(shapes)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let seed = cli.seed;

    match cli.cmd {
        Cmd::Generate { n1, n2, latent } => {
            let inst = if latent {
                instance_from_latents(&gen_latents(n1, n2, seed)?)?
            } else {
                gen_instance(n1, n2, seed)?
            };
            emit(&cli.out, &serde_json::to_value(&inst)?)?;
        }

        Cmd::Match { src, side } => {
            let inst = src.load(seed)?;
            let s = match side {
                SideArg::Men => Side::Men,
                SideArg::Women => Side::Women,
            };
            let (m, rp) = propose(&inst, s);
            emit(
                &cli.out,
                &json!({
                    "side": match side { SideArg::Men => "men", SideArg::Women => "women" },
                    "matching": m,
                    "q": rp.q,
                    "r": rp.r,
                    "proposals": rp.proposals,
                }),
            )?;
        }

        Cmd::Enumerate { src, cap, full } => {
            let inst = src.load(seed)?;
            let set = enumerate_all(&inst, cap)?;
            let mult = multiplicity(&set);
            let mut doc = json!({
                "count": set.len(),
                "men_optimal": set.men_optimal(),
                "women_optimal": set.women_optimal(),
                "rotations": set.rotations,
                "multiplicity": mult,
            });
            if full {
                doc["matchings"] = serde_json::to_value(&set.matchings)?;
            }
            emit(&cli.out, &doc)?;
        }

        Cmd::Predict { n1, n2, a, b, tau } => {
            let p = Prediction::compute(MarketShape::new(n1, n2)?, a, b, tau)?;
            emit(&cli.out, &serde_json::to_value(p)?)?;
        }

        Cmd::Integrate {
            n1,
            n2,
            formula,
            samples,
            rot_len,
        } => {
            let doc = match formula {
                FormulaArg::Stable => serde_json::to_value(p_stable_mc(n1, n2, samples, seed)?)?,
                FormulaArg::Joint => serde_json::to_value(p_kl_mc(n1, n2, samples, seed)?)?,
                FormulaArg::Rotation => {
                    serde_json::to_value(p_rotation_mc(n1, n2, rot_len, samples, seed)?)?
                }
                FormulaArg::StableEmp => {
                    serde_json::to_value(empirical_p_stable(n1, n2, samples, seed)?)?
                }
                FormulaArg::RotationEmp => {
                    serde_json::to_value(empirical_p_rotation(n1, n2, rot_len, samples, seed)?)?
                }
            };
            emit(&cli.out, &doc)?;
        }

        Cmd::Simulate {
            n1,
            n2,
            trials,
            mode,
            cap,
            q_tol,
            r_tol,
            conc_fail_frac,
            es_lo,
            es_hi,
            mult_threshold,
            coupon_slack,
            a,
            b,
            tau,
            trial_log,
            include_trials,
        } => {
            let mut cfg = RunConfig::new(n1, n2, trials, seed);
            match mode {
                ModeArg::Auto => {}
                ModeArg::Enumerate => cfg.mode = Mode::Enumerate,
                ModeArg::ExtremesOnly => cfg.mode = Mode::ExtremesOnly,
            }
            cfg.cap = cap;
            cfg.r_tol = r_tol.or(cfg.r_tol);
            if let Some(v) = q_tol {
                cfg.q_tol = v;
            }
            if let Some(v) = conc_fail_frac {
                cfg.conc_fail_frac = v;
            }
            if let Some(v) = es_lo {
                cfg.es_band.0 = v;
            }
            if let Some(v) = es_hi {
                cfg.es_band.1 = v;
            }
            if let Some(v) = mult_threshold {
                cfg.mult_threshold = v;
            }
            if let Some(v) = coupon_slack {
                cfg.coupon_slack = v;
            }
            if let Some(v) = a {
                cfg.a = v;
            }
            if let Some(v) = b {
                cfg.b = v;
            }
            if let Some(v) = tau {
                cfg.tau = v;
            }

            let report = run_experiment(&cfg)?;
            let verdicts = verify(&report);
            if let Some(path) = &trial_log {
                write_trial_log(path, &report.trials)?;
            }
            let mut doc = serde_json::to_value(&report)?;
            if !include_trials {
                doc.as_object_mut().expect("report is an object").remove("trials");
            }
            doc["verdicts"] = serde_json::to_value(&verdicts)?;
            emit(&cli.out, &doc)?;
            print_verdicts(&verdicts);
            if verdicts.iter().any(|v| !v.passed) {
                return Ok(ExitCode::from(1));
            }
        }

        Cmd::Sweep {
            shapes,
            trials,
            mode,
            log,
            csv,
        } => {
            let shapes = parse_shapes(&shapes)?;
            let mode = match mode {
                ModeArg::Auto => None,
                ModeArg::Enumerate => Some(Mode::Enumerate),
                ModeArg::ExtremesOnly => Some(Mode::ExtremesOnly),
            };
            let reports = sweep(&shapes, trials, seed, mode, &log, csv.as_deref())?;
            let mut rows = Vec::new();
            for rep in &reports {
                let verdicts = verify(rep);
                eprintln!("shape ({}, {}):", rep.config.n1, rep.config.n2);
                print_verdicts(&verdicts);
                rows.push(json!({
                    "n1": rep.config.n1,
                    "n2": rep.config.n2,
                    "censored": rep.censored,
                    "aggregates": rep.aggregates,
                    "prediction": rep.prediction,
                    "verdicts": verdicts,
                }));
            }
            emit(&cli.out, &serde_json::Value::Array(rows))?;
        }

        Cmd::OracleCheck {
            max_n1,
            n2_extra,
            instances,
            cap,
            bound,
        } => {
            let rep = oracle_check(max_n1, n2_extra, instances, cap, bound, seed)?;
            let ok = rep.mismatches == 0;
            emit(&cli.out, &serde_json::to_value(&rep)?)?;
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }

        Cmd::Spacings { n, trials } => {
            let st = spacings_stats(n, trials, seed)?;
            emit(&cli.out, &serde_json::to_value(st)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
