//
// Copyright 2026 The dpb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! `dpb`: compare differential-privacy mechanisms from the command line.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpb::accountant::{calibrate_sigma, AccountantConfig, Rounding};
use dpb::curves::{
    bayes_error_curve, default_eps_grid, profile_from_tradeoff, CurveEnvelope, Precision,
    TradeoffCurve, DEFAULT_EPS_STEP,
};
use dpb::divergence::{compare, weighted_delta_divergence, HyperPrior};
use dpb::mechanism::{tradeoff_curve_with, MechanismSpec, DEFAULT_GRID_SIZE};
use dpb::moments::empirical_vs_bound;
use dpb::sweep::{log_lattice, log_lattice_steps, run_sweep, SweepConfig};
use output::{Emitter, Format};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "dpb",
    version,
    about = "Compare differential-privacy mechanisms by their trade-off curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Nodes on the α and π grids.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// Threshold below which a divergence counts as zero (default 1/(grid-1)).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output format. Sweeps and exports default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Round printed numbers to this many decimals instead of 9 significant digits.
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// Privacy-loss grid spacing (default: chosen per mechanism).
    #[arg(long, global = true)]
    grid_spacing: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = RoundingArg::Pessimistic)]
    rounding: RoundingArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RoundingArg {
    Pessimistic,
    Midpoint,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CurveKind {
    Tradeoff,
    Profile,
    Bayes,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Δ divergences between two mechanisms, both directions.
    Compare {
        a: String,
        b: String,
        /// Also write trade-off, profile and Bayes CSVs of both curves here.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Smallest noise multiplier meeting (ε, δ) after `steps` subsampled steps.
    Calibrate {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        steps: u64,
    },
    /// Calibrate a lattice of (p, steps) targets and compare each to a base.
    Sweep {
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 8.0)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        /// Sampling rates, comma separated. Overrides --p-range.
        #[arg(long, value_delimiter = ',')]
        p_values: Option<Vec<f64>>,
        /// Log-spaced sampling rates as lo,hi,count.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.04, 0.9, 8.0])]
        p_range: Vec<f64>,
        /// Step counts, comma separated. Overrides --steps-range.
        #[arg(long, value_delimiter = ',')]
        steps_values: Option<Vec<u64>>,
        /// Log-spaced step counts as lo,hi,count.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [534, 1500, 8])]
        steps_range: Vec<u64>,
    },
    /// Analytic composition bound next to the accountant's divergence.
    Bound { a: String, b: String },
    /// Δ weighted by a prior over π.
    Weighted {
        a: String,
        b: String,
        /// uniform, jeffreys or uquadratic.
        #[arg(long, default_value = "uniform")]
        prior: String,
    },
    /// Write one curve of a mechanism.
    Export {
        /// Mechanism spec. May be left out when --sigma, --p and --steps are given.
        spec: Option<String>,
        #[arg(long, value_enum, default_value_t = CurveKind::Tradeoff)]
        kind: CurveKind,
        #[arg(long, requires_all = ["p", "steps"])]
        sigma: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
    },
}

/// Failure classes with their exit codes.
enum Failure {
    Parse(String),
    Numeric(String),
    Precondition(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Precondition(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<dpb::Error> for Failure {
    fn from(e: dpb::Error) -> Self {
        match e {
            dpb::Error::Parse { .. } => Failure::Parse(e.to_string()),
            dpb::Error::PreconditionUnmet { .. } => Failure::Precondition(e.to_string()),
            dpb::Error::Io(_) => Failure::Other(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_spec(s: &str) -> std::result::Result<MechanismSpec, Failure> {
    s.parse::<MechanismSpec>()
        .map_err(|e| Failure::Parse(e.to_string()))
}

struct Ctx {
    grid: usize,
    tolerance: Option<f64>,
    accountant: AccountantConfig,
    precision: Precision,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emitter(&self, default: Format) -> Emitter {
        Emitter::new(
            self.format.unwrap_or(default),
            self.precision,
            self.out.clone(),
        )
    }

    fn curve(&self, spec: &MechanismSpec) -> dpb::Result<TradeoffCurve> {
        tradeoff_curve_with(spec, self.grid, &self.accountant)
    }
}

#[derive(Serialize)]
struct CompareOutput {
    a: String,
    b: String,
    #[serde(flatten)]
    verdict: dpb::DominanceVerdict,
}

#[derive(Serialize)]
struct CalibrateOutput {
    eps: f64,
    delta: f64,
    p: f64,
    steps: u64,
    #[serde(flatten)]
    result: dpb::accountant::CalibrationResult,
}

#[derive(Serialize)]
struct WeightedOutput {
    a: String,
    b: String,
    prior: String,
    delta_ab: f64,
    delta_ba: f64,
    unweighted_ab: f64,
    unweighted_ba: f64,
}

#[derive(Serialize)]
struct BoundOutput {
    a: String,
    b: String,
    #[serde(flatten)]
    report: dpb::BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn write_curves(dir: &Path, name: &str, f: &TradeoffCurve, ctx: &Ctx) -> Outcome {
    std::fs::create_dir_all(dir)?;
    let profile = profile_from_tradeoff(f, &default_eps_grid(f, DEFAULT_EPS_STEP))?;
    let bayes = bayes_error_curve(f, ctx.grid)?;
    let open = |kind: &str| std::fs::File::create(dir.join(format!("{name}_{kind}.csv")));
    dpb::curves::write_csv(f, open("tradeoff")?, ctx.precision)?;
    dpb::curves::write_csv(&profile, open("profile")?, ctx.precision)?;
    dpb::curves::write_csv(&bayes, open("bayes")?, ctx.precision)?;
    Ok(())
}

fn with_tolerance(mut v: dpb::DominanceVerdict, tolerance: Option<f64>) -> dpb::DominanceVerdict {
    if let Some(t) = tolerance {
        v.tolerance = t;
        v.universal = v.delta_ab.min(v.delta_ba) <= t;
    }
    v
}

fn lattice_f64(values: Option<Vec<f64>>, range: &[f64]) -> std::result::Result<Vec<f64>, Failure> {
    if let Some(v) = values {
        return Ok(v);
    }
    let count = range[2];
    if !(count >= 1.0 && count.fract() == 0.0) {
        return Err(Failure::Parse(format!(
            "range count {count} is not a positive integer"
        )));
    }
    Ok(log_lattice(range[0], range[1], count as usize))
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    if g.grid_size < 2 {
        return Err(Failure::Parse("--grid-size must be at least 2".into()));
    }
    let ctx = Ctx {
        grid: g.grid_size,
        tolerance: g.tolerance,
        accountant: AccountantConfig {
            grid_spacing: g.grid_spacing,
            rounding: match g.rounding {
                RoundingArg::Pessimistic => Rounding::Pessimistic,
                RoundingArg::Midpoint => Rounding::Midpoint,
            },
            ..AccountantConfig::default()
        },
        precision: g
            .precision
            .map_or(Precision::default(), Precision::Decimals),
        format: g.format,
        out: g.out.clone(),
    };
    match cli.command {
        Command::Compare { a, b, curves } => {
            let (sa, sb) = (parse_spec(&a)?, parse_spec(&b)?);
            let (fa, fb) = rayon::join(|| ctx.curve(&sa), || ctx.curve(&sb));
            let (fa, fb) = (fa?, fb?);
            let verdict = with_tolerance(compare(&fa, &fb, ctx.grid)?, ctx.tolerance);
            if let Some(dir) = curves {
                write_curves(&dir, "a", &fa, &ctx)?;
                write_curves(&dir, "b", &fb, &ctx)?;
            }
            let out = CompareOutput {
                a: sa.to_string(),
                b: sb.to_string(),
                verdict,
            };
            ctx.emitter(Format::Json).record(&out)?;
        }
        Command::Calibrate {
            eps,
            delta,
            p,
            steps,
        } => {
            let result = calibrate_sigma(eps, delta, p, steps, &ctx.accountant)?;
            let out = CalibrateOutput {
                eps,
                delta,
                p,
                steps,
                result,
            };
            ctx.emitter(Format::Json).record(&out)?;
        }
        Command::Sweep {
            base,
            eps,
            delta,
            p_values,
            p_range,
            steps_values,
            steps_range,
        } => {
            let steps_values = steps_values.unwrap_or_else(|| {
                log_lattice_steps(steps_range[0], steps_range[1], steps_range[2] as usize)
            });
            let config = SweepConfig {
                base: parse_spec(&base)?,
                target_eps: eps,
                target_delta: delta,
                p_values: lattice_f64(p_values, &p_range)?,
                steps_values,
                grid_size: ctx.grid,
                accountant: ctx.accountant.clone(),
            };
            let rows = run_sweep(&config)?;
            ctx.emitter(Format::Csv).records(&rows)?;
        }
        Command::Bound { a, b } => {
            let (sa, sb) = (parse_spec(&a)?, parse_spec(&b)?);
            let report = empirical_vs_bound(&sa, &sb, ctx.grid, &ctx.accountant)?;
            let error = (!report.precondition_forward).then(|| {
                format!(
                    "precondition unmet: N/N2 = {} < {}",
                    report.ratio, report.required
                )
            });
            let out = BoundOutput {
                a: sa.to_string(),
                b: sb.to_string(),
                error: error.clone(),
                report,
            };
            ctx.emitter(Format::Json).record(&out)?;
            if let Some(e) = error {
                return Err(Failure::Precondition(e));
            }
        }
        Command::Weighted { a, b, prior } => {
            let (sa, sb) = (parse_spec(&a)?, parse_spec(&b)?);
            let psi: HyperPrior = prior.parse()?;
            let (fa, fb) = rayon::join(|| ctx.curve(&sa), || ctx.curve(&sb));
            let (fa, fb) = (fa?, fb?);
            let plain = compare(&fa, &fb, ctx.grid)?;
            let out = WeightedOutput {
                a: sa.to_string(),
                b: sb.to_string(),
                prior,
                delta_ab: weighted_delta_divergence(&fa, &fb, &psi, ctx.grid)?,
                delta_ba: weighted_delta_divergence(&fb, &fa, &psi, ctx.grid)?,
                unweighted_ab: plain.delta_ab,
                unweighted_ba: plain.delta_ba,
            };
            ctx.emitter(Format::Json).record(&out)?;
        }
        Command::Export {
            spec,
            kind,
            sigma,
            p,
            steps,
        } => {
            let spec = match (spec, sigma, p, steps) {
                (Some(s), None, _, _) => parse_spec(&s)?,
                (None, Some(sigma), Some(p), Some(steps)) => MechanismSpec::sgm(sigma, p, steps),
                _ => {
                    return Err(Failure::Parse(
                        "give either a mechanism spec or --sigma, --p and --steps".into(),
                    ))
                }
            };
            let f = ctx.curve(&spec)?;
            let name = Some(spec.to_string());
            let em = ctx.emitter(Format::Csv);
            match kind {
                CurveKind::Tradeoff => {
                    em.curve(&f, || CurveEnvelope::new(&f, name, ctx.precision))?
                }
                CurveKind::Profile => {
                    let c = profile_from_tradeoff(&f, &default_eps_grid(&f, DEFAULT_EPS_STEP))?;
                    em.curve(&c, || CurveEnvelope::new(&c, name, ctx.precision))?
                }
                CurveKind::Bayes => {
                    let c = bayes_error_curve(&f, ctx.grid)?;
                    em.curve(&c, || CurveEnvelope::new(&c, name, ctx.precision))?
                }
            }
        }
    }
    Ok(())
}

fn init_threads() -> std::result::Result<(), Failure> {
    let Ok(v) = std::env::var("DPB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::Parse(format!("DPB_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Parse(m)
            | Failure::Numeric(m)
            | Failure::Precondition(m)
            | Failure::Other(m)) = &f;
            eprintln!("dpb: {m}");
            ExitCode::from(f.code())
        }
    }
}
