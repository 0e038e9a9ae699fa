use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use ap_avoid::bounds::{bound_report, BoundReport};
use ap_avoid::construction::{build_digit_set, level_approximation, random_realization, DigitSet};
use ap_avoid::fourier::{compare_constructions, decay_profile, default_spec};
use ap_avoid::szemeredi::{rk_query, RkCache, RkOracle, RkRecord};
use ap_avoid::verifier::{verify_construction_with, Outcome, Verdict, DEFAULT_DEPTH_CAP};
use ap_avoid::{parse_rational, Error, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

const CACHE_ENV: &str = "AP_AVOID_CACHE";

#[derive(Parser, Debug)]
#[command(name = "ap-avoid", version, about = "Sets avoiding approximate arithmetic progressions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Time budget for each r_k search, in milliseconds
    #[arg(long, global = true, default_value_t = 10_000)]
    budget_ms: u64,
    /// Seed for randomized constructions and frequency sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// r_k cache file; the AP_AVOID_CACHE environment variable takes precedence
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the artifact here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute r_k(N) (exact within budget, otherwise the best lower bound)
    Rk {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u64,
    },
    /// Build the digit set for (k, epsilon)
    Build {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: String,
    },
    /// Level approximation of the construction, deterministic or randomly rotated
    Approx {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        level: u32,
        /// Use the random rotation driven by --seed
        #[arg(long)]
        random: bool,
    },
    /// Certify that the construction avoids k-term progressions on nested gap windows
    Verify {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, default_value_t = 2)]
        windows: u32,
        #[arg(long, default_value_t = DEFAULT_DEPTH_CAP)]
        depth_cap: u32,
    },
    /// Every bound on d(k, epsilon) over a grid of k and epsilon values
    Bounds {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        epsilon: Vec<String>,
    },
    /// Fourier decay of the deterministic construction against random rotations
    Fourier {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 7)]
        level: u32,
        /// Number of random realizations (seeds --seed, --seed + 1, ...)
        #[arg(long, default_value_t = 16)]
        seeds: u64,
    },
    /// Full pipeline for one (k, epsilon): bounds, construction, verification, cross-checks
    Sandwich {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, default_value_t = 2)]
        windows: u32,
        #[arg(long, default_value_t = DEFAULT_DEPTH_CAP)]
        depth_cap: u32,
    },
}

struct App {
    global: Global,
    cache: RkCache,
}

impl App {
    fn oracle(&mut self) -> RkOracle {
        RkOracle::new(std::mem::take(&mut self.cache), Duration::from_millis(self.global.budget_ms))
    }

    fn restore(&mut self, oracle: RkOracle) {
        self.cache = oracle.cache;
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.global.out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }

    fn format(&self, default: Format) -> Format {
        self.global.format.unwrap_or(default)
    }
}

fn epsilon(text: &str) -> anyhow::Result<Rational> {
    Ok(parse_rational(text)?)
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn rk_csv(records: &[RkRecord]) -> String {
    let mut out = String::from("k,N,value,kind,method,witness,elapsed_ms\n");
    for r in records {
        let witness = r
            .witness
            .as_ref()
            .map(|w| w.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let kind = serde_json::to_value(r.kind).unwrap();
        let method = serde_json::to_value(r.method).unwrap();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            r.n,
            r.value,
            kind.as_str().unwrap(),
            method.as_str().unwrap(),
            witness,
            r.elapsed_ms
        ));
    }
    out
}

fn digit_set(ctx: &mut App, k: u32, eps: &Rational) -> anyhow::Result<DigitSet> {
    let mut oracle = ctx.oracle();
    let ds = build_digit_set(k, eps, &mut oracle);
    ctx.restore(oracle);
    Ok(ds?)
}

fn verify(ctx: &mut App, k: u32, eps: &Rational, level: u32, windows: u32, depth_cap: u32) -> anyhow::Result<(DigitSet, Vec<Verdict>)> {
    let ds = digit_set(ctx, k, eps)?;
    let verdicts = verify_construction_with(&ds, eps, level, windows, depth_cap)?;
    Ok((ds, verdicts))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global()?;
    }
    let cache_path = std::env::var_os(CACHE_ENV).map(PathBuf::from).or_else(|| cli.global.cache.clone());
    let cache = match &cache_path {
        Some(path) => RkCache::open(path)?,
        None => RkCache::in_memory(),
    };
    let mut ctx = App { global: cli.global, cache };
    let mut code = ExitCode::SUCCESS;

    match cli.command {
        Command::Rk { k, n } => {
            let rec = rk_query(k, n, &mut ctx.cache, Duration::from_millis(ctx.global.budget_ms))?;
            let text = match ctx.format(Format::Csv) {
                Format::Csv => rk_csv(std::slice::from_ref(&rec)),
                Format::Json => to_json(&rec)?,
            };
            ctx.emit(&text)?;
        }
        Command::Build { k, epsilon: e } => {
            let ds = digit_set(&mut ctx, k, &epsilon(&e)?)?;
            if ctx.format(Format::Json) == Format::Csv {
                bail!(Error::InvalidArgument("build emits JSON only".into()));
            }
            ctx.emit(&to_json(&ds)?)?;
        }
        Command::Approx { k, epsilon: e, level, random } => {
            let ds = digit_set(&mut ctx, k, &epsilon(&e)?)?;
            let union = if random {
                random_realization(&ds, level, ctx.global.seed)?.1
            } else {
                level_approximation(&ds, level)?
            };
            let text = match ctx.format(Format::Json) {
                Format::Csv => union.to_csv(),
                Format::Json => union.to_json()? + "\n",
            };
            ctx.emit(&text)?;
        }
        Command::Verify { k, epsilon: e, level, windows, depth_cap } => {
            if ctx.format(Format::Json) == Format::Csv {
                bail!(Error::InvalidArgument("verify emits JSON only".into()));
            }
            let (_, verdicts) = verify(&mut ctx, k, &epsilon(&e)?, level, windows, depth_cap)?;
            ctx.emit(&to_json(&verdicts)?)?;
        }
        Command::Bounds { k, epsilon: eps } => {
            let eps: Vec<Rational> = eps.iter().map(|e| epsilon(e)).collect::<anyhow::Result<_>>()?;
            let mut oracle = ctx.oracle();
            let mut reports: Vec<BoundReport> = Vec::new();
            for &k in &k {
                for e in &eps {
                    reports.push(bound_report(k, e, &mut oracle)?);
                }
            }
            ctx.restore(oracle);
            let text = match ctx.format(Format::Csv) {
                Format::Csv => {
                    let mut out = format!("{}\n", BoundReport::CSV_HEADER);
                    for r in &reports {
                        out.push_str(&r.csv_row());
                        out.push('\n');
                    }
                    out
                }
                Format::Json => to_json(&reports)?,
            };
            ctx.emit(&text)?;
            if let Some(bad) = reports.iter().find(|r| !r.consistent) {
                bail!(Error::Inconsistency(format!("lower bound exceeds upper bound at k = {}, epsilon = {}", bad.k, bad.epsilon)));
            }
        }
        Command::Fourier { k, epsilon: e, level, seeds } => {
            let ds = digit_set(&mut ctx, k, &epsilon(&e)?)?;
            let text = match ctx.format(Format::Json) {
                Format::Csv => {
                    let spec = default_spec(ds.base, level, ctx.global.seed);
                    decay_profile(&level_approximation(&ds, level)?, &spec, "deterministic")?.to_csv()
                }
                Format::Json => {
                    let seeds: Vec<u64> = (0..seeds).map(|i| ctx.global.seed.wrapping_add(i)).collect();
                    to_json(&compare_constructions(&ds, level, &seeds)?)?
                }
            };
            ctx.emit(&text)?;
        }
        Command::Sandwich { k, epsilon: e, level, windows, depth_cap } => {
            if ctx.format(Format::Json) == Format::Csv {
                bail!(Error::InvalidArgument("sandwich emits JSON only".into()));
            }
            let eps = epsilon(&e)?;
            let mut oracle = ctx.oracle();
            let report = bound_report(k, &eps, &mut oracle)?;
            ctx.restore(oracle);
            let ds = digit_set(&mut ctx, k, &eps)?;
            let verdicts: Vec<ap_avoid::Result<Verdict>> = match verify_construction_with(&ds, &eps, level, windows, depth_cap) {
                Ok(v) => v.into_iter().map(Ok).collect(),
                Err(e) => vec![Err(e)],
            };
            let lower_ok = match (report.lower_a.as_ref(), report.best_upper()) {
                (Some(a), Some(hi)) => a.value <= hi,
                _ => true,
            };
            let undecided = verdicts.iter().any(|v| matches!(v, Err(Error::Undecided { .. })));
            let verdict_json: Vec<serde_json::Value> = verdicts
                .iter()
                .map(|v| match v {
                    Ok(v) => serde_json::to_value(v).unwrap(),
                    Err(e) => error_body(e),
                })
                .collect();
            let avoiding = verdicts.iter().all(|v| matches!(v, Ok(v) if v.outcome == Outcome::CertifiedAvoiding));
            let body = json!({
                "k": k,
                "epsilon": { "num": eps.numer().to_string(), "den": eps.denom().to_string() },
                "bounds": report,
                "digit_set": ds,
                "level": level,
                "verdicts": verdict_json,
                "checks": {
                    "sandwich_consistent": report.consistent,
                    "lower_a_below_upper_bounds": lower_ok,
                    "construction_certified": avoiding,
                },
            });
            ctx.emit(&to_json(&body)?)?;
            if !report.consistent || !lower_ok {
                bail!(Error::Inconsistency("lower bound exceeds an upper bound".into()));
            }
            if undecided {
                code = ExitCode::from(3);
            } else if let Some(Err(e)) = verdicts.into_iter().find(|v| v.is_err()) {
                return Err(e.into());
            }
        }
    }

    if cache_path.is_some() {
        ctx.cache.save()?;
    }
    Ok(code)
}

fn error_body(e: &Error) -> serde_json::Value {
    let mut body = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::Undecided { surviving, surviving_total, boxes_explored } = e {
        body["surviving_total"] = json!(surviving_total);
        body["boxes_explored"] = json!(boxes_explored);
        body["surviving_sample"] = serde_json::to_value(surviving).unwrap_or_default();
    }
    body
}

fn exit_code(e: &anyhow::Error) -> (u8, serde_json::Value) {
    match e.downcast_ref::<Error>() {
        Some(err) => {
            let code = match err {
                Error::InvalidArgument(_) | Error::ResourceLimit { .. } => 2,
                Error::Undecided { .. } => 3,
                Error::Inconsistency(_) => 4,
                _ => 1,
            };
            let mut body = error_body(err);
            body["message"] = json!(format!("{e:#}"));
            (code, body)
        }
        None => (1, json!({ "error": "failure", "message": format!("{e:#}") })),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": "invalid-argument", "message": e.to_string().trim_end() });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let (code, body) = exit_code(&e);
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
