//! Command-line front end for the `cubic-zeta` checks.
//!
//! Every command produces a [`MatchReport`] (or, for `ktab`, a
//! [`TableReport`]) whose overall `pass` flag decides the exit status.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use cubic_zeta::analytic::analytic_report;
use cubic_zeta::arith::{big_pow, is_prime};
use cubic_zeta::cubic::{Sign, SignedConstant};
use cubic_zeta::kloosterman::{
    global_k, global_k_direct, kloosterman_table, periodicity_scan, ScanConfig, DEFAULT_PAIR_BUDGET,
};
use cubic_zeta::overorders::{coset_set, enumerate_overorders, monogenic_form, oracle_enumerate};
use cubic_zeta::report::{rat_string, MatchReport};
use cubic_zeta::series::{
    global_consistency, trace_factor_oracle, trivial_trace_factor, verify_intermediate,
    verify_local, Axis,
};

#[derive(Debug, Parser)]
#[command(
    name = "cubic-zeta",
    version,
    about = "Exact checks for Kloosterman-type sums of cubic orders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of local sums K_q(q^v, q^r) for v <= vmax, r <= rmax.
    Ktab {
        #[arg(long, default_value_t = 4)]
        vmax: u32,
        #[arg(long, default_value_t = 2)]
        rmax: u32,
    },
    /// Compare computed quantities with their closed forms.
    Verify {
        #[arg(value_enum)]
        target: Target,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        f: Option<u64>,
        /// Largest n*f^2 swept by `verify euler` when --n/--f are absent.
        #[arg(long, default_value_t = 200)]
        bound: u64,
        /// Lift multiplier for `verify periodicity`.
        #[arg(long, default_value_t = 2)]
        multiplier: u64,
        /// Restrict `verify intermediate` to one axis.
        #[arg(long)]
        axis: Option<String>,
    },
    /// Congruence-system enumeration against the coset-scan oracle.
    OracleDiff {
        #[arg(long, default_value_t = 2)]
        rmax: u32,
    },
    /// The finite trace factor of the trivial representation against its
    /// series-coefficient oracle.
    TraceFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Local,
    Intermediate,
    Global,
    Euler,
    Periodicity,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Enumeration prime q; repeat for several.
    #[arg(long = "local-prime", global = true)]
    pub local_primes: Vec<u64>,
    /// Prime p of the fixed constant ±p^k.
    #[arg(long = "const-prime", global = true, default_value_t = 5)]
    pub const_prime: u64,
    #[arg(long, global = true, default_value_t = 1)]
    pub k: u32,
    #[arg(long, global = true, default_value = "+", allow_hyphen_values = true)]
    pub sign: String,
    /// Truncation order; defaults depend on the local prime.
    #[arg(long, global = true)]
    pub trunc: Option<u32>,
    #[arg(long = "pair-budget", global = true, default_value_t = DEFAULT_PAIR_BUDGET)]
    pub pair_budget: u128,
    #[arg(long, global = true, env = "CUBIC_ZETA_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report elapsed_ms as 0 so that reports from different runs compare equal.
    #[arg(long = "no-timing", global = true)]
    pub no_timing: bool,
}

/// Validated run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub local_primes: Vec<u64>,
    pub constant: SignedConstant,
    pub trunc: Option<u32>,
    pub scan: ScanConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

impl RunConfig {
    pub fn from_common(c: &Common) -> anyhow::Result<Self> {
        let sign: Sign = c.sign.parse()?;
        let constant = SignedConstant::new(c.const_prime, c.k, sign)?;
        let mut primes = c.local_primes.clone();
        for &q in &primes {
            if !is_prime(q) {
                bail!("local prime {q} is not a prime");
            }
        }
        primes.sort_unstable();
        if primes.windows(2).any(|w| w[0] == w[1]) {
            bail!("local primes must be distinct");
        }
        if c.pair_budget == 0 {
            bail!("pair budget must be positive");
        }
        let mut scan = ScanConfig::default().with_budget(c.pair_budget);
        if let Some(w) = c.workers {
            if w == 0 {
                bail!("worker count must be positive");
            }
            scan = scan.with_workers(w);
        }
        Ok(RunConfig {
            local_primes: primes,
            constant,
            trunc: c.trunc,
            scan,
            out: c.out.clone(),
            format: c.format,
            timing: !c.no_timing,
        })
    }

    fn primes_or(&self, default: &[u64]) -> Vec<u64> {
        if self.local_primes.is_empty() {
            default.to_vec()
        } else {
            self.local_primes.clone()
        }
    }

    fn trunc_for(&self, q: u64) -> u32 {
        self.trunc.unwrap_or_else(|| default_trunc(q))
    }

    fn finish(&self, report: MatchReport, start: Instant) -> MatchReport {
        if self.timing {
            report.timed(start)
        } else {
            report
        }
    }
}

/// Truncation used when `--trunc` is absent.
pub fn default_trunc(q: u64) -> u32 {
    match q {
        2 => 10,
        3 => 7,
        5 => 5,
        7 => 4,
        _ => 3,
    }
}

/// One entry of an emitted Kloosterman table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub q: u64,
    pub v: u32,
    pub r: u32,
    pub c: String,
    pub value: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableReport {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub entries: Vec<TableEntry>,
    pub pass: bool,
    pub elapsed_ms: u64,
}

/// Output of any subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Report(MatchReport),
    Table(TableReport),
}

impl Output {
    pub fn pass(&self) -> bool {
        match self {
            Output::Report(r) => r.pass,
            Output::Table(t) => t.pass,
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(match self {
            Output::Report(r) => serde_json::to_string_pretty(r)?,
            Output::Table(t) => serde_json::to_string_pretty(t)?,
        })
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            Output::Report(r) => {
                w.write_record(["command", "label", "expected", "computed", "pass"])?;
                for i in &r.items {
                    w.write_record([
                        r.command.as_str(),
                        &i.label,
                        &i.expected,
                        &i.computed,
                        if i.pass { "true" } else { "false" },
                    ])?;
                }
            }
            Output::Table(t) => {
                w.write_record(["q", "v", "r", "c", "value", "error"])?;
                for e in &t.entries {
                    w.write_record([
                        e.q.to_string(),
                        e.v.to_string(),
                        e.r.to_string(),
                        e.c.clone(),
                        e.value.clone().unwrap_or_default(),
                        e.error.clone().unwrap_or_default(),
                    ])?;
                }
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Runs a parsed command line and writes its output. Returns whether the
/// run passed.
pub fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = RunConfig::from_common(&cli.common)?;
    let output = dispatch(&cli.command, &cfg)?;
    let text = output.render(cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(output.pass())
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> anyhow::Result<Output> {
    Ok(match command {
        Command::Ktab { vmax, rmax } => Output::Table(cmd_ktab(cfg, *vmax, *rmax)?),
        Command::Verify {
            target,
            n,
            f,
            bound,
            multiplier,
            axis,
        } => Output::Report(match target {
            Target::Local => cmd_verify_local(cfg)?,
            Target::Intermediate => {
                let axes = match axis {
                    Some(a) => vec![a.parse::<Axis>()?],
                    None => vec![Axis::Row, Axis::Column],
                };
                cmd_verify_intermediate(cfg, &axes)?
            }
            Target::Global => cmd_verify_global(cfg)?,
            Target::Euler => {
                let pairs = match (n, f) {
                    (Some(n), Some(f)) => vec![(*n, *f)],
                    (None, None) => euler_grid(*bound),
                    _ => bail!("--n and --f must be given together"),
                };
                cmd_verify_euler(cfg, &pairs)?
            }
            Target::Periodicity => {
                let pairs = match (n, f) {
                    (Some(n), Some(f)) => vec![(*n, *f)],
                    (None, None) => vec![(2, 1), (3, 1), (4, 1), (2, 2), (6, 1)],
                    _ => bail!("--n and --f must be given together"),
                };
                cmd_verify_periodicity(cfg, &pairs, *multiplier)?
            }
            Target::Analytic => cmd_verify_analytic(cfg)?,
        }),
        Command::OracleDiff { rmax } => Output::Report(cmd_oracle_diff(cfg, *rmax)?),
        Command::TraceFactor => Output::Report(cmd_trace_factor(cfg)?),
    })
}

fn base_params(report: MatchReport, cfg: &RunConfig) -> MatchReport {
    report
        .param("const_prime", cfg.constant.p)
        .param("k", cfg.constant.k)
        .param("sign", cfg.constant.sign)
}

pub fn cmd_ktab(cfg: &RunConfig, vmax: u32, rmax: u32) -> anyhow::Result<TableReport> {
    let start = Instant::now();
    let primes = cfg.primes_or(&[2]);
    let mut entries = Vec::new();
    for &q in &primes {
        for (key, value) in kloosterman_table(q, cfg.constant, vmax, rmax, &cfg.scan) {
            let (value, error) = match value {
                Ok(v) => (Some(v.to_string()), None),
                Err(e) => (None, Some(e.to_string())),
            };
            entries.push(TableEntry {
                q: key.q,
                v: key.v,
                r: key.r,
                c: key.c.to_string(),
                value,
                error,
            });
        }
    }
    let mut params = BTreeMap::new();
    params.insert("local_prime".into(), join(&primes));
    params.insert("const_prime".into(), cfg.constant.p.to_string());
    params.insert("k".into(), cfg.constant.k.to_string());
    params.insert("sign".into(), cfg.constant.sign.to_string());
    params.insert("vmax".into(), vmax.to_string());
    params.insert("rmax".into(), rmax.to_string());
    let pass = entries.iter().all(|e| e.error.is_none());
    Ok(TableReport {
        command: "ktab".into(),
        params,
        entries,
        pass,
        elapsed_ms: if cfg.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// `verify local` for every configured local prime.
pub fn cmd_verify_local(cfg: &RunConfig) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let primes = cfg.primes_or(&[2]);
    let report = if primes.len() == 1 {
        let q = primes[0];
        verify_local(q, cfg.constant, cfg.trunc_for(q), &cfg.scan)?
    } else {
        let mut all =
            base_params(MatchReport::new("verify local"), cfg).param("local_prime", join(&primes));
        for &q in &primes {
            let r = verify_local(q, cfg.constant, cfg.trunc_for(q), &cfg.scan)?;
            all.absorb(&format!("q={q} "), r);
        }
        all
    };
    Ok(cfg.finish(report, start))
}

pub fn cmd_verify_intermediate(cfg: &RunConfig, axes: &[Axis]) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let primes = cfg.primes_or(&[2]);
    let mut parts = Vec::new();
    for &q in &primes {
        for &axis in axes {
            let r = verify_intermediate(q, cfg.constant, axis, cfg.trunc_for(q), &cfg.scan)?;
            parts.push((format!("q={q} {axis} "), r));
        }
    }
    let report = if parts.len() == 1 {
        parts.pop().map(|(_, r)| r).expect("one part")
    } else {
        let mut all = base_params(MatchReport::new("verify intermediate"), cfg)
            .param("local_prime", join(&primes));
        for (prefix, r) in parts {
            all.absorb(&prefix, r);
        }
        all
    };
    Ok(cfg.finish(report, start))
}

pub fn cmd_verify_global(cfg: &RunConfig) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let primes = cfg.primes_or(&[2, 3, 5, 7, 11, 13]);
    let report = global_consistency(cfg.constant.p, cfg.constant.k, &primes)?
        .param("local_prime", join(&primes));
    Ok(cfg.finish(report, start))
}

/// Every `(n, f)` with `n f^2 <= bound`, ordered by `f` then `n`.
pub fn euler_grid(bound: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut f = 1;
    while f * f <= bound {
        for n in 1..=bound / (f * f) {
            out.push((n, f));
        }
        f += 1;
    }
    out
}

pub fn cmd_verify_euler(cfg: &RunConfig, pairs: &[(u64, u64)]) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let mut report = base_params(MatchReport::new("verify euler"), cfg);
    if let [(n, f)] = pairs {
        report = report.param("n", n).param("f", f);
    } else {
        report = report.param("pairs", pairs.len());
    }
    for &(n, f) in pairs {
        let direct = global_k_direct(n, f, cfg.constant, &cfg.scan)?;
        let product = global_k(n, f, cfg.constant, &cfg.scan)?;
        report.compare(format!("K({n},{f})"), &direct, &product, BigInt::to_string);
    }
    Ok(cfg.finish(report, start))
}

pub fn cmd_verify_periodicity(
    cfg: &RunConfig,
    pairs: &[(u64, u64)],
    multiplier: u64,
) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let mut report =
        base_params(MatchReport::new("verify periodicity"), cfg).param("multiplier", multiplier);
    for &(n, f) in pairs {
        let outcome = periodicity_scan(n, f, cfg.constant, multiplier, &cfg.scan)?;
        let shown = match outcome.mismatches.first() {
            None => format!("0 mismatches over {} lifts", outcome.lifts),
            Some((a, b, la, lb)) => format!(
                "{} mismatches, first ({a},{b}) vs ({la},{lb})",
                outcome.mismatches.len()
            ),
        };
        report.push(
            format!("n={n} f={f}"),
            format!("0 mismatches over {} lifts", outcome.lifts),
            shown,
            outcome.pass(),
        );
    }
    Ok(cfg.finish(report, start))
}

pub fn cmd_verify_analytic(cfg: &RunConfig) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let report = analytic_report(cfg.constant.k)?;
    Ok(cfg.finish(report, start))
}

/// Exhaustive comparison over `(a, b) mod q^(2r)` for `1 <= r <= rmax`.
pub fn cmd_oracle_diff(cfg: &RunConfig, rmax: u32) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let primes = cfg.primes_or(&[2, 3, 5]);
    let mut report = base_params(MatchReport::new("oracle-diff"), cfg)
        .param("local_prime", join(&primes))
        .param("rmax", rmax);
    let c = cfg.constant;
    for &q in &primes {
        for r in 1..=rmax {
            let m = big_pow(q, 2 * r);
            let m: u64 = m.try_into().context("modulus too large")?;
            let pairs = m as u128 * m as u128;
            if pairs > cfg.scan.pair_budget {
                bail!(
                    "oracle-diff q={q} r={r} needs {pairs} pairs, budget {}",
                    cfg.scan.pair_budget
                );
            }
            let mut mismatches = 0u64;
            let mut first = None;
            let mut overorders = 0usize;
            for a in 0..m as i64 {
                for b in 0..m as i64 {
                    let form = monogenic_form(a, b, &c);
                    let sys = coset_set(&enumerate_overorders(&form, &c, q, r)?, q);
                    let orc = coset_set(&oracle_enumerate(&form, &c, q, r)?, q);
                    overorders += sys.len();
                    if sys != orc {
                        mismatches += 1;
                        first.get_or_insert((a, b));
                    }
                }
            }
            let computed = match first {
                None => format!("0 mismatches ({overorders} overorders)"),
                Some((a, b)) => format!("{mismatches} mismatches, first (a,b)=({a},{b})"),
            };
            report.push(
                format!("q={q} r={r}"),
                "0 mismatches",
                computed,
                mismatches == 0,
            );
        }
    }
    Ok(cfg.finish(report, start))
}

pub fn cmd_trace_factor(cfg: &RunConfig) -> anyhow::Result<MatchReport> {
    let start = Instant::now();
    let p = cfg.constant.p;
    let k = cfg.constant.k;
    let mut report = MatchReport::new("trace-factor")
        .param("const_prime", p)
        .param("k", k);
    let closed = trivial_trace_factor(p, k)?;
    let oracle = trace_factor_oracle(p, k)?;
    report.compare(format!("p={p} k={k}"), &oracle, &closed, rat_string);
    Ok(cfg.finish(report, start))
}
