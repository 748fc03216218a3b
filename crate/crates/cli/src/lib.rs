//! The `forge` command line: generation, analysis, verification and tables.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 on usage or input
//! errors. `FORGE_SEED` replaces the default seed of every randomized command; an
//! explicit `--seed` wins over both.

pub mod recipe;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forge_core::constructions;
use forge_core::decodability::{analyze, DEFAULT_BUDGET};
use forge_core::design::Design;
use forge_core::diversity::{self, build_constellations, regular_pam, regular_pam_assignment, verify_full_diversity, Constellation};
use forge_core::pauli::{verify_basis, verify_equivalence};
use forge_core::simulator::{decode_count, verify_r_structure, SignalSet};
use forge_core::table;
use num_rational::Rational64;
use serde::Serialize;
use serde_json::{json, Value};

pub use recipe::Recipe;

pub const DEFAULT_SEED: u64 = 2011;

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Space-time block codes from F4 codes: build, analyze, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Arbitrary,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Md,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the design JSON for a catalog name or a recipe file.
    Generate {
        source: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decodability report: partitions, decoding structure and cost.
    Analyze {
        design: String,
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Check the weight conditions against the matrices and the basis properties.
    VerifyF4 {
        #[arg(long)]
        m: usize,
        /// Random pairs to check instead of all pairs (default: all for m <= 2, 10000 otherwise).
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the zero pattern of the QR factor over random channels.
    QrStructure {
        design: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        receivers: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = DataFormat::Json)]
        format: DataFormat,
    },
    /// Verify full diversity by enumerating codeword differences.
    Diversity {
        design: String,
        /// Constellation size per symbol, or one size for all.
        #[arg(long, value_delimiter = ',')]
        q: Vec<usize>,
        /// Constellation JSON; regular PAM of the given sizes when absent.
        #[arg(long)]
        constellation: Option<PathBuf>,
        #[arg(long, default_value_t = diversity::DEFAULT_TOL)]
        tol: f64,
    },
    /// Build full-diversity constellations point by point.
    BuildConstellation {
        design: String,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Symbols (one-based) that take regular PAM.
        #[arg(long, value_delimiter = ',')]
        pam: Vec<usize>,
        #[arg(long, default_value_t = diversity::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count metric evaluations of the conditional decoder against exhaustive ML.
    DecodeCount {
        design: String,
        #[arg(long)]
        m_size: u64,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = DataFormat::Json)]
        format: DataFormat,
    },
    /// Decoding-complexity comparison table.
    Table1 {
        #[arg(long, value_enum, default_value_t = TableFormat::Md)]
        format: TableFormat,
    },
    /// List the named designs, optionally writing each as JSON.
    Catalog {
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn seed_or_env(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var("FORGE_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("FORGE_SEED must be an unsigned integer, got `{v}`")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// A design from a JSON file (design or recipe) or a catalog name.
pub fn load_design(source: &str) -> Result<Design> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {source}"))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("{source} is not JSON"))?;
        if value.get("construction").is_some() {
            let r: Recipe = serde_json::from_value(value).with_context(|| format!("bad recipe in {source}"))?;
            return r.build();
        }
        return Design::from_json(&text).with_context(|| format!("bad design in {source}"));
    }
    constructions::by_name(source).with_context(|| format!("`{source}` is neither a file nor a catalog name"))
}

fn rate_str(r: Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn emit_json(out: &mut dyn Write, v: &impl Serialize) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn sizes(q: &[usize], k: usize) -> Result<Vec<usize>> {
    match q.len() {
        1 => Ok(vec![q[0]; k]),
        n if n == k => Ok(q.to_vec()),
        n => bail!("--q needs 1 or {k} sizes, got {n}"),
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Generate { source, out: path } => {
            let d = load_design(source)?;
            match path {
                Some(p) => fs::write(p, d.to_json()).with_context(|| format!("writing {}", p.display()))?,
                None => write!(out, "{}", d.to_json())?,
            }
            Ok(true)
        }
        Command::Analyze { design, regime, budget } => {
            let d = load_design(design)?;
            let report = analyze(&d, *budget);
            let mut v = serde_json::to_value(&report)?;
            if let Some(r) = regime {
                let (key, summary) = match r {
                    RegimeArg::Arbitrary => ("arbitrary", &report.arbitrary),
                    RegimeArg::Reduced => ("reduced", &report.reduced),
                };
                v["selected_regime"] = json!(key);
                v["selected"] = serde_json::to_value(summary)?;
            }
            emit_json(out, &v)?;
            Ok(report.groups_valid)
        }
        Command::VerifyF4 { m, samples, seed } => {
            let samples = match samples {
                Some(n) => Some((*n, seed_or_env(*seed)?)),
                None if *m <= 2 => None,
                None => Some((10_000, seed_or_env(*seed)?)),
            };
            let eq = verify_equivalence(*m, samples)?;
            let basis = if *m <= 3 { Some(verify_basis(*m)?) } else { None };
            let passed = eq.passed && basis.as_ref().is_none_or(|b| b.passed);
            emit_json(out, &json!({ "equivalence": eq, "basis": basis, "passed": passed }))?;
            Ok(passed)
        }
        Command::QrStructure { design, trials, tol, receivers, seed, format } => {
            if *trials == 0 || *receivers == 0 {
                bail!("--trials and --receivers must be positive");
            }
            let d = load_design(design)?;
            let node = analyze(&d, DEFAULT_BUDGET).node;
            let r = verify_r_structure(&d, &node, *trials, *tol, seed_or_env(*seed)?, *receivers)?;
            match format {
                DataFormat::Json => emit_json(out, &r)?,
                DataFormat::Csv => {
                    writeln!(out, "design,trials,receivers,claimed_pairs,max_claimed,control_pairs,control_median,rank_deficient_trials,passed")?;
                    let median = r.control_median.map(|m| format!("{m:e}")).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{},{},{:e},{},{},{},{}",
                        r.design, r.trials, r.receivers, r.claimed_pairs, r.max_claimed, r.control_pairs, median, r.rank_deficient_trials, r.passed
                    )?;
                }
            }
            Ok(r.passed)
        }
        Command::Diversity { design, q, constellation, tol } => {
            let d = load_design(design)?;
            let c = match constellation {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let mut v: Value = serde_json::from_str(&text)?;
                    if let Some(inner) = v.get_mut("constellation") {
                        v = inner.take();
                    }
                    let c: Constellation = serde_json::from_value(v).context("bad constellation JSON")?;
                    if !q.is_empty() && sizes(q, d.k())? != c.sizes() {
                        bail!("--q does not match the constellation sizes {:?}", c.sizes());
                    }
                    c
                }
                None => {
                    if q.is_empty() {
                        bail!("give --q or --constellation");
                    }
                    Constellation::given(sizes(q, d.k())?.into_iter().map(regular_pam).collect())
                }
            };
            let cert = verify_full_diversity(&d, &c, *tol)?;
            emit_json(out, &cert)?;
            Ok(cert.passed)
        }
        Command::BuildConstellation { design, q, seed, pam, tol, out: path } => {
            let d = load_design(design)?;
            let q = sizes(q, d.k())?;
            if pam.iter().any(|&s| s == 0 || s > d.k()) {
                bail!("--pam symbols are numbered 1..={}", d.k());
            }
            let symbols: Vec<usize> = pam.iter().map(|s| s - 1).collect();
            let fixed = match symbols.first() {
                Some(&first) => {
                    if symbols.iter().any(|&s| q[s] != q[first]) {
                        bail!("PAM symbols must share one constellation size");
                    }
                    regular_pam_assignment(&d, &symbols, q[first])?
                }
                None => vec![],
            };
            let (c, cert) = match build_constellations(&d, &q, seed_or_env(*seed)?, &fixed, *tol) {
                Ok(x) => x,
                Err(e) => {
                    emit_json(out, &json!({ "error": e.to_string(), "passed": false }))?;
                    return Ok(false);
                }
            };
            let v = json!({ "design": d.name(), "constellation": c, "certificate": cert });
            match path {
                Some(p) => fs::write(p, serde_json::to_string_pretty(&v)? + "\n")?,
                None => emit_json(out, &v)?,
            }
            Ok(cert.passed)
        }
        Command::DecodeCount { design, m_size, trials, noise, seed, format } => {
            let d = load_design(design)?;
            let seed = seed_or_env(*seed)?;
            let node = analyze(&d, DEFAULT_BUDGET).node;
            let set = SignalSet::for_size(&d, *m_size, seed)?;
            let r = decode_count(&d, &set, &node, *m_size, *trials, seed, *noise)?;
            match format {
                DataFormat::Json => emit_json(out, &r)?,
                DataFormat::Csv => {
                    writeln!(out, "design,m_size,trials,conditional_evaluations,flat_evaluations,predicted,agreements,passed")?;
                    let p = r.predicted.map(|p| p.to_string()).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        r.design, r.m_size, r.trials, r.conditional_evaluations, r.flat_evaluations, p, r.agreements, r.passed
                    )?;
                }
            }
            Ok(r.passed)
        }
        Command::Table1 { format } => {
            let rows = table::table1()?;
            match format {
                TableFormat::Md => write!(out, "{}", table::render_markdown(&rows))?,
                TableFormat::Csv => write!(out, "{}", table::render_csv(&rows))?,
                TableFormat::Json => emit_json(out, &rows)?,
            }
            Ok(true)
        }
        Command::Catalog { out_dir } => {
            let mut listing = vec![];
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            for d in constructions::catalog() {
                let mut entry = json!({ "name": d.name(), "antennas": d.antennas(), "k": d.k(), "rate": rate_str(d.rate()) });
                if let Some(dir) = out_dir {
                    let p = dir.join(format!("{}.json", d.name()));
                    fs::write(&p, d.to_json()).with_context(|| format!("writing {}", p.display()))?;
                    entry["path"] = json!(p.display().to_string());
                }
                listing.push(entry);
            }
            emit_json(out, &listing)?;
            Ok(true)
        }
    }
}
