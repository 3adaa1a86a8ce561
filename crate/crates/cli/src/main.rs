use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tenclass::classifiers::{self, Class, Config};
use tenclass::spectral;
use tenclass::verify::{self, GeneratorKind, GeneratorSpec};
use tenclass::{io, Sign, Tensor};

/// Classify tensors into semi-positive, copositive and related classes.
#[derive(Parser)]
#[command(name = "tenclass", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Relative tolerance; the absolute one is this times the largest entry.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
    #[arg(long, default_value_t = 200_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 12)]
    subset_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> anyhow::Result<Config> {
        let cfg = Config {
            epsilon: self.epsilon,
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
            subset_cap: self.subset_cap,
            seed: self.seed,
            ..Config::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the class predicates on a tensor file.
    Classify {
        file: PathBuf,
        /// Comma-separated class names; all classes when omitted.
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral radius enclosure and/or positive eigenpair search.
    Spectral {
        file: PathBuf,
        #[arg(long)]
        radius: bool,
        #[arg(long)]
        eigenpair: bool,
        #[arg(long, value_enum, default_value_t = EigenSign::Negative)]
        sign: EigenSign,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run one property suite, or `all`.
    Verify {
        suite: String,
        /// Instances per suite; each suite's default when omitted.
        #[arg(long)]
        count: Option<usize>,
        /// Write the tensors of violating instances here as tensor files.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the built-in example corpus.
    Fixtures {
        #[command(flatten)]
        common: Common,
    },
    /// Write random tensors of one kind as tensor files into `--out`.
    Gen {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Scaling of the spectral radius for `zTensor`.
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum EigenSign {
    Negative,
    Nonpositive,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_tensor(path: &Path) -> anyhow::Result<Tensor> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Serialize)]
struct SpectralReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<spectral::RadiusEnclosure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenpair: Option<Option<spectral::EigenPair>>,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    suites: Vec<verify::SuiteReport>,
}

/// Largest share of undecided instances a suite may have and still pass.
const MAX_INCONCLUSIVE_RATE: f64 = 0.05;

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Classify { file, classes, common } => {
            let cfg = common.config()?;
            let a = read_tensor(&file)?;
            let classes: Vec<Class> = if classes.is_empty() {
                Class::ALL.to_vec()
            } else {
                classes.iter().map(|c| c.parse()).collect::<Result<_, _>>()?
            };
            let report = classifiers::classify_only(&a, &cfg, &classes)?;
            emit(&report, common.out.as_deref())?;
            Ok(if report.any_inconclusive() { 2 } else { 0 })
        }
        Command::Spectral {
            file,
            radius,
            eigenpair,
            sign,
            tol,
            common,
        } => {
            let cfg = common.config()?;
            let a = read_tensor(&file)?;
            let (radius, eigenpair) = if radius || eigenpair { (radius, eigenpair) } else { (true, false) };
            let mut report = SpectralReport {
                radius: None,
                eigenpair: None,
            };
            if radius {
                report.radius = Some(spectral::spectral_radius_nonneg(&a, cfg.spectral_tol, cfg.spectral_max_iter)?);
            }
            if eigenpair {
                let sign = match sign {
                    EigenSign::Negative => Sign::Negative,
                    EigenSign::Nonpositive => Sign::NonPositive,
                };
                let pair = spectral::find_hpp_eigenpair(&a, tol, cfg.eigen_restarts, cfg.seed, sign, cfg.interior_margin)?;
                report.eigenpair = Some(pair);
            }
            let undecided = matches!(report.eigenpair, Some(None)) || report.radius.is_some_and(|r| !r.converged);
            emit(&report, common.out.as_deref())?;
            Ok(if undecided { 2 } else { 0 })
        }
        Command::Verify {
            suite,
            count,
            dump_dir,
            common,
        } => {
            let cfg = common.config()?;
            let suites = if suite == "all" {
                verify::run_all(common.seed, count, &cfg)?
            } else {
                let def = verify::suites::suite(&suite)?;
                vec![verify::run_suite(def.name, common.seed, count.unwrap_or(def.default_count), &cfg)?]
            };
            if let Some(dir) = &dump_dir {
                fs::create_dir_all(dir)?;
                for s in &suites {
                    for v in &s.violations {
                        if let Some(t) = &v.tensor {
                            let path = dir.join(format!("{}_{:04}.json", s.suite, v.index));
                            fs::write(&path, serde_json::to_string_pretty(t)? + "\n")?;
                        }
                    }
                }
            }
            let clean = suites.iter().all(|s| s.passed(MAX_INCONCLUSIVE_RATE));
            emit(&VerifyReport { seed: common.seed, suites }, common.out.as_deref())?;
            Ok(if clean { 0 } else { 2 })
        }
        Command::Fixtures { common } => {
            let cfg = common.config()?;
            let report = verify::run_fixtures(&cfg)?;
            emit(&report, common.out.as_deref())?;
            Ok(if report.failed == 0 { 0 } else { 2 })
        }
        Command::Gen {
            kind,
            order,
            dim,
            count,
            factor,
            common,
        } => {
            let cfg = common.config()?;
            let mut kind: GeneratorKind = kind.parse()?;
            if let GeneratorKind::ZTensor { factor: f } = &mut kind {
                *f = factor;
            }
            let Some(dir) = common.out.as_deref() else {
                bail!("gen needs --out DIR");
            };
            let spec = GeneratorSpec {
                kind,
                order,
                dim,
                seed: common.seed,
                count,
            };
            let tensors = verify::generate(&spec, &cfg)?;
            fs::create_dir_all(dir)?;
            for (i, t) in tensors.iter().enumerate() {
                let path = dir.join(format!("{}_{i:03}.json", kind.name()));
                fs::write(&path, io::to_json(t) + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("TENCLASS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
