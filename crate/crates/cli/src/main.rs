use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use tippinglab_cli::config::{Analysis, NumericSettings, Transform};
use tippinglab_cli::{bundled, error_code, run, RunOptions, ScenarioConfig, SCENARIOS};

#[derive(Parser)]
#[command(
    name = "tippinglab",
    version,
    about = "Tracking and tipping analysis of scalar transition equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalFlags,
}

#[derive(Args)]
struct GlobalFlags {
    /// Half-length T of the classification span [-T, T].
    #[arg(long, global = true, env = "TIPPINGLAB_SPAN")]
    span: Option<f64>,
    #[arg(long, global = true, env = "TIPPINGLAB_RTOL")]
    rtol: Option<f64>,
    #[arg(long, global = true, env = "TIPPINGLAB_ATOL")]
    atol: Option<f64>,
    /// Time horizon of Allee and collapse analyses.
    #[arg(long, global = true, env = "TIPPINGLAB_HORIZON")]
    horizon: Option<f64>,
    #[arg(long, global = true, env = "TIPPINGLAB_TOL_BISECT")]
    tol_bisect: Option<f64>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, env = "TIPPINGLAB_WORKERS")]
    workers: Option<usize>,
    /// Root directory of the run directories.
    #[arg(long, global = true, env = "TIPPINGLAB_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing hypotheses on grids.
    Audit { config: PathBuf },
    /// Classify one transition (case label and solution CSV).
    Classify { config: PathBuf },
    /// Gap and case over a parameter grid.
    Sweep { config: PathBuf },
    /// Locate critical parameter values.
    Tipping { config: PathBuf },
    /// Allee type of the frozen model.
    Allee {
        config: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Run whatever analysis the config requests.
    Run { config: PathBuf },
    /// Run a bundled scenario.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
        name: String,
        /// Classify the rate-c transition instead of scanning rates.
        #[arg(long)]
        rate: Option<f64>,
        /// Upper solution for a single predation scale d.
        #[arg(long)]
        d: Option<f64>,
        /// Print the scenario's config and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))
}

fn expect_command(cfg: &ScenarioConfig, wanted: &str) -> anyhow::Result<()> {
    if cfg.analysis.command() != wanted {
        bail!(
            "config requests `{}`; `{wanted}` needs an [analysis] table with command = \"{wanted}\"",
            cfg.analysis.command()
        );
    }
    Ok(())
}

fn build(command: Command) -> anyhow::Result<Option<ScenarioConfig>> {
    let cfg = match command {
        Command::Audit { config } => {
            let mut cfg = load(&config)?;
            if !matches!(cfg.analysis, Analysis::Audit { .. }) {
                cfg.analysis = Analysis::Audit { gamma_range: None };
            }
            cfg
        }
        Command::Classify { config } => {
            let mut cfg = load(&config)?;
            if !matches!(cfg.analysis, Analysis::Classify { .. }) {
                cfg.analysis = Analysis::Classify { probes: Vec::new() };
            }
            cfg
        }
        Command::Sweep { config } => {
            let cfg = load(&config)?;
            expect_command(&cfg, "sweep")?;
            cfg
        }
        Command::Tipping { config } => {
            let cfg = load(&config)?;
            expect_command(&cfg, "tipping")?;
            cfg
        }
        Command::Allee { config, gamma } => {
            let mut cfg = load(&config)?;
            let current = match cfg.analysis {
                Analysis::Allee { gamma } => gamma,
                _ => 0.0,
            };
            cfg.analysis = Analysis::Allee {
                gamma: gamma.unwrap_or(current),
            };
            cfg
        }
        Command::Run { config } => load(&config)?,
        Command::Scenario {
            name,
            rate,
            d,
            print_config,
        } => {
            let text = bundled(&name).expect("validated by clap");
            if print_config {
                print!("{text}");
                return Ok(None);
            }
            let mut cfg = ScenarioConfig::parse(text)?;
            if let Some(c) = rate {
                if !matches!(
                    cfg.analysis,
                    Analysis::Tipping { .. } | Analysis::Sweep { .. }
                ) {
                    bail!("--rate applies to the rate scenarios (invasion, extinction)");
                }
                cfg.transforms.push(Transform::Rate { c });
                cfg.analysis = Analysis::Classify { probes: Vec::new() };
            }
            if let Some(d) = d {
                if !matches!(cfg.analysis, Analysis::Collapse { .. }) {
                    bail!("--d applies to the collapse scenarios (holling3-strong, holling3-weak)");
                }
                cfg.analysis = Analysis::Collapse {
                    d: vec![d],
                    bisect: false,
                };
            }
            cfg
        }
    };
    Ok(Some(cfg))
}

fn main() {
    let cli = Cli::parse();
    let g = cli.global;
    let opts = RunOptions {
        out: g.out,
        settings: NumericSettings {
            rtol: g.rtol,
            atol: g.atol,
            span: g.span,
            horizon: g.horizon,
            tol_bisect: g.tol_bisect,
            workers: g.workers,
            ..Default::default()
        },
    };
    let result = build(cli.command).and_then(|cfg| match cfg {
        Some(cfg) => run(&cfg, &opts).map(Some),
        None => Ok(None),
    });
    match result {
        Ok(Some(outcome)) => {
            println!("{}", outcome.summary);
            println!("artifacts: {}", outcome.dir.display());
            std::process::exit(outcome.code);
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(error_code(&e));
        }
    }
}
