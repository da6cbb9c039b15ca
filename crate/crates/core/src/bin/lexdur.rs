use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lexdur::config::RunConfig;
use lexdur::ml::ModelFamily;
use lexdur::pipeline::{self, ClassifyArgs, StageOutput};
use lexdur::synth::SynthParams;
use lexdur::{Error, Result};

/// Word-duration corpus analytics.
#[derive(Parser)]
#[command(name = "lexdur", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the seeded synthetic mini-corpus and a matching config.
    Synth {
        #[arg(long, default_value_t = 5000)]
        tokens: usize,
        #[arg(long, default_value_t = 8)]
        speakers: usize,
    },
    /// Parse the corpus into the canonical dataset and report coverage.
    Ingest,
    /// Derive the feature table and duration-class labels.
    Features,
    /// Score semantic relevance for every token.
    Annotate,
    /// Train and evaluate duration-class classifiers.
    Classify {
        /// `rf` or `svm`.
        #[arg(long)]
        model: Option<ModelFamily>,
        /// Also run the scaled, selected, oversampled and tuned pipeline.
        #[arg(long)]
        optimize: bool,
        /// Run the baseline only.
        #[arg(long, conflicts_with = "optimize")]
        no_optimize: bool,
    },
    /// Fit mixed and additive models and rank them by AIC.
    Regress {
        /// Replaces the configured formula list; repeatable.
        #[arg(long)]
        formula: Vec<String>,
    },
    /// Pearson correlation matrix and heatmap.
    Correlate,
    /// Partial-effect plots for every smooth term.
    PlotPartials {
        #[arg(long)]
        grid_size: Option<usize>,
    },
    /// Every stage in order.
    Run,
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = &g.out_dir {
        cfg.out_dir = std::env::current_dir()
            .map_err(|e| Error::Config(format!("current directory: {e}")))?
            .join(d);
    }
    Ok(cfg)
}

fn report(stage: &str, out: &StageOutput) {
    println!("{stage}: {} rows", out.rows);
    for a in &out.artifacts {
        println!("  {a}");
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    if let Command::Synth { tokens, speakers } = cli.command {
        let dir = cli.global.out_dir.clone().unwrap_or_else(|| PathBuf::from("synth"));
        let params = SynthParams {
            tokens,
            speakers,
            seed: cli.global.seed.unwrap_or(SynthParams::default().seed),
            ..SynthParams::default()
        };
        for a in pipeline::cmd_synth(&dir, &params)? {
            println!("{}", dir.join(a).display());
        }
        return Ok(());
    }
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Ingest => report("ingest", &pipeline::cmd_ingest(&cfg)?),
        Command::Features => report("features", &pipeline::cmd_features(&cfg)?),
        Command::Annotate => report("annotate", &pipeline::cmd_annotate(&cfg)?),
        Command::Classify {
            model,
            optimize,
            no_optimize,
        } => {
            let args = ClassifyArgs {
                family: model,
                optimize: if optimize {
                    Some(true)
                } else if no_optimize {
                    Some(false)
                } else {
                    None
                },
            };
            let out = pipeline::cmd_classify(&cfg, args)?;
            for a in out.artifacts.iter().filter(|a| a.ends_with(".txt")) {
                let path = cfg.out_dir().join(a);
                print!("{}", std::fs::read_to_string(&path).map_err(|e| Error::Config(e.to_string()))?);
                println!();
            }
            report("classify", &out);
        }
        Command::Regress { formula } => report("regress", &pipeline::cmd_regress(&cfg, &formula)?),
        Command::Correlate => report("correlate", &pipeline::cmd_correlate(&cfg)?),
        Command::PlotPartials { grid_size } => report("plot-partials", &pipeline::cmd_plot_partials(&cfg, grid_size)?),
        Command::Run => {
            let m = pipeline::run(&cfg)?;
            for (name, s) in &m.stages {
                println!("{name}: {} rows, {:.2}s, {} artifacts", s.rows, s.seconds, s.artifacts.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::FAILURE
        }
    }
}
