use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use salient_cli::run::PROVENANCE_FILE;
use salient_cli::{evaluate_predictions, make_fixtures, run_dataset, run_frame, Config, Dataset, RunOptions, DEFAULT_CONFIG};
use salient_core::{Variant, DEFAULT_THRESHOLDS};

#[derive(Parser)]
#[command(name = "salient", version, about = "RGB-D salient object detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on one frame or a whole dataset.
    Run(RunArgs),
    /// Score saved saliency maps against ground-truth masks.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLDS)]
        thresholds: usize,
    },
    /// Write the synthetic test dataset.
    MakeFixtures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the annotated default configuration.
    DefaultConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Guided-backprop gradients.
    Gbp,
    /// Class objectness scores.
    Do,
    /// Background (non-objectness) scores.
    Sno,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this frame (id, or position in id order).
    #[arg(long)]
    frame_id: Option<String>,
    /// Dataset root; overrides the config.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    with_space_saliency: bool,
    /// Output root; overrides the config. Defaults to `<dataset>/results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute frames whose outputs are up to date.
    #[arg(long)]
    force: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(v) = args.variant {
        cfg.variant = match v {
            VariantArg::Gbp => Variant::Gbp,
            VariantArg::Do => Variant::Objectness,
            VariantArg::Sno => Variant::NonObjectness,
        };
    }
    cfg.space_saliency |= args.with_space_saliency;
    let Some(root) = args.dataset.clone().or(cfg.dataset.clone()) else {
        bail!("no dataset: pass --dataset or set `dataset` in the config");
    };
    let out = args.out.clone().or(cfg.out.clone()).unwrap_or_else(|| root.join("results"));
    let ds = Dataset::open(&root)?;
    let opts = RunOptions {
        out,
        force: args.force,
        jobs: args.jobs,
    };
    match &args.frame_id {
        Some(key) => {
            let id = ds.resolve(key)?;
            let prior = if cfg.space_saliency { Some(ds.space_prior()?) } else { None };
            let r = run_frame(&cfg, &ds, &id, prior.as_ref(), &opts.out, opts.force)?;
            let state = if r.reused { "up to date" } else { "computed" };
            println!("{id}: {state}, {}", opts.out.join(&id).join(PROVENANCE_FILE).display());
        }
        None => {
            let r = run_dataset(&cfg, &ds, &opts)?;
            print!("{}", r.report.summary());
            println!("frames computed: {}, reused: {}", r.computed, r.reused);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Eval {
            pred,
            gt,
            report,
            thresholds,
        } => (|| {
            let r = evaluate_predictions(&pred, &gt, thresholds)?;
            let dir = report.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            r.write_csv(&report)?;
            print!("{}", r.summary());
            Ok(())
        })(),
        Command::MakeFixtures { out } => make_fixtures(&out).map(|ids| {
            println!("wrote {} frames to {}", ids.len(), out.display());
        }),
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
