use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critfuse::config::{load_file, snapshot};
use critfuse::runner::default_out;
use critfuse::{execute, execute_report, Kind, LabError, OUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "critfuse", version, about = "Critical-period experiments on multi-source fusion")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Run directory; defaults to `<root>/<kind>-<hash>` with the root taken
    /// from the environment.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Dotted-key override, e.g. `deficit.optim.learning_rate=0.1`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Replace a non-empty output directory.
    #[arg(long, global = true)]
    overwrite: bool,
    /// Default output root.
    #[arg(long, global = true, env = OUT_ROOT_ENV, default_value = "runs", hide_env_values = true)]
    out_root: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form linear-network dynamics with a source-drop counterfactual.
    Lindyn,
    /// Gradient descent on a deep linear chain.
    Gradsim,
    /// RSV of the synthetic model or of an activation dump.
    RsvSim,
    /// One two-pathway training run under a deficit.
    Deficit,
    /// Grid of deficit runs with matched controls.
    Sweep,
    /// Compare finished deficit and sweep runs.
    Report {
        #[arg(required = true, value_name = "RUN_DIR")]
        runs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> critfuse::Result<PathBuf> {
    let g = cli.global;
    let kind = match cli.command {
        Command::Lindyn => Kind::Lindyn,
        Command::Gradsim => Kind::Gradsim,
        Command::RsvSim => Kind::RsvSim,
        Command::Deficit => Kind::Deficit,
        Command::Sweep => Kind::Sweep,
        Command::Report { runs } => {
            let out = g.out.unwrap_or_else(|| {
                let listing: Vec<String> = runs.iter().map(|r| r.display().to_string()).collect();
                default_out(&g.out_root, "report", &listing.join("\n"))
            });
            execute_report(&runs, &out, g.overwrite)?;
            return Ok(out);
        }
    };
    let mut overrides = g.set.clone();
    if let Some(s) = g.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(j) = g.jobs {
        overrides.push(format!("jobs={j}"));
    }
    let mut config = load_file(g.config.as_deref(), &overrides)?;
    config.resolve_seeds();
    let base = g
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = match (g.out, &config.out) {
        (Some(o), _) => o,
        (None, Some(o)) => base.join(o),
        (None, None) => {
            // The hash ignores `jobs`, which never changes results.
            let mut c = config.clone();
            c.jobs = 1;
            default_out(&g.out_root, kind.name(), &snapshot(&c)?)
        }
    };
    execute(kind, &config, &base, &out, g.overwrite)?;
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("critfuse: {e}");
            let code = match &e {
                LabError::Config(_) => 2,
                _ => e.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
