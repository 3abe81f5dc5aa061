//! `pdswave`: mesh, assemble, run, spectrum, validate and report.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{AtStage, Dumps, Outcome, Stage};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "pdswave", version, about = "Scalar waves on the Poincaré dodecahedral space")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable), e.g. --set steps=5000.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory (default: $PDSWAVE_OUT, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Subdivision level of the face triangulation.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of radial layers.
    #[arg(long, global = true)]
    layers: Option<usize>,
    /// Time step, or `auto` for 0.95 of the stability bound.
    #[arg(long, global = true)]
    dt: Option<String>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Allow a time step above 0.95 of the stability bound.
    #[arg(long, global = true)]
    force: bool,
    /// Allow a recording window that starts before the wave has crossed the domain.
    #[arg(long, global = true)]
    force_window: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the 120 group elements to group.json.
    #[arg(long, global = true)]
    dump_group: bool,
    /// Write the 600 vertices of the 120-cell to cell.json.
    #[arg(long, global = true)]
    dump_cell: bool,
    /// Write the fundamental domain geometry to domain.json.
    #[arg(long, global = true)]
    dump_domain: bool,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or import a mesh and write .node/.ele/.vtk plus a validation report.
    Mesh {
        /// Import Tetgen .node and .ele files instead of generating.
        #[arg(long, num_args = 2, value_names = ["NODE", "ELE"])]
        import: Option<Vec<PathBuf>>,
    },
    /// Assemble the mass, stiffness and drift matrices and estimate the stability bound.
    Assemble,
    /// Leapfrog evolution: probe signals, energy series, snapshots and manifest.
    Run,
    /// Fourier analysis of probe signals and matching against the exact spectrum.
    Spectrum {
        /// Probe-signal CSV (default: probes.csv in the output directory).
        #[arg(long)]
        signals: Option<PathBuf>,
    },
    /// Check the group, the domain and the mesh.
    Validate {
        #[arg(long, num_args = 2, value_names = ["NODE", "ELE"])]
        import: Option<Vec<PathBuf>>,
    },
    /// Summarize the outputs found in the output directory.
    Report,
}

fn pairs(cli: &Cli) -> anyhow::Result<Vec<(String, String)>> {
    let g = &cli.global;
    let mut p = match &g.config {
        Some(path) => config::read_pairs(path)?,
        None => Vec::new(),
    };
    let mut push = |k: &str, v: String| p.push((k.to_string(), v));
    if let Some(v) = &g.out {
        push("out", v.display().to_string());
    }
    if let Some(v) = g.n {
        push("n", v.to_string());
    }
    if let Some(v) = g.layers {
        push("layers", v.to_string());
    }
    if let Some(v) = &g.dt {
        push("dt", v.clone());
    }
    if let Some(v) = g.steps {
        push("steps", v.to_string());
    }
    if g.force {
        push("force", "true".into());
    }
    if g.force_window {
        push("force_window", "true".into());
    }
    if let Some(v) = g.threads {
        push("threads", v.to_string());
    }
    match &cli.command {
        Command::Mesh { import: Some(f) } | Command::Validate { import: Some(f) } => {
            push("import", format!("{},{}", f[0].display(), f[1].display()))
        }
        Command::Spectrum { signals: Some(s) } => push("signals", s.display().to_string()),
        _ => {}
    }
    for s in &g.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got {s:?}"))?;
        p.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(p)
}

fn execute(cli: &Cli) -> Outcome<()> {
    let cfg = pairs(cli).and_then(|p| RunConfig::from_pairs(&p)).at(Stage::Usage)?;
    if cfg.threads > 1 {
        log::info!("threads = {}: all kernels run sequentially, results are identical", cfg.threads);
    }
    std::fs::create_dir_all(&cfg.out).at(Stage::Usage)?;
    commands::write_dumps(
        &cfg,
        Dumps {
            group: cli.global.dump_group,
            cell: cli.global.dump_cell,
            domain: cli.global.dump_domain,
        },
    )?;
    match &cli.command {
        Command::Mesh { .. } => commands::cmd_mesh(&cfg),
        Command::Assemble => commands::cmd_assemble(&cfg),
        Command::Run => commands::cmd_run(&cfg),
        Command::Spectrum { .. } => commands::cmd_spectrum(&cfg),
        Command::Validate { .. } => commands::cmd_validate(&cfg),
        Command::Report => commands::cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Stage::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.stage as u8)
        }
    }
}
