use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use hoverlink_cli::commands::{self, read_source, Output};
use hoverlink_cli::server::{self, AppState, ServerConfig};
use hoverlink_core::{Axis, SimParams};

#[derive(Parser)]
#[command(name = "hoverlink", version, about = "Quadcopter mission programs with live source tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and evaluate a program, listing its waypoints.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Show which literals produce a waypoint.
    Highlight {
        file: PathBuf,
        #[arg(long, short)]
        waypoint: usize,
        /// Axes to include (x, y, z, yaw); all when omitted.
        #[arg(long = "axis", value_delimiter = ',')]
        axes: Vec<Axis>,
        #[arg(long)]
        json: bool,
    },
    /// Move a waypoint and rewrite the literals that place it.
    Edit {
        file: PathBuf,
        #[arg(long, short)]
        waypoint: usize,
        /// Target as axis=value, e.g. `--set y=3.5`. Repeatable.
        #[arg(long = "set", required = true)]
        targets: Vec<String>,
        /// Overwrite the file instead of printing the edited program.
        #[arg(long)]
        write: bool,
        #[arg(long)]
        json: bool,
    },
    /// Score a program against a mission rubric.
    Grade {
        file: PathBuf,
        #[arg(long, default_value = "mission1")]
        task: String,
        #[arg(long)]
        rubrics: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Fly the mission in the simulator and report arrival times.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = hoverlink_core::sim::DEFAULT_SPEED)]
        speed: f64,
        #[arg(long, default_value_t = hoverlink_core::sim::DEFAULT_YAW_RATE)]
        yaw_rate: f64,
        #[arg(long)]
        json: bool,
    },
    /// Compute learning-strategy indicators from a session log.
    Traces { log: PathBuf },
    /// Run the session server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long)]
        rubrics: Option<PathBuf>,
        /// Makes condition assignment reproducible.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "sessions")]
        log_dir: PathBuf,
        /// Milliseconds between pushed simulation frames.
        #[arg(long, default_value_t = 50)]
        frame_ms: u64,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
}

fn emit(out: Output) -> ExitCode {
    print!("{}", out.text);
    if out.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    Ok(match cli.command {
        Command::Check { file, json } => emit(commands::check(&read_source(&file)?, json)?),
        Command::Highlight { file, waypoint, axes, json } => {
            emit(commands::highlight_cmd(&read_source(&file)?, waypoint, &axes, json)?)
        }
        Command::Edit { file, waypoint, targets, write, json } => {
            let src = read_source(&file)?;
            let (out, edited) = commands::edit(&src, waypoint, commands::parse_targets(&targets)?, json)?;
            let ok = out.ok;
            print!("{}", out.text);
            if let Some(text) = edited {
                if write {
                    std::fs::write(&file, text).with_context(|| format!("cannot write {}", file.display()))?;
                } else if !json {
                    println!("---\n{text}");
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Grade { file, task, rubrics, json } => {
            let rubrics = commands::load_rubrics(rubrics.as_deref())?;
            emit(commands::grade_cmd(&read_source(&file)?, &task, &rubrics, json)?)
        }
        Command::Simulate { file, dt, speed, yaw_rate, json } => {
            let params = SimParams { speed, yaw_rate, ..Default::default() };
            emit(commands::simulate(&read_source(&file)?, params, dt, json)?)
        }
        Command::Traces { log } => emit(commands::traces(&log)?),
        Command::Serve { listen, rubrics, seed, log_dir, frame_ms, time_scale } => {
            let mut config = ServerConfig::new(commands::load_rubrics(rubrics.as_deref())?, log_dir);
            config.seed = seed;
            config.frame_interval = Duration::from_millis(frame_ms.max(1));
            config.time_scale = time_scale;
            let app = AppState::new(config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&listen)
                    .await
                    .with_context(|| format!("cannot listen on {listen}"))?;
                tracing::info!("listening on {}", listener.local_addr()?);
                server::serve(listener, app).await
            })?;
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
