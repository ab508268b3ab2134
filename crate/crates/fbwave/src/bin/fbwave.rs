//! Command-line front end: scenario-driven traveling-wave analysis.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fbwave::cli::{self, ReportFormat, ReproduceTag};

#[derive(Parser)]
#[command(name = "fbwave", version, about = "Wavefront analysis for sign-changing diffusivities")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the sign pattern of the diffusivity
    Signs(RunArgs),
    /// Check wavefront existence for the configured end states
    Existence(RunArgs),
    /// Sweep the admissible end-state family
    Endstates(RunArgs),
    /// Compute the wavefront profile
    Profile(RunArgs),
    /// Build the vanishing-viscosity family and its metrics
    Viscosity(RunArgs),
    /// Emit a bundled reference scenario (fig5, fig6 or fig7)
    Reproduce {
        /// fig5 | fig6 | fig7
        tag: ReproduceTag,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Console summary format
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("FBWAVE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn render(manifest: &cli::RunManifest, format: ReportFormat) {
    match format {
        ReportFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "command": manifest.command,
                    "summary": manifest.summary,
                    "outputs": manifest.outputs.iter().map(|o| &o.name).collect::<Vec<_>>(),
                }))
                .expect("manifest serializes")
            );
        }
        ReportFormat::Csv => {
            println!("key,value");
            if let Some(map) = manifest.summary.as_object() {
                for (k, v) in map {
                    println!("{k},{v}");
                }
            }
            for o in &manifest.outputs {
                println!("output,{}", o.name);
            }
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let args = Args::parse();
    let result = match &args.command {
        Command::Signs(a) => {
            cli::run_with_config("signs", &a.config, &a.out).map(|m| (m, a.format))
        }
        Command::Existence(a) => {
            cli::run_with_config("existence", &a.config, &a.out).map(|m| (m, a.format))
        }
        Command::Endstates(a) => {
            cli::run_with_config("endstates", &a.config, &a.out).map(|m| (m, a.format))
        }
        Command::Profile(a) => {
            cli::run_with_config("profile", &a.config, &a.out).map(|m| (m, a.format))
        }
        Command::Viscosity(a) => {
            cli::run_with_config("viscosity", &a.config, &a.out).map(|m| (m, a.format))
        }
        Command::Reproduce { tag, out, format } => {
            cli::cmd_reproduce(*tag, out).map(|m| (m, *format))
        }
    };
    match result {
        Ok((manifest, format)) => {
            render(&manifest, format);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
