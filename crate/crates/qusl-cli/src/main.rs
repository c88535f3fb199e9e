mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    cmd_baseline, cmd_evaluate, cmd_evolve, cmd_export_qasm, cmd_ingest, IngestFormat,
};

/// Evolve and evaluate quantum circuits for unsupervised image similarity.
#[derive(Parser)]
#[command(name = "qusl", version)]
struct Cli {
    /// Worker threads for parallel evaluation (results do not depend on this).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an image dataset into the binary patch cache.
    Ingest {
        /// Input layout: cifar10 (binary batches) or ppm (directory of P6 files).
        #[arg(long, value_enum)]
        format: IngestFormat,
        /// Batch file (cifar10) or directory (ppm).
        #[arg(long)]
        input: PathBuf,
        /// Target patch size, either `N` or `WxH`.
        #[arg(long, value_parser = parse_patch_size)]
        patch_size: (usize, usize),
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the evolutionary search and write a run directory.
    Evolve {
        /// Dataset cache produced by `ingest`.
        #[arg(long)]
        data: PathBuf,
        /// Run configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory to create.
        #[arg(long)]
        out: PathBuf,
        /// Continue from the checkpoint inside the run directory.
        #[arg(long, conflicts_with_all = ["config", "seed"])]
        resume: bool,
        /// Allow writing into an existing non-empty run directory.
        #[arg(long)]
        force: bool,
    },
    /// Score random image pairs with a genome and correlate against the
    /// classical distance.
    Evaluate {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Number of random pairs (overrides the config value).
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
        #[arg(long, default_value = "scatter.csv")]
        scatter: PathBuf,
    },
    /// Write a genome as OpenQASM 2.0.
    ExportQasm {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the ladder-template baseline circuit.
    Baseline {
        #[arg(long, default_value_t = 14)]
        qubits: usize,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also export the template as OpenQASM.
        #[arg(long)]
        qasm: Option<PathBuf>,
    },
}

fn parse_patch_size(value: &str) -> Result<(usize, usize), String> {
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("invalid patch dimension {s:?}"))
    };
    match value.split_once('x') {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => {
            let side = parse(value)?;
            Ok((side, side))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot configure worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::Ingest {
            format,
            input,
            patch_size,
            out,
        } => cmd_ingest(*format, input, *patch_size, out),
        Command::Evolve {
            data,
            config,
            seed,
            out,
            resume,
            force,
        } => cmd_evolve(data, config.as_deref(), *seed, out, *resume, *force),
        Command::Evaluate {
            genome,
            data,
            pairs,
            config,
            seed,
            report,
            scatter,
        } => cmd_evaluate(genome, data, *pairs, config.as_deref(), *seed, report, scatter),
        Command::ExportQasm { genome, out } => cmd_export_qasm(genome, out),
        Command::Baseline {
            qubits,
            layers,
            seed,
            out,
            qasm,
        } => cmd_baseline(*qubits, *layers, *seed, out, qasm.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
