//! Subcommand implementations. Exit-code policy: bad inputs or configuration
//! exit 2, runtime failures exit 3.

use std::fs;
use std::path::{Path, PathBuf};

use qusl_core::eval::{baseline_template, evaluate_model};
use qusl_core::evolution::{
    load_checkpoint, save_checkpoint, EvolutionState, EvolveSetup,
};
use qusl_core::genome::{cnot_count, depth, CircuitGenome};
use qusl_core::image::{
    load_cifar_binary, load_ppm_dir, read_dataset_cache, resize, write_dataset_cache, ImagePatch,
};
use qusl_core::qsim::qasm::export_qasm;
use qusl_core::rng::derive;
use qusl_core::triplet::fit_to_qubit_budget;

use crate::config::RunConfig;

pub enum CliError {
    /// Bad arguments, unreadable inputs, invalid configuration.
    Usage(String),
    /// The pipeline itself failed.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

type CmdResult = Result<(), CliError>;

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum IngestFormat {
    Cifar10,
    Ppm,
}

pub fn cmd_ingest(
    format: IngestFormat,
    input: &Path,
    patch_size: (usize, usize),
    out: &Path,
) -> CmdResult {
    let (width, height) = patch_size;
    let patches: Vec<ImagePatch> = match format {
        IngestFormat::Cifar10 => {
            let raw = load_cifar_binary(input).map_err(usage)?;
            raw.iter()
                .map(|p| {
                    if p.width() == width && p.height() == height {
                        Ok(p.clone())
                    } else {
                        resize(p, width, height)
                    }
                })
                .collect::<qusl_core::Result<_>>()
                .map_err(usage)?
        }
        IngestFormat::Ppm => load_ppm_dir(input, width, height).map_err(usage)?,
    };
    if patches.is_empty() {
        return Err(usage("no input images"));
    }
    write_dataset_cache(out, &patches).map_err(runtime)?;
    println!(
        "ingested {} patches at {}x{} -> {}",
        patches.len(),
        width,
        height,
        out.display()
    );
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(usage)
        }
    }
}

fn checkpoint_path(run_dir: &Path) -> PathBuf {
    run_dir.join("checkpoints").join("checkpoint.json")
}

pub fn cmd_evolve(
    data: &Path,
    config_path: Option<&Path>,
    seed_override: Option<u64>,
    out: &Path,
    resume: bool,
    force: bool,
) -> CmdResult {
    let dataset = read_dataset_cache(data).map_err(usage)?;

    let mut state: EvolutionState = if resume {
        load_checkpoint(checkpoint_path(out), &dataset).map_err(usage)?
    } else {
        let mut cfg = load_config(config_path)?;
        if let Some(seed) = seed_override {
            cfg.evolution.seed = seed;
        }
        if out.exists() && out.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) && !force
        {
            return Err(usage(format!(
                "run directory {} already exists (use --force to overwrite)",
                out.display()
            )));
        }
        fs::create_dir_all(out.join("checkpoints"))
            .map_err(|e| runtime(format!("cannot create run directory: {e}")))?;
        fs::write(out.join("config.snapshot.cfg"), cfg.render())
            .map_err(|e| runtime(format!("cannot write config snapshot: {e}")))?;

        let setup = EvolveSetup {
            qubits: cfg.qubits,
            perturbation: cfg.perturbation(),
            pair_orientation: cfg.pair_orientation,
            validation_batch: cfg.validation_batch,
        };
        EvolutionState::new(
            &dataset,
            setup,
            cfg.fitness.clone(),
            cfg.variation.clone(),
            cfg.evolution.clone(),
            cfg.noise_option(),
        )
        .map_err(usage)?
    };

    while !state.is_done() {
        state.step().map_err(runtime)?;
        save_checkpoint(&state, checkpoint_path(out)).map_err(runtime)?;
    }

    let outcome = state.outcome().map_err(runtime)?;
    fs::write(out.join("history.csv"), outcome.history.to_csv())
        .map_err(|e| runtime(format!("cannot write history: {e}")))?;
    fs::write(out.join("best.genome.json"), outcome.champion.to_json())
        .map_err(|e| runtime(format!("cannot write champion genome: {e}")))?;
    fs::write(out.join("best.qasm"), export_qasm(&outcome.champion))
        .map_err(|e| runtime(format!("cannot write champion qasm: {e}")))?;

    println!(
        "evolution finished: validation loss = {}, depth = {}, cnot = {}",
        outcome.champion_val_loss,
        depth(&outcome.champion),
        cnot_count(&outcome.champion)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    genome_path: &Path,
    data: &Path,
    pairs_override: Option<usize>,
    config_path: Option<&Path>,
    seed: u64,
    report_path: &Path,
    scatter_path: &Path,
) -> CmdResult {
    let cfg = load_config(config_path)?;
    let n_pairs = pairs_override.unwrap_or(cfg.n_pairs);

    let genome_text = fs::read_to_string(genome_path)
        .map_err(|e| usage(format!("cannot read genome {}: {e}", genome_path.display())))?;
    let genome = CircuitGenome::from_json(&genome_text).map_err(usage)?;
    let dataset = read_dataset_cache(data).map_err(usage)?;
    let fitted: Vec<ImagePatch> = dataset
        .iter()
        .map(|p| fit_to_qubit_budget(p, genome.qubits()))
        .collect::<qusl_core::Result<_>>()
        .map_err(usage)?;

    let mut rng = derive(seed, &[]);
    let report = evaluate_model(
        &genome,
        &fitted,
        n_pairs,
        cfg.distance_mode(),
        cfg.ssim_matching,
        cfg.noise_option().as_ref(),
        &mut rng,
    )
    .map_err(runtime)?;

    let mut json = serde_json::to_value(&report).map_err(|e| runtime(e.to_string()))?;
    json["genome_file"] = serde_json::Value::String(genome_path.display().to_string());
    let text = serde_json::to_string_pretty(&json).map_err(|e| runtime(e.to_string()))?;
    fs::write(report_path, text).map_err(|e| runtime(format!("cannot write report: {e}")))?;
    fs::write(scatter_path, report.to_scatter_csv())
        .map_err(|e| runtime(format!("cannot write scatter: {e}")))?;

    match report.rho {
        Some(rho) => println!("rho = {rho}"),
        None => println!("rho = undefined (constant series)"),
    }
    Ok(())
}

pub fn cmd_export_qasm(genome_path: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(genome_path)
        .map_err(|e| usage(format!("cannot read genome {}: {e}", genome_path.display())))?;
    let genome = CircuitGenome::from_json(&text).map_err(usage)?;
    fs::write(out, export_qasm(&genome)).map_err(|e| runtime(format!("cannot write qasm: {e}")))?;
    println!("exported {} gates -> {}", genome.gate_count(), out.display());
    Ok(())
}

pub fn cmd_baseline(
    qubits: usize,
    layers: usize,
    seed: u64,
    out: &Path,
    qasm_out: Option<&Path>,
) -> CmdResult {
    let mut rng = derive(seed, &[]);
    let genome = baseline_template(qubits, layers, &mut rng).map_err(usage)?;
    fs::write(out, genome.to_json()).map_err(|e| runtime(format!("cannot write genome: {e}")))?;
    if let Some(path) = qasm_out {
        fs::write(path, export_qasm(&genome))
            .map_err(|e| runtime(format!("cannot write qasm: {e}")))?;
    }
    println!(
        "baseline template: qubits = {qubits}, layers = {layers}, cnot = {}, depth = {}",
        cnot_count(&genome),
        depth(&genome)
    );
    Ok(())
}
