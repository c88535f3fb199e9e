//! Versioned JSON checkpoints for the evolution engine.
//!
//! A checkpoint stores configs, the master seed, the population, the history
//! and the archive champion. Everything else (fitted patches, the validation
//! batch, every random stream) is re-derived from the seed on load, so a
//! resumed run is bit-identical to an uninterrupted one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{CircuitGenome, VariationConfig};
use crate::image::{dataset_fingerprint, ImagePatch};
use crate::qsim::NoiseConfig;

use super::{EvolutionConfig, EvolutionState, EvolveSetup, FitnessConfig, History};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    setup: EvolveSetup,
    fitness: FitnessConfig,
    variation: VariationConfig,
    evolution: EvolutionConfig,
    noise: Option<NoiseConfig>,
    dataset_fingerprint: u64,
    population: Vec<CircuitGenome>,
    history: History,
    champion: Option<(CircuitGenome, f64)>,
}

pub fn save_checkpoint(state: &EvolutionState, path: impl AsRef<Path>) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        setup: state.setup.clone(),
        fitness: state.fitness.clone(),
        variation: state.variation.clone(),
        evolution: state.evo.clone(),
        noise: state.noise,
        dataset_fingerprint: state.dataset_fingerprint,
        population: state.population.clone(),
        history: state.history.clone(),
        champion: state.champion.clone(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
}

/// Load a checkpoint and rebind it to the dataset it was created from.
pub fn load_checkpoint(
    path: impl AsRef<Path>,
    dataset: &[ImagePatch],
) -> Result<EvolutionState> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("corrupt checkpoint: {e}")))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    if file.dataset_fingerprint != dataset_fingerprint(dataset) {
        return Err(Error::Checkpoint(
            "checkpoint was created from a different dataset".into(),
        ));
    }

    // Rebuild the derived state, then restore the evolved parts.
    let mut state = EvolutionState::new(
        dataset,
        file.setup,
        file.fitness,
        file.variation,
        file.evolution,
        file.noise,
    )?;
    if file.population.len() != state.evo.population {
        return Err(Error::Checkpoint(format!(
            "checkpoint population size {} does not match config {}",
            file.population.len(),
            state.evo.population
        )));
    }
    state.population = file.population;
    state.history = file.history;
    state.champion = file.champion;
    Ok(state)
}
