//! Projection-consistency fitness and the evolutionary loop: tournament
//! selection with a structural-redundancy guard, non-dominated sorting over
//! (loss, depth, CNOT count), elitist survivors and deterministic resumable
//! execution.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint};

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{
    cnot_count, crossover, depth, mutate, random_genome, structural_distance, CircuitGenome,
    VariationConfig,
};
use crate::image::ImagePatch;
use crate::qsim::{run_circuit, NoiseConfig, ProjectionPoint};
use crate::rng::{derive, stage};
use crate::triplet::{
    build_triplet, embed, fit_to_qubit_budget, interweave, PerturbationConfig, Triplet,
};

/// Which image of the (anchor, negative) pair sits on the even interleave
/// positions of the second circuit run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairOrientation {
    /// Second run embeds interweave(negative, anchor); the negative is read
    /// from qubits (0,1) and the anchor from qubits (2,3).
    #[default]
    NegativeAnchor,
    /// Second run embeds interweave(anchor, negative).
    AnchorNegative,
}

/// Harmonic weights and batch settings for the fitness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitnessConfig {
    pub alpha: f64,
    pub beta: f64,
    pub batch_size: usize,
    /// |loss| below this makes the reciprocal objective saturate at f_cap.
    pub epsilon_guard: f64,
    pub f_cap: f64,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            batch_size: 16,
            epsilon_guard: 1e-6,
            f_cap: 1e6,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon_guard", self.epsilon_guard),
            ("f_cap", self.f_cap),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fitness of one individual on one triplet batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    /// Batch mean of the triplet-distance discrepancy.
    pub l_qm: f64,
    /// Batch mean of the anchor projection-consistency term.
    pub delta: f64,
    /// alpha * l_qm + beta * delta, batch mean. Selection minimizes this.
    pub loss: f64,
    /// Guarded reciprocal of the loss, reported for fitness-trajectory plots.
    pub f_obj: f64,
    pub depth: usize,
    pub cnot: usize,
    /// Pareto front index; assigned by non-dominated sorting.
    pub front: Option<usize>,
    /// Crowding distance within the front; boundary individuals get infinity.
    #[serde(with = "crowding_codec")]
    pub crowding: Option<f64>,
}

/// JSON has no Infinity; boundary sentinels cross checkpoint files as f64::MAX.
mod crowding_codec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|c| if c.is_infinite() { f64::MAX } else { c })
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?
            .map(|c| if c == f64::MAX { f64::INFINITY } else { c }))
    }
}

/// Population-level settings of the evolutionary loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Structural distance below which tournament entrants count as redundant.
    pub redundancy_threshold: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 20,
            tournament_size: 3,
            redundancy_threshold: 0.15,
            elitism: 2,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidArgument("population must be >= 2".into()));
        }
        if self.tournament_size < 2 || self.tournament_size > self.population {
            return Err(Error::InvalidArgument(format!(
                "tournament_size must lie in [2, population], got {}",
                self.tournament_size
            )));
        }
        if !(0.0..=1.0).contains(&self.redundancy_threshold) {
            return Err(Error::InvalidArgument(
                "redundancy_threshold must lie in [0, 1]".into(),
            ));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidArgument(
                "elitism must be smaller than the population".into(),
            ));
        }
        Ok(())
    }
}

/// The four projection points of one triplet evaluation: anchor and positive
/// from the first run, negative and anchor from the second.
#[derive(Debug, Clone, Copy)]
pub struct TripletProjections {
    pub anchor_pos: ProjectionPoint,
    pub positive: ProjectionPoint,
    pub negative: ProjectionPoint,
    pub anchor_neg: ProjectionPoint,
}

/// Run the circuit on both embeddings of a triplet and read the projections.
pub fn pair_projections(
    genome: &CircuitGenome,
    triplet: &Triplet,
    orientation: PairOrientation,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Result<TripletProjections> {
    if genome.qubits() < 4 {
        return Err(Error::Capacity {
            needed: 4,
            available: genome.qubits(),
        });
    }

    let run1 = interweave(&triplet.anchor, &triplet.positive)?;
    let state1 = run_circuit(genome, &embed(&run1, genome.qubits())?, noise, rng)?;
    let (anchor_pos, positive) = state1.projection_points()?;

    let (negative, anchor_neg) = match orientation {
        PairOrientation::NegativeAnchor => {
            let run2 = interweave(&triplet.negative, &triplet.anchor)?;
            let state2 = run_circuit(genome, &embed(&run2, genome.qubits())?, noise, rng)?;
            state2.projection_points()?
        }
        PairOrientation::AnchorNegative => {
            let run2 = interweave(&triplet.anchor, &triplet.negative)?;
            let state2 = run_circuit(genome, &embed(&run2, genome.qubits())?, noise, rng)?;
            let (anchor_neg, negative) = state2.projection_points()?;
            (negative, anchor_neg)
        }
    };

    Ok(TripletProjections {
        anchor_pos,
        positive,
        negative,
        anchor_neg,
    })
}

/// The projected triplet discrepancy l_QM and the anchor-consistency term.
pub fn triplet_loss(points: &TripletProjections) -> (f64, f64) {
    let l_qm = ((points.anchor_pos.x - points.positive.x).abs()
        + (points.anchor_pos.y - points.positive.y).abs())
        - ((points.negative.x - points.anchor_neg.x).abs()
            + (points.negative.y - points.anchor_neg.y).abs());
    let delta = (points.anchor_pos.x - points.anchor_neg.x).abs()
        + (points.anchor_pos.y - points.anchor_neg.y).abs();
    (l_qm, delta)
}

/// Evaluate one genome on a batch of triplets; front/crowding stay unset.
pub fn batch_fitness(
    genome: &CircuitGenome,
    batch: &[Triplet],
    cfg: &FitnessConfig,
    orientation: PairOrientation,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Result<FitnessRecord> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument(
            "fitness batch must not be empty".into(),
        ));
    }
    let mut sum_l = 0.0;
    let mut sum_d = 0.0;
    for triplet in batch {
        let points = pair_projections(genome, triplet, orientation, noise, rng)?;
        let (l_qm, delta) = triplet_loss(&points);
        sum_l += l_qm;
        sum_d += delta;
    }
    let n = batch.len() as f64;
    let l_qm = sum_l / n;
    let delta = sum_d / n;
    let loss = cfg.alpha * l_qm + cfg.beta * delta;
    let f_obj = if loss.abs() >= cfg.epsilon_guard {
        1.0 / loss
    } else if loss < 0.0 {
        -cfg.f_cap
    } else {
        cfg.f_cap
    };
    Ok(FitnessRecord {
        l_qm,
        delta,
        loss,
        f_obj,
        depth: depth(genome),
        cnot: cnot_count(genome),
        front: None,
        crowding: None,
    })
}

fn dominates(a: &FitnessRecord, b: &FitnessRecord) -> bool {
    let le = a.loss <= b.loss && a.depth <= b.depth && a.cnot <= b.cnot;
    let lt = a.loss < b.loss || a.depth < b.depth || a.cnot < b.cnot;
    le && lt
}

/// Assign Pareto fronts and crowding distances over the minimized objectives
/// (loss, depth, CNOT count).
pub fn non_dominated_sort(records: &mut [FitnessRecord]) {
    let n = records.len();
    if n == 0 {
        return;
    }

    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominators = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&records[i], &records[j]) {
                dominated[i].push(j);
                dominators[j] += 1;
            }
        }
    }

    let mut current: Vec<usize> = (0..n).filter(|&i| dominators[i] == 0).collect();
    let mut front = 0usize;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            records[i].front = Some(front);
            for &j in &dominated[i] {
                dominators[j] -= 1;
                if dominators[j] == 0 {
                    next.push(j);
                }
            }
        }
        assign_crowding(records, &current);
        current = next;
        front += 1;
    }
}

fn assign_crowding(records: &mut [FitnessRecord], front: &[usize]) {
    for &i in front {
        records[i].crowding = Some(0.0);
    }
    let objectives: [fn(&FitnessRecord) -> f64; 3] = [
        |r| r.loss,
        |r| r.depth as f64,
        |r| r.cnot as f64,
    ];
    for objective in objectives {
        let mut order: Vec<usize> = front.to_vec();
        order.sort_by(|&a, &b| objective(&records[a]).total_cmp(&objective(&records[b])));
        let lo = objective(&records[order[0]]);
        let hi = objective(&records[*order.last().unwrap()]);
        records[order[0]].crowding = Some(f64::INFINITY);
        records[*order.last().unwrap()].crowding = Some(f64::INFINITY);
        if hi > lo {
            for w in 1..order.len().saturating_sub(1) {
                let gap = (objective(&records[order[w + 1]]) - objective(&records[order[w - 1]]))
                    / (hi - lo);
                if let Some(c) = records[order[w]].crowding.as_mut() {
                    if c.is_finite() {
                        *c += gap;
                    }
                }
            }
        }
    }
}

/// Selection preference: lower front, then higher crowding, then lower loss,
/// then the stable population index.
fn selection_order(a: &FitnessRecord, ia: usize, b: &FitnessRecord, ib: usize) -> Ordering {
    let fa = a.front.unwrap_or(usize::MAX);
    let fb = b.front.unwrap_or(usize::MAX);
    fa.cmp(&fb)
        .then_with(|| {
            let ca = a.crowding.unwrap_or(f64::NEG_INFINITY);
            let cb = b.crowding.unwrap_or(f64::NEG_INFINITY);
            cb.total_cmp(&ca)
        })
        .then_with(|| a.loss.total_cmp(&b.loss))
        .then_with(|| ia.cmp(&ib))
}

/// Tournament selection with the redundancy guard: among the sampled
/// entrants, any structurally near-duplicate pair loses its worse member
/// before the winner is picked.
pub fn tournament_select(
    population: &[CircuitGenome],
    records: &[FitnessRecord],
    cfg: &EvolutionConfig,
    rng: &mut impl Rng,
) -> Result<usize> {
    if population.is_empty() || population.len() != records.len() {
        return Err(Error::InvalidArgument(
            "population and records must be non-empty and aligned".into(),
        ));
    }
    let k = cfg.tournament_size.min(population.len());
    let entries: Vec<usize> = rand::seq::index::sample(rng, population.len(), k).into_vec();

    let mut eliminated = vec![false; entries.len()];
    if cfg.redundancy_threshold > 0.0 {
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                let d = structural_distance(&population[entries[i]], &population[entries[j]])?;
                if d < cfg.redundancy_threshold {
                    let order = selection_order(
                        &records[entries[i]],
                        entries[i],
                        &records[entries[j]],
                        entries[j],
                    );
                    if order == Ordering::Greater {
                        eliminated[i] = true;
                    } else {
                        eliminated[j] = true;
                    }
                }
            }
        }
    }

    let winner = entries
        .iter()
        .enumerate()
        .filter(|(slot, _)| !eliminated[*slot])
        .map(|(_, &idx)| idx)
        .min_by(|&a, &b| selection_order(&records[a], a, &records[b], b))
        .expect("the best entrant is never eliminated");
    Ok(winner)
}

/// Run-level settings not owned by any single config struct.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveSetup {
    pub qubits: usize,
    pub perturbation: PerturbationConfig,
    pub pair_orientation: PairOrientation,
    /// Size of the fixed held-out triplet batch defining the champion.
    pub validation_batch: usize,
}

impl Default for EvolveSetup {
    fn default() -> Self {
        Self {
            qubits: 14,
            perturbation: PerturbationConfig::default(),
            pair_orientation: PairOrientation::default(),
            validation_batch: 32,
        }
    }
}

impl EvolveSetup {
    pub fn validate(&self) -> Result<()> {
        if self.qubits < 4 {
            return Err(Error::InvalidArgument(
                "need at least 4 qubits for projection readout".into(),
            ));
        }
        if self.validation_batch == 0 {
            return Err(Error::InvalidArgument(
                "validation_batch must be >= 1".into(),
            ));
        }
        self.perturbation.validate()
    }
}

/// All fitness records of one generation plus the archive loss after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub records: Vec<FitnessRecord>,
    /// Validation loss of the archive champion after this generation.
    pub champion_val_loss: f64,
}

/// Per-generation fitness history of a whole run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub generations: Vec<GenerationRecord>,
}

impl History {
    /// Render the run history as CSV, one row per (generation, individual).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "generation,individual,loss,f_obj,l_qm_mean,delta_mean,depth,cnot,front,crowding\n",
        );
        for gen in &self.generations {
            for (idx, r) in gen.records.iter().enumerate() {
                let front = r
                    .front
                    .map(|f| f.to_string())
                    .unwrap_or_else(|| "unset".into());
                let crowding = r
                    .crowding
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "unset".into());
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    gen.generation,
                    idx,
                    r.loss,
                    r.f_obj,
                    r.l_qm,
                    r.delta,
                    r.depth,
                    r.cnot,
                    front,
                    crowding
                ));
            }
        }
        out
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub champion: CircuitGenome,
    pub champion_val_loss: f64,
    pub history: History,
}

/// Resumable evolution engine. All randomness is derived from
/// (seed, stage, generation, index), so any interleaving of `step` calls,
/// thread schedules, and checkpoint round-trips reproduces the same run.
pub struct EvolutionState {
    pub(crate) setup: EvolveSetup,
    pub(crate) fitness: FitnessConfig,
    pub(crate) variation: VariationConfig,
    pub(crate) evo: EvolutionConfig,
    pub(crate) noise: Option<NoiseConfig>,
    pub(crate) dataset_fingerprint: u64,
    pub(crate) fitted: Vec<ImagePatch>,
    pub(crate) validation: Vec<Triplet>,
    pub(crate) population: Vec<CircuitGenome>,
    pub(crate) history: History,
    pub(crate) champion: Option<(CircuitGenome, f64)>,
}

impl EvolutionState {
    pub fn new(
        dataset: &[ImagePatch],
        setup: EvolveSetup,
        fitness: FitnessConfig,
        variation: VariationConfig,
        evo: EvolutionConfig,
        noise: Option<NoiseConfig>,
    ) -> Result<Self> {
        setup.validate()?;
        fitness.validate()?;
        variation.validate()?;
        evo.validate()?;
        if let Some(noise) = &noise {
            noise.validate()?;
        }
        if dataset.len() < 2 {
            return Err(Error::InvalidArgument(
                "dataset must contain at least 2 patches".into(),
            ));
        }

        let fingerprint = crate::image::dataset_fingerprint(dataset);
        let fitted: Vec<ImagePatch> = dataset
            .iter()
            .map(|p| fit_to_qubit_budget(p, setup.qubits))
            .collect::<Result<_>>()?;

        let mut val_rng = derive(evo.seed, &[stage::VALIDATION_BATCH]);
        let validation = sample_triplet_batch(
            &fitted,
            setup.validation_batch,
            &setup.perturbation,
            &mut val_rng,
        )?;

        let population = (0..evo.population)
            .map(|i| {
                let mut rng = derive(evo.seed, &[stage::INIT, i as u64]);
                random_genome(setup.qubits, &variation, &mut rng)
            })
            .collect();

        Ok(Self {
            setup,
            fitness,
            variation,
            evo,
            noise,
            dataset_fingerprint: fingerprint,
            fitted,
            validation,
            population,
            history: History::default(),
            champion: None,
        })
    }

    /// Generations evaluated so far (0 before the first step).
    pub fn generations_done(&self) -> usize {
        self.history.generations.len()
    }

    pub fn is_done(&self) -> bool {
        self.generations_done() > self.evo.generations
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn champion(&self) -> Option<(&CircuitGenome, f64)> {
        self.champion.as_ref().map(|(g, l)| (g, *l))
    }

    /// Evaluate one generation; for generations past the initial one this
    /// first breeds the next population from the previous records.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Err(Error::InvalidArgument("evolution already finished".into()));
        }
        let g = self.generations_done();
        if g > 0 {
            self.population = self.breed(g)?;
        }

        let mut batch_rng = derive(self.evo.seed, &[stage::TRAIN_BATCH, g as u64]);
        let batch = sample_triplet_batch(
            &self.fitted,
            self.fitness.batch_size,
            &self.setup.perturbation,
            &mut batch_rng,
        )?;

        let mut records: Vec<FitnessRecord> = self
            .population
            .par_iter()
            .enumerate()
            .map(|(i, genome)| {
                let mut rng = derive(self.evo.seed, &[stage::FITNESS_EVAL, g as u64, i as u64]);
                batch_fitness(
                    genome,
                    &batch,
                    &self.fitness,
                    self.setup.pair_orientation,
                    self.noise.as_ref(),
                    &mut rng,
                )
            })
            .collect::<Result<_>>()?;
        non_dominated_sort(&mut records);

        let val_losses: Vec<f64> = self
            .population
            .par_iter()
            .enumerate()
            .map(|(i, genome)| {
                let mut rng =
                    derive(self.evo.seed, &[stage::VALIDATION_EVAL, g as u64, i as u64]);
                batch_fitness(
                    genome,
                    &self.validation,
                    &self.fitness,
                    self.setup.pair_orientation,
                    self.noise.as_ref(),
                    &mut rng,
                )
                .map(|r| r.loss)
            })
            .collect::<Result<_>>()?;

        let (best_idx, best_loss) = val_losses
            .iter()
            .enumerate()
            .min_by(|(ia, a), (ib, b)| a.total_cmp(b).then_with(|| ia.cmp(ib)))
            .map(|(i, &l)| (i, l))
            .expect("population is never empty");
        let improved = self.champion.as_ref().is_none_or(|(_, l)| best_loss < *l);
        if improved {
            self.champion = Some((self.population[best_idx].clone(), best_loss));
        }
        let champion_val_loss = self.champion.as_ref().map(|(_, l)| *l).unwrap();

        self.history.generations.push(GenerationRecord {
            generation: g,
            records,
            champion_val_loss,
        });
        Ok(())
    }

    fn breed(&self, g: usize) -> Result<Vec<CircuitGenome>> {
        let last = self
            .history
            .generations
            .last()
            .expect("breed is only called after the initial evaluation");
        let records = &last.records;

        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| selection_order(&records[a], a, &records[b], b));
        let mut next: Vec<CircuitGenome> = order
            .iter()
            .take(self.evo.elitism)
            .map(|&i| self.population[i].clone())
            .collect();

        let mut pair = 0u64;
        while next.len() < self.evo.population {
            let mut rng: ChaCha8Rng =
                derive(self.evo.seed, &[stage::VARIATION, g as u64, pair]);
            let first = tournament_select(&self.population, records, &self.evo, &mut rng)?;
            let second = tournament_select(&self.population, records, &self.evo, &mut rng)?;
            let (c1, c2) = crossover(
                &self.population[first],
                &self.population[second],
                &self.variation,
                &mut rng,
            )?;
            next.push(mutate(&c1, &self.variation, &mut rng));
            if next.len() < self.evo.population {
                next.push(mutate(&c2, &self.variation, &mut rng));
            }
            pair += 1;
        }
        Ok(next)
    }

    pub fn run_to_completion(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn outcome(&self) -> Result<EvolutionOutcome> {
        let (champion, champion_val_loss) = self
            .champion
            .clone()
            .ok_or_else(|| Error::InvalidArgument("no generation evaluated yet".into()))?;
        Ok(EvolutionOutcome {
            champion,
            champion_val_loss,
            history: self.history.clone(),
        })
    }
}

fn sample_triplet_batch(
    dataset: &[ImagePatch],
    count: usize,
    perturbation: &PerturbationConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Triplet>> {
    (0..count)
        .map(|_| {
            let anchor_idx = rng.random_range(0..dataset.len());
            build_triplet(dataset, anchor_idx, perturbation, rng)
        })
        .collect()
}

/// Full evolutionary run: initialize, evaluate every generation, and return
/// the champion by validation loss plus the complete history.
pub fn evolve(
    dataset: &[ImagePatch],
    setup: EvolveSetup,
    fitness: FitnessConfig,
    variation: VariationConfig,
    evo: EvolutionConfig,
    noise: Option<NoiseConfig>,
) -> Result<EvolutionOutcome> {
    let mut state = EvolutionState::new(dataset, setup, fitness, variation, evo, noise)?;
    state.run_to_completion()?;
    state.outcome()
}
