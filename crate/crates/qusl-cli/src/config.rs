//! Flat `key = value` run configuration with one section per subsystem.
//! Unknown sections or keys are hard errors so experiment sweeps fail fast
//! on typos. `render` writes the fully resolved snapshot back out in the
//! same format.

use qusl_core::eval::{DistanceMode, SsimMatching};
use qusl_core::evolution::{EvolutionConfig, FitnessConfig, PairOrientation};
use qusl_core::genome::VariationConfig;
use qusl_core::qsim::NoiseConfig;
use qusl_core::triplet::PerturbationConfig;

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.msg)
    }
}

impl std::error::Error for ConfigError {}

/// Every tunable of the pipeline with its documented default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub qubits: usize,
    pub pair_orientation: PairOrientation,
    pub sigma: f64,
    pub bins_per_channel: usize,
    pub distance_pixels: bool,
    pub variation: VariationConfig,
    pub fitness: FitnessConfig,
    pub evolution: EvolutionConfig,
    pub validation_batch: usize,
    pub noise_enabled: bool,
    pub noise: NoiseConfig,
    pub n_pairs: usize,
    pub ssim_matching: SsimMatching,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            qubits: 14,
            pair_orientation: PairOrientation::NegativeAnchor,
            sigma: 5.0,
            bins_per_channel: 16,
            distance_pixels: false,
            variation: VariationConfig::default(),
            fitness: FitnessConfig::default(),
            evolution: EvolutionConfig::default(),
            validation_batch: 32,
            noise_enabled: false,
            noise: NoiseConfig {
                p_bitflip: 0.015,
                p_phaseflip: 0.015,
                p_depolarizing: 0.015,
            },
            n_pairs: 1000,
            ssim_matching: SsimMatching::Role,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                match section.as_str() {
                    "run" | "triplet" | "image" | "variation" | "fitness" | "evolution"
                    | "noise" | "eval" => {}
                    other => {
                        return Err(ConfigError {
                            key: other.to_string(),
                            msg: format!("unknown section (line {})", idx + 1),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                key: format!("line {}", idx + 1),
                msg: format!("expected `key = value`, found {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let full = |k: &str| format!("{section}.{k}");
        let bad = |k: &str, msg: String| ConfigError {
            key: full(k),
            msg,
        };
        macro_rules! set {
            ($slot:expr, $ty:ty) => {
                $slot = value
                    .parse::<$ty>()
                    .map_err(|e| bad(key, format!("cannot parse {value:?}: {e}")))?
            };
        }

        match (section, key) {
            ("run", "qubits") => set!(self.qubits, usize),
            ("run", "pair_orientation") => {
                self.pair_orientation = match value {
                    "negative-anchor" => PairOrientation::NegativeAnchor,
                    "anchor-negative" => PairOrientation::AnchorNegative,
                    other => {
                        return Err(bad(
                            key,
                            format!("expected negative-anchor or anchor-negative, got {other:?}"),
                        ))
                    }
                }
            }
            ("triplet", "sigma") => set!(self.sigma, f64),
            ("image", "bins_per_channel") => set!(self.bins_per_channel, usize),
            ("image", "distance_mode") => {
                self.distance_pixels = match value {
                    "histogram" => false,
                    "pixels" => true,
                    other => {
                        return Err(bad(
                            key,
                            format!("expected histogram or pixels, got {other:?}"),
                        ))
                    }
                }
            }
            ("variation", "p_add") => set!(self.variation.p_add, f64),
            ("variation", "p_remove") => set!(self.variation.p_remove, f64),
            ("variation", "p_kind_change") => set!(self.variation.p_kind_change, f64),
            ("variation", "p_rewire") => set!(self.variation.p_rewire, f64),
            ("variation", "p_angle_jitter") => set!(self.variation.p_angle_jitter, f64),
            ("variation", "angle_jitter_sigma") => set!(self.variation.angle_jitter_sigma, f64),
            ("variation", "min_init_gates") => set!(self.variation.min_init_gates, usize),
            ("variation", "max_init_gates") => set!(self.variation.max_init_gates, usize),
            ("variation", "max_gates") => set!(self.variation.max_gates, usize),
            ("fitness", "alpha") => set!(self.fitness.alpha, f64),
            ("fitness", "beta") => set!(self.fitness.beta, f64),
            ("fitness", "batch_size") => set!(self.fitness.batch_size, usize),
            ("fitness", "epsilon_guard") => set!(self.fitness.epsilon_guard, f64),
            ("fitness", "f_cap") => set!(self.fitness.f_cap, f64),
            ("evolution", "population") => set!(self.evolution.population, usize),
            ("evolution", "generations") => set!(self.evolution.generations, usize),
            ("evolution", "tournament_size") => set!(self.evolution.tournament_size, usize),
            ("evolution", "redundancy_threshold") => {
                set!(self.evolution.redundancy_threshold, f64)
            }
            ("evolution", "elitism") => set!(self.evolution.elitism, usize),
            ("evolution", "seed") => set!(self.evolution.seed, u64),
            ("evolution", "validation_batch") => set!(self.validation_batch, usize),
            ("noise", "enabled") => set!(self.noise_enabled, bool),
            ("noise", "p_bitflip") => set!(self.noise.p_bitflip, f64),
            ("noise", "p_phaseflip") => set!(self.noise.p_phaseflip, f64),
            ("noise", "p_depolarizing") => set!(self.noise.p_depolarizing, f64),
            ("eval", "n_pairs") => set!(self.n_pairs, usize),
            ("eval", "ssim_matching") => {
                self.ssim_matching = match value {
                    "role" => SsimMatching::Role,
                    "identity" => SsimMatching::Identity,
                    other => {
                        return Err(bad(key, format!("expected role or identity, got {other:?}")))
                    }
                }
            }
            _ => {
                return Err(ConfigError {
                    key: if section.is_empty() {
                        key.to_string()
                    } else {
                        full(key)
                    },
                    msg: "unknown key".to_string(),
                })
            }
        }
        Ok(())
    }

    /// Cross-field validation via the per-module validators.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |section: &str, e: qusl_core::Error| ConfigError {
            key: section.to_string(),
            msg: e.to_string(),
        };
        if self.qubits < 4 {
            return Err(ConfigError {
                key: "run.qubits".into(),
                msg: "need at least 4 qubits for projection readout".into(),
            });
        }
        self.perturbation()
            .validate()
            .map_err(|e| wrap("triplet.sigma", e))?;
        if self.bins_per_channel == 0 {
            return Err(ConfigError {
                key: "image.bins_per_channel".into(),
                msg: "must be at least 1".into(),
            });
        }
        self.variation.validate().map_err(|e| wrap("variation", e))?;
        self.fitness.validate().map_err(|e| wrap("fitness", e))?;
        self.evolution.validate().map_err(|e| wrap("evolution", e))?;
        if self.validation_batch == 0 {
            return Err(ConfigError {
                key: "evolution.validation_batch".into(),
                msg: "must be at least 1".into(),
            });
        }
        self.noise.validate().map_err(|e| wrap("noise", e))?;
        if self.n_pairs < 2 {
            return Err(ConfigError {
                key: "eval.n_pairs".into(),
                msg: "must be at least 2".into(),
            });
        }
        Ok(())
    }

    pub fn perturbation(&self) -> PerturbationConfig {
        PerturbationConfig {
            sigma: self.sigma,
            rng_seed: self.evolution.seed,
        }
    }

    pub fn distance_mode(&self) -> DistanceMode {
        if self.distance_pixels {
            DistanceMode::Pixels
        } else {
            DistanceMode::Histogram {
                bins_per_channel: self.bins_per_channel,
            }
        }
    }

    pub fn noise_option(&self) -> Option<NoiseConfig> {
        self.noise_enabled.then_some(self.noise)
    }

    /// Fully resolved snapshot in the input format; parsing it back yields an
    /// identical config.
    pub fn render(&self) -> String {
        let orientation = match self.pair_orientation {
            PairOrientation::NegativeAnchor => "negative-anchor",
            PairOrientation::AnchorNegative => "anchor-negative",
        };
        let matching = match self.ssim_matching {
            SsimMatching::Role => "role",
            SsimMatching::Identity => "identity",
        };
        let distance = if self.distance_pixels {
            "pixels"
        } else {
            "histogram"
        };
        format!(
            "[run]\n\
             qubits = {}\n\
             pair_orientation = {}\n\
             \n\
             [triplet]\n\
             sigma = {}\n\
             \n\
             [image]\n\
             bins_per_channel = {}\n\
             distance_mode = {}\n\
             \n\
             [variation]\n\
             p_add = {}\n\
             p_remove = {}\n\
             p_kind_change = {}\n\
             p_rewire = {}\n\
             p_angle_jitter = {}\n\
             angle_jitter_sigma = {}\n\
             min_init_gates = {}\n\
             max_init_gates = {}\n\
             max_gates = {}\n\
             \n\
             [fitness]\n\
             alpha = {}\n\
             beta = {}\n\
             batch_size = {}\n\
             epsilon_guard = {}\n\
             f_cap = {}\n\
             \n\
             [evolution]\n\
             population = {}\n\
             generations = {}\n\
             tournament_size = {}\n\
             redundancy_threshold = {}\n\
             elitism = {}\n\
             seed = {}\n\
             validation_batch = {}\n\
             \n\
             [noise]\n\
             enabled = {}\n\
             p_bitflip = {}\n\
             p_phaseflip = {}\n\
             p_depolarizing = {}\n\
             \n\
             [eval]\n\
             n_pairs = {}\n\
             ssim_matching = {}\n",
            self.qubits,
            orientation,
            self.sigma,
            self.bins_per_channel,
            distance,
            self.variation.p_add,
            self.variation.p_remove,
            self.variation.p_kind_change,
            self.variation.p_rewire,
            self.variation.p_angle_jitter,
            self.variation.angle_jitter_sigma,
            self.variation.min_init_gates,
            self.variation.max_init_gates,
            self.variation.max_gates,
            self.fitness.alpha,
            self.fitness.beta,
            self.fitness.batch_size,
            self.fitness.epsilon_guard,
            self.fitness.f_cap,
            self.evolution.population,
            self.evolution.generations,
            self.evolution.tournament_size,
            self.evolution.redundancy_threshold,
            self.evolution.elitism,
            self.evolution.seed,
            self.validation_batch,
            self.noise_enabled,
            self.noise.p_bitflip,
            self.noise.p_phaseflip,
            self.noise.p_depolarizing,
            self.n_pairs,
            matching,
        )
    }
}
