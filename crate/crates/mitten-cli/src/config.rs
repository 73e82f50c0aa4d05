//! Experiment configuration: one TOML file describes a full benchmark run.

use anyhow::{bail, Context, Result};
use mitten_core::noise::{calibrate_rates, sparse_nn_template, LindbladGenerator, NoiseLayer};
use mitten_core::pauli::{PauliLetter, PauliString};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Circuit template; only "ising-1d" is built in.
    #[serde(default = "default_circuit")]
    pub circuit: String,
    pub n: usize,
    pub steps: usize,
    pub h: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub dt: f64,
    /// Mitigation-map bond caps; one full middle-out run per entry.
    pub chi_max: Vec<usize>,
    #[serde(default)]
    pub tol: f64,
    /// A single observable or a list; names Zn/Xn/Yn/R1/R2 or explicit words.
    pub observable: ObservableSpec,
    pub estimators: Vec<String>,
    pub shots: u64,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub seeds: Seeds,
    #[serde(default)]
    pub rsvd: RsvdConfig,
    #[serde(default)]
    pub state: StateConfig,
    /// Per-layer noise records (even-link and odd-link CNOT layers).
    pub noise: Vec<NoiseRecord>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: bool,
}

fn default_circuit() -> String {
    "ising-1d".into()
}

fn default_output() -> String {
    "out".into()
}

fn default_workers() -> usize {
    2
}

fn default_checkpoints() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    One(String),
    Many(Vec<String>),
}

impl ObservableSpec {
    pub fn names(&self) -> Vec<String> {
        match self {
            ObservableSpec::One(s) => vec![s.clone()],
            ObservableSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub noise: u64,
    pub sampling: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsvdConfig {
    pub oversampling: usize,
    pub power_iters: usize,
}

impl Default for RsvdConfig {
    fn default() -> Self {
        Self { oversampling: 10, power_iters: 2 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    /// Bond cap of the noisy-state evolution.
    pub chi_noisy: usize,
    /// Bond cap of the zero-noise reference evolution.
    pub chi_ideal: usize,
    pub tol: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self { chi_noisy: 256, chi_ideal: 512, tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub label: String,
    /// "even-cnot" or "odd-cnot"; defaults to record order (first = even).
    #[serde(default)]
    pub applies_to: Option<String>,
    /// Template calibration: template name plus target sampling overhead.
    #[serde(default)]
    pub template: Option<String>,
    #[serde(default)]
    pub target_gamma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Explicit (pauli, rate) list; mutually exclusive with `template`.
    #[serde(default)]
    pub rates: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Dca,
    Apc,
    Noisy,
    ExactOracle,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Dca => "dca",
            Estimator::Apc => "apc",
            Estimator::Noisy => "noisy",
            Estimator::ExactOracle => "exact-oracle",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "dca" => Ok(Estimator::Dca),
            "apc" => Ok(Estimator::Apc),
            "noisy" => Ok(Estimator::Noisy),
            "exact-oracle" => Ok(Estimator::ExactOracle),
            other => bail!("unknown estimator '{other}' (expected dca, apc, noisy, exact-oracle)"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text).context("parsing config TOML")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.circuit != "ising-1d" {
            bail!("field 'circuit': unknown template '{}' (only ising-1d)", self.circuit);
        }
        if self.n < 2 {
            bail!("field 'n': need at least 2 qubits, got {}", self.n);
        }
        if self.chi_max.is_empty() || self.chi_max.iter().any(|&c| c == 0) {
            bail!("field 'chi_max': need a non-empty list of positive bond caps");
        }
        if self.tol < 0.0 {
            bail!("field 'tol': must be non-negative, got {}", self.tol);
        }
        if self.shots == 0 {
            bail!("field 'shots': must be at least 1");
        }
        if self.workers == 0 {
            bail!("field 'workers': must be at least 1");
        }
        let estimators = self.estimators()?;
        if estimators.contains(&Estimator::ExactOracle) && self.n > 4 {
            bail!("field 'estimators': exact-oracle is only valid for n <= 4, got n = {}", self.n);
        }
        for name in self.observable.names() {
            self.parse_observable(&name)
                .with_context(|| format!("field 'observable': entry '{name}'"))?;
        }
        if self.noise.is_empty() {
            bail!("field 'noise': need at least one layer record");
        }
        for record in &self.noise {
            record.validate(self.n)?;
        }
        Ok(())
    }

    pub fn estimators(&self) -> Result<Vec<Estimator>> {
        self.estimators.iter().map(|s| Estimator::parse(s)).collect()
    }

    /// Resolve an observable name to a Pauli word on `n` qubits.
    pub fn parse_observable(&self, name: &str) -> Result<PauliString> {
        parse_observable(name, self.n)
    }

    /// Build the two noise models (even-link, odd-link).
    pub fn noise_models(&self) -> Result<(NoiseLayer<f64>, NoiseLayer<f64>)> {
        let mut even = None;
        let mut odd = None;
        for (idx, record) in self.noise.iter().enumerate() {
            let model = record.build(self.n)?;
            let slot = match record.applies_to.as_deref() {
                Some("even-cnot") => &mut even,
                Some("odd-cnot") => &mut odd,
                Some(other) => bail!(
                    "noise record '{}': unknown applies_to '{other}' (even-cnot or odd-cnot)",
                    record.label
                ),
                None => {
                    if idx == 0 {
                        &mut even
                    } else {
                        &mut odd
                    }
                }
            };
            if slot.is_some() {
                bail!("noise record '{}': slot already taken", record.label);
            }
            *slot = Some(model);
        }
        let even = even.context("no noise record for even-link CNOT layers")?;
        let odd = odd.unwrap_or_else(|| NoiseLayer::noiseless(self.n, "odd-noiseless"));
        Ok((even, odd))
    }
}

/// Named sets from the benchmark: `Zn`/`Xn`/`Yn` expand to uniform words,
/// `R1`/`R2` are the two fixed random 10-qubit words, and anything else is
/// parsed as an explicit Pauli word.
pub fn parse_observable(name: &str, n: usize) -> Result<PauliString> {
    let uniform = |letter: PauliLetter| {
        PauliString::repeated(letter, n).map_err(|e| anyhow::anyhow!("{e}"))
    };
    match name {
        "Zn" => uniform(PauliLetter::Z),
        "Xn" => uniform(PauliLetter::X),
        "Yn" => uniform(PauliLetter::Y),
        "R1" | "R2" => {
            if n != 10 {
                bail!("{name} is a fixed 10-qubit word but n = {n}");
            }
            let word = if name == "R1" { "YZZIYXZIZZ" } else { "IIZIXIXXIX" };
            Ok(word.parse().expect("fixed word parses"))
        }
        word => {
            let p: PauliString = word
                .parse()
                .map_err(|e| anyhow::anyhow!("invalid Pauli word '{word}': {e}"))?;
            if p.n() != n {
                bail!("observable '{word}' has {} letters but n = {n}", p.n());
            }
            Ok(p)
        }
    }
}

impl NoiseRecord {
    fn validate(&self, n: usize) -> Result<()> {
        match (&self.template, &self.rates) {
            (Some(_), Some(_)) => {
                bail!("noise record '{}': give either template or rates, not both", self.label)
            }
            (None, None) => {
                bail!("noise record '{}': needs a template or explicit rates", self.label)
            }
            (Some(t), None) => {
                if t != "sparse-nn" {
                    bail!("noise record '{}': unknown template '{t}' (only sparse-nn)", self.label);
                }
                let gamma = self
                    .target_gamma
                    .with_context(|| format!("noise record '{}': missing target_gamma", self.label))?;
                if gamma < 1.0 {
                    bail!("noise record '{}': target_gamma {gamma} < 1", self.label);
                }
                Ok(())
            }
            (None, Some(rates)) => {
                for (word, rate) in rates {
                    let p: PauliString = word.parse().map_err(|e| {
                        anyhow::anyhow!("noise record '{}': bad pauli '{word}': {e}", self.label)
                    })?;
                    if p.n() != n {
                        bail!(
                            "noise record '{}': pauli '{word}' has {} letters but n = {n}",
                            self.label,
                            p.n()
                        );
                    }
                    if *rate < 0.0 {
                        bail!("noise record '{}': negative rate {rate} for '{word}'", self.label);
                    }
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, n: usize) -> Result<NoiseLayer<f64>> {
        if let Some(rates) = &self.rates {
            let generators = rates
                .iter()
                .map(|(word, rate)| {
                    Ok(LindbladGenerator { pauli: word.parse().map_err(|e| anyhow::anyhow!("{e}"))?, rate: *rate })
                })
                .collect::<Result<Vec<_>>>()?;
            return NoiseLayer::new(n, self.label.clone(), generators)
                .map_err(|e| anyhow::anyhow!("noise record '{}': {e}", self.label));
        }
        let gamma = self.target_gamma.expect("validated");
        let seed = self.seed.unwrap_or(0);
        calibrate_rates(n, self.label.clone(), &sparse_nn_template(n), gamma, seed)
            .map_err(|e| anyhow::anyhow!("noise record '{}': {e}", self.label))
    }
}
