//! Experiment configuration: JSON with one `experiment` discriminator and
//! per-kind payloads. Unknown keys are rejected so that typos cannot
//! silently weaken a run.

use anyhow::{bail, Context};
use serde::Deserialize;

use dbar_core::measures::ProcessSpec;
use dbar_core::Exponent;

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Duality(DualityConfig),
    Gcb(GcbConfig),
    Edi(EdiConfig),
    Thermo(ThermoConfig),
    Dbar(DbarConfig),
    Pressure(PressureConfig),
    Counterexample(CounterexampleConfig),
}

fn default_dimension() -> usize {
    1
}

/// Exactly one instance source: `spec` + `sites`, or an explicit `measure`.
fn check_instance(
    spec: &Option<ProcessSpec>,
    sites: Option<i64>,
    measure: &Option<dbar_core::measures::Measure>,
) -> anyhow::Result<()> {
    match (spec, sites, measure) {
        (Some(_), Some(s), None) if s >= 1 => Ok(()),
        (None, None, Some(_)) => Ok(()),
        _ => bail!("provide either spec with sites >= 1, or an explicit measure"),
    }
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_edi_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityConfig {
    pub seed: u64,
    /// random (μ, ν) pairs per (alphabet, sites) cell
    pub instances_per_cell: usize,
    pub alphabets: Vec<usize>,
    pub site_counts: Vec<i64>,
    pub exponents: Vec<Exponent>,
    #[serde(default = "default_tolerance")]
    pub gap_tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcbConfig {
    pub seed: u64,
    /// instance family, realized on the interval `[0, sites-1]`…
    #[serde(default)]
    pub spec: Option<ProcessSpec>,
    #[serde(default)]
    pub sites: Option<i64>,
    /// …or an explicit probability table
    #[serde(default)]
    pub measure: Option<dbar_core::measures::Measure>,
    pub c: f64,
    pub q: Exponent,
    /// multistart count for the optimal-constant lower bound
    pub restarts: usize,
    /// optional diagnostic sweep: re-check the suite scaled by each β
    #[serde(default)]
    pub beta_sweep: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Pass,
    Violation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdiConfig {
    pub seed: u64,
    #[serde(default)]
    pub spec: Option<ProcessSpec>,
    #[serde(default)]
    pub sites: Option<i64>,
    /// explicit probability table, alternative to spec + sites
    #[serde(default)]
    pub measure: Option<dbar_core::measures::Measure>,
    pub c: f64,
    pub p: Exponent,
    pub trials: usize,
    /// what the run asserts: clean pass, or that a violating tilt exists
    pub expect: Expectation,
    #[serde(default = "default_edi_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    pub seed: u64,
    pub spec_a: ProcessSpec,
    pub spec_b: ProcessSpec,
    pub exponents: Vec<Exponent>,
    pub n_max: i64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// optional ceiling on the final cross-exponent spread
    #[serde(default)]
    pub spread_tolerance: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub superadditivity_tolerance: f64,
}

fn default_burn_in() -> usize {
    10_000
}

fn default_mc_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbarConfig {
    pub seed: u64,
    pub spec_a: ProcessSpec,
    pub spec_b: ProcessSpec,
    pub n_max: i64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

/// Explicit local function table on a 1-d interval.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionTable {
    /// `[lo, hi]` inclusive
    pub interval: [i64; 2],
    pub alphabet: usize,
    /// rank-order values, length `alphabet^(hi-lo+1)`
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureConfig {
    pub seed: u64,
    pub spec: ProcessSpec,
    pub c: f64,
    pub functions: Vec<FunctionTable>,
    #[serde(default = "default_edi_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub l_grid: Vec<u64>,
    /// witness-family exponent (> 1)
    pub p: Exponent,
    pub alphabet: usize,
    pub n_grid: Vec<i64>,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
}

impl ExperimentConfig {
    /// Parse and fully validate; a malformed document fails here, before
    /// any output is created.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        let object = value
            .as_object_mut()
            .context("config must be a JSON object")?;
        let kind = object
            .remove("experiment")
            .context("missing \"experiment\" field")?;
        let kind = kind
            .as_str()
            .context("\"experiment\" must be a string")?
            .to_string();
        let rest = serde_json::Value::Object(object.clone());
        let parsed = match kind.as_str() {
            "duality" => ExperimentConfig::Duality(serde_json::from_value(rest)?),
            "gcb" => ExperimentConfig::Gcb(serde_json::from_value(rest)?),
            "edi" => ExperimentConfig::Edi(serde_json::from_value(rest)?),
            "thermo" => ExperimentConfig::Thermo(serde_json::from_value(rest)?),
            "dbar" => ExperimentConfig::Dbar(serde_json::from_value(rest)?),
            "pressure" => ExperimentConfig::Pressure(serde_json::from_value(rest)?),
            "counterexample" => ExperimentConfig::Counterexample(serde_json::from_value(rest)?),
            other => bail!("unknown experiment kind {other:?}"),
        };
        parsed.validate()?;
        Ok(parsed)
    }

    fn validate(&self) -> anyhow::Result<()> {
        match self {
            ExperimentConfig::Duality(c) => {
                if c.instances_per_cell == 0
                    || c.alphabets.is_empty()
                    || c.site_counts.is_empty()
                    || c.exponents.is_empty()
                {
                    bail!("duality config needs nonempty grids and instances_per_cell >= 1");
                }
                if c.gap_tolerance <= 0.0 {
                    bail!("gap_tolerance must be positive");
                }
            }
            ExperimentConfig::Gcb(c) => {
                if c.c <= 0.0 || c.restarts == 0 {
                    bail!("gcb config needs c > 0 and restarts >= 1");
                }
                check_instance(&c.spec, c.sites, &c.measure)?;
                if c.beta_sweep.iter().any(|b| !b.is_finite() || *b <= 0.0) {
                    bail!("beta_sweep entries must be positive");
                }
            }
            ExperimentConfig::Edi(c) => {
                if c.c <= 0.0 || c.trials == 0 {
                    bail!("edi config needs c > 0 and trials >= 1");
                }
                check_instance(&c.spec, c.sites, &c.measure)?;
            }
            ExperimentConfig::Thermo(c) => {
                if c.exponents.is_empty() || c.n_max < 0 || c.dimension == 0 {
                    bail!("thermo config needs exponents, n_max >= 0, dimension >= 1");
                }
            }
            ExperimentConfig::Dbar(c) => {
                if c.n_max < 0 || c.mc_samples == 0 {
                    bail!("dbar config needs n_max >= 0 and mc_samples >= 1");
                }
            }
            ExperimentConfig::Pressure(c) => {
                if c.functions.is_empty() || c.c <= 0.0 {
                    bail!("pressure config needs functions and c > 0");
                }
                for f in &c.functions {
                    if f.interval[0] > f.interval[1] {
                        bail!("function interval must be nonempty");
                    }
                }
            }
            ExperimentConfig::Counterexample(c) => {
                if c.l_grid.is_empty() && c.n_grid.is_empty() {
                    bail!("counterexample config needs l_grid or n_grid");
                }
                if c.p.is_one() {
                    bail!("witness family requires p > 1");
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Duality(_) => "duality",
            ExperimentConfig::Gcb(_) => "gcb",
            ExperimentConfig::Edi(_) => "edi",
            ExperimentConfig::Thermo(_) => "thermo",
            ExperimentConfig::Dbar(_) => "dbar",
            ExperimentConfig::Pressure(_) => "pressure",
            ExperimentConfig::Counterexample(_) => "counterexample",
        }
    }

    /// Replace the master seed in place (for `--seed-override`).
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Duality(c) => c.seed = seed,
            ExperimentConfig::Gcb(c) => c.seed = seed,
            ExperimentConfig::Edi(c) => c.seed = seed,
            ExperimentConfig::Thermo(c) => c.seed = seed,
            ExperimentConfig::Dbar(c) => c.seed = seed,
            ExperimentConfig::Pressure(c) => c.seed = seed,
            ExperimentConfig::Counterexample(_) => {}
        }
    }
}
