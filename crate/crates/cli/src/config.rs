//! Run configuration, a TOML file. Relative paths resolve against the file's directory.
//!
//! ```toml
//! [data]
//! price = "price.csv"
//! solar = "solar.csv"
//! inflow = "inflow.csv"
//! head = "head.csv"          # optional when [head] is given
//!
//! [head]                     # optional explicit curve
//! a = 0.042
//! b = 0.35
//! v_lo = 2e9
//! v_hi = 3.6e10
//!
//! [system]                   # any subset; missing keys take the defaults
//! transmission = 1300.0
//!
//! [initial]
//! v0 = 1.2e10
//! u0 = 400.0
//!
//! [contracts]
//! release_m3 = [360000.0, 273000.0]   # or file = "contracts.csv" (month,release_m3)
//! # steps_per_month = 730            # default: calendar months of the price timestamps
//! ```
//!
//! Optional sections: `[bisection]`, `[simulate]`, `[sweep]`, `[oracle]`, `[scenario]`.

use hydro_fpv::pricer::BisectionConfig;
use hydro_fpv::{HeadCurve, InitialState, SystemParams};
use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: DataSection,
    pub head: Option<HeadSection>,
    #[serde(default)]
    pub system: SystemSection,
    pub initial: InitialState,
    pub contracts: ContractsSection,
    #[serde(default)]
    pub bisection: BisectionSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub price: PathBuf,
    pub solar: PathBuf,
    pub inflow: PathBuf,
    pub head: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSection {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub v_lo: f64,
    #[serde(default = "default_v_hi")]
    pub v_hi: f64,
}

fn default_v_hi() -> f64 {
    f64::MAX
}

impl HeadSection {
    pub fn curve(&self) -> Result<HeadCurve, CliError> {
        Ok(HeadCurve::new(self.a, self.b, self.v_lo, self.v_hi)?)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub eta: Option<f64>,
    pub g: Option<f64>,
    pub rho: Option<f64>,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub ramp_up: Option<f64>,
    pub ramp_down: Option<f64>,
    pub transmission: Option<f64>,
    pub solar_capacity: Option<f64>,
}

impl SystemSection {
    pub fn params(&self) -> SystemParams {
        let d = SystemParams::default();
        SystemParams {
            eta: self.eta.unwrap_or(d.eta),
            g: self.g.unwrap_or(d.g),
            rho: self.rho.unwrap_or(d.rho),
            u_min: self.u_min.unwrap_or(d.u_min),
            u_max: self.u_max.unwrap_or(d.u_max),
            ramp_up: self.ramp_up.unwrap_or(d.ramp_up),
            ramp_down: self.ramp_down.unwrap_or(d.ramp_down),
            transmission: self.transmission.unwrap_or(d.transmission),
            solar_capacity: self.solar_capacity.unwrap_or(d.solar_capacity),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractsSection {
    pub release_m3: Option<Vec<f64>>,
    pub file: Option<PathBuf>,
    pub steps_per_month: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectionSection {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_bracket_expansions: Option<usize>,
}

impl BisectionSection {
    pub fn config(&self) -> BisectionConfig {
        let d = BisectionConfig::default();
        BisectionConfig {
            lo: self.lo.unwrap_or(d.lo),
            hi: self.hi.unwrap_or(d.hi),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_bracket_expansions: self
                .max_bracket_expansions
                .unwrap_or(d.max_bracket_expansions),
        }
    }
}

/// Water prices for `simulate`: explicit per-month values, or the summary JSON of a `price` run.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub theta: Option<Vec<f64>>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// First step of the comparison window.
    pub start: usize,
    pub steps: usize,
    pub n_u: usize,
    pub n_c: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            start: 0,
            steps: 6,
            n_u: 41,
            n_c: 201,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub mape_levels: Vec<f64>,
    pub runs: usize,
    pub ar_coeff: f64,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            mape_levels: vec![0.0, 0.05, 0.10, 0.15, 0.20],
            runs: 200,
            ar_coeff: 0.7,
            seed: 42,
        }
    }
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.price);
        fix(&mut self.data.solar);
        fix(&mut self.data.inflow);
        if let Some(p) = self.data.head.as_mut() {
            fix(p);
        }
        if let Some(p) = self.contracts.file.as_mut() {
            fix(p);
        }
        if let Some(p) = self.simulate.summary.as_mut() {
            fix(p);
        }
    }
}
