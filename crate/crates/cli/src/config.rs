use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use compacton_core::equations::{make_kmn, EquationSpec, InitialCondition};
use compacton_core::grid::GridSpec;
use compacton_core::ldg::FluxMode;
use compacton_core::timestepper::{RunConfig, DEFAULT_BREACH_THRESHOLD, DEFAULT_CFL, DEFAULT_JUMP_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const RECIPES: [&str; 2] = ["paper-fig1", "paper-fig2"];

/// A fully resolved run configuration, as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub equation: EquationSpec,
    pub grid: GridSpec,
    pub ic: InitialCondition,
    pub run: RunSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_times: Vec<f64>,
    pub diagnostics_stride: u64,
    #[serde(default = "default_breach")]
    pub breach_threshold: f64,
    #[serde(default = "default_jump")]
    pub jump_threshold: f64,
    #[serde(default)]
    pub flux_mode: FluxMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
}

fn default_breach() -> f64 {
    DEFAULT_BREACH_THRESHOLD
}

fn default_jump() -> f64 {
    DEFAULT_JUMP_THRESHOLD
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Config = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// A built-in recipe, or a config file.
    pub fn resolve(arg: &str) -> Result<Self, CliError> {
        let path = Path::new(arg);
        if !path.exists() {
            if let Some(recipe) = Self::recipe(arg) {
                return Ok(recipe);
            }
        }
        Self::load(path)
    }

    /// The two cos³-bump experiments on `[−8π, 8π]`.
    pub fn recipe(name: &str) -> Option<Self> {
        let (m, t_end) = match name {
            "paper-fig1" => (2.0, 10.0),
            "paper-fig2" => (3.0, 12.0),
            _ => return None,
        };
        Some(Config {
            equation: make_kmn(m, 2.0).expect("recipe equations are valid"),
            grid: GridSpec::new(-8.0 * PI, 8.0 * PI, 400, 3),
            ic: InitialCondition::cos_cubed_default(),
            run: RunSection {
                t_end,
                cfl: DEFAULT_CFL,
                snapshot_times: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
                diagnostics_stride: 5000,
                breach_threshold: DEFAULT_BREACH_THRESHOLD,
                jump_threshold: DEFAULT_JUMP_THRESHOLD,
                flux_mode: FluxMode::GlobalLaxFriedrichs,
            },
            output: OutputSection { directory: PathBuf::from("out").join(name) },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            spec: self.equation,
            grid: self.grid,
            ic: self.ic.clone(),
            t_end: self.run.t_end,
            cfl: self.run.cfl,
            snapshot_times: self.run.snapshot_times.clone(),
            breach_threshold: self.run.breach_threshold,
            jump_threshold: self.run.jump_threshold,
            diagnostics_stride: self.run.diagnostics_stride,
            flux_mode: self.run.flux_mode,
        }
    }

    fn check(&self) -> Result<(), CliError> {
        if self.run.snapshot_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("run.snapshot_times must be strictly increasing".into()));
        }
        self.run_config().validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[equation]
m = 2.0
b = 2.0

[grid]
x_left = -10.0
x_right = 10.0
num_cells = 40

[ic]
kind = "cos_cubed_bump"
center = 0.0
half_width = 3.0
scale = 1.0

[run]
t_end = 0.01
cfl = 2e-4
snapshot_times = [0.0, 0.01]
diagnostics_stride = 100

[output]
directory = "out/minimal"
"#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let c = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(c.equation.a(), 0.0);
        assert_eq!(c.grid.poly_order, 3);
        assert_eq!(c.run.breach_threshold, DEFAULT_BREACH_THRESHOLD);
        assert_eq!(c.run.flux_mode, FluxMode::GlobalLaxFriedrichs);
    }

    #[test]
    fn toml_round_trip() {
        for c in [Config::from_toml(MINIMAL).unwrap(), Config::recipe("paper-fig1").unwrap()] {
            assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("cfl = 2e-4", "cfl = 2e-4\nstep_size = 1e-3");
        let err = Config::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("step_size"), "{err}");
        let text = MINIMAL.replace("scale = 1.0", "scale = 1.0\nwidth = 2.0");
        let err = Config::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for (from, to) in [("m = 2.0", "m = 1.5"), ("cfl = 2e-4", "cfl = 0.0"), ("[0.0, 0.01]", "[0.01, 0.0]")] {
            assert!(matches!(Config::from_toml(&MINIMAL.replace(from, to)), Err(CliError::Config(_))), "{to}");
        }
    }

    #[test]
    fn recipes() {
        for name in RECIPES {
            let c = Config::recipe(name).unwrap();
            c.check().unwrap();
            assert_eq!(c.grid.num_cells, 400);
            assert_eq!(c.output.directory, Path::new("out").join(name));
        }
        assert_eq!(Config::recipe("paper-fig2").unwrap().equation.m(), 3.0);
        assert!(Config::recipe("paper-fig3").is_none());
    }
}
