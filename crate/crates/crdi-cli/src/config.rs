//! Run configuration: solution + grid + tolerances, strict about unknown keys.

use crdi_core::inversion::DerivMode;
use crdi_core::solutions::SolutionConfig;
use crdi_core::verify::{GridSpec, Tolerances};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solution: SolutionConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_mode")]
    pub derivatives: DerivMode,
    /// Fractional perturbation applied to A_t before verification; a
    /// falsification control, must drive `verify` to a nonzero exit.
    #[serde(default)]
    pub perturb_a_t: f64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_mode() -> DerivMode {
    DerivMode::Analytic
}

impl RunConfig {
    pub fn load(path: &str) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {path}: {e}"))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config {path}: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid.counts.iter().any(|&c| c == 0) {
            return Err("grid counts must all be positive".into());
        }
        for (mu, [lo, hi]) in self.grid.ranges.iter().enumerate() {
            if hi < lo || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("bad range for coordinate {mu}: [{lo}, {hi}]"));
            }
        }
        if !(self.perturb_a_t.is_finite()) {
            return Err("perturb_a_t must be finite".into());
        }
        Ok(())
    }
}
