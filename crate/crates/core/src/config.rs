//! JSON run configuration shared by the command-line workflows.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distortions::{Distortion, DistortionSpec};
use crate::distributions::{DistributionSpec, LossDistribution};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::objective::RateOptions;
use crate::premium::{DualDistribution, MarketParams};
use crate::simulate::SimConfig;
use crate::solver::OdeOptions;

/// Which inner solver produces `H*`. The rate `a*` always comes from the
/// convex program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Qp,
    Ode,
    /// `ode` when the loss law has a quantile density, else `qp`.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_sweeps: usize,
    pub route: Route,
    /// Cells of the quantile-domain solver.
    pub ode_nodes: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let r = RateOptions::default();
        Self { tol: r.tol, max_sweeps: r.max_sweeps, route: Route::Auto, ode_nodes: OdeOptions::default().n_nodes }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Any of "json", "csv", "paths".
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec!["json".into(), "csv".into()] }
    }
}

impl OutputSection {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub distribution: DistributionSpec,
    pub distortion: DistortionSpec,
    pub market: MarketParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulate: SimConfig,
    #[serde(default)]
    pub output: OutputSection,
}

/// The objects a config describes.
pub struct Model {
    pub loss: LossDistribution,
    pub distortion: Distortion,
    pub dual: DualDistribution,
    pub params: MarketParams,
}

impl RunConfig {
    /// Reads a config; relative CSV paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DistributionSpec::Empirical { csv: Some(p), .. } = &mut self.distribution {
            fix(p);
        }
        if let DistortionSpec::Tabular(t) = &mut self.distortion {
            if let Some(p) = &mut t.csv {
                fix(p);
            }
        }
    }

    /// Builds the model and checks the config invariants.
    pub fn model(&self) -> Result<Model> {
        let as_config = |e: Error| match e {
            Error::InvalidDistribution(m) | Error::InvalidDistortion(m) | Error::InvalidArgument(m) => Error::Config(m),
            Error::Io(e) => Error::Config(e.to_string()),
            Error::Csv(e) => Error::Config(e.to_string()),
            other => other,
        };
        let loss = LossDistribution::from_spec(&self.distribution).map_err(as_config)?;
        let distortion = Distortion::from_spec(&self.distortion).map_err(as_config)?;
        if self.solver.route == Route::Ode && !loss.has_quantile_density() {
            return Err(Error::Config(format!("route \"ode\" needs a quantile density, which {} lacks", loss.label())));
        }
        let dual = DualDistribution::new(&loss, &distortion, self.market.theta0).map_err(as_config)?;
        Ok(Model { loss, distortion, dual, params: self.market })
    }

    pub fn rate_options(&self) -> RateOptions {
        RateOptions { grid: self.grid.clone(), tol: self.solver.tol, max_sweeps: self.solver.max_sweeps, ..RateOptions::default() }
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions { n_nodes: self.solver.ode_nodes, p_eps: self.grid.p_eps, ..OdeOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAYER: &str = r#"{
        "distribution": {"kind": "piecewise_exponential", "params": {"breakpoints": [1, 6], "rates": [6, 5, 3]}},
        "distortion": {"kind": "layer_canonical"},
        "market": {"pi": 11.886851948361496, "theta0": 3},
        "solver": {"route": "qp"}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_json(LAYER).unwrap();
        assert_eq!(cfg.grid.n_nodes, 2000);
        assert_eq!(cfg.solver.route, Route::Qp);
        assert!(cfg.output.wants("csv"));
        let m = cfg.model().unwrap();
        assert!((m.dual.theta() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_json("{"), Err(Error::Config(_))));
        let unknown = LAYER.replacen("\"market\"", "\"bogus\": 1, \"market\"", 1);
        assert!(RunConfig::from_json(&unknown).is_err());
        let ode_on_atoms = LAYER.replace("\"qp\"", "\"ode\"");
        assert!(matches!(RunConfig::from_json(&ode_on_atoms).unwrap().model(), Err(Error::Config(_))));
    }
}
