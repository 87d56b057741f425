use std::path::Path;

use bandlab::ensemble::{EntryKind, EnsembleDescriptor, ShapeKind};
use bandlab::limit::TestFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Gen,
    Evolve,
    Diffusion,
    Limit,
    Diagrams,
    Edge,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DiagramCheck {
    Skeleton,
    Greedy,
    Narayana,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Chebyshev,
    Nonbacktracking,
    Diagrams,
    Limit,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Experiment parameters; each command reads the fields it needs and the
/// resolved config records every default that was applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub big_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realization: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<TestFunction>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<DiagramCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_edges: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleDescriptor>,
    #[serde(default)]
    pub params: Params,
}

fn invalid(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Validation(format!("{field}: {}", msg.into()))
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig { command, seed: 0, ensemble: None, params: Params::default() }
    }

    /// Read a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let inner = match value.get("manifest_version") {
            Some(_) => value.get("config").cloned().ok_or_else(|| invalid("manifest", "missing `config`"))?,
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn default_ensemble(&self) -> Option<EnsembleDescriptor> {
        let dist = EntryKind::Gaussian;
        match self.command {
            Command::Gen | Command::Evolve => Some(EnsembleDescriptor::new(1, 64, 8, ShapeKind::Box, dist, false, 0)),
            Command::Diffusion => Some(EnsembleDescriptor::new(1, 512, 16, ShapeKind::Box, dist, false, 0)),
            Command::Edge => Some(EnsembleDescriptor::wigner(self.params.m.unwrap_or(500), dist, false, 0)),
            Command::Limit | Command::Diagrams | Command::Verify => None,
        }
    }

    /// Fill every default and validate; the result is what the manifest stores.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.ensemble.is_none() {
            self.ensemble = self.default_ensemble();
        }
        if let Some(e) = &mut self.ensemble {
            e.seed = self.seed;
        }
        let p = &mut self.params;
        match self.command {
            Command::Gen => {
                p.realization.get_or_insert(0);
            }
            Command::Evolve => {
                let t = *p.t.get_or_insert(10.0);
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(invalid("params.t", "must be non-negative"));
                }
                p.residual_target.get_or_insert(1e-12);
                p.realization.get_or_insert(0);
            }
            Command::Diffusion => {
                match (p.kappa, p.big_t) {
                    (Some(k), Some(tt)) => {
                        positive("params.kappa", k)?;
                        positive("params.T", tt)?;
                        let e = self.ensemble.as_ref().unwrap();
                        let t = (e.w as f64).powf(e.d as f64 * k) * tt;
                        if let Some(given) = p.t {
                            if (given - t).abs() > 1e-12 * t {
                                return Err(invalid("params.t", format!("conflicts with W^(dκ)·T = {t}")));
                            }
                        }
                        p.t = Some(t);
                        p.phis.get_or_insert_with(|| vec![TestFunction::gaussian()]);
                    }
                    (None, None) => {
                        if p.t.is_none() {
                            p.t = Some(10.0);
                        }
                    }
                    _ => return Err(invalid("params", "kappa and T must be given together")),
                }
                if p.t.unwrap() < 0.0 {
                    return Err(invalid("params.t", "must be non-negative"));
                }
                if *p.realizations.get_or_insert(100) == 0 {
                    return Err(invalid("params.realizations", "must be at least 1"));
                }
                p.residual_target.get_or_insert(1e-12);
            }
            Command::Limit => {
                positive("params.T", *p.big_t.get_or_insert(1.0))?;
                positive("params.sigma", *p.sigma.get_or_insert(1.0 / 3.0))?;
                p.quadrature_nodes.get_or_insert(bandlab::limit::DEFAULT_NODES);
                let g = p.grid.get_or_insert(Grid { min: -4.0, max: 4.0, points: 161 });
                if g.points < 2 || !(g.max > g.min) {
                    return Err(invalid("params.grid", "need max > min and at least two points"));
                }
                p.phis.get_or_insert_with(|| vec![TestFunction::gaussian()]);
            }
            Command::Diagrams => {
                p.check.get_or_insert(DiagramCheck::Greedy);
                let m = *p.max_edges.get_or_insert(10);
                if m < 2 || m > 12 || m % 2 == 1 {
                    return Err(invalid("params.max_edges", "must be even and between 2 and 12"));
                }
            }
            Command::Edge => {
                positive("params.epsilon", *p.epsilon.get_or_insert(0.2))?;
                if *p.trials.get_or_insert(50) == 0 {
                    return Err(invalid("params.trials", "must be at least 1"));
                }
                p.rel_tol.get_or_insert(bandlab::spectral::DEFAULT_REL_TOL);
                if p.m.is_some() {
                    let e = self.ensemble.as_ref().unwrap();
                    if e.n != p.m.unwrap() || e.w != e.n || e.d != 1 {
                        return Err(invalid("params.M", "sets a Wigner ensemble; drop it or the ensemble block"));
                    }
                }
            }
            Command::Verify => {
                p.suite.get_or_insert(Suite::All);
                if *p.n_max.get_or_insert(8) > 8 {
                    return Err(invalid("params.n_max", "path expansion check is capped at 8"));
                }
                if *p.seeds.get_or_insert(20) == 0 {
                    return Err(invalid("params.seeds", "must be at least 1"));
                }
            }
        }
        if let Some(e) = &self.ensemble {
            e.build().map_err(CliError::from)?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const COMMANDS: [Command; 7] = [
        Command::Gen,
        Command::Evolve,
        Command::Diffusion,
        Command::Limit,
        Command::Diagrams,
        Command::Edge,
        Command::Verify,
    ];

    #[test]
    fn resolved_defaults_validate_and_are_idempotent() {
        for c in COMMANDS {
            let cfg = RunConfig::new(c).resolve().unwrap();
            assert_eq!(cfg.clone().resolve().unwrap(), cfg, "{c:?}");
        }
    }

    #[test]
    fn kappa_without_time_is_rejected() {
        let mut cfg = RunConfig::new(Command::Diffusion);
        cfg.params.kappa = Some(0.2);
        assert_eq!(cfg.resolve().unwrap_err().exit_code(), 1);
    }

    proptest! {
        #[test]
        fn resolved_config_round_trips(seed in any::<u64>(), k in 0usize..7, w in 1usize..20) {
            let c = COMMANDS[k];
            let mut cfg = RunConfig::new(c);
            cfg.seed = seed;
            if let Some(mut e) = cfg.default_ensemble() {
                e.w = w.min(e.n);
                cfg.ensemble = Some(e);
            }
            let cfg = cfg.resolve().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            let back: RunConfig = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }
}
