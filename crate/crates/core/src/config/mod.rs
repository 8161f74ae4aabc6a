//! Run configuration: a flat TOML file, command-line overrides and
//! per-experiment defaults, plus the drivers that execute a configuration.

mod drivers;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::scheme::{PhysicalParams, SolverSettings};
use crate::sparse::{Method, Preconditioner};

pub use drivers::{
    cavity_problem, lid_adjacent_max_speed, lid_layer_interior_speed, run_cavity, run_config,
    run_convergence, run_stir, stir_problem, worker_count, CavityReport, ConvergenceReport, Report,
    ResolutionSummary, StirReport, WORKERS_ENV,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("no experiment given: pass a subcommand or set `experiment = \"convergence\" | \"cavity\" | \"stir\"`")]
    MissingExperiment,
    #[error("config says experiment = {config} but the command line asked for {cli}")]
    ExperimentConflict { config: Experiment, cli: Experiment },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Convergence,
    Cavity,
    Stir,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Convergence => "convergence",
            Experiment::Cavity => "cavity",
            Experiment::Stir => "stir",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = h^(3/2)`.
    HToThreeHalves,
    Fixed(f64),
}

impl DtRule {
    pub fn dt(&self, h: f64) -> f64 {
        match *self {
            DtRule::HToThreeHalves => h.powf(1.5),
            DtRule::Fixed(dt) => dt,
        }
    }
}

/// Which value the two top cavity corners take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LidCorners {
    Lid,
    Wall,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Values of `1/h`, strictly increasing.
    pub resolutions: Vec<usize>,
    pub dt_rule: DtRule,
    pub t_final: f64,
    pub params: PhysicalParams,
    pub solvers: SolverSettings,
    pub output: PathBuf,
    pub snapshot_times: Vec<f64>,
    /// Cavity only: stop once the steady-state residual drops below this.
    pub steady_tolerance: Option<f64>,
    pub lid_corners: LidCorners,
}

impl RunConfig {
    /// Defaults of each experiment family.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = RunConfig {
            experiment,
            resolutions: (1..=7).map(|k| 8 * k).collect(),
            dt_rule: DtRule::HToThreeHalves,
            t_final: 1.0,
            params: PhysicalParams::new(0.1, 0.1, 1.0, 0.1),
            solvers: SolverSettings::default(),
            output: PathBuf::from("out").join(experiment.to_string()),
            snapshot_times: Vec::new(),
            steady_tolerance: None,
            lid_corners: LidCorners::Lid,
        };
        match experiment {
            Experiment::Convergence => base,
            Experiment::Cavity => RunConfig {
                resolutions: vec![80],
                dt_rule: DtRule::Fixed(1e-3),
                t_final: 30.0,
                params: PhysicalParams::new(1.0, 0.1, 0.1, 0.01),
                steady_tolerance: Some(1e-6),
                snapshot_times: vec![30.0],
                ..base
            },
            Experiment::Stir => RunConfig {
                resolutions: vec![32],
                dt_rule: DtRule::Fixed(1e-2),
                t_final: 5.0,
                params: PhysicalParams::new(2.0, 0.1, 0.1, 1.0),
                snapshot_times: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.resolutions.is_empty() {
            return Err(invalid(
                "resolutions",
                "at least one value of 1/h is required",
            ));
        }
        if self.resolutions.contains(&0) {
            return Err(invalid("resolutions", "values of 1/h must be positive"));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "resolutions",
                format!("must be strictly increasing, got {:?}", self.resolutions),
            ));
        }
        if self.experiment == Experiment::Convergence && self.resolutions.len() < 2 {
            return Err(invalid(
                "resolutions",
                "a convergence study needs at least two resolutions",
            ));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid(
                "T",
                format!("must be positive, got {}", self.t_final),
            ));
        }
        if let DtRule::Fixed(dt) = self.dt_rule {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        self.params
            .validate()
            .map_err(|e| invalid("physical parameters", e.to_string()))?;
        for (key, s) in [
            ("solver_tolerance", &self.solvers.symmetric),
            ("solver_tolerance", &self.solvers.nonsymmetric),
        ] {
            s.validate().map_err(|e| invalid(key, e.to_string()))?;
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(invalid(
                "snapshot_times",
                "times must be finite and non-negative",
            ));
        }
        if let Some(tol) = self.steady_tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid(
                    "steady_tolerance",
                    format!("must be positive, got {tol}"),
                ));
            }
        }
        Ok(())
    }
}

/// Keys accepted in a config file. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub resolutions: Option<Vec<usize>>,
    /// `"h_to_3_2"` or `"fixed"`; a bare `dt` implies `"fixed"`.
    pub dt_rule: Option<String>,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub upsilon: Option<f64>,
    pub chi: Option<f64>,
    pub mu: Option<f64>,
    pub kappa: Option<f64>,
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    pub buoyancy_coupling: Option<bool>,
    pub solver_tolerance: Option<f64>,
    pub solver_max_iterations: Option<usize>,
    /// `"bicgstab"` or `"gmres"` for the convection-diffusion systems.
    pub nonsymmetric_method: Option<String>,
    pub gmres_restart: Option<usize>,
    /// `"ilu0"`, `"jacobi"` or `"none"` for the convection-diffusion systems.
    pub nonsymmetric_preconditioner: Option<String>,
    pub out: Option<PathBuf>,
    pub snapshot_times: Option<Vec<f64>>,
    pub steady_tolerance: Option<f64>,
    /// Stirring only: run to the long horizon `T = 50`.
    pub long_horizon: Option<bool>,
    pub lid_corners: Option<LidCorners>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub resolutions: Option<Vec<usize>>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_owned(),
        message: e.to_string(),
    })
}

/// Merge defaults, an optional config file and command-line overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config_str(&text, &p.display().to_string())?
        }
        None => RawConfig::default(),
    };
    resolve(raw, overrides)
}

pub fn resolve(raw: RawConfig, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let experiment = match (raw.experiment, ov.experiment) {
        (Some(c), Some(l)) if c != l => {
            return Err(ConfigError::ExperimentConflict { config: c, cli: l })
        }
        (c, l) => l.or(c).ok_or(ConfigError::MissingExperiment)?,
    };
    let mut cfg = RunConfig::defaults(experiment);
    if let Some(r) = raw.resolutions {
        cfg.resolutions = r;
    }
    cfg.dt_rule = match (raw.dt_rule.as_deref(), raw.dt) {
        (Some("h_to_3_2"), None) => DtRule::HToThreeHalves,
        (Some("h_to_3_2"), Some(_)) => {
            return Err(invalid("dt", "`dt` conflicts with dt_rule = \"h_to_3_2\""))
        }
        (Some("fixed"), Some(dt)) | (None, Some(dt)) => DtRule::Fixed(dt),
        (Some("fixed"), None) => {
            return Err(invalid("dt", "dt_rule = \"fixed\" needs a `dt` value"))
        }
        (Some(other), _) => {
            return Err(invalid(
                "dt_rule",
                format!("expected \"h_to_3_2\" or \"fixed\", got {other:?}"),
            ))
        }
        (None, None) => cfg.dt_rule,
    };
    if let Some(t) = raw.t_final {
        cfg.t_final = t;
    }
    if raw.long_horizon == Some(true) {
        if experiment != Experiment::Stir {
            return Err(invalid(
                "long_horizon",
                "only applies to the stirring experiment",
            ));
        }
        if raw.t_final.is_some() {
            return Err(invalid("long_horizon", "conflicts with an explicit `T`"));
        }
        cfg.t_final = 50.0;
    }
    let p = &mut cfg.params;
    for (slot, v) in [
        (&mut p.upsilon, raw.upsilon),
        (&mut p.chi, raw.chi),
        (&mut p.mu, raw.mu),
        (&mut p.kappa, raw.kappa),
        (&mut p.zeta, raw.zeta),
        (&mut p.eta, raw.eta),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(b) = raw.buoyancy_coupling {
        p.buoyancy_coupling = b;
    }
    if let Some(tol) = raw.solver_tolerance {
        cfg.solvers.symmetric.tolerance = tol;
        cfg.solvers.nonsymmetric.tolerance = tol;
    }
    if let Some(it) = raw.solver_max_iterations {
        cfg.solvers.symmetric.max_iterations = it;
        cfg.solvers.nonsymmetric.max_iterations = it;
    }
    if let Some(m) = raw.nonsymmetric_method.as_deref() {
        cfg.solvers.nonsymmetric.method = match m {
            "bicgstab" => Method::BiCgStab,
            "gmres" => Method::Gmres {
                restart: raw.gmres_restart.unwrap_or(50),
            },
            other => {
                return Err(invalid(
                    "nonsymmetric_method",
                    format!("expected \"bicgstab\" or \"gmres\", got {other:?}"),
                ))
            }
        };
    } else if raw.gmres_restart.is_some() {
        return Err(invalid(
            "gmres_restart",
            "only meaningful with nonsymmetric_method = \"gmres\"",
        ));
    }
    if let Some(pc) = raw.nonsymmetric_preconditioner.as_deref() {
        cfg.solvers.nonsymmetric.preconditioner = match pc {
            "ilu0" => Preconditioner::Ilu0,
            "jacobi" => Preconditioner::Jacobi,
            "none" => Preconditioner::None,
            other => {
                return Err(invalid(
                    "nonsymmetric_preconditioner",
                    format!("expected \"ilu0\", \"jacobi\" or \"none\", got {other:?}"),
                ))
            }
        };
    }
    if let Some(o) = raw.out {
        cfg.output = o;
    }
    if let Some(s) = raw.snapshot_times {
        cfg.snapshot_times = s;
    }
    if let Some(s) = raw.steady_tolerance {
        if experiment != Experiment::Cavity {
            return Err(invalid(
                "steady_tolerance",
                "only applies to the cavity experiment",
            ));
        }
        cfg.steady_tolerance = Some(s);
    }
    if let Some(c) = raw.lid_corners {
        if experiment != Experiment::Cavity {
            return Err(invalid(
                "lid_corners",
                "only applies to the cavity experiment",
            ));
        }
        cfg.lid_corners = c;
    }

    if let Some(r) = &ov.resolutions {
        cfg.resolutions = r.clone();
    }
    if let Some(dt) = ov.dt {
        cfg.dt_rule = DtRule::Fixed(dt);
    }
    if let Some(t) = ov.t_final {
        cfg.t_final = t;
    }
    if let Some(s) = &ov.snapshot_times {
        cfg.snapshot_times = s.clone();
    }
    if let Some(o) = &ov.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}
