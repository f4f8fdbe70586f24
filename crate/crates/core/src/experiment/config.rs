//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!(
                        "`{s}` is not one of {}",
                        $name::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(ProblemKind {
    Quadratic => "quadratic",
    LeastSquares => "least_squares",
    Huber => "huber",
    Logistic => "logistic",
});

keyword_enum!(GraphKind {
    Ring => "ring",
    Path => "path",
    Complete => "complete",
    Random => "random",
    File => "file",
});

keyword_enum!(WeightKind {
    Metropolis => "metropolis",
    LazyMetropolis => "lazy_metropolis",
});

keyword_enum!(AlgorithmKind {
    Atc => "atc",
    Dgd => "dgd",
    GradientTracking => "gradient_tracking",
    GtPrimalDual => "gt_primal_dual",
    Admm => "admm",
    ExactPg => "exact_pg",
    LagrangianAdmm => "lagrangian_admm",
});

keyword_enum!(ScheduleKind {
    Constant => "constant",
    Diminishing => "diminishing",
});

impl AlgorithmKind {
    /// Prox-based methods whose penalty defaults to 1 rather than `1/λ̄`.
    pub fn is_admm(&self) -> bool {
        matches!(self, AlgorithmKind::Admm | AlgorithmKind::LagrangianAdmm)
    }
}

/// Every key, in echo order.
pub const KEYS: &[&str] = &[
    "problem.kind",
    "problem.dim",
    "problem.centers",
    "problem.curvature",
    "problem.delta",
    "problem.samples",
    "problem.reg",
    "problem.data",
    "problem.seed",
    "graph.kind",
    "graph.n",
    "graph.p",
    "graph.seed",
    "graph.path",
    "graph.weights",
    "algorithm",
    "algo.rho",
    "algo.rho_scale",
    "algo.alpha",
    "algo.schedule",
    "algo.rho0",
    "algo.gamma",
    "sim.p_act",
    "sim.p_loss",
    "sim.quant_step",
    "sim.seed",
    "sim.max_iter",
    "sim.tol",
];

/// A complete experiment description. Optional fields left empty are
/// generated (centers, curvature) or derived (ρ from `1/λ̄`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem_kind: ProblemKind,
    pub dim: usize,
    pub centers: Option<Vec<f64>>,
    pub curvature: Option<Vec<f64>>,
    pub delta: f64,
    pub samples: usize,
    pub reg: f64,
    pub data: Option<PathBuf>,
    pub problem_seed: u64,

    pub graph_kind: GraphKind,
    pub n: usize,
    pub p: f64,
    pub graph_seed: u64,
    pub graph_path: Option<PathBuf>,
    pub weights: WeightKind,

    pub algorithm: AlgorithmKind,
    pub rho: Option<f64>,
    pub rho_scale: f64,
    pub alpha: f64,
    pub schedule: ScheduleKind,
    pub rho0: Option<f64>,
    pub gamma: f64,

    pub p_act: f64,
    pub p_loss: f64,
    pub quant_step: f64,
    pub sim_seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem_kind: ProblemKind::Quadratic,
            dim: 1,
            centers: None,
            curvature: None,
            delta: 1.0,
            samples: 5,
            reg: 0.1,
            data: None,
            problem_seed: 0,
            graph_kind: GraphKind::Path,
            n: 3,
            p: 0.5,
            graph_seed: 0,
            graph_path: None,
            weights: WeightKind::Metropolis,
            algorithm: AlgorithmKind::Admm,
            rho: None,
            rho_scale: 1.0,
            alpha: 0.5,
            schedule: ScheduleKind::Constant,
            rho0: None,
            gamma: 1.0,
            p_act: 1.0,
            p_loss: 0.0,
            quant_step: 0.0,
            sim_seed: 0,
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::invalid(key, reason)
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(key, format!("`{value}` is not a valid number")))
}

fn keyword<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|e: String| bad(key, e))
}

fn optional<T>(value: &str, parse: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse(value).map(Some)
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| number(key, s.trim()))
        .collect()
}

fn show_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults. Later lines win.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected `key = value`, found `{line}`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Reads a config file. Relative `problem.data` and `graph.path` entries
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data, &mut self.graph_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem.kind" => self.problem_kind = keyword(key, value)?,
            "problem.dim" => self.dim = number(key, value)?,
            "problem.centers" => self.centers = optional(value, |v| list(key, v))?,
            "problem.curvature" => self.curvature = optional(value, |v| list(key, v))?,
            "problem.delta" => self.delta = number(key, value)?,
            "problem.samples" => self.samples = number(key, value)?,
            "problem.reg" => self.reg = number(key, value)?,
            "problem.data" => self.data = optional(value, |v| Ok(PathBuf::from(v)))?,
            "problem.seed" => self.problem_seed = number(key, value)?,
            "graph.kind" => self.graph_kind = keyword(key, value)?,
            "graph.n" => self.n = number(key, value)?,
            "graph.p" => self.p = number(key, value)?,
            "graph.seed" => self.graph_seed = number(key, value)?,
            "graph.path" => self.graph_path = optional(value, |v| Ok(PathBuf::from(v)))?,
            "graph.weights" => self.weights = keyword(key, value)?,
            "algorithm" => self.algorithm = keyword(key, value)?,
            "algo.rho" => self.rho = optional(value, |v| number(key, v))?,
            "algo.rho_scale" => self.rho_scale = number(key, value)?,
            "algo.alpha" => self.alpha = number(key, value)?,
            "algo.schedule" => self.schedule = keyword(key, value)?,
            "algo.rho0" => self.rho0 = optional(value, |v| number(key, v))?,
            "algo.gamma" => self.gamma = number(key, value)?,
            "sim.p_act" => self.p_act = number(key, value)?,
            "sim.p_loss" => self.p_loss = number(key, value)?,
            "sim.quant_step" => self.quant_step = number(key, value)?,
            "sim.seed" => self.sim_seed = number(key, value)?,
            "sim.max_iter" => self.max_iter = number(key, value)?,
            "sim.tol" => self.tol = number(key, value)?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// Text form of one key, as accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "problem.kind" => self.problem_kind.to_string(),
            "problem.dim" => self.dim.to_string(),
            "problem.centers" => self.centers.as_deref().map(show_list).unwrap_or_default(),
            "problem.curvature" => self.curvature.as_deref().map(show_list).unwrap_or_default(),
            "problem.delta" => self.delta.to_string(),
            "problem.samples" => self.samples.to_string(),
            "problem.reg" => self.reg.to_string(),
            "problem.data" => self.data.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "problem.seed" => self.problem_seed.to_string(),
            "graph.kind" => self.graph_kind.to_string(),
            "graph.n" => self.n.to_string(),
            "graph.p" => self.p.to_string(),
            "graph.seed" => self.graph_seed.to_string(),
            "graph.path" => self
                .graph_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "graph.weights" => self.weights.to_string(),
            "algorithm" => self.algorithm.to_string(),
            "algo.rho" => show_opt(&self.rho),
            "algo.rho_scale" => self.rho_scale.to_string(),
            "algo.alpha" => self.alpha.to_string(),
            "algo.schedule" => self.schedule.to_string(),
            "algo.rho0" => show_opt(&self.rho0),
            "algo.gamma" => self.gamma.to_string(),
            "sim.p_act" => self.p_act.to_string(),
            "sim.p_loss" => self.p_loss.to_string(),
            "sim.quant_step" => self.quant_step.to_string(),
            "sim.seed" => self.sim_seed.to_string(),
            "sim.max_iter" => self.max_iter.to_string(),
            "sim.tol" => self.tol.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Every key with its value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| (k, self.get(k).expect("known key")))
            .collect()
    }

    /// Config text that parses back to `self`.
    pub fn to_cfg_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| if v.is_empty() { format!("{k} =\n") } else { format!("{k} = {v}\n") })
            .collect()
    }

    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(key, format!("{v} must be positive")))
            }
        };
        if self.dim == 0 {
            return Err(bad("problem.dim", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(bad("graph.n", "must be at least 1"));
        }
        if self.algorithm.is_admm() && self.n < 2 {
            return Err(bad("graph.n", "ADMM needs at least two agents"));
        }
        if let Some(c) = &self.centers {
            if c.len() != self.n * self.dim {
                return Err(bad(
                    "problem.centers",
                    format!("expected {} values (graph.n × problem.dim), found {}", self.n * self.dim, c.len()),
                ));
            }
        }
        if let Some(c) = &self.curvature {
            if ![1, self.n, self.n * self.dim].contains(&c.len()) {
                return Err(bad(
                    "problem.curvature",
                    format!("expected 1, {} or {} values, found {}", self.n, self.n * self.dim, c.len()),
                ));
            }
            if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(bad("problem.curvature", "values must be positive"));
            }
        }
        positive("problem.delta", self.delta)?;
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return Err(bad("problem.reg", format!("{} must be non-negative", self.reg)));
        }
        if self.samples == 0 {
            return Err(bad("problem.samples", "must be at least 1"));
        }
        if let Some(d) = &self.data {
            if self.problem_kind != ProblemKind::Logistic {
                return Err(bad("problem.data", "a data file is only used by problem.kind = logistic"));
            }
            if !d.is_file() {
                return Err(bad("problem.data", format!("{} does not exist", d.display())));
            }
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(bad("graph.p", format!("{} is not in [0, 1]", self.p)));
        }
        match (&self.graph_kind, &self.graph_path) {
            (GraphKind::File, None) => return Err(bad("graph.path", "required when graph.kind = file")),
            (GraphKind::File, Some(p)) if !p.is_file() => {
                return Err(bad("graph.path", format!("{} does not exist", p.display())))
            }
            _ => {}
        }
        if let Some(rho) = self.rho {
            positive("algo.rho", rho)?;
        }
        positive("algo.rho_scale", self.rho_scale)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad("algo.alpha", format!("{} is not in (0, 1]", self.alpha)));
        }
        if let Some(rho0) = self.rho0 {
            positive("algo.rho0", rho0)?;
        }
        if !(self.gamma > 0.5 && self.gamma <= 1.0) {
            return Err(bad("algo.gamma", format!("{} is not in (0.5, 1]", self.gamma)));
        }
        if self.schedule == ScheduleKind::Diminishing && self.algorithm.is_admm() {
            return Err(bad("algo.schedule", "ADMM uses a fixed penalty"));
        }
        if !(self.p_act > 0.0 && self.p_act <= 1.0) {
            return Err(bad("sim.p_act", format!("{} is not in (0, 1]", self.p_act)));
        }
        if !(0.0..1.0).contains(&self.p_loss) {
            return Err(bad("sim.p_loss", format!("{} is not in [0, 1)", self.p_loss)));
        }
        if !(self.quant_step >= 0.0 && self.quant_step.is_finite()) {
            return Err(bad("sim.quant_step", "must be non-negative (0 disables quantization)"));
        }
        if self.max_iter == 0 {
            return Err(bad("sim.max_iter", "must be at least 1"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(bad("sim.tol", "must be non-negative"));
        }
        Ok(())
    }

    pub fn is_perfect_network(&self) -> bool {
        self.p_act == 1.0 && self.p_loss == 0.0 && self.quant_step == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blank_lines() {
        let cfg = ExperimentConfig::parse(
            "# demo\nalgorithm = atc\n\ngraph.kind = ring  # trailing\ngraph.n = 5\nproblem.centers = 1, 2, 3, 4, 5\n",
        )
        .unwrap();
        assert_eq!(cfg.algorithm, AlgorithmKind::Atc);
        assert_eq!(cfg.graph_kind, GraphKind::Ring);
        assert_eq!(cfg.centers.as_deref(), Some(&[1.0, 2.0, 3.0, 4.0, 5.0][..]));
        cfg.validate().unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("algo.rho", "0.25").unwrap();
        cfg.set("problem.curvature", "1.5").unwrap();
        cfg.set("sim.tol", "1e-12").unwrap();
        let back = ExperimentConfig::parse(&cfg.to_cfg_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::parse(&ExperimentConfig::default().to_cfg_string()).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn errors_name_the_key() {
        let err = ExperimentConfig::parse("algo.alpha = 1.5").unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        let err = ExperimentConfig::parse("graph.n = three").unwrap_err();
        assert!(err.to_string().contains("graph.n"), "{err}");
        let err = ExperimentConfig::parse("algorithm = sgd").unwrap_err();
        assert!(err.to_string().contains("algorithm"), "{err}");
        let err = ExperimentConfig::parse("nonsense = 1").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
        assert!(ExperimentConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn cross_field_checks() {
        let cfg = ExperimentConfig::parse("graph.n = 4\nproblem.centers = 1, 2").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("problem.centers"));
        let cfg = ExperimentConfig::parse("graph.kind = file").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("graph.path"));
        let cfg = ExperimentConfig::parse("algorithm = admm\nalgo.schedule = diminishing").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_key_is_settable_and_gettable() {
        let cfg = ExperimentConfig::default();
        for key in KEYS {
            let v = cfg.get(key).unwrap();
            ExperimentConfig::default().set(key, &v).unwrap();
        }
    }
}
