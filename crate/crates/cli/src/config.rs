//! Run configuration: a TOML file naming the gauge, grid, problem, start
//! point and solver.
//!
//! ```toml
//! gauge = "eps"
//!
//! [problem]
//! builtin = "example1"
//!
//! [start]
//! x0 = ["1 - drho^2"]
//! r = "drho"
//!
//! [solver]
//! kind = "certify"
//! R = 1
//!
//! [solver.constants]
//! M = "2*r"
//! N = "(1 - (x0 + r)^2)/(2*(x0 - r)^2)"
//! k = "(2*r + 1 - (x0 + r)^2)/(2*(x0 - r)^2)"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use gennum::gsf::BUILTINS;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_gauge")]
    pub gauge: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub start: StartConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_gauge() -> String {
    "eps".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub eps_max: f64,
    pub eps_min: f64,
    pub count: usize,
    pub tail_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            eps_max: 0.5,
            eps_min: 1e-9,
            count: 64,
            tail_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// One DSL expression per output component, in `u1..u<dim>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exprs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Named parameters; each is a DSL expression that may use `drho`,
    /// `eps` and other parameters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl ProblemConfig {
    pub fn dom_dim(&self) -> usize {
        match (&self.builtin, self.dim) {
            (Some(_), _) => 1,
            (None, Some(d)) => d,
            (None, None) => self.exprs.as_ref().map_or(0, |e| e.len()),
        }
    }

    pub fn cod_dim(&self) -> usize {
        match &self.exprs {
            Some(e) if self.builtin.is_none() => e.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x0: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Newton,
    Banach,
    Contraction,
    Brouwer,
    Certify,
    Classify,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
    Mp128,
    Mp256,
    #[default]
    Mp512,
    Mp1024,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularMode {
    #[default]
    Abort,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(rename = "M")]
    pub m: String,
    #[serde(rename = "N")]
    pub n: String,
    pub k: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_set: Option<Vec<f64>>,
    /// Orbit length for the contraction check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub force: bool,
    /// Box `[lo, hi]` per coordinate that orbits must stay in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_root: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub big_r: Option<f64>,
    #[serde(default)]
    pub singular: SingularMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_restarts: Option<usize>,
    /// Expressions to classify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exprs: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses a config from TOML text; `path` is only used in messages.
pub fn parse_config(src: &str, path: &Path) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::new(src);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = inner.span().map_or((0, 0), |s| line_col(src, s.start));
        CliError::ConfigParse {
            path: path.to_path_buf(),
            key,
            message: inner.message().to_string(),
            line,
            column,
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let src = String::from_utf8(bytes).map_err(|_| {
        CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, "config is not valid UTF-8"),
        )
    })?;
    parse_config(&src, path)
}

fn check_expr(what: &str, src: &str) -> Result<(), CliError> {
    gennum::parse(src)
        .map(|_| ())
        .map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

impl RunConfig {
    /// Structural checks that need no arithmetic: expressions parse and
    /// dimensions agree.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Validation(m));
        let s = &self.solver;
        if s.kind == SolverKind::Classify {
            match &s.exprs {
                Some(e) if !e.is_empty() => {
                    for (i, src) in e.iter().enumerate() {
                        check_expr(&format!("solver.exprs[{i}]"), src)?;
                    }
                }
                _ => return invalid("classify needs solver.exprs".into()),
            }
            return Ok(());
        }
        let Some(p) = &self.problem else {
            return invalid("missing [problem]".into());
        };
        match (&p.builtin, &p.exprs) {
            (Some(b), None) => {
                if !BUILTINS.contains(&b.as_str()) {
                    return invalid(format!("unknown builtin {b:?}"));
                }
                if p.dim.is_some_and(|d| d != 1) {
                    return invalid(format!("builtin {b:?} has dimension 1"));
                }
            }
            (None, Some(e)) => {
                if e.is_empty() {
                    return invalid("problem.exprs is empty".into());
                }
                for (i, src) in e.iter().enumerate() {
                    check_expr(&format!("problem.exprs[{i}]"), src)?;
                }
            }
            _ => return invalid("set exactly one of problem.builtin and problem.exprs".into()),
        }
        for (name, src) in &p.params {
            check_expr(&format!("problem.params.{name}"), src)?;
        }
        let dim = p.dom_dim();
        if dim == 0 {
            return invalid("problem dimension must be positive".into());
        }
        if p.cod_dim() != dim {
            return invalid(format!(
                "solvers need a map R^{dim} -> R^{dim}, got {} outputs",
                p.cod_dim()
            ));
        }
        let needs_x0 = s.kind != SolverKind::Brouwer || !self.start.x0.is_empty();
        if needs_x0 && self.start.x0.len() != dim {
            return invalid(format!(
                "start.x0 has {} components, problem has dimension {dim}",
                self.start.x0.len()
            ));
        }
        for (i, src) in self.start.x0.iter().enumerate() {
            check_expr(&format!("start.x0[{i}]"), src)?;
        }
        if let Some(r) = &self.start.r {
            check_expr("start.r", r)?;
        }
        if let Some(root) = &s.reference_root {
            if root.len() != dim {
                return invalid(format!(
                    "solver.reference_root has {} components, problem has dimension {dim}",
                    root.len()
                ));
            }
            for (i, src) in root.iter().enumerate() {
                check_expr(&format!("solver.reference_root[{i}]"), src)?;
            }
        }
        if let Some(d) = &s.domain {
            if d.len() != dim {
                return invalid(format!(
                    "solver.domain has {} intervals, problem has dimension {dim}",
                    d.len()
                ));
            }
        }
        match s.kind {
            SolverKind::Certify => {
                if self.start.r.is_none() {
                    return invalid("certify needs start.r".into());
                }
                if let Some(c) = &s.constants {
                    check_expr("solver.constants.M", &c.m)?;
                    check_expr("solver.constants.N", &c.n)?;
                    check_expr("solver.constants.k", &c.k)?;
                }
            }
            SolverKind::Brouwer if dim > 3 => {
                return invalid(format!("brouwer supports dimension <= 3, got {dim}"));
            }
            _ => {}
        }
        Ok(())
    }
}
