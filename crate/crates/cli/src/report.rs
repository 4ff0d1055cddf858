//! The run report and its CSV / JSON / text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use gennum::solvers::{BallCheck, Witness};
use gennum::OrderFit;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SolverKind};
use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    /// Held at every sampled point; not a proof.
    SampledPass,
    Fail,
    Undecided,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::SampledPass => "sampled_pass",
            Self::Fail => "fail",
            Self::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub status: VerdictStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerdictEntry {
    pub fn new(status: VerdictStatus) -> Self {
        Self {
            status,
            witness: None,
            detail: None,
        }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Status {
    pub code: i32,
    pub label: &'static str,
}

impl Status {
    pub const OK: Status = Status {
        code: 0,
        label: "ok",
    };
    pub const ERROR: Status = Status {
        code: 1,
        label: "error",
    };
    pub const FAILED: Status = Status {
        code: 2,
        label: "failed",
    };
    pub const UNDECIDED: Status = Status {
        code: 3,
        label: "undecided",
    };

    /// 2 if any verdict failed, else 3 if any is undecided, else 0.
    pub fn from_verdicts(v: &BTreeMap<String, VerdictEntry>) -> Self {
        if v.values().any(|e| e.status == VerdictStatus::Fail) {
            Self::FAILED
        } else if v.values().any(|e| e.status == VerdictStatus::Undecided) {
            Self::UNDECIDED
        } else {
            Self::OK
        }
    }
}

/// One iterate at the representative ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRow {
    pub n: usize,
    /// `values[j][i]`: component `i` at the `j`-th representative ε.
    pub values: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
    pub residual_order: Option<OrderFit>,
}

/// One (iterate, ε) sample; the CSV rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub eps: f64,
    pub rho: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub residual_order: Option<f64>,
}

/// The certificate constants at one tail ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsRow {
    pub eps: f64,
    pub rho: f64,
    pub x0: Vec<f64>,
    pub r: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateTable {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub estimated: bool,
    pub pairs: usize,
    pub seed: u64,
    pub k_fit: Option<OrderFit>,
    pub tail: Vec<ConstantsRow>,
    pub ball_check: Option<BallCheck>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema: &'static str,
    pub config: RunConfig,
    pub solver: SolverKind,
    pub status: Status,
    pub verdicts: BTreeMap<String, VerdictEntry>,
    pub representative_eps: Vec<f64>,
    pub iterates: Vec<IterateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateTable>,
    /// Solver-specific figures (orders, contraction factor, classifications).
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub dim: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    /// Not serialized: it would break run-to-run identity of the JSON.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn new(config: RunConfig, dim: usize) -> Self {
        let solver = config.solver.kind;
        Self {
            schema: SCHEMA_VERSION,
            config,
            solver,
            status: Status::OK,
            verdicts: BTreeMap::new(),
            representative_eps: Vec::new(),
            iterates: Vec::new(),
            certificate: None,
            summary: serde_json::Map::new(),
            notes: Vec::new(),
            dim,
            trace: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn verdict(&mut self, name: &str, entry: VerdictEntry) {
        self.verdicts.insert(name.to_string(), entry);
    }

    pub fn finish(&mut self) {
        self.status = Status::from_verdicts(&self.verdicts);
    }

    /// The residual column name for this solver.
    pub fn residual_column(&self) -> &'static str {
        match self.solver {
            SolverKind::Newton | SolverKind::Certify => "abs_f",
            SolverKind::Classify => "value",
            _ => "abs_g_minus_x",
        }
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["n".to_string(), "eps".into(), "rho".into()];
        if self.solver == SolverKind::Classify {
            h.push("value".into());
            return h;
        }
        h.extend((1..=self.dim).map(|i| format!("x{i}")));
        h.push(self.residual_column().into());
        h.push("resid_order".into());
        h
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the CSV table: header, then one row per (iterate, ε), LF
/// line endings, 17 significant digits.
pub fn write_csv<W: std::io::Write>(report: &SolveReport, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(report.csv_header())?;
    for row in &report.trace {
        let mut rec = vec![row.n.to_string(), num(row.eps), num(row.rho)];
        rec.extend(row.x.iter().map(|v| num(*v)));
        if report.solver != SolverKind::Classify {
            rec.push(num(row.residual));
            rec.push(row.residual_order.map(num).unwrap_or_default());
        }
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

pub fn emit_csv(report: &SolveReport, path: &Path) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

pub fn emit_report(report: &SolveReport, path: &Path) -> Result<(), CliError> {
    let s = report.to_json()?;
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(s.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Human-readable summary for the terminal.
pub fn render_text(report: &SolveReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "solver {:?}: {} (exit {})",
        report.solver, report.status.label, report.status.code
    );
    for (name, v) in &report.verdicts {
        let _ = write!(s, "  {name}: {}", v.status.as_str());
        if let Some(d) = &v.detail {
            let _ = write!(s, " ({d})");
        }
        if let Some(w) = &v.witness {
            let _ = write!(
                s,
                " witness eps={:e} lhs={:e} rhs={:e}",
                w.eps, w.lhs, w.rhs
            );
        }
        s.push('\n');
    }
    if !report.iterates.is_empty() {
        let _ = write!(s, "  {:>3}", "n");
        for e in &report.representative_eps {
            let _ = write!(s, " {:>24}", format!("eps={e:.1e}"));
        }
        let _ = writeln!(s, " {:>10}", "order");
        for row in &report.iterates {
            let _ = write!(s, "  {:>3}", row.n);
            for v in &row.values {
                let _ = write!(s, " {:>24.16e}", v.first().copied().unwrap_or(f64::NAN));
            }
            match &row.residual_order {
                Some(o) => {
                    let _ = writeln!(s, " {:>10.3}", o.exponent);
                }
                None => {
                    let _ = writeln!(s, " {:>10}", "-");
                }
            }
        }
    }
    for (k, v) in &report.summary {
        let _ = writeln!(s, "  {k}: {v}");
    }
    if let Some(c) = &report.certificate {
        for n in &c.notes {
            let _ = writeln!(s, "  note: {n}");
        }
    }
    for n in &report.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    let _ = writeln!(s, "  wall time: {:.3} s", report.wall_time.as_secs_f64());
    s
}
