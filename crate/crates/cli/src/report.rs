//! Run reports and their text and JSON renderings.

use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_json::Value;

use stochabs::bounds::Branch;
use stochabs::certificates::{CheckReport, SsfParams};
use stochabs::composition::AlphaMode;
use stochabs::matlib::Matrix;
use stochabs::montecarlo::{Estimate, MartingaleReport};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn fmt12(x: f64) -> String {
    let r = sig12(x);
    if r != 0.0 && r.is_finite() && !(1e-4..1e12).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !n.is_i64() && !n.is_u64() {
                    if let Some(r) = serde_json::Number::from_f64(sig12(f)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub index: usize,
    pub report: CheckReport,
    pub params: Option<SsfParams>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub lmi_lambda_max: f64,
    pub lmi_ok: bool,
    pub mhat: Matrix,
    pub coupling_residual: f64,
    pub coupling_exact: bool,
    pub mode: AlphaMode,
    pub params: SsfParams,
    pub alpha_generic: f64,
    pub alpha_quadratic: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub epsilon: f64,
    pub horizon: usize,
    pub nuhat_sup: f64,
    pub mode: AlphaMode,
    pub delta: f64,
    pub raw_delta: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupErrorRow {
    pub epsilon: f64,
    pub estimate: Estimate,
    /// Bound in the configured mode at the same `ε`.
    pub delta: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub trials: usize,
    pub seed: u64,
    pub horizon: usize,
    pub sup_error: Vec<SupErrorRow>,
    pub sup_error_q90: f64,
    pub max_sup_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecReport {
    pub formula: String,
    pub dfa_locations: usize,
    pub epsilon: f64,
    pub horizon: usize,
    /// Abstract satisfaction under the deflated labeling and absorbing DFA.
    pub p_hat: Estimate,
    pub delta: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Empirical concrete satisfaction, for comparison.
    pub p_concrete: Estimate,
    pub refinement_violations: usize,
}

/// Everything a command produced. Sections a command does not touch stay
/// empty.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub name: String,
    pub certificates: Vec<CertificateEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<CompositionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supermartingale: Option<MartingaleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecReport>,
    pub passed: bool,
}

impl RunReport {
    /// `passed` recomputed from the sections present.
    pub fn evaluate(&mut self) {
        let certs = self.certificates.iter().all(|c| c.report.passed);
        let comp = self
            .composition
            .as_ref()
            .is_none_or(|c| c.lmi_ok && c.coupling_exact);
        let sim = self
            .simulation
            .as_ref()
            .is_none_or(|s| s.sup_error.iter().all(|r| r.within_bound));
        let mart = self.supermartingale.as_ref().is_none_or(|m| m.holds);
        let spec = self.spec.as_ref().is_none_or(|s| s.refinement_violations == 0);
        self.passed = certs && comp && sim && mart && spec;
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    /// Pretty JSON with floats rounded to 12 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_value(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "project: {}", self.name)?;
        for c in &self.certificates {
            writeln!(out, "certificate {}: {}", c.index, if c.report.passed { "pass" } else { "FAIL" })?;
            for r in &c.report.conditions {
                writeln!(
                    out,
                    "  {:<28} residual {:>20}  threshold {:>20}  {}",
                    r.name,
                    fmt12(r.residual),
                    fmt12(r.threshold),
                    if r.passed() { "ok" } else { "FAIL" }
                )?;
            }
            if let Some(p) = &c.params {
                writeln!(
                    out,
                    "  alpha {}  kappa {}  rho {}  psi {}",
                    fmt12(p.alpha_coeff),
                    fmt12(p.kappa_lin),
                    fmt12(p.rho_coeff),
                    fmt12(p.psi)
                )?;
            }
        }
        if let Some(c) = &self.composition {
            writeln!(out, "composition: {}", if c.lmi_ok && c.coupling_exact { "pass" } else { "FAIL" })?;
            writeln!(out, "  lmi lambda_max {}", fmt12(c.lmi_lambda_max))?;
            writeln!(out, "  coupling residual {}  exact {}", fmt12(c.coupling_residual), c.coupling_exact)?;
            writeln!(out, "  Mhat")?;
            for row in c.mhat.to_rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{:>20}", fmt12(*v))).collect();
                writeln!(out, "    {}", cells.join(" "))?;
            }
            let quad = c.alpha_quadratic.map_or("n/a".to_string(), fmt12);
            writeln!(out, "  alpha generic {}  alpha quadratic {}", fmt12(c.alpha_generic), quad)?;
            writeln!(
                out,
                "  kappa {}  rho {}  psi {}",
                fmt12(c.params.kappa_lin),
                fmt12(c.params.rho_coeff),
                fmt12(c.params.psi)
            )?;
        }
        if !self.bounds.is_empty() {
            writeln!(out, "bounds:")?;
            writeln!(out, "  {:>10} {:>8} {:>10} {:>10} {:>20} {:>15}", "epsilon", "horizon", "nuhat_sup", "mode", "delta", "branch")?;
            for b in &self.bounds {
                let mode = match b.mode {
                    AlphaMode::Generic => "generic",
                    AlphaMode::Quadratic => "quadratic",
                };
                let branch = match b.branch {
                    Branch::HighThreshold => "high-threshold",
                    Branch::LowThreshold => "low-threshold",
                    Branch::Infinite => "infinite",
                };
                writeln!(
                    out,
                    "  {:>10} {:>8} {:>10} {:>10} {:>20} {:>15}",
                    fmt12(b.epsilon),
                    b.horizon,
                    fmt12(b.nuhat_sup),
                    mode,
                    fmt12(b.delta),
                    branch
                )?;
            }
        }
        if let Some(s) = &self.simulation {
            writeln!(out, "simulation: {} trials, seed {}, horizon {}", s.trials, s.seed, s.horizon)?;
            for r in &s.sup_error {
                writeln!(
                    out,
                    "  P(sup error >= {}) = {}  CI [{}, {}]  delta {}  {}",
                    fmt12(r.epsilon),
                    fmt12(r.estimate.p),
                    fmt12(r.estimate.ci_low),
                    fmt12(r.estimate.ci_high),
                    fmt12(r.delta),
                    if r.within_bound { "ok" } else { "FAIL" }
                )?;
            }
            writeln!(out, "  90th percentile of sup error {}", fmt12(s.sup_error_q90))?;
            writeln!(out, "  largest sup error {}", fmt12(s.max_sup_error))?;
        }
        if let Some(m) = &self.supermartingale {
            writeln!(
                out,
                "supermartingale: {} probes, min margin {} SE  {}",
                m.probes.len(),
                fmt12(m.min_margin_se),
                if m.holds { "ok" } else { "FAIL" }
            )?;
        }
        if let Some(s) = &self.spec {
            writeln!(out, "specification: {}", s.formula)?;
            writeln!(out, "  dfa locations {}", s.dfa_locations)?;
            writeln!(out, "  abstract satisfaction {}  CI [{}, {}]", fmt12(s.p_hat.p), fmt12(s.p_hat.ci_low), fmt12(s.p_hat.ci_high))?;
            writeln!(out, "  concrete lower bound {}  upper bound {}", fmt12(s.lower_bound), fmt12(s.upper_bound))?;
            writeln!(out, "  empirical concrete satisfaction {}", fmt12(s.p_concrete.p))?;
            writeln!(out, "  refinement violations {}", s.refinement_violations)?;
        }
        writeln!(out, "result: {}", if self.passed { "pass" } else { "FAIL" })?;
        f.write_str(&out)
    }
}
