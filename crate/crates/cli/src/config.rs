//! Project configuration: one JSON document describing the subsystems,
//! certificates, coupling, specification, policy and simulation settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use stochabs::certificates::StorageCertificate;
use stochabs::composition::AlphaMode;
use stochabs::matlib::Matrix;
use stochabs::montecarlo::AbstractPolicy;
use stochabs::speclang::LabeledPartition;
use stochabs::systems::{complete_graph_laplacian, Nonlinearity, SystemModel};

use crate::CliError;

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// A matrix given literally as rows, or by a structured generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Generated(Generator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gen", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    Identity {
        n: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    /// Every entry equal to `value`; `ones` with `value = 1`.
    Filled { rows: usize, cols: usize, value: f64 },
    Zeros { rows: usize, cols: usize },
    /// Row vector with a single one at `index`.
    UnitRow { n: usize, index: usize },
    CompleteGraphLaplacian {
        n: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    BlockDiag { blocks: Vec<MatrixSpec> },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<Matrix, CliError> {
        match self {
            MatrixSpec::Rows(rows) => Ok(Matrix::from_rows(rows).map_err(|e| CliError::Config(e.to_string()))?),
            MatrixSpec::Generated(g) => g.build(),
        }
    }
}

impl Generator {
    pub fn build(&self) -> Result<Matrix, CliError> {
        Ok(match self {
            Generator::Identity { n, scale } => Matrix::identity(*n).scale(*scale),
            Generator::Filled { rows, cols, value } => Matrix::filled(*rows, *cols, *value),
            Generator::Zeros { rows, cols } => Matrix::zeros(*rows, *cols),
            Generator::UnitRow { n, index } => {
                if index >= n {
                    return Err(CliError::Config(format!("unit-row index {index} out of range {n}")));
                }
                Matrix::from_fn(1, *n, |_, j| if j == *index { 1.0 } else { 0.0 })
            }
            Generator::CompleteGraphLaplacian { n, scale } => complete_graph_laplacian(*n)
                .map_err(|e| CliError::Config(e.to_string()))?
                .scale(*scale),
            Generator::BlockDiag { blocks } => {
                let built = blocks.iter().map(MatrixSpec::build).collect::<Result<Vec<_>, _>>()?;
                Matrix::block_diag(built.iter())
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    #[serde(rename = "B")]
    pub b: MatrixSpec,
    #[serde(rename = "C1")]
    pub c1: MatrixSpec,
    #[serde(rename = "C2")]
    pub c2: MatrixSpec,
    #[serde(rename = "D")]
    pub d: MatrixSpec,
    #[serde(rename = "E")]
    pub e: MatrixSpec,
    #[serde(rename = "F")]
    pub f: MatrixSpec,
    #[serde(rename = "R")]
    pub r: MatrixSpec,
    pub phi: Nonlinearity,
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemModel, CliError> {
        SystemModel::new(
            self.a.build()?,
            self.b.build()?,
            self.c1.build()?,
            self.c2.build()?,
            self.d.build()?,
            self.e.build()?,
            self.f.build()?,
            self.r.build()?,
            self.phi.clone(),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    #[serde(rename = "Mtil")]
    pub mtil: MatrixSpec,
    #[serde(rename = "K")]
    pub k: MatrixSpec,
    #[serde(rename = "Q")]
    pub q: MatrixSpec,
    #[serde(rename = "L1")]
    pub l1: MatrixSpec,
    #[serde(rename = "L2")]
    pub l2: MatrixSpec,
    #[serde(rename = "Z")]
    pub z: MatrixSpec,
    #[serde(rename = "G")]
    pub g: MatrixSpec,
    #[serde(rename = "Ghat")]
    pub ghat: MatrixSpec,
    #[serde(rename = "H")]
    pub h: MatrixSpec,
    #[serde(rename = "P")]
    pub p: MatrixSpec,
    #[serde(rename = "Rtil")]
    pub rtil: MatrixSpec,
    #[serde(rename = "Xbar11")]
    pub xbar11: MatrixSpec,
    #[serde(rename = "Xbar12")]
    pub xbar12: MatrixSpec,
    #[serde(rename = "Xbar21")]
    pub xbar21: MatrixSpec,
    #[serde(rename = "Xbar22")]
    pub xbar22: MatrixSpec,
    pub kappa_hat: f64,
    pub k_til: f64,
}

impl CertificateSpec {
    pub fn build(&self) -> Result<StorageCertificate, CliError> {
        Ok(StorageCertificate {
            mtil: self.mtil.build()?,
            k: self.k.build()?,
            q: self.q.build()?,
            l1: self.l1.build()?,
            l2: self.l2.build()?,
            z: self.z.build()?,
            g: self.g.build()?,
            ghat: self.ghat.build()?,
            h: self.h.build()?,
            p: self.p.build()?,
            rtil: self.rtil.build()?,
            xbar11: self.xbar11.build()?,
            xbar12: self.xbar12.build()?,
            xbar21: self.xbar21.build()?,
            xbar22: self.xbar22.build()?,
            kappa_hat: self.kappa_hat,
            k_til: self.k_til,
        })
    }
}

fn count_one() -> usize {
    1
}

/// `count` identical copies of a concrete/abstract/certificate triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemGroup {
    #[serde(default = "count_one")]
    pub count: usize,
    pub concrete: SystemSpec,
    #[serde(rename = "abstract")]
    pub abstraction: SystemSpec,
    pub certificate: CertificateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub formula: String,
    pub labeling: LabeledPartition,
    pub epsilon: f64,
    pub horizon: usize,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.04, 0.1, 0.5, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    pub horizon: usize,
    /// Initial abstract state; the concrete one is `P x̂₀`.
    pub initial_abstract_state: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub name: String,
    pub subsystems: Vec<SubsystemGroup>,
    /// Weights `μᵢ`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(rename = "M")]
    pub coupling: MatrixSpec,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    /// `‖ν̂‖_∞` used in the bound.
    pub nuhat_sup: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<AbstractPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
}

/// Built models, one entry per subsystem.
#[derive(Debug, Clone)]
pub struct Built {
    pub concrete: Vec<SystemModel>,
    pub abstraction: Vec<SystemModel>,
    pub certificates: Vec<StorageCertificate>,
    pub mu: Vec<f64>,
    pub coupling: Matrix,
}

impl ProjectConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ProjectConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn subsystem_count(&self) -> usize {
        self.subsystems.iter().map(|g| g.count).sum()
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = self.subsystem_count();
        if n == 0 {
            return Err(CliError::Config("no subsystems".into()));
        }
        if let Some(mu) = &self.mu {
            if mu.len() != n {
                return Err(CliError::Config(format!("{} weights for {n} subsystems", mu.len())));
            }
        }
        if !(self.tolerance > 0.0) || !(self.nuhat_sup >= 0.0) {
            return Err(CliError::Config("tolerance must be positive and nuhat_sup non-negative".into()));
        }
        if let Some(p) = &self.policy {
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Builds every matrix and cross-checks dimensions.
    pub fn build(&self) -> Result<Built, CliError> {
        let mut b = Built {
            concrete: Vec::new(),
            abstraction: Vec::new(),
            certificates: Vec::new(),
            mu: self.mu.clone().unwrap_or_else(|| vec![1.0; self.subsystem_count()]),
            coupling: self.coupling.build()?,
        };
        for g in &self.subsystems {
            let (c, a, cert) = (g.concrete.build()?, g.abstraction.build()?, g.certificate.build()?);
            if cert.p.shape() != (c.n(), a.n()) {
                return Err(CliError::Config(format!(
                    "certificate P is {}x{}, expected {}x{}",
                    cert.p.rows(),
                    cert.p.cols(),
                    c.n(),
                    a.n()
                )));
            }
            for _ in 0..g.count {
                b.concrete.push(c.clone());
                b.abstraction.push(a.clone());
                b.certificates.push(cert.clone());
            }
        }
        let p: usize = b.concrete.iter().map(SystemModel::p).sum();
        let q2: usize = b.concrete.iter().map(SystemModel::q2).sum();
        if b.coupling.shape() != (p, q2) {
            return Err(CliError::Config(format!(
                "M is {}x{}, expected {p}x{q2}",
                b.coupling.rows(),
                b.coupling.cols()
            )));
        }
        if let Some(sim) = &self.simulation {
            let nhat: usize = b.abstraction.iter().map(SystemModel::n).sum();
            if sim.initial_abstract_state.len() != nhat {
                return Err(CliError::Config(format!(
                    "initial abstract state has {} entries, expected {nhat}",
                    sim.initial_abstract_state.len()
                )));
            }
        }
        Ok(b)
    }
}
