//! Discrete-time stochastic control systems with a scalar slope-restricted
//! nonlinearity,
//!
//! ```text
//! x⁺ = A x + E φ(F x) + B ν + D w + R ζ,   y₁ = C₁ x,   y₂ = C₂ x,
//! ```
//!
//! and their interconnection through a static coupling `w = M [y₂₁; …; y₂N]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matlib::{MatError, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("a complete graph needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

fn dim_check(what: &str, got: usize, want: usize) -> Result<(), SystemError> {
    if got == want {
        Ok(())
    } else {
        Err(SystemError::DimensionMismatch(format!(
            "{what} has length {got}, expected {want}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonlinearityKind {
    Zero,
    Sine,
    /// Piecewise-linear interpolation through `(r, φ(r))` points with strictly
    /// increasing abscissae; the end segments are extended linearly.
    CustomTable { points: Vec<(f64, f64)> },
}

/// Scalar nonlinearity with declared sector `[0, b]` after the shift
/// `φ̃(r) = φ(r) − a·r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    /// Upper slope bound `b`; `+∞` is written as `null` in JSON.
    #[serde(with = "inf_as_null")]
    pub slope_bound: f64,
    #[serde(default)]
    pub shift: f64,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self {
            kind: NonlinearityKind::Zero,
            slope_bound: f64::INFINITY,
            shift: 0.0,
        }
    }

    /// `sin` with slope bound 1.
    pub fn sine() -> Self {
        Self {
            kind: NonlinearityKind::Sine,
            slope_bound: 1.0,
            shift: 0.0,
        }
    }

    pub fn table(points: Vec<(f64, f64)>, slope_bound: f64) -> Result<Self, SystemError> {
        let nl = Self {
            kind: NonlinearityKind::CustomTable { points },
            slope_bound,
            shift: 0.0,
        };
        nl.validate()?;
        Ok(nl)
    }

    /// The unshifted `φ(r)`.
    pub fn raw(&self, r: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Sine => r.sin(),
            NonlinearityKind::CustomTable { points } => interpolate(points, r),
        }
    }

    /// The shifted `φ̃(r) = φ(r) − a·r` that enters the dynamics.
    pub fn eval(&self, r: f64) -> f64 {
        self.raw(r) - self.shift * r
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NonlinearityKind::Zero)
    }

    /// Smallest and largest difference quotient of `φ̃` over the real line.
    /// Exact for the built-in kinds and for tables.
    pub fn slope_range(&self) -> (f64, f64) {
        let a = self.shift;
        match &self.kind {
            NonlinearityKind::Zero => (-a, -a),
            NonlinearityKind::Sine => (-1.0 - a, 1.0 - a),
            NonlinearityKind::CustomTable { points } => points
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) - a)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s), hi.max(s))
                }),
        }
    }

    /// Checks the table shape and the declared sector `0 ≤ slope ≤ b`.
    ///
    /// Built-in kinds are not sector-checked: `sin` has slopes in `[−1, 1]`,
    /// and the caller is expected to pick a shift if the certificate relies on
    /// the nonlinearity.
    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.slope_bound > 0.0) {
            return Err(SystemError::InvalidNonlinearity(format!(
                "slope bound must be positive, got {}",
                self.slope_bound
            )));
        }
        if let NonlinearityKind::CustomTable { points } = &self.kind {
            if points.len() < 2 {
                return Err(SystemError::InvalidNonlinearity(
                    "a table needs at least two points".into(),
                ));
            }
            if points.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
                return Err(SystemError::InvalidNonlinearity(
                    "table entries must be finite".into(),
                ));
            }
            if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(SystemError::InvalidNonlinearity(
                    "table abscissae must be strictly increasing".into(),
                ));
            }
            let (lo, hi) = self.slope_range();
            let tol = 1e-12 * 1f64.max(hi.abs());
            if lo < -tol || hi > self.slope_bound + tol {
                return Err(SystemError::InvalidNonlinearity(format!(
                    "table slopes lie in [{lo}, {hi}], outside the declared sector [0, {}]",
                    self.slope_bound
                )));
            }
        }
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], r: f64) -> f64 {
    let k = points.partition_point(|p| p.0 <= r);
    let seg = k.clamp(1, points.len() - 1);
    let (r0, v0) = points[seg - 1];
    let (r1, v1) = points[seg];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSystemModel {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    #[serde(rename = "C1")]
    c1: Matrix,
    #[serde(rename = "C2")]
    c2: Matrix,
    #[serde(rename = "D")]
    d: Matrix,
    #[serde(rename = "E")]
    e: Matrix,
    #[serde(rename = "F")]
    f: Matrix,
    #[serde(rename = "R")]
    r: Matrix,
    phi: Nonlinearity,
}

/// One subsystem `(A, B, C₁, C₂, D, E, F, R, φ)`.
///
/// `E` is `n×1` and `F` is `1×n`; linear systems use the zero nonlinearity
/// with `E = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystemModel", into = "RawSystemModel")]
pub struct SystemModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub d: Matrix,
    pub e: Matrix,
    pub f: Matrix,
    pub r: Matrix,
    pub phi: Nonlinearity,
}

impl TryFrom<RawSystemModel> for SystemModel {
    type Error = SystemError;
    fn try_from(raw: RawSystemModel) -> Result<Self, SystemError> {
        SystemModel::new(
            raw.a, raw.b, raw.c1, raw.c2, raw.d, raw.e, raw.f, raw.r, raw.phi,
        )
    }
}

impl From<SystemModel> for RawSystemModel {
    fn from(m: SystemModel) -> Self {
        RawSystemModel {
            a: m.a,
            b: m.b,
            c1: m.c1,
            c2: m.c2,
            d: m.d,
            e: m.e,
            f: m.f,
            r: m.r,
            phi: m.phi,
        }
    }
}

impl SystemModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix,
        b: Matrix,
        c1: Matrix,
        c2: Matrix,
        d: Matrix,
        e: Matrix,
        f: Matrix,
        r: Matrix,
        phi: Nonlinearity,
    ) -> Result<Self, SystemError> {
        let n = a.rows();
        let expect = |name: &str, m: &Matrix, rows: Option<usize>, cols: Option<usize>| {
            let ok = rows.is_none_or(|r| m.rows() == r) && cols.is_none_or(|c| m.cols() == c);
            if ok {
                Ok(())
            } else {
                Err(SystemError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    rows.map_or("*".into(), |r| r.to_string()),
                    cols.map_or("*".into(), |c| c.to_string()),
                )))
            }
        };
        expect("A", &a, Some(n), Some(n))?;
        expect("B", &b, Some(n), None)?;
        expect("C1", &c1, None, Some(n))?;
        expect("C2", &c2, None, Some(n))?;
        expect("D", &d, Some(n), None)?;
        expect("E", &e, Some(n), Some(1))?;
        expect("F", &f, Some(1), Some(n))?;
        expect("R", &r, Some(n), None)?;
        phi.validate()?;
        Ok(Self {
            a,
            b,
            c1,
            c2,
            d,
            e,
            f,
            r,
            phi,
        })
    }

    /// Linear system `(A, B, C₁, C₂, D, R)` with `E = 0`, `F = 0`.
    pub fn linear(
        a: Matrix,
        b: Matrix,
        c1: Matrix,
        c2: Matrix,
        d: Matrix,
        r: Matrix,
    ) -> Result<Self, SystemError> {
        let n = a.rows();
        Self::new(
            a,
            b,
            c1,
            c2,
            d,
            Matrix::zeros(n, 1),
            Matrix::zeros(1, n),
            r,
            Nonlinearity::zero(),
        )
    }

    /// Rewrites the model for `φ̃(r) = φ(r) − a·r` and `Ã = A + a E F`, which
    /// leaves the dynamics unchanged.
    pub fn with_sector_shift(&self, a: f64) -> Result<Self, SystemError> {
        let mut out = self.clone();
        let delta = a - self.phi.shift;
        out.a = &self.a + &(&self.e * &self.f).scale(delta);
        out.phi.shift = a;
        out.phi.validate()?;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// External input dimension.
    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Internal input dimension.
    pub fn p(&self) -> usize {
        self.d.cols()
    }

    pub fn q1(&self) -> usize {
        self.c1.rows()
    }

    pub fn q2(&self) -> usize {
        self.c2.rows()
    }

    pub fn noise_dim(&self) -> usize {
        self.r.cols()
    }

    /// `φ̃(F x)`.
    pub fn phi_at(&self, x: &[f64]) -> Result<f64, SystemError> {
        let fx = self.f.mul_vec(x)?;
        Ok(self.phi.eval(fx[0]))
    }

    /// `A x + E φ̃(F x) + B ν + D w + R ζ`.
    pub fn step(
        &self,
        x: &[f64],
        nu: &[f64],
        w: &[f64],
        zeta: &[f64],
    ) -> Result<Vec<f64>, SystemError> {
        dim_check("x", x.len(), self.n())?;
        dim_check("nu", nu.len(), self.m())?;
        dim_check("w", w.len(), self.p())?;
        dim_check("zeta", zeta.len(), self.noise_dim())?;
        let mut next = self.a.mul_vec(x)?;
        let phi = self.phi_at(x)?;
        let terms = [
            self.b.mul_vec(nu)?,
            self.d.mul_vec(w)?,
            self.r.mul_vec(zeta)?,
        ];
        for i in 0..next.len() {
            next[i] += self.e[(i, 0)] * phi + terms[0][i] + terms[1][i] + terms[2][i];
        }
        Ok(next)
    }

    /// `(C₁ x, C₂ x)`.
    pub fn outputs(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SystemError> {
        dim_check("x", x.len(), self.n())?;
        Ok((self.c1.mul_vec(x)?, self.c2.mul_vec(x)?))
    }
}

/// Subsystems coupled by `[w₁; …; w_N] = M [C₂₁x₁; …; C₂N x_N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub subsystems: Vec<SystemModel>,
    #[serde(rename = "M")]
    pub coupling: Matrix,
}

/// Start offsets of consecutive blocks of the given sizes, plus the total.
pub fn offsets(sizes: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for s in sizes {
        out.push(out.last().unwrap() + s);
    }
    out
}

impl Network {
    pub fn new(subsystems: Vec<SystemModel>, coupling: Matrix) -> Result<Self, SystemError> {
        let p: usize = subsystems.iter().map(SystemModel::p).sum();
        let q2: usize = subsystems.iter().map(SystemModel::q2).sum();
        if coupling.shape() != (p, q2) {
            return Err(SystemError::DimensionMismatch(format!(
                "coupling is {}x{}, expected {p}x{q2}",
                coupling.rows(),
                coupling.cols()
            )));
        }
        Ok(Self {
            subsystems,
            coupling,
        })
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn state_offsets(&self) -> Vec<usize> {
        offsets(self.subsystems.iter().map(SystemModel::n))
    }

    pub fn input_offsets(&self) -> Vec<usize> {
        offsets(self.subsystems.iter().map(SystemModel::m))
    }

    pub fn noise_offsets(&self) -> Vec<usize> {
        offsets(self.subsystems.iter().map(SystemModel::noise_dim))
    }

    pub fn internal_offsets(&self) -> Vec<usize> {
        offsets(self.subsystems.iter().map(SystemModel::p))
    }

    pub fn n(&self) -> usize {
        *self.state_offsets().last().unwrap()
    }

    pub fn m(&self) -> usize {
        *self.input_offsets().last().unwrap()
    }

    pub fn noise_dim(&self) -> usize {
        *self.noise_offsets().last().unwrap()
    }

    /// Stacked internal outputs `[C₂ᵢ xᵢ]`.
    pub fn internal_outputs(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        dim_check("stacked x", x.len(), self.n())?;
        let xo = self.state_offsets();
        let mut y2 = Vec::new();
        for (i, s) in self.subsystems.iter().enumerate() {
            y2.extend(s.c2.mul_vec(&x[xo[i]..xo[i + 1]])?);
        }
        Ok(y2)
    }

    /// Stacked external outputs `[C₁ᵢ xᵢ]`.
    pub fn external_outputs(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        dim_check("stacked x", x.len(), self.n())?;
        let xo = self.state_offsets();
        let mut y1 = Vec::new();
        for (i, s) in self.subsystems.iter().enumerate() {
            y1.extend(s.c1.mul_vec(&x[xo[i]..xo[i + 1]])?);
        }
        Ok(y1)
    }

    /// Closed-loop internal inputs `w = M y₂`.
    pub fn internal_inputs(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        Ok(self.coupling.mul_vec(&self.internal_outputs(x)?)?)
    }

    pub fn step(&self, x: &[f64], nu: &[f64], zeta: &[f64]) -> Result<Vec<f64>, SystemError> {
        dim_check("stacked nu", nu.len(), self.m())?;
        dim_check("stacked zeta", zeta.len(), self.noise_dim())?;
        let w = self.internal_inputs(x)?;
        let (xo, uo, zo, wo) = (
            self.state_offsets(),
            self.input_offsets(),
            self.noise_offsets(),
            self.internal_offsets(),
        );
        let mut next = Vec::with_capacity(x.len());
        for (i, s) in self.subsystems.iter().enumerate() {
            next.extend(s.step(
                &x[xo[i]..xo[i + 1]],
                &nu[uo[i]..uo[i + 1]],
                &w[wo[i]..wo[i + 1]],
                &zeta[zo[i]..zo[i + 1]],
            )?);
        }
        Ok(next)
    }
}

/// Free-function form of [`Network::step`].
pub fn network_step(
    net: &Network,
    x: &[f64],
    nu: &[f64],
    zeta: &[f64],
) -> Result<Vec<f64>, SystemError> {
    net.step(x, nu, zeta)
}

/// `L = n I − J` for the complete graph on `n` nodes.
pub fn complete_graph_laplacian(n: usize) -> Result<Matrix, SystemError> {
    if n < 2 {
        return Err(SystemError::TooSmall(n));
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        if i == j {
            n as f64 - 1.0
        } else {
            -1.0
        }
    }))
}
