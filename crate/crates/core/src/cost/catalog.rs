//! Test costs with closed-form proxes where they exist.

use std::sync::Arc;

use nalgebra::SymmetricEigen;

use super::{check_prox_args, CostFunction, SharedCost};
use crate::error::{Error, Result};
use crate::operator::{Matrix, Vector};

const PSD_TOL: f64 = 1e-12;

fn symmetric_eigenvalues(p: &Matrix) -> Vector {
    SymmetricEigen::new(p.clone()).eigenvalues
}

/// `f(x) = ½xᵀPx + qᵀx + c` with `P` symmetric PSD.
#[derive(Debug, Clone)]
pub struct Quadratic {
    p: Matrix,
    q: Vector,
    c: f64,
    lambda_max: f64,
    lambda_min: f64,
}

impl Quadratic {
    pub fn new(p: Matrix, q: Vector, c: f64) -> Result<Self> {
        if !p.is_square() || p.nrows() != q.len() || q.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: p.nrows(),
                got: q.len(),
            });
        }
        if (&p - p.transpose()).amax() > 1e-12 * (1.0 + p.amax()) {
            return Err(Error::invalid("P", "quadratic matrix must be symmetric"));
        }
        let eig = symmetric_eigenvalues(&p);
        let lambda_min = eig.min();
        if lambda_min < -PSD_TOL * (1.0 + p.amax()) {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: lambda_min,
            });
        }
        Ok(Quadratic {
            lambda_max: eig.max().max(0.0),
            lambda_min: lambda_min.max(0.0),
            p,
            q,
            c,
        })
    }

    /// `½(x − a)ᵀD(x − a)` with `D = diag(curvature)`.
    pub fn centered(curvature: &Vector, center: &Vector) -> Result<Self> {
        if curvature.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: curvature.len(),
            });
        }
        let d = Matrix::from_diagonal(curvature);
        let q = -(&d * center);
        let c = 0.5 * center.dot(&(&d * center));
        Quadratic::new(d, q, c)
    }

    /// Scalar `½λ(x − a)²`.
    pub fn scalar(lambda: f64, center: f64) -> Result<Self> {
        Quadratic::centered(
            &Vector::from_element(1, lambda),
            &Vector::from_element(1, center),
        )
    }

    pub fn hessian(&self) -> &Matrix {
        &self.p
    }

    pub fn linear_term(&self) -> &Vector {
        &self.q
    }
}

impl CostFunction for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x) + self.c
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(&self.p * x + &self.q)
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim(), y, rho)?;
        // (P + I/ρ) p = y/ρ − q
        let n = self.dim();
        let lhs = &self.p + Matrix::identity(n, n) / rho;
        let rhs = y / rho - &self.q;
        lhs.cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or_else(|| Error::invalid("P", "P + I/rho is not positive definite"))
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.lambda_max)
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.lambda_min)
    }

    fn minimizer(&self) -> Option<Vector> {
        if self.lambda_min <= 0.0 {
            return None;
        }
        self.p.clone().cholesky().map(|ch| ch.solve(&(-&self.q)))
    }

    fn as_quadratic(&self) -> Option<(Matrix, Vector)> {
        Some((self.p.clone(), self.q.clone()))
    }
}

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    inner: Quadratic,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let at = a.transpose();
        let mut p = &at * &a;
        // exact symmetry for the eigen-solver
        p = (&p + p.transpose()) * 0.5;
        let q = -(&at * &b);
        let inner = Quadratic::new(p, q, 0.5 * b.norm_squared())?;
        Ok(LeastSquares { a, b, inner })
    }
}

impl CostFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(self.a.transpose() * (&self.a * x - &self.b))
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        self.inner.prox(y, rho)
    }

    fn smoothness(&self) -> Option<f64> {
        self.inner.smoothness()
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.inner.strong_convexity()
    }

    fn minimizer(&self) -> Option<Vector> {
        self.inner.minimizer()
    }

    fn as_quadratic(&self) -> Option<(Matrix, Vector)> {
        self.inner.as_quadratic()
    }
}

/// Componentwise Huber loss around `center`:
/// `½t²` for `|t| ≤ δ`, `δ(|t| − δ/2)` otherwise.
#[derive(Debug, Clone)]
pub struct Huber {
    delta: f64,
    center: Vector,
}

pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

impl Huber {
    pub fn new(delta: f64, center: Vector) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", "Huber threshold must be positive"));
        }
        if center.is_empty() {
            return Err(Error::invalid("center", "dimension must be positive"));
        }
        Ok(Huber { delta, center })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn scalar_value(&self, t: f64) -> f64 {
        if t.abs() <= self.delta {
            0.5 * t * t
        } else {
            self.delta * (t.abs() - 0.5 * self.delta)
        }
    }
}

impl CostFunction for Huber {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(self.center.iter())
            .map(|(xi, ci)| self.scalar_value(xi - ci))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        let d = self.delta;
        Some(x.zip_map(&self.center, |xi, ci| (xi - ci).clamp(-d, d)))
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim(), y, rho)?;
        let d = self.delta;
        Ok(y.zip_map(&self.center, |yi, ci| {
            let t = yi - ci;
            let p = if t.abs() <= d * (1.0 + rho) {
                t / (1.0 + rho)
            } else {
                t - rho * d * t.signum()
            };
            p + ci
        }))
    }

    fn smoothness(&self) -> Option<f64> {
        Some(1.0)
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(self.center.clone())
    }
}

/// Regularized logistic empirical risk
/// `(1/m) Σ_h log(1 + exp(−b_h a_hᵀx)) + (reg/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct LogisticErm {
    features: Matrix,
    labels: Vector,
    reg: f64,
    smoothness: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticErm {
    pub fn new(features: Matrix, labels: Vector, reg: f64) -> Result<Self> {
        let m = features.nrows();
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: labels.len(),
            });
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "logistic data must be finite"));
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::invalid("labels", "labels must be +1 or -1"));
        }
        if !(reg >= 0.0 && reg.is_finite()) {
            return Err(Error::invalid("reg", "regularization must be non-negative"));
        }
        let sigma = crate::operator::spectral_norm(&features);
        let smoothness = sigma * sigma / (4.0 * m as f64) + reg;
        Ok(LogisticErm {
            features,
            labels,
            reg,
            smoothness,
        })
    }

    /// Parses a whitespace- or comma-separated numeric matrix; rows are
    /// datapoints and the last column is the ±1 label.
    pub fn parse_data(text: &str) -> Result<(Matrix, Vector)> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: `{s}` is not a number", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() < 2 {
                return Err(Error::Parse(format!(
                    "line {}: need at least one feature and a label",
                    lineno + 1
                )));
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse(format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let cols = rows[0].len() - 1;
        let features = Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
        let labels = Vector::from_iterator(rows.len(), rows.iter().map(|r| r[cols]));
        Ok((features, labels))
    }

    pub fn samples(&self) -> usize {
        self.features.nrows()
    }
}

impl CostFunction for LogisticErm {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let margins = &self.features * x;
        let loss: f64 = margins
            .iter()
            .zip(self.labels.iter())
            .map(|(m, b)| softplus(-b * m))
            .sum();
        loss / self.samples() as f64 + 0.5 * self.reg * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        let margins = &self.features * x;
        let m = self.samples() as f64;
        let weights = margins.zip_map(&self.labels, |mi, b| -b * sigmoid(-b * mi) / m);
        Some(self.features.transpose() * weights + x * self.reg)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.reg)
    }
}

/// Indicator of the consensus set `{x ∈ ℝ^{N·n} : x_1 = … = x_N}`.
#[derive(Debug, Clone)]
pub struct ConsensusIndicator {
    agents: usize,
    block: usize,
}

const CONSENSUS_TOL: f64 = 1e-12;

impl ConsensusIndicator {
    pub fn new(agents: usize, block: usize) -> Result<Self> {
        if agents == 0 || block == 0 {
            return Err(Error::invalid("agents", "need at least one agent and block size 1"));
        }
        Ok(ConsensusIndicator { agents, block })
    }

    /// Block-wise mean, replicated to every agent.
    pub fn project(&self, y: &Vector) -> Vector {
        let n = self.block;
        let mut mean = Vector::zeros(n);
        for i in 0..self.agents {
            mean += y.rows(i * n, n);
        }
        mean /= self.agents as f64;
        Vector::from_fn(self.agents * n, |r, _| mean[r % n])
    }
}

impl CostFunction for ConsensusIndicator {
    fn dim(&self) -> usize {
        self.agents * self.block
    }

    fn value(&self, x: &Vector) -> f64 {
        if (x - self.project(x)).amax() <= CONSENSUS_TOL * (1.0 + x.amax()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim(), y, rho)?;
        Ok(self.project(y))
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Indicator of the box `{lower ≤ x ≤ upper}` (bounds may be infinite).
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    lower: Vector,
    upper: Vector,
}

impl BoxIndicator {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::invalid("bounds", "lower bound exceeds upper bound"));
        }
        Ok(BoxIndicator { lower, upper })
    }

    /// `{x ≤ 0}`.
    pub fn nonpositive(dim: usize) -> Self {
        BoxIndicator {
            lower: Vector::from_element(dim, f64::NEG_INFINITY),
            upper: Vector::zeros(dim),
        }
    }
}

impl CostFunction for BoxIndicator {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(xi, (l, u))| xi >= l && xi <= u);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim(), y, rho)?;
        Ok(Vector::from_fn(y.len(), |i, _| {
            y[i].clamp(self.lower[i], self.upper[i])
        }))
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone)]
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Zero { dim }
    }
}

impl CostFunction for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(x.len()))
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim, y, rho)?;
        Ok(y.clone())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Stacked `f(x) = Σ_i f_i(x_i)` over agent blocks.
#[derive(Debug, Clone)]
pub struct Separable {
    parts: Vec<SharedCost>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Separable {
    pub fn new(parts: Vec<SharedCost>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("parts", "need at least one block"));
        }
        let mut offsets = Vec::with_capacity(parts.len());
        let mut dim = 0;
        for p in &parts {
            offsets.push(dim);
            dim += p.dim();
        }
        Ok(Separable {
            parts,
            offsets,
            dim,
        })
    }

    fn block(&self, i: usize, x: &Vector) -> Vector {
        x.rows(self.offsets[i], self.parts[i].dim()).into_owned()
    }

    fn stack(&self, blocks: impl Iterator<Item = Vector>) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for (i, b) in blocks.enumerate() {
            out.rows_mut(self.offsets[i], b.len()).copy_from(&b);
        }
        out
    }
}

impl CostFunction for Separable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(i, f)| f.value(&self.block(i, x)))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        let grads = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, f)| f.gradient(&self.block(i, x)))
            .collect::<Option<Vec<_>>>()?;
        Some(self.stack(grads.into_iter()))
    }

    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        check_prox_args(self.dim, y, rho)?;
        let blocks = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, f)| f.prox(&self.block(i, y), rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.stack(blocks.into_iter()))
    }

    fn smoothness(&self) -> Option<f64> {
        self.parts
            .iter()
            .map(|f| f.smoothness())
            .try_fold(0.0_f64, |acc, l| l.map(|l| acc.max(l)))
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.parts
            .iter()
            .map(|f| f.strong_convexity())
            .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
    }

    fn minimizer(&self) -> Option<Vector> {
        let mins = self
            .parts
            .iter()
            .map(|f| f.minimizer())
            .collect::<Option<Vec<_>>>()?;
        Some(self.stack(mins.into_iter()))
    }
}

pub fn make_quadratic(p: Matrix, q: Vector) -> Result<SharedCost> {
    Ok(Arc::new(Quadratic::new(p, q, 0.0)?))
}

pub fn make_least_squares(a: Matrix, b: Vector) -> Result<SharedCost> {
    Ok(Arc::new(LeastSquares::new(a, b)?))
}

pub fn make_huber(delta: f64, center: Vector) -> Result<SharedCost> {
    Ok(Arc::new(Huber::new(delta, center)?))
}

pub fn make_logistic_erm(features: Matrix, labels: Vector, reg: f64) -> Result<SharedCost> {
    Ok(Arc::new(LogisticErm::new(features, labels, reg)?))
}

pub fn make_consensus_indicator(agents: usize, block: usize) -> Result<SharedCost> {
    Ok(Arc::new(ConsensusIndicator::new(agents, block)?))
}
