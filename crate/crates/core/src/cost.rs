//! Cost functions: value, gradient and proximal access for one local `f_i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{Matrix, Vector};

pub mod catalog;

pub use catalog::{
    make_consensus_indicator, make_huber, make_least_squares, make_logistic_erm,
    make_quadratic, BoxIndicator, ConsensusIndicator, Huber, LeastSquares, LogisticErm,
    Quadratic, Separable, Zero,
};

/// Gradient-residual target of the generic prox solver.
pub const PROX_INNER_TOL: f64 = 1e-10;
/// Step cap of the generic prox solver.
pub const PROX_INNER_MAX_ITER: usize = 100_000;

/// Closed, convex, proper cost over ℝⁿ.
pub trait CostFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `+∞` outside the domain.
    fn value(&self, x: &Vector) -> f64;

    /// `None` when `f` is not differentiable.
    fn gradient(&self, x: &Vector) -> Option<Vector>;

    /// `argmin_p f(p) + ‖p − y‖²/(2ρ)`.
    ///
    /// The default runs [`prox_numeric`]; catalog costs with a closed form
    /// override it.
    fn prox(&self, y: &Vector, rho: f64) -> Result<Vector> {
        prox_numeric(self, y, rho)
    }

    /// Lipschitz constant λ̄ of the gradient, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Strong-convexity modulus λ_, when known (0 for merely convex).
    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    /// A known minimizer, for tests and reference solutions.
    fn minimizer(&self) -> Option<Vector> {
        None
    }

    /// `(P, q)` such that `f(x) = ½xᵀPx + qᵀx + const`, for quadratic costs.
    fn as_quadratic(&self) -> Option<(Matrix, Vector)> {
        None
    }
}

pub type SharedCost = Arc<dyn CostFunction>;

/// Outcome of [`minimize_smooth`].
#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vector,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Gradient descent to `‖∇φ‖ ≤ tol`.
///
/// With `curvature = Some((L, μ))` the fixed step `2/(L + μ)` is used;
/// otherwise Armijo backtracking on `value`.
pub fn minimize_smooth(
    value: impl Fn(&Vector) -> f64,
    gradient: impl Fn(&Vector) -> Vector,
    x0: Vector,
    curvature: Option<(f64, f64)>,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    let mut x = x0;
    let mut g = gradient(&x);
    let mut step = match curvature {
        Some((l, mu)) if l + mu > 0.0 => 2.0 / (l + mu),
        _ => 1.0,
    };
    for it in 0..max_iter {
        let gn = g.norm();
        if !gn.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        if gn <= tol {
            return Ok(Minimum {
                point: x,
                gradient_norm: gn,
                iterations: it,
            });
        }
        if curvature.is_some() {
            x -= &g * step;
        } else {
            let fx = value(&x);
            let g2 = gn * gn;
            // grow back a little each step so a tiny early step is not permanent
            step *= 2.0;
            loop {
                let trial = &x - &g * step;
                let ft = value(&trial);
                if ft <= fx - 0.5 * step * g2 || step < 1e-20 {
                    x = trial;
                    break;
                }
                step *= 0.5;
            }
        }
        g = gradient(&x);
    }
    let gn = g.norm();
    if gn <= tol {
        return Ok(Minimum {
            point: x,
            gradient_norm: gn,
            iterations: max_iter,
        });
    }
    Err(Error::InnerSolver {
        iterations: max_iter,
        residual: gn,
    })
}

/// Generic proximal step: gradient descent on `f(p) + ‖p − y‖²/(2ρ)`.
pub fn prox_numeric<F: CostFunction + ?Sized>(f: &F, y: &Vector, rho: f64) -> Result<Vector> {
    check_prox_args(f.dim(), y, rho)?;
    if f.gradient(y).is_none() {
        return Err(Error::MissingGradient);
    }
    let inv = 1.0 / rho;
    let curvature = f
        .smoothness()
        .map(|l| (l + inv, f.strong_convexity().unwrap_or(0.0) + inv));
    let min = minimize_smooth(
        |p| f.value(p) + 0.5 * inv * (p - y).norm_squared(),
        |p| f.gradient(p).expect("checked above") + (p - y) * inv,
        y.clone(),
        curvature,
        PROX_INNER_TOL,
        PROX_INNER_MAX_ITER,
    )?;
    Ok(min.point)
}

pub(crate) fn check_prox_args(dim: usize, y: &Vector, rho: f64) -> Result<()> {
    if y.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: y.len(),
        });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("{rho} must be positive")));
    }
    Ok(())
}

/// `‖∇f(p) + (p − y)/ρ‖`: optimality residual of a prox output. `None` when
/// `f` has no gradient.
pub fn prox_stationarity(f: &dyn CostFunction, y: &Vector, rho: f64, p: &Vector) -> Option<f64> {
    f.gradient(p).map(|g| (g + (p - y) / rho).norm())
}

/// Central finite-difference gradient, for checking analytic gradients.
pub fn finite_difference_gradient(f: &dyn CostFunction, x: &Vector, h: f64) -> Vector {
    let mut g = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let up = f.value(&probe);
        probe[i] = xi - h;
        let down = f.value(&probe);
        probe[i] = xi;
        g[i] = (up - down) / (2.0 * h);
    }
    g
}
