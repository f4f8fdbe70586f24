//! Centralized reference solution `x* ∈ argmin Σ_i f_i`.

use std::fmt;

use crate::cost::{minimize_smooth, SharedCost};
use crate::error::{Error, Result};
use crate::operator::{Matrix, Vector};

/// Residual target `‖Σ_i ∇f_i(x*)‖`.
pub const REFERENCE_RESIDUAL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    ClosedForm,
    CentralizedDescent,
}

impl fmt::Display for ReferenceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceMethod::ClosedForm => "closed_form",
            ReferenceMethod::CentralizedDescent => "centralized_descent",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vector,
    pub method: ReferenceMethod,
    pub residual: f64,
}

fn total_gradient(costs: &[SharedCost], x: &Vector) -> Result<Vector> {
    let mut g = Vector::zeros(x.len());
    for c in costs {
        g += c.gradient(x).ok_or(Error::MissingGradient)?;
    }
    Ok(g)
}

/// Solves `Σ_i P_i x = −Σ_i q_i` when every cost is quadratic, otherwise runs
/// gradient descent on the sum (fixed step `2/(L + μ)` when both sums are
/// known and `μ > 0`, backtracking otherwise).
pub fn solve_reference(costs: &[SharedCost]) -> Result<ReferenceSolution> {
    let first = costs
        .first()
        .ok_or_else(|| Error::invalid("costs", "need at least one cost"))?;
    let n = first.dim();

    let quadratics: Option<Vec<(Matrix, Vector)>> = costs.iter().map(|c| c.as_quadratic()).collect();
    if let Some(parts) = quadratics {
        let (p, q) = parts.into_iter().fold(
            (Matrix::zeros(n, n), Vector::zeros(n)),
            |(p, q), (pi, qi)| (p + pi, q + qi),
        );
        let x = match p.clone().cholesky() {
            Some(ch) => ch.solve(&-&q),
            None => p
                .clone()
                .svd(true, true)
                .solve(&-&q, 1e-12)
                .map_err(|e| Error::invalid("problem", e.to_string()))?,
        };
        let residual = (&p * &x + &q).norm();
        if residual <= REFERENCE_RESIDUAL {
            return Ok(ReferenceSolution {
                x,
                method: ReferenceMethod::ClosedForm,
                residual,
            });
        }
    }

    let smooth: Option<f64> = costs.iter().map(|c| c.smoothness()).sum();
    let strong: Option<f64> = costs.iter().map(|c| c.strong_convexity()).sum();
    let curvature = match (smooth, strong) {
        (Some(l), Some(mu)) if mu > 0.0 => Some((l, mu)),
        _ => None,
    };
    // Validate differentiability once so the closures below cannot fail.
    total_gradient(costs, &Vector::zeros(n))?;
    let value = |x: &Vector| costs.iter().map(|c| c.value(x)).sum::<f64>();
    let gradient = |x: &Vector| total_gradient(costs, x).expect("checked above");
    let min = minimize_smooth(
        value,
        gradient,
        Vector::zeros(n),
        curvature,
        REFERENCE_RESIDUAL,
        REFERENCE_MAX_ITER,
    )?;
    Ok(ReferenceSolution {
        x: min.point,
        method: ReferenceMethod::CentralizedDescent,
        residual: min.gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{Huber, LogisticErm, Quadratic};
    use std::sync::Arc;

    #[test]
    fn quadratic_centers_average() {
        let costs: Vec<SharedCost> = [1.0, 2.0, 6.0]
            .iter()
            .map(|&a| Arc::new(Quadratic::scalar(1.0, a).unwrap()) as SharedCost)
            .collect();
        let r = solve_reference(&costs).unwrap();
        assert_eq!(r.method, ReferenceMethod::ClosedForm);
        assert!((r.x[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn single_agent_is_its_minimizer() {
        let c: SharedCost = Arc::new(Huber::new(1.0, Vector::from_column_slice(&[2.0, -3.0])).unwrap());
        let r = solve_reference(&[c]).unwrap();
        assert_eq!(r.method, ReferenceMethod::CentralizedDescent);
        assert!((r.x - Vector::from_column_slice(&[2.0, -3.0])).amax() < 1e-9);
        assert!(r.residual <= REFERENCE_RESIDUAL);
    }

    #[test]
    fn logistic_descent_reaches_tolerance() {
        let (a, b) = LogisticErm::parse_data("1 0 1\n0 1 -1\n1 1 1\n-1 0 -1\n").unwrap();
        let c: SharedCost = Arc::new(LogisticErm::new(a, b, 0.1).unwrap());
        let r = solve_reference(&[c.clone(), c.clone()]).unwrap();
        let g = c.gradient(&r.x).unwrap() * 2.0;
        assert!(g.norm() <= 1e-10);
    }
}
