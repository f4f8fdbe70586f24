//! Gradient, proximal, reflective, proximal-gradient and Peaceman-Rachford
//! operators built from [`CostFunction`]s.

use crate::cost::SharedCost;
use crate::error::{Error, Result};
use crate::operator::{compose, relax, Operator, Property, Vector};

/// `min f(x) + g(x)` with `f` smooth and `g` possibly non-smooth.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub f: SharedCost,
    pub g: SharedCost,
}

impl CompositeProblem {
    pub fn new(f: SharedCost, g: SharedCost) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: g.dim(),
            });
        }
        Ok(CompositeProblem { f, g })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("rho", format!("{rho} must be positive")))
    }
}

/// `x ↦ x − ρ∇f(x)`.
///
/// Tagged averaged when `ρ < 2/λ̄`, contractive with factor
/// `max(|1 − ρλ_|, |1 − ρλ̄|)` when additionally `λ_ > 0`. Without declared
/// constants the tag is `Unknown`.
pub fn gradient_step_op(f: &SharedCost, rho: f64) -> Result<Operator> {
    check_rho(rho)?;
    if f.gradient(&Vector::zeros(f.dim())).is_none() {
        return Err(Error::MissingGradient);
    }
    let property = match (f.smoothness(), f.strong_convexity()) {
        (Some(l), mu) => {
            let mu = mu.unwrap_or(0.0);
            let factor = (1.0 - rho * mu).abs().max((1.0 - rho * l).abs());
            if l == 0.0 {
                Property::Nonexpansive
            } else if rho * l < 2.0 {
                if mu > 0.0 && factor < 1.0 {
                    Property::Contractive(factor)
                } else {
                    Property::Averaged(rho * l / 2.0)
                }
            } else {
                Property::Lipschitz(factor)
            }
        }
        (None, _) => Property::Unknown,
    };
    let f = f.clone();
    Ok(Operator::new(f.dim(), property, move |x| {
        x - f.gradient(x).expect("gradient availability checked") * rho
    }))
}

/// `y ↦ prox_{ρf}(y)`: ½-averaged, `1/(1 + ρλ_)`-contractive when `λ_ > 0`.
pub fn prox_op(f: &SharedCost, rho: f64) -> Result<Operator> {
    check_rho(rho)?;
    let property = match f.strong_convexity() {
        Some(mu) if mu > 0.0 => Property::Contractive(1.0 / (1.0 + rho * mu)),
        _ => Property::Averaged(0.5),
    };
    let f = f.clone();
    Ok(Operator::fallible(f.dim(), property, move |y| f.prox(y, rho)))
}

/// `y ↦ 2 prox_{ρf}(y) − y`: non-expansive, contractive when `f` is both
/// strongly convex and smooth.
pub fn refl_op(f: &SharedCost, rho: f64) -> Result<Operator> {
    check_rho(rho)?;
    let property = match (f.strong_convexity(), f.smoothness()) {
        (Some(mu), Some(l)) if mu > 0.0 => {
            let a = (1.0 - rho * mu).abs() / (1.0 + rho * mu);
            let b = (rho * l - 1.0).abs() / (rho * l + 1.0);
            Property::from_lipschitz(a.max(b))
        }
        _ => Property::Nonexpansive,
    };
    let f = f.clone();
    Ok(Operator::fallible(f.dim(), property, move |y| {
        Ok(f.prox(y, rho)? * 2.0 - y)
    }))
}

/// `prox_{ρg} ∘ (I − ρ∇f)` for `ρ ∈ (0, 2/λ̄)`.
pub fn prox_grad_op(p: &CompositeProblem, rho: f64) -> Result<Operator> {
    check_rho(rho)?;
    let Some(l) = p.f.smoothness() else {
        return Err(Error::invalid(
            "f",
            "proximal gradient needs a declared smoothness constant",
        ));
    };
    if l > 0.0 && rho >= 2.0 / l {
        return Err(Error::invalid(
            "rho",
            format!("{rho} is not in (0, 2/lambda_bar) = (0, {})", 2.0 / l),
        ));
    }
    compose(&prox_op(&p.g, rho)?, &gradient_step_op(&p.f, rho)?)
}

/// Relaxed Peaceman-Rachford `(1 − α)I + α refl_{ρg} ∘ refl_{ρf}` acting on
/// the auxiliary variable `z`. `α = 1` requires a contraction certificate.
///
/// The primal iterate is recovered with [`prs_primal`].
pub fn peaceman_rachford_op(p: &CompositeProblem, rho: f64, alpha: f64) -> Result<Operator> {
    check_rho(rho)?;
    let prs = compose(&refl_op(&p.g, rho)?, &refl_op(&p.f, rho)?)?;
    if alpha == 1.0 {
        if prs.property().contraction_factor().is_none() {
            return Err(Error::invalid(
                "alpha",
                "alpha = 1 needs a contractive Peaceman-Rachford operator",
            ));
        }
        return Ok(prs);
    }
    relax(&prs, alpha)
}

/// `x = prox_{ρf}(z)`.
pub fn prs_primal(p: &CompositeProblem, rho: f64, z: &Vector) -> Result<Vector> {
    p.f.prox(z, rho)
}
