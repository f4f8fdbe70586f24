//! Krasnosel'skii-Mann and Banach-Picard iterations and the bound monitors
//! evaluated on their traces.
//!
//! Monitors are assertions on a finished trace. They can falsify a claimed
//! rate but never prove one.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{guard_finite, Error, Result};
use crate::operator::{Operator, Vector};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iterates: Vec<Vector>,
    /// `residuals[k] = ‖x_k − T(x_k)‖`
    pub residuals: Vec<f64>,
    /// `‖x_k − x̄‖`, filled by [`IterationTrace::with_reference`].
    pub distances: Option<Vec<f64>>,
    pub converged: bool,
}

/// Outcome of checking a bound along a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// max over k of `lhs_k − rhs_k`; negative when the bound holds strictly.
    pub worst_margin: f64,
    pub first_violation: Option<usize>,
    pub checked: usize,
}

impl BoundCheck {
    fn evaluate(pairs: impl Iterator<Item = (f64, f64)>, slack: f64) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut first = None;
        let mut checked = 0;
        for (k, (lhs, rhs)) in pairs.enumerate() {
            let margin = lhs - rhs;
            worst = worst.max(margin);
            if margin > slack && first.is_none() {
                first = Some(k);
            }
            checked += 1;
        }
        BoundCheck {
            holds: first.is_none(),
            worst_margin: worst,
            first_violation: first,
            checked,
        }
    }
}

/// Right-hand side of the KM rate: `√(α/(1−α))·d₀/√(k+1)`.
pub fn km_rate(alpha: f64, initial_distance: f64, k: usize) -> f64 {
    (alpha / (1.0 - alpha)).sqrt() * initial_distance / ((k + 1) as f64).sqrt()
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn last(&self) -> &Vector {
        self.iterates.last().expect("trace holds at least x0")
    }

    /// Number of operator applications that produced the trace.
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn with_reference(mut self, fixed_point: &Vector) -> Self {
        self.distances = Some(
            self.iterates
                .iter()
                .map(|x| (x - fixed_point).norm())
                .collect(),
        );
        self
    }

    fn distances_to(&self, fixed_point: &Vector) -> Vec<f64> {
        self.iterates
            .iter()
            .map(|x| (x - fixed_point).norm())
            .collect()
    }

    /// KM rate on the step length `‖x_{k+1} − x_k‖ = α‖(I − T)x_k‖`:
    /// `α‖(I−T)x_k‖ ≤ √(α/(1−α))·‖x_0 − x̄‖/√(k+1)`.
    ///
    /// This is the residual of the relaxed operator `(1−α)I + αT` and holds
    /// for every non-expansive `T`.
    pub fn check_km_bound(&self, alpha: f64, fixed_point: &Vector, slack: f64) -> BoundCheck {
        let d0 = (&self.iterates[0] - fixed_point).norm();
        BoundCheck::evaluate(
            self.residuals
                .iter()
                .enumerate()
                .map(|(k, r)| (alpha * r, km_rate(alpha, d0, k))),
            slack,
        )
    }

    /// Same right-hand side applied to the unrelaxed residual `‖(I − T)x_k‖`.
    ///
    /// Stronger than [`Self::check_km_bound`] by a factor `1/α`; it fails for
    /// e.g. a quarter rotation at α = 1/2 already at k = 0.
    pub fn check_km_bound_unrelaxed(
        &self,
        alpha: f64,
        fixed_point: &Vector,
        slack: f64,
    ) -> BoundCheck {
        let d0 = (&self.iterates[0] - fixed_point).norm();
        BoundCheck::evaluate(
            self.residuals
                .iter()
                .enumerate()
                .map(|(k, &r)| (r, km_rate(alpha, d0, k))),
            slack,
        )
    }

    /// `‖x_k − x̄‖ ≤ ζ^k ‖x_0 − x̄‖`.
    pub fn check_picard_bound(&self, zeta: f64, fixed_point: &Vector, slack: f64) -> BoundCheck {
        let d = self.distances_to(fixed_point);
        let d0 = d[0];
        BoundCheck::evaluate(
            d.iter()
                .enumerate()
                .map(|(k, &dk)| (dk, zeta.powi(k as i32) * d0)),
            slack,
        )
    }

    /// Lyapunov check: `‖x_{k+1} − x̄‖ ≤ ‖x_k − x̄‖`.
    pub fn check_monotone_distance(&self, fixed_point: &Vector, slack: f64) -> BoundCheck {
        let d = self.distances_to(fixed_point);
        BoundCheck::evaluate(d.windows(2).map(|w| (w[1], w[0])), slack)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,residual,distance_to_fix\n");
        for (k, r) in self.residuals.iter().enumerate() {
            let dist = self
                .distances
                .as_ref()
                .map(|d| d[k].to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{k},{r},{dist}");
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

fn check_start(op: &Operator, x0: &Vector, max_iter: usize, tol: f64) -> Result<()> {
    if op.dim() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x0.len(),
        });
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be positive"));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::invalid("tol", "must be non-negative"));
    }
    guard_finite(x0.as_slice(), 0)
}

fn iterate(
    op: &Operator,
    x0: &Vector,
    max_iter: usize,
    tol: f64,
    mut next: impl FnMut(&Vector, Vector) -> Vector,
) -> Result<IterationTrace> {
    check_start(op, x0, max_iter, tol)?;
    let mut iterates = vec![x0.clone()];
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut k = 0;
    loop {
        let x = &iterates[k];
        let tx = op.eval(x)?;
        guard_finite(tx.as_slice(), k)?;
        let r = (x - &tx).norm();
        residuals.push(r);
        if r <= tol {
            converged = true;
            break;
        }
        if k == max_iter {
            break;
        }
        let x_next = next(x, tx);
        guard_finite(x_next.as_slice(), k + 1)?;
        iterates.push(x_next);
        k += 1;
    }
    Ok(IterationTrace {
        iterates,
        residuals,
        distances: None,
        converged,
    })
}

/// `x_{k+1} = (1 − α)x_k + αT(x_k)` until the residual drops to `tol` or
/// `max_iter` steps have been taken.
pub fn km_iterate(
    op: &Operator,
    x0: &Vector,
    alpha: f64,
    max_iter: usize,
    tol: f64,
) -> Result<IterationTrace> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1)")));
    }
    iterate(op, x0, max_iter, tol, |x, tx| x * (1.0 - alpha) + tx * alpha)
}

/// `x_{k+1} = T(x_k)`.
pub fn picard_iterate(
    op: &Operator,
    x0: &Vector,
    max_iter: usize,
    tol: f64,
) -> Result<IterationTrace> {
    iterate(op, x0, max_iter, tol, |_, tx| tx)
}
