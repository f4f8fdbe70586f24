//! PASS/FAIL report of the convergence bounds that apply to a run.

use std::fmt;

use serde::Serialize;

use crate::iteration::km_rate;
use crate::operator::Vector;

/// Absolute slack on every bound.
pub const BOUND_SLACK: f64 = 1e-9;
/// Exact-convergence threshold for lossless synchronous runs.
pub const EXACT_TOL: f64 = 1e-7;
/// Exact-convergence threshold under network imperfections.
pub const ROBUST_TOL: f64 = 1e-5;
/// Error level an algorithm must miss to count as not converging.
pub const FAILURE_LEVEL: f64 = 1e-3;
/// Minimum error reduction per halving of the step size.
pub const BIAS_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundLine {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub lines: Vec<BoundLine>,
}

impl BoundReport {
    pub fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.lines.push(BoundLine {
            name: name.into(),
            status: Status::from_bool(ok),
            detail: detail.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.status == Status::Pass)
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.lines.extend(other.lines);
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lines.is_empty() {
            return writeln!(f, "no bounds apply to this configuration");
        }
        for l in &self.lines {
            let tag = match l.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            };
            writeln!(f, "{tag}  {}: {}", l.name, l.detail)?;
        }
        Ok(())
    }
}

/// KM residual bound on a relaxed iteration `v_{k+1} = (1 − α)v_k + αTv_k`,
/// given the step lengths `‖v_{k+1} − v_k‖ = α‖(I − T)v_k‖` and the initial
/// distance to the fixed point. Adds two lines: the bound on the relaxed
/// residual `α‖(I − T)v_k‖` and the bound taken literally on `‖(I − T)v_k‖`.
pub fn km_lines(report: &mut BoundReport, alpha: f64, steps: &[f64], d0: f64) {
    let mut worst_relaxed = f64::NEG_INFINITY;
    let mut worst_literal = f64::NEG_INFINITY;
    let mut first_literal = None;
    for (k, &s) in steps.iter().enumerate() {
        let rate = km_rate(alpha, d0, k);
        worst_relaxed = worst_relaxed.max(s - rate);
        let literal = s / alpha - rate;
        if literal > BOUND_SLACK && first_literal.is_none() {
            first_literal = Some(k);
        }
        worst_literal = worst_literal.max(literal);
    }
    report.push(
        "KM residual bound (relaxed residual)",
        worst_relaxed <= BOUND_SLACK,
        format!(
            "α = {alpha}, {} rounds, worst margin {:e} against sqrt(α/(1−α))·‖v0 − v̄‖/sqrt(k+1)",
            steps.len(),
            worst_relaxed
        ),
    );
    report.push(
        "KM residual bound (unrelaxed residual)",
        worst_literal <= BOUND_SLACK,
        match first_literal {
            Some(k) => format!("first exceeded at k = {k}, worst margin {worst_literal:e}"),
            None => format!("worst margin {worst_literal:e}"),
        },
    );
}

/// `‖v_k − v̄‖ ≤ ζ^k‖v_0 − v̄‖ + slack` along a recorded trajectory, with `v̄`
/// approximated by the final iterate (the slack absorbs `tol·ζ/(1 − ζ)`).
pub fn picard_line(report: &mut BoundReport, zeta: f64, trajectory: &[Vector], tol: f64) {
    let Some(last) = trajectory.last() else {
        return;
    };
    let d0 = (&trajectory[0] - last).norm();
    let slack = BOUND_SLACK + tol * zeta / (1.0 - zeta);
    let mut worst = f64::NEG_INFINITY;
    let mut bound = d0;
    for v in trajectory {
        worst = worst.max((v - last).norm() - bound);
        bound *= zeta;
    }
    report.push(
        "Picard contraction bound",
        worst <= slack,
        format!("ζ = {zeta}, {} rounds, worst margin {worst:e}", trajectory.len() - 1),
    );
}

/// Strictly decreasing asymptotic error as the step size shrinks, with at
/// least [`BIAS_RATIO`] reduction per halving.
pub fn bias_scaling_line(report: &mut BoundReport, runs: &[(f64, f64)]) {
    let mut sorted = runs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut ok = sorted.len() >= 2;
    let mut worst = f64::INFINITY;
    for w in sorted.windows(2) {
        let ((r0, e0), (r1, e1)) = (w[0], w[1]);
        let halvings = (r0 / r1).log2();
        let per_halving = (e0 / e1).powf(1.0 / halvings);
        worst = worst.min(per_halving);
        ok &= e1 < e0 && per_halving >= BIAS_RATIO;
    }
    let listing = sorted
        .iter()
        .map(|(r, e)| format!("ρ = {r}: {e:e}"))
        .collect::<Vec<_>>()
        .join(", ");
    report.push(
        "step-size bias scaling",
        ok,
        format!("{listing}; smallest reduction per halving {worst:.3} (need ≥ {BIAS_RATIO})"),
    );
}
