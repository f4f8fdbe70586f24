//! Gradient tracking and its primal-dual form.

use crate::consensus::{split_blocks, stack_blocks};
use crate::error::{Error, Result};
use crate::operator::{Matrix, Vector};

use super::{all_pairs, synchronous_round, ConsensusProblem, Inbox, Protocol, StepSize, Work};

/// Gradient-tracking state: estimates `x_k` and last local signals `y_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtState {
    pub x: Vec<Vector>,
    pub y_prev: Vec<Vector>,
}

impl GtState {
    /// `y_{−1} = x_0`, which gives `Σ_i x_{i,k} = Σ_i y_{i,k−1}` at every `k`.
    pub fn start(x0: Vec<Vector>) -> Self {
        GtState {
            y_prev: x0.clone(),
            x: x0,
        }
    }

    pub fn from_stacked(x: &Vector, y_prev: &Vector, block: usize) -> Self {
        GtState {
            x: split_blocks(x, block),
            y_prev: split_blocks(y_prev, block),
        }
    }

    /// The tracking state matching a primal-dual state:
    /// `y_{k−1} = (W ⊗ I)x_k + ρ((I − W)^{1/2} ⊗ I)w_k`.
    pub fn from_primal_dual(p: &ConsensusProblem, s: &PrimalDualState, rho: f64) -> Result<Self> {
        let b = p.sqrt_laplacian()?;
        let n = p.n_agents();
        let y_prev = (0..n)
            .map(|i| {
                let mut y = p.weights().combine(i, &s.x[i], |j| &s.x[j]);
                for j in 0..n {
                    y.axpy(rho * b[(i, j)], &s.w[j], 1.0);
                }
                y
            })
            .collect();
        Ok(GtState {
            x: s.x.clone(),
            y_prev,
        })
    }

    pub fn stacked_x(&self) -> Vector {
        stack_blocks(&self.x)
    }

    pub fn stacked_y_prev(&self) -> Vector {
        stack_blocks(&self.y_prev)
    }
}

/// `y_k = x_k − ρ∇f(x_k)`, `x_{k+1} = (W ⊗ I)x_k + y_k − y_{k−1}`.
pub struct GradientTracking<'a> {
    problem: &'a ConsensusProblem,
    schedule: StepSize,
}

impl<'a> GradientTracking<'a> {
    pub fn new(problem: &'a ConsensusProblem, schedule: StepSize) -> Self {
        GradientTracking { problem, schedule }
    }
}

impl Protocol for GradientTracking<'_> {
    type State = GtState;

    fn name(&self) -> &'static str {
        "gradient_tracking"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        self.problem.graph().neighbors(i)
    }

    fn message(&self, _: usize, from: usize, _: usize, s: &GtState) -> Vector {
        s.x[from].clone()
    }

    fn apply(&self, k: usize, _: usize, i: usize, s: &mut GtState, inbox: &Inbox<'_>, work: &mut Work) -> Result<()> {
        let g = self.problem.gradient(i, &s.x[i])?;
        work.grad_evals += 1;
        let y = &s.x[i] - g * self.schedule.at(k);
        let mixed = self.problem.weights().combine(i, &s.x[i], |j| inbox.from(j));
        s.x[i] = mixed + &y - &s.y_prev[i];
        s.y_prev[i] = y;
        Ok(())
    }

    fn primal<'s>(&self, s: &'s GtState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &GtState) -> Vector {
        let mut blocks = s.x.clone();
        blocks.extend(s.y_prev.iter().cloned());
        stack_blocks(&blocks)
    }
}

/// Primal-dual state `(x, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub x: Vec<Vector>,
    pub w: Vec<Vector>,
}

impl PrimalDualState {
    pub fn start(x0: Vec<Vector>) -> Self {
        let w = x0.iter().map(|b| Vector::zeros(b.len())).collect();
        PrimalDualState { x: x0, w }
    }

    pub fn stacked_x(&self) -> Vector {
        stack_blocks(&self.x)
    }

    pub fn stacked_w(&self) -> Vector {
        stack_blocks(&self.w)
    }
}

/// `x_{k+1} = x_k − ρ(∇f(x_k) + Bw_k)`, `w_{k+1} = w_k + Bx_{k+1}/ρ` with
/// `B = (I − W)^{1/2} ⊗ I`. `B` is dense in general, so every agent talks to
/// every other one; this is the analysis form of gradient tracking.
pub struct PrimalDualGt<'a> {
    problem: &'a ConsensusProblem,
    schedule: StepSize,
    b: &'a Matrix,
    peers: Vec<Vec<usize>>,
}

impl<'a> PrimalDualGt<'a> {
    pub fn new(problem: &'a ConsensusProblem, schedule: StepSize) -> Result<Self> {
        Ok(PrimalDualGt {
            problem,
            schedule,
            b: problem.sqrt_laplacian()?,
            peers: all_pairs(problem.n_agents()),
        })
    }

    fn apply_b(&self, i: usize, own: &Vector, inbox: &Inbox<'_>) -> Vector {
        let mut out = own * self.b[(i, i)];
        for (j, m) in inbox.iter() {
            out.axpy(self.b[(i, j)], m, 1.0);
        }
        out
    }
}

impl Protocol for PrimalDualGt<'_> {
    type State = PrimalDualState;

    fn name(&self) -> &'static str {
        "gt_primal_dual"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn stages(&self) -> usize {
        2
    }

    fn peers(&self, i: usize) -> &[usize] {
        &self.peers[i]
    }

    fn message(&self, stage: usize, from: usize, _: usize, s: &PrimalDualState) -> Vector {
        if stage == 0 {
            s.w[from].clone()
        } else {
            s.x[from].clone()
        }
    }

    fn apply(
        &self,
        k: usize,
        stage: usize,
        i: usize,
        s: &mut PrimalDualState,
        inbox: &Inbox<'_>,
        work: &mut Work,
    ) -> Result<()> {
        let rho = self.schedule.at(k);
        if stage == 0 {
            let g = self.problem.gradient(i, &s.x[i])?;
            work.grad_evals += 1;
            let bw = self.apply_b(i, &s.w[i], inbox);
            s.x[i] -= (g + bw) * rho;
        } else {
            let bx = self.apply_b(i, &s.x[i], inbox);
            s.w[i] += bx / rho;
        }
        Ok(())
    }

    fn primal<'s>(&self, s: &'s PrimalDualState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &PrimalDualState) -> Vector {
        let mut blocks = s.x.clone();
        blocks.extend(s.w.iter().cloned());
        stack_blocks(&blocks)
    }
}

fn check_blocks(p: &ConsensusProblem, blocks: &[Vector]) -> Result<()> {
    if blocks.len() != p.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: p.n_agents(),
            got: blocks.len(),
        });
    }
    if let Some(b) = blocks.iter().find(|b| b.len() != p.dim()) {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: b.len(),
        });
    }
    Ok(())
}

pub fn gradient_tracking_step(p: &ConsensusProblem, s: &GtState, rho: f64) -> Result<GtState> {
    check_blocks(p, &s.x)?;
    check_blocks(p, &s.y_prev)?;
    let mut next = s.clone();
    let proto = GradientTracking::new(p, StepSize::constant(rho)?);
    synchronous_round(&proto, 0, &mut next, &mut Work::default())?;
    Ok(next)
}

pub fn primal_dual_gt_step(p: &ConsensusProblem, s: &PrimalDualState, rho: f64) -> Result<PrimalDualState> {
    check_blocks(p, &s.x)?;
    check_blocks(p, &s.w)?;
    let mut next = s.clone();
    let proto = PrimalDualGt::new(p, StepSize::constant(rho)?)?;
    synchronous_round(&proto, 0, &mut next, &mut Work::default())?;
    Ok(next)
}
