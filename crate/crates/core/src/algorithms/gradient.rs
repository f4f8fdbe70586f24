//! Gradient-based consensus methods: exact projected gradient, adapt-then-
//! combine and distributed gradient descent.

use crate::consensus::{split_blocks, stack_blocks};
use crate::error::Result;
use crate::operator::Vector;

use super::{
    all_pairs, check_stacked, synchronous_round, ConsensusProblem, Inbox, Protocol, StepSize,
    Work,
};

/// Per-agent estimates plus the last locally adapted point `ψ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientState {
    pub x: Vec<Vector>,
    pub psi: Vec<Vector>,
}

impl GradientState {
    pub fn new(x: Vec<Vector>) -> Self {
        GradientState {
            psi: x.clone(),
            x,
        }
    }

    pub fn from_stacked(x: &Vector, block: usize) -> Self {
        GradientState::new(split_blocks(x, block))
    }

    pub fn stacked(&self) -> Vector {
        stack_blocks(&self.x)
    }
}

fn adapt(p: &ConsensusProblem, i: usize, x: &Vector, rho: f64, work: &mut Work) -> Result<Vector> {
    let g = p.gradient(i, x)?;
    work.grad_evals += 1;
    Ok(x - g * rho)
}

/// `x ← P_C(x − ρ∇f(x))` with `P_C` the projection onto consensus. Every
/// agent needs every other agent's adapted point, so this is an oracle for
/// the local methods rather than a network algorithm.
pub struct ExactProjectedGradient<'a> {
    problem: &'a ConsensusProblem,
    schedule: StepSize,
    peers: Vec<Vec<usize>>,
}

impl<'a> ExactProjectedGradient<'a> {
    pub fn new(problem: &'a ConsensusProblem, schedule: StepSize) -> Self {
        ExactProjectedGradient {
            problem,
            schedule,
            peers: all_pairs(problem.n_agents()),
        }
    }
}

impl Protocol for ExactProjectedGradient<'_> {
    type State = GradientState;

    fn name(&self) -> &'static str {
        "exact_pg"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        &self.peers[i]
    }

    fn prepare(&self, k: usize, _: usize, i: usize, s: &mut GradientState, work: &mut Work) -> Result<()> {
        s.psi[i] = adapt(self.problem, i, &s.x[i], self.schedule.at(k), work)?;
        Ok(())
    }

    fn message(&self, _: usize, from: usize, _: usize, s: &GradientState) -> Vector {
        s.psi[from].clone()
    }

    fn apply(&self, _: usize, _: usize, i: usize, s: &mut GradientState, inbox: &Inbox<'_>, _: &mut Work) -> Result<()> {
        let mut sum = s.psi[i].clone();
        for (_, m) in inbox.iter() {
            sum += m;
        }
        s.x[i] = sum / self.problem.n_agents() as f64;
        Ok(())
    }

    fn primal<'s>(&self, s: &'s GradientState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &GradientState) -> Vector {
        s.stacked()
    }
}

/// Adapt-then-combine diffusion: `x ← (W ⊗ I)(x − ρ_k∇f(x))`.
pub struct Atc<'a> {
    problem: &'a ConsensusProblem,
    schedule: StepSize,
}

impl<'a> Atc<'a> {
    pub fn new(problem: &'a ConsensusProblem, schedule: StepSize) -> Self {
        Atc { problem, schedule }
    }
}

impl Protocol for Atc<'_> {
    type State = GradientState;

    fn name(&self) -> &'static str {
        "atc"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        self.problem.graph().neighbors(i)
    }

    fn prepare(&self, k: usize, _: usize, i: usize, s: &mut GradientState, work: &mut Work) -> Result<()> {
        s.psi[i] = adapt(self.problem, i, &s.x[i], self.schedule.at(k), work)?;
        Ok(())
    }

    fn message(&self, _: usize, from: usize, _: usize, s: &GradientState) -> Vector {
        s.psi[from].clone()
    }

    fn apply(&self, _: usize, _: usize, i: usize, s: &mut GradientState, inbox: &Inbox<'_>, _: &mut Work) -> Result<()> {
        s.x[i] = self.problem.weights().combine(i, &s.psi[i], |j| inbox.from(j));
        Ok(())
    }

    fn primal<'s>(&self, s: &'s GradientState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &GradientState) -> Vector {
        s.stacked()
    }
}

/// Distributed gradient descent: `x ← (W ⊗ I)x − ρ_k∇f(x)`.
pub struct Dgd<'a> {
    problem: &'a ConsensusProblem,
    schedule: StepSize,
}

impl<'a> Dgd<'a> {
    pub fn new(problem: &'a ConsensusProblem, schedule: StepSize) -> Self {
        Dgd { problem, schedule }
    }
}

impl Protocol for Dgd<'_> {
    type State = GradientState;

    fn name(&self) -> &'static str {
        "dgd"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        self.problem.graph().neighbors(i)
    }

    fn message(&self, _: usize, from: usize, _: usize, s: &GradientState) -> Vector {
        s.x[from].clone()
    }

    fn apply(&self, k: usize, _: usize, i: usize, s: &mut GradientState, inbox: &Inbox<'_>, work: &mut Work) -> Result<()> {
        let g = self.problem.gradient(i, &s.x[i])?;
        work.grad_evals += 1;
        let mixed = self.problem.weights().combine(i, &s.x[i], |j| inbox.from(j));
        s.x[i] = mixed - g * self.schedule.at(k);
        Ok(())
    }

    fn primal<'s>(&self, s: &'s GradientState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &GradientState) -> Vector {
        s.stacked()
    }
}

fn one_round<P: Protocol<State = GradientState>>(p: &ConsensusProblem, protocol: &P, x: &Vector) -> Result<Vector> {
    check_stacked(p, x)?;
    let mut s = GradientState::from_stacked(x, p.dim());
    synchronous_round(protocol, 0, &mut s, &mut Work::default())?;
    Ok(s.stacked())
}

pub fn exact_projected_gradient_step(p: &ConsensusProblem, x: &Vector, rho: f64) -> Result<Vector> {
    one_round(p, &ExactProjectedGradient::new(p, StepSize::constant(rho)?), x)
}

pub fn atc_step(p: &ConsensusProblem, x: &Vector, rho: f64) -> Result<Vector> {
    one_round(p, &Atc::new(p, StepSize::constant(rho)?), x)
}

pub fn dgd_step(p: &ConsensusProblem, x: &Vector, rho: f64) -> Result<Vector> {
    one_round(p, &Dgd::new(p, StepSize::constant(rho)?), x)
}
