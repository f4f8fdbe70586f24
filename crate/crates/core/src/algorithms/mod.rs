//! Distributed algorithms as agent-local message-passing protocols.
//!
//! Each algorithm implements [`Protocol`]: per stage, every participating
//! agent runs `prepare`, sends one `message` to each peer, then runs `apply`
//! with the messages it received. The stacked step functions
//! (`atc_step`, `admm_step`, ...) execute one lossless synchronous round of
//! the same protocol, so a simulated run without imperfections reproduces
//! them bit for bit.

use crate::consensus::ConsensusMatrix;
use crate::cost::SharedCost;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operator::{Matrix, Vector};

pub mod admm;
pub mod gradient;
pub mod tracking;

pub use admm::{
    admm_step, arc_incidence, lagrangian_admm_step, Admm, AdmmState, LagrangianAdmm,
    LagrangianAdmmState, LagrangianState,
};
pub use gradient::{
    atc_step, dgd_step, exact_projected_gradient_step, Atc, Dgd, ExactProjectedGradient,
    GradientState,
};
pub use tracking::{
    gradient_tracking_step, primal_dual_gt_step, GradientTracking, GtState, PrimalDualGt,
    PrimalDualState,
};

/// Optimality tolerance on `‖Σ_i ∇f_i(x*)‖` for a supplied reference.
pub const REFERENCE_TOL: f64 = 1e-8;

/// `min Σ_i f_i(x)` over a network, with an optional reference minimizer.
#[derive(Debug, Clone)]
pub struct ConsensusProblem {
    costs: Vec<SharedCost>,
    weights: ConsensusMatrix,
    reference: Option<Vector>,
    sqrt_laplacian: Option<Matrix>,
    dim: usize,
}

impl ConsensusProblem {
    pub fn new(costs: Vec<SharedCost>, weights: ConsensusMatrix) -> Result<Self> {
        let Some(first) = costs.first() else {
            return Err(Error::invalid("costs", "need one cost per agent"));
        };
        if costs.len() != weights.size() {
            return Err(Error::DimensionMismatch {
                expected: weights.size(),
                got: costs.len(),
            });
        }
        let dim = first.dim();
        if let Some(bad) = costs.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        let sqrt_laplacian = weights.sqrt_laplacian().ok();
        Ok(ConsensusProblem {
            costs,
            weights,
            reference: None,
            sqrt_laplacian,
            dim,
        })
    }

    /// Attaches `x*`, checking `‖Σ_i ∇f_i(x*)‖ ≤ 1e-8` when gradients exist.
    pub fn with_reference(mut self, reference: Vector) -> Result<Self> {
        if reference.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: reference.len(),
            });
        }
        if let Some(g) = self.total_gradient(&reference) {
            if g.norm() > REFERENCE_TOL {
                return Err(Error::invalid(
                    "reference",
                    format!("gradient of the sum is {:e} at the reference", g.norm()),
                ));
            }
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn costs(&self) -> &[SharedCost] {
        &self.costs
    }

    pub fn cost(&self, i: usize) -> &SharedCost {
        &self.costs[i]
    }

    pub fn weights(&self) -> &ConsensusMatrix {
        &self.weights
    }

    pub fn graph(&self) -> &Graph {
        self.weights.graph()
    }

    pub fn reference(&self) -> Option<&Vector> {
        self.reference.as_ref()
    }

    pub fn n_agents(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `max_i λ̄_i`.
    pub fn smoothness(&self) -> Option<f64> {
        self.costs
            .iter()
            .try_fold(0.0_f64, |acc, c| c.smoothness().map(|l| acc.max(l)))
    }

    /// `min_i λ_i`.
    pub fn strong_convexity(&self) -> Option<f64> {
        self.costs
            .iter()
            .try_fold(f64::INFINITY, |acc, c| c.strong_convexity().map(|m| acc.min(m)))
    }

    /// `Σ_i ∇f_i(x)`.
    pub fn total_gradient(&self, x: &Vector) -> Option<Vector> {
        let mut g = Vector::zeros(self.dim);
        for c in &self.costs {
            g += c.gradient(x)?;
        }
        Some(g)
    }

    pub fn total_value(&self, x: &Vector) -> f64 {
        self.costs.iter().map(|c| c.value(x)).sum()
    }

    /// `(I − W)^{1/2}`; fails when `W` is not symmetric with `I − W ⪰ 0`.
    pub fn sqrt_laplacian(&self) -> Result<&Matrix> {
        match &self.sqrt_laplacian {
            Some(s) => Ok(s),
            None => Err(self
                .weights
                .sqrt_laplacian()
                .err()
                .unwrap_or_else(|| Error::invalid("W", "no square root of I - W"))),
        }
    }

    pub(crate) fn gradient(&self, i: usize, x: &Vector) -> Result<Vector> {
        self.costs[i].gradient(x).ok_or(Error::MissingGradient)
    }
}

/// Step-size sequence `ρ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `ρ_k = ρ_0/(k + 1)^γ` with `γ ∈ (1/2, 1]`, so `Σρ_k = ∞`, `Σρ_k² < ∞`.
    Diminishing { rho0: f64, gamma: f64 },
}

impl StepSize {
    pub fn constant(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", format!("{rho} must be positive")));
        }
        Ok(StepSize::Constant(rho))
    }

    pub fn diminishing(rho0: f64, gamma: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::invalid("rho0", format!("{rho0} must be positive")));
        }
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::invalid("gamma", format!("{gamma} is not in (0.5, 1]")));
        }
        Ok(StepSize::Diminishing { rho0, gamma })
    }

    pub fn at(&self, k: usize) -> f64 {
        match *self {
            StepSize::Constant(rho) => rho,
            StepSize::Diminishing { rho0, gamma } => rho0 / ((k + 1) as f64).powf(gamma),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, StepSize::Constant(_))
    }
}

/// Gradient and prox evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Work {
    pub grad_evals: u64,
    pub prox_evals: u64,
}

/// Messages received by one agent in one stage, keyed by sender.
pub struct Inbox<'a> {
    peers: &'a [usize],
    messages: &'a [Vector],
}

impl<'a> Inbox<'a> {
    pub fn new(peers: &'a [usize], messages: &'a [Vector]) -> Self {
        debug_assert_eq!(peers.len(), messages.len());
        Inbox { peers, messages }
    }

    /// Message from `j`. Panics if `j` is not a peer.
    pub fn from(&self, j: usize) -> &'a Vector {
        let pos = self
            .peers
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("agent {j} is not a peer"));
        &self.messages[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &'a Vector)> + '_ {
        self.peers.iter().copied().zip(self.messages.iter())
    }
}

/// One agent-local distributed algorithm.
///
/// Within a stage, `apply` for agent `i` may read only agent `i`'s own
/// variables and its inbox. Peer lists must be symmetric and sorted.
pub trait Protocol {
    type State: Clone;

    fn name(&self) -> &'static str;

    fn n_agents(&self) -> usize;

    fn stages(&self) -> usize {
        1
    }

    /// Agents `i` exchanges messages with, ascending.
    fn peers(&self, i: usize) -> &[usize];

    /// Local computation before transmitting in `stage`.
    fn prepare(
        &self,
        _k: usize,
        _stage: usize,
        _i: usize,
        _state: &mut Self::State,
        _work: &mut Work,
    ) -> Result<()> {
        Ok(())
    }

    fn message(&self, stage: usize, from: usize, to: usize, state: &Self::State) -> Vector;

    fn apply(
        &self,
        k: usize,
        stage: usize,
        i: usize,
        state: &mut Self::State,
        inbox: &Inbox<'_>,
        work: &mut Work,
    ) -> Result<()>;

    /// Agent `i`'s current estimate of the solution.
    fn primal<'s>(&self, state: &'s Self::State, i: usize) -> &'s Vector;

    /// Every stored variable, stacked. Its round-to-round change is the
    /// fixed-point residual.
    fn full_state(&self, state: &Self::State) -> Vector;

    /// The variable the underlying fixed-point operator acts on (`z` for
    /// ADMM, the full state otherwise).
    fn operator_variable(&self, state: &Self::State) -> Vector {
        self.full_state(state)
    }
}

/// One lossless synchronous round: every agent prepares, messages are
/// exchanged, every agent applies.
pub fn synchronous_round<P: Protocol>(
    protocol: &P,
    k: usize,
    state: &mut P::State,
    work: &mut Work,
) -> Result<()> {
    let n = protocol.n_agents();
    for stage in 0..protocol.stages() {
        for i in 0..n {
            protocol.prepare(k, stage, i, state, work)?;
        }
        let inboxes: Vec<Vec<Vector>> = (0..n)
            .map(|i| {
                protocol
                    .peers(i)
                    .iter()
                    .map(|&j| protocol.message(stage, j, i, state))
                    .collect()
            })
            .collect();
        for (i, messages) in inboxes.iter().enumerate() {
            let inbox = Inbox::new(protocol.peers(i), messages);
            protocol.apply(k, stage, i, state, &inbox, work)?;
        }
    }
    Ok(())
}

/// All agents except `i`, for protocols that are not graph-local.
pub(crate) fn all_pairs(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect()
}

pub(crate) fn check_stacked(p: &ConsensusProblem, x: &Vector) -> Result<()> {
    let expected = p.n_agents() * p.dim();
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}
