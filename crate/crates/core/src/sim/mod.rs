//! Round-based network execution with asynchrony, packet loss and
//! quantized messages.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algorithms::{Inbox, Protocol, Work};
use crate::error::{Error, Result, DIVERGENCE_THRESHOLD};
use crate::operator::Vector;

mod inexact;
mod quantize;

pub use inexact::{ErrorModel, InexactOperator};
pub use quantize::{quantize, Quantizer};

/// Rounds the residual must stay below `tol` before an imperfect run stops.
/// A single quiet round proves little when only some agents moved.
pub const QUIET_WINDOW: usize = 50;

/// Network imperfections for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectionConfig {
    pub p_act: f64,
    pub p_loss: f64,
    pub quantizer: Quantizer,
    pub seed: u64,
}

impl Default for ImperfectionConfig {
    fn default() -> Self {
        ImperfectionConfig::perfect()
    }
}

impl ImperfectionConfig {
    pub fn perfect() -> Self {
        ImperfectionConfig {
            p_act: 1.0,
            p_loss: 0.0,
            quantizer: Quantizer::None,
            seed: 0,
        }
    }

    pub fn new(p_act: f64, p_loss: f64, quantizer: Quantizer, seed: u64) -> Result<Self> {
        let cfg = ImperfectionConfig {
            p_act,
            p_loss,
            quantizer,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_act > 0.0 && self.p_act <= 1.0) {
            return Err(Error::invalid("sim.p_act", format!("{} is not in (0, 1]", self.p_act)));
        }
        if !(0.0..1.0).contains(&self.p_loss) {
            return Err(Error::invalid("sim.p_loss", format!("{} is not in [0, 1)", self.p_loss)));
        }
        if let Quantizer::Uniform(step) = self.quantizer {
            Quantizer::uniform(step)?;
        }
        Ok(())
    }

    pub fn is_perfect(&self) -> bool {
        self.p_act == 1.0 && self.p_loss == 0.0 && self.quantizer == Quantizer::None
    }
}

/// Last delivered message and staleness per directed link, for one stage.
/// `messages[i][p]` came from `peers(i)[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mailbox {
    messages: Vec<Vec<Vector>>,
    staleness: Vec<Vec<u64>>,
}

impl Mailbox {
    /// Primed with what each sender would transmit from the initial state.
    fn primed<P: Protocol>(p: &P, stage: usize, state: &P::State, q: Quantizer) -> Self {
        let n = p.n_agents();
        let messages = (0..n)
            .map(|i| {
                p.peers(i)
                    .iter()
                    .map(|&j| q.apply(p.message(stage, j, i, state)))
                    .collect()
            })
            .collect();
        let staleness = (0..n).map(|i| vec![0; p.peers(i).len()]).collect();
        Mailbox {
            messages,
            staleness,
        }
    }

    fn deliver(&mut self, to: usize, pos: usize, msg: Vector) {
        self.messages[to][pos] = msg;
        self.staleness[to][pos] = 0;
    }

    fn drop_message(&mut self, to: usize, pos: usize) {
        self.staleness[to][pos] += 1;
    }

    pub fn latest(&self, to: usize, pos: usize) -> &Vector {
        &self.messages[to][pos]
    }

    pub fn staleness(&self, to: usize, pos: usize) -> u64 {
        self.staleness[to][pos]
    }

    pub fn max_staleness(&self) -> u64 {
        self.staleness.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// One row of telemetry, recorded after round `k` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub k: usize,
    pub optimality_error: Option<f64>,
    pub consensus_error: f64,
    pub fp_residual: f64,
    pub messages_sent: u64,
    pub messages_dropped: u64,
    pub grad_evals: u64,
    pub prox_evals: u64,
}

pub const TELEMETRY_HEADER: &str =
    "k,optimality_error,consensus_error,fp_residual,messages_sent,messages_dropped,grad_evals,prox_evals";

pub fn telemetry_csv(records: &[TelemetryRecord]) -> String {
    let mut out = String::from(TELEMETRY_HEADER);
    out.push('\n');
    for r in records {
        let opt = r.optimality_error.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            opt,
            r.consensus_error,
            r.fp_residual,
            r.messages_sent,
            r.messages_dropped,
            r.grad_evals,
            r.prox_evals
        );
    }
    out
}

pub fn write_telemetry<W: Write>(records: &[TelemetryRecord], mut w: W) -> Result<()> {
    w.write_all(telemetry_csv(records).as_bytes())?;
    Ok(())
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    MaxIterations,
    Diverged { iteration: usize, magnitude: f64 },
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub records: Vec<TelemetryRecord>,
    pub state: S,
    pub outcome: Outcome,
    /// `‖v_{k+1} − v_k‖` of the operator variable per round.
    pub operator_steps: Vec<f64>,
    /// Operator variable at rounds `0..=K`, when recorded.
    pub trajectory: Vec<Vector>,
    pub max_staleness: u64,
}

impl<S> RunResult<S> {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    pub fn last(&self) -> Option<&TelemetryRecord> {
        self.records.last()
    }
}

/// `max_i ‖x_i − mean‖`.
pub fn consensus_error(xs: &[&Vector]) -> f64 {
    let mean = xs.iter().fold(Vector::zeros(xs[0].len()), |acc, x| acc + *x) / xs.len() as f64;
    xs.iter().map(|x| (*x - &mean).norm()).fold(0.0, f64::max)
}

/// `max_i ‖x_i − x*‖`.
pub fn optimality_error(xs: &[&Vector], reference: &Vector) -> f64 {
    xs.iter().map(|x| (*x - reference).norm()).fold(0.0, f64::max)
}

fn divergence(v: &Vector) -> Option<f64> {
    v.iter()
        .find(|c| !c.is_finite() || c.abs() > DIVERGENCE_THRESHOLD)
        .map(|c| c.abs())
}

/// Runs `protocol` from `state` for at most `max_iter` rounds.
///
/// Each round samples the active set (i.i.d. Bernoulli(`p_act`), resampled
/// when empty); then, stage by stage, active agents prepare, send quantized
/// messages that are each dropped with probability `p_loss`, and apply their
/// update from the mailbox. Dropped links keep their last delivered value.
/// Inactive agents neither send nor update. The run stops once the
/// fixed-point residual stays at or below `tol` for one round (or
/// [`QUIET_WINDOW`] rounds when imperfections are active).
pub fn run<P: Protocol>(
    protocol: &P,
    initial: P::State,
    reference: Option<&Vector>,
    imperfections: &ImperfectionConfig,
    max_iter: usize,
    tol: f64,
) -> Result<RunResult<P::State>> {
    let control = RunControl {
        max_iter,
        tol,
        record_trajectory: false,
    };
    run_with(protocol, initial, reference, imperfections, &control)
}

/// Stopping rule and recording options for [`run_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunControl {
    pub max_iter: usize,
    pub tol: f64,
    /// Keep the operator variable after every round (and initially).
    pub record_trajectory: bool,
}

/// [`run`] with explicit [`RunControl`].
pub fn run_with<P: Protocol>(
    protocol: &P,
    initial: P::State,
    reference: Option<&Vector>,
    imperfections: &ImperfectionConfig,
    control: &RunControl,
) -> Result<RunResult<P::State>> {
    imperfections.validate()?;
    if control.tol.is_nan() || control.tol < 0.0 {
        return Err(Error::invalid("sim.tol", format!("{} must be non-negative", control.tol)));
    }
    let (max_iter, tol) = (control.max_iter, control.tol);
    let n = protocol.n_agents();
    let perfect = imperfections.is_perfect();
    let window = if perfect { 1 } else { QUIET_WINDOW };
    let mut rng = ChaCha8Rng::seed_from_u64(imperfections.seed);
    let q = imperfections.quantizer;

    let mut state = initial;
    let mut mailboxes: Vec<Mailbox> = (0..protocol.stages())
        .map(|stage| Mailbox::primed(protocol, stage, &state, q))
        .collect();
    let mut work = Work::default();
    let (mut sent, mut dropped) = (0u64, 0u64);
    let mut records = Vec::new();
    let mut operator_steps = Vec::new();
    let mut quiet = 0;
    let mut outcome = Outcome::MaxIterations;
    let mut active = vec![true; n];

    let mut prev_full = protocol.full_state(&state);
    let mut prev_op = protocol.operator_variable(&state);
    let mut trajectory = Vec::new();
    if control.record_trajectory {
        trajectory.push(prev_op.clone());
    }

    for k in 0..max_iter {
        if imperfections.p_act < 1.0 {
            loop {
                for a in active.iter_mut() {
                    *a = rng.gen_bool(imperfections.p_act);
                }
                if active.iter().any(|&a| a) {
                    break;
                }
            }
        }

        for (stage, mailbox) in mailboxes.iter_mut().enumerate() {
            for i in (0..n).filter(|&i| active[i]) {
                protocol.prepare(k, stage, i, &mut state, &mut work)?;
            }
            for i in (0..n).filter(|&i| active[i]) {
                for &j in protocol.peers(i) {
                    let msg = q.apply(protocol.message(stage, i, j, &state));
                    let pos = protocol
                        .peers(j)
                        .binary_search(&i)
                        .expect("peer lists are symmetric");
                    sent += 1;
                    if imperfections.p_loss > 0.0 && rng.gen_bool(imperfections.p_loss) {
                        dropped += 1;
                        mailbox.drop_message(j, pos);
                    } else {
                        mailbox.deliver(j, pos, msg);
                    }
                }
            }
            for i in (0..n).filter(|&i| active[i]) {
                let inbox = Inbox::new(protocol.peers(i), &mailbox.messages[i]);
                protocol.apply(k, stage, i, &mut state, &inbox, &mut work)?;
            }
        }

        let full = protocol.full_state(&state);
        let op = protocol.operator_variable(&state);
        let fp_residual = (&full - &prev_full).norm();
        operator_steps.push((&op - &prev_op).norm());
        if control.record_trajectory {
            trajectory.push(op.clone());
        }

        let xs: Vec<&Vector> = (0..n).map(|i| protocol.primal(&state, i)).collect();
        records.push(TelemetryRecord {
            k: k + 1,
            optimality_error: reference.map(|r| optimality_error(&xs, r)),
            consensus_error: consensus_error(&xs),
            fp_residual,
            messages_sent: sent,
            messages_dropped: dropped,
            grad_evals: work.grad_evals,
            prox_evals: work.prox_evals,
        });

        if let Some(magnitude) = divergence(&full) {
            outcome = Outcome::Diverged {
                iteration: k + 1,
                magnitude,
            };
            break;
        }
        quiet = if fp_residual <= tol { quiet + 1 } else { 0 };
        if quiet >= window {
            outcome = Outcome::Converged;
            break;
        }
        prev_full = full;
        prev_op = op;
    }

    Ok(RunResult {
        records,
        state,
        outcome,
        operator_steps,
        trajectory,
        max_staleness: mailboxes.iter().map(Mailbox::max_staleness).max().unwrap_or(0),
    })
}
