//! Experiment harness: builds a problem from an [`ExperimentConfig`], runs
//! the selected algorithm through the simulator and checks the applicable
//! convergence bounds.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algorithms::{
    Admm, AdmmState, Atc, ConsensusProblem, Dgd, ExactProjectedGradient, GradientState,
    GradientTracking, GtState, LagrangianAdmm, LagrangianAdmmState, PrimalDualGt,
    PrimalDualState, Protocol, StepSize,
};
use crate::certify::{check_averaged, estimate_lipschitz, gaussian, BoxSampler, DirectionalSampler};
use crate::consensus::{certify_spectrum, consensus_operator, ConsensusMatrix};
use crate::cost::{Huber, LeastSquares, LogisticErm, Quadratic, SharedCost};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operator::{spectral_norm, Matrix, Vector};
use crate::sim::{
    run_with, telemetry_csv, ImperfectionConfig, Outcome, Quantizer, RunControl, TelemetryRecord,
};
use crate::splitting::{gradient_step_op, prox_op};

mod config;
mod reference;
mod report;

pub use config::{
    AlgorithmKind, ExperimentConfig, GraphKind, ProblemKind, ScheduleKind, WeightKind, KEYS,
};
pub use reference::{solve_reference, ReferenceMethod, ReferenceSolution, REFERENCE_RESIDUAL};
pub use report::{
    bias_scaling_line, km_lines, picard_line, BoundLine, BoundReport, Status, BIAS_RATIO,
    BOUND_SLACK, EXACT_TOL, FAILURE_LEVEL, ROBUST_TOL,
};

/// Sampled pairs per certification check.
pub const CERTIFY_SAMPLES: usize = 1000;

/// A configured problem, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: ConsensusProblem,
    pub reference: ReferenceSolution,
    pub rho: f64,
    pub schedule: StepSize,
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::invalid(key, reason)
}

fn build_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    let g = match cfg.graph_kind {
        GraphKind::Ring => Graph::ring(cfg.n),
        GraphKind::Path => Graph::path(cfg.n),
        GraphKind::Complete => Graph::complete(cfg.n),
        GraphKind::Random => Graph::random(cfg.n, cfg.p, cfg.graph_seed),
        GraphKind::File => {
            let path = cfg.graph_path.as_ref().ok_or_else(|| bad("graph.path", "missing"))?;
            let g = Graph::read_edge_list(path).map_err(|e| match e {
                Error::Io(_) => e,
                other => bad("graph.path", other.to_string()),
            })?;
            if g.n_agents() != cfg.n {
                return Err(bad(
                    "graph.n",
                    format!("edge list has {} agents, config says {}", g.n_agents(), cfg.n),
                ));
            }
            Ok(g)
        }
    };
    g.map_err(|e| match e {
        Error::Io(_) | Error::InvalidParameter { .. } => e,
        other => bad("graph.kind", other.to_string()),
    })
}

fn per_agent_curvature(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let (n, d) = (cfg.n, cfg.dim);
    match cfg.curvature.as_deref() {
        Some([c]) => vec![Vector::from_element(d, *c); n],
        Some(c) if c.len() == n => c.iter().map(|&v| Vector::from_element(d, v)).collect(),
        Some(c) => (0..n).map(|i| Vector::from_column_slice(&c[i * d..(i + 1) * d])).collect(),
        None => (0..n)
            .map(|_| Vector::from_fn(d, |_, _| rng.gen_range(0.5..2.0)))
            .collect(),
    }
}

fn per_agent_centers(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, spread: f64) -> Vec<Vector> {
    let d = cfg.dim;
    match cfg.centers.as_deref() {
        Some(c) => (0..cfg.n).map(|i| Vector::from_column_slice(&c[i * d..(i + 1) * d])).collect(),
        None => (0..cfg.n)
            .map(|_| Vector::from_fn(d, |_, _| rng.gen_range(-spread..spread)))
            .collect(),
    }
}

fn logistic_costs(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SharedCost>> {
    let (features, labels) = match &cfg.data {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            LogisticErm::parse_data(&text).map_err(|e| bad("problem.data", e.to_string()))?
        }
        None => {
            let truth = Vector::from_fn(cfg.dim, |_, _| gaussian(rng));
            let m = cfg.n * cfg.samples;
            let a = Matrix::from_fn(m, cfg.dim, |_, _| gaussian(rng));
            let b = Vector::from_fn(m, |h, _| {
                if a.row(h).dot(&truth.transpose()) + 0.5 * gaussian(rng) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            });
            (a, b)
        }
    };
    if features.ncols() != cfg.dim {
        return Err(bad(
            "problem.dim",
            format!("data has {} features, config says {}", features.ncols(), cfg.dim),
        ));
    }
    let m = features.nrows();
    if m < cfg.n {
        return Err(bad("problem.data", format!("{m} rows cannot be split across {} agents", cfg.n)));
    }
    // contiguous, near-equal row blocks
    (0..cfg.n)
        .map(|i| {
            let (start, end) = (i * m / cfg.n, (i + 1) * m / cfg.n);
            let a = features.rows(start, end - start).into_owned();
            let b = labels.rows(start, end - start).into_owned();
            Ok(Arc::new(LogisticErm::new(a, b, cfg.reg)?) as SharedCost)
        })
        .collect()
}

fn build_costs(cfg: &ExperimentConfig) -> Result<Vec<SharedCost>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.problem_seed);
    let costs = match cfg.problem_kind {
        ProblemKind::Quadratic => {
            let curv = per_agent_curvature(cfg, &mut rng);
            let centers = per_agent_centers(cfg, &mut rng, 5.0);
            curv.iter()
                .zip(&centers)
                .map(|(c, a)| Ok(Arc::new(Quadratic::centered(c, a)?) as SharedCost))
                .collect::<Result<Vec<_>>>()?
        }
        ProblemKind::Huber => {
            // generated centers stay within δ of each other so the sum has a
            // unique minimizer
            let centers = per_agent_centers(cfg, &mut rng, 0.5 * cfg.delta);
            centers
                .into_iter()
                .map(|a| Ok(Arc::new(Huber::new(cfg.delta, a)?) as SharedCost))
                .collect::<Result<Vec<_>>>()?
        }
        ProblemKind::LeastSquares => (0..cfg.n)
            .map(|_| {
                let a = Matrix::from_fn(cfg.samples, cfg.dim, |_, _| gaussian(&mut rng));
                let b = Vector::from_fn(cfg.samples, |_, _| gaussian(&mut rng));
                Ok(Arc::new(LeastSquares::new(a, b)?) as SharedCost)
            })
            .collect::<Result<Vec<_>>>()?,
        ProblemKind::Logistic => logistic_costs(cfg, &mut rng)?,
    };
    Ok(costs)
}

/// Builds graph, weights, local costs, the reference solution and the
/// step size. `ρ` is `algo.rho` when set, otherwise `algo.rho_scale/λ̄`
/// for gradient methods and `algo.rho_scale` for ADMM.
pub fn build(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let graph = build_graph(cfg)?;
    let metropolis = ConsensusMatrix::metropolis(&graph)?;
    let weights = match cfg.weights {
        WeightKind::Metropolis => metropolis,
        WeightKind::LazyMetropolis => metropolis.lazy()?,
    };
    let costs = build_costs(cfg)?;
    let reference = solve_reference(&costs)?;
    let problem = ConsensusProblem::new(costs, weights)?;
    let problem = match problem.clone().with_reference(reference.x.clone()) {
        Ok(p) => p,
        // non-differentiable sums keep the reference only for reporting
        Err(_) => problem,
    };
    let rho = match cfg.rho {
        Some(r) => r,
        None if cfg.algorithm.is_admm() => cfg.rho_scale,
        None => {
            let lbar = problem
                .smoothness()
                .ok_or_else(|| bad("algo.rho", "λ̄ is unknown for this problem; set algo.rho"))?;
            cfg.rho_scale / lbar
        }
    };
    let schedule = match cfg.schedule {
        ScheduleKind::Constant => StepSize::constant(rho)?,
        ScheduleKind::Diminishing => StepSize::diminishing(cfg.rho0.unwrap_or(rho), cfg.gamma)?,
    };
    Ok(Experiment {
        config: cfg.clone(),
        problem,
        reference,
        rho,
        schedule,
    })
}

impl Experiment {
    pub fn imperfections(&self) -> Result<ImperfectionConfig> {
        let q = if self.config.quant_step > 0.0 {
            Quantizer::uniform(self.config.quant_step)?
        } else {
            Quantizer::None
        };
        ImperfectionConfig::new(self.config.p_act, self.config.p_loss, q, self.config.sim_seed)
    }

    /// Contraction factor of the constant-step ATC operator, when the local
    /// curvature constants are known.
    pub fn atc_contraction(&self) -> Option<f64> {
        if self.config.algorithm != AlgorithmKind::Atc || !self.schedule.is_constant() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for c in self.problem.costs() {
            let (l, mu) = (c.smoothness()?, c.strong_convexity()?);
            worst = worst.max((1.0 - self.rho * mu).abs()).max((1.0 - self.rho * l).abs());
        }
        Some(worst * spectral_norm(self.problem.weights().matrix()))
    }

    fn zeros(&self) -> Vec<Vector> {
        vec![Vector::zeros(self.problem.dim()); self.problem.n_agents()]
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<TelemetryRecord>,
    pub outcome: Outcome,
    pub agents: Vec<Vector>,
    pub report: BoundReport,
    pub max_staleness: u64,
}

impl RunSummary {
    pub fn final_error(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.optimality_error)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }
}

struct Executed {
    records: Vec<TelemetryRecord>,
    outcome: Outcome,
    agents: Vec<Vector>,
    steps: Vec<f64>,
    trajectory: Vec<Vector>,
    max_staleness: u64,
}

fn execute<P: Protocol>(exp: &Experiment, proto: &P, init: P::State, record: bool) -> Result<Executed> {
    let control = RunControl {
        max_iter: exp.config.max_iter,
        tol: exp.config.tol,
        record_trajectory: record,
    };
    let r = run_with(proto, init, Some(&exp.reference.x), &exp.imperfections()?, &control)?;
    let agents = (0..proto.n_agents()).map(|i| proto.primal(&r.state, i).clone()).collect();
    Ok(Executed {
        records: r.records,
        outcome: r.outcome,
        agents,
        steps: r.operator_steps,
        trajectory: r.trajectory,
        max_staleness: r.max_staleness,
    })
}

/// Runs the configured algorithm and evaluates the bound report.
pub fn run_experiment(exp: &Experiment) -> Result<RunSummary> {
    let cfg = &exp.config;
    let p = &exp.problem;
    let sync = cfg.is_perfect_network();
    let record = sync
        && (cfg.algorithm.is_admm() || exp.atc_contraction().is_some_and(|z| z < 1.0));
    let ex = match cfg.algorithm {
        AlgorithmKind::Atc => execute(exp, &Atc::new(p, exp.schedule), GradientState::new(exp.zeros()), record)?,
        AlgorithmKind::Dgd => execute(exp, &Dgd::new(p, exp.schedule), GradientState::new(exp.zeros()), record)?,
        AlgorithmKind::ExactPg => execute(
            exp,
            &ExactProjectedGradient::new(p, exp.schedule),
            GradientState::new(exp.zeros()),
            record,
        )?,
        AlgorithmKind::GradientTracking => execute(
            exp,
            &GradientTracking::new(p, exp.schedule),
            GtState::start(exp.zeros()),
            record,
        )?,
        AlgorithmKind::GtPrimalDual => execute(
            exp,
            &PrimalDualGt::new(p, exp.schedule)?,
            PrimalDualState::start(exp.zeros()),
            record,
        )?,
        AlgorithmKind::Admm => execute(
            exp,
            &Admm::new(p, exp.rho, cfg.alpha)?,
            AdmmState::zeros(p.graph(), p.dim()),
            record,
        )?,
        AlgorithmKind::LagrangianAdmm => execute(
            exp,
            &LagrangianAdmm::new(p, exp.rho)?,
            LagrangianAdmmState::zeros(p.graph(), p.dim()),
            record,
        )?,
    };
    let report = bound_report(exp, &ex);
    Ok(RunSummary {
        records: ex.records,
        outcome: ex.outcome,
        agents: ex.agents,
        report,
        max_staleness: ex.max_staleness,
    })
}

fn bound_report(exp: &Experiment, ex: &Executed) -> BoundReport {
    let cfg = &exp.config;
    let mut report = BoundReport::default();
    let converged = ex.outcome == Outcome::Converged;
    let sync = cfg.is_perfect_network();

    if sync && converged && ex.trajectory.len() >= 2 {
        let first = &ex.trajectory[0];
        let last = ex.trajectory.last().expect("non-empty");
        let km_alpha = match cfg.algorithm {
            AlgorithmKind::Admm if cfg.alpha < 1.0 => Some(cfg.alpha),
            AlgorithmKind::LagrangianAdmm => Some(0.5),
            _ => None,
        };
        if let Some(alpha) = km_alpha {
            km_lines(&mut report, alpha, &ex.steps, (first - last).norm());
        }
        if let Some(zeta) = exp.atc_contraction().filter(|&z| z < 1.0) {
            picard_line(&mut report, zeta, &ex.trajectory, cfg.tol);
        }
    }

    let err = ex.records.last().and_then(|r| r.optimality_error);
    let diverged = matches!(ex.outcome, Outcome::Diverged { .. });
    let shown = err.map_or("n/a".to_string(), |e| format!("{e:e}"));
    use AlgorithmKind::*;
    match (cfg.algorithm, sync) {
        (Admm | LagrangianAdmm | GradientTracking | GtPrimalDual | ExactPg, true) => report.push(
            "exact convergence",
            !diverged && err.is_some_and(|e| e <= EXACT_TOL),
            format!("final optimality error {shown} (need ≤ {EXACT_TOL:e})"),
        ),
        (Admm | LagrangianAdmm, false) => report.push(
            "robustness expectation (ADMM converges under imperfections)",
            !diverged && err.is_some_and(|e| e <= ROBUST_TOL),
            format!("final optimality error {shown} (need ≤ {ROBUST_TOL:e})"),
        ),
        (GradientTracking | GtPrimalDual, false) => report.push(
            "robustness expectation (gradient tracking loses exactness under imperfections)",
            diverged || err.is_some_and(|e| e > FAILURE_LEVEL),
            format!("final optimality error {shown} (expected > {FAILURE_LEVEL:e} or divergence)"),
        ),
        (Atc | Dgd, _) if exp.schedule.is_constant() => report.push(
            "biased neighborhood expectation (constant step settles near, not at, x*)",
            converged && err.is_some_and(|e| e > EXACT_TOL),
            format!("run {}, final optimality error {shown}", if converged { "settled" } else { "did not settle" }),
        ),
        (Atc | Dgd, _) => report.push(
            "diminishing step expectation (error below 1e-3)",
            !diverged && err.is_some_and(|e| e <= FAILURE_LEVEL),
            format!("final optimality error {shown}"),
        ),
        (ExactPg, false) => {}
    }
    report
}

fn vec_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

/// Summary JSON: config echo, outcome, final metrics, per-agent estimates,
/// reference solution and bound report.
pub fn summary_json(exp: &Experiment, run: &RunSummary) -> Value {
    let config: serde_json::Map<String, Value> = exp
        .config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    json!({
        "config": config,
        "algorithm": exp.config.algorithm.as_str(),
        "rho": exp.rho,
        "outcome": run.outcome,
        "rounds": run.records.len(),
        "final": run.records.last(),
        "max_staleness": run.max_staleness,
        "agents": run.agents.iter().map(vec_json).collect::<Vec<_>>(),
        "reference": {
            "x": vec_json(&exp.reference.x),
            "method": exp.reference.method.to_string(),
            "residual": exp.reference.residual,
        },
        "bound_report": run.report.lines,
    })
}

/// Writes `telemetry.csv`, `summary.json`, `bound_report.txt` and
/// `config_echo.cfg` into `out`.
pub fn write_artifacts(out: &Path, exp: &Experiment, run: &RunSummary) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("telemetry.csv"), telemetry_csv(&run.records))?;
    let summary = serde_json::to_string_pretty(&summary_json(exp, run))
        .map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(out.join("summary.json"), summary + "\n")?;
    fs::write(out.join("bound_report.txt"), run.report.to_string())?;
    fs::write(out.join("config_echo.cfg"), exp.config.to_cfg_string())?;
    Ok(())
}

/// Seed of the `index`-th sweep child (SplitMix64 of the parent seed).
pub fn child_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One child of a sweep.
#[derive(Debug, Clone)]
pub struct SweepChild {
    pub value: String,
    pub experiment: Experiment,
    pub run: RunSummary,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub key: String,
    pub children: Vec<SweepChild>,
    pub report: BoundReport,
}

/// Runs one child per value of `key`, concurrently. Unless the sweep is
/// over `sim.seed`, each child gets a seed derived from the parent's.
pub fn run_sweep(base: &ExperimentConfig, key: &str, values: &[String]) -> Result<Sweep> {
    if values.is_empty() {
        return Err(bad(key, "sweep needs at least one value"));
    }
    let experiments = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = base.clone();
            cfg.set(key, v)?;
            if key != "sim.seed" {
                cfg.sim_seed = child_seed(base.sim_seed, i);
            }
            build(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<Result<RunSummary>> = std::thread::scope(|s| {
        let handles: Vec<_> = experiments
            .iter()
            .map(|e| s.spawn(move || run_experiment(e)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let children = experiments
        .into_iter()
        .zip(values)
        .zip(runs)
        .map(|((experiment, value), run)| {
            Ok(SweepChild {
                value: value.clone(),
                experiment,
                run: run?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = BoundReport::default();
    let algo = base.algorithm;
    let bias_sweep = matches!(algo, AlgorithmKind::Atc | AlgorithmKind::Dgd)
        && base.schedule == ScheduleKind::Constant
        && matches!(key, "algo.rho" | "algo.rho_scale");
    if bias_sweep {
        let points: Option<Vec<(f64, f64)>> = children
            .iter()
            .map(|c| c.run.final_error().map(|e| (c.experiment.rho, e)))
            .collect();
        if let Some(points) = points {
            bias_scaling_line(&mut report, &points);
        }
    }
    Ok(Sweep {
        key: key.to_string(),
        children,
        report,
    })
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

impl Sweep {
    pub fn summary_text(&self) -> String {
        let mut out = format!("sweep over {}\n", self.key);
        for c in &self.children {
            let err = c.run.final_error().map_or("n/a".into(), |e| format!("{e:e}"));
            out += &format!(
                "{} = {}: rho = {}, rounds = {}, final optimality error = {}\n",
                self.key,
                c.value,
                c.experiment.rho,
                c.run.records.len(),
                err
            );
        }
        out + &self.report.to_string()
    }

    pub fn write_artifacts(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out)?;
        for (i, c) in self.children.iter().enumerate() {
            let dir = out.join(format!("{i:02}_{}", sanitize(&c.value)));
            write_artifacts(&dir, &c.experiment, &c.run)?;
        }
        fs::write(out.join("sweep_report.txt"), self.summary_text())?;
        Ok(())
    }
}

/// Operator-property checks for the configured problem, without running
/// the algorithm.
pub fn certify(exp: &Experiment) -> Result<BoundReport> {
    let cfg = &exp.config;
    let p = &exp.problem;
    let mut report = BoundReport::default();
    let seed = cfg.sim_seed;

    match certify_spectrum(p.weights()) {
        Ok(alpha) => {
            report.push("consensus matrix spectrum", true, format!("W is {alpha}-averaged"));
            let op = consensus_operator(p.weights(), p.dim());
            let mut sampler = BoxSampler::new(op.dim(), 10.0, seed);
            let check = check_averaged(&op, alpha, &mut sampler, CERTIFY_SAMPLES)?;
            report.push(
                "consensus matrix averagedness (sampled)",
                check.holds,
                format!("{CERTIFY_SAMPLES} pairs, worst violation {:e}", check.worst_violation),
            );
        }
        Err(e) => report.push("consensus matrix spectrum", false, e.to_string()),
    }

    if cfg.algorithm.is_admm() {
        let mut worst = f64::NEG_INFINITY;
        let mut holds = true;
        for (i, f) in p.costs().iter().enumerate() {
            let scale = 1.0 / (exp.rho * p.graph().degree(i) as f64);
            let op = prox_op(f, scale)?;
            let mut sampler = BoxSampler::new(p.dim(), 10.0, child_seed(seed, i));
            let check = check_averaged(&op, 0.5, &mut sampler, CERTIFY_SAMPLES / 10)?;
            holds &= check.holds;
            worst = worst.max(check.worst_violation);
        }
        report.push(
            "local proximal maps are 1/2-averaged (sampled)",
            holds,
            format!("worst violation {worst:e}"),
        );
    } else {
        let mut worst = f64::NEG_INFINITY;
        let mut tagged = true;
        for (i, f) in p.costs().iter().enumerate() {
            let op = gradient_step_op(f, exp.schedule.at(0))?;
            let Some(bound) = op.property().lipschitz_bound() else {
                tagged = false;
                continue;
            };
            let mut sampler = DirectionalSampler::new(p.dim(), 10.0, 1.0, child_seed(seed, i));
            let est = estimate_lipschitz(&op, &mut sampler, CERTIFY_SAMPLES)?;
            worst = worst.max(est - bound);
        }
        report.push(
            "local gradient steps respect their Lipschitz tags (sampled)",
            tagged && worst <= BOUND_SLACK,
            if tagged {
                format!("worst excess {worst:e}")
            } else {
                "some local costs have unknown curvature".to_string()
            },
        );
        if let Some(zeta) = exp.atc_contraction() {
            report.push(
                "ATC operator is contractive",
                zeta < 1.0,
                format!("ζ = {zeta}"),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn default_admm_run_converges_exactly() {
        let exp = build(&cfg("problem.centers = 0, 1, 5")).unwrap();
        assert!((exp.reference.x[0] - 2.0).abs() > 0.0);
        let run = run_experiment(&exp).unwrap();
        assert_eq!(run.outcome, Outcome::Converged);
        assert!(run.final_error().unwrap() <= EXACT_TOL);
        assert!(run.report.lines.iter().any(|l| l.name.starts_with("KM")));
    }

    #[test]
    fn rho_defaults() {
        let admm = build(&cfg("")).unwrap();
        assert_eq!(admm.rho, 1.0);
        let atc = build(&cfg("algorithm = atc\nproblem.curvature = 2\nalgo.rho_scale = 0.5")).unwrap();
        assert!((atc.rho - 0.25).abs() < 1e-15);
    }

    #[test]
    fn generated_problems_are_deterministic() {
        for kind in ProblemKind::ALL {
            let c = cfg(&format!("problem.kind = {kind}\nproblem.dim = 2\ngraph.n = 4\nproblem.seed = 3"));
            let a = build(&c).unwrap();
            let b = build(&c).unwrap();
            assert_eq!(a.reference.x, b.reference.x, "{kind}");
            assert!(a.reference.residual <= REFERENCE_RESIDUAL, "{kind}");
        }
    }

    #[test]
    fn child_seeds_differ() {
        assert_ne!(child_seed(1, 0), child_seed(1, 1));
        assert_eq!(child_seed(1, 5), child_seed(1, 5));
    }

    #[test]
    fn certify_reports_spectrum() {
        let exp = build(&cfg("graph.kind = ring\ngraph.n = 6")).unwrap();
        let r = certify(&exp).unwrap();
        assert!(r.all_pass(), "{r}");
    }
}
