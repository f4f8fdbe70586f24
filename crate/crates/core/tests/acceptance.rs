//! Acceptance suite. Prints one PASS/FAIL line per criterion (plus INFO
//! lines) and exits non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::sync::Arc;

use nexop::algorithms::{
    admm_step, gradient_tracking_step, lagrangian_admm_step, primal_dual_gt_step, Admm,
    AdmmState, Atc, ConsensusProblem, GradientState, GradientTracking, GtState, LagrangianState,
    PrimalDualState, StepSize,
};
use nexop::certify::{check_averaged, BoxSampler};
use nexop::consensus::{certify_spectrum, consensus_operator, consensus_step, ConsensusMatrix};
use nexop::cost::{
    minimize_smooth, prox_numeric, ConsensusIndicator, CostFunction, Huber, Quadratic, SharedCost,
};
use nexop::experiment::{self, ExperimentConfig};
use nexop::graph::Graph;
use nexop::iteration::{km_iterate, picard_iterate};
use nexop::operator::{rotation, Matrix, Operator, Property, Vector};
use nexop::sim::{run, telemetry_csv, ImperfectionConfig, Outcome, Quantizer, RunResult};
use nexop::splitting::{gradient_step_op, prox_op, refl_op};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-9;

struct Suite {
    failed: Vec<usize>,
}

impl Suite {
    fn criterion(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag}  criterion {id:>2} ({name}): {detail}");
        if !ok {
            self.failed.push(id);
        }
    }

    fn info(&self, id: usize, detail: String) {
        println!("INFO  criterion {id:>2}: {detail}");
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vector {
    Vector::from_fn(dim, |_, _| rng.gen_range(-radius..radius))
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = rand_vec(rng, dim, 1.0);
        if v.norm() > 0.1 {
            return v.normalize();
        }
    }
}

/// Block-diagonal 4×4 rotation, scaled.
fn rotation4(rng: &mut ChaCha8Rng, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(4, 4);
    for b in 0..2 {
        let r = rotation(rng.gen_range(0.1..TAU - 0.1));
        m.view_mut((2 * b, 2 * b), (2, 2)).copy_from(&r);
    }
    m * scale
}

fn about(m: Matrix, center: &Vector, property: Property) -> Operator {
    let offset = center - &m * center;
    Operator::affine(m, offset).unwrap().with_property(property)
}

fn random_quadratic(rng: &mut ChaCha8Rng, dim: usize) -> (SharedCost, Vector) {
    let curv = Vector::from_fn(dim, |_, _| rng.gen_range(0.2..4.0));
    let center = rand_vec(rng, dim, 5.0);
    (Arc::new(Quadratic::centered(&curv, &center).unwrap()), center)
}

// ---------------------------------------------------------------------------

fn km_bound(s: &mut Suite) {
    let alphas = [0.25, 0.5, 0.75];
    let (mut literal_fail, mut relaxed_fail, mut cases) = (0, 0, 0);
    let mut literal_worst = f64::NEG_INFINITY;
    let mut example = None;
    for idx in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + idx);
        let center = rand_vec(&mut rng, 4, 5.0);
        let x0 = rand_vec(&mut rng, 4, 10.0);
        let (op, fixed, kind) = match idx % 3 {
            0 => (about(rotation4(&mut rng, 1.0), &center, Property::Nonexpansive), center.clone(), "rotation"),
            1 => {
                let u = unit(&mut rng, 4);
                let h = Matrix::identity(4, 4) - &u * u.transpose() * 2.0;
                // nearest fixed point: projection of x0 onto the mirror
                let proj = &x0 - &u * u.dot(&(&x0 - &center));
                (about(h, &center, Property::Nonexpansive), proj, "reflection")
            }
            _ => {
                let (f, c) = random_quadratic(&mut rng, 4);
                (prox_op(&f, rng.gen_range(0.1..3.0)).unwrap(), c, "prox")
            }
        };
        assert!(op.residual(&fixed).unwrap() <= 1e-12, "oracle fixed point");
        for &alpha in &alphas {
            cases += 1;
            let trace = km_iterate(&op, &x0, alpha, 1000, 0.0).unwrap();
            let lit = trace.check_km_bound_unrelaxed(alpha, &fixed, SLACK);
            let rel = trace.check_km_bound(alpha, &fixed, SLACK);
            if !lit.holds {
                literal_fail += 1;
                if example.is_none() {
                    example = Some(format!("{kind} #{idx}, α = {alpha}, first violation at k = {:?}", lit.first_violation));
                }
            }
            literal_worst = literal_worst.max(lit.worst_margin);
            relaxed_fail += usize::from(!rel.holds);
        }
    }
    s.criterion(
        1,
        "KM residual bound on ‖(I−T)x_k‖",
        literal_fail == 0,
        format!(
            "{literal_fail}/{cases} traces violate, worst margin {literal_worst:.3e}{}",
            example.map_or(String::new(), |e| format!("; e.g. {e}"))
        ),
    );
    s.info(
        1,
        format!("same bound on the relaxed residual α‖(I−T)x_k‖ = ‖x_(k+1) − x_k‖: {relaxed_fail}/{cases} traces violate"),
    );
}

fn picard_bound(s: &mut Suite) {
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + idx);
        let (op, fixed) = match idx % 4 {
            0 => {
                let c = rand_vec(&mut rng, 4, 5.0);
                let z = rng.gen_range(0.3..0.95);
                (about(rotation4(&mut rng, z), &c, Property::Contractive(z)), c)
            }
            1 => {
                let (f, c) = random_quadratic(&mut rng, 4);
                let l = f.smoothness().unwrap();
                (gradient_step_op(&f, rng.gen_range(0.1..1.9) / l).unwrap(), c)
            }
            2 => {
                let (f, c) = random_quadratic(&mut rng, 4);
                (prox_op(&f, rng.gen_range(0.1..3.0)).unwrap(), c)
            }
            _ => {
                let (f, c) = random_quadratic(&mut rng, 4);
                (refl_op(&f, rng.gen_range(0.1..3.0)).unwrap(), c)
            }
        };
        let zeta = op.property().contraction_factor().expect("certified contraction");
        let x0 = rand_vec(&mut rng, 4, 10.0);
        let trace = picard_iterate(&op, &x0, 1000, 0.0).unwrap();
        let check = trace.check_picard_bound(zeta, &fixed, SLACK);
        failures += usize::from(!check.holds);
        worst = worst.max(check.worst_margin);
    }
    s.criterion(
        2,
        "Picard contraction bound",
        failures == 0,
        format!("{failures}/20 maps violate, worst margin {worst:.3e}"),
    );
}

fn graphs10() -> Vec<(&'static str, Graph)> {
    vec![
        ("ring(10)", Graph::ring(10).unwrap()),
        ("path(10)", Graph::path(10).unwrap()),
        ("G(10, 0.4)", Graph::random(10, 0.4, 3).unwrap()),
    ]
}

fn consensus_exactness(s: &mut Suite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g) in graphs10() {
        let w = ConsensusMatrix::metropolis(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = rand_vec(&mut rng, 10, 10.0);
        let mean = u.mean();
        let mut x = u.clone();
        let mut worst_sum: f64 = 0.0;
        let mut steps = 0;
        while (x.add_scalar(-mean)).amax() > 1e-8 && steps < 10_000 {
            let next = consensus_step(&w, &x, 1).unwrap();
            worst_sum = worst_sum.max((next.sum() - x.sum()).abs());
            x = next;
            steps += 1;
        }
        let err = x.add_scalar(-mean).amax();
        ok &= err <= 1e-8 && worst_sum <= 1e-12;
        parts.push(format!("{name}: {steps} steps, error {err:.1e}, sum drift {worst_sum:.1e}"));
    }
    s.criterion(3, "consensus exactness", ok, parts.join("; "));
}

fn spectral_certification(s: &mut Suite) {
    let mut ws = Vec::new();
    for n in [3, 5, 10, 20] {
        ws.push(Graph::ring(n).unwrap());
        ws.push(Graph::path(n).unwrap());
        ws.push(Graph::complete(n).unwrap());
        for seed in 0..3 {
            ws.push(Graph::random(n, 0.4, seed).unwrap());
        }
    }
    let mut count = 0;
    let mut failures = Vec::new();
    for (gi, g) in ws.iter().enumerate() {
        let base = ConsensusMatrix::metropolis(g).unwrap();
        for w in [base.clone(), base.lazy().unwrap()] {
            count += 1;
            // independent eigendecomposition
            let eig = w.matrix().clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = (eig.min(), eig.max());
            let alpha = certify_spectrum(&w);
            let averaged = alpha.as_ref().ok().map(|&a| {
                let op = consensus_operator(&w, 1);
                let mut sampler = BoxSampler::new(w.size(), 10.0, gi as u64);
                (a, check_averaged(&op, a, &mut sampler, 1000).unwrap())
            });
            let good = (hi - 1.0).abs() <= 1e-10
                && lo > -1.0
                && averaged.as_ref().is_some_and(|(a, c)| (a - (1.0 - lo) / 2.0).abs() <= 1e-10 && c.holds);
            if !good {
                failures.push(format!("graph #{gi} (N = {}): λ = [{lo}, {hi}], {averaged:?}", g.n_agents()));
            }
        }
    }
    s.criterion(
        4,
        "spectral certification",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{count} matrices, λ_N = 1, λ_1 > −1, averaged at (1−λ_1)/2 on 1000 pairs each")
        } else {
            failures.join("; ")
        },
    );
}

fn prox_equivalence(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let rho = rng.gen_range(0.05..5.0);

        let a = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let p = a.transpose() * &a + Matrix::identity(3, 3) * 0.1;
        let q = Quadratic::new(p, rand_vec(&mut rng, 3, 3.0), 0.0).unwrap();
        let y = rand_vec(&mut rng, 3, 10.0);
        let d = q.prox(&y, rho).unwrap() - prox_numeric(&q, &y, rho).unwrap();
        worst[0] = worst[0].max(d.amax());

        let h = Huber::new(rng.gen_range(0.1..3.0), rand_vec(&mut rng, 3, 5.0)).unwrap();
        let y = rand_vec(&mut rng, 3, 10.0);
        let d = h.prox(&y, rho).unwrap() - prox_numeric(&h, &y, rho).unwrap();
        worst[1] = worst[1].max(d.amax());

        // the indicator has no gradient: minimize ‖x − y‖²/(2ρ) over the
        // consensus set by descending on the common block
        let (agents, block) = (4, 2);
        let ind = ConsensusIndicator::new(agents, block).unwrap();
        let y = rand_vec(&mut rng, agents * block, 10.0);
        let blocks: Vec<Vector> = (0..agents).map(|i| y.rows(i * block, block).into_owned()).collect();
        let value = |c: &Vector| blocks.iter().map(|b| (c - b).norm_squared()).sum::<f64>() / (2.0 * rho);
        let grad = |c: &Vector| blocks.iter().fold(Vector::zeros(block), |g, b| g + (c - b)) / rho;
        let curvature = agents as f64 / rho;
        let c = minimize_smooth(value, grad, Vector::zeros(block), Some((curvature, curvature)), 1e-10, 100_000)
            .unwrap()
            .point;
        let oracle = Vector::from_fn(agents * block, |r, _| c[r % block]);
        let d = ind.prox(&y, rho).unwrap() - oracle;
        worst[2] = worst[2].max(d.amax());
    }
    s.criterion(
        5,
        "prox oracle equivalence",
        worst.iter().all(|&w| w <= 1e-6),
        format!(
            "max deviation over 100 (y, ρ): quadratic {:.1e}, Huber {:.1e}, consensus indicator {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    );
}

// ---------------------------------------------------------------------------

/// Path(3) with f_i = c_i/2 (x − a_i)², c = (1, 2, 3), a = (1, −2, 4).
const CURV: [f64; 3] = [1.0, 2.0, 3.0];
const CENTERS: [f64; 3] = [1.0, -2.0, 4.0];

fn scalar_problem(g: Graph, curv: &[f64], centers: &[f64]) -> ConsensusProblem {
    let costs: Vec<SharedCost> = curv
        .iter()
        .zip(centers)
        .map(|(&l, &a)| Arc::new(Quadratic::scalar(l, a).unwrap()) as SharedCost)
        .collect();
    let x_star = curv.iter().zip(centers).map(|(l, a)| l * a).sum::<f64>() / curv.iter().sum::<f64>();
    ConsensusProblem::new(costs, ConsensusMatrix::metropolis(&g).unwrap())
        .unwrap()
        .with_reference(Vector::from_element(1, x_star))
        .unwrap()
}

fn path3() -> ConsensusProblem {
    scalar_problem(Graph::path(3).unwrap(), &CURV, &CENTERS)
}

/// Fixed point of constant-step ATC on scalar quadratics:
/// `(I − W(I − ρΛ))x = ρWΛa`.
fn atc_fixed_point(p: &ConsensusProblem, curv: &[f64], centers: &[f64], rho: f64) -> Vector {
    let n = curv.len();
    let w = p.weights().matrix();
    let lam = Matrix::from_diagonal(&Vector::from_column_slice(curv));
    let a = Vector::from_column_slice(centers);
    let lhs = Matrix::identity(n, n) - w * (Matrix::identity(n, n) - &lam * rho);
    let rhs = w * (&lam * a) * rho;
    lhs.lu().solve(&rhs).unwrap()
}

fn primal_vec<S>(r: &RunResult<S>, f: impl Fn(&S, usize) -> f64, n: usize) -> Vector {
    Vector::from_fn(n, |i, _| f(&r.state, i))
}

fn min_error<S>(r: &RunResult<S>) -> f64 {
    r.records
        .iter()
        .filter_map(|x| x.optimality_error)
        .fold(f64::INFINITY, f64::min)
}

fn final_error<S>(r: &RunResult<S>) -> f64 {
    r.last().and_then(|x| x.optimality_error).unwrap_or(f64::NAN)
}

fn atc_run(p: &ConsensusProblem, schedule: StepSize, imp: &ImperfectionConfig, max_iter: usize, tol: f64) -> RunResult<GradientState> {
    let proto = Atc::new(p, schedule);
    run(&proto, GradientState::new(vec![Vector::zeros(1); 3]), p.reference(), imp, max_iter, tol).unwrap()
}

fn dgd_bias(s: &mut Suite) {
    let p = path3();
    let lbar = 3.0;
    let x_star = p.reference().unwrap()[0];
    let perfect = ImperfectionConfig::perfect();
    let mut errors = Vec::new();
    let mut oracle_gap: f64 = 0.0;
    for scale in [0.2, 0.1, 0.05] {
        let rho = scale / lbar;
        let r = atc_run(&p, StepSize::Constant(rho), &perfect, 100_000, 1e-13);
        let xr = atc_fixed_point(&p, &CURV, &CENTERS, rho);
        let x = primal_vec(&r, |st, i| st.x[i][0], 3);
        oracle_gap = oracle_gap.max((&x - &xr).amax());
        let oracle_err = xr.add_scalar(-x_star).abs().max();
        errors.push((scale, final_error(&r), oracle_err));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let constant_ok = errors[0].1 > 1e-4
        && ratios.iter().all(|&q| q >= 1.5)
        && errors.windows(2).all(|w| w[1].1 < w[0].1)
        && oracle_gap <= 1e-8;

    let sched = StepSize::diminishing(1.0 / lbar, 1.0).unwrap();
    let r = atc_run(&p, sched, &perfect, 300_000, 0.0);
    let hit = r
        .records
        .iter()
        .find(|x| x.optimality_error.is_some_and(|e| e <= 1e-3))
        .map(|x| x.k);

    s.criterion(
        6,
        "DGD bias and scaling",
        constant_ok && hit.is_some(),
        format!(
            "ATC errors {} (closed-form fixed point within {oracle_gap:.1e}); reduction per halving {}; diminishing step reaches 1e-3 at round {}",
            errors.iter().map(|(sc, e, _)| format!("ρ = {sc}/λ̄: {e:.4e}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(", "),
            hit.map_or("never (3e5 rounds)".into(), |k| k.to_string()),
        ),
    );
}

fn log_slope(errors: &[(usize, f64)]) -> f64 {
    let tail = &errors[errors.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(k, e)| (k as f64, e.log10()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn exact_convergence(s: &mut Suite) {
    let problems = [
        ("quadratic", "problem.kind = quadratic\nproblem.dim = 2\ngraph.kind = ring\ngraph.n = 5\nproblem.seed = 1"),
        ("least_squares", "problem.kind = least_squares\nproblem.dim = 3\nproblem.samples = 6\ngraph.kind = path\ngraph.n = 4\nproblem.seed = 2"),
        ("huber", "problem.kind = huber\nproblem.dim = 2\nproblem.delta = 1\ngraph.kind = ring\ngraph.n = 4\nproblem.seed = 3"),
        ("logistic", "problem.kind = logistic\nproblem.dim = 3\nproblem.samples = 10\ngraph.kind = ring\ngraph.n = 6\nproblem.seed = 4"),
    ];
    let algos = [
        ("gradient_tracking", "algorithm = gradient_tracking\nalgo.rho_scale = 0.3"),
        ("admm", "algorithm = admm\nalgo.rho = 1"),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (pname, ptext) in problems {
        for (aname, atext) in algos {
            let cfg = ExperimentConfig::parse(&format!("{ptext}\n{atext}\nsim.max_iter = 200000\nsim.tol = 1e-13")).unwrap();
            let exp = experiment::build(&cfg).unwrap();
            let run = experiment::run_experiment(&exp).unwrap();
            let err = run.final_error().unwrap_or(f64::NAN);
            let good = err <= 1e-7;
            ok &= good;
            let mut part = format!("{aname}/{pname}: {err:.1e} in {} rounds", run.records.len());
            if pname == "quadratic" {
                // separate run stopped well above round-off for the rate fit
                let mut c = cfg.clone();
                c.tol = 1e-10;
                let r = experiment::run_experiment(&experiment::build(&c).unwrap()).unwrap();
                let errs: Vec<(usize, f64)> = r.records.iter().map(|x| (x.k, x.optimality_error.unwrap())).collect();
                let slope = log_slope(&errs);
                ok &= slope <= -1e-3;
                part += &format!(", log10-error slope {slope:.2e}/round");
            }
            parts.push(part);
        }
    }
    s.criterion(7, "exact convergence of GT and ADMM", ok, parts.join("; "));
}

fn vector_problem(g: Graph, seed: u64) -> ConsensusProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<SharedCost> = (0..g.n_agents()).map(|_| random_quadratic(&mut rng, 2).0).collect();
    ConsensusProblem::new(costs, ConsensusMatrix::metropolis(&g).unwrap()).unwrap()
}

fn gt_equivalence(s: &mut Suite) {
    let mut worst: f64 = 0.0;
    for (g, seed) in [(Graph::path(3).unwrap(), 8), (Graph::ring(5).unwrap(), 9), (Graph::random(8, 0.4, 2).unwrap(), 10)] {
        let p = vector_problem(g, seed);
        let rho = 0.2 / p.smoothness().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0: Vec<Vector> = (0..p.n_agents()).map(|_| rand_vec(&mut rng, 2, 5.0)).collect();
        let mut pd = PrimalDualState::start(x0);
        let mut gt = GtState::from_primal_dual(&p, &pd, rho).unwrap();
        for _ in 0..200 {
            pd = primal_dual_gt_step(&p, &pd, rho).unwrap();
            gt = gradient_tracking_step(&p, &gt, rho).unwrap();
            worst = worst.max((pd.stacked_x() - gt.stacked_x()).amax());
        }
    }
    s.criterion(
        8,
        "GT dual-representation equivalence",
        worst <= 1e-8,
        format!("path(3), ring(5), G(8, 0.4); 200 iterates; max x deviation {worst:.2e} (tracker state mapped as Wx + ρ(I−W)^(1/2)w)"),
    );
}

fn admm_equivalence(s: &mut Suite) {
    let mut worst: f64 = 0.0;
    let cases = [
        scalar_problem(Graph::path(2).unwrap(), &[1.0, 3.0], &[2.0, -1.0]),
        path3(),
        vector_problem(Graph::path(2).unwrap(), 11),
        vector_problem(Graph::path(3).unwrap(), 12),
    ];
    for p in &cases {
        for rho in [0.5, 1.0, 2.0] {
            let mut a = AdmmState::zeros(p.graph(), p.dim());
            let mut l = LagrangianState::zeros(p.graph(), p.dim());
            for _ in 0..200 {
                a = admm_step(p, &a, rho, 0.5).unwrap();
                l = lagrangian_admm_step(p, &l, rho).unwrap();
                worst = worst.max((a.stacked_x() - &l.x).amax());
            }
        }
    }
    s.criterion(
        9,
        "ADMM / Lagrangian-ADMM equivalence",
        worst <= 1e-8,
        format!("N = 2 and path(3), scalar and 2-d quadratics, ρ ∈ {{0.5, 1, 2}}, 200 iterates; max x deviation {worst:.2e}"),
    );
}

fn table2(s: &mut Suite) {
    let p = path3();
    let imps = [
        ("p_act = 0.5", ImperfectionConfig::new(0.5, 0.0, Quantizer::None, 21).unwrap()),
        ("p_loss = 0.2", ImperfectionConfig::new(1.0, 0.2, Quantizer::None, 22).unwrap()),
        ("Δ = 1e-3", ImperfectionConfig::new(1.0, 0.0, Quantizer::uniform(1e-3).unwrap(), 23).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();

    for (name, imp) in &imps {
        let proto = Admm::new(&p, 1.0, 0.5).unwrap();
        let r = run(&proto, AdmmState::zeros(p.graph(), 1), p.reference(), imp, 100_000, 1e-12).unwrap();
        let e = final_error(&r);
        ok &= e <= 1e-5 && r.outcome != Outcome::MaxIterations;
        parts.push(format!("ADMM {name}: {e:.1e}"));
    }

    let rho = 0.2 / 3.0;
    let proto = GradientTracking::new(&p, StepSize::Constant(rho));
    let r = run(&proto, GtState::start(vec![Vector::zeros(1); 3]), p.reference(), &imps[1].1, 100_000, 1e-12).unwrap();
    let gt_fails = matches!(r.outcome, Outcome::Diverged { .. }) || min_error(&r) > 1e-3;
    ok &= gt_fails;
    parts.push(format!(
        "GT p_loss = 0.2: best error {:.2e} over {} rounds ({:?})",
        min_error(&r),
        r.records.len(),
        r.outcome
    ));

    let xr = atc_fixed_point(&p, &CURV, &CENTERS, rho);
    let radius = xr.add_scalar(-p.reference().unwrap()[0]).abs().max();
    for (name, imp) in &imps {
        let r = atc_run(&p, StepSize::Constant(rho), imp, 100_000, 1e-12);
        let x = primal_vec(&r, |st, i| st.x[i][0], 3);
        let gap = (&x - &xr).amax();
        // settles near the biased fixed point: within a tenth of the bias
        let good = !matches!(r.outcome, Outcome::Diverged { .. }) && gap <= 0.1 * radius;
        ok &= good;
        parts.push(format!("ATC {name}: distance to its fixed point {gap:.1e} (bias {radius:.3})"));
    }
    s.criterion(10, "qualitative robustness comparison", ok, parts.join("; "));

    // quantized ADMM on generic data keeps an O(Δ) floor
    let generic = scalar_problem(Graph::path(3).unwrap(), &[1.3, 2.1, 0.7], &[0.1234, -1.777, 3.0417]);
    let proto = Admm::new(&generic, 1.0, 0.5).unwrap();
    let r = run(&proto, AdmmState::zeros(generic.graph(), 1), generic.reference(), &imps[2].1, 100_000, 1e-12).unwrap();
    s.info(10, format!("ADMM with Δ = 1e-3 on non-grid-aligned data: final error {:.2e}", final_error(&r)));
}

fn determinism(s: &mut Suite) {
    let configs = [
        "algorithm = admm\nsim.p_act = 0.6\nsim.p_loss = 0.3\nsim.quant_step = 0.01\nsim.seed = 99\ngraph.kind = random\ngraph.n = 8\nproblem.dim = 2",
        "algorithm = gradient_tracking\nalgo.rho_scale = 0.3\nsim.p_loss = 0.2\nsim.seed = 5\ngraph.kind = ring\ngraph.n = 6\nsim.max_iter = 3000",
        "algorithm = atc\nsim.p_act = 0.5\nsim.seed = 17\nproblem.kind = logistic\nproblem.dim = 3\ngraph.n = 5",
    ];
    let mut ok = true;
    for text in configs {
        let cfg = ExperimentConfig::parse(text).unwrap();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let csv: Vec<Vec<u8>> = dirs
            .iter()
            .map(|d| {
                let exp = experiment::build(&cfg).unwrap();
                let run = experiment::run_experiment(&exp).unwrap();
                experiment::write_artifacts(d.path(), &exp, &run).unwrap();
                assert_eq!(telemetry_csv(&run.records).as_bytes(), std::fs::read(d.path().join("telemetry.csv")).unwrap());
                std::fs::read(d.path().join("telemetry.csv")).unwrap()
            })
            .collect();
        ok &= csv[0] == csv[1] && !csv[0].is_empty();
    }
    s.criterion(11, "determinism", ok, "3 imperfect configurations, telemetry CSVs byte-identical across two runs".into());
}

fn main() -> ExitCode {
    // libtest-style flags are accepted and ignored
    let mut suite = Suite { failed: Vec::new() };
    km_bound(&mut suite);
    picard_bound(&mut suite);
    consensus_exactness(&mut suite);
    spectral_certification(&mut suite);
    prox_equivalence(&mut suite);
    dgd_bias(&mut suite);
    exact_convergence(&mut suite);
    gt_equivalence(&mut suite);
    admm_equivalence(&mut suite);
    table2(&mut suite);
    determinism(&mut suite);
    if suite.failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {:?}", suite.failed);
        ExitCode::FAILURE
    }
}
