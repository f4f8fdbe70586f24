//! Distributed ADMM: the edge-variable `z` form, its agent-local Lagrangian
//! form, and the stacked Lagrangian step built on the arc incidence matrix.

use crate::consensus::stack_blocks;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operator::{Matrix, Vector};

use super::{synchronous_round, ConsensusProblem, Inbox, Protocol, Work};

/// Directed edges `(i, j)`, grouped by tail `i`, heads ascending.
pub fn arcs(graph: &Graph) -> Vec<(usize, usize)> {
    (0..graph.n_agents())
        .flat_map(|i| graph.neighbors(i).iter().map(move |&j| (i, j)))
        .collect()
}

/// `A = blkdiag{1_{|N_i|}}`, of size `2|E| × N`; row order is [`arcs`].
pub fn arc_incidence(graph: &Graph) -> Matrix {
    let arcs = arcs(graph);
    let mut a = Matrix::zeros(arcs.len(), graph.n_agents());
    for (row, &(i, _)) in arcs.iter().enumerate() {
        a[(row, i)] = 1.0;
    }
    a
}

fn check_penalty(problem: &ConsensusProblem, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("{rho} must be positive")));
    }
    if problem.n_agents() < 2 {
        return Err(Error::invalid("graph.n", "ADMM needs at least two agents"));
    }
    Ok(())
}

/// `x_i = prox_{f_i/(ρd_i)}(v)`.
fn local_prox(p: &ConsensusProblem, i: usize, v: &Vector, rho: f64, work: &mut Work) -> Result<Vector> {
    let d = p.graph().degree(i) as f64;
    work.prox_evals += 1;
    p.cost(i).prox(v, 1.0 / (rho * d))
}

fn flatten(per_agent: &[Vec<Vector>]) -> Vector {
    let all: Vec<Vector> = per_agent.iter().flatten().cloned().collect();
    stack_blocks(&all)
}

/// Estimates `x_i` and edge variables `z_ij`, with `z[i]` aligned to
/// `neighbors(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<Vector>,
    pub z: Vec<Vec<Vector>>,
}

impl AdmmState {
    /// `x_0 = 0`, `z_0 = 0`.
    pub fn zeros(graph: &Graph, dim: usize) -> Self {
        let n = graph.n_agents();
        AdmmState {
            x: vec![Vector::zeros(dim); n],
            z: (0..n)
                .map(|i| vec![Vector::zeros(dim); graph.degree(i)])
                .collect(),
        }
    }

    /// `z` stacked in [`arcs`] order.
    pub fn stacked_z(&self) -> Vector {
        flatten(&self.z)
    }

    pub fn stacked_x(&self) -> Vector {
        stack_blocks(&self.x)
    }
}

/// Relaxed distributed ADMM:
/// `x_i = prox_{f_i/(ρd_i)}(Σ_j z_ij/(ρd_i))`,
/// `z_ij ← (1 − α)z_ij − α(z_ji − 2ρx_j)`.
/// Agent `i` sends `z_ij − 2ρx_i` to `j`.
pub struct Admm<'a> {
    problem: &'a ConsensusProblem,
    rho: f64,
    alpha: f64,
}

impl<'a> Admm<'a> {
    pub fn new(problem: &'a ConsensusProblem, rho: f64, alpha: f64) -> Result<Self> {
        check_penalty(problem, rho)?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1]")));
        }
        Ok(Admm {
            problem,
            rho,
            alpha,
        })
    }
}

impl Protocol for Admm<'_> {
    type State = AdmmState;

    fn name(&self) -> &'static str {
        "admm"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        self.problem.graph().neighbors(i)
    }

    fn prepare(&self, _: usize, _: usize, i: usize, s: &mut AdmmState, work: &mut Work) -> Result<()> {
        let scale = self.rho * self.problem.graph().degree(i) as f64;
        let mut v = Vector::zeros(self.problem.dim());
        for z in &s.z[i] {
            v += z;
        }
        s.x[i] = local_prox(self.problem, i, &(v / scale), self.rho, work)?;
        Ok(())
    }

    fn message(&self, _: usize, from: usize, to: usize, s: &AdmmState) -> Vector {
        let pos = self.problem.graph().neighbor_index(from, to).expect("peer");
        &s.z[from][pos] - &s.x[from] * (2.0 * self.rho)
    }

    fn apply(&self, _: usize, _: usize, i: usize, s: &mut AdmmState, inbox: &Inbox<'_>, _: &mut Work) -> Result<()> {
        for (z, (_, m)) in s.z[i].iter_mut().zip(inbox.iter()) {
            *z = &*z * (1.0 - self.alpha) - m * self.alpha;
        }
        Ok(())
    }

    fn primal<'s>(&self, s: &'s AdmmState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &AdmmState) -> Vector {
        let mut blocks = s.x.clone();
        blocks.extend(s.z.iter().flatten().cloned());
        stack_blocks(&blocks)
    }

    fn operator_variable(&self, s: &AdmmState) -> Vector {
        s.stacked_z()
    }
}

pub fn admm_step(p: &ConsensusProblem, s: &AdmmState, rho: f64, alpha: f64) -> Result<AdmmState> {
    check_shape(p, &s.x, &s.z)?;
    let proto = Admm::new(p, rho, alpha)?;
    let mut next = s.clone();
    synchronous_round(&proto, 0, &mut next, &mut Work::default())?;
    Ok(next)
}

fn check_shape(p: &ConsensusProblem, x: &[Vector], edges: &[Vec<Vector>]) -> Result<()> {
    let g = p.graph();
    if x.len() != p.n_agents() || edges.len() != p.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: p.n_agents(),
            got: x.len().min(edges.len()),
        });
    }
    for i in 0..p.n_agents() {
        if edges[i].len() != g.degree(i) {
            return Err(Error::DimensionMismatch {
                expected: g.degree(i),
                got: edges[i].len(),
            });
        }
        let bad = std::iter::once(&x[i])
            .chain(edges[i].iter())
            .find(|v| v.len() != p.dim());
        if let Some(v) = bad {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: v.len(),
            });
        }
    }
    Ok(())
}

/// Agent-local Lagrangian ADMM state: `x_i`, and per incident arc the
/// shared variable `y_ij` and multiplier `w_ij`, aligned to `neighbors(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianAdmmState {
    pub x: Vec<Vector>,
    pub y: Vec<Vec<Vector>>,
    pub w: Vec<Vec<Vector>>,
}

impl LagrangianAdmmState {
    pub fn zeros(graph: &Graph, dim: usize) -> Self {
        let z = AdmmState::zeros(graph, dim);
        LagrangianAdmmState {
            x: z.x,
            y: z.z.clone(),
            w: z.z,
        }
    }

    pub fn stacked_y(&self) -> Vector {
        flatten(&self.y)
    }

    pub fn stacked_w(&self) -> Vector {
        flatten(&self.w)
    }
}

/// Augmented-Lagrangian ADMM on `min Σf_i(x_i)` s.t. `Ax = y`, `y_ij = y_ji`.
/// Agent `i` sends `(x_i, w_ij)` to `j`.
pub struct LagrangianAdmm<'a> {
    problem: &'a ConsensusProblem,
    rho: f64,
}

impl<'a> LagrangianAdmm<'a> {
    pub fn new(problem: &'a ConsensusProblem, rho: f64) -> Result<Self> {
        check_penalty(problem, rho)?;
        Ok(LagrangianAdmm { problem, rho })
    }
}

impl Protocol for LagrangianAdmm<'_> {
    type State = LagrangianAdmmState;

    fn name(&self) -> &'static str {
        "lagrangian_admm"
    }

    fn n_agents(&self) -> usize {
        self.problem.n_agents()
    }

    fn peers(&self, i: usize) -> &[usize] {
        self.problem.graph().neighbors(i)
    }

    fn prepare(&self, _: usize, _: usize, i: usize, s: &mut LagrangianAdmmState, work: &mut Work) -> Result<()> {
        let scale = self.rho * self.problem.graph().degree(i) as f64;
        let mut v = Vector::zeros(self.problem.dim());
        for (y, w) in s.y[i].iter().zip(&s.w[i]) {
            v += y * self.rho - w;
        }
        s.x[i] = local_prox(self.problem, i, &(v / scale), self.rho, work)?;
        Ok(())
    }

    fn message(&self, _: usize, from: usize, to: usize, s: &LagrangianAdmmState) -> Vector {
        let pos = self.problem.graph().neighbor_index(from, to).expect("peer");
        let n = self.problem.dim();
        let mut m = Vector::zeros(2 * n);
        m.rows_mut(0, n).copy_from(&s.x[from]);
        m.rows_mut(n, n).copy_from(&s.w[from][pos]);
        m
    }

    fn apply(
        &self,
        _: usize,
        _: usize,
        i: usize,
        s: &mut LagrangianAdmmState,
        inbox: &Inbox<'_>,
        _: &mut Work,
    ) -> Result<()> {
        let n = self.problem.dim();
        for (pos, (_, m)) in inbox.iter().enumerate() {
            let xj = m.rows(0, n);
            let wji = m.rows(n, n);
            let y = (&s.x[i] + xj) * 0.5 + (&s.w[i][pos] + wji) / (2.0 * self.rho);
            s.w[i][pos] += (&s.x[i] - &y) * self.rho;
            s.y[i][pos] = y;
        }
        Ok(())
    }

    fn primal<'s>(&self, s: &'s LagrangianAdmmState, i: usize) -> &'s Vector {
        &s.x[i]
    }

    fn full_state(&self, s: &LagrangianAdmmState) -> Vector {
        let mut blocks = s.x.clone();
        blocks.extend(s.y.iter().flatten().cloned());
        blocks.extend(s.w.iter().flatten().cloned());
        stack_blocks(&blocks)
    }

    fn operator_variable(&self, s: &LagrangianAdmmState) -> Vector {
        flatten(&s.y) * self.rho - flatten(&s.w)
    }
}

/// Stacked Lagrangian state: `x ∈ R^{Nn}`, `y, w ∈ R^{2|E|n}` in [`arcs`]
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub x: Vector,
    pub y: Vector,
    pub w: Vector,
}

impl LagrangianState {
    pub fn zeros(graph: &Graph, dim: usize) -> Self {
        LagrangianState {
            x: Vector::zeros(graph.n_agents() * dim),
            y: Vector::zeros(graph.arc_count() * dim),
            w: Vector::zeros(graph.arc_count() * dim),
        }
    }
}

/// One augmented-Lagrangian ADMM step written with `A ⊗ I_n`:
/// `x ← argmin f(x) + ⟨w, Ax⟩ + ρ/2‖Ax − y‖²`,
/// `y ← argmin −⟨w, y⟩ + ρ/2‖Ax − y‖²` over edge-consistent `y`,
/// `w ← w + ρ(Ax − y)`.
pub fn lagrangian_admm_step(p: &ConsensusProblem, s: &LagrangianState, rho: f64) -> Result<LagrangianState> {
    check_penalty(p, rho)?;
    let g = p.graph();
    let n = p.dim();
    let arcs = arcs(g);
    for (v, expected) in [(&s.x, g.n_agents() * n), (&s.y, arcs.len() * n), (&s.w, arcs.len() * n)] {
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: v.len(),
            });
        }
    }
    let a = arc_incidence(g).kronecker(&Matrix::identity(n, n));

    // x-update separates over agents because A is block diagonal.
    let r = a.transpose() * (&s.y * rho - &s.w);
    let mut x = Vector::zeros(s.x.len());
    let mut work = Work::default();
    for i in 0..g.n_agents() {
        let scale = rho * g.degree(i) as f64;
        let v = r.rows(i * n, n) / scale;
        let xi = local_prox(p, i, &v, rho, &mut work)?;
        x.rows_mut(i * n, n).copy_from(&xi);
    }

    // y-update pairs each arc with its reverse.
    let ax = &a * &x;
    let offsets: Vec<usize> = (0..g.n_agents())
        .scan(0, |acc, i| {
            let start = *acc;
            *acc += g.degree(i);
            Some(start)
        })
        .collect();
    let mut y = Vector::zeros(s.y.len());
    for (e, &(i, j)) in arcs.iter().enumerate() {
        let rev = offsets[j] + g.neighbor_index(j, i).expect("symmetric");
        let avg = (ax.rows(e * n, n) + ax.rows(rev * n, n)) * 0.5
            + (s.w.rows(e * n, n) + s.w.rows(rev * n, n)) / (2.0 * rho);
        y.rows_mut(e * n, n).copy_from(&avg);
    }

    let w = &s.w + (&ax - &y) * rho;
    Ok(LagrangianState { x, y, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::ConsensusMatrix;
    use crate::cost::{Huber, Quadratic, SharedCost};
    use std::sync::Arc;

    fn problem(graph: Graph) -> ConsensusProblem {
        let n = graph.n_agents();
        let costs: Vec<SharedCost> = (0..n)
            .map(|i| {
                Arc::new(
                    Quadratic::centered(
                        &Vector::from_column_slice(&[1.0 + i as f64, 0.5]),
                        &Vector::from_column_slice(&[i as f64, -(i as f64)]),
                    )
                    .unwrap(),
                ) as SharedCost
            })
            .collect();
        ConsensusProblem::new(costs, ConsensusMatrix::metropolis(&graph).unwrap()).unwrap()
    }

    #[test]
    fn incidence_of_path3() {
        let a = arc_incidence(&Graph::path(3).unwrap());
        let expected = Matrix::from_row_slice(
            4,
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert_eq!(a, expected);
    }

    #[test]
    fn incidence_rows_sum_to_one_and_columns_to_degree() {
        let g = Graph::random(9, 0.4, 2).unwrap();
        let a = arc_incidence(&g);
        assert_eq!(a.nrows(), g.arc_count());
        for r in a.row_iter() {
            assert_eq!(r.sum(), 1.0);
        }
        for i in 0..g.n_agents() {
            assert_eq!(a.column(i).sum(), g.degree(i) as f64);
        }
    }

    #[test]
    fn admm_z_update_matches_formula() {
        let g = Graph::path(3).unwrap();
        let p = problem(g.clone());
        let mut s = AdmmState::zeros(&g, 2);
        s.z[0][0] = Vector::from_column_slice(&[1.0, 2.0]);
        s.z[1][0] = Vector::from_column_slice(&[-1.0, 0.5]);
        s.z[1][1] = Vector::from_column_slice(&[0.3, 0.0]);
        s.z[2][0] = Vector::from_column_slice(&[0.0, -2.0]);
        let (rho, alpha) = (0.7, 0.4);
        let next = admm_step(&p, &s, rho, alpha).unwrap();
        for i in 0..3 {
            let d = g.degree(i) as f64;
            let sum = s.z[i].iter().fold(Vector::zeros(2), |acc, z| acc + z);
            let xi = p.cost(i).prox(&(sum / (rho * d)), 1.0 / (rho * d)).unwrap();
            assert!((&next.x[i] - &xi).amax() < 1e-14);
        }
        for i in 0..3 {
            for (pos, &j) in g.neighbors(i).iter().enumerate() {
                let back = g.neighbor_index(j, i).unwrap();
                let expected = &s.z[i][pos] * (1.0 - alpha)
                    - (&s.z[j][back] - &next.x[j] * (2.0 * rho)) * alpha;
                assert!((&next.z[i][pos] - expected).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn admm_rejects_bad_parameters() {
        let p = problem(Graph::path(2).unwrap());
        assert!(Admm::new(&p, 0.0, 0.5).is_err());
        assert!(Admm::new(&p, 1.0, 0.0).is_err());
        assert!(Admm::new(&p, 1.0, 1.5).is_err());
    }

    #[test]
    fn stacked_lagrangian_matches_agent_local_form() {
        let g = Graph::ring(5).unwrap();
        let costs: Vec<SharedCost> = (0..5)
            .map(|i| Arc::new(Huber::new(0.5, Vector::from_element(1, i as f64)).unwrap()) as SharedCost)
            .collect();
        let p = ConsensusProblem::new(costs, ConsensusMatrix::metropolis(&g).unwrap()).unwrap();
        let proto = LagrangianAdmm::new(&p, 0.8).unwrap();
        let mut local = LagrangianAdmmState::zeros(&g, 1);
        let mut global = LagrangianState::zeros(&g, 1);
        for k in 0..40 {
            synchronous_round(&proto, k, &mut local, &mut Work::default()).unwrap();
            global = lagrangian_admm_step(&p, &global, 0.8).unwrap();
            assert!((stack_blocks(&local.x) - &global.x).amax() < 1e-12);
            assert!((local.stacked_y() - &global.y).amax() < 1e-12);
            assert!((local.stacked_w() - &global.w).amax() < 1e-12);
        }
    }

    #[test]
    fn half_relaxed_admm_is_lagrangian_admm() {
        let g = Graph::path(4).unwrap();
        let p = problem(g.clone());
        let rho = 1.3;
        let mut z = AdmmState::zeros(&g, 2);
        let mut lag = LagrangianState::zeros(&g, 2);
        for _ in 0..60 {
            lag = lagrangian_admm_step(&p, &lag, rho).unwrap();
            z = admm_step(&p, &z, rho, 0.5).unwrap();
            assert!((z.stacked_x() - &lag.x).amax() < 1e-10);
            assert!((z.stacked_z() - (&lag.y * rho - &lag.w)).amax() < 1e-10);
        }
    }
}
