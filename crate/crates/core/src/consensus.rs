//! Consensus weights, spectral certification and (dynamic) average consensus.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operator::{Matrix, Operator, Property, Vector};

/// Tolerance for stochasticity, symmetry and spectral checks.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Graph-conforming consensus matrix `W` plus its certified structure.
#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    w: Matrix,
    graph: Graph,
    row_stochastic: bool,
    column_stochastic: bool,
    symmetric: bool,
    /// Ascending; present only for symmetric `W`.
    eigenvalues: Option<Vector>,
}

impl ConsensusMatrix {
    /// Wraps `w`, rejecting negative weights and entries off the graph's
    /// sparsity pattern.
    pub fn new(graph: Graph, w: Matrix) -> Result<Self> {
        let n = graph.n_agents();
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let wij = w[(i, j)];
                if wij < 0.0 || !wij.is_finite() {
                    return Err(Error::invalid("W", format!("w[{i}][{j}] = {wij} is negative")));
                }
                if i != j && wij != 0.0 && !graph.has_edge(i, j) {
                    return Err(Error::invalid(
                        "W",
                        format!("w[{i}][{j}] = {wij} but ({i}, {j}) is not an edge"),
                    ));
                }
            }
        }
        let row_stochastic = w.row_iter().all(|r| (r.sum() - 1.0).abs() <= CERTIFY_TOL);
        let column_stochastic = w.column_iter().all(|c| (c.sum() - 1.0).abs() <= CERTIFY_TOL);
        let symmetric = (&w - w.transpose()).amax() <= CERTIFY_TOL;
        let eigenvalues = symmetric.then(|| {
            let mut eig: Vec<f64> = SymmetricEigen::new(w.clone()).eigenvalues.iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            Vector::from_vec(eig)
        });
        Ok(ConsensusMatrix {
            w,
            graph,
            row_stochastic,
            column_stochastic,
            symmetric,
            eigenvalues,
        })
    }

    /// Metropolis-Hastings weights `w_ij = 1/(1 + max(deg_i, deg_j))`,
    /// `w_ii = 1 − Σ_j w_ij`.
    pub fn metropolis(graph: &Graph) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = graph.n_agents();
        let mut w = Matrix::zeros(n, n);
        for &(i, j) in graph.edges() {
            let wij = 1.0 / (1.0 + graph.degree(i).max(graph.degree(j)) as f64);
            w[(i, j)] = wij;
            w[(j, i)] = wij;
        }
        for i in 0..n {
            let off: f64 = graph.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        ConsensusMatrix::new(graph.clone(), w)
    }

    /// `(W + I)/2`, which moves every eigenvalue into `[0, 1]`.
    pub fn lazy(&self) -> Result<Self> {
        let n = self.size();
        ConsensusMatrix::new(self.graph.clone(), (&self.w + Matrix::identity(n, n)) * 0.5)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn size(&self) -> usize {
        self.graph.n_agents()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.row_stochastic
    }

    pub fn is_column_stochastic(&self) -> bool {
        self.column_stochastic
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.row_stochastic && self.column_stochastic
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn eigenvalues(&self) -> Option<&Vector> {
        self.eigenvalues.as_ref()
    }

    /// `w_ii·own + Σ_{j ∈ N_i} w_ij·x_j`, neighbors visited in ascending order.
    ///
    /// This is the only place agent blocks are mixed, so every consensus-based
    /// update reads exactly `N_i ∪ {i}`.
    pub fn combine<'a>(
        &self,
        i: usize,
        own: &Vector,
        neighbor: impl Fn(usize) -> &'a Vector,
    ) -> Vector {
        let mut out = own * self.w[(i, i)];
        for &j in self.graph.neighbors(i) {
            out.axpy(self.w[(i, j)], neighbor(j), 1.0);
        }
        out
    }

    /// `(I − W)^{1/2}` by symmetric eigendecomposition. Eigenvalues of `I − W`
    /// in `[−1e-10, 0)` are clamped to 0; anything lower is an error.
    pub fn sqrt_laplacian(&self) -> Result<Matrix> {
        if !self.symmetric {
            return Err(Error::invalid("W", "square root needs a symmetric W"));
        }
        let n = self.size();
        let eig = SymmetricEigen::new(Matrix::identity(n, n) - &self.w);
        let mut roots = eig.eigenvalues.clone();
        for l in roots.iter_mut() {
            if *l < -CERTIFY_TOL {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *l });
            }
            *l = l.max(0.0).sqrt();
        }
        let q = &eig.eigenvectors;
        let s = q * Matrix::from_diagonal(&roots) * q.transpose();
        Ok((&s + s.transpose()) * 0.5)
    }
}

/// Averagedness constant `α = (1 − λ_1)/2` of a symmetric `W`.
///
/// Also checks that every eigenvalue lies in the disk of center `1 − α`,
/// radius `α`, and that `λ_N = 1`.
pub fn certify_spectrum(w: &ConsensusMatrix) -> Result<f64> {
    let eig = w
        .eigenvalues()
        .ok_or_else(|| Error::invalid("W", "spectral certification needs a symmetric W"))?;
    let lambda_min = eig[0];
    let lambda_max = eig[eig.len() - 1];
    if lambda_min <= -1.0 + CERTIFY_TOL || lambda_min >= 1.0 - CERTIFY_TOL {
        return Err(Error::NotAveraged { lambda_min });
    }
    if (lambda_max - 1.0).abs() > CERTIFY_TOL {
        return Err(Error::invalid(
            "W",
            format!("largest eigenvalue {lambda_max} is not 1"),
        ));
    }
    let alpha = (1.0 - lambda_min) / 2.0;
    let center = 1.0 - alpha;
    if let Some(l) = eig.iter().find(|l| (*l - center).abs() > alpha + CERTIFY_TOL) {
        return Err(Error::invalid(
            "W",
            format!("eigenvalue {l} outside the averaged disk"),
        ));
    }
    Ok(alpha)
}

fn check_stacked(w: &ConsensusMatrix, x: &Vector, block: usize) -> Result<()> {
    let expected = w.size() * block;
    if block == 0 || x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Splits a stacked vector into its `N` blocks of size `block`.
pub fn split_blocks(x: &Vector, block: usize) -> Vec<Vector> {
    (0..x.len() / block)
        .map(|i| x.rows(i * block, block).into_owned())
        .collect()
}

pub fn stack_blocks(blocks: &[Vector]) -> Vector {
    let n = blocks.first().map_or(0, |b| b.len());
    let mut out = Vector::zeros(blocks.len() * n);
    for (i, b) in blocks.iter().enumerate() {
        out.rows_mut(i * n, n).copy_from(b);
    }
    out
}

/// One round of `x ← (W ⊗ I_n)x`, each agent reading only its neighbors.
pub fn consensus_step(w: &ConsensusMatrix, x: &Vector, block: usize) -> Result<Vector> {
    check_stacked(w, x, block)?;
    let blocks = split_blocks(x, block);
    let next: Vec<Vector> = (0..w.size())
        .map(|i| w.combine(i, &blocks[i], |j| &blocks[j]))
        .collect();
    Ok(stack_blocks(&next))
}

/// Linear operator `W ⊗ I_n`, tagged `((1 − λ_1)/2)`-averaged when the
/// spectrum certifies.
pub fn consensus_operator(w: &ConsensusMatrix, block: usize) -> Operator {
    let m = w.matrix().kronecker(&Matrix::identity(block, block));
    let property = certify_spectrum(w)
        .map(Property::Averaged)
        .unwrap_or(Property::Unknown);
    Operator::linear_with_property(m, property)
}

/// State of dynamic average consensus: current estimates and the previous
/// local signals.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingState {
    pub x: Vector,
    pub y_prev: Vector,
}

impl TrackingState {
    /// `x_0 = y_0`, so `Σ_i x_{i,k} = Σ_i y_{i,k−1}` along the run.
    pub fn start(y0: Vector) -> Self {
        TrackingState {
            x: y0.clone(),
            y_prev: y0,
        }
    }
}

/// `x ← (W ⊗ I_n)x + y_new − y_prev`, then `y_prev ← y_new`.
pub fn dynamic_consensus_step(
    w: &ConsensusMatrix,
    state: &TrackingState,
    y_new: &Vector,
    block: usize,
) -> Result<TrackingState> {
    check_stacked(w, &state.x, block)?;
    check_stacked(w, &state.y_prev, block)?;
    check_stacked(w, y_new, block)?;
    let mixed = consensus_step(w, &state.x, block)?;
    Ok(TrackingState {
        x: mixed + y_new - &state.y_prev,
        y_prev: y_new.clone(),
    })
}
