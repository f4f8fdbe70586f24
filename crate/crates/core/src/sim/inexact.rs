use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{guard_finite, Error, Result};
use crate::operator::{Operator, Vector};

/// Size of the additive error `e_k` at round `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModel {
    /// `‖e_k‖ ≤ ε`.
    Bounded(f64),
    /// `‖e_k‖ ≤ ε_0·r^k`, `r ∈ (0, 1)`.
    Summable { eps0: f64, ratio: f64 },
}

impl ErrorModel {
    pub fn magnitude(&self, k: usize) -> f64 {
        match *self {
            ErrorModel::Bounded(eps) => eps,
            ErrorModel::Summable { eps0, ratio } => eps0 * ratio.powi(k.min(i32::MAX as usize) as i32),
        }
    }

    fn validate(&self) -> Result<()> {
        let eps = match *self {
            ErrorModel::Bounded(eps) => eps,
            ErrorModel::Summable { eps0, ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::invalid("ratio", format!("{ratio} is not in (0, 1)")));
                }
                eps0
            }
        };
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("{eps} must be non-negative")));
        }
        Ok(())
    }
}

/// `x ↦ T(x) + e_k`, where `e_k` is uniform noise drawn from a stream keyed
/// by `(seed, k)` and scaled so that `‖e_k‖ ≤` the model's magnitude.
#[derive(Clone)]
pub struct InexactOperator {
    op: Operator,
    model: ErrorModel,
    seed: u64,
}

impl InexactOperator {
    pub fn new(op: Operator, model: ErrorModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(InexactOperator { op, model, seed })
    }

    pub fn error(&self, k: usize) -> Vector {
        let n = self.op.dim();
        let eps = self.model.magnitude(k);
        if eps == 0.0 {
            return Vector::zeros(n);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        let scale = eps / (n as f64).sqrt();
        Vector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0) * scale)
    }

    pub fn eval(&self, k: usize, x: &Vector) -> Result<Vector> {
        Ok(self.op.eval(x)? + self.error(k))
    }

    /// The map applied at round `k`.
    pub fn at_round(&self, k: usize) -> Operator {
        let this = self.clone();
        Operator::fallible(self.op.dim(), crate::operator::Property::Unknown, move |x| {
            this.eval(k, x)
        })
    }

    /// `x_{k+1} = T(x_k) + e_k`; returns `x_0, …, x_iters`.
    pub fn iterate(&self, x0: &Vector, iters: usize) -> Result<Vec<Vector>> {
        let mut out = Vec::with_capacity(iters + 1);
        out.push(x0.clone());
        for k in 0..iters {
            let next = self.eval(k, &out[k])?;
            guard_finite(next.as_slice(), k + 1)?;
            out.push(next);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Matrix;

    fn half() -> Operator {
        Operator::affine(Matrix::identity(2, 2) * 0.5, Vector::from_element(2, 1.0)).unwrap()
    }

    #[test]
    fn zero_error_is_the_clean_operator() {
        let t = InexactOperator::new(half(), ErrorModel::Bounded(0.0), 1).unwrap();
        let x = Vector::from_column_slice(&[3.0, -1.0]);
        assert_eq!(t.eval(5, &x).unwrap(), half().eval(&x).unwrap());
    }

    #[test]
    fn noise_respects_magnitude_and_is_reproducible() {
        let t = InexactOperator::new(half(), ErrorModel::Summable { eps0: 1.0, ratio: 0.5 }, 9).unwrap();
        for k in 0..20 {
            assert!(t.error(k).norm() <= 0.5_f64.powi(k as i32) + 1e-15);
            assert_eq!(t.error(k), t.error(k));
        }
        assert_ne!(t.error(1), t.error(2));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(InexactOperator::new(half(), ErrorModel::Bounded(-1.0), 0).is_err());
        assert!(InexactOperator::new(half(), ErrorModel::Summable { eps0: 1.0, ratio: 1.0 }, 0).is_err());
    }
}
