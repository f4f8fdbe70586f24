//! Sampling-based falsification of operator certificates.
//!
//! Every check here is necessary-only: passing means no counterexample was
//! drawn, not that the property holds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator::{Operator, Vector};

/// Source of point pairs `(x, y)` for the sampled checks.
pub trait PairSampler {
    fn sample(&mut self) -> (Vector, Vector);
}

impl<F> PairSampler for F
where
    F: FnMut() -> (Vector, Vector),
{
    fn sample(&mut self) -> (Vector, Vector) {
        self()
    }
}

/// Both points drawn independently, uniform in `[center − radius, center + radius]^dim`.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    center: Vector,
    radius: f64,
    rng: ChaCha8Rng,
}

impl BoxSampler {
    pub fn new(dim: usize, radius: f64, seed: u64) -> Self {
        Self::around(Vector::zeros(dim), radius, seed)
    }

    pub fn around(center: Vector, radius: f64, seed: u64) -> Self {
        BoxSampler {
            center,
            radius,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn point(&mut self) -> Vector {
        let r = self.radius;
        let rng = &mut self.rng;
        self.center.map(|c| c + rng.gen_range(-r..=r))
    }
}

impl PairSampler for BoxSampler {
    fn sample(&mut self) -> (Vector, Vector) {
        (self.point(), self.point())
    }
}

/// `x` uniform in a box, `y = x + h·d` with `d` a uniformly random unit
/// direction. Probes directional gains, which is what drives a Lipschitz
/// estimate for linear maps.
#[derive(Debug, Clone)]
pub struct DirectionalSampler {
    dim: usize,
    radius: f64,
    step: f64,
    rng: ChaCha8Rng,
}

impl DirectionalSampler {
    pub fn new(dim: usize, radius: f64, step: f64, seed: u64) -> Self {
        DirectionalSampler {
            dim,
            radius,
            step,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl PairSampler for DirectionalSampler {
    fn sample(&mut self) -> (Vector, Vector) {
        let r = self.radius;
        let x = Vector::from_fn(self.dim, |_, _| self.rng.gen_range(-r..=r));
        let d = loop {
            let d = Vector::from_fn(self.dim, |_, _| gaussian(&mut self.rng));
            let n = d.norm();
            if n > 1e-12 {
                break d / n;
            }
        };
        let y = &x + d * self.step;
        (x, y)
    }
}

pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw is discarded
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Max over sampled pairs of `‖T(x) − T(y)‖/‖x − y‖`. Coincident pairs are
/// skipped.
pub fn estimate_lipschitz(
    op: &Operator,
    sampler: &mut impl PairSampler,
    n_samples: usize,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut best: Option<f64> = None;
    for _ in 0..n_samples {
        let (x, y) = sampler.sample();
        let d = (&x - &y).norm();
        if d == 0.0 {
            continue;
        }
        let ratio = (op.eval(&x)? - op.eval(&y)?).norm() / d;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or(Error::CoincidentSamples)
}

/// Result of [`check_averaged`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedCheck {
    pub holds: bool,
    /// Largest `lhs − rhs` seen; ≤ 0 when every pair satisfies the inequality.
    pub worst_violation: f64,
}

pub const AVERAGED_SLACK: f64 = 1e-10;

/// Tests `‖Tx − Ty‖² ≤ ‖x − y‖² − ((1−α)/α)‖(I−T)x − (I−T)y‖²` on sampled pairs.
pub fn check_averaged(
    op: &Operator,
    alpha: f64,
    sampler: &mut impl PairSampler,
    n_samples: usize,
) -> Result<AveragedCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1)")));
    }
    let weight = (1.0 - alpha) / alpha;
    let mut worst = f64::NEG_INFINITY;
    let mut holds = true;
    for _ in 0..n_samples {
        let (x, y) = sampler.sample();
        let (tx, ty) = (op.eval(&x)?, op.eval(&y)?);
        let dx = &x - &y;
        let dt = &tx - &ty;
        let dr = &dx - &dt;
        let lhs = dt.norm_squared();
        let rhs = dx.norm_squared() - weight * dr.norm_squared();
        let violation = lhs - rhs;
        worst = worst.max(violation);
        // slack is relative to the scale of the pair
        if violation > AVERAGED_SLACK * (1.0 + dx.norm_squared()) {
            holds = false;
        }
    }
    Ok(AveragedCheck {
        holds,
        worst_violation: worst,
    })
}

/// Largest singular value via power iteration on `MᵀM`.
pub fn power_iteration_norm(m: &crate::operator::Matrix, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vector::from_fn(m.ncols(), |_, _| gaussian(&mut rng));
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let w = m.transpose() * (m * &v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        sigma = n.sqrt();
        v = w / n;
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{relax, Matrix};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn half_identity_estimate_is_exact() {
        let t = Operator::scaled_identity(3, 0.5);
        let est = estimate_lipschitz(&t, &mut BoxSampler::new(3, 2.0, 1), 50).unwrap();
        assert!((est - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_estimate_is_one() {
        let est =
            estimate_lipschitz(&Operator::identity(2), &mut BoxSampler::new(2, 1.0, 2), 10).unwrap();
        assert!((est - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_estimate_approaches_spectral_norm() {
        let t = Operator::linear(Matrix::from_diagonal(&v(&[0.2, 0.9]))).unwrap();
        let oracle = power_iteration_norm(&Matrix::from_diagonal(&v(&[0.2, 0.9])), 200, 3);
        assert!((oracle - 0.9).abs() < 1e-12);
        let est =
            estimate_lipschitz(&t, &mut DirectionalSampler::new(2, 1.0, 1e-2, 4), 10_000).unwrap();
        assert!(est <= oracle + 1e-12);
        assert!(oracle - est < 1e-3, "estimate {est}");
    }

    #[test]
    fn all_coincident_pairs_is_an_error() {
        let mut same = || (v(&[1.0]), v(&[1.0]));
        let err = estimate_lipschitz(&Operator::identity(1), &mut same, 5).unwrap_err();
        assert!(matches!(err, Error::CoincidentSamples));
    }

    #[test]
    fn relaxed_negative_identity_is_quarter_averaged() {
        let t = relax(&Operator::scaled_identity(2, -1.0), 0.25).unwrap();
        let check = check_averaged(&t, 0.25, &mut BoxSampler::new(2, 3.0, 5), 1000).unwrap();
        assert!(check.holds, "{check:?}");
    }

    #[test]
    fn negative_identity_is_not_half_averaged() {
        // x = 1, y = −1: lhs = 4, rhs = 4 − 16 = −12
        let t = Operator::scaled_identity(1, -1.0);
        let mut pair = || (v(&[1.0]), v(&[-1.0]));
        let check = check_averaged(&t, 0.5, &mut pair, 1).unwrap();
        assert!(!check.holds);
        assert_eq!(check.worst_violation, 16.0);
    }
}
