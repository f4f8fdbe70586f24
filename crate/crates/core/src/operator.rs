//! Operators on ℝⁿ together with the Lipschitz-type certificate they carry.
//!
//! An [`Operator`] is a pure map plus a [`Property`] tag. Tags are only ever
//! set from known constants; they are never inferred by sampling. Use
//! [`crate::certify`] to falsify a tag empirically.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Certified regularity of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Property {
    Unknown,
    Nonexpansive,
    /// α-averaged, α ∈ (0, 1).
    Averaged(f64),
    /// ζ-contractive, ζ ∈ [0, 1).
    Contractive(f64),
    /// ζ-Lipschitz with no better certificate.
    Lipschitz(f64),
}

impl Property {
    /// Upper bound on the Lipschitz constant implied by the tag.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match *self {
            Property::Unknown => None,
            Property::Nonexpansive | Property::Averaged(_) => Some(1.0),
            Property::Contractive(z) | Property::Lipschitz(z) => Some(z),
        }
    }

    pub fn is_nonexpansive(&self) -> bool {
        self.lipschitz_bound().is_some_and(|l| l <= 1.0)
    }

    pub fn contraction_factor(&self) -> Option<f64> {
        match *self {
            Property::Contractive(z) => Some(z),
            _ => None,
        }
    }

    /// Tag for a map known to be `l`-Lipschitz.
    pub fn from_lipschitz(l: f64) -> Property {
        if l < 1.0 {
            Property::Contractive(l)
        } else if l == 1.0 {
            Property::Nonexpansive
        } else {
            Property::Lipschitz(l)
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Unknown => write!(f, "unknown"),
            Property::Nonexpansive => write!(f, "nonexpansive"),
            Property::Averaged(a) => write!(f, "averaged({a})"),
            Property::Contractive(z) => write!(f, "contractive({z})"),
            Property::Lipschitz(z) => write!(f, "lipschitz({z})"),
        }
    }
}

type MapFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;

/// A map ℝⁿ → ℝⁿ with a declared dimension and certificate.
///
/// Evaluation is pure, so operators are cheap to clone and can be shared
/// across threads.
#[derive(Clone)]
pub struct Operator {
    dim: usize,
    map: Arc<MapFn>,
    property: Property,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("dim", &self.dim)
            .field("property", &self.property)
            .finish()
    }
}

impl Operator {
    pub fn new<F>(dim: usize, property: Property, map: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Operator::fallible(dim, property, move |x| Ok(map(x)))
    }

    /// Operator whose evaluation can fail, e.g. an inexact prox.
    pub fn fallible<F>(dim: usize, property: Property, map: F) -> Self
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        assert!(dim > 0, "operator dimension must be positive");
        Operator {
            dim,
            map: Arc::new(map),
            property,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Operator::new(dim, Property::Nonexpansive, |x| x.clone())
    }

    /// `x ↦ c·x`, tagged from |c|.
    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Operator::new(dim, Property::from_lipschitz(c.abs()), move |x| x * c)
    }

    /// Linear map with its spectral norm as certificate.
    pub fn linear(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("matrix", "linear operator must be square"));
        }
        let norm = spectral_norm(&matrix);
        // round-off from the SVD should not demote an exact isometry
        let norm = if (norm - 1.0).abs() <= 1e-12 { 1.0 } else { norm };
        Ok(Self::linear_with_property(matrix, Property::from_lipschitz(norm)))
    }

    pub fn linear_with_property(matrix: Matrix, property: Property) -> Self {
        let dim = matrix.nrows();
        Operator::new(dim, property, move |x| &matrix * x)
    }

    /// `x ↦ Mx + b` with the spectral norm of `M` as certificate.
    pub fn affine(matrix: Matrix, offset: Vector) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: offset.len(),
            });
        }
        let norm = spectral_norm(&matrix);
        let norm = if (norm - 1.0).abs() <= 1e-12 { 1.0 } else { norm };
        let dim = matrix.nrows();
        Ok(Operator::new(dim, Property::from_lipschitz(norm), move |x| {
            &matrix * x + &offset
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn property(&self) -> Property {
        self.property
    }

    /// Replace the certificate. The caller is responsible for its validity.
    pub fn with_property(mut self, property: Property) -> Self {
        self.property = property;
        self
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        (self.map)(x)
    }

    /// Fixed-point residual ‖x − T(x)‖.
    pub fn residual(&self, x: &Vector) -> Result<f64> {
        Ok((x - self.eval(x)?).norm())
    }
}

/// `(1 − α)I + αT`. Keeps the fixed points of `T`.
pub fn relax(op: &Operator, alpha: f64) -> Result<Operator> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1)")));
    }
    let property = match op.property() {
        Property::Averaged(beta) => Property::Averaged(alpha * beta),
        p if p.is_nonexpansive() => Property::Averaged(alpha),
        Property::Lipschitz(l) => Property::Lipschitz(1.0 - alpha + alpha * l),
        _ => Property::Unknown,
    };
    let inner = op.clone();
    Ok(Operator::fallible(op.dim(), property, move |x| {
        Ok(x * (1.0 - alpha) + inner.eval(x)? * alpha)
    }))
}

/// `T1 ∘ T2`, i.e. `x ↦ T1(T2(x))`.
pub fn compose(outer: &Operator, inner: &Operator) -> Result<Operator> {
    if outer.dim() != inner.dim() {
        return Err(Error::DimensionMismatch {
            expected: outer.dim(),
            got: inner.dim(),
        });
    }
    let property = compose_property(outer.property(), inner.property());
    let (t1, t2) = (outer.clone(), inner.clone());
    Ok(Operator::fallible(outer.dim(), property, move |x| {
        t1.eval(&t2.eval(x)?)
    }))
}

fn compose_property(outer: Property, inner: Property) -> Property {
    let (Some(l1), Some(l2)) = (outer.lipschitz_bound(), inner.lipschitz_bound()) else {
        return Property::Unknown;
    };
    let l = l1 * l2;
    if l < 1.0 {
        return Property::Contractive(l);
    }
    match (outer, inner) {
        // averaged ∘ averaged is averaged with the combined constant
        (Property::Averaged(a1), Property::Averaged(a2)) => {
            Property::Averaged((a1 + a2 - 2.0 * a1 * a2) / (1.0 - a1 * a2))
        }
        _ => Property::from_lipschitz(l),
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// 2×2 rotation by `theta` radians.
pub fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn relax_of_negative_identity_is_zero_map() {
        let t = relax(&Operator::scaled_identity(1, -1.0), 0.5).unwrap();
        assert_eq!(t.eval(&v(&[5.0])).unwrap()[0], 0.0);
        assert_eq!(t.property(), Property::Averaged(0.5));
    }

    #[test]
    fn relax_of_identity_is_identity() {
        for alpha in [0.1, 0.5, 0.9] {
            let t = relax(&Operator::identity(3), alpha).unwrap();
            let x = v(&[1.0, -2.0, 3.5]);
            assert!((t.eval(&x).unwrap() - &x).norm() < 1e-15);
        }
    }

    #[test]
    fn relax_rejects_out_of_range_alpha() {
        let id = Operator::identity(1);
        assert!(relax(&id, 0.0).is_err());
        assert!(relax(&id, 1.0).is_err());
        assert!(relax(&id, f64::NAN).is_err());
    }

    #[test]
    fn relaxed_rotation_eigenvalues_in_averaged_disk() {
        // (1 − α)I + αR has eigenvalues (1 − α) ± iα for a quarter turn
        let alpha = 0.25;
        let r = rotation(FRAC_PI_2);
        let m = Matrix::identity(2, 2) * (1.0 - alpha) + &r * alpha;
        let eig = m.complex_eigenvalues();
        for z in eig.iter() {
            let dist = ((z.re - 0.75).powi(2) + z.im.powi(2)).sqrt();
            assert!(dist <= 0.25 + 1e-12, "eigenvalue {z} outside disk");
        }
        // matches the operator built by relax()
        let t = relax(&Operator::linear(r).unwrap(), alpha).unwrap();
        let x = v(&[0.3, -1.2]);
        assert!((t.eval(&x).unwrap() - &m * &x).norm() < 1e-15);
    }

    #[test]
    fn compose_with_identity_is_transparent() {
        let t = Operator::linear(Matrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.5])).unwrap();
        let c = compose(&Operator::identity(2), &t).unwrap();
        let mut seed = 7u64;
        for _ in 0..100 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let x = v(&[a, 2.0 * a + 0.1]);
            assert_eq!(c.eval(&x).unwrap(), t.eval(&x).unwrap());
        }
    }

    #[test]
    fn compose_multiplies_contraction_constants() {
        let h = Operator::scaled_identity(1, 0.5);
        let c = compose(&h, &h).unwrap();
        assert_eq!(c.property(), Property::Contractive(0.25));
    }

    #[test]
    fn compose_checks_dimensions() {
        let err = compose(&Operator::identity(2), &Operator::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn eval_checks_dimension() {
        let err = Operator::identity(2).eval(&v(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn rotation_is_certified_nonexpansive() {
        let t = Operator::linear(rotation(0.7)).unwrap();
        assert_eq!(t.property(), Property::Nonexpansive);
    }

    #[test]
    fn averaged_composition_constant() {
        let p = compose_property(Property::Averaged(0.5), Property::Averaged(0.5));
        assert_eq!(p, Property::Averaged(2.0 / 3.0));
    }
}
