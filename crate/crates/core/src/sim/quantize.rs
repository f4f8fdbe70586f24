use crate::error::{Error, Result};
use crate::operator::Vector;

/// Componentwise nearest multiple of `step`, ties to even.
pub fn quantize(v: &Vector, step: f64) -> Vector {
    v.map(|c| (c / step).round_ties_even() * step)
}

/// Message quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Quantizer {
    #[default]
    None,
    Uniform(f64),
}

impl Quantizer {
    pub fn uniform(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("sim.quant_step", format!("{step} must be positive")));
        }
        Ok(Quantizer::Uniform(step))
    }

    pub fn apply(&self, v: Vector) -> Vector {
        match *self {
            Quantizer::None => v,
            Quantizer::Uniform(step) => quantize(&v, step),
        }
    }
}
