//! Finite-difference sensitivity of the final mean-field state to one model
//! parameter.

use super::{integrate, IntegrateOptions};
use crate::error::{Error, Result};
use crate::ranking::RankingMatrix;
use crate::scalar::Scalar;
use crate::transition::TransitionTensor;

/// Parameter direction to perturb. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum SensitivityTarget<T> {
    /// Entry `(s, l, k)`, with the self entry `(s, l, s)` absorbing the
    /// opposite change so the row stays stochastic.
    TensorEntry {
        s: usize,
        l: usize,
        k: usize,
    },
    RankingEntry {
        s: usize,
        l: usize,
    },
    /// Direction in initial-condition space; components must sum to zero so
    /// the perturbed start stays on the simplex.
    InitialDirection(Vec<T>),
}

/// Central difference `(y(horizon; theta + eps) - y(horizon; theta - eps)) / (2 eps)`.
pub fn parameter_sensitivity<T: Scalar>(
    y0: &[T],
    tensor: &TransitionTensor<T>,
    ranking: &RankingMatrix<T>,
    options: IntegrateOptions<T>,
    target: &SensitivityTarget<T>,
    epsilon: T,
) -> Result<Vec<T>> {
    if !(epsilon > T::zero() && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    let options = IntegrateOptions {
        equilibrium_tolerance: None,
        ..options
    };
    let endpoint = |sign: T| -> Result<Vec<T>> {
        let delta = sign * epsilon;
        let traj = match target {
            SensitivityTarget::TensorEntry { s, l, k } => {
                let t = tensor.perturb_entry(*s, *l, *k, delta)?;
                integrate(y0, &t, ranking, options)?
            }
            SensitivityTarget::RankingEntry { s, l } => {
                if *s >= ranking.size() || *l >= ranking.size() {
                    return Err(Error::IndexOutOfRange {
                        index: (*s).max(*l) + 1,
                        max: ranking.size(),
                    });
                }
                let f = ranking.with_entry(*s, *l, ranking.get(*s, *l) + delta)?;
                integrate(y0, tensor, &f, options)?
            }
            SensitivityTarget::InitialDirection(dir) => {
                let y: Vec<T> = y0.iter().zip(dir).map(|(&a, &d)| a + delta * d).collect();
                if let Some(q) = y.iter().position(|&v| !(v >= T::zero() && v <= T::one())) {
                    return Err(Error::PerturbationOutOfRange(format!(
                        "initial fraction {}",
                        q + 1
                    )));
                }
                integrate(&y, tensor, ranking, options)?
            }
        };
        Ok(traj.last().to_vec())
    };

    if let SensitivityTarget::InitialDirection(dir) = target {
        if dir.len() != y0.len() {
            return Err(Error::DimensionMismatch {
                what: "initial-condition direction",
                expected: y0.len(),
                got: dir.len(),
            });
        }
        let sum: T = dir.iter().copied().sum();
        let norm = dir.iter().fold(T::zero(), |a, d| a.max(d.abs()));
        if norm == T::zero() || sum.abs() > T::lit(1e-12) * norm * T::lit(dir.len() as f64) {
            return Err(Error::InitialCondition(
                "perturbation direction must be nonzero and sum to zero".into(),
            ));
        }
    }

    let plus = endpoint(T::one())?;
    let minus = endpoint(-T::one())?;
    let two_eps = T::lit(2.0) * epsilon;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(&a, &b)| (a - b) / two_eps)
        .collect())
}
