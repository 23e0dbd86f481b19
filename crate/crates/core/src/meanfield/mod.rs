//! Mean-field dynamics of cortege fractions on the complete graph.
//!
//! The fraction `y_q` of agents holding cortege `q` evolves in scaled time
//! `tau = t / N` as
//!
//! ```text
//! dy_q/dtau = sum_{s,l} y_s y_l f_{s,l} p_{s,l,q}  -  y_q sum_l y_l f_{q,l}
//! ```
//!
//! The first term collects recipients arriving at `q`, the second those
//! leaving it (or re-drawing `q`, which the gain term returns). The
//! components sum to zero, so `sum_q y_q` is conserved.

mod compare;
pub mod ode;
mod sensitivity;

pub use compare::{compare_trajectories, ComparisonReport};
pub use sensitivity::{parameter_sensitivity, SensitivityTarget};

use crate::error::{Error, Result};
use crate::ranking::RankingMatrix;
use crate::scalar::Scalar;
use crate::space::AttributeSpace;
use crate::transition::TransitionTensor;
use ode::{rk4_step, Rk4Workspace};

/// Default RK4 step in scaled time.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default `max |rhs|` below which a run counts as having reached equilibrium.
pub const DEFAULT_EQUILIBRIUM_TOLERANCE: f64 = 1e-10;
/// Largest deviation of `sum y0` from 1 that is renormalized rather than rejected.
pub const INITIAL_SUM_TOLERANCE: f64 = 1e-9;

/// Vector field of the mean-field system for one tensor and ranking.
#[derive(Debug, Clone, Copy)]
pub struct MeanField<'a, T> {
    tensor: &'a TransitionTensor<T>,
    ranking: &'a RankingMatrix<T>,
}

impl<'a, T: Scalar> MeanField<'a, T> {
    pub fn new(tensor: &'a TransitionTensor<T>, ranking: &'a RankingMatrix<T>) -> Result<Self> {
        if tensor.size() != ranking.size() {
            return Err(Error::DimensionMismatch {
                what: "ranking matrix",
                expected: tensor.size(),
                got: ranking.size(),
            });
        }
        Ok(MeanField { tensor, ranking })
    }

    pub fn dim(&self) -> usize {
        self.tensor.size()
    }

    /// Writes the derivative at `y` into `out`. No bounds or finiteness checks.
    pub fn rhs_into(&self, y: &[T], out: &mut [T]) {
        let m = self.dim();
        out.iter_mut().for_each(|v| *v = T::zero());
        for s in 0..m {
            let ys = y[s];
            if ys == T::zero() {
                continue;
            }
            let frow = self.ranking.row(s);
            let mut outflow = T::zero();
            for l in 0..m {
                let w = frow[l] * ys * y[l];
                if w == T::zero() {
                    continue;
                }
                outflow += w;
                for (k, p) in self.tensor.row(s, l).iter() {
                    out[k] += w * p;
                }
            }
            out[s] -= outflow;
        }
    }

    /// Sup norm of the derivative at `y`.
    pub fn speed(&self, y: &[T], scratch: &mut [T]) -> T {
        self.rhs_into(y, scratch);
        scratch.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Right-hand side of the mean-field system at `y`.
///
/// `y` need not lie on the simplex; integrators may probe nearby states.
pub fn rhs<T: Scalar>(
    y: &[T],
    tensor: &TransitionTensor<T>,
    ranking: &RankingMatrix<T>,
) -> Result<Vec<T>> {
    let field = MeanField::new(tensor, ranking)?;
    if y.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            what: "fraction vector",
            expected: field.dim(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fraction vector"));
    }
    let mut out = vec![T::zero(); y.len()];
    field.rhs_into(y, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions<T> {
    pub horizon: T,
    pub step: T,
    /// Record every `sample_stride`-th step; the initial and final states
    /// are always recorded.
    pub sample_stride: usize,
    /// Stop early once `max |rhs|` drops below this value.
    pub equilibrium_tolerance: Option<T>,
}

impl<T: Scalar> IntegrateOptions<T> {
    pub fn new(horizon: T, step: T) -> Self {
        IntegrateOptions {
            horizon,
            step,
            sample_stride: 1,
            equilibrium_tolerance: None,
        }
    }

    pub fn sample_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn stop_at_equilibrium(mut self, tolerance: T) -> Self {
        self.equilibrium_tolerance = Some(tolerance);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory<T> {
    pub taus: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub step: T,
    /// Largest `|sum y - 1|` seen at any step, not only at recorded samples.
    pub max_sum_deviation: T,
    /// Smallest component seen at any step.
    pub min_fraction: T,
    /// Time at which the equilibrium tolerance was met, if early stopping was on.
    pub equilibrium_at: Option<T>,
}

impl<T: Scalar> MeanFieldTrajectory<T> {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn last(&self) -> &[T] {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Linear interpolation of the state at `tau`, or `None` outside the
    /// recorded range.
    pub fn interpolate(&self, tau: T) -> Option<Vec<T>> {
        let first = *self.taus.first()?;
        let last = *self.taus.last()?;
        if tau < first || tau > last {
            return None;
        }
        let hi = self.taus.partition_point(|&t| t < tau);
        if self.taus[hi] == tau || hi == 0 {
            return Some(self.states[hi].clone());
        }
        let lo = hi - 1;
        let w = (tau - self.taus[lo]) / (self.taus[hi] - self.taus[lo]);
        Some(
            self.states[lo]
                .iter()
                .zip(&self.states[hi])
                .map(|(&a, &b)| a + w * (b - a))
                .collect(),
        )
    }
}

/// Checks `y0` is a finite nonnegative distribution and renormalizes tiny
/// deviations of its sum.
pub fn validate_initial<T: Scalar>(y0: &[T]) -> Result<Vec<T>> {
    if let Some(q) = y0.iter().position(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InitialCondition(format!(
            "component {} is {} (must be finite and nonnegative)",
            q + 1,
            y0[q]
        )));
    }
    let sum: T = y0.iter().copied().sum();
    if (sum - T::one()).abs() > T::lit(INITIAL_SUM_TOLERANCE).max(T::row_sum_tolerance()) {
        return Err(Error::InitialCondition(format!(
            "fractions sum to {sum}, expected 1"
        )));
    }
    Ok(y0.iter().map(|&v| v / sum).collect())
}

/// Integrates the mean-field system from `y0` with fixed-step RK4.
///
/// Step `i` lands exactly on `tau = i * step`; the last step is shortened
/// so the run ends on `horizon`. States are never clamped.
pub fn integrate<T: Scalar>(
    y0: &[T],
    tensor: &TransitionTensor<T>,
    ranking: &RankingMatrix<T>,
    options: IntegrateOptions<T>,
) -> Result<MeanFieldTrajectory<T>> {
    let field = MeanField::new(tensor, ranking)?;
    if y0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            what: "initial condition",
            expected: field.dim(),
            got: y0.len(),
        });
    }
    let IntegrateOptions {
        horizon,
        step,
        sample_stride,
        equilibrium_tolerance,
    } = options;
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be positive"
        )));
    }
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step {step} must be positive"
        )));
    }
    if sample_stride == 0 {
        return Err(Error::InvalidParameter(
            "sample stride must be positive".into(),
        ));
    }
    let mut y = validate_initial(y0)?;

    // steps within 1e-9 relative of an integer count are not split
    let ratio = (horizon / step).as_f64();
    let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1);

    let mut traj = MeanFieldTrajectory {
        taus: vec![T::zero()],
        states: vec![y.clone()],
        step,
        max_sum_deviation: T::zero(),
        min_fraction: y.iter().fold(T::infinity(), |a, &v| a.min(v)),
        equilibrium_at: None,
    };
    let mut ws = Rk4Workspace::new(y.len());
    let mut scratch = vec![T::zero(); y.len()];
    let mut f = |state: &[T], out: &mut [T]| field.rhs_into(state, out);
    for i in 1..=steps {
        let tau_prev = T::lit((i - 1) as f64) * step;
        let tau = if i == steps {
            horizon
        } else {
            T::lit(i as f64) * step
        };
        rk4_step(&mut f, &mut y, tau - tau_prev, &mut ws);

        let mut sum = T::zero();
        for &v in &y {
            if !v.is_finite() {
                return Err(Error::Diverged { tau: tau.as_f64() });
            }
            sum += v;
            traj.min_fraction = traj.min_fraction.min(v);
        }
        traj.max_sum_deviation = traj.max_sum_deviation.max((sum - T::one()).abs());

        let at_equilibrium = match equilibrium_tolerance {
            Some(tol) => field.speed(&y, &mut scratch) < tol,
            None => false,
        };
        if i % sample_stride == 0 || i == steps || at_equilibrium {
            traj.taus.push(tau);
            traj.states.push(y.clone());
        }
        if at_equilibrium {
            traj.equilibrium_at = Some(tau);
            break;
        }
    }
    Ok(traj)
}

/// Opinion-camp fractions of every recorded sample.
pub fn opinion_trajectory<T: Scalar>(
    trajectory: &MeanFieldTrajectory<T>,
    space: &AttributeSpace,
) -> Result<Vec<Vec<T>>> {
    trajectory
        .states
        .iter()
        .map(|y| space.aggregate_opinion_fractions(y))
        .collect()
}
