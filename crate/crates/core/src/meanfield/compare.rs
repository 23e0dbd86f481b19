//! Stochastic runs measured against the mean-field prediction.

use serde::{Deserialize, Serialize};

use super::MeanFieldTrajectory;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulator::SimTrajectory;
use crate::space::AttributeSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max_{tau, q} |Y_q / N - y_q(tau)|` over the common time range.
    pub sup_error: f64,
    pub per_cortege_max: Vec<f64>,
    pub per_opinion_max: Vec<f64>,
    /// Number of simulation samples inside the mean-field time range.
    pub samples_compared: usize,
    pub tau_end: f64,
}

/// Compares every simulation sample whose scaled time lies inside the
/// mean-field range; the mean-field state is linearly interpolated there.
pub fn compare_trajectories<T: Scalar>(
    sim: &SimTrajectory,
    mf: &MeanFieldTrajectory<T>,
    space: &AttributeSpace,
) -> Result<ComparisonReport> {
    let m = space.len();
    if let Some(y) = mf.states.first() {
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                what: "mean-field state",
                expected: m,
                got: y.len(),
            });
        }
    }
    let mut report = ComparisonReport {
        sup_error: 0.0,
        per_cortege_max: vec![0.0; m],
        per_opinion_max: vec![0.0; space.num_opinions()],
        samples_compared: 0,
        tau_end: 0.0,
    };
    for i in 0..sim.len() {
        if sim.counts[i].len() != m {
            return Err(Error::DimensionMismatch {
                what: "simulation counts",
                expected: m,
                got: sim.counts[i].len(),
            });
        }
        let tau = sim.tau(i);
        let Some(y) = mf.interpolate(T::lit(tau)) else {
            continue;
        };
        let y: Vec<f64> = y.into_iter().map(Scalar::as_f64).collect();
        let x = sim.fractions(i);
        for q in 0..m {
            let e = (x[q] - y[q]).abs();
            report.per_cortege_max[q] = report.per_cortege_max[q].max(e);
        }
        let xo = space.aggregate_opinion_fractions(&x)?;
        let yo = space.aggregate_opinion_fractions(&y)?;
        for (k, (a, b)) in xo.iter().zip(&yo).enumerate() {
            report.per_opinion_max[k] = report.per_opinion_max[k].max((a - b).abs());
        }
        report.samples_compared += 1;
        report.tau_end = tau;
    }
    if report.samples_compared == 0 {
        return Err(Error::DisjointTimeRanges);
    }
    report.sup_error = report
        .per_cortege_max
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b));
    Ok(report)
}
