//! CSV trajectory output.
//!
//! Stochastic runs: `t,tau,Y_1..Y_M,y_1..y_M,yo_1..yo_m1`.
//! Mean-field runs: `tau,y_1..y_M,yo_1..yo_m1`.
//! Reals are written in scientific notation with 17 significant digits,
//! which round-trips `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::Error as ModelError;
use crate::meanfield::MeanFieldTrajectory;
use crate::scalar::Scalar;
use crate::simulator::SimTrajectory;
use crate::space::AttributeSpace;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
}

pub enum Trajectory<'a, T> {
    Sim(&'a SimTrajectory),
    MeanField(&'a MeanFieldTrajectory<T>),
}

fn real<T: Scalar>(v: T) -> String {
    format!("{v:.16e}")
}

fn push_names(header: &mut Vec<String>, prefix: &str, n: usize) {
    header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
}

pub fn sim_header(space: &AttributeSpace) -> Vec<String> {
    let mut h = vec!["t".to_owned(), "tau".to_owned()];
    push_names(&mut h, "Y", space.len());
    push_names(&mut h, "y", space.len());
    push_names(&mut h, "yo", space.num_opinions());
    h
}

pub fn meanfield_header(space: &AttributeSpace) -> Vec<String> {
    let mut h = vec!["tau".to_owned()];
    push_names(&mut h, "y", space.len());
    push_names(&mut h, "yo", space.num_opinions());
    h
}

pub fn write_sim_csv<W: Write>(
    out: &mut W,
    traj: &SimTrajectory,
    space: &AttributeSpace,
) -> Result<(), OutputError> {
    writeln!(out, "{}", sim_header(space).join(","))?;
    for i in 0..traj.len() {
        let counts = &traj.counts[i];
        if counts.len() != space.len() {
            return Err(ModelError::DimensionMismatch {
                what: "simulation counts",
                expected: space.len(),
                got: counts.len(),
            }
            .into());
        }
        let y = traj.fractions(i);
        let yo = space.aggregate_opinion_fractions(&y)?;
        let mut fields = vec![traj.iterations[i].to_string(), real(traj.tau(i))];
        fields.extend(counts.iter().map(|c| c.to_string()));
        fields.extend(y.into_iter().map(real));
        fields.extend(yo.into_iter().map(real));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_meanfield_csv<W: Write, T: Scalar>(
    out: &mut W,
    traj: &MeanFieldTrajectory<T>,
    space: &AttributeSpace,
) -> Result<(), OutputError> {
    writeln!(out, "{}", meanfield_header(space).join(","))?;
    for (tau, y) in traj.taus.iter().zip(&traj.states) {
        let yo = space.aggregate_opinion_fractions(y)?;
        let mut fields = vec![real(*tau)];
        fields.extend(y.iter().copied().map(real));
        fields.extend(yo.into_iter().map(real));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes `trajectory` to `path`, replacing any existing file.
pub fn write_trajectory<T: Scalar>(
    trajectory: Trajectory<'_, T>,
    space: &AttributeSpace,
    path: &Path,
    format: Format,
) -> Result<(), OutputError> {
    let Format::Csv = format;
    let mut out = BufWriter::new(File::create(path)?);
    match trajectory {
        Trajectory::Sim(t) => write_sim_csv(&mut out, t, space)?,
        Trajectory::MeanField(t) => write_meanfield_csv(&mut out, t, space)?,
    }
    out.flush()?;
    Ok(())
}

/// Parsed numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_csv(text: &str) -> Result<CsvTable, OutputError> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or(OutputError::Parse {
            line: 1,
            message: "missing header".into(),
        })?
        .split(',')
        .map(|s| s.trim().to_owned())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| OutputError::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
        if row.len() != header.len() {
            return Err(OutputError::Parse {
                line: i + 2,
                message: format!("{} fields, header has {}", row.len(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
