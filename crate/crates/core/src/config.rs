//! JSON run configuration.
//!
//! One self-contained document describes an experiment; see
//! `docs/config-schema.md` for the field inventory. Every index in the
//! document is 1-based. Each component is built through its module's own
//! validating constructor, so an accepted config never holds an invalid
//! tensor, ranking or population.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error;
use crate::io::Format;
use crate::meanfield::{SensitivityTarget, DEFAULT_STEP};
use crate::ranking::RankingMatrix;
use crate::simulator::{Graph, PopulationState};
use crate::space::AttributeSpace;
use crate::transition::{MaskMode, TransitionTensor};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid {context}: {source}")]
    Semantic {
        context: &'static str,
        #[source]
        source: Error,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn semantic(context: &'static str) -> impl FnOnce(Error) -> ConfigError {
    move |source| ConfigError::Semantic { context, source }
}

fn schema(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        path: path.to_owned(),
        message: message.into(),
    }
}

// ---- raw document ----------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    space: RawSpace,
    tensor: RawTensor,
    ranking: RawRanking,
    population: RawPopulation,
    run: RawRun,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    sensitivity: Option<RawSensitivity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    cardinalities: Vec<usize>,
    #[serde(default)]
    labels: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTensor {
    Dense {
        entries: Vec<Vec<Vec<f64>>>,
    },
    Sparse {
        entries: Vec<(usize, usize, usize, f64)>,
    },
    Recipe {
        base: RawBase,
        #[serde(default)]
        static_attributes: Vec<usize>,
        #[serde(default)]
        mask_mode: RawMaskMode,
        #[serde(default)]
        stubborn: Option<RawStubborn>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawBase {
    Identity,
    Adopt { probability: f64 },
    Dense { entries: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawMaskMode {
    #[default]
    SelfAbsorb,
    Renormalize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStubborn {
    #[serde(default)]
    corteges: Vec<usize>,
    #[serde(default)]
    attribute: Option<usize>,
    #[serde(default)]
    values: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawRanking {
    Uniform,
    Dense {
        entries: Vec<Vec<f64>>,
    },
    Threshold {
        max_distance: f64,
        block_probability: f64,
    },
    Additive {
        penalties: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPopulation {
    agents: usize,
    initial: RawInitial,
    #[serde(default)]
    graph: RawGraph,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawInitial {
    Counts(Vec<usize>),
    Fractions(Vec<f64>),
    Corteges(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawGraph {
    #[default]
    Complete,
    EdgeList(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: u64,
    #[serde(default)]
    iterations: Option<u64>,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    sample_interval: Option<u64>,
    #[serde(default)]
    ode_sample_stride: Option<usize>,
    #[serde(default)]
    replicas: Option<usize>,
    #[serde(default)]
    equilibrium_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    dir: Option<PathBuf>,
    #[serde(default)]
    format: RawFormat,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawFormat {
    #[default]
    Csv,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensitivity {
    target: RawTarget,
    epsilon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTarget {
    Tensor { s: usize, l: usize, k: usize },
    Ranking { s: usize, l: usize },
    Initial { direction: Vec<f64> },
}

// ---- validated config ------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub iterations: u64,
    pub horizon: f64,
    pub step: f64,
    pub sample_interval: u64,
    pub ode_sample_stride: usize,
    pub replicas: usize,
    pub equilibrium_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySettings {
    pub target: SensitivityTarget<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub space: AttributeSpace,
    pub tensor: TransitionTensor<f64>,
    pub ranking: RankingMatrix<f64>,
    pub population: PopulationState,
    /// Mean-field initial condition: the given fractions, or counts / N.
    pub initial_fractions: Vec<f64>,
    pub run: RunSettings,
    pub output_dir: Option<PathBuf>,
    pub format: Format,
    pub sensitivity: Option<SensitivitySettings>,
    /// SHA-256 of the config text, hex encoded.
    pub digest: String,
}

/// Parses a config; relative edge-list paths resolve against the working
/// directory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_in(text, Path::new("."))
}

/// Parses a config read from `path`; relative edge-list paths resolve
/// against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

pub fn parse_config_in(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => ConfigError::Schema {
                path,
                message: inner.to_string(),
            },
            _ => ConfigError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            },
        }
    })?;
    de.end().map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let space = match raw.space.labels {
        Some(labels) => AttributeSpace::with_labels(&raw.space.cardinalities, labels),
        None => AttributeSpace::new(&raw.space.cardinalities),
    }
    .map_err(semantic("space"))?;

    let tensor = build_tensor(&space, raw.tensor)?;
    let ranking = build_ranking(&space, raw.ranking)?;
    let (population, initial_fractions) = build_population(&space, raw.population, base_dir)?;
    let run = build_run(raw.run, population.num_agents())?;
    let sensitivity = raw
        .sensitivity
        .map(|s| build_sensitivity(&space, s))
        .transpose()?;

    let digest = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let RawFormat::Csv = raw.output.format;

    Ok(RunConfig {
        space,
        tensor,
        ranking,
        population,
        initial_fractions,
        run,
        output_dir: raw.output.dir,
        format: Format::Csv,
        sensitivity,
        digest,
    })
}

fn zero_based(path: &str, index: usize, max: usize) -> Result<usize, ConfigError> {
    if index == 0 || index > max {
        return Err(schema(path, format!("index {index} outside 1..={max}")));
    }
    Ok(index - 1)
}

fn build_tensor(
    space: &AttributeSpace,
    raw: RawTensor,
) -> Result<TransitionTensor<f64>, ConfigError> {
    match raw {
        RawTensor::Dense { entries } => {
            TransitionTensor::from_nested(space, &entries).map_err(semantic("tensor"))
        }
        RawTensor::Sparse { entries } => {
            let m = space.len();
            let triplets = entries
                .into_iter()
                .map(|(s, l, k, p)| {
                    Ok((
                        zero_based("tensor.entries", s, m)?,
                        zero_based("tensor.entries", l, m)?,
                        zero_based("tensor.entries", k, m)?,
                        p,
                    ))
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            TransitionTensor::from_triplets(space, triplets).map_err(semantic("tensor"))
        }
        RawTensor::Recipe {
            base,
            static_attributes,
            mask_mode,
            stubborn,
        } => {
            let opinions = AttributeSpace::opinion_only(space.num_opinions())
                .map_err(semantic("tensor.base"))?;
            let base = match base {
                RawBase::Identity => TransitionTensor::identity(&opinions),
                RawBase::Adopt { probability } => {
                    TransitionTensor::adopt_donor(&opinions, probability)
                        .map_err(semantic("tensor.base"))?
                }
                RawBase::Dense { entries } => TransitionTensor::from_nested(&opinions, &entries)
                    .map_err(semantic("tensor.base"))?,
            };
            let mut tensor = TransitionTensor::lift(space, &base).map_err(semantic("tensor"))?;
            if !static_attributes.is_empty() {
                let attrs = static_attributes
                    .iter()
                    .map(|&r| zero_based("tensor.static_attributes", r, space.num_attributes()))
                    .collect::<Result<Vec<_>, _>>()?;
                let mode = match mask_mode {
                    RawMaskMode::SelfAbsorb => MaskMode::SelfAbsorb,
                    RawMaskMode::Renormalize => MaskMode::Renormalize,
                };
                tensor = tensor
                    .mask_static_attributes(space, &attrs, mode)
                    .map_err(semantic("tensor.static_attributes"))?;
            }
            if let Some(st) = stubborn {
                let mut selected = vec![false; space.len()];
                for &q in &st.corteges {
                    selected[zero_based("tensor.stubborn.corteges", q, space.len())?] = true;
                }
                match st.attribute {
                    Some(r) => {
                        let r = zero_based("tensor.stubborn.attribute", r, space.num_attributes())?;
                        let values = st
                            .values
                            .iter()
                            .map(|&v| zero_based("tensor.stubborn.values", v, space.cardinality(r)))
                            .collect::<Result<Vec<_>, _>>()?;
                        for (q, flag) in selected.iter_mut().enumerate() {
                            if values.contains(&space.value_unchecked(q, r)) {
                                *flag = true;
                            }
                        }
                    }
                    None if !st.values.is_empty() => {
                        return Err(schema("tensor.stubborn", "`values` requires `attribute`"))
                    }
                    None => {}
                }
                tensor = tensor.make_stubborn(|q| selected[q]);
            }
            Ok(tensor)
        }
    }
}

fn build_ranking(
    space: &AttributeSpace,
    raw: RawRanking,
) -> Result<RankingMatrix<f64>, ConfigError> {
    match raw {
        RawRanking::Uniform => Ok(RankingMatrix::uniform(space)),
        RawRanking::Dense { entries } => RankingMatrix::from_rows(space, &entries),
        RawRanking::Threshold {
            max_distance,
            block_probability,
        } => RankingMatrix::threshold(space, max_distance, block_probability),
        RawRanking::Additive { penalties } => RankingMatrix::additive_penalty(space, &penalties),
    }
    .map_err(semantic("ranking"))
}

/// Integer counts closest to `fractions * n`: floors plus the largest
/// remainders, ties going to the lower index.
pub fn counts_from_fractions(fractions: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|&f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|&x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &q in order.iter().take(n.saturating_sub(assigned)) {
        counts[q] += 1;
    }
    counts
}

fn build_population(
    space: &AttributeSpace,
    raw: RawPopulation,
    base_dir: &Path,
) -> Result<(PopulationState, Vec<f64>), ConfigError> {
    let n = raw.agents;
    let graph = match raw.graph {
        RawGraph::Complete => Graph::Complete,
        RawGraph::EdgeList(path) => {
            let full = if path.is_absolute() {
                path
            } else {
                base_dir.join(path)
            };
            let text = std::fs::read_to_string(&full).map_err(|e| ConfigError::Io {
                path: full.display().to_string(),
                message: e.to_string(),
            })?;
            Graph::parse_edge_list(n, &text).map_err(semantic("population.graph"))?
        }
    };
    let (state, fractions) = match raw.initial {
        RawInitial::Counts(counts) => {
            let total: usize = counts.iter().sum();
            if total != n {
                return Err(schema(
                    "population.initial.counts",
                    format!("counts sum to {total}, expected {n} agents"),
                ));
            }
            let state = PopulationState::from_counts(space, &counts, graph)
                .map_err(semantic("population"))?;
            let y = state.fractions();
            (state, y)
        }
        RawInitial::Fractions(fractions) => {
            let y = crate::meanfield::validate_initial(&fractions)
                .map_err(semantic("population.initial.fractions"))?;
            if y.len() != space.len() {
                return Err(semantic("population.initial.fractions")(
                    Error::DimensionMismatch {
                        what: "initial fractions",
                        expected: space.len(),
                        got: y.len(),
                    },
                ));
            }
            let counts = counts_from_fractions(&y, n);
            let state = PopulationState::from_counts(space, &counts, graph)
                .map_err(semantic("population"))?;
            (state, y)
        }
        RawInitial::Corteges(list) => {
            if list.len() != n {
                return Err(schema(
                    "population.initial.corteges",
                    format!("{} corteges listed, expected {n} agents", list.len()),
                ));
            }
            let agents = list
                .iter()
                .map(|&q| zero_based("population.initial.corteges", q, space.len()))
                .collect::<Result<Vec<_>, _>>()?;
            let state = PopulationState::from_agents(space, agents, graph)
                .map_err(semantic("population"))?;
            let y = state.fractions();
            (state, y)
        }
    };
    Ok((state, fractions))
}

fn build_run(raw: RawRun, n: usize) -> Result<RunSettings, ConfigError> {
    let (iterations, horizon) = match (raw.iterations, raw.horizon) {
        (Some(it), Some(h)) => (it, h),
        (Some(it), None) => (it, it as f64 / n as f64),
        (None, Some(h)) => ((h * n as f64).round() as u64, h),
        (None, None) => {
            return Err(schema(
                "run",
                "one of `iterations` or `horizon` is required",
            ))
        }
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(schema("run.horizon", format!("{horizon} must be positive")));
    }
    let step = raw.step.unwrap_or(DEFAULT_STEP);
    if !(step > 0.0 && step.is_finite()) {
        return Err(schema("run.step", format!("{step} must be positive")));
    }
    let sample_interval = raw.sample_interval.unwrap_or((n as u64 / 10).max(1));
    if sample_interval == 0 {
        return Err(schema("run.sample_interval", "must be positive"));
    }
    let ode_sample_stride = raw
        .ode_sample_stride
        .unwrap_or(((0.01 / step).round() as usize).max(1));
    if ode_sample_stride == 0 {
        return Err(schema("run.ode_sample_stride", "must be positive"));
    }
    let replicas = raw.replicas.unwrap_or(1);
    if replicas == 0 {
        return Err(schema("run.replicas", "must be positive"));
    }
    Ok(RunSettings {
        seed: raw.seed,
        iterations,
        horizon,
        step,
        sample_interval,
        ode_sample_stride,
        replicas,
        equilibrium_tolerance: raw.equilibrium_tolerance,
    })
}

fn build_sensitivity(
    space: &AttributeSpace,
    raw: RawSensitivity,
) -> Result<SensitivitySettings, ConfigError> {
    let m = space.len();
    let target = match raw.target {
        RawTarget::Tensor { s, l, k } => SensitivityTarget::TensorEntry {
            s: zero_based("sensitivity.target.s", s, m)?,
            l: zero_based("sensitivity.target.l", l, m)?,
            k: zero_based("sensitivity.target.k", k, m)?,
        },
        RawTarget::Ranking { s, l } => SensitivityTarget::RankingEntry {
            s: zero_based("sensitivity.target.s", s, m)?,
            l: zero_based("sensitivity.target.l", l, m)?,
        },
        RawTarget::Initial { direction } => SensitivityTarget::InitialDirection(direction),
    };
    if !(raw.epsilon > 0.0 && raw.epsilon.is_finite()) {
        return Err(schema("sensitivity.epsilon", "must be positive"));
    }
    Ok(SensitivitySettings {
        target,
        epsilon: raw.epsilon,
    })
}
