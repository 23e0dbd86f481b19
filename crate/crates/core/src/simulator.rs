//! Stochastic one-to-one interaction protocol.
//!
//! Each iteration picks a recipient uniformly among all agents and a donor
//! uniformly among the recipient's neighbours (every other agent on the
//! complete graph). The pair communicates with the ranking probability of
//! their corteges; if it does, the recipient's new cortege is drawn from the
//! transition row of the pair. Every iteration consumes exactly four 64-bit
//! draws (recipient, donor, gate, outcome), so trajectories depend only on
//! the seed, even when interactions are blocked or the recipient is isolated.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ranking::RankingMatrix;
use crate::scalar::Scalar;
use crate::space::AttributeSpace;
use crate::transition::TransitionTensor;

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replica `replica` in a sweep started from `master`:
/// SplitMix64 applied to `master + (replica + 1) * 0x9E3779B97F4A7C15`.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    let mut z = master.wrapping_add(replica.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps one 64-bit draw to `0..n` by multiply-shift.
#[inline]
fn draw_index(rng: &mut impl RngCore, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Maps one 64-bit draw to `[0, 1)` with 53 bits of precision.
#[inline]
fn draw_unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Graph {
    Complete,
    /// Undirected adjacency lists over 0-based agent ids.
    Explicit(Vec<Vec<usize>>),
}

impl Graph {
    /// Builds an undirected graph from 0-based edges; self-loops and
    /// duplicate edges are dropped.
    pub fn from_edges(num_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); num_agents];
        for &(u, v) in edges {
            if u >= num_agents || v >= num_agents {
                return Err(Error::EdgeOutOfRange {
                    u: u + 1,
                    v: v + 1,
                    n: num_agents,
                });
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph::Explicit(adj))
    }

    /// Parses `u v` lines with 1-based agent ids. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse_edge_list(num_agents: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::InvalidParameter(format!("edge list line {}: {e}", lineno + 1))
                })?;
            match ids.as_slice() {
                &[u, v] if u >= 1 && v >= 1 => edges.push((u - 1, v - 1)),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "edge list line {}: expected two 1-based agent ids",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_edges(num_agents, &edges)
    }
}

/// What happened during one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// The recipient had no neighbours.
    Isolated,
    /// The ranking gate prohibited the interaction.
    Blocked,
    /// The interaction happened; `from == to` when the cortege was kept.
    Interacted {
        agent: usize,
        from: usize,
        to: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    size: usize,
    agents: Vec<usize>,
    counts: Vec<usize>,
    iteration: u64,
    graph: Graph,
}

impl PopulationState {
    /// Population with explicit per-agent corteges (0-based indices).
    pub fn from_agents(space: &AttributeSpace, agents: Vec<usize>, graph: Graph) -> Result<Self> {
        let mut counts = vec![0; space.len()];
        for &q in &agents {
            space.check_index(q)?;
            counts[q] += 1;
        }
        match &graph {
            Graph::Complete if agents.len() < 2 => return Err(Error::TooFewAgents(agents.len())),
            Graph::Explicit(adj) if adj.len() != agents.len() => {
                return Err(Error::DimensionMismatch {
                    what: "graph vertex count",
                    expected: agents.len(),
                    got: adj.len(),
                })
            }
            _ => {}
        }
        Ok(PopulationState {
            size: space.len(),
            agents,
            counts,
            iteration: 0,
            graph,
        })
    }

    /// Population with the given number of agents per cortege; agents are
    /// assigned in index order (the first `counts[0]` agents hold cortege 0...).
    pub fn from_counts(space: &AttributeSpace, counts: &[usize], graph: Graph) -> Result<Self> {
        if counts.len() != space.len() {
            return Err(Error::DimensionMismatch {
                what: "initial counts",
                expected: space.len(),
                got: counts.len(),
            });
        }
        let agents = counts
            .iter()
            .enumerate()
            .flat_map(|(q, &c)| std::iter::repeat_n(q, c))
            .collect();
        Self::from_agents(space, agents, graph)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[usize] {
        &self.agents
    }

    /// Agents per cortege.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn fractions<T: Scalar>(&self) -> Vec<T> {
        let n = T::lit(self.agents.len() as f64);
        self.counts.iter().map(|&c| T::lit(c as f64) / n).collect()
    }

    /// Recounts corteges from the agent list and compares with the cached counts.
    pub fn is_consistent(&self) -> bool {
        let mut counts = vec![0; self.size];
        for &q in &self.agents {
            counts[q] += 1;
        }
        counts == self.counts && counts.iter().sum::<usize>() == self.agents.len()
    }

    fn check_components<T: Scalar>(
        &self,
        tensor: &TransitionTensor<T>,
        ranking: &RankingMatrix<T>,
    ) -> Result<()> {
        for (what, got) in [
            ("transition tensor", tensor.size()),
            ("ranking matrix", ranking.size()),
        ] {
            if got != self.size {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: self.size,
                    got,
                });
            }
        }
        Ok(())
    }

    /// Runs one iteration of the protocol.
    pub fn step<T: Scalar>(
        &mut self,
        tensor: &TransitionTensor<T>,
        ranking: &RankingMatrix<T>,
        rng: &mut impl RngCore,
    ) -> Result<StepOutcome> {
        self.check_components(tensor, ranking)?;
        Ok(self.step_unchecked(tensor, ranking, rng))
    }

    fn step_unchecked<T: Scalar>(
        &mut self,
        tensor: &TransitionTensor<T>,
        ranking: &RankingMatrix<T>,
        rng: &mut impl RngCore,
    ) -> StepOutcome {
        let n = self.agents.len();
        let recipient = draw_index(rng, n);
        let donor = match &self.graph {
            Graph::Complete => {
                let j = draw_index(rng, n - 1);
                Some(if j >= recipient { j + 1 } else { j })
            }
            Graph::Explicit(adj) => {
                let neighbours = &adj[recipient];
                if neighbours.is_empty() {
                    rng.next_u64();
                    None
                } else {
                    Some(neighbours[draw_index(rng, neighbours.len())])
                }
            }
        };
        let gate = draw_unit(rng);
        let u = draw_unit(rng);
        self.iteration += 1;

        let Some(donor) = donor else {
            return StepOutcome::Isolated;
        };
        let s = self.agents[recipient];
        let l = self.agents[donor];
        if !(gate < ranking.get(s, l).as_f64()) {
            return StepOutcome::Blocked;
        }
        let row = tensor.row(s, l);
        // inverse CDF over k = 1..M; zero entries are absent from the row
        let mut k = *row.outcomes.last().expect("stochastic row has an outcome");
        let mut cumulative = 0.0;
        for (outcome, p) in row.iter() {
            cumulative += p.as_f64();
            if u < cumulative {
                k = outcome;
                break;
            }
        }
        if k != s {
            self.agents[recipient] = k;
            self.counts[s] -= 1;
            self.counts[k] += 1;
        }
        debug_assert_eq!(self.counts.iter().sum::<usize>(), n);
        StepOutcome::Interacted {
            agent: recipient,
            from: s,
            to: k,
        }
    }
}

/// How the donor factor of the one-step expectation is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DonorNormalization {
    /// Donor drawn from the `N - 1` other agents; exact for the protocol.
    #[default]
    Exact,
    /// Divides by `N`; agrees with the exact form to `O(1/N)`.
    Population,
}

/// Exact expected change of every cortege count over one iteration on the
/// complete graph.
pub fn one_step_expectation<T: Scalar>(
    state: &PopulationState,
    tensor: &TransitionTensor<T>,
    ranking: &RankingMatrix<T>,
    normalization: DonorNormalization,
) -> Result<Vec<T>> {
    if state.graph != Graph::Complete {
        return Err(Error::UnsupportedGraph);
    }
    state.check_components(tensor, ranking)?;
    let m = state.size;
    let n = state.num_agents();
    let donors = match normalization {
        DonorNormalization::Exact => n - 1,
        DonorNormalization::Population => n,
    };
    let norm = T::lit(n as f64) * T::lit(donors as f64);
    let mut out = vec![T::zero(); m];
    for s in 0..m {
        let ys = state.counts[s];
        if ys == 0 {
            continue;
        }
        for l in 0..m {
            let yl = state.counts[l] - usize::from(s == l);
            if yl == 0 {
                continue;
            }
            let w = T::lit((ys * yl) as f64) / norm * ranking.get(s, l);
            for (k, p) in tensor.row(s, l).iter() {
                if k != s {
                    out[k] += w * p;
                    out[s] -= w * p;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub iterations: u64,
    /// Iterations between recorded samples; the final iteration is always recorded.
    pub sample_interval: u64,
    pub seed: u64,
}

/// Recorded cortege counts of one stochastic run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrajectory {
    pub num_agents: usize,
    pub seed: u64,
    pub config_digest: Option<String>,
    pub iterations: Vec<u64>,
    pub counts: Vec<Vec<usize>>,
}

impl SimTrajectory {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Scaled time `t / N` of sample `i`.
    pub fn tau(&self, i: usize) -> f64 {
        self.iterations[i] as f64 / self.num_agents as f64
    }

    pub fn fractions(&self, i: usize) -> Vec<f64> {
        let n = self.num_agents as f64;
        self.counts[i].iter().map(|&c| c as f64 / n).collect()
    }
}

/// Runs the protocol from `initial` and records counts every
/// `sample_interval` iterations.
pub fn run<T: Scalar>(
    tensor: &TransitionTensor<T>,
    ranking: &RankingMatrix<T>,
    initial: PopulationState,
    spec: RunSpec,
) -> Result<SimTrajectory> {
    if spec.sample_interval == 0 {
        return Err(Error::InvalidParameter(
            "sample interval must be positive".into(),
        ));
    }
    initial.check_components(tensor, ranking)?;
    let mut state = initial;
    let mut rng = seeded_rng(spec.seed);
    let mut traj = SimTrajectory {
        num_agents: state.num_agents(),
        seed: spec.seed,
        config_digest: None,
        iterations: vec![state.iteration],
        counts: vec![state.counts.clone()],
    };
    let start = state.iteration;
    for done in 1..=spec.iterations {
        state.step_unchecked(tensor, ranking, &mut rng);
        if done % spec.sample_interval == 0 || done == spec.iterations {
            traj.iterations.push(start + done);
            traj.counts.push(state.counts.clone());
        }
    }
    Ok(traj)
}
