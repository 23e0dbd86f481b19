//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles work on plain dense arrays and agent lists; they never call
//! into the crate's expectation or right-hand-side code.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scardo::{AttributeSpace, MaskMode, RankingMatrix, TransitionTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two opinions (-1, 1) times two ages (a, b).
pub fn example_space() -> AttributeSpace {
    AttributeSpace::new(&[2, 2]).unwrap()
}

pub const EXAMPLE_RANKING: [[f64; 4]; 4] = [
    [1.0, 0.8, 0.6, 0.4],
    [0.8, 1.0, 0.4, 0.6],
    [0.6, 0.4, 1.0, 0.8],
    [0.4, 0.6, 0.8, 1.0],
];

pub const EXAMPLE_Y0: [f64; 4] = [0.4, 0.1, 0.1, 0.4];

pub fn example_ranking() -> RankingMatrix<f64> {
    let rows: Vec<Vec<f64>> = EXAMPLE_RANKING.iter().map(|r| r.to_vec()).collect();
    RankingMatrix::from_rows(&example_space(), &rows).unwrap()
}

/// Lift of the two-opinion "adopt the donor's opinion with probability
/// 0.4" tensor, with age static.
pub fn example_tensor() -> TransitionTensor<f64> {
    let space = example_space();
    let opinions = AttributeSpace::opinion_only(2).unwrap();
    let base = TransitionTensor::adopt_donor(&opinions, 0.4).unwrap();
    TransitionTensor::lift(&space, &base)
        .unwrap()
        .mask_static_attributes(&space, &[1], MaskMode::SelfAbsorb)
        .unwrap()
}

/// JSON config of the example model.
pub fn example_config(agents: usize, seed: u64, horizon: f64) -> String {
    let counts: Vec<String> = EXAMPLE_Y0
        .iter()
        .map(|y| ((y * agents as f64).round() as usize).to_string())
        .collect();
    format!(
        r#"{{
  "space": {{"cardinalities": [2, 2], "labels": [["-1", "1"], ["a", "b"]]}},
  "tensor": {{"kind": "recipe", "base": {{"kind": "adopt", "probability": 0.4}}, "static_attributes": [2]}},
  "ranking": {{"kind": "additive", "penalties": [0.4, 0.2]}},
  "population": {{"agents": {agents}, "initial": {{"counts": [{}]}}}},
  "run": {{"seed": {seed}, "horizon": {horizon}, "step": 0.001, "replicas": 2}},
  "sensitivity": {{"target": {{"kind": "tensor", "s": 1, "l": 3, "k": 3}}, "epsilon": 0.0001}}
}}
"#,
        counts.join(", ")
    )
}

/// Dense `M x M x M` row-stochastic array; each entry is zero with
/// probability `sparsity`, every row keeps at least one positive entry.
pub fn random_dense_tensor(m: usize, sparsity: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * m * m);
    for _ in 0..m * m {
        let mut row: Vec<f64> = (0..m)
            .map(|_| {
                if rng.gen::<f64>() < sparsity {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        if row.iter().all(|&p| p == 0.0) {
            row[rng.gen_range(0..m)] = 1.0;
        }
        let sum: f64 = row.iter().sum();
        out.extend(row.iter().map(|p| p / sum));
    }
    out
}

pub fn random_dense_ranking(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..m * m)
        .map(|_| match rng.gen_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        })
        .collect()
}

/// Point on the simplex, with some coordinates exactly zero.
pub fn random_simplex(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut y: Vec<f64> = (0..m)
        .map(|_| {
            if rng.gen::<f64>() < 0.2 {
                0.0
            } else {
                -rng.gen::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    if y.iter().all(|&v| v == 0.0) {
        y[0] = 1.0;
    }
    let sum: f64 = y.iter().sum();
    y.iter().map(|v| v / sum).collect()
}

/// Every count vector of length `m` summing to `n`.
pub fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, m - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Agent list holding `counts[q]` agents of cortege `q`, in index order.
pub fn agents_from_counts(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(q, &c)| std::iter::repeat_n(q, c))
        .collect()
}

/// Expected one-iteration count change by enumerating every recipient,
/// every other agent as donor, both gate outcomes and every outcome cortege.
pub fn enumerated_expectation(
    agents: &[usize],
    tensor: &[f64],
    ranking: &[f64],
    m: usize,
) -> Vec<f64> {
    let n = agents.len();
    let pair = 1.0 / (n as f64 * (n - 1) as f64);
    let mut out = vec![0.0; m];
    for (i, &s) in agents.iter().enumerate() {
        for (j, &l) in agents.iter().enumerate() {
            if i == j {
                continue;
            }
            let pass = ranking[s * m + l];
            // blocked branch (probability 1 - pass) changes nothing
            for k in 0..m {
                let prob = pair * pass * tensor[(s * m + l) * m + k];
                out[k] += prob;
                out[s] -= prob;
            }
        }
    }
    out
}

/// Opinion-space expectation of the single-attribute model with threshold
/// gating, written with the `(Y_l - [s = l]) / N` donor factor when
/// `population_denominator` is set and `/(N - 1)` otherwise.
pub fn opinion_space_expectation(
    opinion_counts: &[usize],
    base: &[f64],
    max_distance: f64,
    block_probability: f64,
    population_denominator: bool,
) -> Vec<f64> {
    let m = opinion_counts.len();
    let n: usize = opinion_counts.iter().sum();
    let donors = if population_denominator { n } else { n - 1 } as f64;
    let mut out = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let rho = if (i as f64 - j as f64).abs() > max_distance {
                1.0 - block_probability
            } else {
                1.0
            };
            let yi = opinion_counts[i] as f64;
            let yj = opinion_counts[j] as f64 - if i == j { 1.0 } else { 0.0 };
            let w = yi / n as f64 * yj / donors * rho;
            for q in 0..m {
                out[q] += w * base[(i * m + j) * m + q];
            }
            out[i] -= w;
        }
    }
    out
}

/// Triple-sum mean-field field `sum_{s,l} f_{sl} y_s y_l (p_{slq} - [s = q])`.
pub fn triple_sum_rhs(y: &[f64], tensor: &[f64], ranking: &[f64]) -> Vec<f64> {
    let m = y.len();
    let mut out = vec![0.0; m];
    for s in 0..m {
        for l in 0..m {
            let w = ranking[s * m + l] * y[s] * y[l];
            for q in 0..m {
                let delta = if s == q { 1.0 } else { 0.0 };
                out[q] += w * (tensor[(s * m + l) * m + q] - delta);
            }
        }
    }
    out
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
