//! Ranking gates: pairwise communication probabilities between corteges.
//!
//! `get(s, l)` is the probability that a selected recipient with cortege `s`
//! and donor with cortege `l` are allowed to interact. The matrix need not
//! be symmetric.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::AttributeSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct RankingMatrix<T> {
    size: usize,
    entries: Vec<T>,
}

impl<T: Scalar> RankingMatrix<T> {
    /// Validates a row-major `M x M` matrix.
    pub fn from_dense(space: &AttributeSpace, entries: Vec<T>) -> Result<Self> {
        let m = space.len();
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                what: "ranking matrix",
                expected: m * m,
                got: entries.len(),
            });
        }
        for (i, &f) in entries.iter().enumerate() {
            if !(f >= T::zero() && f <= T::one()) {
                return Err(Error::RankingOutOfRange {
                    s: i / m + 1,
                    l: i % m + 1,
                    value: f.as_f64(),
                });
            }
        }
        Ok(RankingMatrix { size: m, entries })
    }

    pub fn from_rows(space: &AttributeSpace, rows: &[Vec<T>]) -> Result<Self> {
        let m = space.len();
        if rows.len() != m {
            return Err(Error::DimensionMismatch {
                what: "ranking matrix",
                expected: m,
                got: rows.len(),
            });
        }
        let mut flat = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "ranking matrix row",
                    expected: m,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_dense(space, flat)
    }

    /// Every pair always communicates.
    pub fn uniform(space: &AttributeSpace) -> Self {
        RankingMatrix {
            size: space.len(),
            entries: vec![T::one(); space.len() * space.len()],
        }
    }

    /// Blocks communication with probability `block_probability` whenever
    /// the opinion positions of the two corteges differ by more than
    /// `max_distance`. Other attributes are ignored.
    pub fn threshold(
        space: &AttributeSpace,
        max_distance: T,
        block_probability: T,
    ) -> Result<Self> {
        if !(max_distance >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "opinion distance threshold {max_distance} is negative"
            )));
        }
        if !(block_probability >= T::zero() && block_probability <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "blocking probability {block_probability} outside [0, 1]"
            )));
        }
        let m = space.len();
        let pass = T::one() - block_probability;
        let mut entries = Vec::with_capacity(m * m);
        for s in 0..m {
            for l in 0..m {
                let distance = space.opinion_of(s).abs_diff(space.opinion_of(l));
                let far = T::lit(distance as f64) > max_distance;
                entries.push(if far { pass } else { T::one() });
            }
        }
        Ok(RankingMatrix { size: m, entries })
    }

    /// `1 - sum of penalties of the attributes on which the corteges differ`,
    /// clamped to `[0, 1]`.
    pub fn additive_penalty(space: &AttributeSpace, penalties: &[T]) -> Result<Self> {
        if penalties.len() != space.num_attributes() {
            return Err(Error::DimensionMismatch {
                what: "attribute penalties",
                expected: space.num_attributes(),
                got: penalties.len(),
            });
        }
        if let Some(r) = penalties
            .iter()
            .position(|&p| !(p >= T::zero()) || !p.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "penalty {} for attribute {} must be finite and nonnegative",
                penalties[r],
                r + 1
            )));
        }
        let m = space.len();
        let mut entries = Vec::with_capacity(m * m);
        for s in 0..m {
            for l in 0..m {
                let mut f = T::one();
                for (r, &p) in penalties.iter().enumerate() {
                    if space.value_unchecked(s, r) != space.value_unchecked(l, r) {
                        f -= p;
                    }
                }
                entries.push(f.max(T::zero()).min(T::one()));
            }
        }
        Ok(RankingMatrix { size: m, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, s: usize, l: usize) -> T {
        self.entries[s * self.size + l]
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.entries[s * self.size..(s + 1) * self.size]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.size;
        (0..m).all(|s| (0..m).all(|l| self.get(s, l) == self.get(l, s)))
    }

    /// Copy with entry `(s, l)` replaced.
    pub fn with_entry(&self, s: usize, l: usize, value: T) -> Result<Self> {
        if s >= self.size || l >= self.size {
            return Err(Error::IndexOutOfRange {
                index: s.max(l) + 1,
                max: self.size,
            });
        }
        if !(value >= T::zero() && value <= T::one()) {
            return Err(Error::PerturbationOutOfRange(format!(
                "ranking entry ({}, {})",
                s + 1,
                l + 1
            )));
        }
        let mut out = self.clone();
        out.entries[s * self.size + l] = value;
        Ok(out)
    }

    /// Every entry multiplied by `factor` in `[0, 1]`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor >= T::zero() && factor <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "ranking scale factor {factor} outside [0, 1]"
            )));
        }
        Ok(RankingMatrix {
            size: self.size,
            entries: self.entries.iter().map(|&f| f * factor).collect(),
        })
    }

    /// Relabels corteges: new index `perm[q]` takes the role of old index `q`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.size;
        let mut entries = vec![T::zero(); m * m];
        for s in 0..m {
            for l in 0..m {
                entries[perm[s] * m + perm[l]] = self.get(s, l);
            }
        }
        RankingMatrix { size: m, entries }
    }
}
