//! Discrete attribute spaces and the cortege index map.
//!
//! An agent is described by a cortege: one value for each of `L` discrete
//! attributes, the first of which is always the opinion. The `M` possible
//! corteges are numbered opinion-major: all corteges carrying the first
//! opinion value come first, then those carrying the second, and so on.
//! Inside an opinion block the remaining attributes are ordered
//! lexicographically, attribute 2 being the most significant digit.
//!
//! Indices in this API are 0-based (attribute 0 is the opinion). Config files
//! and CSV headers use 1-based numbering.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One value index per attribute, each in `0..cardinality`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cortege(Vec<usize>);

impl Cortege {
    pub fn new(values: Vec<usize>) -> Self {
        Cortege(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn opinion(&self) -> usize {
        self.0[0]
    }
}

impl From<Vec<usize>> for Cortege {
    fn from(values: Vec<usize>) -> Self {
        Cortege(values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpace {
    cardinalities: Vec<usize>,
    labels: Option<Vec<Vec<String>>>,
    /// `strides[r]` is the product of the cardinalities after attribute `r`.
    strides: Vec<usize>,
    size: usize,
}

impl AttributeSpace {
    pub fn new(cardinalities: &[usize]) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some(r) = cardinalities.iter().position(|&m| m == 0) {
            return Err(Error::ZeroCardinality { attribute: r + 1 });
        }
        let mut size = 1usize;
        for (r, &m) in cardinalities.iter().enumerate() {
            size = size
                .checked_mul(m)
                .ok_or(Error::SpaceOverflow { attribute: r + 1 })?;
        }
        let mut strides = vec![1usize; cardinalities.len()];
        for r in (0..cardinalities.len() - 1).rev() {
            strides[r] = strides[r + 1] * cardinalities[r + 1];
        }
        Ok(AttributeSpace {
            cardinalities: cardinalities.to_vec(),
            labels: None,
            strides,
            size,
        })
    }

    /// Builds a space with a label for every value of every attribute.
    pub fn with_labels(cardinalities: &[usize], labels: Vec<Vec<String>>) -> Result<Self> {
        let mut space = Self::new(cardinalities)?;
        if labels.len() != cardinalities.len() {
            return Err(Error::DimensionMismatch {
                what: "attribute labels",
                expected: cardinalities.len(),
                got: labels.len(),
            });
        }
        for (r, (values, &m)) in labels.iter().zip(cardinalities).enumerate() {
            if values.len() != m {
                return Err(Error::LabelCount {
                    attribute: r + 1,
                    expected: m,
                    got: values.len(),
                });
            }
        }
        space.labels = Some(labels);
        Ok(space)
    }

    /// Opinion-only space of the original single-attribute model.
    pub fn opinion_only(num_opinions: usize) -> Result<Self> {
        Self::new(&[num_opinions])
    }

    /// Number of attributes `L`.
    pub fn num_attributes(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, attribute: usize) -> usize {
        self.cardinalities[attribute]
    }

    /// Number of corteges `M`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_opinions(&self) -> usize {
        self.cardinalities[0]
    }

    /// Number of corteges sharing one opinion value.
    pub fn block_size(&self) -> usize {
        self.strides[0]
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    pub fn label(&self, attribute: usize, value: usize) -> Option<&str> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(attribute))
            .and_then(|v| v.get(value))
            .map(String::as_str)
    }

    pub fn encode(&self, cortege: &Cortege) -> Result<usize> {
        let values = cortege.values();
        if values.len() != self.num_attributes() {
            return Err(Error::CortegeArity {
                expected: self.num_attributes(),
                got: values.len(),
            });
        }
        let mut index = 0;
        for (r, (&v, &m)) in values.iter().zip(&self.cardinalities).enumerate() {
            if v >= m {
                return Err(Error::ValueOutOfRange {
                    attribute: r + 1,
                    value: v + 1,
                    max: m,
                });
            }
            index += v * self.strides[r];
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Result<Cortege> {
        self.check_index(index)?;
        Ok(Cortege(
            (0..self.num_attributes())
                .map(|r| self.value_unchecked(index, r))
                .collect(),
        ))
    }

    /// Value of `attribute` carried by cortege `index`.
    pub fn value_of(&self, index: usize, attribute: usize) -> Result<usize> {
        self.check_index(index)?;
        if attribute >= self.num_attributes() {
            return Err(Error::AttributeOutOfRange {
                attribute: attribute + 1,
                max: self.num_attributes(),
            });
        }
        Ok(self.value_unchecked(index, attribute))
    }

    pub fn opinion_of(&self, index: usize) -> usize {
        index / self.strides[0]
    }

    /// True when corteges `a` and `b` agree on every attribute except the opinion.
    pub fn same_non_opinion(&self, a: usize, b: usize) -> bool {
        a % self.strides[0] == b % self.strides[0]
    }

    pub(crate) fn value_unchecked(&self, index: usize, attribute: usize) -> usize {
        (index / self.strides[attribute]) % self.cardinalities[attribute]
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange {
                index: index + 1,
                max: self.size,
            });
        }
        Ok(())
    }

    /// Sums a cortege-indexed vector over each opinion block.
    pub fn aggregate_opinion_fractions<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        self.aggregate_by_attribute(y, 0)
    }

    /// Sums a cortege-indexed vector over the corteges sharing each value of
    /// `attribute`.
    pub fn aggregate_by_attribute<T: Scalar>(&self, y: &[T], attribute: usize) -> Result<Vec<T>> {
        if y.len() != self.size {
            return Err(Error::DimensionMismatch {
                what: "fraction vector",
                expected: self.size,
                got: y.len(),
            });
        }
        if attribute >= self.num_attributes() {
            return Err(Error::AttributeOutOfRange {
                attribute: attribute + 1,
                max: self.num_attributes(),
            });
        }
        let mut out = vec![T::zero(); self.cardinalities[attribute]];
        for (q, &v) in y.iter().enumerate() {
            out[self.value_unchecked(q, attribute)] += v;
        }
        Ok(out)
    }

    /// Integer counterpart of [`aggregate_by_attribute`](Self::aggregate_by_attribute).
    pub fn count_by_attribute(&self, counts: &[usize], attribute: usize) -> Result<Vec<usize>> {
        if counts.len() != self.size {
            return Err(Error::DimensionMismatch {
                what: "count vector",
                expected: self.size,
                got: counts.len(),
            });
        }
        if attribute >= self.num_attributes() {
            return Err(Error::AttributeOutOfRange {
                attribute: attribute + 1,
                max: self.num_attributes(),
            });
        }
        let mut out = vec![0usize; self.cardinalities[attribute]];
        for (q, &c) in counts.iter().enumerate() {
            out[self.value_unchecked(q, attribute)] += c;
        }
        Ok(out)
    }

    /// Human-readable cortege, using labels when present.
    pub fn describe(&self, index: usize) -> String {
        let parts: Vec<String> = (0..self.num_attributes())
            .map(|r| {
                let v = self.value_unchecked(index, r);
                self.label(r, v)
                    .map(str::to_owned)
                    .unwrap_or_else(|| (v + 1).to_string())
            })
            .collect();
        format!("({})", parts.join(", "))
    }
}

impl fmt::Display for AttributeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.cardinalities.iter().map(|m| m.to_string()).collect();
        write!(f, "{} corteges over ({})", self.size, dims.join(" x "))
    }
}
