//! Augmented transition tensors.
//!
//! Entry `(s, l, k)` is the probability that a recipient with cortege `s`,
//! influenced by a donor with cortege `l`, moves to cortege `k`. Each
//! `(s, l)` row is a probability distribution over `k`.
//!
//! Rows are stored compressed (nonzero outcomes only, in increasing `k`),
//! which serves both the mean-field right-hand side and inverse-CDF
//! sampling; static-attribute masks leave most entries zero.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::AttributeSpace;

/// Where the probability of a prohibited cortege change goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    /// The recipient keeps its cortege.
    #[default]
    SelfAbsorb,
    /// Remaining outcomes are rescaled proportionally; a row left with no
    /// mass becomes self-absorbing.
    Renormalize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTensor<T> {
    size: usize,
    /// Row `(s, l)` occupies `offsets[s * size + l]..offsets[s * size + l + 1]`.
    offsets: Vec<usize>,
    outcomes: Vec<usize>,
    probs: Vec<T>,
}

/// Nonzero outcomes of one `(s, l)` row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a, T> {
    pub outcomes: &'a [usize],
    pub probs: &'a [T],
}

impl<'a, T: Scalar> Row<'a, T> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + 'a {
        self.outcomes
            .iter()
            .copied()
            .zip(self.probs.iter().copied())
    }
}

/// Incremental row-by-row builder; rows must be pushed in `(s, l)` order.
struct Builder<T> {
    size: usize,
    offsets: Vec<usize>,
    outcomes: Vec<usize>,
    probs: Vec<T>,
}

impl<T: Scalar> Builder<T> {
    fn new(size: usize) -> Self {
        let mut offsets = Vec::with_capacity(size * size + 1);
        offsets.push(0);
        Builder {
            size,
            offsets,
            outcomes: Vec::new(),
            probs: Vec::new(),
        }
    }

    /// Validates a dense row, renormalizes it and appends its nonzeros.
    fn push_dense(&mut self, s: usize, l: usize, row: &[T]) -> Result<()> {
        let mut sum = T::zero();
        for (k, &p) in row.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite("transition tensor"));
            }
            if p < T::zero() {
                return Err(Error::NegativeEntry {
                    s: s + 1,
                    l: l + 1,
                    k: k + 1,
                    value: p.as_f64(),
                });
            }
            sum += p;
        }
        if (sum - T::one()).abs() > T::row_sum_tolerance() {
            return Err(Error::RowSum {
                s: s + 1,
                l: l + 1,
                sum: sum.as_f64(),
            });
        }
        for (k, &p) in row.iter().enumerate() {
            if p > T::zero() {
                self.outcomes.push(k);
                self.probs.push(if sum == T::one() { p } else { p / sum });
            }
        }
        self.offsets.push(self.outcomes.len());
        Ok(())
    }

    /// Appends a row already known to be a distribution.
    fn push_trusted(&mut self, row: &[T]) {
        for (k, &p) in row.iter().enumerate() {
            if p > T::zero() {
                self.outcomes.push(k);
                self.probs.push(p);
            }
        }
        self.offsets.push(self.outcomes.len());
    }

    fn finish(self) -> TransitionTensor<T> {
        debug_assert_eq!(self.offsets.len(), self.size * self.size + 1);
        TransitionTensor {
            size: self.size,
            offsets: self.offsets,
            outcomes: self.outcomes,
            probs: self.probs,
        }
    }
}

impl<T: Scalar> TransitionTensor<T> {
    /// Validates a dense tensor given in row-major `(s, l, k)` order.
    pub fn from_dense(space: &AttributeSpace, entries: &[T]) -> Result<Self> {
        let m = space.len();
        let expected = m.checked_mul(m).and_then(|v| v.checked_mul(m));
        if Some(entries.len()) != expected {
            return Err(Error::DimensionMismatch {
                what: "transition tensor",
                expected: expected.unwrap_or(usize::MAX),
                got: entries.len(),
            });
        }
        let mut b = Builder::new(m);
        for (row_index, row) in entries.chunks(m).enumerate() {
            b.push_dense(row_index / m, row_index % m, row)?;
        }
        Ok(b.finish())
    }

    /// Validates a nested `[s][l][k]` tensor.
    pub fn from_nested(space: &AttributeSpace, entries: &[Vec<Vec<T>>]) -> Result<Self> {
        let m = space.len();
        let mut flat = Vec::with_capacity(m * m * m);
        check_len("transition tensor", m, entries.len())?;
        for slice in entries {
            check_len("transition tensor slice", m, slice.len())?;
            for row in slice {
                check_len("transition tensor row", m, row.len())?;
                flat.extend_from_slice(row);
            }
        }
        Self::from_dense(space, &flat)
    }

    /// Validates a sparse tensor given as 0-based `(s, l, k, p)` triplets.
    /// Unlisted entries are zero.
    pub fn from_triplets(
        space: &AttributeSpace,
        triplets: impl IntoIterator<Item = (usize, usize, usize, T)>,
    ) -> Result<Self> {
        let m = space.len();
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); m * m];
        for (s, l, k, p) in triplets {
            for idx in [s, l, k] {
                space.check_index(idx)?;
            }
            rows[s * m + l].push((k, p));
        }
        let mut b = Builder::new(m);
        let mut dense = vec![T::zero(); m];
        for (row_index, entries) in rows.iter_mut().enumerate() {
            let (s, l) = (row_index / m, row_index % m);
            entries.sort_by_key(|&(k, _)| k);
            if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEntry {
                    s: s + 1,
                    l: l + 1,
                    k: w[0].0 + 1,
                });
            }
            dense.iter_mut().for_each(|v| *v = T::zero());
            for &(k, p) in entries.iter() {
                dense[k] = p;
            }
            b.push_dense(s, l, &dense)?;
        }
        Ok(b.finish())
    }

    /// Tensor under which no agent ever changes its cortege.
    pub fn identity(space: &AttributeSpace) -> Self {
        let m = space.len();
        let mut b = Builder::new(m);
        let mut row = vec![T::zero(); m];
        for s in 0..m {
            row[s] = T::one();
            for _ in 0..m {
                b.push_trusted(&row);
            }
            row[s] = T::zero();
        }
        b.finish()
    }

    /// Opinion-space tensor where the recipient adopts the donor's opinion
    /// with probability `adopt` and keeps its own otherwise.
    pub fn adopt_donor(space: &AttributeSpace, adopt: T) -> Result<Self> {
        if !(adopt >= T::zero() && adopt <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "adoption probability {adopt} outside [0, 1]"
            )));
        }
        let m = space.len();
        let mut b = Builder::new(m);
        let mut row = vec![T::zero(); m];
        for s in 0..m {
            for l in 0..m {
                row.iter_mut().for_each(|v| *v = T::zero());
                row[s] += T::one() - adopt;
                row[l] += adopt;
                b.push_trusted(&row);
            }
        }
        Ok(b.finish())
    }

    /// Number of corteges the tensor is defined over.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, s: usize, l: usize) -> Row<'_, T> {
        let r = s * self.size + l;
        let range = self.offsets[r]..self.offsets[r + 1];
        Row {
            outcomes: &self.outcomes[range.clone()],
            probs: &self.probs[range],
        }
    }

    pub fn get(&self, s: usize, l: usize, k: usize) -> T {
        let row = self.row(s, l);
        match row.outcomes.binary_search(&k) {
            Ok(i) => row.probs[i],
            Err(_) => T::zero(),
        }
    }

    pub fn dense_row(&self, s: usize, l: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.size];
        for (k, p) in self.row(s, l).iter() {
            out[k] = p;
        }
        out
    }

    /// Row-major `(s, l, k)` dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let m = self.size;
        let mut out = vec![T::zero(); m * m * m];
        for s in 0..m {
            for l in 0..m {
                for (k, p) in self.row(s, l).iter() {
                    out[(s * m + l) * m + k] = p;
                }
            }
        }
        out
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        self.probs.len()
    }

    /// Embeds an opinion-only tensor into `space`: the opinion moves as the
    /// base tensor prescribes and every other attribute is kept.
    pub fn lift(space: &AttributeSpace, base: &TransitionTensor<T>) -> Result<Self> {
        let m1 = space.num_opinions();
        if base.size() != m1 {
            return Err(Error::DimensionMismatch {
                what: "base opinion tensor",
                expected: m1,
                got: base.size(),
            });
        }
        let m = space.len();
        let block = space.block_size();
        let mut b = Builder::new(m);
        let mut row = vec![T::zero(); m];
        for s in 0..m {
            let (os, rest) = (s / block, s % block);
            for l in 0..m {
                row.iter_mut().for_each(|v| *v = T::zero());
                for (ok, p) in base.row(os, l / block).iter() {
                    row[ok * block + rest] = p;
                }
                b.push_trusted(&row);
            }
        }
        Ok(b.finish())
    }

    /// Prohibits every cortege change that alters one of `static_attrs`
    /// (0-based; the opinion attribute 0 is rejected).
    pub fn mask_static_attributes(
        &self,
        space: &AttributeSpace,
        static_attrs: &[usize],
        mode: MaskMode,
    ) -> Result<Self> {
        self.check_space(space)?;
        for &r in static_attrs {
            if r == 0 {
                return Err(Error::OpinionStatic);
            }
            if r >= space.num_attributes() {
                return Err(Error::AttributeOutOfRange {
                    attribute: r + 1,
                    max: space.num_attributes(),
                });
            }
        }
        let allowed = |s: usize, k: usize| {
            static_attrs
                .iter()
                .all(|&r| space.value_unchecked(s, r) == space.value_unchecked(k, r))
        };
        let m = self.size;
        let mut b = Builder::new(m);
        for s in 0..m {
            for l in 0..m {
                let mut row = self.dense_row(s, l);
                let mut removed = T::zero();
                for (k, p) in row.iter_mut().enumerate() {
                    if *p > T::zero() && !allowed(s, k) {
                        removed += *p;
                        *p = T::zero();
                    }
                }
                if removed > T::zero() {
                    match mode {
                        MaskMode::SelfAbsorb => row[s] += removed,
                        MaskMode::Renormalize => {
                            let kept: T = row.iter().copied().sum();
                            if kept > T::zero() {
                                row.iter_mut().for_each(|p| *p = *p / kept);
                            } else {
                                row[s] = T::one();
                            }
                        }
                    }
                }
                b.push_trusted(&row);
            }
        }
        Ok(b.finish())
    }

    /// Makes every cortege selected by `is_stubborn` self-absorbing for all donors.
    pub fn make_stubborn(&self, is_stubborn: impl Fn(usize) -> bool) -> Self {
        let m = self.size;
        let mut b = Builder::new(m);
        let mut unit = vec![T::zero(); m];
        for s in 0..m {
            let stubborn = is_stubborn(s);
            for l in 0..m {
                if stubborn {
                    unit[s] = T::one();
                    b.push_trusted(&unit);
                    unit[s] = T::zero();
                } else {
                    b.push_trusted(&self.dense_row(s, l));
                }
            }
        }
        b.finish()
    }

    /// Shifts `delta` of probability mass from the self outcome `(s, l, s)`
    /// to `(s, l, k)`, keeping the row stochastic.
    pub fn perturb_entry(&self, s: usize, l: usize, k: usize, delta: T) -> Result<Self> {
        let m = self.size;
        for idx in [s, l, k] {
            if idx >= m {
                return Err(Error::IndexOutOfRange {
                    index: idx + 1,
                    max: m,
                });
            }
        }
        if k == s {
            return Err(Error::InvalidParameter(
                "perturbed outcome must differ from the recipient cortege".into(),
            ));
        }
        let mut row = self.dense_row(s, l);
        row[k] += delta;
        row[s] -= delta;
        for idx in [k, s] {
            if !(row[idx] >= T::zero() && row[idx] <= T::one()) {
                return Err(Error::PerturbationOutOfRange(format!(
                    "transition entry ({}, {}, {})",
                    s + 1,
                    l + 1,
                    idx + 1
                )));
            }
        }
        let mut b = Builder::new(m);
        for rs in 0..m {
            for rl in 0..m {
                if (rs, rl) == (s, l) {
                    b.push_trusted(&row);
                } else {
                    b.push_trusted(&self.dense_row(rs, rl));
                }
            }
        }
        Ok(b.finish())
    }

    /// Relabels corteges: new index `perm[q]` takes the role of old index `q`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.size;
        let mut inv = vec![0; m];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let mut b = Builder::new(m);
        let mut row = vec![T::zero(); m];
        for s in 0..m {
            for l in 0..m {
                row.iter_mut().for_each(|v| *v = T::zero());
                for (k, p) in self.row(inv[s], inv[l]).iter() {
                    row[perm[k]] = p;
                }
                b.push_trusted(&row);
            }
        }
        b.finish()
    }

    pub(crate) fn check_space(&self, space: &AttributeSpace) -> Result<()> {
        check_len("transition tensor", space.len(), self.size)
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
