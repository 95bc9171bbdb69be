//! Product spaces `{0,1}^n` and monotone events over them.
//!
//! An up-set is stored as its unique antichain of min-sets (a monotone DNF):
//! `ω ∈ A` iff some min-set is entirely set in `ω`. The empty collection is
//! the impossible event; the collection `{∅}` is the sure event.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported coordinate count (width of [`CoordSet`]).
pub const MAX_COORDS: usize = 128;

/// A set of coordinates as a fixed-width bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordSet(pub u128);

impl CoordSet {
    pub const EMPTY: CoordSet = CoordSet(0);

    #[inline]
    pub fn singleton(x: usize) -> Self {
        CoordSet(1u128 << x)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut bits = 0u128;
        for index in indices {
            if index >= n || index >= MAX_COORDS {
                return Err(Error::IndexOutOfRange { index, n });
            }
            bits |= 1u128 << index;
        }
        Ok(CoordSet(bits))
    }

    #[inline]
    pub fn bits(self) -> u128 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, x: usize) -> bool {
        x < MAX_COORDS && self.0 >> x & 1 == 1
    }

    #[inline]
    pub fn is_subset_of(self, other: CoordSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn intersects(self, other: CoordSet) -> bool {
        self.0 & other.0 != 0
    }

    #[inline]
    pub fn union(self, other: CoordSet) -> CoordSet {
        CoordSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: CoordSet) -> CoordSet {
        CoordSet(self.0 & other.0)
    }

    #[inline]
    pub fn without(self, x: usize) -> CoordSet {
        CoordSet(self.0 & !(1u128 << x))
    }

    /// Coordinates in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let x = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(x)
            }
        })
    }

    /// Canonical order: by popcount, then by numeric value.
    #[inline]
    fn canonical_key(self) -> (u32, u128) {
        (self.0.count_ones(), self.0)
    }
}

impl fmt::Debug for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A monotone (increasing) event in canonical min-set form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UpSet {
    minsets: Vec<CoordSet>,
    support: CoordSet,
}

impl UpSet {
    /// Builds an up-set from index lists, checking every index against `n`.
    pub fn canonicalize<I, M>(n: usize, minsets: I) -> Result<Self>
    where
        I: IntoIterator<Item = M>,
        M: IntoIterator<Item = usize>,
    {
        if n > MAX_COORDS {
            return Err(Error::TooManyCoordinates { n, max: MAX_COORDS });
        }
        let masks = minsets
            .into_iter()
            .map(|m| CoordSet::from_indices(n, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_masks(masks))
    }

    /// Canonicalizes raw bitmasks: removes duplicates and every min-set that
    /// is a strict superset of another.
    pub fn from_masks<I: IntoIterator<Item = CoordSet>>(masks: I) -> Self {
        let mut masks: Vec<CoordSet> = masks.into_iter().collect();
        masks.sort_unstable_by_key(|m| m.canonical_key());
        masks.dedup();
        let mut kept: Vec<CoordSet> = Vec::with_capacity(masks.len());
        for m in masks {
            // sorted by popcount, so any subset of m is already kept
            if !kept.iter().any(|k| k.is_subset_of(m)) {
                kept.push(m);
            }
        }
        Self::from_canonical(kept)
    }

    fn from_canonical(minsets: Vec<CoordSet>) -> Self {
        let support = minsets.iter().fold(CoordSet::EMPTY, |acc, m| acc.union(*m));
        UpSet { minsets, support }
    }

    pub fn impossible() -> Self {
        Self::from_canonical(Vec::new())
    }

    pub fn sure() -> Self {
        Self::from_canonical(vec![CoordSet::EMPTY])
    }

    /// The principal up-set `{ω : ω_x = 1 for all x ∈ coords}`.
    pub fn principal(coords: CoordSet) -> Self {
        Self::from_canonical(vec![coords])
    }

    pub fn minsets(&self) -> &[CoordSet] {
        &self.minsets
    }

    pub fn support(&self) -> CoordSet {
        self.support
    }

    pub fn is_impossible(&self) -> bool {
        self.minsets.is_empty()
    }

    pub fn is_sure(&self) -> bool {
        self.minsets.first() == Some(&CoordSet::EMPTY)
    }

    pub fn is_principal(&self) -> bool {
        self.minsets.len() == 1
    }

    /// Indicator of the event at the outcome whose set coordinates are `omega`.
    #[inline]
    pub fn contains(&self, omega: CoordSet) -> bool {
        self.minsets.iter().any(|m| m.is_subset_of(omega))
    }

    pub fn intersect(&self, other: &UpSet) -> UpSet {
        let mut unions = Vec::with_capacity(self.minsets.len() * other.minsets.len());
        for a in &self.minsets {
            for b in &other.minsets {
                unions.push(a.union(*b));
            }
        }
        Self::from_masks(unions)
    }

    pub fn unite(&self, other: &UpSet) -> UpSet {
        Self::from_masks(self.minsets.iter().chain(&other.minsets).copied())
    }

    /// Cofactor with coordinate `coord` pinned to `value`.
    pub fn restrict(&self, coord: usize, value: bool) -> UpSet {
        if !self.support.contains(coord) {
            return self.clone();
        }
        if value {
            Self::from_masks(self.minsets.iter().map(|m| m.without(coord)))
        } else {
            // dropping min-sets keeps an antichain in canonical order
            Self::from_canonical(
                self.minsets
                    .iter()
                    .copied()
                    .filter(|m| !m.contains(coord))
                    .collect(),
            )
        }
    }

    /// Min-sets as sorted index lists, in canonical order.
    pub fn minset_indices(&self) -> Vec<Vec<usize>> {
        self.minsets.iter().map(|m| m.iter().collect()).collect()
    }
}

impl fmt::Debug for UpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.minsets.iter()).finish()
    }
}

/// `{0,1}^n` with independent coordinates, `Pr(ω_x = 1) = p[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpace<T> {
    p: Vec<T>,
}

impl<T: Scalar> ProductSpace<T> {
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.len() > MAX_COORDS {
            return Err(Error::TooManyCoordinates {
                n: p.len(),
                max: MAX_COORDS,
            });
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value >= T::zero() && value <= T::one()) {
                return Err(Error::InvalidProbability {
                    index,
                    value: value.to_f64_lossy(),
                });
            }
        }
        Ok(ProductSpace { p })
    }

    pub fn uniform(n: usize, p: T) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn p(&self, x: usize) -> T {
        self.p[x]
    }

    pub fn probabilities(&self) -> &[T] {
        &self.p
    }

    fn check(&self, event: &UpSet) -> Result<()> {
        match event.support().iter().find(|&x| x >= self.n()) {
            Some(index) => Err(Error::IndexOutOfRange { index, n: self.n() }),
            None => Ok(()),
        }
    }
}

/// The events `A_1..A_k` with positive weights `c_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventFamily<T> {
    space: ProductSpace<T>,
    events: Vec<UpSet>,
    weights: Vec<T>,
}

impl<T: Scalar> EventFamily<T> {
    pub fn new(space: ProductSpace<T>, events: Vec<UpSet>) -> Result<Self> {
        let weights = vec![T::one(); events.len()];
        Self::with_weights(space, events, weights)
    }

    pub fn with_weights(
        space: ProductSpace<T>,
        events: Vec<UpSet>,
        weights: Vec<T>,
    ) -> Result<Self> {
        if weights.len() != events.len() {
            return Err(Error::LengthMismatch {
                expected: events.len(),
                got: weights.len(),
            });
        }
        for event in &events {
            space.check(event)?;
        }
        for (index, &c) in weights.iter().enumerate() {
            if !c.is_finite() || c <= T::zero() {
                return Err(Error::NonPositiveWeight {
                    index,
                    value: c.to_f64_lossy(),
                });
            }
        }
        Ok(EventFamily {
            space,
            events,
            weights,
        })
    }

    pub fn space(&self) -> &ProductSpace<T> {
        &self.space
    }

    pub fn events(&self) -> &[UpSet] {
        &self.events
    }

    pub fn event(&self, i: usize) -> &UpSet {
        &self.events[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&c| c == T::one())
    }

    /// Union of all event supports.
    pub fn support(&self) -> CoordSet {
        self.events
            .iter()
            .fold(CoordSet::EMPTY, |acc, e| acc.union(e.support()))
    }

    /// Same events and space with new weights.
    pub fn reweighted(&self, weights: Vec<T>) -> Result<Self> {
        Self::with_weights(self.space.clone(), self.events.clone(), weights)
    }
}
