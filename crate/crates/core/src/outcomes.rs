//! Joint law of the indicator vector `(I_1, …, I_k)`.
//!
//! Built either by exhaustive enumeration of every assignment of the joint
//! support, or empirically from seeded samples. All oracle quantities and the
//! refined `Σ E(J_i / Y_i)` term are sums over this law.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CoordSet, ProductSpace, UpSet};
use crate::prob::{draw, joint_support, Method};
use crate::scalar::Scalar;

/// Indicator patterns are stored as `u64` bit vectors.
pub const MAX_EVENTS: usize = 64;

/// Hard ceiling on enumerated coordinates regardless of the configured cap.
const MAX_ENUMERATION: usize = 40;

/// Assignments of the high coordinates enumerated per parallel block.
const BLOCK: u64 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorLaw<T> {
    k: usize,
    /// `(pattern, probability)` with bit `i` set iff `A_i` occurs; sorted by
    /// pattern, zero-mass patterns omitted.
    atoms: Vec<(u64, T)>,
    coordinates: usize,
    method: Method,
    samples: u64,
}

impl<T: Scalar> IndicatorLaw<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[(u64, T)] {
        &self.atoms
    }

    /// Number of coordinates enumerated (or sampled).
    pub fn coordinates(&self) -> usize {
        self.coordinates
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Sample count behind an empirical law; 0 for an enumerated one.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// `E f(pattern)`.
    pub fn expect<F: Fn(u64) -> T>(&self, f: F) -> T {
        self.atoms.iter().map(|&(pat, pr)| pr * f(pat)).sum()
    }

    pub fn prob<F: Fn(u64) -> bool>(&self, pred: F) -> T {
        self.atoms
            .iter()
            .filter(|&&(pat, _)| pred(pat))
            .map(|&(_, pr)| pr)
            .sum()
    }

    pub fn total(&self) -> T {
        self.atoms.iter().map(|&(_, pr)| pr).sum()
    }
}

/// Enumerates all `2^m` assignments of the `m` coordinates in the events'
/// joint support.
pub fn enumerate_law<T: Scalar>(
    space: &ProductSpace<T>,
    events: &[&UpSet],
    max_support: usize,
) -> Result<IndicatorLaw<T>> {
    let k = events.len();
    if k > MAX_EVENTS {
        return Err(Error::TooManyEvents { k, max: MAX_EVENTS });
    }
    let support = joint_support(events);
    let m = support.len();
    let cap = max_support.min(MAX_ENUMERATION);
    if m > cap {
        return Err(Error::TooLargeForExact { support: m, cap });
    }
    let coords: Vec<usize> = support.iter().collect();
    let local: Vec<Vec<u64>> = events.iter().map(|e| localize(e, &coords)).collect();

    let lo_bits = m / 2;
    let hi_bits = m - lo_bits;
    let lo_table = weight_table(space, &coords[..lo_bits]);
    let hi_table = weight_table(space, &coords[lo_bits..]);
    let hi_count = 1u64 << hi_bits;

    let blocks: Vec<Accumulator<T>> = (0..hi_count.div_ceil(BLOCK))
        .into_par_iter()
        .map(|block| {
            let mut acc = Accumulator::new(k);
            let end = ((block + 1) * BLOCK).min(hi_count);
            for hi in block * BLOCK..end {
                let w_hi = hi_table[hi as usize];
                if w_hi == T::zero() {
                    continue;
                }
                for (lo, &w_lo) in lo_table.iter().enumerate() {
                    let w = w_hi * w_lo;
                    if w == T::zero() {
                        continue;
                    }
                    let omega = hi << lo_bits | lo as u64;
                    acc.add(pattern_local(&local, omega), w);
                }
            }
            acc
        })
        .collect();

    let mut total = Accumulator::new(k);
    for block in blocks {
        total.merge(block);
    }
    Ok(IndicatorLaw {
        k,
        atoms: total.into_atoms(),
        coordinates: m,
        method: Method::Exact,
        samples: 0,
    })
}

/// Empirical law from `samples` seeded draws.
pub fn sample_law<T: Scalar>(
    space: &ProductSpace<T>,
    events: &[&UpSet],
    samples: u64,
    seed: u64,
) -> Result<IndicatorLaw<T>> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let k = events.len();
    if k > MAX_EVENTS {
        return Err(Error::TooManyEvents { k, max: MAX_EVENTS });
    }
    if samples == 0 {
        return Err(Error::Domain(
            "Monte Carlo needs at least one sample".into(),
        ));
    }
    let support = joint_support(events);
    let coords: Vec<(usize, f64)> = support
        .iter()
        .map(|x| (x, space.p(x).to_f64_lossy()))
        .collect();
    const PART: u64 = 1 << 16;
    let counts: Vec<BTreeMap<u64, u64>> = (0..samples.div_ceil(PART))
        .into_par_iter()
        .map(|part| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(part);
            let mut counts = BTreeMap::new();
            for _ in 0..PART.min(samples - part * PART) {
                let omega = draw(&mut rng, &coords);
                *counts.entry(pattern(events, omega)).or_insert(0u64) += 1;
            }
            counts
        })
        .collect();
    let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
    for c in counts {
        for (pat, n) in c {
            *merged.entry(pat).or_insert(0) += n;
        }
    }
    let n = T::of(samples as f64);
    let atoms = merged
        .into_iter()
        .map(|(pat, c)| (pat, T::of(c as f64) / n))
        .collect();
    Ok(IndicatorLaw {
        k,
        atoms,
        coordinates: support.len(),
        method: Method::MonteCarlo,
        samples,
    })
}

/// Indicator pattern of `events` at the global outcome `omega`.
#[inline]
pub fn pattern(events: &[&UpSet], omega: CoordSet) -> u64 {
    let mut pat = 0u64;
    for (i, e) in events.iter().enumerate() {
        if e.contains(omega) {
            pat |= 1 << i;
        }
    }
    pat
}

#[inline]
fn pattern_local(local: &[Vec<u64>], omega: u64) -> u64 {
    let mut pat = 0u64;
    for (i, minsets) in local.iter().enumerate() {
        if minsets.iter().any(|&m| m & !omega == 0) {
            pat |= 1 << i;
        }
    }
    pat
}

/// Re-indexes an event's min-sets onto positions in `coords`.
fn localize(e: &UpSet, coords: &[usize]) -> Vec<u64> {
    e.minsets()
        .iter()
        .map(|m| {
            coords
                .iter()
                .enumerate()
                .filter(|&(_, &x)| m.contains(x))
                .fold(0u64, |acc, (b, _)| acc | 1 << b)
        })
        .collect()
}

/// Product-measure weight of every assignment of `coords`.
fn weight_table<T: Scalar>(space: &ProductSpace<T>, coords: &[usize]) -> Vec<T> {
    let mut table = vec![T::one()];
    for &x in coords {
        let p = space.p(x);
        let q = T::one() - p;
        let mut next = Vec::with_capacity(table.len() * 2);
        next.extend(table.iter().map(|&w| w * q));
        next.extend(table.iter().map(|&w| w * p));
        table = next;
    }
    table
}

enum Accumulator<T> {
    Dense(Vec<T>),
    Sparse(BTreeMap<u64, T>),
}

impl<T: Scalar> Accumulator<T> {
    fn new(k: usize) -> Self {
        if k <= 12 {
            Accumulator::Dense(vec![T::zero(); 1 << k])
        } else {
            Accumulator::Sparse(BTreeMap::new())
        }
    }

    #[inline]
    fn add(&mut self, pat: u64, w: T) {
        match self {
            Accumulator::Dense(v) => v[pat as usize] += w,
            Accumulator::Sparse(m) => *m.entry(pat).or_insert_with(T::zero) += w,
        }
    }

    fn merge(&mut self, other: Accumulator<T>) {
        match other {
            Accumulator::Dense(v) => {
                for (pat, w) in v.into_iter().enumerate() {
                    if w != T::zero() {
                        self.add(pat as u64, w);
                    }
                }
            }
            Accumulator::Sparse(m) => {
                for (pat, w) in m {
                    self.add(pat, w);
                }
            }
        }
    }

    fn into_atoms(self) -> Vec<(u64, T)> {
        match self {
            Accumulator::Dense(v) => v
                .into_iter()
                .enumerate()
                .filter(|&(_, w)| w != T::zero())
                .map(|(pat, w)| (pat as u64, w))
                .collect(),
            Accumulator::Sparse(m) => m.into_iter().filter(|&(_, w)| w != T::zero()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_law() {
        let space = ProductSpace::<f64>::new(vec![0.25]).unwrap();
        let e = UpSet::principal(CoordSet::singleton(0));
        let law = enumerate_law(&space, &[&e], 25).unwrap();
        assert_eq!(law.atoms(), &[(0, 0.75), (1, 0.25)]);
        assert_eq!(law.coordinates(), 1);
    }

    #[test]
    fn empty_family_is_point_mass() {
        let space = ProductSpace::<f64>::uniform(3, 0.5).unwrap();
        let law = enumerate_law(&space, &[], 25).unwrap();
        assert_eq!(law.atoms(), &[(0, 1.0)]);
    }

    #[test]
    fn sparse_accumulator_matches_dense() {
        let n = 16;
        let space = ProductSpace::<f64>::uniform(n, 0.3).unwrap();
        let events: Vec<UpSet> = (0..14)
            .map(|i| UpSet::principal(CoordSet::from_indices(n, [i, i + 1]).unwrap()))
            .collect();
        let refs: Vec<&UpSet> = events.iter().collect();
        let law = enumerate_law(&space, &refs, 25).unwrap();
        assert!((law.total() - 1.0).abs() < 1e-12);
        let small = enumerate_law(&space, &refs[..12], 25).unwrap();
        let p3 = law.prob(|p| p >> 3 & 1 == 1);
        let p3_small = small.prob(|p| p >> 3 & 1 == 1);
        assert!((p3 - 0.09).abs() < 1e-12 && (p3_small - 0.09).abs() < 1e-12);
    }

    #[test]
    fn sampled_law_is_close() {
        let space = ProductSpace::<f64>::uniform(2, 0.5).unwrap();
        let e = UpSet::principal(CoordSet::from_indices(2, [0, 1]).unwrap());
        let law = sample_law(&space, &[&e], 100_000, 9).unwrap();
        assert_eq!(law.method(), Method::MonteCarlo);
        assert!((law.prob(|p| p == 1) - 0.25).abs() < 0.01);
        assert!((law.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_support() {
        let space = ProductSpace::<f64>::uniform(30, 0.5).unwrap();
        let e = UpSet::principal(CoordSet((1 << 30) - 1));
        assert!(matches!(
            enumerate_law(&space, &[&e], 25),
            Err(Error::TooLargeForExact { .. })
        ));
    }
}
