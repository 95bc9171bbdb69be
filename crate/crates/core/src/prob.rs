//! Probabilities of up-sets (and intersections of up-sets) under the product
//! measure.
//!
//! The exact path is a memoized Shannon expansion over the monotone DNFs.
//! Before branching, each state is simplified:
//!
//! * principal conjuncts are merged and their coordinates pinned to 1,
//! * conjuncts with disjoint supports are split into independent factors,
//! * a single DNF whose min-sets fall into coordinate-disjoint groups is
//!   evaluated as `1 - ∏(1 - Pr(group))`.
//!
//! Otherwise the engine branches on the support coordinate that appears in
//! the most min-sets (ties go to the lowest index).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CoordSet, ProductSpace, UpSet};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_EXACT_SUPPORT: usize = 25;

/// Samples per Monte Carlo partition. Each partition uses its own ChaCha
/// stream, so the estimate does not depend on the thread count.
const MC_PARTITION: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn combine(self, other: Method) -> Method {
        if self == Method::Exact && other == Method::Exact {
            Method::Exact
        } else {
            Method::MonteCarlo
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbValue<T> {
    pub value: T,
    pub method: Method,
    /// Zero for exact values.
    pub stderr: T,
}

impl<T: Scalar> ProbValue<T> {
    pub fn exact(value: T) -> Self {
        ProbValue {
            value,
            method: Method::Exact,
            stderr: T::zero(),
        }
    }

    pub fn monte_carlo(value: T, stderr: T) -> Self {
        ProbValue {
            value,
            method: Method::MonteCarlo,
            stderr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbConfig {
    pub max_exact_support: usize,
    /// Fallback used when a support exceeds the exact cap.
    pub monte_carlo: Option<MonteCarlo>,
}

impl Default for ProbConfig {
    fn default() -> Self {
        ProbConfig {
            max_exact_support: DEFAULT_MAX_EXACT_SUPPORT,
            monte_carlo: None,
        }
    }
}

/// Chooses between the exact expansion and Monte Carlo according to a
/// [`ProbConfig`]. Stateless; safe to share across threads.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProbEngine {
    pub config: ProbConfig,
}

impl ProbEngine {
    pub fn new(config: ProbConfig) -> Self {
        ProbEngine { config }
    }

    pub fn cap(&self) -> usize {
        self.config.max_exact_support
    }

    pub fn within_cap(&self, support: CoordSet) -> bool {
        support.len() <= self.config.max_exact_support
    }

    pub fn exact_prob<T: Scalar>(
        &self,
        a: &UpSet,
        space: &ProductSpace<T>,
    ) -> Result<ProbValue<T>> {
        self.exact_and(&[a], space).map(ProbValue::exact)
    }

    /// Exact `Pr(⋂ events)`; the empty intersection is the sure event.
    pub fn exact_and<T: Scalar>(&self, events: &[&UpSet], space: &ProductSpace<T>) -> Result<T> {
        let support = joint_support(events);
        if !self.within_cap(support) {
            return Err(Error::TooLargeForExact {
                support: support.len(),
                cap: self.cap(),
            });
        }
        let mut solver = Shannon {
            space,
            memo: HashMap::new(),
        };
        Ok(solver.solve(events.iter().map(|e| (*e).clone()).collect()))
    }

    /// `Pr(⋂ events)`, exact when within the cap, otherwise Monte Carlo if
    /// configured. `stream` separates the random streams of distinct
    /// ingredients that share one configured seed.
    pub fn prob_and<T: Scalar>(
        &self,
        events: &[&UpSet],
        space: &ProductSpace<T>,
        stream: u64,
    ) -> Result<ProbValue<T>> {
        let support = joint_support(events);
        if self.within_cap(support) {
            return self.exact_and(events, space).map(ProbValue::exact);
        }
        match self.config.monte_carlo {
            Some(mc) => Ok(mc_prob_and(
                events,
                space,
                mc.samples,
                derive_seed(mc.seed, stream),
            )),
            None => Err(Error::TooLargeForExact {
                support: support.len(),
                cap: self.cap(),
            }),
        }
    }

    pub fn prob<T: Scalar>(
        &self,
        a: &UpSet,
        space: &ProductSpace<T>,
        stream: u64,
    ) -> Result<ProbValue<T>> {
        self.prob_and(&[a], space, stream)
    }

    /// `Pr(A ∩ B)`. Disjoint supports factorize exactly.
    pub fn pair_prob<T: Scalar>(
        &self,
        a: &UpSet,
        b: &UpSet,
        space: &ProductSpace<T>,
        stream: u64,
    ) -> Result<ProbValue<T>> {
        if !a.support().intersects(b.support()) {
            let pa = self.prob(a, space, stream)?;
            let pb = self.prob(b, space, stream ^ 0x5bd1_e995)?;
            return Ok(product_of(pa, pb));
        }
        self.prob_and(&[a, b], space, stream)
    }
}

/// Exact probability with the default support cap.
pub fn exact_prob<T: Scalar>(a: &UpSet, space: &ProductSpace<T>) -> Result<ProbValue<T>> {
    ProbEngine::default().exact_prob(a, space)
}

fn product_of<T: Scalar>(a: ProbValue<T>, b: ProbValue<T>) -> ProbValue<T> {
    match a.method.combine(b.method) {
        Method::Exact => ProbValue::exact(a.value * b.value),
        Method::MonteCarlo => {
            // delta method for a product of independent estimates
            let var = (b.value * a.stderr).powi(2) + (a.value * b.stderr).powi(2);
            ProbValue::monte_carlo(a.value * b.value, var.sqrt())
        }
    }
}

pub fn joint_support(events: &[&UpSet]) -> CoordSet {
    events
        .iter()
        .fold(CoordSet::EMPTY, |acc, e| acc.union(e.support()))
}

/// Mixes a base seed with a stream id (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frequency estimate of `Pr(A)` from `samples` independent draws.
pub fn mc_prob<T: Scalar>(
    a: &UpSet,
    space: &ProductSpace<T>,
    samples: u64,
    seed: u64,
) -> ProbValue<T> {
    mc_prob_and(&[a], space, samples, seed)
}

pub fn mc_prob_and<T: Scalar>(
    events: &[&UpSet],
    space: &ProductSpace<T>,
    samples: u64,
    seed: u64,
) -> ProbValue<T> {
    assert!(samples >= 1, "Monte Carlo needs at least one sample");
    let coords: Vec<(usize, f64)> = joint_support(events)
        .iter()
        .map(|x| (x, space.p(x).to_f64_lossy()))
        .collect();
    let hits: u64 = sample_partitions(samples, seed, |rng| {
        let omega = draw(rng, &coords);
        events.iter().all(|e| e.contains(omega)) as u64
    });
    let n = samples as f64;
    let v = hits as f64 / n;
    ProbValue::monte_carlo(T::of(v), T::of((v * (1.0 - v) / n).sqrt()))
}

#[inline]
pub(crate) fn draw(rng: &mut ChaCha8Rng, coords: &[(usize, f64)]) -> CoordSet {
    let mut bits = 0u128;
    for &(x, p) in coords {
        if rng.gen::<f64>() < p {
            bits |= 1u128 << x;
        }
    }
    CoordSet(bits)
}

/// Runs `f` once per sample across fixed-size partitions (partition `i`
/// uses ChaCha stream `i`) and sums the results in partition order.
pub(crate) fn sample_partitions<F>(samples: u64, seed: u64, f: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> u64 + Sync,
{
    let parts = samples.div_ceil(MC_PARTITION);
    (0..parts)
        .into_par_iter()
        .map(|part| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(part);
            let len = MC_PARTITION.min(samples - part * MC_PARTITION);
            (0..len).map(|_| f(&mut rng)).sum::<u64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

type MemoKey = Vec<Vec<CoordSet>>;

struct Shannon<'s, T> {
    space: &'s ProductSpace<T>,
    memo: HashMap<MemoKey, T>,
}

impl<T: Scalar> Shannon<'_, T> {
    /// Probability that every event in `conj` occurs.
    fn solve(&mut self, conj: Vec<UpSet>) -> T {
        let mut pinned = CoordSet::EMPTY;
        let mut rest = Vec::with_capacity(conj.len());
        for e in conj {
            if e.is_impossible() {
                return T::zero();
            }
            if e.is_sure() {
                continue;
            }
            if e.is_principal() {
                pinned = pinned.union(e.minsets()[0]);
            } else {
                rest.push(e);
            }
        }
        let mut factor = T::one();
        if !pinned.is_empty() {
            for x in pinned.iter() {
                factor *= self.space.p(x);
            }
            if factor == T::zero() {
                return factor;
            }
            for e in rest.iter_mut() {
                if e.support().intersects(pinned) {
                    let mut r = e.clone();
                    for x in e.support().intersection(pinned).iter() {
                        r = r.restrict(x, true);
                    }
                    *e = r;
                }
            }
            if rest.iter().any(UpSet::is_impossible) {
                return T::zero();
            }
            rest.retain(|e| !e.is_sure());
            if rest.iter().any(UpSet::is_principal) {
                return factor * self.solve(rest);
            }
        }
        if rest.is_empty() {
            return factor;
        }
        rest.sort_by(|a, b| a.minsets().cmp(b.minsets()));
        rest.dedup();
        factor * self.solve_normalized(rest)
    }

    fn solve_normalized(&mut self, rest: Vec<UpSet>) -> T {
        let key: MemoKey = rest.iter().map(|e| e.minsets().to_vec()).collect();
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = self.expand(rest);
        self.memo.insert(key, v);
        v
    }

    fn expand(&mut self, rest: Vec<UpSet>) -> T {
        let factors = components(rest.iter().map(|e| e.support()).collect());
        if factors.len() > 1 {
            let mut prod = T::one();
            for group in factors {
                prod *= self.solve(group.into_iter().map(|i| rest[i].clone()).collect());
                if prod == T::zero() {
                    break;
                }
            }
            return prod;
        }
        if rest.len() == 1 {
            let minsets = rest[0].minsets();
            let groups = components(minsets.to_vec());
            if groups.len() > 1 {
                let mut none = T::one();
                for group in groups {
                    let part = UpSet::from_masks(group.into_iter().map(|i| minsets[i]));
                    none *= T::one() - self.solve(vec![part]);
                }
                return T::one() - none;
            }
        }
        let x = branch_coordinate(&rest);
        let p = self.space.p(x);
        let mut total = T::zero();
        if p > T::zero() {
            total += p * self.solve(rest.iter().map(|e| e.restrict(x, true)).collect());
        }
        if p < T::one() {
            total +=
                (T::one() - p) * self.solve(rest.iter().map(|e| e.restrict(x, false)).collect());
        }
        total
    }
}

/// Coordinate appearing in the most min-sets; ties go to the lowest index.
fn branch_coordinate(conj: &[UpSet]) -> usize {
    let mut counts = [0u32; 128];
    for e in conj {
        for m in e.minsets() {
            for x in m.iter() {
                counts[x] += 1;
            }
        }
    }
    let mut best = 0;
    for x in 1..counts.len() {
        if counts[x] > counts[best] {
            best = x;
        }
    }
    best
}

/// Groups item indices into classes connected through shared coordinates.
pub(crate) fn components(supports: Vec<CoordSet>) -> Vec<Vec<usize>> {
    let mut groups: Vec<(CoordSet, Vec<usize>)> = Vec::new();
    for (i, s) in supports.into_iter().enumerate() {
        let mut merged = (s, vec![i]);
        let mut j = 0;
        while j < groups.len() {
            if groups[j].0.intersects(merged.0) {
                let (gs, gi) = groups.swap_remove(j);
                merged.0 = merged.0.union(gs);
                merged.1.extend(gi);
            } else {
                j += 1;
            }
        }
        groups.push(merged);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_iter()
        .map(|(_, mut idx)| {
            idx.sort_unstable();
            idx
        })
        .collect();
    out.sort();
    out
}
