//! The dependency relation `~` and checks that it is sound, i.e. that each
//! `A_i` is independent of the family of its non-neighbors.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EventFamily, UpSet};
use crate::prob::{derive_seed, joint_support, Method, ProbEngine};
use crate::scalar::Scalar;

pub const DEFAULT_RELATION_TOLERANCE: f64 = 1e-12;

/// Up to this many non-neighbors every subset is checked.
const EXHAUSTIVE_NON_NEIGHBORS: usize = 10;
const SAMPLED_SUBSETS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationMode {
    SupportOverlap,
    ExactRefined,
    UserSupplied,
}

/// Symmetric, irreflexive relation on event indices `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyRelation {
    k: usize,
    pairs: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    mode: RelationMode,
}

impl DependencyRelation {
    /// Accepts unordered pairs in either orientation; rejects loops and
    /// indices `>= k`.
    pub fn new<I>(k: usize, pairs: I, mode: RelationMode) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidRelation(format!(
                    "pair ({i}, {i}) is reflexive"
                )));
            }
            if i >= k || j >= k {
                return Err(Error::InvalidRelation(format!(
                    "pair ({i}, {j}) out of range for {k} events"
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let mut neighbors = vec![Vec::new(); k];
        for &(i, j) in &set {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(DependencyRelation {
            k,
            pairs: set,
            neighbors,
            mode,
        })
    }

    pub fn empty(k: usize, mode: RelationMode) -> Self {
        Self::new(k, [], mode).expect("empty relation is valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> RelationMode {
        self.mode
    }

    /// Unordered pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn related(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `{j : j ≠ i, j ≁ i}`.
    pub fn non_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.k)
            .filter(|&j| j != i && !self.related(i, j))
            .collect()
    }
}

/// `i ~ j` iff the supports of `A_i` and `A_j` share a coordinate.
pub fn build_support_relation<T: Scalar>(family: &EventFamily<T>) -> DependencyRelation {
    let events = family.events();
    let mut pairs = Vec::new();
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            if events[i].support().intersects(events[j].support()) {
                pairs.push((i, j));
            }
        }
    }
    DependencyRelation::new(events.len(), pairs, RelationMode::SupportOverlap)
        .expect("pairs are in range")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub relation: DependencyRelation,
    /// Pairs that could not be tested exactly and were retained.
    pub warnings: Vec<String>,
}

/// Drops every pair whose covariance is within `tol` of zero. Never adds a
/// pair.
pub fn refine_exact<T: Scalar>(
    rel: &DependencyRelation,
    family: &EventFamily<T>,
    tol: T,
    engine: &ProbEngine,
) -> Refinement {
    let space = family.space();
    let decisions: Vec<(usize, usize, std::result::Result<bool, String>)> = rel
        .pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (family.event(i), family.event(j));
            if !engine.within_cap(a.support().union(b.support())) {
                let msg = format!(
                    "pair ({i}, {j}) retained: joint support {} exceeds the exact cap {}",
                    a.support().union(b.support()).len(),
                    engine.cap()
                );
                return (i, j, Err(msg));
            }
            let independent = (|| -> Result<bool> {
                let pa = engine.exact_and(&[a], space)?;
                let pb = engine.exact_and(&[b], space)?;
                let pab = engine.exact_and(&[a, b], space)?;
                Ok((pab - pa * pb).abs() <= tol)
            })();
            (i, j, independent.map_err(|e| e.to_string()))
        })
        .collect();

    let mut kept = Vec::new();
    let mut warnings = Vec::new();
    for (i, j, d) in decisions {
        match d {
            Ok(true) => {}
            Ok(false) => kept.push((i, j)),
            Err(w) => {
                warnings.push(w);
                kept.push((i, j));
            }
        }
    }
    let relation = DependencyRelation::new(rel.k, kept, RelationMode::ExactRefined)
        .expect("subset of a valid relation");
    Refinement { relation, warnings }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub event: usize,
    pub subset: Vec<usize>,
    /// `|Pr(A_i ∩ ⋂T) − Pr(A_i)·Pr(⋂T)|`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest observed gap (minus the statistical allowance for sampled
    /// checks); 0 when nothing was checked.
    pub worst_violation: f64,
    pub worst: Option<Violation>,
    pub subsets_checked: usize,
    /// Subsets whose joint support exceeded the exact cap with no Monte
    /// Carlo fallback.
    pub subsets_skipped: usize,
    /// True when any check used Monte Carlo estimates.
    pub statistical: bool,
}

struct Check {
    gap: f64,
    excess: f64,
    statistical: bool,
}

/// For each `i` and each subset `T` of its non-neighbors (all subsets when
/// there are at most 10, otherwise 200 seeded random subsets), compares
/// `Pr(A_i ∩ ⋂T)` with `Pr(A_i)·Pr(⋂T)`.
pub fn validate_relation<T: Scalar>(
    rel: &DependencyRelation,
    family: &EventFamily<T>,
    tol: T,
    engine: &ProbEngine,
    seed: u64,
) -> ValidationReport {
    let tol_f = tol.to_f64_lossy();
    let per_event: Vec<Vec<(Vec<usize>, Option<Check>)>> = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let others = rel.non_neighbors(i);
            let subsets = candidate_subsets(&others, derive_seed(seed, i as u64));
            subsets
                .into_iter()
                .enumerate()
                .map(|(s, subset)| {
                    let check = check_subset(
                        family,
                        engine,
                        i,
                        &subset,
                        tol_f,
                        (i as u64) << 32 | s as u64,
                    );
                    (subset, check)
                })
                .collect()
        })
        .collect();

    let mut report = ValidationReport {
        passed: true,
        tolerance: tol_f,
        worst_violation: 0.0,
        worst: None,
        subsets_checked: 0,
        subsets_skipped: 0,
        statistical: false,
    };
    for (i, results) in per_event.into_iter().enumerate() {
        for (subset, check) in results {
            let Some(check) = check else {
                report.subsets_skipped += 1;
                continue;
            };
            report.subsets_checked += 1;
            report.statistical |= check.statistical;
            if check.excess > 0.0 {
                report.passed = false;
            }
            let score = if check.statistical {
                check.excess.max(0.0)
            } else {
                check.gap
            };
            if score > report.worst_violation || (report.worst.is_none() && check.excess > 0.0) {
                report.worst_violation = score;
                report.worst = Some(Violation {
                    event: i,
                    subset,
                    gap: check.gap,
                });
            }
        }
    }
    report
}

fn candidate_subsets(others: &[usize], seed: u64) -> Vec<Vec<usize>> {
    let m = others.len();
    if m == 0 {
        return Vec::new();
    }
    if m <= EXHAUSTIVE_NON_NEIGHBORS {
        return (1u32..1 << m)
            .map(|mask| {
                (0..m)
                    .filter(|b| mask >> b & 1 == 1)
                    .map(|b| others[b])
                    .collect()
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..SAMPLED_SUBSETS)
        .map(|_| {
            use rand::Rng;
            let size = rng.gen_range(1..=m);
            let mut picked: Vec<usize> = sample(&mut rng, m, size)
                .into_iter()
                .map(|b| others[b])
                .collect();
            picked.sort_unstable();
            picked
        })
        .collect()
}

fn check_subset<T: Scalar>(
    family: &EventFamily<T>,
    engine: &ProbEngine,
    i: usize,
    subset: &[usize],
    tol: f64,
    stream: u64,
) -> Option<Check> {
    let space = family.space();
    let a = family.event(i);
    let rest: Vec<&UpSet> = subset.iter().map(|&j| family.event(j)).collect();
    let mut all = rest.clone();
    all.push(a);
    if engine.within_cap(joint_support(&all)) {
        let pa = engine.exact_and(&[a], space).ok()?;
        let pt = engine.exact_and(&rest, space).ok()?;
        let pat = engine.exact_and(&all, space).ok()?;
        let gap = (pat - pa * pt).abs().to_f64_lossy();
        return Some(Check {
            gap,
            excess: gap - tol,
            statistical: false,
        });
    }
    engine.config.monte_carlo?;
    let pa = engine.prob_and(&[a], space, stream).ok()?;
    let pt = engine.prob_and(&rest, space, stream ^ 0xA5A5).ok()?;
    let pat = engine.prob_and(&all, space, stream ^ 0x5A5A).ok()?;
    let statistical = [pa.method, pt.method, pat.method].contains(&Method::MonteCarlo);
    let gap = (pat.value - pa.value * pt.value).abs().to_f64_lossy();
    let se = (pat.stderr + pa.value * pt.stderr + pt.value * pa.stderr).to_f64_lossy();
    Some(Check {
        gap,
        excess: gap - tol.max(3.0 * se),
        statistical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoordSet, ProductSpace};

    // K4 edges: 01=0 02=1 03=2 12=3 13=4 23=5
    fn k4() -> EventFamily<f64> {
        let tri = |e: [usize; 3]| UpSet::principal(CoordSet::from_indices(6, e).unwrap());
        let events = vec![
            tri([0, 1, 3]),
            tri([0, 2, 4]),
            tri([1, 2, 5]),
            tri([3, 4, 5]),
        ];
        EventFamily::new(ProductSpace::<f64>::uniform(6, 0.5).unwrap(), events).unwrap()
    }

    // K5 edges in lexicographic order; triangles 012 and 034 share vertex 0 only
    fn k5_pair() -> EventFamily<f64> {
        let edge = |a: usize, b: usize| a * (9 - a) / 2 + b - a - 1;
        let t = |a, b, c| {
            UpSet::principal(
                CoordSet::from_indices(10, [edge(a, b), edge(a, c), edge(b, c)]).unwrap(),
            )
        };
        EventFamily::new(
            ProductSpace::<f64>::uniform(10, 0.5).unwrap(),
            vec![t(0, 1, 2), t(0, 3, 4)],
        )
        .unwrap()
    }

    #[test]
    fn support_relation_examples() {
        let rel = build_support_relation(&k4());
        assert_eq!(rel.pair_count(), 6);
        assert!(rel.related(0, 1) && rel.related(1, 0));
        assert!(!rel.related(2, 2));

        let fam = k5_pair();
        let rel = build_support_relation(&fam);
        assert!(!rel.related(0, 1));
        let engine = ProbEngine::default();
        let pab = engine
            .pair_prob(fam.event(0), fam.event(1), fam.space(), 0)
            .unwrap()
            .value;
        assert_eq!(pab, 1.0 / 64.0);

        let single = EventFamily::new(
            ProductSpace::<f64>::uniform(2, 0.5).unwrap(),
            vec![UpSet::sure()],
        )
        .unwrap();
        assert_eq!(build_support_relation(&single).pair_count(), 0);
    }

    #[test]
    fn relation_rejects_loops_and_range() {
        assert!(DependencyRelation::new(3, [(1, 1)], RelationMode::UserSupplied).is_err());
        assert!(DependencyRelation::new(3, [(0, 3)], RelationMode::UserSupplied).is_err());
        let r = DependencyRelation::new(3, [(2, 0), (0, 2)], RelationMode::UserSupplied).unwrap();
        assert_eq!(r.pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(r.neighbors(0), &[2]);
        assert_eq!(r.non_neighbors(0), vec![1]);
    }

    #[test]
    fn refine_examples() {
        let engine = ProbEngine::default();
        let space = ProductSpace::<f64>::new(vec![1.0]).unwrap();
        let e = UpSet::principal(CoordSet::singleton(0));
        let fam = EventFamily::new(space, vec![e.clone(), e]).unwrap();
        let rel = build_support_relation(&fam);
        assert_eq!(rel.pair_count(), 1);
        let refined = refine_exact(&rel, &fam, 1e-12, &engine);
        assert_eq!(refined.relation.pair_count(), 0);
        assert_eq!(refined.relation.mode(), RelationMode::ExactRefined);

        let fam = k4();
        let rel = build_support_relation(&fam);
        assert_eq!(
            refine_exact(&rel, &fam, 1e-12, &engine)
                .relation
                .pair_count(),
            6
        );

        let empty = DependencyRelation::empty(4, RelationMode::SupportOverlap);
        assert_eq!(
            refine_exact(&empty, &fam, 1e-12, &engine)
                .relation
                .pair_count(),
            0
        );
    }

    #[test]
    fn refine_retains_pairs_beyond_cap_with_warning() {
        let fam = k4();
        let rel = build_support_relation(&fam);
        let engine = ProbEngine::new(crate::prob::ProbConfig {
            max_exact_support: 4,
            monte_carlo: None,
        });
        let refined = refine_exact(&rel, &fam, 1e-12, &engine);
        assert_eq!(refined.relation.pair_count(), 6);
        assert_eq!(refined.warnings.len(), 6);
    }

    #[test]
    fn validate_examples() {
        let engine = ProbEngine::default();
        let fam = k4();
        let report = validate_relation(&build_support_relation(&fam), &fam, 1e-12, &engine, 0);
        assert!(report.passed);
        assert_eq!(report.subsets_checked, 0);

        let fam = k5_pair();
        let report = validate_relation(&build_support_relation(&fam), &fam, 1e-12, &engine, 0);
        assert!(report.passed);
        assert_eq!(report.subsets_checked, 2);
        assert!(report.worst_violation <= 1e-12);
    }

    #[test]
    fn validate_flags_false_independence() {
        let engine = ProbEngine::default();
        let fam = k4();
        // (0, 1) share edge 01 but are declared non-neighbors
        let pairs = [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let rel = DependencyRelation::new(4, pairs, RelationMode::UserSupplied).unwrap();
        let report = validate_relation(&rel, &fam, 1e-12, &engine, 0);
        assert!(!report.passed);
        assert!((report.worst_violation - (1.0 / 32.0 - 1.0 / 64.0)).abs() < 1e-15);
        let worst = report.worst.unwrap();
        assert_eq!((worst.event, worst.subset), (0, vec![1]));
    }

    #[test]
    fn many_non_neighbors_are_sampled() {
        let n = 14;
        let events: Vec<UpSet> = (0..n)
            .map(|x| UpSet::principal(CoordSet::singleton(x)))
            .collect();
        let fam = EventFamily::new(ProductSpace::<f64>::uniform(n, 0.3).unwrap(), events).unwrap();
        let rel = build_support_relation(&fam);
        let report = validate_relation(&rel, &fam, 1e-12, &ProbEngine::default(), 7);
        assert!(report.passed);
        assert_eq!(report.subsets_checked, n * SAMPLED_SUBSETS);
    }
}
