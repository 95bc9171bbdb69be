//! Ground truth by exhaustive enumeration.
//!
//! Everything here is computed from the joint indicator law of the family
//! ([`IndicatorLaw`]), which is produced by walking every assignment of the
//! joint support. None of it goes through the Shannon expansion in
//! [`crate::prob`], so the two paths check each other.

use serde::Serialize;

use crate::dependency::DependencyRelation;
use crate::error::Result;
use crate::model::{CoordSet, EventFamily, ProductSpace, UpSet};
use crate::outcomes::{enumerate_law, IndicatorLaw};
use crate::prob::Method;
use crate::scalar::Scalar;

pub const DEFAULT_INEQUALITY_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_S_GRID: [f64; 6] = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0];

/// Law of `X = Σ c_i I_i` as sorted `(value, probability)` atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution<T> {
    atoms: Vec<(T, T)>,
    coordinates: usize,
    method: Method,
}

impl<T: Scalar> ExactDistribution<T> {
    /// Collapses an indicator law through the weights. Atom values closer
    /// than `1e-12` (relative) are merged.
    pub fn from_law(law: &IndicatorLaw<T>, weights: &[T]) -> Self {
        let mut raw: Vec<(T, T)> = law
            .atoms()
            .iter()
            .map(|&(pat, pr)| (weighted_sum(weights, pat), pr))
            .collect();
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom values"));
        let mut atoms: Vec<(T, T)> = Vec::with_capacity(raw.len());
        for (v, pr) in raw {
            match atoms.last_mut() {
                Some((last, mass)) if (v - *last).abs() <= T::of(1e-12) * T::one().max(v.abs()) => {
                    *mass += pr
                }
                _ => atoms.push((v, pr)),
            }
        }
        ExactDistribution {
            atoms,
            coordinates: law.coordinates(),
            method: law.method(),
        }
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn coordinates(&self) -> usize {
        self.coordinates
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn total(&self) -> T {
        self.atoms.iter().map(|&(_, p)| p).sum()
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn prob_zero(&self) -> T {
        exact_lower_tail(self, T::zero())
    }
}

#[inline]
fn weighted_sum<T: Scalar>(weights: &[T], pat: u64) -> T {
    let mut x = T::zero();
    for (i, &c) in weights.iter().enumerate() {
        if pat >> i & 1 == 1 {
            x += c;
        }
    }
    x
}

pub fn enumerate_distribution<T: Scalar>(
    family: &EventFamily<T>,
    max_support: usize,
) -> Result<ExactDistribution<T>> {
    Ok(Oracle::new(family, max_support)?.distribution())
}

/// `Pr(X ≤ threshold)`, with a `1e-12` allowance on the threshold.
pub fn exact_lower_tail<T: Scalar>(dist: &ExactDistribution<T>, threshold: T) -> T {
    let limit = threshold + T::of(1e-12);
    dist.atoms
        .iter()
        .filter(|&&(v, _)| v <= limit)
        .map(|&(_, p)| p)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AimEntry {
    /// Position in the ordering (0-based).
    pub position: usize,
    pub event: usize,
    /// `r = Pr(A_i | no earlier event)`; `None` when the conditioning event
    /// has probability 0 and the step is skipped.
    pub r: Option<f64>,
    /// `Pr(A_i) − Σ_{earlier j ~ i} Pr(A_i ∩ A_j)`.
    pub rhs: f64,
    pub slack: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AimReport {
    pub ordering: Vec<usize>,
    pub passed: bool,
    pub min_slack: f64,
    pub entries: Vec<AimEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aim2Entry {
    pub event: usize,
    pub s: f64,
    /// `E(J_i e^{−sX})`.
    pub lhs: f64,
    /// `E(J_i e^{−sY_i}) · E(e^{−sX})`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aim2Report {
    pub passed: bool,
    pub min_slack: f64,
    pub entries: Vec<Aim2Entry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub passed: bool,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub harris_failures: usize,
    pub closure_failures: usize,
    pub identity_failures: usize,
    /// `min Pr(A∩B) − Pr(A)Pr(B)` over checked pairs.
    pub min_harris_slack: f64,
    /// `max |Pr(A∩(B∩C)) + Pr(A∩(B∪C)) − Pr(A∩B) − Pr(A∩C)|`.
    pub max_identity_gap: f64,
}

/// Enumerated indicator law of a whole family.
pub struct Oracle<'f, T> {
    family: &'f EventFamily<T>,
    law: IndicatorLaw<T>,
}

impl<'f, T: Scalar> Oracle<'f, T> {
    pub fn new(family: &'f EventFamily<T>, max_support: usize) -> Result<Self> {
        let events: Vec<&UpSet> = family.events().iter().collect();
        let law = enumerate_law(family.space(), &events, max_support)?;
        Ok(Oracle { family, law })
    }

    /// Wraps an existing law (for example an empirical one).
    pub fn from_law(family: &'f EventFamily<T>, law: IndicatorLaw<T>) -> Self {
        Oracle { family, law }
    }

    pub fn law(&self) -> &IndicatorLaw<T> {
        &self.law
    }

    pub fn distribution(&self) -> ExactDistribution<T> {
        ExactDistribution::from_law(&self.law, self.family.weights())
    }

    fn p(&self, i: usize) -> T {
        self.law.prob(|pat| pat >> i & 1 == 1)
    }

    fn p2(&self, i: usize, j: usize) -> T {
        let both = 1u64 << i | 1u64 << j;
        self.law.prob(|pat| pat & both == both)
    }

    /// For each position `q` with `i = ordering[q]`, checks
    /// `Pr(A_i | ⋂_{earlier} A_j^c) ≥ Pr(A_i) − Σ_{earlier j ~ i} Pr(A_i ∩ A_j)`.
    pub fn check_aim(&self, rel: &DependencyRelation, ordering: &[usize], tol: T) -> AimReport {
        let mut prefix = 0u64;
        let mut entries = Vec::with_capacity(ordering.len());
        let mut passed = true;
        let mut min_slack = f64::INFINITY;
        for (position, &i) in ordering.iter().enumerate() {
            let bit = 1u64 << i;
            let den = self.law.prob(|pat| pat & prefix == 0);
            let num = self.law.prob(|pat| pat & prefix == 0 && pat & bit != 0);
            let mut rhs = self.p(i);
            for &j in &ordering[..position] {
                if rel.related(i, j) {
                    rhs -= self.p2(i, j);
                }
            }
            let (r, slack) = if den > T::zero() {
                let r = num / den;
                let slack = r - rhs;
                if slack < -tol {
                    passed = false;
                }
                min_slack = min_slack.min(slack.to_f64_lossy());
                (Some(r.to_f64_lossy()), Some(slack.to_f64_lossy()))
            } else {
                (None, None)
            };
            entries.push(AimEntry {
                position,
                event: i,
                r,
                rhs: rhs.to_f64_lossy(),
                slack,
            });
            prefix |= bit;
        }
        AimReport {
            ordering: ordering.to_vec(),
            passed,
            min_slack,
            entries,
        }
    }

    /// Checks `E(J_i e^{−sX}) ≥ E(J_i e^{−sY_i}) · E(e^{−sX})` for every `i`
    /// and `s`, where `Y_i = J_i + Σ_{j~i} J_j` and `J_ℓ = c_ℓ I_ℓ`.
    pub fn check_aim2(&self, rel: &DependencyRelation, s_grid: &[f64], tol: T) -> Aim2Report {
        let weights = self.family.weights();
        let mut entries = Vec::new();
        let mut passed = true;
        let mut min_slack = f64::INFINITY;
        for i in 0..self.family.len() {
            let bit = 1u64 << i;
            let closed = rel.neighbors(i).iter().fold(bit, |acc, &j| acc | 1u64 << j);
            let c = weights[i];
            for &s in s_grid {
                let s_t = T::of(s);
                let e_x = self
                    .law
                    .expect(|pat| (-s_t * weighted_sum(weights, pat)).exp());
                let lhs = self.law.expect(|pat| {
                    if pat & bit == 0 {
                        T::zero()
                    } else {
                        c * (-s_t * weighted_sum(weights, pat)).exp()
                    }
                });
                let e_y = self.law.expect(|pat| {
                    if pat & bit == 0 {
                        T::zero()
                    } else {
                        c * (-s_t * weighted_sum(weights, pat & closed)).exp()
                    }
                });
                let rhs = e_y * e_x;
                let slack = lhs - rhs;
                if slack < -tol {
                    passed = false;
                }
                min_slack = min_slack.min(slack.to_f64_lossy());
                entries.push(Aim2Entry {
                    event: i,
                    s,
                    lhs: lhs.to_f64_lossy(),
                    rhs: rhs.to_f64_lossy(),
                    slack: slack.to_f64_lossy(),
                });
            }
        }
        Aim2Report {
            passed,
            min_slack,
            entries,
        }
    }
}

pub fn check_aim<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    ordering: &[usize],
    max_support: usize,
    tol: T,
) -> Result<AimReport> {
    Ok(Oracle::new(family, max_support)?.check_aim(rel, ordering, tol))
}

pub fn check_aim2<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    s_grid: &[f64],
    max_support: usize,
    tol: T,
) -> Result<Aim2Report> {
    Ok(Oracle::new(family, max_support)?.check_aim2(rel, s_grid, tol))
}

/// Harris positivity and lattice closure on `pairs`; the identity
/// `Pr(A∩(B∩C)) + Pr(A∩(B∪C)) = Pr(A∩B) + Pr(A∩C)` on `triples`, plus, when
/// `A` is independent of `B` and of `C`, independence of `A` from `B∩C`
/// and `B∪C`.
pub fn check_axioms<T: Scalar>(
    space: &ProductSpace<T>,
    pairs: &[(UpSet, UpSet)],
    triples: &[(UpSet, UpSet, UpSet)],
    max_support: usize,
    tol: T,
) -> Result<AxiomReport> {
    let mut report = AxiomReport {
        passed: true,
        min_harris_slack: f64::INFINITY,
        ..AxiomReport::default()
    };
    for (a, b) in pairs {
        let both = a.intersect(b);
        let either = a.unite(b);
        let law = enumerate_law(space, &[a, b, &both, &either], max_support)?;
        let pr = |bit: u64| law.prob(|pat| pat & bit != 0);
        let (pa, pb, pab, paub) = (pr(1), pr(2), pr(4), pr(8));
        let slack = pab - pa * pb;
        if slack < -tol {
            report.harris_failures += 1;
        }
        report.min_harris_slack = report.min_harris_slack.min(slack.to_f64_lossy());
        let closed = is_canonical(&both)
            && is_canonical(&either)
            && semantics_match(a, b, &both, &either)
            && (pab - law.prob(|pat| pat & 3 == 3)).abs() <= tol
            && (paub - law.prob(|pat| pat & 3 != 0)).abs() <= tol;
        if !closed {
            report.closure_failures += 1;
        }
        report.pairs_checked += 1;
    }
    for (a, b, c) in triples {
        let bc = b.intersect(c);
        let b_or_c = b.unite(c);
        let a_bc = a.intersect(&bc);
        let a_b_or_c = a.intersect(&b_or_c);
        let ab = a.intersect(b);
        let ac = a.intersect(c);
        let events = [a, b, c, &bc, &b_or_c, &a_bc, &a_b_or_c, &ab, &ac];
        let law = enumerate_law(space, &events, max_support)?;
        let pr = |idx: usize| law.prob(|pat| pat >> idx & 1 == 1);
        let (pa, pb, pc, pbc, pboc) = (pr(0), pr(1), pr(2), pr(3), pr(4));
        let lhs = pr(5) + pr(6);
        let rhs = pr(7) + pr(8);
        let gap = (lhs - rhs).abs();
        report.max_identity_gap = report.max_identity_gap.max(gap.to_f64_lossy());
        let mut ok = gap <= tol;
        let indep_b = (pr(7) - pa * pb).abs() <= tol;
        let indep_c = (pr(8) - pa * pc).abs() <= tol;
        if indep_b && indep_c {
            let slack = T::of(2.0) * tol;
            ok &= (pr(5) - pa * pbc).abs() <= slack && (pr(6) - pa * pboc).abs() <= slack;
        }
        if !ok {
            report.identity_failures += 1;
        }
        report.triples_checked += 1;
    }
    if report.pairs_checked == 0 {
        report.min_harris_slack = 0.0;
    }
    report.passed = report.harris_failures == 0
        && report.closure_failures == 0
        && report.identity_failures == 0;
    Ok(report)
}

fn is_canonical(e: &UpSet) -> bool {
    let m = e.minsets();
    m.windows(2)
        .all(|w| (w[0].len(), w[0].bits()) < (w[1].len(), w[1].bits()))
        && m.iter().enumerate().all(|(i, x)| {
            m.iter()
                .enumerate()
                .all(|(j, y)| i == j || !x.is_subset_of(*y))
        })
}

/// Boolean check over every assignment of the joint support.
fn semantics_match(a: &UpSet, b: &UpSet, both: &UpSet, either: &UpSet) -> bool {
    let coords: Vec<usize> = a.support().union(b.support()).iter().collect();
    (0u64..1 << coords.len()).all(|w| {
        let omega = coords
            .iter()
            .enumerate()
            .filter(|&(bit, _)| w >> bit & 1 == 1)
            .fold(CoordSet::EMPTY, |acc, (_, &x)| {
                acc.union(CoordSet::singleton(x))
            });
        let (ia, ib) = (a.contains(omega), b.contains(omega));
        both.contains(omega) == (ia && ib) && either.contains(omega) == (ia || ib)
    })
}
