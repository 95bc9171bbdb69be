//! Lower-tail bounds for `X = Σ c_i I_i` over up-sets `A_i`.
//!
//! With `μ = E X`, `Δ = Σ_i Σ_{j~i} Pr(A_i ∩ A_j)` (ordered pairs, `i ≠ j`)
//! and `Δ̄ = Σ c_i² Pr(A_i) + Σ_i Σ_{j~i} c_i c_j Pr(A_i ∩ A_j)`:
//!
//! | id            | bound                                                   |
//! |---------------|---------------------------------------------------------|
//! | `i1`          | `Pr(X=0) ≤ exp(−μ + Δ/2)`                               |
//! | `i2-phi`      | `Pr(X≤μ−t) ≤ exp(−φ(−t/μ) μ² / (μ+Δ))`                  |
//! | `i2-quadratic`| `Pr(X≤μ−t) ≤ exp(−t² / (2(μ+Δ)))`                       |
//! | `i1a`         | `Pr(X=0) ≤ ∏(1−Pr(A_i)) · exp(Δ / (2(1−ε)))`            |
//! | `i2a`         | `Pr(X=0) ≤ exp(−Σ_i E(J_i / (J_i + Σ_{j~i} J_j)))`       |
//! | `i2e-*`       | the two `i2` forms with `Δ̄` in place of `μ+Δ`           |
//! | `lower-bound` | `Pr(X=0) ≥ ∏(1−Pr(A_i))`                                |
//!
//! where `φ(x) = (1+x)ln(1+x) − x`, `φ(−1) = 1`, `ε = max Pr(A_i)` and
//! `J_ℓ = c_ℓ I_ℓ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dependency::DependencyRelation;
use crate::error::{Error, Result};
use crate::model::{EventFamily, UpSet};
use crate::outcomes::{enumerate_law, sample_law};
use crate::prob::{derive_seed, joint_support, Method, ProbEngine, ProbValue};
use crate::scalar::Scalar;

/// `t = μ·f` for each fraction `f`.
pub const DEFAULT_T_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// `φ(x) = (1+x)·ln(1+x) − x` on `[−1, ∞)`, with `φ(−1) = 1`.
pub fn phi<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x < -T::one() {
        return Err(Error::Domain(format!(
            "phi is defined on [-1, inf), got {x}"
        )));
    }
    if x == -T::one() {
        return Ok(T::one());
    }
    if x.abs() < T::of(1e-8) {
        return Ok(x * x / T::of(2.0) - x * x * x / T::of(6.0));
    }
    Ok((T::one() + x) * x.ln_1p() - x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary<T> {
    /// `μ = Σ c_i Pr(A_i)`.
    pub mu: T,
    /// `Δ`, each dependent unordered pair counted twice.
    pub delta: T,
    /// `ε = max_i Pr(A_i)` (unweighted).
    pub eps: T,
    pub delta_bar: T,
    /// `(Pr(A_i), c_i)`.
    pub per_event: Vec<(T, T)>,
    pub method: Method,
    /// Largest standard error of any Monte Carlo ingredient.
    pub max_stderr: T,
}

impl<T: Scalar> Summary<T> {
    pub fn is_unweighted(&self) -> bool {
        self.per_event.iter().all(|&(_, c)| c == T::one())
    }

    fn require_unweighted(&self, bound: &'static str) -> Result<()> {
        if self.is_unweighted() {
            Ok(())
        } else {
            Err(Error::WeightedFamily { bound })
        }
    }
}

/// Computes `μ, Δ, ε, Δ̄` from the probability engine.
pub fn summarize<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    engine: &ProbEngine,
) -> Result<Summary<T>> {
    if rel.k() != family.len() {
        return Err(Error::InvalidRelation(format!(
            "relation is over {} events, family has {}",
            rel.k(),
            family.len()
        )));
    }
    let space = family.space();
    let singles: Vec<ProbValue<T>> = (0..family.len())
        .into_par_iter()
        .map(|i| engine.prob(family.event(i), space, i as u64))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = rel.pairs().collect();
    let joint: Vec<ProbValue<T>> = pairs
        .par_iter()
        .enumerate()
        .map(|(s, &(i, j))| {
            engine.pair_prob(
                family.event(i),
                family.event(j),
                space,
                (1 << 40) + s as u64,
            )
        })
        .collect::<Result<_>>()?;

    let mut method = Method::Exact;
    let mut max_stderr = T::zero();
    let mut mu = T::zero();
    let mut eps = T::zero();
    let mut square_part = T::zero();
    let mut per_event = Vec::with_capacity(family.len());
    for (i, pv) in singles.iter().enumerate() {
        let c = family.weight(i);
        mu += c * pv.value;
        square_part += c * c * pv.value;
        eps = eps.max(pv.value);
        per_event.push((pv.value, c));
        method = method.combine(pv.method);
        max_stderr = max_stderr.max(pv.stderr);
    }
    let mut delta = T::zero();
    let mut cross = T::zero();
    for (&(i, j), pv) in pairs.iter().zip(&joint) {
        let two = T::of(2.0);
        delta += two * pv.value;
        cross += two * family.weight(i) * family.weight(j) * pv.value;
        method = method.combine(pv.method);
        max_stderr = max_stderr.max(pv.stderr);
    }
    Ok(Summary {
        mu,
        delta,
        eps,
        delta_bar: square_part + cross,
        per_event,
        method,
        max_stderr,
    })
}

/// `exp(−μ + Δ/2)`, unclamped.
pub fn bound_i1<T: Scalar>(s: &Summary<T>) -> Result<T> {
    s.require_unweighted("i1")?;
    Ok((-s.mu + s.delta / T::of(2.0)).exp())
}

/// `(phi_form, quadratic_form)` of the lower-tail bound for `t ∈ [0, μ]`.
pub fn bound_i2<T: Scalar>(s: &Summary<T>, t: T) -> Result<(T, T)> {
    s.require_unweighted("i2")?;
    tail_forms(s.mu, s.mu + s.delta, t)
}

/// The weighted forms with `Δ̄` as the variance proxy.
pub fn bound_i2e<T: Scalar>(s: &Summary<T>, t: T) -> Result<(T, T)> {
    tail_forms(s.mu, s.delta_bar, t)
}

fn tail_forms<T: Scalar>(mu: T, denom: T, t: T) -> Result<(T, T)> {
    if t.is_nan() || t < T::zero() || t > mu {
        return Err(Error::Domain(format!("t = {t} outside [0, mu = {mu}]")));
    }
    if mu == T::zero() || t == T::zero() {
        return Ok((T::one(), T::one()));
    }
    let phi_form = (-phi(-t / mu)? * mu * mu / denom).exp();
    let quadratic_form = (-t * t / (T::of(2.0) * denom)).exp();
    Ok((phi_form, quadratic_form))
}

/// `∏(1 − Pr(A_i)) · exp(Δ / (2(1 − ε)))`; 0 when some `Pr(A_i) = 1`.
pub fn bound_i1a<T: Scalar>(s: &Summary<T>) -> Result<T> {
    s.require_unweighted("i1a")?;
    if s.eps >= T::one() {
        return Ok(T::zero());
    }
    let product = lower_bound(s);
    Ok(product * (s.delta / (T::of(2.0) * (T::one() - s.eps))).exp())
}

/// `∏(1 − Pr(A_i))`.
pub fn lower_bound<T: Scalar>(s: &Summary<T>) -> T {
    s.per_event.iter().map(|&(p, _)| T::one() - p).product()
}

/// `exp(−Σ_i E(J_i / Y_i))` with `Y_i = J_i + Σ_{j~i} J_j` and `0/0 = 0`.
///
/// Each expectation is taken over the joint support of `A_i` and its
/// neighbors: enumerated when within the exact cap, otherwise sampled.
pub fn bound_i2a<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    engine: &ProbEngine,
) -> Result<ProbValue<T>> {
    let terms: Vec<ProbValue<T>> = (0..family.len())
        .into_par_iter()
        .map(|i| share_term(family, rel, engine, i))
        .collect::<Result<_>>()?;
    let sum: T = terms.iter().map(|t| t.value).sum();
    let value = (-sum).exp();
    if terms.iter().all(|t| t.method == Method::Exact) {
        Ok(ProbValue::exact(value))
    } else {
        let var: T = terms.iter().map(|t| t.stderr * t.stderr).sum();
        Ok(ProbValue::monte_carlo(value, value * var.sqrt()))
    }
}

/// `E(J_i / (J_i + Σ_{j~i} J_j))`.
fn share_term<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    engine: &ProbEngine,
    i: usize,
) -> Result<ProbValue<T>> {
    let mut members = vec![i];
    members.extend_from_slice(rel.neighbors(i));
    let events: Vec<&UpSet> = members.iter().map(|&j| family.event(j)).collect();
    let weights: Vec<T> = members.iter().map(|&j| family.weight(j)).collect();
    let ratio = |pat: u64| {
        if pat & 1 == 0 {
            return T::zero();
        }
        let total: T = (0..members.len())
            .filter(|b| pat >> b & 1 == 1)
            .map(|b| weights[b])
            .sum();
        weights[0] / total
    };
    let space = family.space();
    let support = joint_support(&events);
    if engine.within_cap(support) {
        let law = enumerate_law(space, &events, engine.cap())?;
        return Ok(ProbValue::exact(law.expect(ratio)));
    }
    let Some(mc) = engine.config.monte_carlo else {
        return Err(Error::TooLargeForExact {
            support: support.len(),
            cap: engine.cap(),
        });
    };
    let law = sample_law(
        space,
        &events,
        mc.samples,
        derive_seed(mc.seed, (2 << 40) + i as u64),
    )?;
    let mean = law.expect(ratio);
    let second = law.expect(|p| ratio(p) * ratio(p));
    let var = (second - mean * mean).max(T::zero()) / T::of(mc.samples as f64);
    Ok(ProbValue::monte_carlo(mean, var.sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundValue<T> {
    pub raw: T,
    pub clamped: T,
}

impl<T: Scalar> BoundValue<T> {
    pub fn new(raw: T) -> Self {
        BoundValue {
            raw,
            clamped: raw.max(T::zero()).min(T::one()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow<T> {
    pub t: T,
    /// `μ − t`.
    pub threshold: T,
    pub i2_phi: Option<BoundValue<T>>,
    pub i2_quadratic: Option<BoundValue<T>>,
    pub i2e_phi: BoundValue<T>,
    pub i2e_quadratic: BoundValue<T>,
}

/// Every bound for one family on a grid of `t` values.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<T> {
    pub summary: Summary<T>,
    pub rows: Vec<TailRow<T>>,
    /// `None` for weighted families.
    pub i1: Option<BoundValue<T>>,
    pub i1a: Option<BoundValue<T>>,
    pub i2a: BoundValue<T>,
    pub i2a_method: Method,
    pub lower: BoundValue<T>,
}

impl<T: Scalar> BoundReport<T> {
    pub fn t_grid(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Evaluates all bounds at `t = μ·f` for each `f` in `fractions` (each in
/// `[0, 1]`).
pub fn bound_report<T: Scalar>(
    family: &EventFamily<T>,
    rel: &DependencyRelation,
    engine: &ProbEngine,
    fractions: &[f64],
) -> Result<BoundReport<T>> {
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Domain(format!("t-grid fraction {f} outside [0, 1]")));
    }
    let summary = summarize(family, rel, engine)?;
    let unweighted = summary.is_unweighted();
    let mut rows = Vec::with_capacity(fractions.len());
    for &f in fractions {
        // t = μ exactly at f = 1 so that the threshold is 0
        let t = if f == 1.0 {
            summary.mu
        } else {
            summary.mu * T::of(f)
        };
        let (e_phi, e_quad) = bound_i2e(&summary, t)?;
        let (i2_phi, i2_quadratic) = if unweighted {
            let (a, b) = bound_i2(&summary, t)?;
            (Some(BoundValue::new(a)), Some(BoundValue::new(b)))
        } else {
            (None, None)
        };
        rows.push(TailRow {
            t,
            threshold: summary.mu - t,
            i2_phi,
            i2_quadratic,
            i2e_phi: BoundValue::new(e_phi),
            i2e_quadratic: BoundValue::new(e_quad),
        });
    }
    let i2a = bound_i2a(family, rel, engine)?;
    Ok(BoundReport {
        i1: unweighted
            .then(|| bound_i1(&summary).map(BoundValue::new))
            .transpose()?,
        i1a: unweighted
            .then(|| bound_i1a(&summary).map(BoundValue::new))
            .transpose()?,
        i2a: BoundValue::new(i2a.value),
        i2a_method: i2a.method,
        lower: BoundValue::new(lower_bound(&summary)),
        summary,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependency::{build_support_relation, RelationMode};
    use crate::model::{CoordSet, ProductSpace};

    fn summary(mu: f64, delta: f64, ps: &[f64]) -> Summary<f64> {
        Summary {
            mu,
            delta,
            eps: ps.iter().cloned().fold(0.0, f64::max),
            delta_bar: mu + delta,
            per_event: ps.iter().map(|&p| (p, 1.0)).collect(),
            method: Method::Exact,
            max_stderr: 0.0,
        }
    }

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

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert_eq!(phi(-1.0).unwrap(), 1.0);
        let expected = 0.5 - 0.5 * std::f64::consts::LN_2;
        assert!((phi(-0.5).unwrap() - expected).abs() < 1e-15);
        assert!((phi(-0.5f64).unwrap() - 0.1534264).abs() < 1e-7);
        assert!(phi(-1.000001).is_err());
        assert!(phi(f64::NAN).is_err());
        // series branch is continuous with the closed form
        let x = 1.5e-8;
        let closed = (1.0f64 + x) * x.ln_1p() - x;
        assert!((phi(x).unwrap() - closed).abs() < 1e-22);
        assert!(phi(2.0).unwrap() > 0.0);
    }

    #[test]
    fn k4_summary() {
        let fam = k4();
        let rel = build_support_relation(&fam);
        let s = summarize(&fam, &rel, &ProbEngine::default()).unwrap();
        assert!((s.mu - 0.5).abs() < 1e-12);
        assert!((s.delta - 0.375).abs() < 1e-12);
        assert!((s.eps - 0.125).abs() < 1e-12);
        assert!((s.delta_bar - (s.mu + s.delta)).abs() < 1e-12);
        assert_eq!(s.method, Method::Exact);
    }

    #[test]
    fn single_event_summary() {
        let space = ProductSpace::<f64>::new(vec![0.3]).unwrap();
        let fam = EventFamily::new(space, vec![UpSet::principal(CoordSet::singleton(0))]).unwrap();
        let s = summarize(&fam, &build_support_relation(&fam), &ProbEngine::default()).unwrap();
        assert_eq!((s.mu, s.delta, s.eps), (0.3, 0.0, 0.3));
        assert!((bound_i1(&s).unwrap() - (-0.3f64).exp()).abs() < 1e-15);
        assert!((lower_bound(&s) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn i1_examples() {
        assert!((bound_i1(&summary(0.5, 0.375, &[0.125; 4])).unwrap() - 0.731616).abs() < 1e-6);
        assert_eq!(bound_i1(&summary(0.0, 0.0, &[])).unwrap(), 1.0);
        assert!((bound_i1(&summary(1.0, 0.0, &[0.5, 0.5])).unwrap() - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn i2_examples() {
        let s = summary(0.5, 0.375, &[0.125; 4]);
        let (phi_form, quad) = bound_i2(&s, 0.5).unwrap();
        assert!((phi_form - (-0.25f64 / 0.875).exp()).abs() < 1e-15);
        assert!((phi_form - 0.751477).abs() < 1e-6);
        assert!((quad - 0.866878).abs() < 1e-6);
        assert!(phi_form >= 41.0 / 64.0);
        assert_eq!(bound_i2(&s, 0.0).unwrap(), (1.0, 1.0));
        let s1 = summary(1.0, 0.0, &[0.5, 0.5]);
        let (a, b) = bound_i2(&s1, 1.0).unwrap();
        assert!((a - (-1.0f64).exp()).abs() < 1e-15 && (b - (-0.5f64).exp()).abs() < 1e-15);
        assert!(bound_i2(&s, 0.6).is_err());
        assert!(bound_i2(&s, -0.1).is_err());
        assert_eq!(bound_i2(&summary(0.0, 0.0, &[]), 0.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn i1a_examples() {
        let s = summary(0.5, 0.375, &[0.125; 4]);
        let closed = 0.875f64.powi(4) * (0.375f64 / 1.75).exp();
        assert!((bound_i1a(&s).unwrap() - closed).abs() < 1e-15);
        assert!((bound_i1a(&s).unwrap() - 0.7262653).abs() < 1e-6);
        let indep = summary(0.5, 0.0, &[0.2, 0.3]);
        assert_eq!(bound_i1a(&indep).unwrap(), lower_bound(&indep));
        assert_eq!(bound_i1a(&summary(1.2, 0.4, &[1.0, 0.2])).unwrap(), 0.0);
        assert_eq!(lower_bound(&summary(1.2, 0.4, &[1.0, 0.2])), 0.0);
    }

    #[test]
    fn i2a_examples() {
        let fam = k4();
        let rel = build_support_relation(&fam);
        let engine = ProbEngine::default();
        let v = bound_i2a(&fam, &rel, &engine).unwrap();
        assert!((v.value - (-23.0f64 / 64.0).exp()).abs() < 1e-12);
        assert!(v.value < bound_i1(&summarize(&fam, &rel, &engine).unwrap()).unwrap());

        let p: f64 = 0.35;
        let space = ProductSpace::<f64>::uniform(2, p).unwrap();
        let one = EventFamily::new(
            space.clone(),
            vec![UpSet::principal(CoordSet::singleton(0))],
        )
        .unwrap();
        let v = bound_i2a(&one, &build_support_relation(&one), &engine).unwrap();
        assert!((v.value - (-p).exp()).abs() < 1e-15);

        let two = EventFamily::new(
            space,
            vec![
                UpSet::principal(CoordSet::singleton(0)),
                UpSet::principal(CoordSet::singleton(1)),
            ],
        )
        .unwrap();
        let v = bound_i2a(&two, &build_support_relation(&two), &engine).unwrap();
        assert!((v.value - (-2.0 * p).exp()).abs() < 1e-15);
    }

    #[test]
    fn i2e_examples() {
        let fam = k4();
        let rel = build_support_relation(&fam);
        let engine = ProbEngine::default();
        let s = summarize(&fam, &rel, &engine).unwrap();
        for t in [0.0, 0.1, 0.25, 0.5] {
            assert_eq!(bound_i2e(&s, t).unwrap(), bound_i2(&s, t).unwrap());
        }

        let (c, p): (f64, f64) = (3.0, 0.4);
        let space = ProductSpace::<f64>::uniform(1, p).unwrap();
        let one = EventFamily::with_weights(
            space,
            vec![UpSet::principal(CoordSet::singleton(0))],
            vec![c],
        )
        .unwrap();
        let s = summarize(&one, &build_support_relation(&one), &engine).unwrap();
        let (phi_form, _) = bound_i2e(&s, c * p).unwrap();
        assert!((phi_form - (-p).exp()).abs() < 1e-14);

        let w = fam.reweighted(vec![2.0; 4]).unwrap();
        let s = summarize(&w, &rel, &engine).unwrap();
        assert!((s.mu - 1.0).abs() < 1e-12);
        assert!((s.delta_bar - 3.5).abs() < 1e-12);
        let (phi_form, _) = bound_i2e(&s, 1.0).unwrap();
        assert!((phi_form - 0.751477).abs() < 1e-6);
        assert_eq!(
            bound_i1(&s).unwrap_err(),
            Error::WeightedFamily { bound: "i1" }
        );
        assert!(bound_i2(&s, 0.5).is_err());
        assert!(bound_i1a(&s).is_err());
    }

    #[test]
    fn report_grid_and_clamping() {
        let fam = k4();
        let rel = build_support_relation(&fam);
        let r = bound_report(&fam, &rel, &ProbEngine::default(), &DEFAULT_T_FRACTIONS).unwrap();
        assert_eq!(r.t_grid().len(), 4);
        assert_eq!(r.rows[3].threshold, 0.0);
        assert!(r.i1.unwrap().raw >= r.i1.unwrap().clamped);
        let big = BoundValue::new(1.7);
        assert_eq!((big.raw, big.clamped), (1.7, 1.0));
        assert!(bound_report(&fam, &rel, &ProbEngine::default(), &[1.5]).is_err());
    }

    #[test]
    fn relation_size_must_match() {
        let fam = k4();
        let rel = DependencyRelation::empty(3, RelationMode::UserSupplied);
        assert!(summarize(&fam, &rel, &ProbEngine::default()).is_err());
    }

    #[test]
    fn phi_dominates_half_square() {
        for i in 0..=1000 {
            let x = -(i as f64) / 1000.0;
            assert!(phi(x).unwrap() >= x * x / 2.0);
        }
    }
}
