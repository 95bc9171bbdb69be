//! The `compute` and `verify` drivers and their report documents.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{bound_report, BoundReport, BoundValue, TailRow, DEFAULT_T_FRACTIONS};
use crate::dependency::{
    validate_relation, DependencyRelation, ValidationReport, DEFAULT_RELATION_TOLERANCE,
};
use crate::error::Error;
use crate::instance::{DependencySpec, Instance};
use crate::model::UpSet;
use crate::oracle::{
    check_axioms, exact_lower_tail, Aim2Report, AimReport, AxiomReport, Oracle,
    DEFAULT_INEQUALITY_TOLERANCE, DEFAULT_S_GRID,
};
use crate::outcomes::{enumerate_law, sample_law};
use crate::prob::{
    derive_seed, joint_support, Method, MonteCarlo, ProbConfig, ProbEngine,
    DEFAULT_MAX_EXACT_SUPPORT,
};

/// Random orderings checked in addition to the identity.
const EXTRA_ORDERINGS: usize = 5;
/// Pairs and triples of family events fed to the axiom checks.
const AXIOM_SAMPLE_CAP: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_fractions: Vec<f64>,
    /// Monte Carlo sample count; `None` disables the fallback.
    pub mc_samples: Option<u64>,
    pub seed: u64,
    pub max_exact_support: usize,
    /// Slack allowed in inequality checks.
    pub tolerance: f64,
    /// Overrides the relation requested by the instance file.
    pub dependency: Option<DependencySpec>,
    /// Continue even if the relation fails validation.
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_fractions: DEFAULT_T_FRACTIONS.to_vec(),
            mc_samples: None,
            seed: 0,
            max_exact_support: DEFAULT_MAX_EXACT_SUPPORT,
            tolerance: DEFAULT_INEQUALITY_TOLERANCE,
            dependency: None,
            force: false,
        }
    }
}

impl RunOptions {
    pub fn engine(&self) -> ProbEngine {
        ProbEngine::new(ProbConfig {
            max_exact_support: self.max_exact_support,
            monte_carlo: self.mc_samples.map(|samples| MonteCarlo {
                samples,
                seed: self.seed,
            }),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Input(Error),
    #[error("{0}")]
    TooLarge(Error),
    #[error("dependency relation is unsound: {0}; rerun with --force to compute anyway")]
    Unsound(String),
}

impl RunError {
    /// 1 for bad input, 2 for an unsound relation, 3 for an instance beyond
    /// the exact cap with Monte Carlo disabled.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 1,
            RunError::Unsound(_) => 2,
            RunError::TooLarge(_) => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::TooLargeForExact { .. } => RunError::TooLarge(e),
            e => RunError::Input(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub command: &'static str,
    pub instance: InstanceInfo,
    pub config: ConfigInfo,
    pub summary: SummaryDoc,
    pub bounds: BoundsDoc,
    pub validation: Option<ValidationReport>,
    pub warnings: Vec<String>,
    pub verification: Option<Verification>,
    /// False if validation or any verification check failed.
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceInfo {
    pub n: usize,
    pub k: usize,
    pub weighted: bool,
    pub support_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigInfo {
    pub dependency: &'static str,
    pub relation_pairs: Vec<(usize, usize)>,
    pub t_fractions: Vec<f64>,
    pub max_exact_support: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub mc_samples: Option<u64>,
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventSummary {
    pub prob: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryDoc {
    pub mu: f64,
    pub delta: f64,
    pub eps: f64,
    pub delta_bar: f64,
    pub method: Method,
    pub max_stderr: f64,
    pub events: Vec<EventSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsDoc {
    pub i1: Option<BoundValue<f64>>,
    pub i1a: Option<BoundValue<f64>>,
    pub i2a: BoundValue<f64>,
    pub i2a_method: Method,
    pub lower_bound: BoundValue<f64>,
    pub tail: Vec<TailRow<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub probability: f64,
}

/// One "exact side ≤ bound side" comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domination {
    pub bound: &'static str,
    pub t: Option<f64>,
    /// The side expected to be smaller.
    pub smaller: f64,
    pub larger: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub method: Method,
    /// True when the law was sampled; comparisons then allow three
    /// standard errors.
    pub statistical: bool,
    pub samples: u64,
    pub coordinates: usize,
    pub distribution: Vec<Atom>,
    pub total: f64,
    pub prob_zero: f64,
    pub mean: f64,
    pub mean_consistent: bool,
    pub dominations: Vec<Domination>,
    pub aim: Vec<AimReport>,
    pub aim2: Aim2Report,
    pub axioms: AxiomReport,
    pub axiom_samples_skipped: usize,
    pub passed: bool,
}

struct Prepared<'i> {
    instance: &'i Instance,
    relation: DependencyRelation,
    dependency: &'static str,
    warnings: Vec<String>,
    validation: Option<ValidationReport>,
    bounds: BoundReport<f64>,
}

fn prepare<'i>(
    instance: &'i Instance,
    opts: &RunOptions,
    always_validate: bool,
) -> Result<Prepared<'i>, RunError> {
    let engine = opts.engine();
    let spec = opts.dependency.as_ref().unwrap_or(&instance.dependency);
    let resolved = Instance {
        family: instance.family.clone(),
        dependency: spec.clone(),
    };
    let (relation, warnings) = resolved.relation(&engine, DEFAULT_RELATION_TOLERANCE)?;
    let validation = (always_validate || *spec != DependencySpec::Support).then(|| {
        validate_relation(
            &relation,
            &instance.family,
            DEFAULT_RELATION_TOLERANCE,
            &engine,
            derive_seed(opts.seed, 1),
        )
    });
    if let Some(v) = &validation {
        if !v.passed && !opts.force {
            let detail = match &v.worst {
                Some(w) => format!(
                    "event {} is not independent of non-neighbors {:?} (gap {:.3e})",
                    w.event, w.subset, w.gap
                ),
                None => "validation failed".into(),
            };
            return Err(RunError::Unsound(detail));
        }
    }
    let bounds = bound_report(&instance.family, &relation, &engine, &opts.t_fractions)?;
    Ok(Prepared {
        instance,
        relation,
        dependency: spec.name(),
        warnings,
        validation,
        bounds,
    })
}

impl Prepared<'_> {
    fn document(
        &self,
        command: &'static str,
        opts: &RunOptions,
        verification: Option<Verification>,
    ) -> ReportDocument {
        let family = &self.instance.family;
        let s = &self.bounds.summary;
        let passed = self.validation.as_ref().is_none_or(|v| v.passed)
            && verification.as_ref().is_none_or(|v| v.passed);
        ReportDocument {
            command,
            instance: InstanceInfo {
                n: family.space().n(),
                k: family.len(),
                weighted: !family.is_unweighted(),
                support_size: family.support().len(),
            },
            config: ConfigInfo {
                dependency: self.dependency,
                relation_pairs: self.relation.pairs().collect(),
                t_fractions: opts.t_fractions.clone(),
                max_exact_support: opts.max_exact_support,
                tolerance: opts.tolerance,
                seed: opts.seed,
                mc_samples: opts.mc_samples,
                forced: opts.force,
            },
            summary: SummaryDoc {
                mu: s.mu,
                delta: s.delta,
                eps: s.eps,
                delta_bar: s.delta_bar,
                method: s.method,
                max_stderr: s.max_stderr,
                events: s
                    .per_event
                    .iter()
                    .map(|&(prob, weight)| EventSummary { prob, weight })
                    .collect(),
            },
            bounds: BoundsDoc {
                i1: self.bounds.i1,
                i1a: self.bounds.i1a,
                i2a: self.bounds.i2a,
                i2a_method: self.bounds.i2a_method,
                lower_bound: self.bounds.lower,
                tail: self.bounds.rows.clone(),
            },
            validation: self.validation.clone(),
            warnings: self.warnings.clone(),
            verification,
            passed,
        }
    }
}

/// Summary and all applicable bounds. The relation is validated unless it
/// is the support relation.
pub fn run_compute(instance: &Instance, opts: &RunOptions) -> Result<ReportDocument, RunError> {
    let prepared = prepare(instance, opts, false)?;
    Ok(prepared.document("compute", opts, None))
}

/// Everything `run_compute` reports plus the oracle checks. Beyond the exact
/// cap the law is sampled (when Monte Carlo is enabled) and results are
/// marked statistical.
pub fn run_verify(instance: &Instance, opts: &RunOptions) -> Result<ReportDocument, RunError> {
    let family = &instance.family;
    let support = family.support();
    let exact = support.len() <= opts.max_exact_support;
    if !exact && opts.mc_samples.is_none() {
        return Err(Error::TooLargeForExact {
            support: support.len(),
            cap: opts.max_exact_support,
        }
        .into());
    }
    let prepared = prepare(instance, opts, true)?;
    let events: Vec<&UpSet> = family.events().iter().collect();
    let law = if exact {
        enumerate_law(family.space(), &events, opts.max_exact_support)?
    } else {
        let samples = opts.mc_samples.expect("checked above");
        sample_law(family.space(), &events, samples, derive_seed(opts.seed, 2))?
    };
    let samples = law.samples();
    let statistical = law.method() == Method::MonteCarlo;
    let oracle = Oracle::from_law(family, law);
    let dist = oracle.distribution();

    // one-sided allowance for a sampled probability q
    let allowance = |q: f64| {
        if statistical {
            let n = samples as f64;
            3.0 * (q * (1.0 - q) / n).max(1.0 / (n * n)).sqrt()
        } else {
            0.0
        }
    };
    let bound_allowance = |b: f64| {
        if statistical {
            3.0 * prepared.bounds.summary.max_stderr * b.max(1.0) * 4.0
        } else {
            0.0
        }
    };
    let tol = opts.tolerance;
    let check_tol = if statistical {
        tol.max(3.0 / (samples as f64).sqrt())
    } else {
        tol
    };

    let s = &prepared.bounds.summary;
    let p0 = dist.prob_zero();
    let mut dominations = Vec::new();
    let mut dominate =
        |bound: &'static str, t: Option<f64>, smaller: f64, larger: f64, extra: f64| {
            let slack = larger - smaller;
            dominations.push(Domination {
                bound,
                t,
                smaller,
                larger,
                slack,
                passed: slack >= -(tol + extra),
            });
        };
    if let Some(b) = prepared.bounds.i1 {
        dominate(
            "i1",
            None,
            p0,
            b.raw,
            allowance(p0) + bound_allowance(b.raw),
        );
    }
    if let Some(b) = prepared.bounds.i1a {
        dominate(
            "i1a",
            None,
            p0,
            b.raw,
            allowance(p0) + bound_allowance(b.raw),
        );
    }
    let b = prepared.bounds.i2a;
    dominate(
        "i2a",
        None,
        p0,
        b.raw,
        allowance(p0) + bound_allowance(b.raw),
    );
    let b = prepared.bounds.lower;
    dominate(
        "lower-bound",
        None,
        b.raw,
        p0,
        allowance(p0) + bound_allowance(b.raw),
    );
    for row in &prepared.bounds.rows {
        let q = exact_lower_tail(&dist, row.threshold);
        let t = Some(row.t);
        if let (Some(phi), Some(quad)) = (row.i2_phi, row.i2_quadratic) {
            dominate(
                "i2-phi",
                t,
                q,
                phi.raw,
                allowance(q) + bound_allowance(phi.raw),
            );
            dominate(
                "i2-quadratic",
                t,
                q,
                quad.raw,
                allowance(q) + bound_allowance(quad.raw),
            );
        }
        dominate(
            "i2e-phi",
            t,
            q,
            row.i2e_phi.raw,
            allowance(q) + bound_allowance(row.i2e_phi.raw),
        );
        dominate(
            "i2e-quadratic",
            t,
            q,
            row.i2e_quadratic.raw,
            allowance(q) + bound_allowance(row.i2e_quadratic.raw),
        );
    }

    let k = family.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 3));
    let mut orderings = vec![(0..k).collect::<Vec<_>>()];
    for _ in 0..EXTRA_ORDERINGS {
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        orderings.push(order);
    }
    let aim: Vec<AimReport> = orderings
        .iter()
        .map(|o| oracle.check_aim(&prepared.relation, o, check_tol))
        .collect();
    let aim2 = oracle.check_aim2(&prepared.relation, &DEFAULT_S_GRID, check_tol);

    let cap = opts.max_exact_support;
    let fits = |es: &[&UpSet]| joint_support(es).len() <= cap;
    let mut skipped = 0;
    let mut pairs = Vec::new();
    'pairs: for i in 0..k {
        for j in i + 1..k {
            if pairs.len() == AXIOM_SAMPLE_CAP {
                break 'pairs;
            }
            let (a, b) = (family.event(i), family.event(j));
            if fits(&[a, b]) {
                pairs.push((a.clone(), b.clone()));
            } else {
                skipped += 1;
            }
        }
    }
    let mut triples = Vec::new();
    'triples: for i in 0..k {
        for j in 0..k {
            for l in j + 1..k {
                if i == j || i == l {
                    continue;
                }
                if triples.len() == AXIOM_SAMPLE_CAP {
                    break 'triples;
                }
                let (a, b, c) = (family.event(i), family.event(j), family.event(l));
                if fits(&[a, b, c]) {
                    triples.push((a.clone(), b.clone(), c.clone()));
                } else {
                    skipped += 1;
                }
            }
        }
    }
    let axioms = check_axioms(
        family.space(),
        &pairs,
        &triples,
        cap,
        DEFAULT_RELATION_TOLERANCE,
    )?;

    let mean = dist.mean();
    let total = dist.total();
    let mean_tol = if statistical {
        let second: f64 = dist.atoms().iter().map(|&(v, p)| v * v * p).sum();
        3.0 * ((second - mean * mean).max(0.0) / samples as f64).sqrt()
            + 3.0 * s.max_stderr * k as f64
    } else {
        DEFAULT_INEQUALITY_TOLERANCE
    };
    let mean_consistent =
        (mean - s.mu).abs() <= mean_tol && (total - 1.0).abs() <= 1e-12 * (1 + k) as f64;

    let passed = mean_consistent
        && dominations.iter().all(|d| d.passed)
        && aim.iter().all(|a| a.passed)
        && aim2.passed
        && axioms.passed;
    let verification = Verification {
        method: dist.method(),
        statistical,
        samples,
        coordinates: dist.coordinates(),
        distribution: dist
            .atoms()
            .iter()
            .map(|&(value, probability)| Atom { value, probability })
            .collect(),
        total,
        prob_zero: p0,
        mean,
        mean_consistent,
        dominations,
        aim,
        aim2,
        axioms,
        axiom_samples_skipped: skipped,
        passed,
    };
    Ok(prepared.document("verify", opts, Some(verification)))
}

/// Pretty-printed JSON.
pub fn render_machine(doc: &ReportDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

fn opt(v: Option<BoundValue<f64>>) -> String {
    v.map_or_else(|| "-".into(), |b| format!("{:.9}", b.raw))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn render_table(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let s = &doc.summary;
    let _ = writeln!(
        out,
        "instance: n={} k={} support={} weighted={}",
        doc.instance.n, doc.instance.k, doc.instance.support_size, doc.instance.weighted
    );
    let _ = writeln!(
        out,
        "relation: {} ({} pairs)  seed={}  max-exact-support={}",
        doc.config.dependency,
        doc.config.relation_pairs.len(),
        doc.config.seed,
        doc.config.max_exact_support
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "mu         {:.12}", s.mu);
    let _ = writeln!(out, "delta      {:.12}", s.delta);
    let _ = writeln!(out, "eps        {:.12}", s.eps);
    let _ = writeln!(out, "delta_bar  {:.12}", s.delta_bar);
    let _ = writeln!(out, "method     {}", s.method.as_str());
    if s.method == Method::MonteCarlo {
        let _ = writeln!(out, "max stderr {:.3e}", s.max_stderr);
    }
    let _ = writeln!(out);
    let b = &doc.bounds;
    let _ = writeln!(out, "Pr(X=0) bounds");
    let _ = writeln!(out, "  i1           {}", opt(b.i1));
    let _ = writeln!(out, "  i1a          {}", opt(b.i1a));
    let _ = writeln!(
        out,
        "  i2a          {:.9} ({})",
        b.i2a.raw,
        b.i2a_method.as_str()
    );
    let _ = writeln!(out, "  lower-bound  {:.9}", b.lower_bound.raw);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>14} {:>14} {:>12} {:>12} {:>12} {:>12}",
        "t", "mu-t", "i2-phi", "i2-quad", "i2e-phi", "i2e-quad"
    );
    for row in &b.tail {
        let _ = writeln!(
            out,
            "{:>14.9} {:>14.9} {:>12} {:>12} {:>12.9} {:>12.9}",
            row.t,
            row.threshold,
            opt(row.i2_phi),
            opt(row.i2_quadratic),
            row.i2e_phi.raw,
            row.i2e_quadratic.raw
        );
    }
    if let Some(v) = &doc.validation {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "relation validation: {} ({} subsets, {} skipped, worst {:.3e}{})",
            mark(v.passed),
            v.subsets_checked,
            v.subsets_skipped,
            v.worst_violation,
            if v.statistical { ", statistical" } else { "" }
        );
    }
    for w in &doc.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if let Some(v) = &doc.verification {
        let _ = writeln!(out);
        let kind = if v.statistical {
            format!("sampled, {} draws", v.samples)
        } else {
            "exact".into()
        };
        let _ = writeln!(out, "law of X ({kind}, {} coordinates)", v.coordinates);
        for a in &v.distribution {
            let _ = writeln!(out, "  {:>12.6}  {:.12}", a.value, a.probability);
        }
        let _ = writeln!(
            out,
            "Pr(X=0) = {:.12}   mean = {:.12}  [{}]",
            v.prob_zero,
            v.mean,
            mark(v.mean_consistent)
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<14} {:>12} {:>14} {:>14} {:>12}",
            "check", "t", "smaller", "larger", "slack"
        );
        for d in &v.dominations {
            let t = d.t.map_or_else(|| "-".into(), |t| format!("{t:.6}"));
            let _ = writeln!(
                out,
                "{:<14} {:>12} {:>14.9} {:>14.9} {:>12.3e} {}",
                d.bound,
                t,
                d.smaller,
                d.larger,
                d.slack,
                mark(d.passed)
            );
        }
        let _ = writeln!(out);
        for a in &v.aim {
            let _ = writeln!(
                out,
                "aim   {:?}: {} (min slack {:.3e})",
                a.ordering,
                mark(a.passed),
                a.min_slack
            );
        }
        let _ = writeln!(
            out,
            "aim2  s-grid {:?}: {} (min slack {:.3e})",
            DEFAULT_S_GRID,
            mark(v.aim2.passed),
            v.aim2.min_slack
        );
        let ax = &v.axioms;
        let _ = writeln!(
            out,
            "axioms {} pairs, {} triples: {} (harris {}, closure {}, identity {}; {} skipped)",
            ax.pairs_checked,
            ax.triples_checked,
            mark(ax.passed),
            ax.harris_failures,
            ax.closure_failures,
            ax.identity_failures,
            v.axiom_samples_skipped
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "result: {}", if doc.passed { "PASS" } else { "FAIL" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, FamilyKind, Graph};
    use crate::instance::parse_instance;

    fn k4() -> Instance {
        let kind = FamilyKind::SubgraphCount {
            graph: Graph::clique(3),
            vertices: 4,
            p: 0.5,
        };
        generate(&kind, 0).unwrap()
    }

    #[test]
    fn compute_k4() {
        let doc = run_compute(&k4(), &RunOptions::default()).unwrap();
        assert!((doc.summary.mu - 0.5).abs() < 1e-12);
        assert!((doc.summary.delta - 0.375).abs() < 1e-12);
        assert!((doc.bounds.i1.unwrap().raw - 0.731616).abs() < 1e-6);
        assert!((doc.bounds.i1a.unwrap().raw - 0.7262653).abs() < 1e-6);
        assert!((doc.bounds.i2a.raw - 0.6981125).abs() < 1e-6);
        assert!((doc.bounds.lower_bound.raw - 0.586182).abs() < 1e-6);
        assert!(doc.validation.is_none() && doc.verification.is_none() && doc.passed);
    }

    #[test]
    fn verify_k4() {
        let doc = run_verify(&k4(), &RunOptions::default()).unwrap();
        let v = doc.verification.as_ref().unwrap();
        assert_eq!(v.prob_zero, 41.0 / 64.0);
        assert!(v.passed && doc.passed, "{}", render_table(&doc));
        assert_eq!(v.aim.len(), 6);
        assert_eq!(v.axioms.pairs_checked, 6);
        assert_eq!(v.axioms.triples_checked, 12);
    }

    #[test]
    fn single_event() {
        let inst =
            parse_instance(r#"{"n": 1, "p": [0.3], "events": [{"minsets": [[0]]}]}"#).unwrap();
        let doc = run_compute(&inst, &RunOptions::default()).unwrap();
        assert!((doc.bounds.i1.unwrap().raw - (-0.3f64).exp()).abs() < 1e-15);
        assert!((doc.bounds.lower_bound.raw - 0.7).abs() < 1e-15);
    }

    #[test]
    fn weighted_k4() {
        let mut inst = k4();
        inst.family = inst.family.reweighted(vec![2.0; 4]).unwrap();
        let doc = run_verify(&inst, &RunOptions::default()).unwrap();
        assert!((doc.summary.delta_bar - 3.5).abs() < 1e-12);
        assert!(doc.bounds.i1.is_none());
        assert!((doc.bounds.tail[3].i2e_phi.raw - 0.751477).abs() < 1e-6);
        assert!(doc.passed);
    }

    #[test]
    fn empty_family() {
        let inst = parse_instance(r#"{"n": 2, "p": [0.5, 0.5], "events": []}"#).unwrap();
        let doc = run_verify(&inst, &RunOptions::default()).unwrap();
        let v = doc.verification.unwrap();
        assert_eq!(v.prob_zero, 1.0);
        assert!(v.passed);
        assert_eq!(doc.bounds.i1.unwrap().clamped, 1.0);
    }

    #[test]
    fn adversarial_relation() {
        let mut inst = k4();
        inst.dependency = DependencySpec::Explicit(vec![(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let err = run_compute(&inst, &RunOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let forced = RunOptions {
            force: true,
            ..RunOptions::default()
        };
        let doc = run_verify(&inst, &forced).unwrap();
        let v = doc.validation.as_ref().unwrap();
        assert!(!v.passed);
        assert!((v.worst.as_ref().unwrap().gap - 0.015625).abs() < 1e-12);
        assert!(!doc.passed);
    }

    #[test]
    fn over_cap() {
        let kind = FamilyKind::SubgraphCount {
            graph: Graph::clique(3),
            vertices: 8,
            p: 0.5,
        };
        let inst = generate(&kind, 0).unwrap();
        let err = run_verify(&inst, &RunOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("Monte Carlo"));
    }

    #[test]
    fn statistical_verify() {
        let kind = FamilyKind::SubgraphCount {
            graph: Graph::clique(3),
            vertices: 5,
            p: 0.5,
        };
        let inst = generate(&kind, 0).unwrap();
        let opts = RunOptions {
            max_exact_support: 8,
            mc_samples: Some(200_000),
            seed: 5,
            ..RunOptions::default()
        };
        let doc = run_verify(&inst, &opts).unwrap();
        let v = doc.verification.as_ref().unwrap();
        assert!(v.statistical);
        assert!(v.passed, "{}", render_table(&doc));
        assert_eq!(
            render_machine(&doc),
            render_machine(&run_verify(&inst, &opts).unwrap())
        );
    }

    #[test]
    fn renderers_are_stable() {
        let doc = run_verify(&k4(), &RunOptions::default()).unwrap();
        let text = render_machine(&doc);
        assert!(text.find("\"command\"").unwrap() < text.find("\"summary\"").unwrap());
        assert_eq!(
            text,
            render_machine(&run_verify(&k4(), &RunOptions::default()).unwrap())
        );
        assert!(render_table(&doc).ends_with("result: PASS\n"));
    }
}
