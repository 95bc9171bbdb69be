//! Instance files.
//!
//! ```json
//! {
//!   "n": 3,
//!   "p": [0.5, 0.5, 0.5],
//!   "events": [
//!     {"minsets": [[0, 1], [0, 2], [1, 2]], "weight": 1}
//!   ],
//!   "dependency": "support"
//! }
//! ```
//!
//! Indices are 0-based. `weight` defaults to 1 and `dependency` to
//! `"support"`; it may also be `"exact"` or an explicit list of index pairs.
//! The writer emits canonical min-sets and numbers with 17 significant
//! digits, so `write(parse(text)) == text` for any file it produced.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::dependency::{build_support_relation, refine_exact, DependencyRelation, RelationMode};
use crate::error::{Error, Result};
use crate::model::{EventFamily, ProductSpace, UpSet, MAX_COORDS};
use crate::prob::ProbEngine;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DependencySpec {
    Support,
    Exact,
    Explicit(Vec<(usize, usize)>),
}

impl DependencySpec {
    pub fn name(&self) -> &'static str {
        match self {
            DependencySpec::Support => "support",
            DependencySpec::Exact => "exact",
            DependencySpec::Explicit(_) => "explicit",
        }
    }
}

/// A parsed instance: the event family plus the requested relation.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub family: EventFamily<f64>,
    pub dependency: DependencySpec,
}

impl Instance {
    /// Builds the dependency relation requested by the file. The second
    /// element lists pairs that exact refinement could not test.
    pub fn relation(
        &self,
        engine: &ProbEngine,
        tol: f64,
    ) -> Result<(DependencyRelation, Vec<String>)> {
        match &self.dependency {
            DependencySpec::Support => Ok((build_support_relation(&self.family), Vec::new())),
            DependencySpec::Exact => {
                let support = build_support_relation(&self.family);
                let refined = refine_exact(&support, &self.family, tol, engine);
                Ok((refined.relation, refined.warnings))
            }
            DependencySpec::Explicit(pairs) => Ok((
                DependencyRelation::new(
                    self.family.len(),
                    pairs.iter().copied(),
                    RelationMode::UserSupplied,
                )?,
                Vec::new(),
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    p: Vec<f64>,
    events: Vec<RawEvent>,
    #[serde(default)]
    dependency: Option<RawDependency>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    minsets: Vec<Vec<usize>>,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDependency {
    Mode(String),
    Pairs(Vec<[usize; 2]>),
}

/// Parses and validates an instance file. Errors name the offending line
/// (for syntax errors) or field path.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let field = |path: String, msg: String| Error::Parse(format!("{path}: {msg}"));

    if raw.n > MAX_COORDS {
        return Err(field(
            "n".into(),
            format!("{} coordinates exceed the maximum of {MAX_COORDS}", raw.n),
        ));
    }
    if raw.p.len() != raw.n {
        return Err(field(
            "p".into(),
            format!("has {} entries, expected n = {}", raw.p.len(), raw.n),
        ));
    }
    for (i, &p) in raw.p.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(field(
                format!("p[{i}]"),
                format!("probability {p} outside [0, 1]"),
            ));
        }
    }
    let space = ProductSpace::new(raw.p).map_err(|e| field("p".into(), e.to_string()))?;

    let mut events = Vec::with_capacity(raw.events.len());
    let mut weights = Vec::with_capacity(raw.events.len());
    for (i, ev) in raw.events.iter().enumerate() {
        for (m, minset) in ev.minsets.iter().enumerate() {
            for (b, &x) in minset.iter().enumerate() {
                if x >= raw.n {
                    return Err(field(
                        format!("events[{i}].minsets[{m}][{b}]"),
                        format!("index {x} out of range for n = {}", raw.n),
                    ));
                }
            }
        }
        if !ev.weight.is_finite() || ev.weight <= 0.0 {
            return Err(field(
                format!("events[{i}].weight"),
                format!("weight {} is not strictly positive", ev.weight),
            ));
        }
        events.push(UpSet::canonicalize(
            raw.n,
            ev.minsets.iter().map(|m| m.iter().copied()),
        )?);
        weights.push(ev.weight);
    }
    let family = EventFamily::with_weights(space, events, weights)?;

    let k = family.len();
    let dependency = match raw.dependency {
        None => DependencySpec::Support,
        Some(RawDependency::Mode(m)) => match m.as_str() {
            "support" => DependencySpec::Support,
            "exact" => DependencySpec::Exact,
            other => {
                return Err(field(
                    "dependency".into(),
                    format!(
                    "unknown mode {other:?}; expected \"support\", \"exact\" or a list of pairs"
                ),
                ))
            }
        },
        Some(RawDependency::Pairs(pairs)) => {
            for (s, [i, j]) in pairs.iter().enumerate() {
                if i == j || *i >= k || *j >= k {
                    return Err(field(
                        format!("dependency[{s}]"),
                        format!("pair [{i}, {j}] must name two distinct events below {k}"),
                    ));
                }
            }
            DependencySpec::Explicit(
                pairs
                    .into_iter()
                    .map(|[i, j]| (i.min(j), i.max(j)))
                    .collect(),
            )
        }
    };
    Ok(Instance { family, dependency })
}

/// Canonical text form of an instance.
pub fn write_instance(instance: &Instance) -> String {
    let family = &instance.family;
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"n\": {},", family.space().n());
    let p: Vec<String> = family
        .space()
        .probabilities()
        .iter()
        .map(|&x| fmt_g17(x))
        .collect();
    let _ = writeln!(out, "  \"p\": [{}],", p.join(", "));
    if family.is_empty() {
        out.push_str("  \"events\": [],\n");
    } else {
        out.push_str("  \"events\": [\n");
        for (i, e) in family.events().iter().enumerate() {
            let minsets: Vec<String> = e
                .minset_indices()
                .iter()
                .map(|m| {
                    format!(
                        "[{}]",
                        m.iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                })
                .collect();
            let sep = if i + 1 == family.len() { "" } else { "," };
            let _ = writeln!(
                out,
                "    {{\"minsets\": [{}], \"weight\": {}}}{sep}",
                minsets.join(", "),
                fmt_g17(family.weight(i))
            );
        }
        out.push_str("  ],\n");
    }
    match &instance.dependency {
        DependencySpec::Explicit(pairs) => {
            let mut pairs = pairs.clone();
            pairs.sort_unstable();
            pairs.dedup();
            let items: Vec<String> = pairs.iter().map(|(i, j)| format!("[{i}, {j}]")).collect();
            let _ = writeln!(out, "  \"dependency\": [{}]", items.join(", "));
        }
        mode => {
            let _ = writeln!(out, "  \"dependency\": \"{}\"", mode.name());
        }
    }
    out.push_str("}\n");
    out
}

/// `%.17g`: 17 significant digits, trailing zeros dropped, exponent form
/// outside `1e-5 ..= 1e17`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if !(-5..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K4: &str = r#"{
  "n": 6,
  "p": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
  "events": [
    {"minsets": [[0, 1, 3]], "weight": 1},
    {"minsets": [[0, 2, 4]], "weight": 1},
    {"minsets": [[1, 2, 5]], "weight": 1},
    {"minsets": [[3, 4, 5]], "weight": 1}
  ],
  "dependency": "support"
}
"#;

    #[test]
    fn k4_file() {
        let inst = parse_instance(K4).unwrap();
        assert_eq!(inst.family.len(), 4);
        let (rel, _) = inst.relation(&ProbEngine::default(), 1e-12).unwrap();
        assert_eq!(rel.pair_count(), 6);
        assert_eq!(write_instance(&inst), K4);
    }

    #[test]
    fn defaults_and_canonicalization() {
        let inst = parse_instance(
            r#"{"n": 3, "p": [0.1, 0.2, 0.3], "events": [{"minsets": [[1], [1, 2]]}]}"#,
        )
        .unwrap();
        assert_eq!(inst.family.event(0).minset_indices(), vec![vec![1]]);
        assert_eq!(inst.family.weight(0), 1.0);
        assert_eq!(inst.dependency, DependencySpec::Support);

        let empty = parse_instance(r#"{"n": 2, "p": [0.5, 0.5], "events": []}"#).unwrap();
        assert!(empty.family.is_empty());
    }

    #[test]
    fn explicit_pairs() {
        let text = r#"{"n": 2, "p": [0.5, 0.5], "events": [{"minsets": [[0]]}, {"minsets": [[1]]}], "dependency": [[1, 0]]}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.dependency, DependencySpec::Explicit(vec![(0, 1)]));
        let (rel, _) = inst.relation(&ProbEngine::default(), 1e-12).unwrap();
        assert_eq!(rel.mode(), RelationMode::UserSupplied);
        assert!(rel.related(0, 1));
        assert!(write_instance(&inst).contains("\"dependency\": [[0, 1]]"));
    }

    #[test]
    fn diagnostics() {
        let err = |t: &str| parse_instance(t).unwrap_err().to_string();
        assert!(err("{\n  \"n\": 2,\n  \"p\": [0.5 0.5]\n}").contains("line 3"));
        assert!(err(r#"{"n": 2, "p": [0.5], "events": []}"#).contains("p: has 1 entries"));
        assert!(err(r#"{"n": 1, "p": [1.5], "events": []}"#).contains("p[0]"));
        assert!(
            err(r#"{"n": 2, "p": [0.5, 0.5], "events": [{"minsets": [[0, 2]]}]}"#)
                .contains("events[0].minsets[0][1]")
        );
        assert!(
            err(r#"{"n": 1, "p": [0.5], "events": [{"minsets": [[0]], "weight": 0}]}"#)
                .contains("events[0].weight")
        );
        assert!(err(
            r#"{"n": 1, "p": [0.5], "events": [{"minsets": [[0]]}], "dependency": "bogus"}"#
        )
        .contains("dependency"));
        assert!(err(
            r#"{"n": 1, "p": [0.5], "events": [{"minsets": [[0]]}], "dependency": [[0, 0]]}"#
        )
        .contains("dependency[0]"));
        assert!(err(r#"{"n": 1, "p": [0.5], "events": [], "extra": 1}"#).contains("extra"));
    }

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_g17(0.5), "0.5");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(0.3), "0.29999999999999999");
        assert_eq!(fmt_g17(2.5), "2.5");
        assert_eq!(fmt_g17(123.0), "123");
        assert_eq!(fmt_g17(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_g17(1e20), "1e20");
        assert_eq!(fmt_g17(0.0001), "0.0001");
        for x in [0.1, 1.0 / 3.0, 0.7, 1e-300, 12345.678, -0.25] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
