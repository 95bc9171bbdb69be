//! Seeded instance generators.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{DependencySpec, Instance};
use crate::model::{CoordSet, EventFamily, ProductSpace, UpSet, MAX_COORDS};

/// A small pattern graph `H` on vertices `0..vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &edges {
            if a == b || a >= vertices || b >= vertices {
                return Err(Error::Generator(format!(
                    "bad edge {a}-{b} for {vertices} vertices"
                )));
            }
        }
        if edges.is_empty() {
            return Err(Error::Generator("pattern graph has no edges".into()));
        }
        Ok(Graph { vertices, edges })
    }

    pub fn clique(r: usize) -> Self {
        let edges = (0..r)
            .flat_map(|a| (a + 1..r).map(move |b| (a, b)))
            .collect();
        Graph { vertices: r, edges }
    }

    pub fn cycle(r: usize) -> Self {
        Graph {
            vertices: r,
            edges: (0..r).map(|a| (a, (a + 1) % r)).collect(),
        }
    }

    /// Path with `r` edges.
    pub fn path(r: usize) -> Self {
        Graph {
            vertices: r + 1,
            edges: (0..r).map(|a| (a, a + 1)).collect(),
        }
    }

    pub fn star(r: usize) -> Self {
        Graph {
            vertices: r + 1,
            edges: (1..=r).map(|b| (0, b)).collect(),
        }
    }

    /// `triangle`, `k<r>`, `c<r>`, `p<r>` (path with r edges), `star<r>`, or
    /// an explicit edge list such as `0-1,1-2,2-0`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim().to_ascii_lowercase();
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Generator(format!("unknown graph {spec:?}")))
        };
        if spec == "triangle" {
            return Ok(Graph::clique(3));
        }
        if spec.contains('-') {
            let mut edges = Vec::new();
            for part in spec.split(',') {
                let (a, b) = part
                    .split_once('-')
                    .ok_or_else(|| Error::Generator(format!("bad edge {part:?}")))?;
                edges.push((num(a.trim())?, num(b.trim())?));
            }
            let vertices = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
            return Graph::new(vertices, edges);
        }
        let g = if let Some(r) = spec.strip_prefix("star") {
            Graph::star(num(r)?)
        } else if let Some(r) = spec.strip_prefix('k') {
            Graph::clique(num(r)?)
        } else if let Some(r) = spec.strip_prefix('c') {
            let r = num(r)?;
            if r < 3 {
                return Err(Error::Generator("cycles need at least 3 vertices".into()));
            }
            Graph::cycle(r)
        } else if let Some(r) = spec.strip_prefix('p') {
            Graph::path(num(r)?)
        } else {
            return Err(Error::Generator(format!("unknown graph {spec:?}")));
        };
        Graph::new(g.vertices, g.edges)
    }
}

/// Probability of each coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbSpec {
    Fixed(f64),
    /// Drawn uniformly from `[lo, hi]` per coordinate.
    Uniform(f64, f64),
}

impl ProbSpec {
    fn check(self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            ProbSpec::Fixed(p) if ok(p) => Ok(()),
            ProbSpec::Uniform(lo, hi) if ok(lo) && ok(hi) && lo <= hi => Ok(()),
            _ => Err(Error::Generator(format!(
                "invalid probability spec {self:?}"
            ))),
        }
    }

    fn draw(self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            ProbSpec::Fixed(p) => vec![p; n],
            ProbSpec::Uniform(lo, hi) if lo == hi => vec![lo; n],
            ProbSpec::Uniform(lo, hi) => (0..n).map(|_| rng.gen_range(lo..=hi)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// One principal event per copy of `graph` in `K_vertices`; coordinates
    /// are the edges of `K_vertices` in lexicographic order.
    SubgraphCount {
        graph: Graph,
        vertices: usize,
        p: f64,
    },
    /// `events` events, each "at least `quota` of `r` coordinates are 1"
    /// on a random `r`-subset of `coords` (the first `r` when `coords = r`).
    /// `quota` defaults to a strict majority.
    Threshold {
        coords: usize,
        events: usize,
        r: usize,
        quota: Option<usize>,
        p: ProbSpec,
    },
    /// `events` events, each a union of `minsets` random min-sets of
    /// `minset_size` coordinates (both inclusive ranges).
    RandomMonotoneDnf {
        coords: usize,
        events: usize,
        minsets: (usize, usize),
        minset_size: (usize, usize),
        p: ProbSpec,
    },
}

/// Builds an instance; identical `(kind, seed)` give identical instances.
pub fn generate(kind: &FamilyKind, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = match kind {
        FamilyKind::SubgraphCount { graph, vertices, p } => subgraph_count(graph, *vertices, *p)?,
        FamilyKind::Threshold {
            coords,
            events,
            r,
            quota,
            p,
        } => threshold(*coords, *events, *r, *quota, *p, &mut rng)?,
        FamilyKind::RandomMonotoneDnf {
            coords,
            events,
            minsets,
            minset_size,
            p,
        } => random_dnf(*coords, *events, *minsets, *minset_size, *p, &mut rng)?,
    };
    Ok(Instance {
        family,
        dependency: DependencySpec::Support,
    })
}

/// Index of edge `{a, b}` among the edges of `K_n` in lexicographic order.
pub fn edge_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// Edge sets of all copies of `h` in `K_n`, as coordinate masks.
pub fn subgraph_copies(h: &Graph, n: usize) -> BTreeSet<u128> {
    fn extend(
        h: &Graph,
        n: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut BTreeSet<u128>,
    ) {
        if map.len() == h.vertices {
            let mask = h.edges.iter().fold(0u128, |acc, &(a, b)| {
                acc | 1u128 << edge_index(n, map[a], map[b])
            });
            out.insert(mask);
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                map.push(v);
                extend(h, n, map, used, out);
                map.pop();
                used[v] = false;
            }
        }
    }
    let mut out = BTreeSet::new();
    if h.vertices <= n {
        extend(
            h,
            n,
            &mut Vec::with_capacity(h.vertices),
            &mut vec![false; n],
            &mut out,
        );
    }
    out
}

fn subgraph_count(graph: &Graph, vertices: usize, p: f64) -> Result<EventFamily<f64>> {
    let coords = vertices * vertices.saturating_sub(1) / 2;
    if coords > MAX_COORDS {
        return Err(Error::Generator(format!(
            "K_{vertices} has {coords} edges; at most {MAX_COORDS} supported"
        )));
    }
    ProbSpec::Fixed(p).check()?;
    let mut masks: Vec<u128> = subgraph_copies(graph, vertices).into_iter().collect();
    masks.sort_unstable_by_key(|&m| (m.count_ones(), m));
    let events = masks
        .into_iter()
        .map(|m| UpSet::principal(CoordSet(m)))
        .collect();
    EventFamily::new(ProductSpace::uniform(coords, p)?, events)
}

fn threshold(
    coords: usize,
    events: usize,
    r: usize,
    quota: Option<usize>,
    p: ProbSpec,
    rng: &mut ChaCha8Rng,
) -> Result<EventFamily<f64>> {
    p.check()?;
    let quota = quota.unwrap_or(r / 2 + 1);
    if r == 0 || r > coords || coords > MAX_COORDS {
        return Err(Error::Generator(format!(
            "need 0 < r = {r} <= coords = {coords} <= {MAX_COORDS}"
        )));
    }
    if quota > r {
        return Err(Error::Generator(format!("quota {quota} exceeds r = {r}")));
    }
    let probs = p.draw(coords, rng);
    let mut family = Vec::with_capacity(events);
    for _ in 0..events {
        let mut chosen: Vec<usize> = if r == coords {
            (0..coords).collect()
        } else {
            sample(rng, coords, r).into_vec()
        };
        chosen.sort_unstable();
        let minsets = k_subsets(&chosen, quota);
        family.push(UpSet::canonicalize(coords, minsets)?);
    }
    EventFamily::new(ProductSpace::new(probs)?, family)
}

fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<usize>> = k_subsets(&items[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, items[0]);
            s
        })
        .collect();
    with.extend(k_subsets(&items[1..], k));
    with
}

fn random_dnf(
    coords: usize,
    events: usize,
    (min_sets, max_sets): (usize, usize),
    (min_size, max_size): (usize, usize),
    p: ProbSpec,
    rng: &mut ChaCha8Rng,
) -> Result<EventFamily<f64>> {
    p.check()?;
    if coords == 0 || coords > MAX_COORDS {
        return Err(Error::Generator(format!(
            "coords must be in 1..={MAX_COORDS}"
        )));
    }
    if min_sets == 0 || min_sets > max_sets {
        return Err(Error::Generator(format!(
            "bad min-set count range {min_sets}..={max_sets}"
        )));
    }
    if min_size == 0 || min_size > max_size || max_size > coords {
        return Err(Error::Generator(format!(
            "bad min-set size range {min_size}..={max_size} for {coords} coords"
        )));
    }
    let probs = p.draw(coords, rng);
    let mut family = Vec::with_capacity(events);
    for _ in 0..events {
        let count = rng.gen_range(min_sets..=max_sets);
        let mut minsets = Vec::with_capacity(count);
        for _ in 0..count {
            let size = rng.gen_range(min_size..=max_size);
            minsets.push(sample(rng, coords, size).into_vec());
        }
        family.push(UpSet::canonicalize(coords, minsets)?);
    }
    EventFamily::new(ProductSpace::new(probs)?, family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::write_instance;

    #[test]
    fn k4_triangles() {
        let kind = FamilyKind::SubgraphCount {
            graph: Graph::parse("triangle").unwrap(),
            vertices: 4,
            p: 0.5,
        };
        let inst = generate(&kind, 0).unwrap();
        assert_eq!(inst.family.space().n(), 6);
        assert_eq!(inst.family.len(), 4);
        let sets: Vec<Vec<usize>> = inst
            .family
            .events()
            .iter()
            .map(|e| e.minset_indices()[0].clone())
            .collect();
        assert_eq!(
            sets,
            vec![vec![0, 1, 3], vec![0, 2, 4], vec![1, 2, 5], vec![3, 4, 5]]
        );
    }

    #[test]
    fn copy_counts() {
        // n!/(n-v)! / |Aut(H)|
        assert_eq!(subgraph_copies(&Graph::clique(3), 6).len(), 20);
        assert_eq!(subgraph_copies(&Graph::cycle(4), 5).len(), 15);
        assert_eq!(subgraph_copies(&Graph::path(2), 4).len(), 12);
        assert_eq!(subgraph_copies(&Graph::clique(4), 6).len(), 15);
        assert_eq!(subgraph_copies(&Graph::star(3), 5).len(), 20);
        assert!(subgraph_copies(&Graph::clique(4), 3).is_empty());
    }

    #[test]
    fn edge_indexing() {
        assert_eq!(edge_index(4, 0, 1), 0);
        assert_eq!(edge_index(4, 2, 3), 5);
        assert_eq!(edge_index(5, 3, 1), 5);
        let n = 7;
        let all: BTreeSet<usize> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| edge_index(n, a, b)))
            .collect();
        assert_eq!(all, (0..21).collect());
    }

    #[test]
    fn graph_specs() {
        assert_eq!(Graph::parse("k3").unwrap(), Graph::clique(3));
        assert_eq!(Graph::parse("0-1,1-2,2-0").unwrap().edges.len(), 3);
        assert_eq!(Graph::parse("p2").unwrap().vertices, 3);
        assert!(Graph::parse("c2").is_err());
        assert!(Graph::parse("blob").is_err());
        assert!(Graph::parse("0-0").is_err());
    }

    #[test]
    fn majority_of_three() {
        let kind = FamilyKind::Threshold {
            coords: 3,
            events: 1,
            r: 3,
            quota: None,
            p: ProbSpec::Fixed(0.5),
        };
        let inst = generate(&kind, 1).unwrap();
        assert_eq!(
            inst.family.event(0).minset_indices(),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert!(!inst.family.event(0).is_principal());
    }

    #[test]
    fn random_dnf_is_deterministic() {
        let kind = FamilyKind::RandomMonotoneDnf {
            coords: 12,
            events: 5,
            minsets: (1, 3),
            minset_size: (1, 4),
            p: ProbSpec::Uniform(0.1, 0.9),
        };
        let a = write_instance(&generate(&kind, 99).unwrap());
        let b = write_instance(&generate(&kind, 99).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, write_instance(&generate(&kind, 100).unwrap()));
    }

    #[test]
    fn infeasible_params() {
        let bad = FamilyKind::Threshold {
            coords: 2,
            events: 1,
            r: 3,
            quota: None,
            p: ProbSpec::Fixed(0.5),
        };
        assert!(generate(&bad, 0).is_err());
        let bad = FamilyKind::SubgraphCount {
            graph: Graph::clique(3),
            vertices: 17,
            p: 0.5,
        };
        assert!(generate(&bad, 0).is_err());
        let bad = FamilyKind::RandomMonotoneDnf {
            coords: 4,
            events: 1,
            minsets: (2, 1),
            minset_size: (1, 1),
            p: ProbSpec::Fixed(0.5),
        };
        assert!(generate(&bad, 0).is_err());
        let bad = FamilyKind::SubgraphCount {
            graph: Graph::clique(3),
            vertices: 4,
            p: 1.5,
        };
        assert!(generate(&bad, 0).is_err());
    }
}
