//! Stabilizer-induced subgraphs and labeled automorphisms.
//!
//! A subgraph holds the variables of one to three `H_X` rows, the `H_Z`
//! checks touching at least two of them, and the monomial labels inherited
//! from the code. A pattern `E` on the support (the symmetric difference of
//! the row supports) is harmful under a coloring when
//!
//! * `E` has half the support and no lighter error differs from it by a
//!   combination of the generators (so it is a minimum-weight member of its
//!   local degeneracy class), and
//! * some automorphism preserving node types, check syndromes and the
//!   coloring maps `E` onto its complement `F`.
//!
//! Counts are reported as unordered pairs `{E, F}`.

pub mod search;
mod shapes;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{Block, GBCode, TannerGraph};
use crate::gf2::BitVector;
use search::{count_automorphisms, find_isomorphism, nontrivial_automorphism, ColoredGraph};

pub use shapes::{
    find_generator_combinations, generic_realization, induced_subgraph, is_proper, realize,
    synthetic_config_graph, Elem, GeneratorCombination, Realization,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("pattern error: {0}")]
    Pattern(String),
}

/// Labels an automorphism must preserve besides node type and syndrome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coloring {
    None,
    Block,
    Edge,
}

impl Coloring {
    pub const ALL: [Coloring; 3] = [Coloring::None, Coloring::Block, Coloring::Edge];

    pub fn as_str(self) -> &'static str {
        match self {
            Coloring::None => "none",
            Coloring::Block => "block",
            Coloring::Edge => "edge",
        }
    }
}

/// How one to three generators are glued.
///
/// Triples are described by how many of their three shared variables lie in
/// block A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Single,
    PairSharedA,
    PairSharedB,
    Triple { shared_in_a: u8 },
}

impl Shape {
    pub const TRIPLE_AAA: Shape = Shape::Triple { shared_in_a: 3 };
    pub const TRIPLE_AAB: Shape = Shape::Triple { shared_in_a: 2 };
    pub const TRIPLE_ABB: Shape = Shape::Triple { shared_in_a: 1 };
    pub const TRIPLE_BBB: Shape = Shape::Triple { shared_in_a: 0 };

    pub const ALL: [Shape; 7] = [
        Shape::Single,
        Shape::PairSharedA,
        Shape::PairSharedB,
        Shape::TRIPLE_AAA,
        Shape::TRIPLE_AAB,
        Shape::TRIPLE_ABB,
        Shape::TRIPLE_BBB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Single => "single",
            Shape::PairSharedA => "pair_shared_A",
            Shape::PairSharedB => "pair_shared_B",
            Shape::Triple { shared_in_a: 3 } => "triple_AAA",
            Shape::Triple { shared_in_a: 2 } => "triple_AAB",
            Shape::Triple { shared_in_a: 1 } => "triple_ABB",
            Shape::Triple { .. } => "triple_BBB",
        }
    }

    pub fn from_name(s: &str) -> Option<Shape> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name().eq_ignore_ascii_case(s))
    }

    /// The same shape with blocks A and B exchanged.
    pub fn swap_sides(self) -> Shape {
        match self {
            Shape::Single => Shape::Single,
            Shape::PairSharedA => Shape::PairSharedB,
            Shape::PairSharedB => Shape::PairSharedA,
            Shape::Triple { shared_in_a } => Shape::Triple {
                shared_in_a: 3 - shared_in_a,
            },
        }
    }

    pub fn generators(self) -> usize {
        match self {
            Shape::Single => 1,
            Shape::PairSharedA | Shape::PairSharedB => 2,
            Shape::Triple { .. } => 3,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Shape {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// A shape together with the generator side sizes `(m, n)`: `m` variables
/// in block A and `n` in block B per generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct StabilizerConfig {
    pub shape: Shape,
    pub m: usize,
    pub n: usize,
}

impl StabilizerConfig {
    pub fn new(shape: Shape, m: usize, n: usize) -> Self {
        Self { shape, m, n }
    }
}

/// Subgraph of the `H_Z` Tanner graph spanned by one or more generators.
#[derive(Debug, Clone)]
pub struct LabeledSubgraph {
    /// Variables, checks, blocks and edge classes.
    pub graph: TannerGraph,
    /// Variables in an odd number of generators, ascending.
    pub support: Vec<usize>,
    /// Variables shared by two generators, ascending.
    pub anchors: Vec<usize>,
    /// Variables of each generator.
    pub generators: Vec<Vec<usize>>,
    /// Code column of each variable, or a synthetic id.
    pub origin: Vec<usize>,
    pub m: usize,
    pub n: usize,
}

impl LabeledSubgraph {
    pub(crate) fn from_parts(
        graph: TannerGraph,
        generators: Vec<Vec<usize>>,
        origin: Vec<usize>,
        m: usize,
        n: usize,
    ) -> Self {
        let mut mult = vec![0usize; graph.num_vars()];
        for g in &generators {
            for &v in g {
                mult[v] += 1;
            }
        }
        let support = (0..graph.num_vars())
            .filter(|&v| mult[v] % 2 == 1)
            .collect();
        let anchors = (0..graph.num_vars())
            .filter(|&v| mult[v] > 0 && mult[v].is_multiple_of(2))
            .collect();
        Self {
            graph,
            support,
            anchors,
            generators,
            origin,
            m,
            n,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.graph.num_vars()
    }

    pub fn num_checks(&self) -> usize {
        self.graph.num_checks()
    }

    /// Syndrome bits of a variable set on the subgraph's checks.
    pub fn syndrome_of(&self, vars: &[usize]) -> Vec<bool> {
        let mut s = vec![false; self.num_checks()];
        for &v in vars {
            for &e in self.graph.var_edges(v) {
                s[self.graph.edge_check(e)] ^= true;
            }
        }
        s
    }

    fn generator_masks(&self) -> Vec<u64> {
        self.generators
            .iter()
            .map(|g| g.iter().fold(0u64, |acc, &v| acc | 1 << v))
            .collect()
    }

    /// Nonzero combinations of the generator supports as bit masks.
    fn span_masks(&self) -> Vec<u64> {
        let gens = self.generator_masks();
        (1u32..1 << gens.len())
            .map(|sel| {
                gens.iter()
                    .enumerate()
                    .filter(|(i, _)| sel >> i & 1 == 1)
                    .fold(0, |acc, (_, m)| acc ^ m)
            })
            .collect()
    }
}

/// Precomputed adjacency for pattern searches under one coloring.
struct PatternSearch<'a> {
    g: &'a LabeledSubgraph,
    coloring: Coloring,
    adj: Arc<Vec<Vec<(usize, u32)>>>,
}

impl<'a> PatternSearch<'a> {
    fn new(g: &'a LabeledSubgraph, coloring: Coloring) -> Self {
        let nv = g.num_vars();
        let t = &g.graph;
        let mut adj = vec![Vec::new(); nv + t.num_checks()];
        for e in 0..t.num_edges() {
            let (v, c) = (t.edge_var(e), nv + t.edge_check(e));
            let lab = match coloring {
                Coloring::Edge => t.edge_class(e) as u32,
                _ => 0,
            };
            adj[v].push((c, lab));
            adj[c].push((v, lab));
        }
        Self {
            g,
            coloring,
            adj: Arc::new(adj),
        }
    }

    /// Colors for a graph in which `marked` variables are distinguished and
    /// checks carry `syndrome` (when given).
    fn colored(&self, marked: &[usize], syndrome: Option<&[bool]>) -> ColoredGraph {
        let nv = self.g.num_vars();
        let mut color = vec![0u64; self.adj.len()];
        for (v, col) in color.iter_mut().enumerate().take(nv) {
            if self.coloring == Coloring::Block && self.g.graph.block(v) == Block::B {
                *col |= 4;
            }
        }
        for &v in marked {
            color[v] |= 2;
        }
        for c in 0..self.g.num_checks() {
            color[nv + c] = 1 | if syndrome.is_some_and(|s| s[c]) { 8 } else { 0 };
        }
        ColoredGraph {
            adj: (*self.adj).clone(),
            color,
        }
    }

    fn map_pattern(&self, e: &[usize]) -> Option<Vec<usize>> {
        let f = complement(&self.g.support, e);
        let s = self.g.syndrome_of(e);
        let a = self.colored(e, Some(&s));
        let b = self.colored(&f, Some(&s));
        find_isomorphism(&a, &b)
    }
}

fn complement(support: &[usize], e: &[usize]) -> Vec<usize> {
    support.iter().copied().filter(|v| !e.contains(v)).collect()
}

fn check_pattern(g: &LabeledSubgraph, e: &[usize]) -> Result<(), SymmetryError> {
    if e.iter().any(|v| !g.support.contains(v)) {
        return Err(SymmetryError::Pattern("pattern leaves the support".into()));
    }
    let mut sorted = e.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != e.len() {
        return Err(SymmetryError::Pattern("pattern repeats a variable".into()));
    }
    if 2 * e.len() != g.support.len() {
        return Err(SymmetryError::Pattern(format!(
            "|E| = {} but |F| = {}",
            e.len(),
            g.support.len() - e.len()
        )));
    }
    Ok(())
}

/// Search for an automorphism mapping `e` onto its complement in the
/// support. The witness is a permutation of the subgraph's nodes, variables
/// first and then checks.
pub fn automorphism_map_exists(
    g: &LabeledSubgraph,
    e: &[usize],
    coloring: Coloring,
) -> Result<Option<Vec<usize>>, SymmetryError> {
    check_pattern(g, e)?;
    Ok(PatternSearch::new(g, coloring).map_pattern(e))
}

/// Check a witness mechanically: adjacency, labels, syndrome and `E -> F`.
pub fn verify_witness(
    g: &LabeledSubgraph,
    e: &[usize],
    coloring: Coloring,
    witness: &[usize],
) -> bool {
    let ps = PatternSearch::new(g, coloring);
    let s = g.syndrome_of(e);
    let f = complement(&g.support, e);
    let a = ps.colored(e, Some(&s));
    let b = ps.colored(&f, Some(&s));
    if !a.is_isomorphism(&b, witness) {
        return false;
    }
    let mut image: Vec<usize> = e.iter().map(|&v| witness[v]).collect();
    image.sort_unstable();
    image == f
}

/// Closed-form condition for a single subdivided `K_{m,n}` and a pattern
/// with `x` variables in block A and `y` in block B.
pub fn single_pattern_condition(
    m: usize,
    n: usize,
    x: usize,
    y: usize,
    coloring: Coloring,
) -> bool {
    let balanced = 2 * x == m && 2 * y == n;
    match coloring {
        Coloring::None if m == n => x + y == m,
        Coloring::None | Coloring::Block => balanced,
        Coloring::Edge => false,
    }
}

/// Harmful pairs of a subgraph under one coloring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmfulCount {
    pub pairs: usize,
    /// One pattern `E` per pair: the member containing the first support
    /// variable.
    pub representatives: Vec<Vec<usize>>,
}

/// Count harmful pairs by exhaustive search over half-support patterns.
pub fn count_harmful(g: &LabeledSubgraph, coloring: Coloring) -> HarmfulCount {
    assert!(g.num_vars() <= 64, "subgraphs are limited to 64 variables");
    let s = &g.support;
    if s.is_empty() || s.len() % 2 == 1 {
        return HarmfulCount {
            pairs: 0,
            representatives: Vec::new(),
        };
    }
    let half = s.len() / 2;
    let span = g.span_masks();
    // each pair {E, F} has exactly one member containing s[0]
    let rest = &s[1..];
    let mut patterns = Vec::new();
    for_each_subset(rest, half - 1, &mut |sub| {
        let mut e = Vec::with_capacity(half);
        e.push(s[0]);
        e.extend_from_slice(sub);
        patterns.push(e);
    });
    let ps = PatternSearch::new(g, coloring);
    let harmful: Vec<Vec<usize>> = patterns
        .into_par_iter()
        .filter(|e| {
            let mask = e.iter().fold(0u64, |acc, &v| acc | 1 << v);
            let w = e.len() as u32;
            span.iter().all(|&t| (mask ^ t).count_ones() >= w) && ps.map_pattern(e).is_some()
        })
        .collect();
    HarmfulCount {
        pairs: harmful.len(),
        representatives: harmful,
    }
}

fn for_each_subset(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in 0..items.len() {
            if items.len() - i < need {
                break;
            }
            cur.push(items[i]);
            rec(&items[i + 1..], k, cur, f);
            cur.pop();
        }
    }
    rec(items, k, &mut Vec::with_capacity(k), f);
}

/// Whether the subgraph has no nontrivial automorphism preserving node types
/// and the labels of `coloring`.
pub fn is_rigid(g: &LabeledSubgraph, coloring: Coloring) -> bool {
    let ps = PatternSearch::new(g, coloring);
    nontrivial_automorphism(&ps.colored(&[], None)).is_none()
}

/// Rigidity under per-monomial edge labels.
pub fn verify_edge_rigidity(g: &LabeledSubgraph) -> bool {
    is_rigid(g, Coloring::Edge)
}

/// Size of the automorphism group under a coloring, counted up to `cap`.
pub fn automorphism_count(g: &LabeledSubgraph, coloring: Coloring, cap: usize) -> usize {
    let ps = PatternSearch::new(g, coloring);
    count_automorphisms(&ps.colored(&[], None), cap)
}

/// A harmful pattern embedded in a code.
#[derive(Debug, Clone)]
pub struct PatternInstance {
    pub shape: Shape,
    pub rows: Vec<usize>,
    pub error: BitVector,
    pub syndrome: BitVector,
}

/// Embed the harmful patterns of each generator combination into the code.
pub fn harmful_pattern_instances(
    code: &GBCode,
    combos: &[GeneratorCombination],
    coloring: Coloring,
) -> Result<Vec<PatternInstance>, SymmetryError> {
    let mut out = Vec::new();
    for combo in combos {
        let g = induced_subgraph(code, &combo.rows)?;
        for e in count_harmful(&g, coloring).representatives {
            let error = BitVector::from_support(code.n, e.iter().map(|&v| g.origin[v]));
            let syndrome = code.h_z.syndrome(&error).expect("error has code length");
            out.push(PatternInstance {
                shape: combo.shape,
                rows: combo.rows.clone(),
                error,
                syndrome,
            });
        }
    }
    Ok(out)
}

/// Table shapes in a code's own orientation: a code with more A- than
/// B-monomials sees every column with the blocks exchanged.
pub fn table_shapes(num_a: usize, num_b: usize) -> Vec<Shape> {
    TABLE_COLUMNS
        .iter()
        .map(|&(_, s)| if num_a > num_b { s.swap_sides() } else { s })
        .collect()
}

/// Harmful instances of a code restricted to the table's shapes.
pub fn table_pattern_instances(
    code: &GBCode,
    coloring: Coloring,
) -> Result<Vec<PatternInstance>, SymmetryError> {
    let shapes = table_shapes(code.num_a(), code.num_b());
    let combos: Vec<_> = find_generator_combinations(code)
        .into_iter()
        .filter(|c| shapes.contains(&c.shape))
        .collect();
    harmful_pattern_instances(code, &combos, coloring)
}

/// Column headings of the harmful-configuration table and the shape each
/// one is evaluated on, for generators with `m <= n`.
///
/// The first 6-cycle column holds the composition with one shared variable
/// in block A and two in block B. The literal all-A gluing is reported
/// separately; for `(m, n) = (2, 4)` it needs a 3-torsion relation between
/// the two A-monomials.
pub const TABLE_COLUMNS: [(&str, Shape); 5] = [
    ("Single", Shape::Single),
    ("2-gen shared A", Shape::PairSharedA),
    ("2-gen shared B", Shape::PairSharedB),
    ("6-cycle (A,A,A)", Shape::TRIPLE_ABB),
    ("6-cycle (A,A,B)", Shape::TRIPLE_AAB),
];

/// How generators are glued beyond their shared variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gluing {
    /// Only the shared variables (and the closing relation of a triple).
    Generic,
    /// Additionally check `(A1, B0)` of generator 0 coincides with check
    /// `(A0, B2)` of the first partner for which the configuration stays
    /// proper, falling back to the mirrored `(A0, B1) ~ (A2, B0)`.
    /// Weight-eight codes such as the `[[180,10]]` A5 code show such a
    /// coincidence on their overlapping generator pairs.
    CoincidentCheck,
}

impl Gluing {
    pub fn as_str(self) -> &'static str {
        match self {
            Gluing::Generic => "generic",
            Gluing::CoincidentCheck => "coincident_check",
        }
    }
}

/// Realization of a configuration under a gluing.
pub fn glued_realization(
    cfg: &StabilizerConfig,
    gluing: Gluing,
) -> Result<Realization, SymmetryError> {
    let base = generic_realization(cfg)?;
    let k = base.positions.len();
    if gluing == Gluing::Generic || k == 1 {
        return Ok(base);
    }
    if cfg.m < 2 || cfg.n < 3 {
        return Err(SymmetryError::Shape(format!(
            "{} gluing needs m >= 2 and n >= 3",
            gluing.as_str()
        )));
    }
    let checks = base
        .graph()
        .map(|g| g.num_checks())
        .ok_or_else(|| SymmetryError::Shape(format!("{} collapses", cfg.shape)))?;
    // (A1, B0) ~ (A0, B2), or its mirror when that one collides
    let mirror = cfg.n >= 2 && cfg.m >= 3;
    (1..k)
        .map(|h| base.with_coincidence(0, 1, 0, h, 0, 2))
        .chain(
            (1..k)
                .filter(|_| mirror)
                .map(|h| base.with_coincidence(0, 0, 1, h, 2, 0)),
        )
        .find(|r| {
            r.graph()
                .is_some_and(|g| is_proper(&g, k) && g.num_checks() + 1 == checks)
        })
        .ok_or_else(|| SymmetryError::Shape(format!("{} admits no coincident check", cfg.shape)))
}

/// Abstract subgraph of a configuration under a gluing.
pub fn glued_config_graph(
    cfg: &StabilizerConfig,
    gluing: Gluing,
) -> Result<LabeledSubgraph, SymmetryError> {
    glued_realization(cfg, gluing)?
        .graph()
        .ok_or_else(|| SymmetryError::Shape(format!("{} collapses", cfg.shape)))
}

/// A row family of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableFamily {
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub gluing: Gluing,
}

pub const TABLE_FAMILIES: [TableFamily; 3] = [
    TableFamily {
        name: "K3,3",
        m: 3,
        n: 3,
        gluing: Gluing::Generic,
    },
    TableFamily {
        name: "K2,4",
        m: 2,
        n: 4,
        gluing: Gluing::Generic,
    },
    TableFamily {
        name: "K4,4",
        m: 4,
        n: 4,
        gluing: Gluing::CoincidentCheck,
    },
];

/// Counts for every shape and coloring of one family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyCounts {
    pub m: usize,
    pub n: usize,
    pub gluing: Gluing,
    /// `(shape, coloring, pairs)`; shapes that cannot be realized are absent.
    pub counts: Vec<(Shape, Coloring, usize)>,
}

impl FamilyCounts {
    pub fn get(&self, shape: Shape, coloring: Coloring) -> Option<usize> {
        self.counts
            .iter()
            .find(|(s, c, _)| *s == shape && *c == coloring)
            .map(|t| t.2)
    }
}

/// Brute-force counts on synthetic graphs for the given shapes.
pub fn family_counts(m: usize, n: usize, gluing: Gluing, shapes: &[Shape]) -> FamilyCounts {
    let mut counts = Vec::new();
    for &shape in shapes {
        let Ok(g) = glued_config_graph(&StabilizerConfig::new(shape, m, n), gluing) else {
            continue;
        };
        for coloring in Coloring::ALL {
            counts.push((shape, coloring, count_harmful(&g, coloring).pairs));
        }
    }
    FamilyCounts {
        m,
        n,
        gluing,
        counts,
    }
}
