//! Construction of generator configurations, either abstractly or from a
//! code.
//!
//! Abstract configurations are realized in the free abelian group on the
//! `m + n` monomials, modulo the single relation a 6-cycle of generators
//! imposes. Variable `r + e_i` is the A-node of generator `r` for monomial
//! `i`, and a check `c` joins A-node `u` when `c - u` is a B-monomial and
//! B-node `w` when `c - w` is an A-monomial, exactly as in a code.

use std::collections::{BTreeMap, HashMap};

use super::{LabeledSubgraph, Shape, StabilizerConfig, SymmetryError};
use crate::code::{Block, CheckSide, GBCode, TannerGraph};

/// A group element as integer coordinates over the monomials.
pub type Elem = Vec<i64>;

/// `Z^dim` modulo a lattice of relations, kept as an integer row echelon
/// basis with positive pivots. Reducing each pivot coordinate into
/// `[0, pivot)` in turn gives a unique representative per coset.
struct Quotient {
    basis: Vec<(usize, Elem)>,
}

impl Quotient {
    fn new(relations: &[Elem]) -> Self {
        let mut rows: Vec<Elem> = relations
            .iter()
            .filter(|r| r.iter().any(|&x| x != 0))
            .cloned()
            .collect();
        let dim = relations.first().map_or(0, Vec::len);
        let mut basis = Vec::new();
        for col in 0..dim {
            // Euclid on column `col` across the remaining rows
            loop {
                rows.retain(|r| r.iter().any(|&x| x != 0));
                let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if nz.len() <= 1 {
                    break;
                }
                nz.sort_by_key(|&i| rows[i][col].abs());
                let p = nz[0];
                let pivot = rows[p].clone();
                for &i in &nz[1..] {
                    let q = rows[i][col].div_euclid(pivot[col]);
                    for (x, y) in rows[i].iter_mut().zip(&pivot) {
                        *x -= q * y;
                    }
                }
            }
            if let Some(i) = rows.iter().position(|r| r[col] != 0) {
                let mut r = rows.remove(i);
                if r[col] < 0 {
                    r.iter_mut().for_each(|x| *x = -*x);
                }
                basis.push((col, r));
            }
        }
        Self { basis }
    }

    fn canon(&self, mut x: Elem) -> Elem {
        for (p, r) in &self.basis {
            let q = x[*p].div_euclid(r[*p]);
            for (xi, ri) in x.iter_mut().zip(r) {
                *xi -= q * ri;
            }
        }
        x
    }
}

fn unit(dim: usize, i: usize) -> Elem {
    let mut e = vec![0; dim];
    e[i] = 1;
    e
}

fn add(a: &[i64], b: &[i64]) -> Elem {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Elem {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Realize generators at `positions` in `Z^{m+n}` modulo `relations`,
/// coordinates `0..m` standing for the A-monomials and `m..m+n` for the
/// B-monomials. Returns `None` when a generator's own variables collide.
pub fn realize(
    m: usize,
    n: usize,
    positions: &[Elem],
    relations: &[Elem],
) -> Option<LabeledSubgraph> {
    let dim = m + n;
    let q = Quotient::new(relations);
    let mut var_index: HashMap<(Block, Elem), usize> = HashMap::new();
    let mut var_key: Vec<(Block, Elem)> = Vec::new();
    let mut generators = Vec::new();
    for r in positions {
        let mut gen = Vec::with_capacity(dim);
        for k in 0..dim {
            let block = if k < m { Block::A } else { Block::B };
            let key = (block, q.canon(add(r, &unit(dim, k))));
            let idx = *var_index.entry(key.clone()).or_insert_with(|| {
                var_key.push(key);
                var_key.len() - 1
            });
            if gen.contains(&idx) {
                return None;
            }
            gen.push(idx);
        }
        generators.push(gen);
    }
    // candidate checks with their (variable, class) neighbours
    let mut checks: BTreeMap<Elem, Vec<(usize, usize)>> = BTreeMap::new();
    for (v, (block, x)) in var_key.iter().enumerate() {
        // the class of an edge is the monomial joining variable and check
        let offsets = match block {
            Block::A => m..dim,
            Block::B => 0..m,
        };
        for k in offsets {
            let c = q.canon(add(x, &unit(dim, k)));
            let list = checks.entry(c).or_default();
            if !list.iter().any(|&(u, _)| u == v) {
                list.push((v, k));
            }
        }
    }
    let mut edges = Vec::new();
    let mut nc = 0;
    for list in checks.values().filter(|l| l.len() >= 2) {
        for &(v, class) in list {
            edges.push((v, nc, class));
        }
        nc += 1;
    }
    let blocks = var_key.iter().map(|(b, _)| *b).collect();
    let nv = var_key.len();
    let graph = TannerGraph::new(nv, nc, &edges, blocks, dim).ok()?;
    Some(LabeledSubgraph::from_parts(
        graph,
        generators,
        (0..nv).collect(),
        m,
        n,
    ))
}

/// Whether generators pairwise share exactly one variable, and the shared
/// variables are distinct.
fn pairwise_single(g: &LabeledSubgraph) -> Option<Vec<usize>> {
    let k = g.generators.len();
    let mut shared = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let common: Vec<usize> = g.generators[i]
                .iter()
                .copied()
                .filter(|v| g.generators[j].contains(v))
                .collect();
            if common.len() != 1 || shared.contains(&common[0]) {
                return None;
            }
            shared.push(common[0]);
        }
    }
    Some(shared)
}

/// Generator positions and relations of an abstract configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub m: usize,
    pub n: usize,
    pub positions: Vec<Elem>,
    pub relations: Vec<Elem>,
}

impl Realization {
    pub fn graph(&self) -> Option<LabeledSubgraph> {
        realize(self.m, self.n, &self.positions, &self.relations)
    }

    /// Add the relation that makes check `(i, j)` of generator `g` (joining
    /// its A-node `i` and B-node `j`) coincide with check `(k, l)` of
    /// generator `h`.
    pub fn with_coincidence(
        &self,
        g: usize,
        i: usize,
        j: usize,
        h: usize,
        k: usize,
        l: usize,
    ) -> Self {
        let dim = self.m + self.n;
        let cg = add(
            &self.positions[g],
            &add(&unit(dim, i), &unit(dim, self.m + j)),
        );
        let ch = add(
            &self.positions[h],
            &add(&unit(dim, k), &unit(dim, self.m + l)),
        );
        let mut out = self.clone();
        out.relations.push(sub(&cg, &ch));
        out
    }
}

/// Generic abstract realization of a configuration.
///
/// Pairs identify A-monomial 0 of the first generator with A-monomial 1 of
/// the second (or the same on the B side) and impose no relation. Triples
/// glue generator pairs `(0,1)`, `(1,2)`, `(2,0)` on sides chosen by the
/// number of shared variables in block A; the closing condition is the only
/// relation. Among the valid index choices a relation-free gluing is
/// preferred, then one whose quotient is torsion free, then any.
pub fn generic_realization(cfg: &StabilizerConfig) -> Result<Realization, SymmetryError> {
    let (m, n) = (cfg.m, cfg.n);
    let dim = m + n;
    if m == 0 || n == 0 {
        return Err(SymmetryError::Shape("side sizes must be positive".into()));
    }
    let zero = vec![0; dim];
    let side_ok = |s: usize| if s == 0 { m >= 2 } else { n >= 2 };
    let make = |positions: Vec<Elem>, relations: Vec<Elem>| Realization {
        m,
        n,
        positions,
        relations,
    };
    let pair = |s: usize| -> Result<Realization, SymmetryError> {
        if !side_ok(s) {
            return Err(SymmetryError::Shape(format!(
                "{} needs two monomials on that side",
                cfg.shape
            )));
        }
        let off = if s == 0 { 0 } else { m };
        let r1 = sub(&unit(dim, off), &unit(dim, off + 1));
        Ok(make(vec![zero.clone(), r1], Vec::new()))
    };
    let real = match cfg.shape {
        Shape::Single => make(vec![zero.clone()], Vec::new()),
        Shape::PairSharedA => pair(0)?,
        Shape::PairSharedB => pair(1)?,
        Shape::Triple { shared_in_a } => {
            if shared_in_a > 3 {
                return Err(SymmetryError::Shape(
                    "at most three shared variables".into(),
                ));
            }
            // sides of the shared variables of pairs (0,1), (1,2), (2,0)
            let sides: Vec<usize> = (0..3)
                .map(|i| usize::from(i >= shared_in_a as usize))
                .collect();
            if sides.iter().any(|&s| !side_ok(s)) {
                return Err(SymmetryError::Shape(format!(
                    "{} needs two monomials on each gluing side",
                    cfg.shape
                )));
            }
            let size = |s: usize| if s == 0 { m } else { n };
            let idx = |s: usize, i: usize| if s == 0 { i } else { m + i };
            let mut best: Option<(u8, Realization)> = None;
            let ranges = [sides[0], sides[0], sides[1], sides[1], sides[2], sides[2]].map(size);
            let mut t = [0usize; 6];
            'outer: loop {
                let [a, b, c, d, e, f] = t;
                let r1 = sub(&unit(dim, idx(sides[0], a)), &unit(dim, idx(sides[0], b)));
                let r2 = add(
                    &r1,
                    &sub(&unit(dim, idx(sides[1], c)), &unit(dim, idx(sides[1], d))),
                );
                let rel = add(
                    &r2,
                    &sub(&unit(dim, idx(sides[2], e)), &unit(dim, idx(sides[2], f))),
                );
                let kind = if rel.iter().all(|&x| x == 0) {
                    0
                } else if rel.iter().fold(0, |acc, &x| gcd(acc, x)) == 1 {
                    1
                } else {
                    2
                };
                if best.as_ref().is_none_or(|(k, _)| kind < *k) {
                    let cand = make(vec![zero.clone(), r1, r2], vec![rel]);
                    if cand.graph().is_some_and(|g| is_proper(&g, 3)) {
                        best = Some((kind, cand));
                        if kind == 0 {
                            break 'outer;
                        }
                    }
                }
                // advance the mixed-radix counter
                let mut i = 5;
                loop {
                    t[i] += 1;
                    if t[i] < ranges[i] {
                        break;
                    }
                    t[i] = 0;
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                }
            }
            best.map(|(_, r)| r)
                .ok_or_else(|| SymmetryError::Shape(format!("{} has no valid gluing", cfg.shape)))?
        }
    };
    Ok(real)
}

/// Distinct generators that pairwise share exactly one variable, each pair a
/// different one.
pub fn is_proper(g: &LabeledSubgraph, generators: usize) -> bool {
    g.generators.len() == generators && distinct_rows(g) && pairwise_single(g).is_some()
}

/// Build the generic abstract subgraph of a configuration.
pub fn synthetic_config_graph(cfg: &StabilizerConfig) -> Result<LabeledSubgraph, SymmetryError> {
    generic_realization(cfg)?
        .graph()
        .ok_or_else(|| SymmetryError::Shape(format!("{} collapses", cfg.shape)))
}

fn distinct_rows(g: &LabeledSubgraph) -> bool {
    let mut sets: Vec<Vec<usize>> = g
        .generators
        .iter()
        .map(|x| {
            let mut s = x.clone();
            s.sort_unstable();
            s
        })
        .collect();
    sets.sort();
    sets.dedup();
    sets.len() == g.generators.len()
}

/// A set of `H_X` rows forming one of the supported shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorCombination {
    pub rows: Vec<usize>,
    pub shape: Shape,
    /// Shared columns, for pairs `(0,1)` and for triples `(0,1), (1,2), (0,2)`.
    pub shared: Vec<usize>,
}

fn intersection(code: &GBCode, r: usize, s: usize) -> Vec<usize> {
    let a = code.h_x.row_support(r);
    let b = code.h_x.row_support(s);
    a.into_iter().filter(|x| b.contains(x)).collect()
}

fn classify(code: &GBCode, rows: &[usize]) -> Result<(Shape, Vec<usize>), SymmetryError> {
    let mut shared = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let common = intersection(code, rows[i], rows[j]);
            if common.len() != 1 || shared.contains(&common[0]) {
                return Err(SymmetryError::Shape(format!(
                    "rows {} and {} share {} columns",
                    rows[i],
                    rows[j],
                    common.len()
                )));
            }
            shared.push(common[0]);
        }
    }
    let in_a = shared.iter().filter(|&&c| c < code.half).count();
    let shape = match rows.len() {
        1 => Shape::Single,
        2 if in_a == 1 => Shape::PairSharedA,
        2 => Shape::PairSharedB,
        3 => Shape::Triple {
            shared_in_a: in_a as u8,
        },
        k => return Err(SymmetryError::Shape(format!("{k} rows are not supported"))),
    };
    Ok((shape, shared))
}

/// Subgraph of the code's `H_Z` Tanner graph spanned by `rows` of `H_X`.
pub fn induced_subgraph(code: &GBCode, rows: &[usize]) -> Result<LabeledSubgraph, SymmetryError> {
    if rows.is_empty() || rows.iter().any(|&r| r >= code.h_x.rows()) {
        return Err(SymmetryError::Shape("row index out of range".into()));
    }
    classify(code, rows)?;
    let generators_cols: Vec<Vec<usize>> = rows.iter().map(|&r| code.h_x.row_support(r)).collect();
    let mut cols: Vec<usize> = generators_cols.concat();
    cols.sort_unstable();
    cols.dedup();
    let local: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let zg = code.tanner_graph(CheckSide::Z);
    let mut checks: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &col) in cols.iter().enumerate() {
        for &e in zg.var_edges(col) {
            checks
                .entry(zg.edge_check(e))
                .or_default()
                .push((i, zg.edge_class(e)));
        }
    }
    let mut edges = Vec::new();
    let mut nc = 0;
    for list in checks.values().filter(|l| l.len() >= 2) {
        for &(v, class) in list {
            edges.push((v, nc, class));
        }
        nc += 1;
    }
    let blocks = cols
        .iter()
        .map(|&c| if c < code.half { Block::A } else { Block::B })
        .collect();
    let graph = TannerGraph::new(cols.len(), nc, &edges, blocks, code.num_classes())
        .map_err(|e| SymmetryError::Shape(e.to_string()))?;
    let generators = generators_cols
        .iter()
        .map(|g| g.iter().map(|c| local[c]).collect())
        .collect();
    Ok(LabeledSubgraph::from_parts(
        graph,
        generators,
        cols,
        code.num_a(),
        code.num_b(),
    ))
}

/// Pairs and triples of `H_X` rows pairwise sharing exactly one column, one
/// representative per orbit of the code's translation group.
pub fn find_generator_combinations(code: &GBCode) -> Vec<GeneratorCombination> {
    let rows = code.h_x.rows();
    let single_overlap = |r: usize, s: usize| intersection(code, r, s).len() == 1;
    let mut out = vec![GeneratorCombination {
        rows: vec![0],
        shape: Shape::Single,
        shared: Vec::new(),
    }];
    let push = |out: &mut Vec<GeneratorCombination>, rs: Vec<usize>| {
        if let Ok((shape, shared)) = classify(code, &rs) {
            out.push(GeneratorCombination {
                rows: rs,
                shape,
                shared,
            });
        }
    };
    match code.group() {
        Some(grp) => {
            // every orbit meets row 0
            let nbrs: Vec<usize> = (1..rows).filter(|&r| single_overlap(0, r)).collect();
            for &r in &nbrs {
                if r <= grp.neg(r) {
                    push(&mut out, vec![0, r]);
                }
            }
            for (i, &r1) in nbrs.iter().enumerate() {
                for &r2 in &nbrs[i + 1..] {
                    if !single_overlap(r1, r2) {
                        continue;
                    }
                    let canon = |t: usize| {
                        let mut v = vec![grp.sub(0, t), grp.sub(r1, t), grp.sub(r2, t)];
                        v.sort_unstable();
                        v
                    };
                    let own = vec![0, r1, r2];
                    if canon(r1) >= own && canon(r2) >= own {
                        push(&mut out, own);
                    }
                }
            }
        }
        None => {
            for r in 0..rows {
                for s in r + 1..rows {
                    if !single_overlap(r, s) {
                        continue;
                    }
                    push(&mut out, vec![r, s]);
                    for t in s + 1..rows {
                        if single_overlap(r, t) && single_overlap(s, t) {
                            push(&mut out, vec![r, s, t]);
                        }
                    }
                }
            }
        }
    }
    out
}
