//! Generalized bicycle codes built from commuting shift polynomials.
//!
//! A code is described by two lists of monomials over an abelian group,
//! either `Z_l` (circulant) or `Z_lx x Z_ly` (bivariate). Each monomial is a
//! permutation matrix; `A` and `B` are their sums, `H_X = [A B]` and
//! `H_Z = [B^T A^T]`.
//!
//! Edge classes are numbered from zero: classes `0..m` belong to the
//! A-monomials and `m..m+n` to the B-monomials, in the order listed.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, BitVector, Echelon, Gf2Error};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid code spec: {0}")]
    Spec(String),
    #[error("A and B do not commute")]
    Commutation,
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
}

/// The abelian group indexing rows and columns of each circulant block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    Cyclic { l: usize },
    Product { lx: usize, ly: usize },
}

impl Group {
    pub fn order(&self) -> usize {
        match *self {
            Group::Cyclic { l } => l,
            Group::Product { lx, ly } => lx * ly,
        }
    }

    /// Flat index of the element with coordinates `(a, b)`.
    pub fn index(&self, a: usize, b: usize) -> usize {
        match *self {
            Group::Cyclic { .. } => a,
            Group::Product { ly, .. } => a * ly + b,
        }
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        match *self {
            Group::Cyclic { .. } => (i, 0),
            Group::Product { ly, .. } => (i / ly, i % ly),
        }
    }

    pub fn add(&self, i: usize, j: usize) -> usize {
        match *self {
            Group::Cyclic { l } => (i + j) % l,
            Group::Product { lx, ly } => {
                let (a, b) = self.coords(i);
                let (c, d) = self.coords(j);
                ((a + c) % lx) * ly + (b + d) % ly
            }
        }
    }

    pub fn neg(&self, i: usize) -> usize {
        match *self {
            Group::Cyclic { l } => (l - i) % l,
            Group::Product { lx, ly } => {
                let (a, b) = self.coords(i);
                ((lx - a) % lx) * ly + (ly - b) % ly
            }
        }
    }

    pub fn sub(&self, i: usize, j: usize) -> usize {
        self.add(i, self.neg(j))
    }
}

/// A single shift term `x^a` or `x^a y^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub a: usize,
    pub b: usize,
}

impl Monomial {
    pub fn x(a: usize) -> Self {
        Self { a, b: 0 }
    }

    pub fn xy(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    fn in_range(&self, group: Group) -> bool {
        match group {
            Group::Cyclic { l } => self.a < l && self.b == 0,
            Group::Product { lx, ly } => self.a < lx && self.b < ly,
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{}y^{}", self.a, self.b)
    }
}

/// Description of a code: either monomial lists over a group or explicit
/// square matrices (used for ad-hoc checks; each matrix is one class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSpecKind {
    Group {
        group: Group,
        a: Vec<Monomial>,
        b: Vec<Monomial>,
    },
    Dense {
        a: BitMatrix,
        b: BitMatrix,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GBCodeSpec {
    pub name: String,
    pub kind: CodeSpecKind,
    pub claimed: Option<Vec<usize>>,
    pub source: Option<String>,
}

impl GBCodeSpec {
    pub fn circulant(name: &str, l: usize, a: &[usize], b: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            kind: CodeSpecKind::Group {
                group: Group::Cyclic { l },
                a: a.iter().map(|&e| Monomial::x(e)).collect(),
                b: b.iter().map(|&e| Monomial::x(e)).collect(),
            },
            claimed: None,
            source: None,
        }
    }

    pub fn bivariate(
        name: &str,
        lx: usize,
        ly: usize,
        a: &[(usize, usize)],
        b: &[(usize, usize)],
    ) -> Self {
        Self {
            name: name.to_string(),
            kind: CodeSpecKind::Group {
                group: Group::Product { lx, ly },
                a: a.iter().map(|&(x, y)| Monomial::xy(x, y)).collect(),
                b: b.iter().map(|&(x, y)| Monomial::xy(x, y)).collect(),
            },
            claimed: None,
            source: None,
        }
    }

    fn validate(&self) -> Result<(), CodeError> {
        match &self.kind {
            CodeSpecKind::Group { group, a, b } => {
                if group.order() == 0 {
                    return Err(CodeError::Spec("group order must be positive".into()));
                }
                for (label, list) in [("a_monomials", a), ("b_monomials", b)] {
                    if list.is_empty() {
                        return Err(CodeError::Spec(format!("{label} is empty")));
                    }
                    for (i, m) in list.iter().enumerate() {
                        if !m.in_range(*group) {
                            return Err(CodeError::Spec(format!(
                                "{label}[{i}] = {m} out of range for {group:?}"
                            )));
                        }
                        if list[..i].contains(m) {
                            return Err(CodeError::Spec(format!(
                                "{label} contains duplicate monomial {m}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            CodeSpecKind::Dense { a, b } => {
                if a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() {
                    return Err(CodeError::Spec(
                        "dense A and B must be square of equal size".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Permutation matrix of a monomial: entry `(i, i + mono)` is one.
pub fn shift_matrix(group: Group, mono: Monomial) -> Result<BitMatrix, CodeError> {
    if group.order() == 0 || !mono.in_range(group) {
        return Err(CodeError::Spec(format!(
            "monomial {mono} out of range for {group:?}"
        )));
    }
    let size = group.order();
    let t = group.index(mono.a, mono.b);
    let mut m = BitMatrix::zeros(size, size);
    for i in 0..size {
        m.set(i, group.add(i, t), true);
    }
    Ok(m)
}

/// Which parity-check matrix a Tanner graph is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckSide {
    X,
    Z,
}

/// A realized code.
#[derive(Debug, Clone)]
pub struct GBCode {
    pub spec: GBCodeSpec,
    pub a: BitMatrix,
    pub b: BitMatrix,
    pub h_x: BitMatrix,
    pub h_z: BitMatrix,
    /// Block size `l` (half the blocklength).
    pub half: usize,
    pub n: usize,
    pub k: usize,
    pub rank_hx: usize,
    pub rank_hz: usize,
    a_terms: Vec<BitMatrix>,
    b_terms: Vec<BitMatrix>,
    hx_echelon: Echelon,
    hz_echelon: Echelon,
}

impl GBCode {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Number of A-monomials (`m`).
    pub fn num_a(&self) -> usize {
        self.a_terms.len()
    }

    /// Number of B-monomials.
    pub fn num_b(&self) -> usize {
        self.b_terms.len()
    }

    pub fn num_classes(&self) -> usize {
        self.a_terms.len() + self.b_terms.len()
    }

    /// Group structure, when the code was built from monomials.
    pub fn group(&self) -> Option<Group> {
        match self.spec.kind {
            CodeSpecKind::Group { group, .. } => Some(group),
            CodeSpecKind::Dense { .. } => None,
        }
    }

    /// Cached echelon form of `H_X` (the X stabilizer group).
    pub fn hx_echelon(&self) -> &Echelon {
        &self.hx_echelon
    }

    pub fn hz_echelon(&self) -> &Echelon {
        &self.hz_echelon
    }

    /// Class of the nonzero `H_Z` entry at `(check, var)`.
    pub fn z_edge_class(&self, check: usize, var: usize) -> Option<usize> {
        if var < self.half {
            // B^T block: B_j[var, check]
            self.b_terms
                .iter()
                .position(|t| t.get(var, check))
                .map(|j| self.a_terms.len() + j)
        } else {
            self.a_terms
                .iter()
                .position(|t| t.get(var - self.half, check))
        }
    }

    /// Class of the nonzero `H_X` entry at `(row, var)`.
    pub fn x_edge_class(&self, row: usize, var: usize) -> Option<usize> {
        if var < self.half {
            self.a_terms.iter().position(|t| t.get(row, var))
        } else {
            self.b_terms
                .iter()
                .position(|t| t.get(row, var - self.half))
                .map(|j| self.a_terms.len() + j)
        }
    }

    /// Translate a variable index by the group element `t`.
    pub fn translate_var(&self, var: usize, t: usize) -> usize {
        let g = self.group().expect("translation needs a group code");
        if var < self.half {
            g.add(var, t)
        } else {
            self.half + g.add(var - self.half, t)
        }
    }

    pub fn tanner_graph(&self, side: CheckSide) -> TannerGraph {
        let (h, class): (&BitMatrix, Box<dyn Fn(usize, usize) -> Option<usize>>) = match side {
            CheckSide::X => (&self.h_x, Box::new(|c, v| self.x_edge_class(c, v))),
            CheckSide::Z => (&self.h_z, Box::new(|c, v| self.z_edge_class(c, v))),
        };
        let mut edges = Vec::with_capacity(h.count_ones());
        for c in 0..h.rows() {
            for v in h.row_support(c) {
                let k = class(c, v).expect("every nonzero entry has a class");
                edges.push((v, c, k));
            }
        }
        let blocks = (0..self.n)
            .map(|v| if v < self.half { Block::A } else { Block::B })
            .collect();
        TannerGraph::new(self.n, h.rows(), &edges, blocks, self.num_classes())
            .expect("code matrices give a valid graph")
    }
}

/// Build a code from its spec.
pub fn build_code(spec: GBCodeSpec) -> Result<GBCode, CodeError> {
    spec.validate()?;
    let (a_terms, b_terms) = match &spec.kind {
        CodeSpecKind::Group { group, a, b } => (
            a.iter()
                .map(|&m| shift_matrix(*group, m))
                .collect::<Result<Vec<_>, _>>()?,
            b.iter()
                .map(|&m| shift_matrix(*group, m))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        CodeSpecKind::Dense { a, b } => (vec![a.clone()], vec![b.clone()]),
    };
    let sum = |terms: &[BitMatrix]| -> Result<BitMatrix, CodeError> {
        let mut acc = terms[0].clone();
        for t in &terms[1..] {
            acc = acc.add(t)?;
        }
        Ok(acc)
    };
    let a = sum(&a_terms)?;
    let b = sum(&b_terms)?;
    if a.mat_mul(&b)? != b.mat_mul(&a)? {
        return Err(CodeError::Commutation);
    }
    // distinct permutation terms never overlap; guard against dense input
    if a.count_ones() != a_terms.iter().map(BitMatrix::count_ones).sum::<usize>()
        || b.count_ones() != b_terms.iter().map(BitMatrix::count_ones).sum::<usize>()
    {
        return Err(CodeError::Spec("monomial terms overlap".into()));
    }
    let h_x = a.hstack(&b)?;
    let h_z = b.transpose().hstack(&a.transpose())?;
    let half = a.rows();
    let n = 2 * half;
    let hx_echelon = h_x.echelon();
    let hz_echelon = h_z.echelon();
    let rank_hx = hx_echelon.rank();
    let rank_hz = hz_echelon.rank();
    Ok(GBCode {
        spec,
        a,
        b,
        h_x,
        h_z,
        half,
        n,
        k: n - rank_hx - rank_hz,
        rank_hx,
        rank_hz,
        a_terms,
        b_terms,
        hx_echelon,
        hz_echelon,
    })
}

/// Variable block label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    A,
    B,
}

impl Block {
    pub fn index(self) -> usize {
        match self {
            Block::A => 0,
            Block::B => 1,
        }
    }
}

/// Bipartite graph with per-variable block labels and per-edge classes.
///
/// Edges are numbered in the order given at construction. Adjacency is kept
/// as edge-id lists per node.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    num_vars: usize,
    num_checks: usize,
    edge_var: Vec<usize>,
    edge_check: Vec<usize>,
    edge_class: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
    blocks: Vec<Block>,
    num_classes: usize,
}

impl TannerGraph {
    /// Build from `(var, check, class)` triples.
    pub fn new(
        num_vars: usize,
        num_checks: usize,
        edges: &[(usize, usize, usize)],
        blocks: Vec<Block>,
        num_classes: usize,
    ) -> Result<Self, CodeError> {
        if blocks.len() != num_vars {
            return Err(CodeError::Spec(format!(
                "{} block labels for {num_vars} variables",
                blocks.len()
            )));
        }
        let mut var_edges = vec![Vec::new(); num_vars];
        let mut check_edges = vec![Vec::new(); num_checks];
        for (e, &(v, c, k)) in edges.iter().enumerate() {
            if v >= num_vars || c >= num_checks || k >= num_classes.max(1) {
                return Err(CodeError::Spec(format!(
                    "edge {e} = {:?} out of range",
                    (v, c, k)
                )));
            }
            if var_edges[v].iter().any(|&f: &usize| edges[f].1 == c) {
                return Err(CodeError::Spec(format!("duplicate edge ({v},{c})")));
            }
            var_edges[v].push(e);
            check_edges[c].push(e);
        }
        Ok(Self {
            num_vars,
            num_checks,
            edge_var: edges.iter().map(|e| e.0).collect(),
            edge_check: edges.iter().map(|e| e.1).collect(),
            edge_class: edges.iter().map(|e| e.2).collect(),
            var_edges,
            check_edges,
            blocks,
            num_classes: num_classes.max(1),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    #[inline]
    pub fn edge_check(&self, e: usize) -> usize {
        self.edge_check[e]
    }

    #[inline]
    pub fn edge_class(&self, e: usize) -> usize {
        self.edge_class[e]
    }

    #[inline]
    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[v]
    }

    #[inline]
    pub fn check_edges(&self, c: usize) -> &[usize] {
        &self.check_edges[c]
    }

    #[inline]
    pub fn block(&self, v: usize) -> Block {
        self.blocks[v]
    }

    /// Edge id joining `v` and `c`, if adjacent.
    pub fn edge_between(&self, v: usize, c: usize) -> Option<usize> {
        self.var_edges[v]
            .iter()
            .copied()
            .find(|&e| self.edge_check[e] == c)
    }

    /// Syndrome of `e` on this graph's checks.
    pub fn syndrome(&self, e: &BitVector) -> Result<BitVector, Gf2Error> {
        if e.len() != self.num_vars {
            return Err(Gf2Error::Shape {
                op: "graph syndrome",
                expected: self.num_vars,
                found: e.len(),
            });
        }
        let mut s = BitVector::zeros(self.num_checks.max(1));
        for c in 0..self.num_checks {
            let parity = self.check_edges[c]
                .iter()
                .filter(|&&ed| e.get(self.edge_var[ed]))
                .count()
                % 2;
            s.set(c, parity == 1);
        }
        Ok(s)
    }
}

/// Length of the shortest cycle, or `None` for a forest.
pub fn girth(g: &TannerGraph) -> Option<usize> {
    // nodes 0..V are variables, V..V+C checks
    let nv = g.num_vars();
    let total = nv + g.num_checks();
    let neighbours = |x: usize| -> Vec<usize> {
        if x < nv {
            g.var_edges(x)
                .iter()
                .map(|&e| nv + g.edge_check(e))
                .collect()
        } else {
            g.check_edges(x - nv)
                .iter()
                .map(|&e| g.edge_var(e))
                .collect()
        }
    };
    let adj: Vec<Vec<usize>> = (0..total).map(neighbours).collect();
    let mut best: Option<usize> = None;
    let mut dist = vec![usize::MAX; total];
    let mut parent = vec![usize::MAX; total];
    for root in 0..total {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[root] = 0;
        parent[root] = usize::MAX;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if let Some(b) = best {
                if 2 * dist[u] >= b {
                    break;
                }
            }
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if parent[u] != w {
                    let len = dist[u] + dist[w] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

/// Result of an exhaustive distance search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Distance {
    /// The code encodes no logical qubits.
    Undefined,
    Exact(usize),
    /// No logical operator of weight up to the limit exists.
    AboveLimit(usize),
}

/// Minimum weight of a vector in `ker(H_Z)` outside `rowspace(H_X)`
/// (`CheckSide::Z`), or the symmetric quantity with the roles exchanged.
pub fn brute_force_distance(code: &GBCode, limit: usize, side: CheckSide) -> Distance {
    if code.k == 0 {
        return Distance::Undefined;
    }
    let (checks, stabs) = match side {
        CheckSide::Z => (&code.h_z, code.hx_echelon()),
        CheckSide::X => (&code.h_x, code.hz_echelon()),
    };
    let n = code.n;
    for w in 1..=limit.min(n) {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            let v = BitVector::from_support(n, idx.iter().copied());
            if checks.syndrome(&v).expect("length n").is_zero()
                && !stabs.contains(&v).expect("length n")
            {
                return Distance::Exact(w);
            }
            // next combination
            let mut i = w;
            while i > 0 && idx[i - 1] == n - w + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..w {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Distance::AboveLimit(limit)
}

/// One monomial as written in a code file: an exponent or a pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MonomialEntry {
    Exp(i64),
    Pair([i64; 2]),
}

/// On-disk code description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ly: Option<usize>,
    #[serde(default)]
    pub a_monomials: Vec<MonomialEntry>,
    #[serde(default)]
    pub b_monomials: Vec<MonomialEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_params: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn reduce(e: i64, modulus: usize) -> usize {
    e.rem_euclid(modulus as i64) as usize
}

impl CodeFile {
    pub fn into_spec(self) -> Result<GBCodeSpec, CodeError> {
        let kind = match self.kind.as_str() {
            "circulant" => {
                let l = self
                    .l
                    .filter(|&l| l > 0)
                    .ok_or_else(|| CodeError::Spec("circulant code needs l > 0".into()))?;
                let conv = |list: &[MonomialEntry]| -> Result<Vec<Monomial>, CodeError> {
                    list.iter()
                        .map(|m| match *m {
                            MonomialEntry::Exp(e) => Ok(Monomial::x(reduce(e, l))),
                            MonomialEntry::Pair(_) => Err(CodeError::Spec(
                                "circulant monomials are single exponents".into(),
                            )),
                        })
                        .collect()
                };
                CodeSpecKind::Group {
                    group: Group::Cyclic { l },
                    a: conv(&self.a_monomials)?,
                    b: conv(&self.b_monomials)?,
                }
            }
            "bivariate" => {
                let (lx, ly) = match (self.lx, self.ly) {
                    (Some(x), Some(y)) if x > 0 && y > 0 => (x, y),
                    _ => return Err(CodeError::Spec("bivariate code needs lx, ly > 0".into())),
                };
                let conv = |list: &[MonomialEntry]| -> Result<Vec<Monomial>, CodeError> {
                    list.iter()
                        .map(|m| match *m {
                            MonomialEntry::Pair([a, b]) => {
                                Ok(Monomial::xy(reduce(a, lx), reduce(b, ly)))
                            }
                            MonomialEntry::Exp(_) => Err(CodeError::Spec(
                                "bivariate monomials are [a, b] pairs".into(),
                            )),
                        })
                        .collect()
                };
                CodeSpecKind::Group {
                    group: Group::Product { lx, ly },
                    a: conv(&self.a_monomials)?,
                    b: conv(&self.b_monomials)?,
                }
            }
            "dense" => {
                let get = |m: Option<Vec<Vec<u8>>>, which: &str| {
                    m.ok_or_else(|| CodeError::Spec(format!("dense code needs {which}")))
                        .and_then(|rows| BitMatrix::from_rows(&rows).map_err(CodeError::from))
                };
                CodeSpecKind::Dense {
                    a: get(self.a_matrix, "a_matrix")?,
                    b: get(self.b_matrix, "b_matrix")?,
                }
            }
            other => return Err(CodeError::Spec(format!("unknown kind {other:?}"))),
        };
        Ok(GBCodeSpec {
            name: self.name,
            kind,
            claimed: self.claimed_params,
            source: self.source,
        })
    }
}

/// Parse a code description from JSON text. `origin` names the source in
/// error messages.
pub fn parse_code(text: &str, origin: &str) -> Result<GBCodeSpec, CodeError> {
    let file: CodeFile = serde_json::from_str(text).map_err(|e| CodeError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    file.into_spec()
}

/// Read and build a code from a JSON file.
pub fn load_code(path: &Path) -> Result<GBCode, CodeError> {
    let text = std::fs::read_to_string(path).map_err(|source| CodeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    build_code(parse_code(&text, &path.display().to_string())?)
}
