//! Isomorphism search between vertex- and edge-colored graphs that share a
//! vertex set, by joint color refinement and individualization.
//!
//! Both graphs are refined together so that color ids mean the same thing
//! on each side. A vertex of the first graph in the smallest non-singleton
//! cell is then individualized against every candidate in the matching cell
//! of the second graph, and the search recurses.

use std::collections::HashMap;

/// Undirected graph with vertex colors and edge labels.
#[derive(Debug, Clone)]
pub struct ColoredGraph {
    pub adj: Vec<Vec<(usize, u32)>>,
    pub color: Vec<u64>,
}

impl ColoredGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Whether `map` sends `self` onto `other` preserving colors and labels.
    pub fn is_isomorphism(&self, other: &ColoredGraph, map: &[usize]) -> bool {
        let n = self.len();
        if other.len() != n || map.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &w in map {
            if w >= n || seen[w] {
                return false;
            }
            seen[w] = true;
        }
        for v in 0..n {
            if self.color[v] != other.color[map[v]] || self.adj[v].len() != other.adj[map[v]].len()
            {
                return false;
            }
            for &(u, lab) in &self.adj[v] {
                if !other.adj[map[v]].contains(&(map[u], lab)) {
                    return false;
                }
            }
        }
        true
    }
}

type Cells = Vec<u32>;

/// Refine both colorings jointly to the coarsest stable partition.
/// Returns false when the color histograms disagree.
fn refine(a: &ColoredGraph, ca: &mut Cells, b: &ColoredGraph, cb: &mut Cells) -> bool {
    let n = a.len();
    let mut classes = count_classes(ca);
    loop {
        let sig = |g: &ColoredGraph, c: &Cells, v: usize| -> Vec<u64> {
            let mut nb: Vec<u64> = g.adj[v]
                .iter()
                .map(|&(u, lab)| ((lab as u64) << 32) | c[u] as u64)
                .collect();
            nb.sort_unstable();
            let mut s = Vec::with_capacity(nb.len() + 1);
            s.push(c[v] as u64);
            s.extend(nb);
            s
        };
        let sa: Vec<Vec<u64>> = (0..n).map(|v| sig(a, ca, v)).collect();
        let sb: Vec<Vec<u64>> = (0..n).map(|v| sig(b, cb, v)).collect();
        let mut all: Vec<&Vec<u64>> = sa.iter().chain(sb.iter()).collect();
        all.sort_unstable();
        all.dedup();
        let ids: HashMap<&Vec<u64>, u32> = all
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, i as u32))
            .collect();
        let mut hist = vec![0i64; all.len()];
        for v in 0..n {
            ca[v] = ids[&sa[v]];
            cb[v] = ids[&sb[v]];
            hist[ca[v] as usize] += 1;
            hist[cb[v] as usize] -= 1;
        }
        if hist.iter().any(|&h| h != 0) {
            return false;
        }
        let now = all.len();
        if now == classes {
            return true;
        }
        classes = now;
    }
}

fn count_classes(c: &Cells) -> usize {
    let mut v = c.clone();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn initial_cells(a: &ColoredGraph, b: &ColoredGraph) -> Option<(Cells, Cells)> {
    let mut all: Vec<u64> = a.color.iter().chain(b.color.iter()).copied().collect();
    all.sort_unstable();
    all.dedup();
    let id = |c: &u64| all.binary_search(c).unwrap() as u32;
    let ca: Cells = a.color.iter().map(id).collect();
    let cb: Cells = b.color.iter().map(id).collect();
    let mut ha = ca.clone();
    let mut hb = cb.clone();
    ha.sort_unstable();
    hb.sort_unstable();
    (ha == hb).then_some((ca, cb))
}

/// Walk the search tree, calling `found` on every isomorphism. The callback
/// returns false to stop. Returns false if stopped early.
fn search(
    a: &ColoredGraph,
    b: &ColoredGraph,
    mut ca: Cells,
    mut cb: Cells,
    found: &mut dyn FnMut(Vec<usize>) -> bool,
) -> bool {
    if !refine(a, &mut ca, b, &mut cb) {
        return true;
    }
    let n = a.len();
    let mut size: HashMap<u32, usize> = HashMap::new();
    for &c in &ca {
        *size.entry(c).or_default() += 1;
    }
    let target = size
        .iter()
        .filter(|&(_, &s)| s > 1)
        .min_by_key(|&(&c, &s)| (s, c))
        .map(|(&c, _)| c);
    let Some(cell) = target else {
        let mut pos = vec![usize::MAX; size.len() + n];
        for w in 0..n {
            pos[cb[w] as usize] = w;
        }
        let map: Vec<usize> = (0..n).map(|v| pos[ca[v] as usize]).collect();
        if a.is_isomorphism(b, &map) {
            return found(map);
        }
        return true;
    };
    let v = (0..n).find(|&v| ca[v] == cell).unwrap();
    let fresh = (n + size.len()) as u32;
    for w in (0..n).filter(|&w| cb[w] == cell) {
        let mut na = ca.clone();
        let mut nb = cb.clone();
        na[v] = fresh;
        nb[w] = fresh;
        if !search(a, b, na, nb, found) {
            return false;
        }
    }
    true
}

/// Some isomorphism from `a` to `b`, if one exists.
pub fn find_isomorphism(a: &ColoredGraph, b: &ColoredGraph) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let (ca, cb) = initial_cells(a, b)?;
    let mut result = None;
    search(a, b, ca, cb, &mut |m| {
        result = Some(m);
        false
    });
    result
}

/// Number of automorphisms of `g`, counting at most `cap`.
pub fn count_automorphisms(g: &ColoredGraph, cap: usize) -> usize {
    let (ca, cb) = initial_cells(g, g).expect("a graph matches itself");
    let mut count = 0;
    search(g, g, ca, cb, &mut |_| {
        count += 1;
        count < cap
    });
    count
}

/// A non-identity automorphism of `g`, if any.
pub fn nontrivial_automorphism(g: &ColoredGraph) -> Option<Vec<usize>> {
    let (ca, cb) = initial_cells(g, g)?;
    let mut result = None;
    search(g, g, ca, cb, &mut |m| {
        if m.iter().enumerate().any(|(i, &j)| i != j) {
            result = Some(m);
            false
        } else {
            true
        }
    });
    result
}
