//! Message equality along automorphism orbits.
//!
//! If a node permutation preserves adjacency, node types and the syndrome,
//! and the decoder treats every edge it permutes alike, then each message
//! equals the message on the image edge at every iteration. The check below
//! runs the decoder without early stopping and compares bit patterns.

use serde::Serialize;

use crate::code::TannerGraph;
use crate::decoder::{DecoderConfig, DecoderError, MinSum};
use crate::gf2::BitVector;
use crate::symmetry::{
    automorphism_map_exists, synthetic_config_graph, Coloring, LabeledSubgraph, Shape,
    StabilizerConfig, SymmetryError,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivarianceReport {
    pub iterations: usize,
    pub edges: usize,
    /// First iteration (1-based) at which some message differs from its
    /// image.
    pub first_violation: Option<usize>,
}

impl EquivarianceReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Image of every edge under a node permutation listing variables first and
/// then checks. Fails when the permutation does not preserve adjacency.
pub fn edge_permutation(graph: &TannerGraph, node_perm: &[usize]) -> Option<Vec<usize>> {
    let nv = graph.num_vars();
    if node_perm.len() != nv + graph.num_checks() {
        return None;
    }
    (0..graph.num_edges())
        .map(|e| {
            let v = node_perm[graph.edge_var(e)];
            let c = node_perm[nv + graph.edge_check(e)].checked_sub(nv)?;
            if v >= nv {
                return None;
            }
            graph.edge_between(v, c)
        })
        .collect()
}

/// Run `iters` iterations on syndrome `s` and compare each message with the
/// message on its image edge after every iteration.
pub fn check_equivariance(
    graph: &TannerGraph,
    cfg: &DecoderConfig,
    s: &BitVector,
    node_perm: &[usize],
    iters: usize,
) -> Result<EquivarianceReport, DecoderError> {
    let perm = edge_permutation(graph, node_perm)
        .ok_or_else(|| DecoderError::Config("permutation is not a graph automorphism".into()))?;
    let dec = MinSum::new(graph, &cfg.clone().with_early_stop(false))?;
    let mut state = dec.init(s)?;
    let same = |x: &[f64]| {
        perm.iter()
            .enumerate()
            .all(|(e, &p)| x[e].to_bits() == x[p].to_bits())
    };
    let mut first_violation = None;
    for it in 1..=iters {
        dec.iterate(&mut state, s);
        if !(same(&state.mu) && same(&state.nu)) {
            first_violation = Some(it);
            break;
        }
    }
    Ok(EquivarianceReport {
        iterations: iters,
        edges: graph.num_edges(),
        first_violation,
    })
}

/// A subdivided `K_{m,n}` with a pattern and an automorphism carrying the
/// pattern onto its complement while fixing the syndrome.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub graph: LabeledSubgraph,
    pub pattern: Vec<usize>,
    pub syndrome: BitVector,
    pub automorphism: Vec<usize>,
}

/// Fixture whose pattern holds the first `x` block-A and the first `y`
/// block-B variables; the automorphism preserves `coloring`. `None` when no
/// such automorphism exists.
pub fn fixture(
    m: usize,
    n: usize,
    x: usize,
    y: usize,
    coloring: Coloring,
) -> Result<Option<Fixture>, SymmetryError> {
    let graph = synthetic_config_graph(&StabilizerConfig::new(Shape::Single, m, n))?;
    if x > m || y > n {
        return Err(SymmetryError::Pattern(format!(
            "({x}, {y}) exceeds ({m}, {n})"
        )));
    }
    // synthetic singles list the A variables first
    let pattern: Vec<usize> = (0..x).chain(m..m + y).collect();
    let Some(automorphism) = automorphism_map_exists(&graph, &pattern, coloring)? else {
        return Ok(None);
    };
    let bits = graph.syndrome_of(&pattern);
    let syndrome = BitVector::from_bits(&bits.iter().map(|&b| u8::from(b)).collect::<Vec<_>>())
        .expect("subgraph has checks");
    Ok(Some(Fixture {
        graph,
        pattern,
        syndrome,
        automorphism,
    }))
}

impl Fixture {
    /// Whether the automorphism exchanges the two variable blocks.
    pub fn swaps_sides(&self) -> bool {
        let t = &self.graph.graph;
        (0..t.num_vars()).any(|v| t.block(v) != t.block(self.automorphism[v]))
    }

    pub fn check(
        &self,
        cfg: &DecoderConfig,
        iters: usize,
    ) -> Result<EquivarianceReport, DecoderError> {
        check_equivariance(
            &self.graph.graph,
            cfg,
            &self.syndrome,
            &self.automorphism,
            iters,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_always_equivariant() {
        let f = fixture(3, 3, 2, 1, Coloring::None).unwrap().unwrap();
        let id: Vec<usize> = (0..f.automorphism.len()).collect();
        let cfg = DecoderConfig::edge(0.05, 10, vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        let r = check_equivariance(&f.graph.graph, &cfg, &f.syndrome, &id, 10).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn non_automorphism_rejected() {
        let f = fixture(3, 3, 2, 1, Coloring::None).unwrap().unwrap();
        let mut p: Vec<usize> = (0..f.automorphism.len()).collect();
        // swap a variable with a check
        p.swap(0, 6);
        assert!(edge_permutation(&f.graph.graph, &p).is_none());
    }

    #[test]
    fn block_coloring_has_no_odd_fixture() {
        assert!(fixture(3, 3, 2, 1, Coloring::Block).unwrap().is_none());
    }
}
