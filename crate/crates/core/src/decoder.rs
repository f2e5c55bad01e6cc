//! Syndrome-based min-sum decoding with a flooding schedule.
//!
//! One engine covers the isotropic, block-anisotropic and edge-anisotropic
//! variants: every edge carries a damping factor `xi` resolved from the
//! configured labeling mode, and the committed variable-to-check message is
//! `xi * nu_tilde + (1 - xi) * nu_prev`.
//!
//! Sums at variable nodes are evaluated over the incoming messages in sorted
//! order, so the result depends only on the multiset of inputs. This keeps
//! messages bitwise identical on automorphism orbits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{Block, GBCode, TannerGraph};
use crate::gf2::{BitVector, Echelon};

pub const DEFAULT_CLIP: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecoderError {
    #[error("invalid decoder config: {0}")]
    Config(String),
    #[error("syndrome has length {found}, graph has {expected} checks")]
    Shape { expected: usize, found: usize },
}

/// How damping factors are keyed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelingMode {
    /// One rule everywhere; all factors are 1.
    #[serde(alias = "none")]
    Isotropic,
    /// One factor per variable block.
    Block,
    /// One factor per monomial edge class.
    Edge,
}

impl LabelingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelingMode::Isotropic => "isotropic",
            LabelingMode::Block => "block",
            LabelingMode::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub alpha: f64,
    pub max_iters: usize,
    pub mode: LabelingMode,
    /// Empty for isotropic, `[xi_A, xi_B]` for block, one entry per class
    /// for edge.
    pub xi: Vec<f64>,
    pub clip: f64,
    pub early_stop: bool,
}

impl DecoderConfig {
    pub fn isotropic(alpha: f64, max_iters: usize) -> Self {
        Self {
            alpha,
            max_iters,
            mode: LabelingMode::Isotropic,
            xi: Vec::new(),
            clip: DEFAULT_CLIP,
            early_stop: true,
        }
    }

    pub fn block(alpha: f64, max_iters: usize, xi_a: f64, xi_b: f64) -> Self {
        Self {
            mode: LabelingMode::Block,
            xi: vec![xi_a, xi_b],
            ..Self::isotropic(alpha, max_iters)
        }
    }

    pub fn edge(alpha: f64, max_iters: usize, xi: Vec<f64>) -> Self {
        Self {
            mode: LabelingMode::Edge,
            xi,
            ..Self::isotropic(alpha, max_iters)
        }
    }

    pub fn with_early_stop(mut self, on: bool) -> Self {
        self.early_stop = on;
        self
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip = clip;
        self
    }

    /// Prior log-likelihood ratio `log((1 - alpha) / alpha)`.
    pub fn lambda(&self) -> f64 {
        ((1.0 - self.alpha) / self.alpha).ln()
    }

    pub fn validate(&self) -> Result<(), DecoderError> {
        let bad = |m: String| Err(DecoderError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad(format!("alpha = {} must lie in (0, 0.5)", self.alpha));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.clip > 0.0) {
            return bad(format!("clip = {} must be positive", self.clip));
        }
        if let Some(x) = self.xi.iter().find(|x| !(0.5..=1.0).contains(*x)) {
            return bad(format!("damping factor {x} outside [0.5, 1]"));
        }
        match self.mode {
            LabelingMode::Isotropic if self.xi.iter().any(|&x| x != 1.0) => {
                bad("isotropic mode takes no damping factors".into())
            }
            LabelingMode::Block if self.xi.len() != 2 => {
                bad(format!("block mode needs 2 factors, got {}", self.xi.len()))
            }
            LabelingMode::Edge if self.xi.is_empty() => bad("edge mode needs factors".into()),
            _ => Ok(()),
        }
    }
}

/// Per-class factors equivalent to a block rule on a code's Z graph, where
/// block-A variables carry B-monomial classes and vice versa.
pub fn block_as_edge_xi(num_a: usize, num_b: usize, xi_a: f64, xi_b: f64) -> Vec<f64> {
    (0..num_a + num_b)
        .map(|k| if k < num_a { xi_b } else { xi_a })
        .collect()
}

/// Message state of one decoding run. All arrays are indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub nu: Vec<f64>,
    pub nu_prev: Vec<f64>,
    pub mu: Vec<f64>,
    pub posterior: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub estimate: BitVector,
    pub converged: bool,
    pub iters_used: usize,
}

/// Classification of `e xor e_hat` after decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualClass {
    Exact,
    DegenerateSuccess,
    LogicalFailure,
    SyndromeMismatch,
}

impl ResidualClass {
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            ResidualClass::LogicalFailure | ResidualClass::SyndromeMismatch
        )
    }
}

/// Stabilizer group used to decide degenerate success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessCriterion {
    /// Residual in the row space of `H_X`.
    #[default]
    StabilizerGroup,
    /// Residual in the row space of the decoding matrix `H_Z`.
    DecodingMatrix,
}

fn classify_with(e: &BitVector, outcome: &DecodeOutcome, stabs: &Echelon) -> ResidualClass {
    if !outcome.converged {
        return ResidualClass::SyndromeMismatch;
    }
    if outcome.estimate == *e {
        return ResidualClass::Exact;
    }
    let residual = e.xor(&outcome.estimate).expect("estimate has code length");
    if stabs.contains(&residual).expect("residual has code length") {
        ResidualClass::DegenerateSuccess
    } else {
        ResidualClass::LogicalFailure
    }
}

pub fn classify_residual(
    e: &BitVector,
    outcome: &DecodeOutcome,
    code: &GBCode,
    criterion: SuccessCriterion,
) -> ResidualClass {
    match criterion {
        SuccessCriterion::StabilizerGroup => classify_with(e, outcome, code.hx_echelon()),
        SuccessCriterion::DecodingMatrix => classify_with(e, outcome, code.hz_echelon()),
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// A min-sum decoder bound to one graph and configuration.
#[derive(Debug, Clone)]
pub struct MinSum<'g> {
    graph: &'g TannerGraph,
    lambda: f64,
    edge_xi: Vec<f64>,
    clip: f64,
    max_iters: usize,
    early_stop: bool,
}

impl<'g> MinSum<'g> {
    pub fn new(graph: &'g TannerGraph, cfg: &DecoderConfig) -> Result<Self, DecoderError> {
        cfg.validate()?;
        let edge_xi = match cfg.mode {
            LabelingMode::Isotropic => vec![1.0; graph.num_edges()],
            LabelingMode::Block => (0..graph.num_edges())
                .map(|e| match graph.block(graph.edge_var(e)) {
                    Block::A => cfg.xi[0],
                    Block::B => cfg.xi[1],
                })
                .collect(),
            LabelingMode::Edge => {
                if cfg.xi.len() != graph.num_classes() {
                    return Err(DecoderError::Config(format!(
                        "edge mode needs {} factors, got {}",
                        graph.num_classes(),
                        cfg.xi.len()
                    )));
                }
                (0..graph.num_edges())
                    .map(|e| cfg.xi[graph.edge_class(e)])
                    .collect()
            }
        };
        Ok(Self {
            graph,
            lambda: cfg.lambda(),
            edge_xi,
            clip: cfg.clip,
            max_iters: cfg.max_iters,
            early_stop: cfg.early_stop,
        })
    }

    pub fn graph(&self) -> &TannerGraph {
        self.graph
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Damping factor resolved for edge `e`.
    pub fn edge_xi(&self, e: usize) -> f64 {
        self.edge_xi[e]
    }

    fn check_len(&self, s: &BitVector) -> Result<(), DecoderError> {
        if s.len() != self.graph.num_checks() {
            return Err(DecoderError::Shape {
                expected: self.graph.num_checks(),
                found: s.len(),
            });
        }
        Ok(())
    }

    /// Initial state: every variable-to-check message equals the prior.
    pub fn init(&self, s: &BitVector) -> Result<DecoderState, DecoderError> {
        self.check_len(s)?;
        let ne = self.graph.num_edges();
        Ok(DecoderState {
            nu: vec![self.lambda; ne],
            nu_prev: vec![self.lambda; ne],
            mu: vec![0.0; ne],
            posterior: vec![self.lambda; self.graph.num_vars()],
            iteration: 0,
        })
    }

    /// Check-node update for every edge.
    pub fn check_update(&self, state: &mut DecoderState, s: &BitVector) {
        let g = self.graph;
        for c in 0..g.num_checks() {
            let edges = g.check_edges(c);
            let mut total_sign = if s.get(c) { -1.0 } else { 1.0 };
            let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for &e in edges {
                let x = state.nu[e];
                total_sign *= sign(x);
                let m = x.abs();
                if m < min1 {
                    min2 = min1;
                    min1 = m;
                    arg = e;
                } else if m < min2 {
                    min2 = m;
                }
            }
            for &e in edges {
                let mag = if e == arg { min2 } else { min1 };
                let mag = if mag.is_finite() { mag } else { self.clip };
                state.mu[e] = total_sign * sign(state.nu[e]) * mag;
            }
        }
    }

    /// Variable-node update: extrinsic sums, damping, clipping, posteriors.
    pub fn var_update(&self, state: &mut DecoderState) {
        let g = self.graph;
        let mut incoming: Vec<(f64, usize)> = Vec::new();
        for v in 0..g.num_vars() {
            incoming.clear();
            incoming.extend(g.var_edges(v).iter().map(|&e| (state.mu[e], e)));
            incoming.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut post = self.lambda;
            for &(x, _) in &incoming {
                post += x;
            }
            state.posterior[v] = post;
            for &(_, e) in &incoming {
                let mut tilde = self.lambda;
                for &(x, f) in &incoming {
                    if f != e {
                        tilde += x;
                    }
                }
                let xi = self.edge_xi[e];
                let prev = state.nu_prev[e];
                let nu = if xi == 1.0 {
                    tilde
                } else {
                    xi * tilde + (1.0 - xi) * prev
                };
                state.nu[e] = nu.clamp(-self.clip, self.clip);
            }
        }
        state.nu_prev.copy_from_slice(&state.nu);
        state.iteration += 1;
    }

    /// Bit is one exactly when the posterior is negative.
    pub fn hard_decision(&self, state: &DecoderState) -> BitVector {
        let n = self.graph.num_vars();
        BitVector::from_support(n, (0..n).filter(|&v| state.posterior[v] < 0.0))
    }

    /// One full flooding iteration.
    pub fn iterate(&self, state: &mut DecoderState, s: &BitVector) {
        self.check_update(state, s);
        self.var_update(state);
    }

    fn matches(&self, est: &BitVector, s: &BitVector) -> bool {
        let g = self.graph;
        (0..g.num_checks()).all(|c| {
            let parity = g
                .check_edges(c)
                .iter()
                .filter(|&&e| est.get(g.edge_var(e)))
                .count()
                % 2
                == 1;
            parity == s.get(c)
        })
    }

    /// Decode a syndrome. The stopping test runs at the top of each
    /// iteration on the previous estimate, and once more after the last.
    pub fn decode(&self, s: &BitVector) -> Result<DecodeOutcome, DecoderError> {
        let mut state = self.init(s)?;
        let mut est = BitVector::zeros(self.graph.num_vars());
        for it in 0..self.max_iters {
            if self.early_stop && self.matches(&est, s) {
                return Ok(DecodeOutcome {
                    estimate: est,
                    converged: true,
                    iters_used: it,
                });
            }
            self.iterate(&mut state, s);
            est = self.hard_decision(&state);
        }
        let converged = self.matches(&est, s);
        Ok(DecodeOutcome {
            estimate: est,
            converged,
            iters_used: self.max_iters,
        })
    }
}

/// Convenience wrapper: build a decoder and run it once.
pub fn decode(
    graph: &TannerGraph,
    s: &BitVector,
    cfg: &DecoderConfig,
) -> Result<DecodeOutcome, DecoderError> {
    MinSum::new(graph, cfg)?.decode(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code, CheckSide, GBCodeSpec};

    fn star(deg: usize) -> TannerGraph {
        // one check joined to `deg` variables
        let edges: Vec<_> = (0..deg).map(|v| (v, 0, 0)).collect();
        TannerGraph::new(deg, 1, &edges, vec![Block::A; deg], 1).unwrap()
    }

    #[test]
    fn init_uses_prior() {
        let g = star(3);
        let d = MinSum::new(&g, &DecoderConfig::isotropic(0.01, 5)).unwrap();
        let st = d.init(&BitVector::zeros(1)).unwrap();
        for &x in &st.nu {
            assert!((x - 99f64.ln()).abs() < 1e-12);
        }
        assert_eq!(st.nu.len(), 3);
        assert!(DecoderConfig::isotropic(0.5, 5).validate().is_err());
        assert!(DecoderConfig::block(0.1, 5, 0.4, 1.0).validate().is_err());
    }

    #[test]
    fn nine_edge_graph_has_nine_messages() {
        let edges: Vec<_> = (0..9).map(|i| (i % 3, i / 3, 0)).collect();
        let g = TannerGraph::new(3, 3, &edges, vec![Block::A; 3], 1).unwrap();
        let d = MinSum::new(&g, &DecoderConfig::isotropic(0.05, 5)).unwrap();
        let st = d.init(&BitVector::zeros(3)).unwrap();
        assert_eq!((st.nu.len(), st.mu.len()), (9, 9));
    }

    #[test]
    fn check_rule_values() {
        let g = star(3);
        let d = MinSum::new(&g, &DecoderConfig::isotropic(0.1, 5)).unwrap();
        for (syn, expect) in [(false, 2.0), (true, -2.0)] {
            let s = BitVector::from_bits(&[syn as u8]).unwrap();
            let mut st = d.init(&s).unwrap();
            st.nu = vec![2.0, 3.0, 7.0];
            d.check_update(&mut st, &s);
            assert_eq!(st.mu[2], expect);
            assert_eq!(st.mu[0], if syn { -3.0 } else { 3.0 });
        }
        let g2 = star(2);
        let d2 = MinSum::new(&g2, &DecoderConfig::isotropic(0.1, 5)).unwrap();
        for syn in [0u8, 1] {
            let s = BitVector::from_bits(&[syn]).unwrap();
            let mut st = d2.init(&s).unwrap();
            st.nu = vec![-5.0, 1.0];
            d2.check_update(&mut st, &s);
            assert_eq!(st.mu[1], if syn == 1 { 5.0 } else { -5.0 });
        }
    }

    #[test]
    fn damping_arithmetic() {
        // one variable with two checks; nu_tilde on edge 0 is lambda + mu_1
        let edges = [(0, 0, 0), (0, 1, 0)];
        let g = TannerGraph::new(1, 2, &edges, vec![Block::A], 1).unwrap();
        let cfg = DecoderConfig::block(0.1, 5, 0.5, 1.0);
        let d = MinSum::new(&g, &cfg).unwrap();
        let mut st = d.init(&BitVector::zeros(2)).unwrap();
        st.mu = vec![0.0, 4.0 - d.lambda()];
        st.nu_prev = vec![2.0, 2.0];
        d.var_update(&mut st);
        assert!((st.nu[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tie_rule() {
        let g = star(2);
        let d = MinSum::new(&g, &DecoderConfig::isotropic(0.1, 5)).unwrap();
        let mut st = d.init(&BitVector::zeros(1)).unwrap();
        st.posterior = vec![0.0, -1e-9];
        assert_eq!(d.hard_decision(&st).to_bits(), vec![0, 1]);
    }

    #[test]
    fn zero_syndrome_stops_at_once() {
        let code = build_code(GBCodeSpec::circulant("toy", 3, &[0, 1], &[0, 2])).unwrap();
        let g = code.tanner_graph(CheckSide::Z);
        let out = decode(
            &g,
            &BitVector::zeros(3),
            &DecoderConfig::isotropic(0.05, 10),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.iters_used, 0);
        assert!(out.estimate.is_zero());
    }

    #[test]
    fn toy_single_errors_stall_symmetrically() {
        // columns j and j+5 mod 6 of the l=3 toy H_Z coincide and differ by a
        // logical operator, so no weight-1 error can be resolved
        let code = build_code(GBCodeSpec::circulant("toy", 3, &[0, 1], &[0, 2])).unwrap();
        let g = code.tanner_graph(CheckSide::Z);
        for j in 0..6 {
            let e = BitVector::unit(6, j);
            let s = code.h_z.syndrome(&e).unwrap();
            let out = decode(&g, &s, &DecoderConfig::isotropic(0.05, 10)).unwrap();
            let class = classify_residual(&e, &out, &code, SuccessCriterion::StabilizerGroup);
            assert_eq!(class, ResidualClass::SyndromeMismatch, "error at {j}");
        }
    }

    #[test]
    fn distance_three_code_corrects_single_errors() {
        let code = build_code(GBCodeSpec::circulant("l9", 9, &[0, 1, 5], &[0, 3])).unwrap();
        let g = code.tanner_graph(CheckSide::Z);
        for j in 0..code.n {
            let e = BitVector::unit(code.n, j);
            let s = code.h_z.syndrome(&e).unwrap();
            let out = decode(&g, &s, &DecoderConfig::isotropic(0.05, 10)).unwrap();
            let class = classify_residual(&e, &out, &code, SuccessCriterion::StabilizerGroup);
            assert!(!class.is_failure(), "weight-1 error at {j}: {class:?}");
        }
    }

    #[test]
    fn residual_classes() {
        let code = build_code(GBCodeSpec::circulant("toy", 3, &[0, 1], &[0, 2])).unwrap();
        let crit = SuccessCriterion::StabilizerGroup;
        let e = BitVector::unit(6, 0);
        let out = |est: BitVector, converged| DecodeOutcome {
            estimate: est,
            converged,
            iters_used: 1,
        };
        assert_eq!(
            classify_residual(&e, &out(e.clone(), true), &code, crit),
            ResidualClass::Exact
        );
        let shifted = e.xor(&code.h_x.row(1)).unwrap();
        assert_eq!(
            classify_residual(&e, &out(shifted, true), &code, crit),
            ResidualClass::DegenerateSuccess
        );
        // a kernel element of H_Z outside rowspace(H_X), found exhaustively
        let logical = (1u32..64)
            .map(|m| BitVector::from_support(6, (0..6).filter(|i| m >> i & 1 == 1)))
            .find(|v| code.h_z.syndrome(v).unwrap().is_zero() && !code.h_x.in_rowspace(v).unwrap())
            .unwrap();
        assert_eq!(
            classify_residual(&e, &out(e.xor(&logical).unwrap(), true), &code, crit),
            ResidualClass::LogicalFailure
        );
        assert_eq!(
            classify_residual(&e, &out(e.clone(), false), &code, crit),
            ResidualClass::SyndromeMismatch
        );
    }
}
