//! Random pools of edge-anisotropic decoders, coverage of harmful patterns,
//! and greedy ensemble selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::TannerGraph;
use crate::decoder::{DecodeOutcome, DecoderConfig, DecoderError, MinSum};
use crate::gf2::BitVector;

pub const DEFAULT_POOL_SIZE: usize = 100;
pub const DEFAULT_MEMBERS: usize = 5;
pub const DEFAULT_BUDGET: usize = 10;
pub const XI_MIN: f64 = 0.5;
pub const XI_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("selection error: {0}")]
    Selection(String),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
}

/// Damping factors indexed by monomial edge class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DampingVector(pub Vec<f64>);

impl DampingVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn config(&self, alpha: f64, max_iters: usize) -> DecoderConfig {
        DecoderConfig::edge(alpha, max_iters, self.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub seed: u64,
    pub candidates: Vec<DampingVector>,
}

impl CandidatePool {
    pub fn size(&self) -> usize {
        self.candidates.len()
    }
}

/// Draw `size` vectors of `k_classes` factors, each uniform on `[0.5, 1]`.
pub fn sample_pool(k_classes: usize, size: usize, seed: u64) -> CandidatePool {
    assert!(k_classes >= 1, "need at least one edge class");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = (0..size)
        .map(|_| {
            DampingVector(
                (0..k_classes)
                    .map(|_| rng.gen_range(XI_MIN..=XI_MAX))
                    .collect(),
            )
        })
        .collect();
    CandidatePool { seed, candidates }
}

/// A syndrome to decode together with the error that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub error: BitVector,
    pub syndrome: BitVector,
}

/// Candidate-by-pattern success table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMatrix {
    pub patterns: usize,
    /// `rows[i][j]` is true when candidate `i` corrects pattern `j`.
    pub rows: Vec<Vec<bool>>,
}

impl CoverageMatrix {
    pub fn candidates(&self) -> usize {
        self.rows.len()
    }

    pub fn covered_by(&self, members: &[usize]) -> usize {
        (0..self.patterns)
            .filter(|&j| members.iter().any(|&i| self.rows[i][j]))
            .count()
    }

    /// Fraction of patterns corrected by at least one member; 1 when there
    /// are no patterns.
    pub fn fraction(&self, members: &[usize]) -> f64 {
        if self.patterns == 0 {
            1.0
        } else {
            self.covered_by(members) as f64 / self.patterns as f64
        }
    }
}

/// Decode each pattern with each candidate at `budget` iterations. An entry
/// is true when the residual is a stabilizer (exact or degenerate success);
/// `is_success` decides this from the error and the outcome.
pub fn coverage_matrix<F>(
    pool: &CandidatePool,
    patterns: &[Pattern],
    graph: &TannerGraph,
    alpha: f64,
    budget: usize,
    is_success: F,
) -> Result<CoverageMatrix, EnsembleError>
where
    F: Fn(&BitVector, &DecodeOutcome) -> bool + Sync,
{
    let decoders = pool
        .candidates
        .iter()
        .map(|c| MinSum::new(graph, &c.config(alpha, budget)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = decoders
        .par_iter()
        .map(|d| {
            patterns
                .iter()
                .map(|p| {
                    let out = d.decode(&p.syndrome)?;
                    Ok(is_success(&p.error, &out))
                })
                .collect::<Result<Vec<bool>, DecoderError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverageMatrix {
        patterns: patterns.len(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSelection {
    /// Pool indices in selection order.
    pub members: Vec<usize>,
    /// Patterns newly covered by each member.
    pub gains: Vec<usize>,
    pub covered: usize,
    pub patterns: usize,
    pub covered_fraction: f64,
}

/// Greedy maximum-marginal-coverage selection. Ties go to the lower index;
/// once nothing is left to gain the lowest unused indices fill the ensemble.
pub fn greedy_select(
    matrix: &CoverageMatrix,
    m: usize,
) -> Result<EnsembleSelection, EnsembleError> {
    if m == 0 {
        return Err(EnsembleError::Selection(
            "ensemble needs at least one member".into(),
        ));
    }
    if matrix.candidates() < m {
        return Err(EnsembleError::Selection(format!(
            "{} candidates cannot fill {m} members",
            matrix.candidates()
        )));
    }
    let mut covered = vec![false; matrix.patterns];
    let mut used = vec![false; matrix.candidates()];
    let mut members = Vec::with_capacity(m);
    let mut gains = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in matrix.rows.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = row.iter().zip(&covered).filter(|(&r, &c)| r && !c).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, gain) = best.expect("enough candidates");
        used[i] = true;
        for (c, &r) in covered.iter_mut().zip(&matrix.rows[i]) {
            *c |= r;
        }
        members.push(i);
        gains.push(gain);
    }
    let total = covered.iter().filter(|&&c| c).count();
    Ok(EnsembleSelection {
        covered_fraction: matrix.fraction(&members),
        members,
        gains,
        covered: total,
        patterns: matrix.patterns,
    })
}

/// Decoders run one after another on the same syndrome.
#[derive(Debug, Clone)]
pub struct Ensemble<'g> {
    members: Vec<MinSum<'g>>,
}

impl<'g> Ensemble<'g> {
    pub fn new(
        graph: &'g TannerGraph,
        members: &[DampingVector],
        alpha: f64,
        max_iters: usize,
    ) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::Selection(
                "ensemble needs at least one member".into(),
            ));
        }
        let members = members
            .iter()
            .map(|m| MinSum::new(graph, &m.config(alpha, max_iters)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// First converged member wins. Iterations are summed over the members
    /// tried; without convergence the first member's estimate is returned.
    pub fn decode(&self, s: &BitVector) -> Result<DecodeOutcome, DecoderError> {
        let mut total = 0;
        let mut first: Option<DecodeOutcome> = None;
        for d in &self.members {
            let out = d.decode(s)?;
            total += out.iters_used;
            if out.converged {
                return Ok(DecodeOutcome {
                    iters_used: total,
                    ..out
                });
            }
            first.get_or_insert(out);
        }
        let out = first.expect("ensemble is not empty");
        Ok(DecodeOutcome {
            iters_used: total,
            ..out
        })
    }
}

/// Convenience wrapper: build an ensemble and decode once.
pub fn ensemble_decode(
    graph: &TannerGraph,
    s: &BitVector,
    members: &[DampingVector],
    alpha: f64,
    max_iters: usize,
) -> Result<DecodeOutcome, EnsembleError> {
    Ok(Ensemble::new(graph, members, alpha, max_iters)?.decode(s)?)
}
