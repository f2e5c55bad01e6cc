//! Seeded Monte Carlo estimation of logical error rates under i.i.d. X noise.
//!
//! Trial `t` draws from a ChaCha8 stream seeded by the master seed with
//! stream id `t`, so a point's outcome does not depend on how trials are
//! scheduled. Each qubit is flipped when its uniform draw falls below
//! `alpha`; the same seed therefore yields nested errors across the alpha
//! grid and identical errors across decoders.

use std::io::{Read, Write};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CheckSide, GBCode, TannerGraph};
use crate::decoder::{
    classify_residual, DecodeOutcome, DecoderConfig, DecoderError, MinSum, ResidualClass,
    SuccessCriterion,
};
use crate::ensemble::{DampingVector, Ensemble, EnsembleError};
use crate::gf2::BitVector;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

pub const CSV_HEADER: &str = "code,decoder,mode,alpha,iters,trials,failures,ler,ci_lo,ci_hi,seed";

pub const DEFAULT_BUDGETS: [usize; 3] = [10, 20, 50];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    Input(String),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Log-spaced grid from 0.01 to 0.10 with 8 points.
pub fn default_alphas() -> Vec<f64> {
    log_grid(0.01, 0.10, 8)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && points >= 1);
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            let x = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            // keep the grid printable: 6 significant digits
            format!("{x:.6e}").parse().expect("formatted float parses")
        })
        .collect()
}

/// Per-trial generator: the master seed selects the key, the trial index the
/// stream.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Independent flips with probability `alpha`, one uniform draw per bit.
pub fn sample_error<R: Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> BitVector {
    let mut e = BitVector::zeros(n);
    for i in 0..n {
        if rng.gen::<f64>() < alpha {
            e.set(i, true);
        }
    }
    e
}

/// 95% Wilson score interval.
pub fn wilson(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exact at the ends of the range
    let lo = if failures == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if failures == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// A decoder family as written in experiment files. Budget and alpha are
/// supplied per sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum DecoderKind {
    #[serde(alias = "none")]
    Isotropic,
    Block {
        xi_a: f64,
        xi_b: f64,
    },
    Edge {
        xi: Vec<f64>,
    },
    Ensemble {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        members: Vec<DampingVector>,
        /// Selection artifact to read members from when `members` is empty.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ensemble_file: Option<PathBuf>,
    },
}

impl DecoderKind {
    pub fn mode_str(&self) -> &'static str {
        match self {
            DecoderKind::Isotropic => "isotropic",
            DecoderKind::Block { .. } => "block",
            DecoderKind::Edge { .. } => "edge",
            DecoderKind::Ensemble { .. } => "ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDecoder {
    pub id: String,
    #[serde(flatten)]
    pub kind: DecoderKind,
}

impl NamedDecoder {
    pub fn new(id: impl Into<String>, kind: DecoderKind) -> Self {
        Self {
            id: id.into(),
            kind,
        }
    }
}

/// A decoder ready to run on one graph.
#[derive(Debug, Clone)]
pub enum Runner<'g> {
    Single(MinSum<'g>),
    Ensemble(Ensemble<'g>),
}

impl<'g> Runner<'g> {
    pub fn new(
        graph: &'g TannerGraph,
        kind: &DecoderKind,
        alpha: f64,
        max_iters: usize,
    ) -> Result<Self, SimError> {
        let single = |cfg: DecoderConfig| -> Result<Self, SimError> {
            Ok(Runner::Single(MinSum::new(graph, &cfg)?))
        };
        match kind {
            DecoderKind::Isotropic => single(DecoderConfig::isotropic(alpha, max_iters)),
            DecoderKind::Block { xi_a, xi_b } => {
                single(DecoderConfig::block(alpha, max_iters, *xi_a, *xi_b))
            }
            DecoderKind::Edge { xi } => single(DecoderConfig::edge(alpha, max_iters, xi.clone())),
            DecoderKind::Ensemble { members, .. } => {
                if members.is_empty() {
                    return Err(SimError::Input(
                        "ensemble decoder has no members; load its ensemble file first".into(),
                    ));
                }
                Ok(Runner::Ensemble(Ensemble::new(
                    graph, members, alpha, max_iters,
                )?))
            }
        }
    }

    pub fn decode(&self, s: &BitVector) -> Result<DecodeOutcome, DecoderError> {
        match self {
            Runner::Single(d) => d.decode(s),
            Runner::Ensemble(e) => e.decode(s),
        }
    }
}

/// Ensemble artifact as written by the selection command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub members: Vec<DampingVector>,
}

/// Replace `ensemble_file` references by their members. Relative paths are
/// taken from the working directory.
pub fn resolve_ensembles(decoders: &mut [NamedDecoder]) -> Result<(), SimError> {
    for d in decoders {
        if let DecoderKind::Ensemble {
            members,
            ensemble_file: Some(path),
        } = &mut d.kind
        {
            if members.is_empty() {
                let text = std::fs::read_to_string(&*path).map_err(|source| SimError::Io {
                    path: path.clone(),
                    source,
                })?;
                let file: EnsembleFile =
                    serde_json::from_str(&text).map_err(|source| SimError::Json {
                        path: path.clone(),
                        source,
                    })?;
                *members = file.members;
            }
        }
    }
    Ok(())
}

/// Accounting options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub criterion: SuccessCriterion,
    /// Score non-converged trials by their residual instead of counting them
    /// as failures.
    pub rescue_nonconverged: bool,
}

/// One trial of a point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub weight: usize,
    pub class: ResidualClass,
    pub converged: bool,
    pub iters_used: usize,
    /// The two stabilizer criteria disagree on this residual.
    pub criteria_disagree: bool,
}

/// One CSV row plus counters that stay out of the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub code: String,
    pub decoder: String,
    pub mode: String,
    pub alpha: f64,
    pub iters: usize,
    pub trials: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    #[serde(skip)]
    pub criteria_disagreements: u64,
}

impl SweepRow {
    pub fn overlaps(&self, other: &SweepRow) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

fn score(
    code: &GBCode,
    e: &BitVector,
    out: &DecodeOutcome,
    opts: SimOptions,
) -> (ResidualClass, bool) {
    let scored = if opts.rescue_nonconverged && !out.converged {
        DecodeOutcome {
            converged: true,
            ..out.clone()
        }
    } else {
        out.clone()
    };
    let class = classify_residual(e, &scored, code, opts.criterion);
    let other = match opts.criterion {
        SuccessCriterion::StabilizerGroup => SuccessCriterion::DecodingMatrix,
        SuccessCriterion::DecodingMatrix => SuccessCriterion::StabilizerGroup,
    };
    let disagree = class.is_failure() != classify_residual(e, &scored, code, other).is_failure();
    (class, disagree)
}

fn run_trial(
    code: &GBCode,
    runner: &Runner<'_>,
    alpha: f64,
    seed: u64,
    trial: u64,
    opts: SimOptions,
) -> Result<TrialRecord, SimError> {
    let mut rng = trial_rng(seed, trial);
    let e = sample_error(alpha, code.n, &mut rng);
    let s = code.h_z.syndrome(&e).expect("error has code length");
    let out = runner.decode(&s)?;
    let (class, criteria_disagree) = score(code, &e, &out, opts);
    Ok(TrialRecord {
        trial,
        weight: e.weight(),
        class,
        converged: out.converged,
        iters_used: out.iters_used,
        criteria_disagree,
    })
}

fn check_point(alpha: f64, iters: usize, trials: u64) -> Result<(), SimError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(SimError::Input(format!(
            "alpha = {alpha} must lie in (0, 0.5)"
        )));
    }
    if iters == 0 || trials == 0 {
        return Err(SimError::Input(
            "iterations and trials must be positive".into(),
        ));
    }
    Ok(())
}

fn row(
    code: &GBCode,
    decoder: &NamedDecoder,
    alpha: f64,
    iters: usize,
    trials: u64,
    seed: u64,
    failures: u64,
    disagreements: u64,
) -> SweepRow {
    let (ci_lo, ci_hi) = wilson(failures, trials);
    SweepRow {
        code: code.name().to_string(),
        decoder: decoder.id.clone(),
        mode: decoder.kind.mode_str().to_string(),
        alpha,
        iters,
        trials,
        failures,
        ler: failures as f64 / trials as f64,
        ci_lo,
        ci_hi,
        seed,
        criteria_disagreements: disagreements,
    }
}

/// Estimate the logical error rate of one decoder at one point. Decoding
/// runs on the `H_Z` graph.
pub fn run_point(
    code: &GBCode,
    decoder: &NamedDecoder,
    alpha: f64,
    iters: usize,
    trials: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<SweepRow, SimError> {
    check_point(alpha, iters, trials)?;
    let graph = code.tanner_graph(CheckSide::Z);
    let runner = Runner::new(&graph, &decoder.kind, alpha, iters)?;
    let (failures, disagreements) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = run_trial(code, &runner, alpha, seed, t, opts)?;
            Ok::<_, SimError>((
                u64::from(r.class.is_failure()),
                u64::from(r.criteria_disagree),
            ))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(row(
        code,
        decoder,
        alpha,
        iters,
        trials,
        seed,
        failures,
        disagreements,
    ))
}

/// Like [`run_point`], also returning every trial in index order.
pub fn run_point_logged(
    code: &GBCode,
    decoder: &NamedDecoder,
    alpha: f64,
    iters: usize,
    trials: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<(SweepRow, Vec<TrialRecord>), SimError> {
    check_point(alpha, iters, trials)?;
    let graph = code.tanner_graph(CheckSide::Z);
    let runner = Runner::new(&graph, &decoder.kind, alpha, iters)?;
    let log = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(code, &runner, alpha, seed, t, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let failures = log.iter().filter(|r| r.class.is_failure()).count() as u64;
    let disagreements = log.iter().filter(|r| r.criteria_disagree).count() as u64;
    Ok((
        row(
            code,
            decoder,
            alpha,
            iters,
            trials,
            seed,
            failures,
            disagreements,
        ),
        log,
    ))
}

/// Every decoder at every alpha and budget, in that nesting order, all with
/// the same master seed.
pub fn sweep(
    code: &GBCode,
    decoders: &[NamedDecoder],
    alphas: &[f64],
    budgets: &[usize],
    trials: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<Vec<SweepRow>, SimError> {
    if decoders.is_empty() || alphas.is_empty() || budgets.is_empty() {
        return Err(SimError::Input(
            "decoder, alpha and budget lists must be non-empty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(decoders.len() * alphas.len() * budgets.len());
    for d in decoders {
        for &alpha in alphas {
            for &iters in budgets {
                rows.push(run_point(code, d, alpha, iters, trials, seed, opts)?);
            }
        }
    }
    Ok(rows)
}

/// Write rows with the fixed header.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush().map_err(|source| SimError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

/// Read rows written by [`write_csv`], rejecting any other header.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(SimError::Input(format!("unexpected CSV header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<Vec<SweepRow>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code, GBCodeSpec};

    fn small() -> GBCode {
        build_code(GBCodeSpec::circulant("small", 9, &[0, 1, 5], &[0, 3])).unwrap()
    }

    #[test]
    fn wilson_matches_hand_values() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let (lo, hi) = wilson(50, 100);
        assert!((lo - 0.403_831_530_365_995_6).abs() < 1e-12, "{lo}");
        assert!((hi - 0.596_168_469_634_004_4).abs() < 1e-12, "{hi}");
        let (lo, hi) = wilson(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_799_862_889_26).abs() < 1e-12, "{hi}");
    }

    #[test]
    fn replayed_trial_draws_same_error() {
        let a = sample_error(0.1, 200, &mut trial_rng(5, 17));
        let b = sample_error(0.1, 200, &mut trial_rng(5, 17));
        assert_eq!(a, b);
        assert_ne!(a, sample_error(0.1, 200, &mut trial_rng(5, 18)));
    }

    #[test]
    fn errors_are_nested_in_alpha() {
        let lo = sample_error(0.02, 500, &mut trial_rng(3, 0));
        let hi = sample_error(0.08, 500, &mut trial_rng(3, 0));
        assert!(lo.ones().all(|i| hi.get(i)));
    }

    #[test]
    fn tiny_alpha_gives_zero_errors() {
        let mut rng = trial_rng(0, 0);
        for _ in 0..100 {
            assert!(sample_error(1e-12, 100, &mut rng).is_zero());
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = default_alphas();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[7], 0.1);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sweep_shape_and_csv_round_trip() {
        let code = small();
        let decs = vec![
            NamedDecoder::new("iso", DecoderKind::Isotropic),
            NamedDecoder::new(
                "blk",
                DecoderKind::Block {
                    xi_a: 0.7,
                    xi_b: 0.9,
                },
            ),
            NamedDecoder::new(
                "edg",
                DecoderKind::Edge {
                    xi: vec![0.6, 0.7, 0.8, 0.9, 1.0],
                },
            ),
        ];
        let rows = sweep(
            &code,
            &decs,
            &[0.01, 0.02, 0.04, 0.08],
            &DEFAULT_BUDGETS,
            20,
            9,
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 36);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 36);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(
                (a.failures, a.alpha, a.ler, a.ci_lo),
                (b.failures, b.alpha, b.ler, b.ci_lo)
            );
        }
    }

    #[test]
    fn foreign_header_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_ensemble_needs_members() {
        let code = small();
        let d = NamedDecoder::new(
            "ens",
            DecoderKind::Ensemble {
                members: vec![],
                ensemble_file: None,
            },
        );
        assert!(matches!(
            run_point(&code, &d, 0.05, 10, 5, 0, SimOptions::default()),
            Err(SimError::Input(_))
        ));
    }
}
