//! Command-line interface.
//!
//! Every command prints a text report and can write a JSON document that
//! carries `schema_version` and the resolved configuration. `run` returns
//! whether all checks performed by the command passed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::code::{
    brute_force_distance, girth, load_code, Block, CheckSide, CodeError, CodeSpecKind, GBCode,
};
use crate::decoder::{classify_residual, DecodeOutcome, DecoderConfig, SuccessCriterion};
use crate::ensemble::{
    coverage_matrix, greedy_select, sample_pool, EnsembleError, Pattern, DEFAULT_BUDGET,
    DEFAULT_MEMBERS, DEFAULT_POOL_SIZE,
};
use crate::equivariance::fixture;
use crate::gf2::BitVector;
use crate::sim::{
    default_alphas, resolve_ensembles, sweep, write_csv, DecoderKind, NamedDecoder, SimError,
    SimOptions, DEFAULT_BUDGETS,
};
use crate::symmetry::{
    count_harmful, family_counts, find_generator_combinations, glued_config_graph,
    harmful_pattern_instances, induced_subgraph, single_pattern_condition, table_pattern_instances,
    Coloring, Gluing, LabeledSubgraph, PatternInstance, Shape, StabilizerConfig, SymmetryError,
    TABLE_COLUMNS, TABLE_FAMILIES,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "GBCODES_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Sim(#[from] SimError),
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
    #[error("{0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "gbcodes",
    version,
    about = "Generalized bicycle codes: decoding and symmetry analysis"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameters, girth, degrees and monomial classes of a code.
    CodeInfo(CodeInfoArgs),
    /// Harmful-configuration counts on synthetic shapes.
    SymmetryReport(SymmetryReportArgs),
    /// Harmful patterns of a code's generator combinations.
    HarmfulEnum(HarmfulEnumArgs),
    /// Random pool, coverage of harmful patterns and greedy ensemble.
    EnsembleSelect(EnsembleSelectArgs),
    /// Monte Carlo logical error rates.
    Simulate(SimulateArgs),
    /// Message equality on automorphism orbits of a subdivided K_{m,n}.
    EquivarianceCheck(EquivarianceArgs),
}

#[derive(Debug, Args)]
pub struct CodeInfoArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Exhaustive distance search up to this weight (small codes only).
    #[arg(long)]
    pub distance_limit: Option<usize>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SymmetryReportArgs {
    /// Restrict to these families, e.g. `K3,3`; repeatable.
    #[arg(long = "family")]
    pub families: Vec<String>,
    /// Also count the generic gluing of families that use another one.
    #[arg(long)]
    pub with_generic: bool,
    /// Add counts on the code's own generator combinations.
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColoringArg {
    None,
    Block,
    Edge,
}

impl From<ColoringArg> for Coloring {
    fn from(c: ColoringArg) -> Self {
        match c {
            ColoringArg::None => Coloring::None,
            ColoringArg::Block => Coloring::Block,
            ColoringArg::Edge => Coloring::Edge,
        }
    }
}

#[derive(Debug, Args)]
pub struct HarmfulEnumArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, value_enum, default_value_t = ColoringArg::None)]
    pub coloring: ColoringArg,
    /// Use every generator combination, not only the table's shapes.
    #[arg(long)]
    pub all_shapes: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleSelectArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub pool: usize,
    #[arg(long, default_value_t = DEFAULT_MEMBERS)]
    pub members: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub iters: usize,
    /// Prior used by the candidate decoders.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub all_shapes: bool,
    /// Fail when the covered fraction is below this value.
    #[arg(long)]
    pub min_coverage: Option<f64>,
    /// Selection artifact (JSON); usable as an `ensemble_file`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    StabilizerGroup,
    DecodingMatrix,
}

impl From<CriterionArg> for SuccessCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::StabilizerGroup => SuccessCriterion::StabilizerGroup,
            CriterionArg::DecodingMatrix => SuccessCriterion::DecodingMatrix,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// JSON list of decoders, or an object with a `decoders` list.
    #[arg(long)]
    pub decoders: PathBuf,
    /// Comma-separated noise levels; defaults to 8 log-spaced points in
    /// [0.01, 0.1].
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
    pub iters: Vec<usize>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CriterionArg::StabilizerGroup)]
    pub criterion: CriterionArg,
    /// Score non-converged trials by their residual.
    #[arg(long)]
    pub rescue_nonconverged: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON with the resolved configuration.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquivarianceArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Run a command on a pool of `cli.threads` workers.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    let mut buf: Vec<u8> = Vec::new();
    let res = pool.install(|| {
        let w = &mut buf;
        match &cli.command {
            Command::CodeInfo(a) => code_info(a, w),
            Command::SymmetryReport(a) => symmetry_report(a, w),
            Command::HarmfulEnum(a) => harmful_enum(a, w),
            Command::EnsembleSelect(a) => ensemble_select(a, w),
            Command::Simulate(a) => simulate(a, w),
            Command::EquivarianceCheck(a) => equivariance_check(a, w),
        }
    });
    out.write_all(&buf).map_err(io_err(Path::new("<stdout>")))?;
    res
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

fn support(v: &BitVector) -> Vec<usize> {
    v.ones().collect()
}

fn monomials(code: &GBCode) -> Vec<serde_json::Value> {
    match &code.spec.kind {
        CodeSpecKind::Group { a, b, .. } => a
            .iter()
            .map(|m| ("A", m))
            .chain(b.iter().map(|m| ("B", m)))
            .enumerate()
            .map(|(k, (side, m))| json!({"class": k, "matrix": side, "monomial": m.to_string()}))
            .collect(),
        CodeSpecKind::Dense { .. } => vec![
            json!({"class": 0, "matrix": "A", "monomial": "dense"}),
            json!({"class": 1, "matrix": "B", "monomial": "dense"}),
        ],
    }
}

fn degree_range(code: &GBCode, block: Block) -> (usize, usize) {
    let g = code.tanner_graph(CheckSide::Z);
    let degs = (0..g.num_vars())
        .filter(|&v| g.block(v) == block)
        .map(|v| g.var_edges(v).len());
    degs.fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

fn code_info(a: &CodeInfoArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let code = load_code(&a.code)?;
    let gz = code.tanner_graph(CheckSide::Z);
    let gi = girth(&gz);
    let deg_a = degree_range(&code, Block::A);
    let deg_b = degree_range(&code, Block::B);
    let check_w = (0..gz.num_checks())
        .map(|c| gz.check_edges(c).len())
        .max()
        .unwrap_or(0);
    let claimed = code.spec.claimed.clone();
    let claimed_ok = claimed
        .as_ref()
        .is_none_or(|c| c.first() == Some(&code.n) && c.get(1).is_none_or(|&k| k == code.k));
    let distance = a
        .distance_limit
        .map(|l| brute_force_distance(&code, l, CheckSide::Z));
    let mut text = String::new();
    text += &format!("code        {}\n", code.name());
    text += &format!("n, k        {}, {}\n", code.n, code.k);
    text += &format!(
        "rank H_X    {}\nrank H_Z    {}\n",
        code.rank_hx, code.rank_hz
    );
    text += &format!(
        "girth       {}\n",
        gi.map_or("acyclic".to_string(), |g| g.to_string())
    );
    text += &format!(
        "degrees     H_Z check {check_w}, block A {}..{}, block B {}..{}\n",
        deg_a.0, deg_a.1, deg_b.0, deg_b.1
    );
    for m in monomials(&code) {
        text += &format!(
            "class {:>2}    {} {}\n",
            m["class"],
            m["matrix"].as_str().unwrap_or(""),
            m["monomial"].as_str().unwrap_or("")
        );
    }
    text += "commute     AB = BA\n";
    if let Some(c) = &claimed {
        text += &format!(
            "claimed     {c:?} ({})\n",
            if claimed_ok { "consistent" } else { "MISMATCH" }
        );
    }
    if let Some(d) = distance {
        text += &format!("distance    {d:?}\n");
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "code-info",
                "config": {"code": a.code, "distance_limit": a.distance_limit},
                "name": code.name(),
                "n": code.n,
                "k": code.k,
                "rank_hx": code.rank_hx,
                "rank_hz": code.rank_hz,
                "girth": gi,
                "check_weight": check_w,
                "var_degree_a": [deg_a.0, deg_a.1],
                "var_degree_b": [deg_b.0, deg_b.1],
                "classes": monomials(&code),
                "commutes": true,
                "claimed_params": claimed,
                "claimed_consistent": claimed_ok,
                "distance": distance,
                "source": code.spec.source,
            }),
        )?;
    }
    Ok(claimed_ok)
}

#[derive(Debug, Clone, Serialize)]
struct ReportRow {
    family: String,
    m: usize,
    n: usize,
    gluing: Gluing,
    coloring: Coloring,
    /// One entry per table column; `None` when the shape cannot be glued.
    counts: Vec<Option<usize>>,
    /// The literal all-A 6-cycle.
    triple_aaa: Option<usize>,
}

fn family_rows(name: &str, m: usize, n: usize, gluing: Gluing) -> Vec<ReportRow> {
    let mut shapes: Vec<Shape> = TABLE_COLUMNS.iter().map(|c| c.1).collect();
    shapes.push(Shape::TRIPLE_AAA);
    let fc = family_counts(m, n, gluing, &shapes);
    Coloring::ALL
        .into_iter()
        .map(|coloring| ReportRow {
            family: name.to_string(),
            m,
            n,
            gluing,
            coloring,
            counts: TABLE_COLUMNS
                .iter()
                .map(|c| fc.get(c.1, coloring))
                .collect(),
            triple_aaa: fc.get(Shape::TRIPLE_AAA, coloring),
        })
        .collect()
}

fn cell(c: Option<usize>) -> String {
    c.map_or("-".to_string(), |v| v.to_string())
}

fn symmetry_report(a: &SymmetryReportArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let families: Vec<_> = TABLE_FAMILIES
        .iter()
        .filter(|f| a.families.is_empty() || a.families.iter().any(|x| x == f.name))
        .collect();
    if families.is_empty() {
        return Err(CliError::Usage(format!(
            "no family matches {:?}",
            a.families
        )));
    }
    let mut rows = Vec::new();
    let mut generic = Vec::new();
    for f in &families {
        rows.extend(family_rows(f.name, f.m, f.n, f.gluing));
        if a.with_generic && f.gluing != Gluing::Generic {
            generic.extend(family_rows(f.name, f.m, f.n, Gluing::Generic));
        }
    }
    let mut text = String::new();
    let head: Vec<&str> = TABLE_COLUMNS.iter().map(|c| c.0).collect();
    let table = |rows: &[ReportRow]| {
        let mut t = format!(
            "{:<7} {:<17} {:<9} {}  | all-A 6-cycle\n",
            "family",
            "gluing",
            "coloring",
            head.iter()
                .map(|h| format!("{h:>16}"))
                .collect::<Vec<_>>()
                .join("")
        );
        for r in rows {
            t += &format!(
                "{:<7} {:<17} {:<9} {}  | {:>5}\n",
                r.family,
                r.gluing.as_str(),
                r.coloring.as_str(),
                r.counts
                    .iter()
                    .map(|&c| format!("{:>16}", cell(c)))
                    .collect::<Vec<_>>()
                    .join(""),
                cell(r.triple_aaa)
            );
        }
        t
    };
    text += &table(&rows);
    if !generic.is_empty() {
        text += "\ngeneric gluing\n";
        text += &table(&generic);
    }
    let mut code_rows = Vec::new();
    if let Some(path) = &a.code {
        let code = load_code(path)?;
        text += &format!("\ngenerator combinations of {}\n", code.name());
        for c in find_generator_combinations(&code) {
            let g = induced_subgraph(&code, &c.rows)?;
            let counts: Vec<usize> = Coloring::ALL
                .iter()
                .map(|&col| count_harmful(&g, col).pairs)
                .collect();
            text += &format!(
                "{:<14} rows {:<14} checks {:>3}  none {:>5} block {:>5} edge {:>3}\n",
                c.shape.name(),
                format!("{:?}", c.rows),
                g.num_checks(),
                counts[0],
                counts[1],
                counts[2]
            );
            code_rows.push(json!({
                "shape": c.shape, "rows": c.rows, "shared": c.shared, "checks": g.num_checks(),
                "none": counts[0], "block": counts[1], "edge": counts[2],
            }));
        }
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "symmetry-report",
                "config": {"families": families.iter().map(|f| f.name).collect::<Vec<_>>(),
                           "with_generic": a.with_generic, "code": a.code},
                "columns": TABLE_COLUMNS.iter().map(|c| json!({"title": c.0, "shape": c.1})).collect::<Vec<_>>(),
                "families": families,
                "rows": rows,
                "generic_rows": generic,
                "code_combinations": code_rows,
                "metadata": {
                    "count": "unordered pairs {E, F} of half-support patterns",
                    "pattern_filter": "E is minimum weight in its class modulo the generators",
                    "anchors": "shared variables are never colored",
                    "configuration": "one representative configuration per shape",
                },
            }),
        )?;
    }
    Ok(true)
}

fn instances(
    code: &GBCode,
    coloring: Coloring,
    all_shapes: bool,
) -> Result<Vec<PatternInstance>, CliError> {
    if all_shapes {
        Ok(harmful_pattern_instances(
            code,
            &find_generator_combinations(code),
            coloring,
        )?)
    } else {
        Ok(table_pattern_instances(code, coloring)?)
    }
}

fn harmful_enum(a: &HarmfulEnumArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let code = load_code(&a.code)?;
    let coloring: Coloring = a.coloring.into();
    let inst = instances(&code, coloring, a.all_shapes)?;
    let mut per: BTreeMap<&str, usize> = BTreeMap::new();
    for i in &inst {
        *per.entry(i.shape.name()).or_default() += 1;
    }
    let mut text = format!(
        "{}: {} harmful instances under {} coloring\n",
        code.name(),
        inst.len(),
        coloring.as_str()
    );
    for (s, c) in &per {
        text += &format!("  {s:<14} {c}\n");
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "harmful-enum",
                "config": {"code": a.code, "coloring": coloring, "all_shapes": a.all_shapes},
                "code_name": code.name(),
                "per_shape": per,
                "instances": inst.iter().map(|i| json!({
                    "shape": i.shape, "rows": i.rows,
                    "error": support(&i.error), "syndrome": support(&i.syndrome),
                })).collect::<Vec<_>>(),
            }),
        )?;
    }
    Ok(true)
}

/// Selection artifact written by `ensemble-select`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionArtifact {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub code_name: String,
    pub pool_seed: u64,
    pub pool_size: usize,
    pub selected: Vec<usize>,
    pub gains: Vec<usize>,
    pub members: Vec<crate::ensemble::DampingVector>,
    pub patterns: usize,
    pub covered: usize,
    pub covered_fraction: f64,
    pub best_single_fraction: f64,
    pub per_shape: BTreeMap<String, (usize, usize)>,
}

/// Pool, coverage and greedy selection for a code.
pub fn select_ensemble(
    code: &GBCode,
    seed: u64,
    pool_size: usize,
    members: usize,
    iters: usize,
    alpha: f64,
    all_shapes: bool,
) -> Result<SelectionArtifact, CliError> {
    let inst = instances(code, Coloring::None, all_shapes)?;
    let patterns: Vec<Pattern> = inst
        .iter()
        .map(|i| Pattern {
            error: i.error.clone(),
            syndrome: i.syndrome.clone(),
        })
        .collect();
    let graph = code.tanner_graph(CheckSide::Z);
    let pool = sample_pool(code.num_classes(), pool_size, seed);
    let ok = |e: &BitVector, o: &DecodeOutcome| {
        !classify_residual(e, o, code, SuccessCriterion::StabilizerGroup).is_failure()
    };
    let matrix = coverage_matrix(&pool, &patterns, &graph, alpha, iters, ok)?;
    let sel = greedy_select(&matrix, members)?;
    let best_single = (0..matrix.candidates())
        .map(|i| matrix.fraction(&[i]))
        .fold(0.0, f64::max);
    let mut per_shape: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (j, i) in inst.iter().enumerate() {
        let e = per_shape.entry(i.shape.name().to_string()).or_default();
        e.0 += 1;
        if sel.members.iter().any(|&c| matrix.rows[c][j]) {
            e.1 += 1;
        }
    }
    Ok(SelectionArtifact {
        schema_version: SCHEMA_VERSION,
        command: "ensemble-select".into(),
        config: json!({
            "seed": seed, "pool": pool_size, "members": members, "iters": iters,
            "alpha": alpha, "all_shapes": all_shapes,
        }),
        code_name: code.name().to_string(),
        pool_seed: seed,
        pool_size,
        members: sel
            .members
            .iter()
            .map(|&i| pool.candidates[i].clone())
            .collect(),
        selected: sel.members,
        gains: sel.gains,
        patterns: sel.patterns,
        covered: sel.covered,
        covered_fraction: sel.covered_fraction,
        best_single_fraction: best_single,
        per_shape,
    })
}

fn ensemble_select(a: &EnsembleSelectArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let code = load_code(&a.code)?;
    let mut art = select_ensemble(
        &code,
        a.seed,
        a.pool,
        a.members,
        a.iters,
        a.alpha,
        a.all_shapes,
    )?;
    art.config["code"] = json!(a.code);
    art.config["min_coverage"] = json!(a.min_coverage);
    let ok = a.min_coverage.is_none_or(|m| art.covered_fraction >= m);
    let mut text = format!(
        "{}: seed {} pool {} -> members {:?}\ncovered {}/{} = {:.4} (best single {:.4}){}\n",
        art.code_name,
        art.pool_seed,
        art.pool_size,
        art.selected,
        art.covered,
        art.patterns,
        art.covered_fraction,
        art.best_single_fraction,
        if ok { "" } else { "  BELOW MINIMUM" }
    );
    for (s, (t, c)) in &art.per_shape {
        text += &format!("  {s:<14} {c}/{t}\n");
    }
    emit(out, &text)?;
    if let Some(path) = &a.out {
        let value = serde_json::to_value(&art).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        })?;
        write_json(path, &value)?;
    }
    Ok(ok)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DecoderFile {
    List(Vec<NamedDecoder>),
    Object { decoders: Vec<NamedDecoder> },
}

/// Read a decoder list and inline ensemble members. Relative
/// `ensemble_file` paths are taken from the list's directory.
pub fn load_decoders(path: &Path) -> Result<Vec<NamedDecoder>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let file: DecoderFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut decoders = match file {
        DecoderFile::List(d) | DecoderFile::Object { decoders: d } => d,
    };
    let base = path.parent().unwrap_or(Path::new(""));
    for d in &mut decoders {
        if let DecoderKind::Ensemble {
            ensemble_file: Some(f),
            ..
        } = &mut d.kind
        {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
    }
    resolve_ensembles(&mut decoders)?;
    Ok(decoders)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let code = load_code(&a.code)?;
    let decoders = load_decoders(&a.decoders)?;
    let alphas = if a.alphas.is_empty() {
        default_alphas()
    } else {
        a.alphas.clone()
    };
    let opts = SimOptions {
        criterion: a.criterion.into(),
        rescue_nonconverged: a.rescue_nonconverged,
    };
    let rows = sweep(&code, &decoders, &alphas, &a.iters, a.trials, a.seed, opts)?;
    let file = File::create(&a.out).map_err(io_err(&a.out))?;
    write_csv(&rows, BufWriter::new(file))?;
    let mut text = String::new();
    for r in &rows {
        text += &format!(
            "{:<10} {:<9} alpha {:<10} I {:>3}  {:>6}/{:<7} ler {:.3e} [{:.3e}, {:.3e}]{}\n",
            r.decoder,
            r.mode,
            r.alpha,
            r.iters,
            r.failures,
            r.trials,
            r.ler,
            r.ci_lo,
            r.ci_hi,
            if r.criteria_disagreements > 0 {
                format!("  criteria disagree on {}", r.criteria_disagreements)
            } else {
                String::new()
            }
        );
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "simulate",
                "config": {
                    "code": a.code, "decoders": decoders, "alphas": alphas, "iters": a.iters,
                    "trials": a.trials, "seed": a.seed, "criterion": opts.criterion,
                    "rescue_nonconverged": opts.rescue_nonconverged, "out": a.out,
                    "ensemble_rule": "members in order; first converged estimate; iterations summed",
                },
                "rows": rows.iter().map(|r| json!({
                    "decoder": r.decoder, "mode": r.mode, "alpha": r.alpha, "iters": r.iters,
                    "trials": r.trials, "failures": r.failures, "ler": r.ler,
                    "ci_lo": r.ci_lo, "ci_hi": r.ci_hi,
                    "criteria_disagreements": r.criteria_disagreements,
                })).collect::<Vec<_>>(),
            }),
        )?;
    }
    Ok(true)
}

type Case = (&'static str, DecoderConfig, (usize, usize), Coloring, bool);

#[derive(Debug, Serialize)]
struct EquivarianceCase {
    decoder: String,
    pattern: (usize, usize),
    coloring: Coloring,
    swaps_sides: bool,
    expect_equal: bool,
    first_violation: Option<usize>,
    pass: bool,
}

fn equivariance_check(a: &EquivarianceArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let (m, n) = (a.m, a.n);
    let classes = m + n;
    let distinct: Vec<f64> = (0..classes)
        .map(|k| 0.5 + 0.5 * k as f64 / (classes - 1).max(1) as f64)
        .collect();
    let iso = DecoderConfig::isotropic(a.alpha, a.iters);
    let edge = DecoderConfig::edge(a.alpha, a.iters, distinct);
    let block = DecoderConfig::block(a.alpha, a.iters, 0.6, 0.9);
    // first pattern with an uncolored automorphism onto its complement
    let (x, y) = (0..=m)
        .flat_map(|x| (0..=n).map(move |y| (x, y)))
        .find(|&(x, y)| x + y > 0 && single_pattern_condition(m, n, x, y, Coloring::None))
        .ok_or_else(|| CliError::Usage(format!("K{m},{n} has no harmful single pattern")))?;
    // (decoder, config, pattern, coloring kept by the map, equality expected)
    let mut plan: Vec<Case> = vec![
        ("isotropic", iso.clone(), (x, y), Coloring::None, true),
        ("edge (distinct xi)", edge, (x, y), Coloring::None, false),
    ];
    if m == n && m >= 2 {
        // x != m - x admits only side-exchanging maps
        plan.push(("block", block.clone(), (m - 1, 1), Coloring::None, false));
        if m % 2 == 0 {
            plan.push(("block", block, (m / 2, n / 2), Coloring::Block, true));
        }
    }
    let mut cases = Vec::new();
    for (name, cfg, (x, y), coloring, expect_equal) in plan {
        let f = fixture(m, n, x, y, coloring)?
            .ok_or_else(|| CliError::Usage(format!("no automorphism for pattern ({x}, {y})")))?;
        let r = f
            .check(&cfg, a.iters)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        cases.push(EquivarianceCase {
            decoder: name.to_string(),
            pattern: (x, y),
            coloring,
            swaps_sides: f.swaps_sides(),
            expect_equal,
            pass: r.holds() == expect_equal,
            first_violation: r.first_violation,
        });
    }
    let ok = cases.iter().all(|c| c.pass);
    let mut text = format!("subdivided K{m},{n}, {} iterations\n", a.iters);
    for c in &cases {
        text += &format!(
            "{:<20} pattern {:?} map {:<11} expect {:<9} observed {:<22} {}\n",
            c.decoder,
            c.pattern,
            if c.swaps_sides {
                "side swap"
            } else {
                "within side"
            },
            if c.expect_equal { "equal" } else { "broken" },
            match c.first_violation {
                None => "equal".to_string(),
                Some(i) => format!("broken at iteration {i}"),
            },
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "equivariance-check",
                "config": {"m": m, "n": n, "iters": a.iters, "alpha": a.alpha},
                "cases": cases,
                "pass": ok,
            }),
        )?;
    }
    Ok(ok)
}

/// Resolve the synthetic graph used for one table cell.
pub fn table_cell_graph(
    m: usize,
    n: usize,
    shape: Shape,
    gluing: Gluing,
) -> Result<LabeledSubgraph, CliError> {
    Ok(glued_config_graph(
        &StabilizerConfig::new(shape, m, n),
        gluing,
    )?)
}
