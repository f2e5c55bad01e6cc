//! Acceptance suite: one line per criterion, nonzero exit when any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use gbcodes::cli::{load_decoders, select_ensemble, SelectionArtifact};
use gbcodes::code::{girth, load_code, CheckSide, GBCode};
use gbcodes::decoder::{
    block_as_edge_xi, classify_residual, DecoderConfig, MinSum, SuccessCriterion,
};
use gbcodes::equivariance::check_equivariance;
use gbcodes::gf2::BitVector;
use gbcodes::sim::{default_alphas, run_point, sample_error, trial_rng, SimOptions};
use gbcodes::symmetry::{
    automorphism_count, automorphism_map_exists, family_counts, glued_config_graph,
    single_pattern_condition, synthetic_config_graph, table_pattern_instances,
    verify_edge_rigidity, Coloring, Gluing, Shape, StabilizerConfig, TABLE_COLUMNS, TABLE_FAMILIES,
};

/// Expected harmful counts per family, coloring none / block / edge, in
/// table column order.
const TABLE: [(&str, [[usize; 5]; 3]); 3] = [
    ("K3,3", [[10, 46, 46, 0, 0], [0, 46, 46, 0, 0], [0; 5]]),
    ("K2,4", [[6, 52, 46, 44, 28], [6, 52, 46, 44, 28], [0; 5]]),
    ("K4,4", [[35, 87, 87, 0, 0], [18, 87, 87, 0, 0], [0; 5]]),
];
const TABLE_SECONDS: f64 = 120.0;

const EQUIVARIANCE_ITERS: usize = 50;

/// Shipped code files with expected (n, k); k of the 166 code is a
/// regression constant.
const CODES: [(&str, usize, usize); 3] = [
    ("bb_288_12_18", 288, 12),
    ("gb_166_d18", 166, 2),
    ("a5_180_10", 180, 10),
];
const GIRTH: usize = 6;

const REDUCTION_INSTANCES: u64 = 100;
const REDUCTION_ITERS: usize = 50;
const REDUCTION_ALPHA: f64 = 0.05;

const STALL_ITERS: usize = 50;
const COVERAGE_BUDGET: usize = 10;
const COVERAGE_ALPHA: f64 = 0.05;
const POOL: usize = 100;
const MEMBERS: usize = 5;
const FALLBACK_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
/// Required coverage: all patterns on the BB code, most on the others.
fn required_coverage(code: &str) -> f64 {
    if code == "bb_288_12_18" {
        1.0
    } else {
        0.9
    }
}

const LER_TRIALS: u64 = 10_000;
const LER_ALPHA_INDEX: usize = 3;
const LER_SEED: u64 = 0;

const DETERMINISM_TRIALS: &str = "2000";

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn code(name: &str) -> GBCode {
    load_code(&root().join("codes").join(format!("{name}.json"))).expect("shipped code loads")
}

type Check = Result<String, String>;

fn table_cells() -> Check {
    let start = Instant::now();
    let shapes: Vec<Shape> = TABLE_COLUMNS.iter().map(|c| c.1).collect();
    let mut bad = Vec::new();
    let mut cells = 0;
    for (fam, (name, expected)) in TABLE_FAMILIES.iter().zip(TABLE) {
        assert_eq!(fam.name, name);
        let fc = family_counts(fam.m, fam.n, fam.gluing, &shapes);
        for (ci, coloring) in Coloring::ALL.into_iter().enumerate() {
            for (si, &shape) in shapes.iter().enumerate() {
                cells += 1;
                let got = fc.get(shape, coloring);
                if got != Some(expected[ci][si]) {
                    bad.push(format!(
                        "{name} {} {shape}: {got:?} != {}",
                        coloring.as_str(),
                        expected[ci][si]
                    ));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > TABLE_SECONDS {
        bad.push(format!("took {secs:.1}s"));
    }
    if bad.is_empty() {
        Ok(format!("{cells} cells exact in {secs:.1}s"))
    } else {
        Err(bad.join("; "))
    }
}

fn closed_form() -> Check {
    let mut checked = 0;
    for (m, n) in [(2, 4), (3, 3), (4, 4)] {
        let g = synthetic_config_graph(&StabilizerConfig::new(Shape::Single, m, n))
            .map_err(|e| e.to_string())?;
        let half = (m + n) / 2;
        for mask in 0u32..1 << (m + n) {
            if mask.count_ones() as usize != half {
                continue;
            }
            // synthetic singles list the A variables first
            let e: Vec<usize> = (0..m + n).filter(|v| mask >> v & 1 == 1).collect();
            let x = e.iter().filter(|&&v| v < m).count();
            for coloring in [Coloring::None, Coloring::Block] {
                let found = automorphism_map_exists(&g, &e, coloring).map_err(|e| e.to_string())?;
                if found.is_some() != single_pattern_condition(m, n, x, half - x, coloring) {
                    return Err(format!("K{m},{n} {e:?} {}", coloring.as_str()));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (pattern, coloring) cases agree"))
}

fn rigidity() -> Check {
    let mut checked = 0;
    for fam in TABLE_FAMILIES {
        for (_, shape) in TABLE_COLUMNS {
            let g = glued_config_graph(&StabilizerConfig::new(shape, fam.m, fam.n), fam.gluing);
            let g = match g {
                Ok(g) => g,
                // a column the family cannot glue has nothing to be rigid
                Err(_) if fam.gluing == Gluing::Generic => continue,
                Err(e) => return Err(format!("{} {shape}: {e}", fam.name)),
            };
            if !verify_edge_rigidity(&g) || automorphism_count(&g, Coloring::Edge, 2) != 1 {
                return Err(format!(
                    "{} {shape} has a nontrivial edge-colored automorphism",
                    fam.name
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} shapes rigid, identity only"))
}

fn equivariance() -> Check {
    let mut checked = 0;
    for (m, n) in [(3, 3), (4, 4)] {
        let g = synthetic_config_graph(&StabilizerConfig::new(Shape::Single, m, n))
            .map_err(|e| e.to_string())?;
        let cfg = DecoderConfig::isotropic(0.05, EQUIVARIANCE_ITERS);
        let half = (m + n) / 2;
        for mask in 0u32..1 << (m + n) {
            if mask.count_ones() as usize != half {
                continue;
            }
            let e: Vec<usize> = (0..m + n).filter(|v| mask >> v & 1 == 1).collect();
            let Some(w) =
                automorphism_map_exists(&g, &e, Coloring::None).map_err(|e| e.to_string())?
            else {
                continue;
            };
            let bits: Vec<u8> = g.syndrome_of(&e).iter().map(|&b| u8::from(b)).collect();
            let s = BitVector::from_bits(&bits).map_err(|e| e.to_string())?;
            let r = check_equivariance(&g.graph, &cfg, &s, &w, EQUIVARIANCE_ITERS)
                .map_err(|e| e.to_string())?;
            if let Some(i) = r.first_violation {
                return Err(format!("K{m},{n} {e:?} breaks at iteration {i}"));
            }
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("no fixture".into());
    }
    Ok(format!(
        "{checked} fixtures bitwise equal on orbits for {EQUIVARIANCE_ITERS} iterations"
    ))
}

fn code_parameters() -> Check {
    let mut parts = Vec::new();
    for (name, n, k) in CODES {
        let c = code(name);
        let g = girth(&c.tanner_graph(CheckSide::Z));
        if c.n != n || c.k != k || g != Some(GIRTH) {
            return Err(format!("{name}: n={} k={} girth={g:?}", c.n, c.k));
        }
        parts.push(format!("[[{n},{k}]] girth {GIRTH}"));
    }
    Ok(parts.join(", "))
}

fn same_messages(
    graph: &gbcodes::code::TannerGraph,
    a: &DecoderConfig,
    b: &DecoderConfig,
    s: &BitVector,
) -> Result<bool, String> {
    let da = MinSum::new(graph, &a.clone().with_early_stop(false)).map_err(|e| e.to_string())?;
    let db = MinSum::new(graph, &b.clone().with_early_stop(false)).map_err(|e| e.to_string())?;
    let mut sa = da.init(s).map_err(|e| e.to_string())?;
    let mut sb = db.init(s).map_err(|e| e.to_string())?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for _ in 0..REDUCTION_ITERS {
        da.iterate(&mut sa, s);
        db.iterate(&mut sb, s);
        if bits(&sa.mu) != bits(&sb.mu) || bits(&sa.nu) != bits(&sb.nu) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reduction() -> Check {
    let mut instances = 0;
    for (name, _, _) in CODES {
        let c = code(name);
        let graph = c.tanner_graph(CheckSide::Z);
        let k = c.num_classes();
        for t in 0..REDUCTION_INSTANCES {
            let mut rng = trial_rng(0xacce, t);
            let e = sample_error(REDUCTION_ALPHA, c.n, &mut rng);
            let s = graph.syndrome(&e).map_err(|e| e.to_string())?;
            let iso = DecoderConfig::isotropic(REDUCTION_ALPHA, REDUCTION_ITERS);
            let ones = DecoderConfig::edge(REDUCTION_ALPHA, REDUCTION_ITERS, vec![1.0; k]);
            if !same_messages(&graph, &iso, &ones, &s)? {
                return Err(format!(
                    "{name} instance {t}: unit edge damping differs from isotropic"
                ));
            }
            let (xa, xb) = (
                0.5 + 0.5 * (t as f64 / 100.0),
                1.0 - 0.4 * (t as f64 / 100.0),
            );
            let block = DecoderConfig::block(REDUCTION_ALPHA, REDUCTION_ITERS, xa, xb);
            let edge = DecoderConfig::edge(
                REDUCTION_ALPHA,
                REDUCTION_ITERS,
                block_as_edge_xi(c.num_a(), c.num_b(), xa, xb),
            );
            if !same_messages(&graph, &block, &edge, &s)? {
                return Err(format!(
                    "{name} instance {t}: block differs from collapsed edge"
                ));
            }
            instances += 1;
        }
    }
    Ok(format!(
        "{instances} instances bitwise identical over {REDUCTION_ITERS} iterations"
    ))
}

fn shipped_ensemble(name: &str) -> Result<SelectionArtifact, String> {
    let p = root().join("ensembles").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn stall_and_rescue() -> Check {
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for (name, _, _) in CODES {
        let c = code(name);
        let graph = c.tanner_graph(CheckSide::Z);
        let inst = table_pattern_instances(&c, Coloring::None).map_err(|e| e.to_string())?;
        let iso = MinSum::new(
            &graph,
            &DecoderConfig::isotropic(COVERAGE_ALPHA, STALL_ITERS),
        )
        .map_err(|e| e.to_string())?;
        let mut stalled = 0;
        for i in &inst {
            let out = iso.decode(&i.syndrome).map_err(|e| e.to_string())?;
            stalled += usize::from(
                classify_residual(&i.error, &out, &c, SuccessCriterion::StabilizerGroup)
                    .is_failure(),
            );
        }
        let shipped = shipped_ensemble(name)?;
        let need = required_coverage(name);
        let mut seeds = vec![shipped.pool_seed];
        seeds.extend(FALLBACK_SEEDS.iter().filter(|&&s| s != shipped.pool_seed));
        let mut tried = Vec::new();
        let mut passing = None;
        for seed in seeds {
            let art = select_ensemble(
                &c,
                seed,
                POOL,
                MEMBERS,
                COVERAGE_BUDGET,
                COVERAGE_ALPHA,
                false,
            )
            .map_err(|e| e.to_string())?;
            if seed == shipped.pool_seed && art.members != shipped.members {
                return Err(format!(
                    "{name}: shipped ensemble differs from seed {seed} selection"
                ));
            }
            tried.push(format!("{seed}:{:.4}", art.covered_fraction));
            if art.covered_fraction >= need {
                passing = Some(seed);
                break;
            }
        }
        let line = format!(
            "{name} isotropic stalls on {stalled}/{} at I={STALL_ITERS}, coverage at I={COVERAGE_BUDGET} by seed [{}] need {need}",
            inst.len(),
            tried.join(" ")
        );
        if stalled == 0 || passing.is_none() {
            failed.push(line);
        } else if passing != Some(shipped.pool_seed) {
            failed.push(format!(
                "{line}; passing seed {passing:?} is not the shipped one"
            ));
        } else {
            parts.push(line);
        }
    }
    if failed.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(failed
            .into_iter()
            .chain(parts)
            .collect::<Vec<_>>()
            .join("; "))
    }
}

fn ler_ordering() -> Check {
    let alpha = default_alphas()[LER_ALPHA_INDEX];
    let mut parts = Vec::new();
    let mut flat = Vec::new();
    let mut bad = Vec::new();
    for (name, _, _) in CODES {
        let c = code(name);
        let decoders = load_decoders(&root().join("decoders").join(format!("{name}.json")))
            .map_err(|e| e.to_string())?;
        let iso = decoders
            .iter()
            .find(|d| d.kind.mode_str() == "isotropic")
            .ok_or("no isotropic decoder")?;
        let ens = decoders
            .iter()
            .find(|d| d.kind.mode_str() == "ensemble")
            .ok_or("no ensemble decoder")?;
        let opts = SimOptions::default();
        let run = |d, i| {
            run_point(&c, d, alpha, i, LER_TRIALS, LER_SEED, opts).map_err(|e| e.to_string())
        };
        let (i10, i50, e50) = (run(iso, 10)?, run(iso, 50)?, run(ens, 50)?);
        let line = format!(
            "{name} iso10 {:.4} iso50 {:.4} [{:.4},{:.4}] ens50 {:.5} [{:.5},{:.5}]",
            i10.ler, i50.ler, i50.ci_lo, i50.ci_hi, e50.ler, e50.ci_lo, e50.ci_hi
        );
        if !(e50.ler < i50.ler && !e50.overlaps(&i50)) {
            bad.push(line.clone());
        }
        if i10.overlaps(&i50) {
            flat.push(name);
        }
        parts.push(line);
    }
    let summary = format!(
        "alpha {alpha} trials {LER_TRIALS}: {}; iso I=10 vs I=50 overlap on {flat:?}",
        parts.join("; ")
    );
    if bad.is_empty() && !flat.is_empty() {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("gbcodes-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let name = "bb_288_12_18";
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.join(format!("t{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_gbcodes"))
            .args(["simulate", "--code"])
            .arg(root().join("codes").join(format!("{name}.json")))
            .arg("--decoders")
            .arg(root().join("decoders").join(format!("{name}.json")))
            .args([
                "--alphas",
                "0.02,0.04",
                "--iters",
                "10,50",
                "--trials",
                DETERMINISM_TRIALS,
                "--seed",
                "7",
            ])
            .arg("--out")
            .arg(&out)
            .env("GBCODES_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    if outputs[0] == outputs[1] {
        Ok(format!(
            "{} CSV bytes identical for 1 and 4 threads",
            outputs[0].len()
        ))
    } else {
        Err("CSV differs between thread counts".into())
    }
}

fn info_generic_k44() -> String {
    let shapes: Vec<Shape> = TABLE_COLUMNS.iter().map(|c| c.1).collect();
    let fc = family_counts(4, 4, Gluing::Generic, &shapes);
    let row = |col| {
        shapes
            .iter()
            .map(|&s| format!("{:?}", fc.get(s, col)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "K4,4 generic gluing: none [{}] block [{}]",
        row(Coloring::None),
        row(Coloring::Block)
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("table-counts", table_cells),
        ("closed-form-pattern-condition", closed_form),
        ("edge-colored-rigidity", rigidity),
        ("orbit-equivariance", equivariance),
        ("code-parameters", code_parameters),
        ("anisotropic-reduction", reduction),
        ("stall-and-rescue", stall_and_rescue),
        ("ler-ordering", ler_ordering),
        ("simulate-determinism", determinism),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failures += 1;
                println!("FAIL {name} ({secs:.1}s): {d}");
            }
        }
    }
    println!("info {}", info_generic_k44());
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
