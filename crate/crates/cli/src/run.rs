//! The verbs. Each returns `Ok(passed)` or a configuration error.

use std::io::Write;

use clap::ValueEnum;
use floquet_core::decoder::{build_syndrome_graph, estimate_logical_error_rate, SyndromeGraph};
use floquet_core::defects::{defect_schedule, find_line, insert_defect_line, verify_defect_line, verify_inference, zigzag_line};
use floquet_core::floquet::{run_schedule, verify_automorphism, verify_effective_toric, verify_isg, FloquetCode, Round, Schedule};
use floquet_core::toric::{self, SquareTopology};
use floquet_core::{Error, HexLattice, LatticePath, ModParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, DefectSpec, LatticeKind, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verify {
    Isg,
    Automorphism,
    EffectiveToric,
    Defect,
    Inference,
    TcAppendix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Json,
}

type Outcome = Result<bool, ConfigError>;

fn core(at: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| ConfigError::new(at, e.to_string())
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), ConfigError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| ConfigError::new(path, e.to_string())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| ConfigError::new("stdout", e.to_string()))
        }
    }
}

fn emit_json(cfg: &RunConfig, key: &str, value: Value, passed: Option<bool>) -> Result<(), ConfigError> {
    let mut doc = json!({ "config": cfg, key: value });
    if let Some(p) = passed {
        doc["passed"] = json!(p);
    }
    emit(cfg, &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap()
}

fn params(cfg: &RunConfig) -> Result<ModParams, ConfigError> {
    ModParams::new(cfg.n, cfg.p_aut.unwrap(), cfg.q_aut.unwrap()).map_err(core("N"))
}

fn base_code(cfg: &RunConfig) -> Result<FloquetCode, ConfigError> {
    let params = params(cfg)?;
    match cfg.lattice {
        LatticeKind::Torus => FloquetCode::torus(cfg.l.unwrap_or(6), params).map_err(core("L")),
        LatticeKind::Planar => {
            let lat = HexLattice::build_planar(cfg.rows, cfg.cols).map_err(core("rows"))?;
            FloquetCode::new(lat, params).map_err(core("lattice"))
        }
    }
}

/// The configured code with every defect line inserted.
fn code(cfg: &RunConfig) -> Result<FloquetCode, ConfigError> {
    let mut c = base_code(cfg)?;
    let mut colored = 0i64;
    for (k, spec) in cfg.defects.iter().enumerate() {
        let at = format!("defects[{k}]");
        let path = match spec {
            DefectSpec::Zigzag { i, j, len } => zigzag_line(&c.lattice, *i, *j, *len).map_err(core(&at))?,
            DefectSpec::Removed { color, len } => {
                let start =
                    c.lattice.vertex_at((1, 1 + 3 * colored), 0).ok_or_else(|| ConfigError::new(&at, "no room for another line"))?;
                colored += 1;
                find_line(&c.lattice, start, *len, Some(*color))
                    .ok_or_else(|| ConfigError::new(&at, format!("no length-{len} line removing {color}-checks")))?
            }
            DefectSpec::Path(vs) => LatticePath::from_vertices(&c.lattice, vs.clone()).map_err(core(&at))?,
        };
        c = insert_defect_line(&c, &path).map_err(core(&at))?.0;
    }
    Ok(c)
}

fn six_round_period() -> Vec<Round> {
    vec![Round::Tilde(0), Round::Star(1), Round::Star(2), Round::Star(1), Round::Tilde(0), Round::Star(2)]
}

fn schedule(cfg: &RunConfig, code: &FloquetCode) -> Result<Schedule, ConfigError> {
    let s = match cfg.schedule.as_str() {
        "standard" => Ok(Schedule::standard()),
        "three-round" if code.defect_lines.is_empty() => Ok(Schedule::standard()),
        "three-round" => defect_schedule(code, cfg.d, false),
        "six-round" => defect_schedule(code, cfg.d, true),
        text => Schedule::parse(text),
    };
    let s = s.map_err(core("schedule"))?;
    s.validate(code).map_err(core("schedule"))?;
    Ok(s)
}

pub fn build(cfg: &RunConfig, with_lines: bool) -> Outcome {
    let c = if with_lines { code(cfg)? } else { base_code(cfg)? };
    if with_lines && c.defect_lines.is_empty() {
        return Err(ConfigError::new("defects", "no defect lines configured"));
    }
    emit_json(cfg, "code", c.to_json(), None)?;
    Ok(true)
}

pub fn trace(cfg: &RunConfig) -> Outcome {
    let c = code(cfg)?;
    let s = schedule(cfg, &c)?;
    let tr = run_schedule(&c, &s, cfg.periods, &mut rng(cfg)).map_err(core("run"))?;
    emit_json(cfg, "trace", tr.to_json(), None)?;
    Ok(true)
}

pub fn verify(cfg: &RunConfig, what: Verify) -> Outcome {
    let (report, passed) = match what {
        Verify::Isg => {
            let c = code(cfg)?;
            let tr = run_schedule(&c, &schedule(cfg, &c)?, cfg.periods, &mut rng(cfg)).map_err(core("run"))?;
            let reps = (tr.init_len..tr.len()).map(|t| verify_isg(&c, &tr, t)).collect::<Result<Vec<_>, _>>().map_err(core("isg"))?;
            let passed = reps.iter().all(|r| r.equal);
            (to_value(&reps), passed)
        }
        Verify::Automorphism => {
            let c = code(cfg)?;
            let reps = [true, false]
                .iter()
                .map(|&h| verify_automorphism(&c, h, &mut rng(cfg)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core("automorphism"))?;
            let passed = reps.iter().all(|r| r.passed());
            (to_value(&reps), passed)
        }
        Verify::EffectiveToric => {
            let c = code(cfg)?;
            let tr = run_schedule(&c, &schedule(cfg, &c)?, cfg.periods, &mut rng(cfg)).map_err(core("run"))?;
            let reps = (tr.init_len..tr.len())
                .map(|t| verify_effective_toric(&c, &tr, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core("effective-toric"))?;
            let passed = reps.iter().all(|r| r.passed());
            (to_value(&reps), passed)
        }
        Verify::Defect => {
            let c = code(cfg)?;
            if c.defect_lines.is_empty() {
                return Err(ConfigError::new("defects", "no defect lines configured"));
            }
            let tr = run_schedule(&c, &schedule(cfg, &c)?, cfg.periods, &mut rng(cfg)).map_err(core("run"))?;
            let reps =
                c.defect_lines.iter().map(|l| verify_defect_line(&c, l, &tr)).collect::<Result<Vec<_>, _>>().map_err(core("defect"))?;
            let passed = reps.iter().all(|r| r.passed());
            (to_value(&reps), passed)
        }
        Verify::Inference => return inference(cfg),
        Verify::TcAppendix => tc_appendix(cfg)?,
    };
    if !passed {
        eprintln!("verification failed");
    }
    emit_json(cfg, "reports", report, Some(passed))?;
    Ok(passed)
}

fn inference(cfg: &RunConfig) -> Outcome {
    let c = code(cfg)?;
    if c.defect_lines.is_empty() {
        return Err(ConfigError::new("defects", "inference needs a defect line (try --removed)"));
    }
    let six = cfg.schedule == "six-round";
    let mut refused = None;
    let s = if six {
        match defect_schedule(&c, cfg.d, true) {
            Ok(s) => s,
            // Run the period anyway so the report shows what is missing.
            Err(e @ Error::InferenceImpossible) => {
                refused = Some(e.to_string());
                let mut s = defect_schedule(&c, cfg.d, false).map_err(core("schedule"))?;
                s.period = six_round_period();
                s
            }
            Err(e) => return Err(core("schedule")(e)),
        }
    } else {
        schedule(cfg, &c)?
    };
    let rep = verify_inference(&c, &s, cfg.periods, &mut rng(cfg)).map_err(core("inference"))?;
    let passed = if six { rep.all_inferred() } else { rep.within_one_period() };
    let never = rep.entries.iter().filter(|e| e.inferred_at.is_none()).count();
    if never > 0 {
        eprintln!("never inferred: {never} of {} products", rep.entries.len());
    } else if !passed {
        eprintln!("verification failed: inferred later than one period");
    }
    let value = json!({ "report": rep, "schedule_refused": refused });
    emit_json(cfg, "reports", value, Some(passed))?;
    Ok(passed)
}

fn tc_appendix(cfg: &RunConfig) -> Result<(Value, bool), ConfigError> {
    let l = cfg.l.unwrap_or(14);
    if l < 12 {
        return Err(ConfigError::new("L", format!("tc-appendix needs L ≥ 12, got {l}")));
    }
    let at = core("tc-appendix");
    let c = toric::build_toric(SquareTopology::Torus { lx: l, ly: l }).map_err(&at)?;
    let h = l / 2;
    let straight = toric::condense_fermion_line(&c, &toric::straight_path(&c, 2, h - 2, h - 2).map_err(&at)?).map_err(&at)?;
    let bent = toric::condense_fermion_line(&c, &toric::l_path(&c, 2, 3, h - 1, h - 1).map_err(&at)?).map_err(&at)?;
    let reps = [toric::verify_tc_twist(&straight, 0).map_err(&at)?, toric::verify_tc_twist(&bent, 0).map_err(&at)?];
    let base = c.logical_count().map_err(&at)?.as_integer();
    let one = toric::condense_fermion_line(&c, &toric::straight_path(&c, 1, 2, 5).map_err(&at)?).map_err(&at)?;
    let two = toric::condense_fermion_line(&one, &toric::straight_path(&c, 1, 2 + h, 5).map_err(&at)?).map_err(&at)?;
    let after = two.logical_count().map_err(&at)?.as_integer();
    let passed = reps.iter().all(|r| r.passed()) && base.is_some() && after == base.map(|b| b + 1);
    Ok((json!({ "twists": reps, "logical_without_lines": base, "logical_with_two_lines": after }), passed))
}

fn threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("FLOQUET_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::new("FLOQUET_THREADS", format!("expected a positive integer, got {v:?}")))?;
    // A second call in the same process would fail; the first setting wins.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn graph(cfg: &RunConfig) -> Result<(FloquetCode, SyndromeGraph), ConfigError> {
    let c = code(cfg)?;
    let s = schedule(cfg, &c)?;
    let weight_p = cfg.p.iter().copied().find(|&p| p > 0.0).unwrap_or(0.01);
    let g = build_syndrome_graph(&c, &s, cfg.periods, weight_p).map_err(core("graph"))?;
    Ok((c, g))
}

fn layout(cfg: &RunConfig, c: &FloquetCode) -> String {
    let shape = match cfg.lattice {
        LatticeKind::Torus => format!("torus-L{}", cfg.l.unwrap_or(6)),
        LatticeKind::Planar => format!("planar-{}x{}", cfg.rows, cfg.cols),
    };
    format!("{shape}-lines{}-d{}", c.defect_lines.len(), cfg.d)
}

#[derive(Serialize)]
struct Row<'a> {
    p: f64,
    d_or_layout: &'a str,
    trials: usize,
    failures: usize,
    rate: f64,
    stderr: f64,
    seed: u64,
}

pub fn sim(cfg: &RunConfig) -> Outcome {
    threads()?;
    let (c, g) = graph(cfg)?;
    let label = layout(cfg, &c);
    let mut w = csv::Writer::from_writer(Vec::new());
    for &p in &cfg.p {
        let r = estimate_logical_error_rate(&g, p, cfg.trials, cfg.seed);
        let row = Row { p, d_or_layout: &label, trials: r.trials, failures: r.failures, rate: r.rate, stderr: r.stderr, seed: r.seed };
        w.serialize(row).map_err(|e| ConfigError::new("csv", e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ConfigError::new("csv", e.to_string()))?;
    emit(cfg, &String::from_utf8(bytes).unwrap())?;
    let resolved = serde_json::to_string_pretty(cfg).unwrap() + "\n";
    match &cfg.out {
        Some(path) => {
            let side = format!("{path}.config.json");
            std::fs::write(&side, resolved).map_err(|e| ConfigError::new(side, e.to_string()))?;
        }
        None => eprint!("{resolved}"),
    }
    Ok(true)
}

pub fn export(cfg: &RunConfig, format: ExportFormat) -> Outcome {
    let (_, g) = graph(cfg)?;
    match format {
        ExportFormat::Dot => emit(cfg, &g.to_dot())?,
        ExportFormat::Json => emit_json(cfg, "graph", g.to_json(), None)?,
    }
    Ok(true)
}
