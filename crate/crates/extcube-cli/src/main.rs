//! Batch command-line interface for the engine: basis listings, Ext chart
//! computation and rendering, theorem verification sweeps, representative
//! traces, and the chart/oracle cross-check.
//!
//! Exit codes: 0 on success, 1 when a verification or comparison finds a
//! violation, 2 on configuration or parse errors. Output is deterministic
//! byte-for-byte for a fixed configuration and seed.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use extcube::koszul::{
    self, ext_chart_with_structure, run_trace, verify_no_odd_towers, verify_odd_stem_bound,
    verify_stem_minus_one, weights_up_to, KoszulElement,
};
use extcube::milnor::Context;
use extcube::multicomplex::{Multicomplex, SolveStrategy, SparseElem};
use extcube::resolution::{minimal_resolution, module_from_weight};
use extcube::synth::random_multicomplex;
use extcube::{ExtChart, FpMatrix, FpVector, Prime};

#[derive(Parser)]
#[command(
    name = "extcube",
    about = "Ext charts over exterior subalgebras of the Steenrod algebra",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Svg,
}

#[derive(Args)]
struct CommonOpts {
    /// Prime p
    #[arg(short = 'p', long = "prime", default_value_t = 2)]
    prime: u32,
    /// Height n
    #[arg(short = 'n', long = "height", default_value_t = 0)]
    height: u32,
    /// Largest weight to compute (defaults to 2p^(n+2), rounded down to a
    /// multiple of 2p)
    #[arg(long = "max-weight")]
    max_weight: Option<i64>,
    /// Filtration truncation (defaults to 2 + w_max/(2p-2))
    #[arg(long = "max-s")]
    max_s: Option<i64>,
    /// Output format
    #[arg(long = "format", value_enum, default_value = "text")]
    format: Format,
    /// Write output to a file instead of stdout
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Accept primes outside the default whitelist {2, 3, 5, 7}
    #[arg(long = "allow-any-prime", default_value_t = false)]
    allow_any_prime: bool,
    /// Refuse computations that would allocate more than this many cells
    #[arg(long = "max-cells", default_value_t = 4_000_000)]
    max_cells: u64,
}

#[derive(Subcommand)]
enum Command {
    /// List the module basis per weight with degree/weight/stem columns
    Basis {
        #[command(flatten)]
        common: CommonOpts,
        /// A single weight to list (otherwise sweeps all weights <= max)
        #[arg(short = 'w', long = "weight")]
        weight: Option<i64>,
    },
    /// Compute the Ext chart and render it (text, json, csv or svg)
    Chart {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the vanishing/bound/tower verifications, or validate a complex file
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Validate a multicomplex fixture instead of the Koszul sweeps
        #[arg(long = "complex-file")]
        complex_file: Option<PathBuf>,
    },
    /// Trace the representative-improvement algorithm from a start element
    Trace {
        #[command(flatten)]
        common: CommonOpts,
        /// Start element, e.g. "v0^2 v1 * xi1^18 tau3" (or cell sums with
        /// --complex-file)
        #[arg(long = "start")]
        start: String,
        /// Direction processing order, e.g. "2,1,0" (default n,...,0)
        #[arg(long = "order")]
        order: Option<String>,
        /// Run on a multicomplex fixture instead of the Koszul complex
        #[arg(long = "complex-file")]
        complex_file: Option<PathBuf>,
    },
    /// Compare the Koszul chart against the minimal-resolution Ext, per weight
    OracleCompare {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Seeded randomized structural self-checks (linear algebra and
    /// multicomplex invariants)
    Selftest {
        #[command(flatten)]
        common: CommonOpts,
        /// Seed for the randomized sweeps
        #[arg(long = "seed", default_value_t = 0)]
        seed: u64,
    },
}

struct Config {
    ctx: Context,
    w_max: i64,
    s_max: i64,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn resolve(common: &CommonOpts) -> Result<Config, String> {
    if !common.allow_any_prime && ![2, 3, 5, 7].contains(&common.prime) {
        return Err(format!(
            "prime {} is outside the default whitelist {{2, 3, 5, 7}}; pass --allow-any-prime to override",
            common.prime
        ));
    }
    let ctx = Context::new(common.prime, common.height).map_err(|e| e.to_string())?;
    let p = common.prime as i64;
    let step = 2 * p;
    let default_w = 2 * p.pow(common.height + 2);
    let mut w_max = common.max_weight.unwrap_or(default_w);
    if w_max < 0 {
        return Err("max weight must be non-negative".into());
    }
    w_max -= w_max.rem_euclid(step);
    let s_max = common.max_s.unwrap_or(2 + w_max / (2 * p - 2));
    if s_max < 0 {
        return Err("max s must be non-negative".into());
    }
    Ok(Config { ctx, w_max, s_max })
}

/// Predicted cell count of the sweep, for the memory budget refusal.
fn predicted_cells(cfg: &Config) -> u64 {
    let n = cfg.ctx.n() as u64;
    let mut v_monomials = 1u64; // Σ_{s <= s_max+1} C(s+n, n) = C(s_max+2+n, n+1)
    for k in 1..=(n + 1) {
        v_monomials = v_monomials * (cfg.s_max as u64 + 1 + k) / k;
    }
    let basis_total: u64 = weights_up_to(&cfg.ctx, cfg.w_max)
        .iter()
        .map(|&w| cfg.ctx.enumerate_basis(w).len() as u64)
        .sum();
    v_monomials.saturating_mul(basis_total)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| e.to_string()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Basis { common, weight } => cmd_basis(&common, weight),
        Command::Chart { common } => cmd_chart(&common),
        Command::Verify {
            common,
            complex_file,
        } => cmd_verify(&common, complex_file),
        Command::Trace {
            common,
            start,
            order,
            complex_file,
        } => cmd_trace(&common, &start, order.as_deref(), complex_file),
        Command::OracleCompare { common } => cmd_oracle_compare(&common),
        Command::Selftest { common, seed } => cmd_selftest(&common, seed),
    }
}

fn cmd_basis(common: &CommonOpts, weight: Option<i64>) -> ExitCode {
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if common.format == Format::Svg || common.format == Format::Csv {
        return config_error("basis supports text and json output");
    }
    let weights = match weight {
        Some(w) => vec![w],
        None => weights_up_to(&cfg.ctx, cfg.w_max),
    };
    let mut text = String::new();
    let mut rows = Vec::new();
    for w in weights {
        for m in cfg.ctx.enumerate_basis(w) {
            let deg = m.degree(cfg.ctx.prime());
            text.push_str(&format!(
                "{:<30} deg={:<6} weight={:<6} stem={}\n",
                m.to_string(),
                deg,
                w,
                -deg
            ));
            rows.push(serde_json::json!({
                "monomial": m,
                "text": m.to_string(),
                "degree": deg,
                "weight": w,
                "stem": -deg,
            }));
        }
    }
    let content = match common.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::Value::Array(rows)).unwrap()
        ),
        _ => text,
    };
    match write_output(&common.out, &content) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => config_error(e),
    }
}

fn cmd_chart(common: &CommonOpts) -> ExitCode {
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let predicted = predicted_cells(&cfg);
    if predicted > common.max_cells {
        return config_error(format!(
            "window needs ~{predicted} cells, above the budget of {}; lower --max-weight or --max-s (or raise --max-cells)",
            common.max_cells
        ));
    }
    let (chart, lines) = match ext_chart_with_structure(&cfg.ctx, cfg.w_max, cfg.s_max) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let content = match common.format {
        Format::Text => chart.to_text(),
        Format::Json => format!("{}\n", chart.to_json()),
        Format::Csv => chart.to_csv(),
        Format::Svg => chart.to_svg(&lines),
    };
    match write_output(&common.out, &content) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => config_error(e),
    }
}

fn cmd_verify(common: &CommonOpts, complex_file: Option<PathBuf>) -> ExitCode {
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(path) = complex_file {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        };
        let mc = match Multicomplex::from_fixture(cfg.ctx.prime(), &text) {
            Ok(mc) => mc,
            Err(e) => return config_error(e),
        };
        let diagnostics = mc.validate();
        if diagnostics.is_empty() {
            println!(
                "complex valid: {} cells, {} directions",
                mc.cell_count(),
                mc.directions()
            );
            return ExitCode::SUCCESS;
        }
        for d in &diagnostics {
            println!("violation: {d}");
        }
        return ExitCode::from(1);
    }
    let mut failed = false;
    match verify_stem_minus_one(&cfg.ctx, cfg.w_max, cfg.s_max) {
        Ok(report) => {
            print!("{report}");
            failed |= !report.passed();
        }
        Err(e) => return config_error(e),
    }
    match verify_odd_stem_bound(&cfg.ctx, cfg.w_max, cfg.s_max) {
        Ok(report) => {
            print!("{report}");
            failed |= !report.passed();
        }
        Err(e) => return config_error(e),
    }
    let mut inconclusive = 0usize;
    for w in weights_up_to(&cfg.ctx, cfg.w_max) {
        match verify_no_odd_towers(&cfg.ctx, w, cfg.s_max) {
            Ok(report) => {
                failed |= !report.passed();
                inconclusive += report.inconclusive.len();
                if !report.passed() {
                    print!("{report}");
                }
            }
            Err(e) => return config_error(e),
        }
    }
    println!(
        "odd-stem v-power annihilation (p={}, n={}, w<={}, s<={}): {} ({} inconclusive at the window edge)",
        cfg.ctx.p(),
        cfg.ctx.n(),
        cfg.w_max,
        cfg.s_max,
        if failed { "FAIL" } else { "pass" },
        inconclusive
    );
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn parse_order(order: Option<&str>, directions: usize) -> Result<Option<Vec<usize>>, String> {
    let Some(order) = order else {
        return Ok(None);
    };
    let parsed: Result<Vec<usize>, _> = order.split(',').map(|t| t.trim().parse()).collect();
    let parsed = parsed.map_err(|_| format!("malformed --order `{order}`"))?;
    let mut sorted = parsed.clone();
    sorted.sort_unstable();
    if sorted != (0..directions).collect::<Vec<_>>() {
        return Err(format!("--order must be a permutation of 0..{directions}"));
    }
    Ok(Some(parsed))
}

fn cmd_trace(
    common: &CommonOpts,
    start: &str,
    order: Option<&str>,
    complex_file: Option<PathBuf>,
) -> ExitCode {
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(path) = complex_file {
        return cmd_trace_fixture(&cfg, &path, start, order);
    }
    let element = match KoszulElement::parse(&cfg.ctx, start) {
        Ok(e) => e,
        Err(e) => return config_error(e),
    };
    let order = match parse_order(order, cfg.ctx.n() as usize + 1) {
        Ok(o) => o,
        Err(e) => return config_error(e),
    };
    let trace = match run_trace(&cfg.ctx, &element, order.as_deref()) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let mut text = format!("start: {}\n", trace.start);
    for step in &trace.steps {
        text.push_str(&format!("step for direction {}\n", step.direction));
        for (component, witness, after) in &step.substitutions {
            text.push_str(&format!(
                "  boundary component {component}\n  witness a = {witness}\n  state: {after}\n"
            ));
        }
        text.push_str(&format!("  output: {}\n", step.output));
    }
    text.push_str(&format!("result: {}\n", trace.result));
    let content = match common.format {
        Format::Json => {
            let doc = serde_json::json!({
                "start": trace.start.to_string(),
                "steps": trace.steps.iter().map(|s| serde_json::json!({
                    "direction": s.direction,
                    "substitutions": s.substitutions.iter().map(|(c, w, a)| serde_json::json!({
                        "component": c.to_string(),
                        "witness": w.to_string(),
                        "state": a.to_string(),
                    })).collect::<Vec<_>>(),
                    "output": s.output.to_string(),
                })).collect::<Vec<_>>(),
                "result": trace.result.to_string(),
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        Format::Text => text,
        _ => return config_error("trace supports text and json output"),
    };
    match write_output(&common.out, &content) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => config_error(e),
    }
}

fn cmd_trace_fixture(cfg: &Config, path: &PathBuf, start: &str, order: Option<&str>) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", path.display())),
    };
    let mc = match Multicomplex::from_fixture(cfg.ctx.prime(), &text) {
        Ok(mc) => mc,
        Err(e) => return config_error(e),
    };
    // parse "x + 2*y" over cell names
    let mut elem = SparseElem::zero();
    for part in start.split('+') {
        let part = part.trim();
        let (coeff, name) = match part.split_once('*') {
            Some((c, n)) => match c.trim().parse::<i64>() {
                Ok(c) => (c, n.trim()),
                Err(_) => return config_error(format!("bad coefficient in `{part}`")),
            },
            None => (1, part),
        };
        let Some(id) = mc.cell_id(name) else {
            return config_error(format!("unknown cell `{name}`"));
        };
        elem.add_term(cfg.ctx.prime(), id, cfg.ctx.prime().reduce(coeff));
    }
    let order = match parse_order(order, mc.directions()) {
        Ok(Some(o)) => o,
        Ok(None) => (0..mc.directions()).rev().collect(),
        Err(e) => return config_error(e),
    };
    let (result, trace) = match mc.improve_representative(&elem, &order, &SolveStrategy, None) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let mut out = format!("start: {}\n", mc.format_elem(&elem));
    for step in &trace.steps {
        out.push_str(&format!("step for direction {}\n", step.direction));
        for sub in &step.substitutions {
            out.push_str(&format!(
                "  boundary component {}\n  witness a = {}\n  state: {}\n",
                mc.format_elem(&sub.component),
                mc.format_elem(&sub.witness),
                mc.format_elem(&sub.after)
            ));
        }
        out.push_str(&format!("  output: {}\n", mc.format_elem(&step.output)));
    }
    out.push_str(&format!("result: {}\n", mc.format_elem(&result)));
    print!("{out}");
    ExitCode::SUCCESS
}

fn cmd_oracle_compare(common: &CommonOpts) -> ExitCode {
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let chart: ExtChart = match koszul::ext_chart(&cfg.ctx, cfg.w_max, cfg.s_max) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let mut mismatches = 0usize;
    let mut edge_rows = 0usize;
    for w in weights_up_to(&cfg.ctx, cfg.w_max) {
        let module = match module_from_weight(&cfg.ctx, w) {
            Ok(m) => m,
            Err(e) => return config_error(e),
        };
        let res = match minimal_resolution(&module, cfg.s_max as usize) {
            Ok(r) => r,
            Err(e) => return config_error(e),
        };
        let mut oracle: std::collections::BTreeMap<(i64, i64), usize> = Default::default();
        for ((s, t), dim) in res.ext_dims() {
            oracle.insert((s as i64, t - s as i64), dim);
        }
        let mut koszul_dims: std::collections::BTreeMap<(i64, i64), usize> = Default::default();
        for (k, &dim) in &chart.entries {
            if k.w == w {
                koszul_dims.insert((k.s, k.stem), dim);
            }
        }
        let keys: std::collections::BTreeSet<(i64, i64)> =
            oracle.keys().chain(koszul_dims.keys()).copied().collect();
        for key in keys {
            let (s, stem) = key;
            let a = koszul_dims.get(&key).copied().unwrap_or(0);
            let b = oracle.get(&key).copied().unwrap_or(0);
            if a == b {
                continue;
            }
            if s >= cfg.s_max {
                // the last filtration row can differ by convention between
                // the two computations; flagged, not failed
                edge_rows += 1;
                println!("edge row (not a failure): w={w} s={s} stem={stem} chart={a} oracle={b}");
            } else {
                mismatches += 1;
                println!("MISMATCH: w={w} s={s} stem={stem} chart={a} oracle={b}");
            }
        }
    }
    println!(
        "oracle comparison (p={}, n={}, w<={}, s<{}): {} mismatches, {} edge rows",
        cfg.ctx.p(),
        cfg.ctx.n(),
        cfg.w_max,
        cfg.s_max,
        mismatches,
        edge_rows
    );
    if mismatches > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_selftest(common: &CommonOpts, seed: u64) -> ExitCode {
    use rand::{Rng, SeedableRng};
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut checks = 0usize;
    // linear algebra invariants
    for _ in 0..200 {
        let p = Prime::new([2u32, 3, 5, 7][rng.gen_range(0..4)]).unwrap();
        let rows = rng.gen_range(1..9);
        let cols = rng.gen_range(1..9);
        let data: Vec<Vec<u32>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(0..p.get())).collect())
            .collect();
        let m = FpMatrix::from_rows(p, &data);
        let rank = m.rank();
        let kernel = m.kernel_basis();
        if rank + kernel.len() != cols {
            eprintln!("rank-nullity violated");
            return ExitCode::from(1);
        }
        for v in &kernel {
            if !m.mul_vector(v).unwrap().is_zero() {
                eprintln!("kernel vector not annihilated");
                return ExitCode::from(1);
            }
        }
        let x = FpVector::from_entries(
            p,
            &(0..cols)
                .map(|_| rng.gen_range(0..p.get()))
                .collect::<Vec<_>>(),
        );
        let b = m.mul_vector(&x).unwrap();
        match m.solve(&b) {
            Ok(Some(x2)) if m.mul_vector(&x2).unwrap() == b => {}
            _ => {
                eprintln!("solve failed on an image point");
                return ExitCode::from(1);
            }
        }
        checks += 1;
    }
    // multicomplex invariants on random tensor complexes
    for k in 0..10 {
        let p = Prime::new([2u32, 3, 5][k % 3]).unwrap();
        let (mc, kunneth) = random_multicomplex(p, seed.wrapping_add(k as u64), 3, 3, 5);
        if !mc.validate().is_empty() {
            eprintln!("random complex failed validation");
            return ExitCode::from(1);
        }
        let dirs: Vec<usize> = (0..3).collect();
        let h = match mc.partial_homology(&dirs) {
            Ok(h) => h,
            Err(e) => return config_error(e),
        };
        let expected: usize = kunneth.values().sum();
        if h.total_dim() != expected {
            eprintln!("Künneth dimension mismatch");
            return ExitCode::from(1);
        }
        checks += 1;
    }
    // divide/q_action round trips in the configured context
    let c = cfg.ctx;
    let mut trips = 0usize;
    let weights = weights_up_to(&c, cfg.w_max);
    for _ in 0..400 {
        if trips >= 50 {
            break;
        }
        let w = weights[rng.gen_range(0..weights.len())];
        let i = rng.gen_range(0..=c.n());
        let basis = c.enumerate_basis(w);
        let mut y = extcube::CohomElement::zero(c.prime());
        let degrees: Vec<i64> = basis
            .iter()
            .filter(|m| m.degree(c.prime()) % 2 == 0)
            .map(|m| m.degree(c.prime()))
            .collect();
        if degrees.is_empty() {
            continue;
        }
        let target = degrees[rng.gen_range(0..degrees.len())];
        for m in &basis {
            if m.degree(c.prime()) == target && rng.gen_bool(0.5) {
                y.add_term(m.clone(), rng.gen_range(1..c.p().max(2)));
            }
        }
        let x = match c.q_action(i, &y) {
            Ok(x) => x,
            Err(e) => return config_error(e),
        };
        if x.is_zero() {
            continue;
        }
        match c.divide(i, &x) {
            Ok(d) => {
                if c.q_action(i, &d).unwrap() != x {
                    eprintln!("divide round trip failed");
                    return ExitCode::from(1);
                }
                trips += 1;
            }
            Err(e) => {
                eprintln!("divide failed on a boundary: {e}");
                return ExitCode::from(1);
            }
        }
    }
    checks += trips;
    println!("selftest: pass ({checks} checks, seed {seed})");
    ExitCode::SUCCESS
}
