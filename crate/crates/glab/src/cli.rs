//! Command-line front end: space construction from descriptor strings,
//! subcommand dispatch, deterministic report serialization, and a run
//! manifest for reproducibility.
//!
//! Reports go to stdout (or `--out FILE`) as JSON with every float
//! printed at 17 significant digits, so re-parsing recovers the exact
//! doubles and equal inputs produce byte-identical files. The manifest
//! (tool version, argv, seed, tolerances, timestamp, output digest) is
//! kept out of the report — stderr, or `FILE.manifest.json` next to
//! `--out` — precisely so the timestamp never perturbs report bytes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::experiments::{
    check_upper_bounds, convergence_run, sized_family, witness_block, witness_cesaro_lower,
    witness_difference, witness_summing, witness_trig, UpperBoundInputs,
};
use crate::greedy::{greedy_sets, sigma, worst_chebyshev, ChebConfig, SigmaConfig};
use crate::params::{
    check_democracy_chain, conditionality_est, disjoint_alt_democracy, fundamental_function,
    gamma_cc, quasi_greedy_est, super_democracy, theta_inf, theta_sep, unsigned_democracy,
    DEFAULT_WORK_BUDGET,
};
use crate::spaces::parse_exponent;
use crate::{GlabError, IndexSet, Result, Space, SparseVector};

#[derive(Parser, Debug)]
#[command(
    name = "glab",
    version,
    about = "Greedy-approximation workbench over sequence spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Config file of plain `key = value` lines; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the JSON report here instead of stdout (manifest goes to
    /// FILE.manifest.json)
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Also write a CSV digest of the report
    #[arg(long, global = true, value_name = "FILE")]
    csv: Option<PathBuf>,

    /// Also write two-column plain-text plot data
    #[arg(long, global = true, value_name = "FILE")]
    plot_data: Option<PathBuf>,

    /// Worker threads for parameter sweeps (default 1)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for every randomized family or sample draw (default 7)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Work budget for sweeps and minimizations; 0 keeps each routine's
    /// built-in default
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Minimization tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SpaceArg {
    /// Space descriptor: summing:N | difference:N | lp:p:N |
    /// trig:p:maxfreq[:grid] | block:default:kmax | block:geom:base:kmax
    #[arg(long)]
    space: Option<String>,
}

#[derive(Args, Debug, Default)]
struct VectorArg {
    /// Coefficients: inline `i:re[:im]` entries joined by commas, or a
    /// path to a JSON file of [index, re, im] triples (optionally
    /// prefixed with @)
    #[arg(long)]
    x: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Norm of a coefficient vector
    Norm {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
    },
    /// Enumerate every threshold-t selection of size m
    Greedy {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Worst corrected residual over all threshold-t selections
    Cheb {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Best m-term approximation error by support enumeration
    Sigma {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Parameter tables over an index window
    Params {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long)]
        m: Option<usize>,
        /// Window as `lo:hi` (default: the whole space window)
        #[arg(long)]
        window: Option<String>,
        /// Comma list of tables: mu, mu-unsigned, mu-alt, gamma, phi,
        /// theta, theta-inf, quasi-greedy, conditionality, or all
        #[arg(long)]
        table: Option<String>,
        /// Separation factors for the theta tables, e.g. `2,3`
        #[arg(long)]
        c: Option<String>,
        /// Number of random vectors in the witness family
        #[arg(long)]
        family: Option<usize>,
    },
    /// Adversarial lower-bound constructions
    Witness {
        #[command(subcommand)]
        which: WitnessCmd,
    },
    /// Verified inequalities; a hard violation exits 4
    Check {
        #[command(subcommand)]
        which: CheckCmd,
    },
    /// Worst corrected and plain residuals for m = 0..=m_max
    Converge {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
        #[arg(long)]
        t: Option<f64>,
        /// Default: the support size of x
        #[arg(long)]
        m_max: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum WitnessCmd {
    /// Sharp prefix-sum-space witness: ratio = 1 + 2(1+1/t)m
    Summing {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Sharp bounded-variation witness: same closed form
    Difference {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Indicator-quotient witness on the circle
    Trig {
        /// Exponent: decimal, fraction like 4/3, or inf
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Democracy-gap exhibit for a block space
    Block {
        #[command(flatten)]
        space: SpaceArg,
        /// Random disjoint-pair samples for the square-root claim
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Measured two-block averaging lower bound
    Cesaro {
        #[command(flatten)]
        space: SpaceArg,
        /// Far or near signed block, comma list of indices
        #[arg(long)]
        a: Option<String>,
        /// Corrected block, comma list of indices
        #[arg(long)]
        b: Option<String>,
        /// Optional ramp vector (same syntax as --x)
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        /// Selection size; defaults to |b|, larger values add padding
        #[arg(long)]
        m: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    /// Measured worst-case ratios against the parameter-based ceilings
    Bounds {
        #[command(flatten)]
        space: SpaceArg,
        #[command(flatten)]
        x: VectorArg,
        /// Comma list of orders to check
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        family: Option<usize>,
    },
    /// Democracy-table comparison lattice
    MuChain {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        window: Option<String>,
    },
}

// ---------------------------------------------------------------------------
// config file and flag resolution

/// Parsed `key = value` config lines. Keys mirror the long flag names;
/// unknown keys are ignored so one file can serve several subcommands.
struct Conf(BTreeMap<String, String>);

impl Conf {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(GlabError::Usage(format!(
                        "config line {} is not `key = value`: {line}",
                        lineno + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                GlabError::Usage(format!("config value for {key} does not parse: {raw}"))
            }),
        }
    }

    /// CLI flag, else config value, else default.
    fn pick<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(match cli {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    /// CLI flag, else config value, else a usage error.
    fn need<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T> {
        match cli {
            Some(v) => Ok(v),
            None => self.get(key)?.ok_or_else(|| {
                GlabError::Usage(format!("missing --{key} (and no `{key}` in the config)"))
            }),
        }
    }
}

fn parse_vector(spec: &str) -> Result<SparseVector> {
    let path = spec.strip_prefix('@').or_else(|| {
        (spec.ends_with(".json") && !spec.contains(':')).then_some(spec)
    });
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)?;
        return serde_json::from_str(&text)
            .map_err(|e| GlabError::Invalid(format!("vector file {path}: {e}")));
    }
    let mut x = SparseVector::new();
    for entry in spec.split(',') {
        let parts: Vec<&str> = entry.split(':').collect();
        let bad =
            || GlabError::Usage(format!("bad vector entry '{entry}'; expected index:re[:im]"));
        match parts.as_slice() {
            [i, re] => x.set(i.trim().parse().map_err(|_| bad())?, crate::core::real(re.trim().parse().map_err(|_| bad())?))?,
            [i, re, im] => x.set(
                i.trim().parse().map_err(|_| bad())?,
                crate::core::Coef::new(
                    re.trim().parse().map_err(|_| bad())?,
                    im.trim().parse().map_err(|_| bad())?,
                ),
            )?,
            _ => return Err(bad()),
        }
    }
    Ok(x)
}

fn parse_window(spec: Option<&str>, space: &Space) -> Result<IndexSet> {
    match spec {
        None => Ok(IndexSet::range(1, space.window())),
        Some(raw) => {
            let bad = || GlabError::Usage(format!("bad window '{raw}'; expected lo:hi"));
            let (lo, hi) = raw.split_once(':').ok_or_else(bad)?;
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if lo < 1 || hi < lo {
                return Err(bad());
            }
            Ok(IndexSet::range(lo, hi))
        }
    }
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| GlabError::Usage(format!("bad {what} entry '{s}'")))
        })
        .collect()
}

fn parse_index_set(raw: &str, what: &str) -> Result<IndexSet> {
    Ok(IndexSet::new(parse_list(raw, what)?))
}

// ---------------------------------------------------------------------------
// deterministic JSON emission

/// Serializes a JSON value with objects in key order and every float at
/// 17 significant digits, so equal values yield byte-equal text and the
/// doubles round-trip exactly.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, depth: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                let _ = write!(out, "{f:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(depth + 1, out);
                write_value(item, depth + 1, out);
            }
            newline_indent(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(depth + 1, out);
                let _ = write!(out, "{}: ", Value::String(key.clone()));
                write_value(item, depth + 1, out);
            }
            newline_indent(depth, out);
            out.push('}');
        }
    }
}

fn newline_indent(depth: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// 64-bit FNV-1a digest of the report bytes, for the manifest.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// dispatch

/// One subcommand's outputs before they are routed to files or stdout.
struct Artifact {
    json: Value,
    csv: Option<String>,
    plot: Option<String>,
    space: Option<String>,
    /// Set when a `check` subcommand found a hard violation; the report
    /// is still written, then the process exits 4.
    failed_bound: Option<String>,
}

impl Artifact {
    fn new(json: Value) -> Self {
        Self {
            json,
            csv: None,
            plot: None,
            space: None,
            failed_bound: None,
        }
    }
}

/// Tolerances and knobs shared by the subcommands.
struct Knobs {
    jobs: usize,
    seed: u64,
    budget: u64,
    tol: Option<f64>,
}

impl Knobs {
    fn cheb_config(&self) -> ChebConfig {
        ChebConfig {
            tol: self.tol,
            budget_per_restart: 0,
        }
    }

    fn sigma_config(&self) -> SigmaConfig {
        SigmaConfig {
            tol: self.tol,
            per_support_budget: 0,
            total_budget: self.budget,
        }
    }

    /// Sweep budget: the flag when given, else the library default.
    fn sweep_budget(&self) -> u64 {
        if self.budget == 0 {
            DEFAULT_WORK_BUDGET
        } else {
            self.budget
        }
    }
}

/// Runs the CLI on the given argv and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(argv.iter().cloned()) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(None) => 0,
        Ok(Some(bound_msg)) => {
            eprintln!("error: bound check failed: {bound_msg}");
            4
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &GlabError) -> i32 {
    match e {
        GlabError::Usage(_) | GlabError::Invalid(_) | GlabError::NonRealCoefficient(_) => 2,
        GlabError::WindowExceeded { .. }
        | GlabError::BudgetExceeded(_)
        | GlabError::Unsupported(_) => 3,
        GlabError::BoundFailed(_) => 4,
        GlabError::Io(_) => 1,
    }
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<Option<String>> {
    let conf = Conf::load(cli.config.as_deref())?;
    let knobs = Knobs {
        jobs: conf.pick(cli.jobs, "jobs", 1)?.max(1),
        seed: conf.pick(cli.seed, "seed", 7)?,
        budget: conf.pick(cli.budget, "budget", 0)?,
        tol: match cli.tol {
            Some(t) => Some(t),
            None => conf.get("tol")?,
        },
    };
    let artifact = dispatch(&cli.cmd, &conf, &knobs)?;

    let report = to_json_string(&artifact.json);
    let digest = fnv64(report.as_bytes());
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command_line": argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
        "space": artifact.space,
        "seed": knobs.seed,
        "tolerances": {
            "tol": knobs.tol,
            "budget": knobs.budget,
            "jobs": knobs.jobs,
        },
        "timestamp": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "output_digest": format!("{digest:016x}"),
    });

    if let Some(path) = &cli.out {
        std::fs::write(path, &report)?;
        let mut manifest_path = path.as_os_str().to_owned();
        manifest_path.push(".manifest.json");
        std::fs::write(manifest_path, to_json_string(&manifest))?;
    } else {
        print!("{report}");
        eprint!("{}", to_json_string(&manifest));
    }
    if let Some(path) = &cli.csv {
        std::fs::write(path, artifact.csv.as_deref().unwrap_or(""))?;
    }
    if let Some(path) = &cli.plot_data {
        std::fs::write(path, artifact.plot.as_deref().unwrap_or(""))?;
    }
    Ok(artifact.failed_bound)
}

fn dispatch(cmd: &Cmd, conf: &Conf, knobs: &Knobs) -> Result<Artifact> {
    match cmd {
        Cmd::Norm { space, x } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let norm = space.norm(&x)?;
            let mut art = Artifact::new(json!({
                "command": "norm",
                "space": space.descriptor(),
                "x": x,
                "norm": norm,
            }));
            art.space = Some(space.descriptor().into());
            Ok(art)
        }
        Cmd::Greedy { space, x, m, t } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let m = conf.need(*m, "m")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let sets = greedy_sets(&x, m, space.window(), t)?;
            let mut art = Artifact::new(json!({
                "command": "greedy",
                "space": space.descriptor(),
                "m": m,
                "t": t,
                "count": sets.len(),
                "sets": sets,
            }));
            art.space = Some(space.descriptor().into());
            Ok(art)
        }
        Cmd::Cheb { space, x, m, t } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let m = conf.need(*m, "m")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let wc = worst_chebyshev(&space, &x, m, t, &knobs.cheb_config())?;
            let mut doc = json!({
                "command": "cheb",
                "space": space.descriptor(),
                "m": m,
                "t": t,
                "worst": wc.worst,
                "worst_set": wc.worst_set,
                "num_sets": wc.sets.len(),
                "evals": wc.evals,
                "converged": wc.converged,
            });
            if wc.sets.len() <= 100 {
                doc["sets"] = serde_json::to_value(&wc.sets).unwrap();
                doc["values"] = serde_json::to_value(&wc.values).unwrap();
            }
            let mut art = Artifact::new(doc);
            art.csv = Some(format!("m,worst\n{m},{:.16e}\n", wc.worst));
            art.space = Some(space.descriptor().into());
            Ok(art)
        }
        Cmd::Sigma { space, x, m } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let m = conf.need(*m, "m")?;
            let s = sigma(&space, &x, m, &knobs.sigma_config())?;
            let mut art = Artifact::new(json!({
                "command": "sigma",
                "space": space.descriptor(),
                "m": m,
                "value": s.value,
                "support": s.support,
                "coefficients": s.coefficients,
                "evals": s.evals,
                "converged": s.converged,
            }));
            art.csv = Some(format!("m,value\n{m},{:.16e}\n", s.value));
            art.space = Some(space.descriptor().into());
            Ok(art)
        }
        Cmd::Params {
            space,
            m,
            window,
            table,
            c,
            family,
        } => params_cmd(
            conf,
            knobs,
            space,
            *m,
            window.as_ref(),
            table.as_ref(),
            c.as_ref(),
            *family,
        ),
        Cmd::Witness { which } => witness_cmd(which, conf, knobs),
        Cmd::Check { which } => check_cmd(which, conf, knobs),
        Cmd::Converge { space, x, t, m_max } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let t = conf.pick(*t, "t", 1.0)?;
            let m_max = conf.pick(*m_max, "m_max", x.support().len())?;
            let run = convergence_run(&space, &x, t, m_max)?;
            let mut csv = String::from("m,cheb,plain\n");
            let mut plot = String::new();
            for p in &run.points {
                let _ = writeln!(csv, "{},{:.16e},{:.16e}", p.m, p.cheb, p.plain);
                let _ = writeln!(plot, "{} {:.16e}", p.m, p.cheb);
            }
            let mut art = Artifact::new(json!({
                "command": "converge",
                "space": space.descriptor(),
                "t": t,
                "run": run,
            }));
            art.csv = Some(csv);
            art.plot = Some(plot);
            art.space = Some(space.descriptor().into());
            Ok(art)
        }
    }
}

fn open_space(flag: &Option<String>, conf: &Conf) -> Result<Space> {
    Space::parse(&conf.need(flag.clone(), "space")?)
}

#[allow(clippy::too_many_arguments)]
fn params_cmd(
    conf: &Conf,
    knobs: &Knobs,
    space: &SpaceArg,
    m: Option<usize>,
    window: Option<&String>,
    table: Option<&String>,
    c: Option<&String>,
    family: Option<usize>,
) -> Result<Artifact> {
    let space = open_space(&space.space, conf)?;
    let m = conf.need(m, "m")?;
    let window_spec: Option<String> = match window {
        Some(w) => Some(w.clone()),
        None => conf.get("window")?,
    };
    let window = parse_window(window_spec.as_deref(), &space)?;
    let which = match table {
        Some(t) => t.clone(),
        None => conf.get("table")?.unwrap_or_else(|| "all".to_string()),
    };
    let c_spec = match c {
        Some(c) => c.clone(),
        None => conf.get("c")?.unwrap_or_else(|| "2".to_string()),
    };
    let c_list: Vec<u32> = parse_list(&c_spec, "separation factor")?;
    let family_n = conf.pick(family, "family", 24)?;
    let budget = knobs.sweep_budget();

    let mut tables: BTreeMap<String, Value> = BTreeMap::new();
    let insert = |name: &str, table: Value, tables: &mut BTreeMap<String, Value>| {
        tables.insert(name.to_string(), table);
    };
    let wants = |name: &str| which == "all" || which.split(',').any(|w| w.trim() == name);
    let mut matched = which == "all";

    if wants("mu") {
        matched = true;
        let (mt, mtd) = super_democracy(&space, m, &window, knobs.jobs, budget)?;
        insert("mu_tilde", serde_json::to_value(&mt).unwrap(), &mut tables);
        insert("mu_tilde_d", serde_json::to_value(&mtd).unwrap(), &mut tables);
    }
    if wants("mu-unsigned") {
        matched = true;
        let (mu, mu_d) = unsigned_democracy(&space, m, &window, knobs.jobs, budget)?;
        insert("mu", serde_json::to_value(&mu).unwrap(), &mut tables);
        insert("mu_d", serde_json::to_value(&mu_d).unwrap(), &mut tables);
    }
    if wants("mu-alt") {
        matched = true;
        let alt = disjoint_alt_democracy(&space, m, &window, knobs.jobs, budget)?;
        insert("mu_tilde_d_alt", serde_json::to_value(&alt).unwrap(), &mut tables);
    }
    if wants("gamma") || (which == "all" && space.field() == crate::core::Field::Real) {
        matched = true;
        let g = gamma_cc(&space, m, &window, knobs.jobs, budget)?;
        insert("gamma", serde_json::to_value(&g).unwrap(), &mut tables);
    }
    if wants("phi") {
        matched = true;
        let phi = fundamental_function(&space, m, &window, knobs.jobs, budget)?;
        insert("phi_r", serde_json::to_value(&phi).unwrap(), &mut tables);
    }
    if wants("theta") {
        matched = true;
        for &cv in &c_list {
            let th = theta_sep(&space, m, cv, &window, knobs.jobs, budget)?;
            insert(&format!("theta_c{cv}"), serde_json::to_value(&th).unwrap(), &mut tables);
        }
    }
    if wants("theta-inf") {
        matched = true;
        let th = theta_inf(&space, m, &window, &c_list, knobs.jobs, budget)?;
        insert("theta", serde_json::to_value(&th).unwrap(), &mut tables);
    }
    if wants("quasi-greedy") || wants("conditionality") {
        let fam = sized_family(&space, m, &window, knobs.seed, family_n)?;
        if wants("quasi-greedy") {
            matched = true;
            let qg = quasi_greedy_est(&space, m, &fam, knobs.jobs, budget)?;
            insert("g", serde_json::to_value(&qg.g).unwrap(), &mut tables);
            insert("g_c", serde_json::to_value(&qg.g_c).unwrap(), &mut tables);
            insert("g_tilde", serde_json::to_value(&qg.g_tilde).unwrap(), &mut tables);
        }
        if wants("conditionality") {
            matched = true;
            let (k, k_c) = conditionality_est(&space, m, &fam, knobs.jobs, budget)?;
            insert("k", serde_json::to_value(&k).unwrap(), &mut tables);
            insert("k_c", serde_json::to_value(&k_c).unwrap(), &mut tables);
        }
    }
    if !matched {
        return Err(GlabError::Usage(format!(
            "unknown table selector '{which}'; pick from mu, mu-unsigned, mu-alt, gamma, \
             phi, theta, theta-inf, quasi-greedy, conditionality, all"
        )));
    }

    let mut csv = String::from("table,m,value\n");
    let mut plot = String::new();
    for (name, table) in &tables {
        if let Some(values) = table.get("values").and_then(Value::as_object) {
            let mut rows: Vec<(usize, &Value)> = values
                .iter()
                .filter_map(|(k, v)| k.parse().ok().map(|k: usize| (k, v)))
                .collect();
            rows.sort_unstable_by_key(|r| r.0);
            for (level, value) in rows {
                match value.as_f64() {
                    Some(v) => {
                        let _ = writeln!(csv, "{name},{level},{v:.16e}");
                        let _ = writeln!(plot, "{level} {v:.16e}");
                    }
                    None => {
                        let _ = writeln!(csv, "{name},{level},");
                    }
                }
            }
            plot.push('\n');
        }
    }

    let mut art = Artifact::new(json!({
        "command": "params",
        "space": space.descriptor(),
        "m": m,
        "window": [window.min().unwrap(), window.max().unwrap()],
        "tables": tables,
    }));
    art.csv = Some(csv);
    art.plot = Some(plot);
    art.space = Some(space.descriptor().into());
    Ok(art)
}

fn witness_cmd(which: &WitnessCmd, conf: &Conf, knobs: &Knobs) -> Result<Artifact> {
    let (report, label): (Value, String) = match which {
        WitnessCmd::Summing { m, t } => {
            let m = conf.need(*m, "m")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let w = witness_summing(m, t)?;
            (serde_json::to_value(&w).unwrap(), format!("summing m={m}"))
        }
        WitnessCmd::Difference { m, t } => {
            let m = conf.need(*m, "m")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let w = witness_difference(m, t)?;
            (serde_json::to_value(&w).unwrap(), format!("difference m={m}"))
        }
        WitnessCmd::Trig { p, m, t } => {
            let p_spec = match p {
                Some(p) => p.clone(),
                None => conf.get("p")?.ok_or_else(|| {
                    GlabError::Usage("missing --p (and no `p` in the config)".into())
                })?,
            };
            let p = parse_exponent(&p_spec)?;
            let m = conf.need(*m, "m")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let w = witness_trig(p, m, t)?;
            (serde_json::to_value(&w).unwrap(), format!("trig p={p_spec} m={m}"))
        }
        WitnessCmd::Block { space, samples } => {
            let space = open_space(&space.space, conf)?;
            let samples = conf.pick(*samples, "samples", 64)?;
            let w = witness_block(&space, knobs.seed, samples)?;
            (serde_json::to_value(&w).unwrap(), format!("block {}", space.descriptor()))
        }
        WitnessCmd::Cesaro { space, a, b, y, t, m } => {
            let space = open_space(&space.space, conf)?;
            let a = parse_index_set(&conf.need(a.clone(), "a")?, "block index")?;
            let b = parse_index_set(&conf.need(b.clone(), "b")?, "block index")?;
            let y = match y {
                Some(spec) => Some(parse_vector(spec)?),
                None => match conf.get::<String>("y")? {
                    Some(spec) => Some(parse_vector(&spec)?),
                    None => None,
                },
            };
            let t = conf.pick(*t, "t", 1.0)?;
            let m = match m {
                Some(m) => Some(*m),
                None => conf.get("m")?,
            };
            let w = witness_cesaro_lower(&space, &a, &b, y.as_ref(), t, m)?;
            (serde_json::to_value(&w).unwrap(), format!("cesaro {}", space.descriptor()))
        }
    };
    let ratio = report.get("ratio").and_then(Value::as_f64);
    let m = report.get("m").and_then(Value::as_u64);
    let space = report
        .get("space")
        .and_then(Value::as_str)
        .map(String::from);
    let mut doc = json!({ "command": "witness", "witness": label });
    doc.as_object_mut()
        .unwrap()
        .insert("report".into(), report);
    let mut art = Artifact::new(doc);
    if let (Some(m), Some(ratio)) = (m, ratio) {
        art.csv = Some(format!("m,ratio\n{m},{ratio:.16e}\n"));
        art.plot = Some(format!("{m} {ratio:.16e}\n"));
    }
    art.space = space;
    Ok(art)
}

fn check_cmd(which: &CheckCmd, conf: &Conf, knobs: &Knobs) -> Result<Artifact> {
    match which {
        CheckCmd::Bounds {
            space,
            x,
            m,
            t,
            window,
            family,
        } => {
            let space = open_space(&space.space, conf)?;
            let x = parse_vector(&conf.need(x.x.clone(), "x")?)?;
            space.validate(&x)?;
            let m_spec: String = conf.need(m.clone(), "m")?;
            let m_list: Vec<usize> = parse_list(&m_spec, "order")?;
            let t = conf.pick(*t, "t", 1.0)?;
            let window_spec: Option<String> = match window {
                Some(w) => Some(w.clone()),
                None => conf.get("window")?,
            };
            let window = parse_window(window_spec.as_deref(), &space)?;
            let family_n = conf.pick(*family, "family", 24)?;
            let budget = knobs.sweep_budget();
            let table_depth = 2 * m_list.iter().copied().max().unwrap_or(1);

            let fam = sized_family(&space, table_depth, &window, knobs.seed, family_n)?;
            let qg = quasi_greedy_est(&space, table_depth, &fam, knobs.jobs, budget)?;
            let (k, k_c) = conditionality_est(&space, table_depth, &fam, knobs.jobs, budget)?;
            let (mt, mtd) = super_democracy(&space, table_depth, &window, knobs.jobs, budget)?;
            let gamma = match space.field() {
                crate::core::Field::Real => {
                    Some(gamma_cc(&space, table_depth, &window, knobs.jobs, budget)?)
                }
                crate::core::Field::Complex => None,
            };
            let tables = UpperBoundInputs {
                g_c: &qg.g_c,
                g_tilde: &qg.g_tilde,
                k: &k,
                k_c: &k_c,
                mu_tilde: &mt,
                mu_tilde_d: &mtd,
                gamma: gamma.as_ref(),
            };
            let checks = check_upper_bounds(&space, &x, &m_list, t, &tables)?;
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.satisfied && !c.advisory)
                .map(|c| c.name.as_str())
                .collect();

            let mut csv = String::from("name,m,lhs,rhs,satisfied,advisory\n");
            for c in &checks {
                let _ = writeln!(
                    csv,
                    "{},{},{:.16e},{:.16e},{},{}",
                    c.name, c.m, c.lhs, c.rhs, c.satisfied, c.advisory
                );
            }
            let mut art = Artifact::new(json!({
                "command": "check bounds",
                "space": space.descriptor(),
                "t": t,
                "checks": checks,
            }));
            art.csv = Some(csv);
            art.space = Some(space.descriptor().into());
            if !failed.is_empty() {
                art.failed_bound = Some(failed.join("; "));
            }
            Ok(art)
        }
        CheckCmd::MuChain { space, m, window } => {
            let space = open_space(&space.space, conf)?;
            let m = conf.need(*m, "m")?;
            let window_spec: Option<String> = match window {
                Some(w) => Some(w.clone()),
                None => conf.get("window")?,
            };
            let window = parse_window(window_spec.as_deref(), &space)?;
            let (tables, report) =
                check_democracy_chain(&space, m, &window, knobs.jobs, knobs.sweep_budget())?;
            let hard = report.hard_violations();
            let mut csv = String::from("name,m,lhs,rhs,satisfied,advisory\n");
            for line in &report.lines {
                let _ = writeln!(
                    csv,
                    "{},{},{:.16e},{:.16e},{},{}",
                    line.name, line.m, line.lhs, line.rhs, line.satisfied, line.advisory
                );
            }
            let mut art = Artifact::new(json!({
                "command": "check mu-chain",
                "space": space.descriptor(),
                "m": m,
                "tables": tables,
                "report": report,
            }));
            art.csv = Some(csv);
            art.space = Some(space.descriptor().into());
            if !hard.is_empty() {
                art.failed_bound = Some(
                    hard.iter()
                        .map(|l| format!("{} at m={}", l.name, l.m))
                        .collect::<Vec<_>>()
                        .join("; "),
                );
            }
            Ok(art)
        }
    }
}
