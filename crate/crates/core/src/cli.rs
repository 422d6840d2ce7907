//! Batch front end: JSON configs in, CSV or JSON tables out.
//!
//! Every output starts with a header naming the tool version, command, seed
//! and the SHA-256 of the canonical config, so `verify` can re-run it.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::besov::{self, BesovParams, Variant};
use crate::bounds::{self, BoundParams};
use crate::error::Error;
use crate::norms::{self, ExponentPair, MixedArray};
use crate::packing::{self, Verification};
use crate::recovery::{self, DecoderKind, PhaseConfig, SolverConfig, SparsityMode};
use crate::rng;
use crate::widths;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_MODULE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    Module(Error),
    Io(String),
    /// `verify` found a difference.
    Mismatch(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Module(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Mismatch(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_MODULE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Module(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Norm,
    Bounds,
    Packing,
    Width,
    Recover,
    Phase,
    BesovRate,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().expect("string"))
    }
}

impl std::str::FromStr for CommandKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| format!("unknown command {s:?}"))
    }
}

/// A parsed config file. `params` is checked against the command's schema at
/// dispatch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<CommandKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    pub params: Value,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the config re-serialized with sorted keys.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(
            serde_json::to_vec(&canonical).expect("value serializes"),
        ))
    }
}

fn params<T: for<'de> Deserialize<'de>>(config: &RunConfig) -> CliResult<T> {
    serde_json::from_value(config.params.clone())
        .map_err(|e| CliError::Config(format!("params: {e}")))
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormParams {
    values: Vec<Vec<f64>>,
    exponents: Vec<ExponentPair>,
    #[serde(default)]
    s: Option<usize>,
    #[serde(default)]
    t: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BoundVariant {
    Outer,
    Flat,
    Inner,
    Mixed,
    LowerOuter,
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundVariant::Outer => "outer",
            BoundVariant::Flat => "flat",
            BoundVariant::Inner => "inner",
            BoundVariant::Mixed => "mixed",
            BoundVariant::LowerOuter => "lower-outer",
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsParams {
    b: usize,
    d: usize,
    m: Vec<usize>,
    p: f64,
    q: f64,
    variants: Vec<BoundVariant>,
    #[serde(default = "one")]
    constant: f64,
}

fn default_radius() -> ExponentPair {
    ExponentPair::new(1.0, 2.0).expect("valid")
}

fn default_measured() -> ExponentPair {
    ExponentPair::new(2.0, 2.0).expect("valid")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackingParams {
    b: usize,
    d: usize,
    s: usize,
    t: usize,
    #[serde(default = "default_radius")]
    radius: ExponentPair,
    #[serde(default = "default_measured")]
    measured: ExponentPair,
    #[serde(default)]
    include_members: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WidthParams {
    b: Vec<usize>,
    d: Vec<usize>,
    s: Vec<usize>,
    trials: usize,
    #[serde(default = "one")]
    constant: f64,
    /// Also estimate `w(D)` from its exact support function.
    #[serde(default)]
    direct: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecoverParams {
    b: usize,
    d: usize,
    mode: SparsityMode,
    k: usize,
    m: usize,
    decoder: DecoderKind,
    #[serde(default = "one_usize")]
    trials: usize,
    #[serde(default)]
    solver: SolverConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BesovRateParams {
    d: usize,
    r: f64,
    p0: f64,
    q0: f64,
    p1: f64,
    q1: f64,
    j_min: usize,
    j_max: usize,
    variant: Variant,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
}

/// Named columns with JSON-valued cells, rendered to CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(r.iter().cloned())
                            .collect::<Map<_, _>>(),
                    )
                })
                .collect(),
        )
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

/// One long-format plot point; `y_err` is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub y_err: Option<f64>,
}

/// What a command produced, before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: CommandKind,
    pub table: Table,
    /// Extra structured output: the packing manifest or the rate fit.
    pub summary: Option<Value>,
    pub plot: Vec<PlotPoint>,
}

/// Runs the command's pipeline. Pure apart from the rayon pool it runs in.
pub fn dispatch(command: CommandKind, config: &RunConfig, seed: u64) -> CliResult<Report> {
    if let Some(c) = config.command {
        if c != command {
            return Err(CliError::Config(format!(
                "config is for `{c}`, not `{command}`"
            )));
        }
    }
    let mut plot = Vec::new();
    let mut summary = None;
    let table = match command {
        CommandKind::Norm => run_norm(params(config)?)?,
        CommandKind::Bounds => run_bounds(params(config)?, &mut plot)?,
        CommandKind::Packing => {
            let (t, manifest) = run_packing(params(config)?, seed)?;
            summary = Some(manifest);
            t
        }
        CommandKind::Width => run_width(params(config)?, seed, &mut plot)?,
        CommandKind::Recover => run_recover(params(config)?, seed)?,
        CommandKind::Phase => run_phase(params(config)?, seed, &mut plot)?,
        CommandKind::BesovRate => {
            let (t, fit) = run_besov(params(config)?, &mut plot)?;
            summary = Some(fit);
            t
        }
    };
    Ok(Report {
        command,
        table,
        summary,
        plot,
    })
}

fn run_norm(p: NormParams) -> CliResult<Table> {
    let x = MixedArray::from_rows(&p.values)?;
    let shape = x.shape();
    let mut t = Table::new(&[
        "b",
        "d",
        "p",
        "q",
        "norm",
        "quasi_constant",
        "split_constant",
        "s",
        "sigma_outer",
        "t",
        "sigma_inner",
    ]);
    for e in p.exponents {
        let sigma_o = p.s.map(|s| norms::sigma_outer(&x, s, e)).transpose()?;
        let sigma_i = p.t.map(|k| norms::sigma_inner(&x, k, e)).transpose()?;
        t.push(vec![
            json!(shape.b),
            json!(shape.d),
            json!(e.p),
            json!(e.q),
            num(norms::mixed_norm(&x, e)),
            num(norms::quasi_norm_constant(e)),
            num(norms::split_constant(e)),
            json!(p.s),
            opt_num(sigma_o),
            json!(p.t),
            opt_num(sigma_i),
        ]);
    }
    Ok(t)
}

fn run_bounds(p: BoundsParams, plot: &mut Vec<PlotPoint>) -> CliResult<Table> {
    let shape = norms::MixedShape::new(p.b, p.d)?;
    let mut t = Table::new(&[
        "b", "d", "m", "p", "q", "variant", "constant", "regime", "value",
    ]);
    for &variant in &p.variants {
        for &m in &p.m {
            let (regime, value) = match variant {
                BoundVariant::Outer => (
                    None,
                    bounds::bound_outer(&BoundParams::outer(shape, m, p.p, p.q, p.constant)?)?,
                ),
                BoundVariant::Flat => (
                    None,
                    bounds::bound_flat(m, shape.len(), p.p, p.q, p.constant)?,
                ),
                BoundVariant::Inner => (
                    None,
                    bounds::bound_inner(&BoundParams::inner(shape, m, p.p, p.q, p.constant)?)?,
                ),
                BoundVariant::Mixed => {
                    let (r, v) =
                        bounds::bound_mixed(&BoundParams::mixed(shape, m, p.p, p.q, p.constant)?)?;
                    (Some(r.to_string()), v)
                }
                BoundVariant::LowerOuter => (
                    None,
                    bounds::lower_bound_outer(m, p.b, p.d, p.p, p.q, p.constant, p.constant)?,
                ),
            };
            t.push(vec![
                json!(p.b),
                json!(p.d),
                json!(m),
                num(p.p),
                num(p.q),
                json!(variant.to_string()),
                num(p.constant),
                json!(regime),
                num(value),
            ]);
            plot.push(PlotPoint {
                series: variant.to_string(),
                x: m as f64,
                y: value,
                y_err: None,
            });
        }
    }
    Ok(t)
}

fn verification_text(v: &Verification) -> String {
    match v {
        Verification::Exhaustive { pairs } => format!("exhaustive({pairs})"),
        Verification::Sampled { pairs, .. } => format!("sampled({pairs})"),
    }
}

fn run_packing(p: PackingParams, seed: u64) -> CliResult<(Table, Value)> {
    let w = packing::build_sparse_packing(p.b, p.d, p.s, p.t, p.radius, p.measured, seed)?;
    let mut t = Table::new(&[
        "b",
        "d",
        "s",
        "t",
        "cardinality",
        "cardinality_floor",
        "distance_floor",
        "observed_min_distance",
        "radius_cap",
        "observed_max_radius",
        "verification",
        "seed",
    ]);
    t.push(vec![
        json!(p.b),
        json!(p.d),
        json!(p.s),
        json!(p.t),
        json!(w.len()),
        num(w.cardinality_floor()),
        num(w.distance_floor),
        num(w.observed_min_distance),
        num(w.radius_cap),
        num(w.observed_max_radius),
        json!(verification_text(&w.verification)),
        json!(seed),
    ]);
    let mut manifest = json!({
        "parameters": {"b": p.b, "d": p.d, "s": p.s, "t": p.t, "radius": p.radius, "measured": p.measured},
        "cardinality": w.len(),
        "cardinality_floor": num(w.cardinality_floor()),
        "distance_floor": num(w.distance_floor),
        "observed_min_distance": num(w.observed_min_distance),
        "radius_cap": num(w.radius_cap),
        "observed_max_radius": num(w.observed_max_radius),
        "verification": w.verification,
        "seed": seed,
    });
    if p.include_members {
        manifest["members"] = serde_json::to_value(&w.vectors).expect("members serialize");
    }
    Ok((t, manifest))
}

fn run_width(p: WidthParams, seed: u64, plot: &mut Vec<PlotPoint>) -> CliResult<Table> {
    let mut cols = vec![
        "b",
        "d",
        "s",
        "trials",
        "seed",
        "mean",
        "std_error",
        "upper_formula",
    ];
    if p.direct {
        cols.extend(["direct_mean", "direct_std_error"]);
    }
    let mut t = Table::new(&cols);
    let mut cell = 0u64;
    for &b in &p.b {
        for &d in &p.d {
            for &s in p.s.iter().filter(|&&s| s <= b) {
                let cell_seed = rng::derive_seed(seed, &[cell]);
                cell += 1;
                let w = widths::width_d(b, d, s, p.trials, cell_seed)?;
                let mut row = vec![
                    json!(b),
                    json!(d),
                    json!(s),
                    json!(p.trials),
                    json!(cell_seed),
                    num(w.mean),
                    opt_num(w.std_error),
                    num(widths::width_upper_formula(b, d, s, p.constant)),
                ];
                if p.direct {
                    let direct = widths::width_d_direct(
                        b,
                        d,
                        s,
                        p.trials,
                        rng::derive_seed(cell_seed, &[1]),
                    )?;
                    row.extend([num(direct.mean), opt_num(direct.std_error)]);
                }
                t.push(row);
                plot.push(PlotPoint {
                    series: format!("b={b},d={d}"),
                    x: s as f64,
                    y: w.mean,
                    y_err: w.std_error,
                });
            }
        }
    }
    Ok(t)
}

fn run_recover(p: RecoverParams, seed: u64) -> CliResult<Table> {
    let shape = norms::MixedShape::new(p.b, p.d)?;
    if p.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let mut t = Table::new(&[
        "b",
        "d",
        "mode",
        "s_or_t",
        "m",
        "decoder",
        "rel_error",
        "iterations",
        "converged",
        "seed",
    ]);
    for i in 0..p.trials as u64 {
        let trial_seed = rng::derive_seed(seed, &[i]);
        let r = recovery::run_trial(shape, p.mode, p.k, p.m, p.decoder, &p.solver, trial_seed)?;
        t.push(vec![
            json!(r.b),
            json!(r.d),
            json!(r.mode.to_string()),
            json!(r.s_or_t),
            json!(r.m),
            json!(r.decoder.to_string()),
            num(r.rel_error),
            json!(r.iterations),
            json!(r.converged),
            json!(r.seed),
        ]);
    }
    Ok(t)
}

fn run_phase(p: PhaseConfig, seed: u64, plot: &mut Vec<PlotPoint>) -> CliResult<Table> {
    let cells = recovery::phase_transition(&p, seed)?;
    let mut t = Table::new(&[
        "b",
        "d",
        "mode",
        "s_or_t",
        "m",
        "decoder",
        "trials",
        "successes",
        "success_rate",
        "mean_rel_err",
        "seed",
    ]);
    for c in cells {
        t.push(vec![
            json!(c.b),
            json!(c.d),
            json!(c.mode.to_string()),
            json!(c.s_or_t),
            json!(c.m),
            json!(c.decoder.to_string()),
            json!(c.trials),
            json!(c.successes),
            num(c.success_rate),
            num(c.mean_rel_err),
            json!(c.seed),
        ]);
        plot.push(PlotPoint {
            series: format!("{}={}", c.mode, c.s_or_t),
            x: c.m as f64,
            y: c.success_rate,
            y_err: None,
        });
    }
    Ok(t)
}

fn run_besov(p: BesovRateParams, plot: &mut Vec<PlotPoint>) -> CliResult<(Table, Value)> {
    if p.j_min == 0 || p.j_max < p.j_min {
        return Err(CliError::Config("need 1 <= j_min <= j_max".into()));
    }
    let params = BesovParams {
        d: p.d,
        r: p.r,
        p0: p.p0,
        q0: p.q0,
        p1: p.p1,
        q1: p.q1,
    };
    let js: Vec<usize> = (p.j_min..=p.j_max).collect();
    let rows = besov::rate_table(&params, &js, p.kappa, p.beta, p.variant)?;
    let fit = besov::rate_fit(&params, &js, p.kappa, p.beta, p.variant)?;
    let mut t = Table::new(&["J", "total_m", "aggregate", "variant", "slope_so_far"]);
    for r in &rows {
        let total = u64::try_from(r.total_m)
            .map_err(|_| Error::Overflow("total budget exceeds u64".into()))?;
        t.push(vec![
            json!(r.j),
            json!(total),
            num(r.aggregate),
            json!(r.variant.to_string()),
            opt_num(r.slope_so_far),
        ]);
        plot.push(PlotPoint {
            series: r.variant.to_string(),
            x: (total as f64).ln(),
            y: r.aggregate.ln(),
            y_err: None,
        });
    }
    Ok((t, serde_json::to_value(&fit).expect("fit serializes")))
}

/// Long-format `series,x,y[,y_err]` rows.
pub fn emit_plot_data(points: &[PlotPoint]) -> CliResult<Table> {
    if points.is_empty() {
        return Err(CliError::Config("this command has no plot data".into()));
    }
    let with_err = points.iter().any(|p| p.y_err.is_some());
    let mut t = Table::new(if with_err {
        &["series", "x", "y", "y_err"]
    } else {
        &["series", "x", "y"]
    });
    for p in points {
        let mut row = vec![json!(p.series), num(p.x), num(p.y)];
        if with_err {
            row.push(opt_num(p.y_err));
        }
        t.push(row);
    }
    Ok(t)
}

/// Which file of a run an output is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Table,
    Summary,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    pub artifact: Artifact,
    pub format: Format,
    pub seed: u64,
    pub config_sha256: String,
}

impl Header {
    fn csv_lines(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# artifact: {}\n# format: {}\n# seed: {}\n# config-sha256: {}\n",
            self.tool,
            self.version,
            self.command,
            artifact_name(self.artifact),
            self.format,
            self.seed,
            self.config_sha256
        )
    }

    fn parse_csv(text: &str) -> Option<Header> {
        let mut lines = text.lines();
        let first = lines.next()?.strip_prefix("# ")?;
        let (tool, version) = first.split_once(' ')?;
        let mut fields = std::collections::HashMap::new();
        for line in lines.take(5) {
            let (k, v) = line.strip_prefix("# ")?.split_once(": ")?;
            fields.insert(k, v);
        }
        Some(Header {
            tool: tool.to_string(),
            version: version.to_string(),
            command: fields.get("command")?.parse().ok()?,
            artifact: serde_json::from_value(json!(fields.get("artifact")?)).ok()?,
            format: Format::Csv,
            seed: fields.get("seed")?.parse().ok()?,
            config_sha256: fields.get("config-sha256")?.to_string(),
        })
    }
}

fn artifact_name(a: Artifact) -> String {
    serde_json::to_value(a)
        .expect("unit")
        .as_str()
        .expect("string")
        .to_string()
}

fn render_csv(header: &Header, table: &Table) -> CliResult<Vec<u8>> {
    let mut out = header.csv_lines().into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text)).map_err(io)?;
    }
    out.extend(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?);
    Ok(out)
}

fn render_json(header: &Header, body: Map<String, Value>) -> Vec<u8> {
    let mut doc = Map::new();
    doc.insert(
        "header".into(),
        serde_json::to_value(header).expect("header serializes"),
    );
    doc.extend(body);
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc)).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

/// The rendered bytes of each artifact of a run.
pub fn render(
    report: &Report,
    seed: u64,
    format: Format,
    config_hash: &str,
) -> CliResult<Vec<(Artifact, Vec<u8>)>> {
    let header = |artifact, format| Header {
        tool: "gelfand".into(),
        version: VERSION.into(),
        command: report.command,
        artifact,
        format,
        seed,
        config_sha256: config_hash.to_string(),
    };
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            out.push((
                Artifact::Table,
                render_csv(&header(Artifact::Table, Format::Csv), &report.table)?,
            ));
            if let Some(summary) = &report.summary {
                let mut body = Map::new();
                body.insert("summary".into(), summary.clone());
                out.push((
                    Artifact::Summary,
                    render_json(&header(Artifact::Summary, Format::Json), body),
                ));
            }
        }
        Format::Json => {
            let mut body = Map::new();
            body.insert("rows".into(), report.table.to_json_rows());
            if let Some(summary) = &report.summary {
                body.insert("summary".into(), summary.clone());
            }
            out.push((
                Artifact::Table,
                render_json(&header(Artifact::Table, Format::Json), body),
            ));
        }
    }
    if !report.plot.is_empty() {
        out.push((
            Artifact::Plot,
            render_csv(
                &header(Artifact::Plot, Format::Csv),
                &emit_plot_data(&report.plot)?,
            )?,
        ));
    }
    Ok(out)
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Where the summary of a CSV run goes: `<out>.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

#[derive(Debug, Parser)]
#[command(
    name = "gelfand",
    version,
    about = "Gelfand widths of mixed-norm embeddings: bounds, packings, widths and recovery experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mixed norms, quasi-norm constants and best-term errors of one array.
    Norm(RunArgs),
    /// Closed-form Gelfand-number bounds over a sweep of m.
    Bounds(RunArgs),
    /// Build and certify a structured sparse packing.
    Packing(RunArgs),
    /// Monte Carlo Gaussian widths of structured sparse sets.
    Width(RunArgs),
    /// Single recovery experiments.
    Recover(RunArgs),
    /// Recovery success rates over sparsity and m grids.
    Phase(RunArgs),
    /// Besov budget schedules, aggregate bounds and rate fits.
    BesovRate(RunArgs),
    /// Check an output against its config and regenerate it byte for byte.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write long-format plot data here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A file written by an earlier run.
    pub output: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

fn run_command(kind: CommandKind, args: RunArgs) -> CliResult<()> {
    let config = read_config(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    let format = args.format.or(config.format).unwrap_or(Format::Csv);
    let out = args.out.clone().or_else(|| config.out.clone());
    let hash = config.hash();
    let report = in_pool(args.threads, || dispatch(kind, &config, seed))??;
    if args.plot.is_some() && report.plot.is_empty() {
        return Err(CliError::Config(format!("`{kind}` has no plot data")));
    }
    let artifacts = render(&report, seed, format, &hash)?;
    // everything is rendered before the first write, so failures leave no files
    for (artifact, bytes) in artifacts {
        match (artifact, &out, &args.plot) {
            (Artifact::Table, Some(path), _) => write_atomic(path, &bytes)?,
            (Artifact::Table, None, _) => std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::Io(e.to_string()))?,
            (Artifact::Summary, Some(path), _) => write_atomic(&summary_path(path), &bytes)?,
            (Artifact::Summary, None, _) => std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::Io(e.to_string()))?,
            (Artifact::Plot, _, Some(plot)) => write_atomic(plot, &bytes)?,
            (Artifact::Plot, _, None) => {}
        }
    }
    Ok(())
}

fn read_header(bytes: &[u8]) -> CliResult<Header> {
    let text =
        std::str::from_utf8(bytes).map_err(|_| CliError::Mismatch("output is not UTF-8".into()))?;
    if text.starts_with('#') {
        return Header::parse_csv(text)
            .ok_or_else(|| CliError::Mismatch("unreadable CSV header".into()));
    }
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Mismatch(format!("unreadable JSON output: {e}")))?;
    serde_json::from_value(doc["header"].clone())
        .map_err(|e| CliError::Mismatch(format!("unreadable JSON header: {e}")))
}

/// Checks the header's config hash against `config`, re-runs the recorded
/// command and seed, and compares bytes.
pub fn verify(output: &Path, config_path: &Path, threads: Option<usize>) -> CliResult<Header> {
    let bytes = fs::read(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    let header = read_header(&bytes)?;
    if header.tool != "gelfand" {
        return Err(CliError::Mismatch(format!("written by {:?}", header.tool)));
    }
    let config = read_config(config_path)?;
    let hash = config.hash();
    if hash != header.config_sha256 {
        return Err(CliError::Mismatch(format!(
            "config hash {hash} differs from recorded {}",
            header.config_sha256
        )));
    }
    if header.version != VERSION {
        return Err(CliError::Mismatch(format!(
            "written by version {}, this is {VERSION}",
            header.version
        )));
    }
    let format = match header.artifact {
        Artifact::Table => header.format,
        // summaries and plot data exist for CSV runs; JSON runs embed the summary
        Artifact::Summary | Artifact::Plot => Format::Csv,
    };
    let report = in_pool(threads, || dispatch(header.command, &config, header.seed))??;
    let fresh = render(&report, header.seed, format, &hash)?;
    let regenerated = fresh
        .into_iter()
        .find(|(a, _)| *a == header.artifact)
        .ok_or_else(|| CliError::Mismatch("re-run produced no such artifact".into()))?
        .1;
    if regenerated != bytes {
        return Err(CliError::Mismatch("re-run output differs".into()));
    }
    Ok(header)
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Norm(a) => run_command(CommandKind::Norm, a),
        Command::Bounds(a) => run_command(CommandKind::Bounds, a),
        Command::Packing(a) => run_command(CommandKind::Packing, a),
        Command::Width(a) => run_command(CommandKind::Width, a),
        Command::Recover(a) => run_command(CommandKind::Recover, a),
        Command::Phase(a) => run_command(CommandKind::Phase, a),
        Command::BesovRate(a) => run_command(CommandKind::BesovRate, a),
        Command::Verify(a) => verify(&a.output, &a.config, a.threads).map(|h| {
            println!(
                "ok: {} {} seed {} matches",
                h.command,
                artifact_name(h.artifact),
                h.seed
            );
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gelfand: {e}");
            e.exit_code()
        }
    }
}
