//! Command-line surface: option parsing, config files, command runners and
//! atomically written CSV/JSON documents.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{loschmidt_echo, revival_scan, stability_classification, TimeGrid};
use crate::error::{param, Result, ZedError};
use crate::hamiltonian::{build_h0, h0_terms, perturbation_terms, PerturbationKind, PerturbationSpec};
use crate::spectral::{
    diagonalize_with, goe_surmise, irrep_resolved_zeros, level_stats_pipeline, spin_resolve_nullspace_with,
    TolerancePolicy, DEFAULT_DENSE_CEILING,
};
use crate::spin_basis::{build_sector, tau2_sector_labels};
use crate::su2_char_ring::{closed_form_bound, multiplicity_table, zed_bound_from_table, MAX_TABLE_L};
use crate::zero_states::{
    build_fixed_separation_state, entropy_closed_form, entropy_numeric, h0_residual, zero_basis, Chi, ClosedForm,
    StateLabel,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UNITS: &str = "energies in J; times in 1/J; entropies in nats";

/// Largest chain accepted by `zed-numeric` unless raised with `--max-l`.
pub const DEFAULT_NUMERIC_MAX_L: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "zed", version, about = "Zero-energy states of the bond-staggered Heisenberg chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Character-theory degeneracy tables and the closed-form bound.
    ZedTheory,
    /// Numerical nullspace per total spin, compared with character theory.
    ZedNumeric,
    /// Level-spacing ratio statistics of the S=0 spectrum.
    LevelStats,
    /// Exact two-magnon zero-energy basis with residuals.
    ZeroBasis,
    /// Half-chain entanglement entropy of fixed-separation states.
    Entropy,
    /// Loschmidt echo of one fixed-separation state.
    Echo,
    /// Echo-based stability table of even and odd separations.
    ClassifyStability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ZedTheory => "zed-theory",
            Command::ZedNumeric => "zed-numeric",
            Command::LevelStats => "level-stats",
            Command::ZeroBasis => "zero-basis",
            Command::Entropy => "entropy",
            Command::Echo => "echo",
            Command::ClassifyStability => "classify-stability",
        }
    }
}

/// Every option is optional so that config-file values can fill the gaps.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Options {
    /// Chain length.
    #[arg(long = "L", global = true)]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Inclusive range of even chain lengths, `A:B`.
    #[arg(long = "L-range", global = true)]
    #[serde(rename = "L-range")]
    pub l_range: Option<String>,
    /// Magnon number, selecting a single block.
    #[arg(long, global = true)]
    pub n_mag: Option<usize>,
    /// Momentum index under two-site translation.
    #[arg(long, global = true)]
    pub k2: Option<usize>,
    /// Reflection parity, +1 or -1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<i8>,
    /// Magnon separation.
    #[arg(long, global = true)]
    pub x: Option<usize>,
    /// Translation irrep of the fixed-separation state: 0 or pi.
    #[arg(long, global = true)]
    pub chi: Option<String>,
    /// Perturbation kind.
    #[arg(long, global = true)]
    pub kind: Option<String>,
    /// Perturbation strength; a comma-separated list for classify-stability.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Absolute floor of the zero-eigenvalue threshold.
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    /// Relative part of the zero-eigenvalue threshold.
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Echo stability threshold on min M(t).
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Minimum rise of a revival above the running minimum.
    #[arg(long, global = true)]
    pub prominence: Option<f64>,
    /// Histogram bins for level statistics.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Use the unstaggered chain as the level-statistics control.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub uniform: Option<bool>,
    /// Largest L for zed-numeric.
    #[arg(long, global = true)]
    pub max_l: Option<usize>,
    /// Include a wall-clock timestamp in the header.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub timestamp: Option<bool>,
    /// key=value file supplying defaults for any option above.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Parser)]
struct ConfigArgs {
    #[command(flatten)]
    options: Options,
}

macro_rules! fill {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

impl Options {
    /// Fill unset options from `defaults`.
    pub fn or(mut self, defaults: Options) -> Options {
        fill!(self, defaults, l, l_range, n_mag, k2, sigma, x, chi, kind, lambda, t_max, dt, tol_abs, tol_rel,
              threads, out, format, threshold, prominence, bins, uniform, max_l, timestamp);
        self
    }

    /// Apply the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Options> {
        match self.config.clone() {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ZedError::Parameter(format!("cannot read config file {}: {e}", path.display())))?;
                Ok(self.or(parse_config(&text)?))
            }
            None => Ok(self),
        }
    }

    pub fn require_l(&self) -> Result<usize> {
        self.l.ok_or_else(|| ZedError::Parameter("--L is required".into()))
    }

    pub fn policy(&self) -> TolerancePolicy {
        let d = TolerancePolicy::default();
        TolerancePolicy { abs_floor: self.tol_abs.unwrap_or(d.abs_floor), rel: self.tol_rel.unwrap_or(d.rel) }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let d = TimeGrid::default();
        TimeGrid::new(self.t_max.unwrap_or(d.t_max), self.dt.unwrap_or(d.dt))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn single_lambda(&self) -> Result<f64> {
        match self.lambda.as_deref() {
            None => Ok(0.0),
            Some([v]) => Ok(*v),
            Some(_) => param("this command takes a single --lambda"),
        }
    }

    fn kind(&self) -> Result<Option<PerturbationKind>> {
        self.kind.as_deref().map(str::parse).transpose()
    }

    fn chi(&self) -> Result<Option<Chi>> {
        self.chi.as_deref().map(str::parse).transpose()
    }

    /// Chain lengths from `--L` or `--L-range A:B` (even values only).
    pub fn l_values(&self) -> Result<Vec<usize>> {
        match (&self.l, &self.l_range) {
            (Some(l), None) => Ok(vec![*l]),
            (None, Some(r)) => {
                let (a, b) = r
                    .split_once(':')
                    .ok_or_else(|| ZedError::Parameter(format!("--L-range must look like A:B, got '{r}'")))?;
                let parse = |s: &str| {
                    s.trim().parse::<usize>().map_err(|_| ZedError::Parameter(format!("bad chain length '{s}'")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return param(format!("empty range {a}:{b}"));
                }
                Ok((a..=b).filter(|l| l % 2 == 0).collect())
            }
            (Some(_), Some(_)) => param("give either --L or --L-range, not both"),
            (None, None) => param("--L or --L-range is required"),
        }
    }
}

/// Parse `key=value` lines (`#` starts a comment) with the same validation as flags.
pub fn parse_config(text: &str) -> Result<Options> {
    let mut args = vec!["config".to_string()];
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ZedError::Parameter(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key == "config" {
            return param("config files cannot include other config files");
        }
        args.push(format!("--{key}={}", value.trim()));
    }
    ConfigArgs::try_parse_from(args)
        .map(|c| c.options)
        .map_err(|e| ZedError::Parameter(format!("config file: {}", e.to_string().lines().next().unwrap_or(""))))
}

/// A rendered result: header metadata, a CSV table and a JSON payload.
#[derive(Debug, Clone)]
pub struct Document {
    pub header: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub data: Value,
}

impl Document {
    fn new(columns: Vec<&'static str>) -> Self {
        Document { header: Vec::new(), columns, rows: Vec::new(), data: Value::Null }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = String::new();
                for (k, v) in &self.header {
                    let _ = writeln!(s, "# {k}: {v}");
                }
                let _ = writeln!(s, "{}", self.columns.join(","));
                for r in &self.rows {
                    let _ = writeln!(s, "{}", r.join(","));
                }
                s
            }
            Format::Json => {
                let header: serde_json::Map<String, Value> = self
                    .header
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()))))
                    .collect();
                let mut s = serde_json::to_string_pretty(&json!({ "header": header, "data": self.data }))
                    .expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

/// Write `contents` through a temporary file in the target directory and rename it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ZedError::Io(e.error))?;
    Ok(())
}

/// Result of a command: the document plus the exit code it warrants.
#[derive(Debug)]
pub struct Outcome {
    pub document: Document,
    pub exit_code: i32,
}

fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sigma_cell(s: Option<i8>) -> String {
    s.map(|v| format!("{v:+}")).unwrap_or_default()
}

/// Run one command with fully resolved options.
pub fn run(command: Command, opts: &Options) -> Result<Outcome> {
    let mut outcome = match command {
        Command::ZedTheory => cmd_zed_theory(opts),
        Command::ZedNumeric => cmd_zed_numeric(opts),
        Command::LevelStats => cmd_level_stats(opts),
        Command::ZeroBasis => cmd_zero_basis(opts),
        Command::Entropy => cmd_entropy(opts),
        Command::Echo => cmd_echo(opts),
        Command::ClassifyStability => cmd_classify_stability(opts),
    }?;
    let policy = opts.policy();
    let mut header = vec![
        ("tool".to_string(), format!("zed {TOOL_VERSION}")),
        ("command".to_string(), command.name().to_string()),
        ("config".to_string(), serde_json::to_string(opts)?),
        ("tolerance".to_string(), serde_json::to_string(&policy)?),
        ("units".to_string(), UNITS.to_string()),
    ];
    if opts.timestamp == Some(true) {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        header.push(("timestamp_unix".to_string(), secs.to_string()));
    }
    header.append(&mut outcome.document.header);
    outcome.document.header = header;
    Ok(outcome)
}

/// Parse, run, write; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = cli.options.clone().resolve().and_then(|opts| {
        if let Some(n) = opts.threads {
            // the pool can only be configured once per process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
        let outcome = run(cli.command, &opts)?;
        let text = outcome.document.render(opts.format());
        match &opts.out {
            Some(path) => write_atomic(path, &text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("zed: {e}");
            e.exit_code()
        }
    }
}

fn cmd_zed_theory(opts: &Options) -> Result<Outcome> {
    let ls = opts.l_values()?;
    let mut doc = Document::new(vec!["L", "S", "zed", "total", "reflection_term", "translation_term", "closed_form_bound"]);
    let mut data = Vec::new();
    for l in ls {
        if l % 2 != 0 || l < 2 {
            return param(format!("chain length must be even and >= 2, got {l}"));
        }
        if l > MAX_TABLE_L {
            return Err(ZedError::Capacity(format!("character tables are limited to L <= {MAX_TABLE_L}")));
        }
        let table = multiplicity_table(l)?;
        let zed = zed_bound_from_table(&table);
        let bound = closed_form_bound(l)?;
        let lower = bound.lower_bound();
        for (s, z) in zed.per_s.iter().enumerate() {
            doc.row(vec![
                cell(l),
                cell(s),
                cell(z),
                cell(zed.total),
                bound.reflection_term.to_string(),
                bound.translation_term.to_string(),
                lower.to_string(),
            ]);
        }
        let sectors: Vec<Value> = table
            .entries
            .iter()
            .map(|(k, m)| json!({"kappa": k.kappa, "s": k.s, "two_S": k.two_s, "multiplicity": m}))
            .collect();
        data.push(json!({
            "L": l,
            "per_S": zed.per_s,
            "total": zed.total,
            "reflection_term": bound.reflection_term.to_string(),
            "translation_term": bound.translation_term.to_string(),
            "closed_form_bound": lower.to_string(),
            "multiplicities": sectors,
        }));
    }
    doc.data = Value::Array(data);
    Ok(Outcome { document: doc, exit_code: 0 })
}

fn cmd_zed_numeric(opts: &Options) -> Result<Outcome> {
    let l = opts.require_l()?;
    let max_l = opts.max_l.unwrap_or(DEFAULT_NUMERIC_MAX_L);
    if l > max_l {
        return Err(ZedError::Capacity(format!("zed-numeric is limited to L <= {max_l}; raise --max-l or use zed-theory")));
    }
    let policy = opts.policy();
    if let Some(n) = opts.n_mag {
        return sector_spectra(l, n, opts, &policy);
    }
    let mut terms = h0_terms(l)?;
    let perturbation = match opts.kind()? {
        Some(kind) => {
            let spec = PerturbationSpec::new(kind, opts.single_lambda()?)?;
            terms = terms.plus(&perturbation_terms(&spec, l)?);
            Some(spec)
        }
        None => None,
    };
    let numeric = spin_resolve_nullspace_with(&terms, &policy, DEFAULT_DENSE_CEILING)?;
    let theory = zed_bound_from_table(&multiplicity_table(l)?);
    let mut doc = Document::new(vec!["L", "S", "numeric", "theory", "difference"]);
    for (s, (n, t)) in numeric.per_s.iter().zip(&theory.per_s).enumerate() {
        doc.row(vec![cell(l), cell(s), cell(n), cell(t), cell(*n as i64 - *t as i64)]);
    }
    doc.note("numeric_total", numeric.total);
    doc.note("theory_total", theory.total);
    doc.note("min_gap", opt_cell(numeric.min_gap));
    doc.note("tolerance_sensitive", numeric.tolerance_sensitive);
    let extras: Vec<Value> = if perturbation.is_none() {
        irrep_resolved_zeros(l, &policy, DEFAULT_DENSE_CEILING)?
            .into_iter()
            .filter(|z| z.extra() != 0)
            .map(|z| {
                json!({"S": z.two_s / 2, "kappa": z.kappa, "k": format!("2pi*{}/{l}", z.kappa), "s": z.s,
                       "numeric": z.numeric, "theory": z.theory, "extra": z.extra()})
            })
            .collect()
    } else {
        Vec::new()
    };
    for e in &extras {
        doc.note("extra_zeros", e);
    }
    doc.data = json!({
        "L": l,
        "perturbation": perturbation,
        "numeric": numeric,
        "theory": theory,
        "extras": extras,
    });
    let exit_code = if numeric.tolerance_sensitive { 4 } else { 0 };
    Ok(Outcome { document: doc, exit_code })
}

fn sector_spectra(l: usize, n_mag: usize, opts: &Options, policy: &TolerancePolicy) -> Result<Outcome> {
    let mut doc = Document::new(vec!["L", "n_mag", "k2", "sigma", "eigenvalue"]);
    let mut data = Vec::new();
    let mut sensitive = false;
    for label in tau2_sector_labels(l, n_mag) {
        if opts.k2.is_some_and(|k| k != label.k) || opts.sigma.is_some_and(|s| label.sigma != Some(s)) {
            continue;
        }
        let basis = build_sector(label)?;
        let spec = diagonalize_with(&build_h0(l, &basis)?, DEFAULT_DENSE_CEILING, false)?;
        let report = crate::spectral::nullspace_count(&spec.eigenvalues, policy);
        sensitive |= report.tolerance_sensitive;
        for e in &spec.eigenvalues {
            doc.row(vec![cell(l), cell(n_mag), cell(label.k), sigma_cell(label.sigma), cell(e)]);
        }
        data.push(json!({"label": label, "eigenvalues": spec.eigenvalues, "nullspace": report}));
    }
    if data.is_empty() {
        return param("no sector matches the requested --k2/--sigma");
    }
    doc.data = Value::Array(data);
    Ok(Outcome { document: doc, exit_code: if sensitive { 4 } else { 0 } })
}

fn cmd_level_stats(opts: &Options) -> Result<Outcome> {
    let l = opts.l.unwrap_or(16);
    let staggered = opts.uniform != Some(true);
    let report = level_stats_pipeline(l, staggered, opts.bins.unwrap_or(20), DEFAULT_DENSE_CEILING)?;
    let mut doc = Document::new(vec!["bin_left", "bin_right", "density", "goe_surmise"]);
    for &(a, b, d) in &report.stats.bins {
        doc.row(vec![cell(a), cell(b), cell(d), cell(goe_surmise(0.5 * (a + b)))]);
    }
    doc.note("chain", if staggered { "staggered" } else { "uniform" });
    doc.note("mean_r", report.stats.mean_r);
    doc.note("ratios", report.stats.count);
    doc.note("levels", report.levels);
    doc.note("degeneracies_removed", report.degeneracies_removed);
    doc.data = serde_json::to_value(&report)?;
    Ok(Outcome { document: doc, exit_code: 0 })
}

fn label_cells(label: &StateLabel) -> (String, String, String) {
    match label {
        StateLabel::FixedSeparation { x, chi, reflection_sign } => (cell(x), cell(chi), format!("{reflection_sign:+}")),
        StateLabel::Uniform => ("uniform".into(), cell(Chi::Zero), "+1".into()),
        StateLabel::UniformComplement => ("uniform_complement".into(), cell(Chi::Zero), "+1".into()),
    }
}

fn cmd_zero_basis(opts: &Options) -> Result<Outcome> {
    let l = opts.require_l()?;
    let basis = zero_basis(l)?;
    let mut doc = Document::new(vec!["L", "x", "chi", "reflection_sign", "support", "norm_H_psi"]);
    let mut worst_overlap = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for b in &basis[i + 1..] {
            worst_overlap = worst_overlap.max(a.overlap(b).abs());
        }
    }
    let mut data = Vec::new();
    let mut worst_residual = 0.0f64;
    for st in &basis {
        let r = h0_residual(st);
        worst_residual = worst_residual.max(r);
        let (x, chi, s) = label_cells(&st.label);
        doc.row(vec![cell(l), x, chi, s, cell(st.amplitudes.len()), cell(r)]);
        let amps: Vec<Value> = st.amplitudes.iter().map(|(&(i, j), a)| json!([i, j, a])).collect();
        data.push(json!({"label": st.label, "norm_H_psi": r, "amplitudes": amps}));
    }
    doc.note("states", basis.len());
    doc.note("max_residual", worst_residual);
    doc.note("max_overlap", worst_overlap);
    doc.data = Value::Array(data);
    let exit_code = if worst_residual < 1e-10 && worst_overlap < 1e-12 { 0 } else { 5 };
    Ok(Outcome { document: doc, exit_code })
}

fn cmd_entropy(opts: &Options) -> Result<Outcome> {
    let l = opts.require_l()?;
    let xs: Vec<usize> = match opts.x {
        Some(x) => vec![x],
        None => (1..=l / 2).collect(),
    };
    let fixed_chi = opts.chi()?;
    let mut doc =
        Document::new(vec!["L", "x", "chi", "norm_H_psi", "S_vN_numeric", "S_vN_closed_or_blank", "closed_form"]);
    let mut data = Vec::new();
    for x in xs {
        let chi = fixed_chi.unwrap_or_else(|| Chi::for_separation(x));
        let st = build_fixed_separation_state(l, x, chi)?;
        // the norm of H0ψ needs no bitstrings, so any L works here
        let residual = h0_residual(&st);
        let s = entropy_numeric(&st);
        let closed = entropy_closed_form(l, x)?;
        let kind = match closed {
            ClosedForm::Exact(_) => "exact",
            ClosedForm::Asymptotic(_) => "asymptotic",
            ClosedForm::NotCovered => "",
        };
        doc.row(vec![cell(l), cell(x), cell(chi), cell(residual), cell(s), opt_cell(closed.value()), kind.into()]);
        data.push(json!({"L": l, "x": x, "chi": chi, "norm_H_psi": residual, "S_vN": s, "closed_form": closed}));
    }
    doc.data = Value::Array(data);
    Ok(Outcome { document: doc, exit_code: 0 })
}

fn cmd_echo(opts: &Options) -> Result<Outcome> {
    let l = opts.require_l()?;
    let x = opts.x.ok_or_else(|| ZedError::Parameter("--x is required".into()))?;
    let chi = opts.chi()?.unwrap_or_else(|| Chi::for_separation(x));
    let kind = opts.kind()?.ok_or_else(|| ZedError::Parameter("--kind is required".into()))?;
    let spec = PerturbationSpec::new(kind, opts.single_lambda()?)?;
    let grid = opts.grid()?;
    let state = build_fixed_separation_state(l, x, chi)?;
    let series = loschmidt_echo(&state, &spec, &grid)?;
    let scan = revival_scan(&series, opts.prominence.unwrap_or(0.05));
    let mut doc = Document::new(vec!["t", "M"]);
    for (t, m) in series.times.iter().zip(&series.values) {
        doc.row(vec![cell(t), cell(m)]);
    }
    doc.note("state", serde_json::to_string(&state.label)?);
    doc.note("perturbation", serde_json::to_string(&spec)?);
    doc.note("min_M", series.min());
    doc.note("unitarity_drift", series.unitarity_drift);
    doc.note("revival_peaks", serde_json::to_string(&scan.peaks)?);
    if scan.coarse_grid {
        doc.note("warning", "grid step above 0.02 may miss revival peaks");
    }
    doc.data = json!({"series": series, "revivals": scan});
    let exit_code = if series.unitarity_drift > 1e-10 { 5 } else { 0 };
    Ok(Outcome { document: doc, exit_code })
}

fn cmd_classify_stability(opts: &Options) -> Result<Outcome> {
    let l = opts.l.unwrap_or(32);
    let lambdas = opts.lambda.clone().unwrap_or_else(|| vec![0.1, 1.0]);
    let threshold = opts.threshold.unwrap_or(0.99);
    let table = stability_classification(l, &lambdas, &opts.grid()?, threshold)?;
    let mut doc = Document::new(vec![
        "parity",
        "x",
        "kind",
        "lambda",
        "min_echo",
        "stable",
        "residual_plus",
        "residual_minus",
    ]);
    for e in &table.entries {
        doc.row(vec![
            serde_json::to_value(e.parity)?.as_str().unwrap_or_default().to_string(),
            cell(e.x),
            cell(e.kind),
            cell(e.lambda),
            cell(e.min_echo),
            cell(e.stable),
            cell(e.residual_plus),
            cell(e.residual_minus),
        ]);
    }
    for parity in [crate::dynamics::Parity::Even, crate::dynamics::Parity::Odd] {
        let kinds: Vec<String> = table.unstable_kinds(parity).iter().map(|k| k.to_string()).collect();
        doc.note(&format!("unstable_{}", serde_json::to_value(parity)?.as_str().unwrap_or_default()), kinds.join(" "));
    }
    doc.data = json!({"L": l, "lambda": lambdas, "threshold": threshold, "table": table});
    Ok(Outcome { document: doc, exit_code: 0 })
}
