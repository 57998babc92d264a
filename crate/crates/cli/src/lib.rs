//! Command-line front end: `state`, `purify`, `husimi`, `scan` and `acceptance`.
//!
//! [`execute`] produces the primary output as bytes and writes diagnostics to
//! the supplied stream, so the binary and the tests share one code path.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gmms_core::acceptance::{self, CriterionResult, CRITERIA};
use gmms_core::metrics::{
    distance_scan, entropy_scan, non_increasing, riemann_scan, state_report, strictly_decreasing, DistanceRow,
    EntropyRow, ScanFamily, SpecTemplate, StateReport,
};
use gmms_core::phasespace::{husimi_grid, PhaseSpaceGrid};
use gmms_core::purify::{g_purify, verify_purification, PurificationReport};
use gmms_core::states::{auto_cutoff, build_state, cvmms_cutoff, BuiltState};
use gmms_core::{BuildOptions, CutoffPolicy, FockCutoff, GmmsError, GmmsSpec, QuadratureSpec, ToleranceProfile};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "gmms", version, about = "Gaussian maximally mixed states in a truncated Fock space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a state and report trace, entropy, purity and mean photon number.
    State {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: String,
        /// Emit the diagonal weights instead of the summary.
        #[arg(long)]
        weights: bool,
    },
    /// g-purify a state and verify the partial-trace round trip.
    Purify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: String,
        /// Entrywise tolerance for the round-trip verification.
        #[arg(long, default_value_t = 1e-12)]
        verify_tol: f64,
    },
    /// Husimi Q function on a square grid.
    Husimi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spec: String,
        /// Half-width of the square `[-extent, extent]^2`.
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 81)]
        res: usize,
        /// Also write a grayscale PNG rendering.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Parameter scans.
    Scan {
        #[command(subcommand)]
        kind: ScanKind,
    },
    /// Run the acceptance criteria.
    Acceptance {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run a single criterion.
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScanKind {
    /// Entropy over a parameter grid: `nbar` for thermal, `b` otherwise.
    Entropy {
        #[command(flatten)]
        common: Common,
        /// Family: thermal, cvmms, squeezed:s=..,phi=.., riemann:delta=..
        #[arg(long)]
        spec: String,
        #[arg(long)]
        grid: String,
    },
    /// Hilbert-Schmidt distance between two templated specs.
    Distance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// `VAR=v1,v2,...`
        #[arg(long)]
        grid: String,
    },
    /// Distance of the Riemann-sum state from cvmms(b) over grid spacings.
    Riemann {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        deltas: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `auto` or a fixed n_max.
    #[arg(long, default_value = "auto")]
    pub cutoff: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truncation budget, or `key=value` overrides of trace, psd, quadrature, grid, offdiag.
    #[arg(long)]
    pub tol: Option<String>,
    /// Quadrature order doublings allowed for squeezed states.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<GmmsError> for CliError {
    fn from(e: GmmsError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Primary output of a command. `failure` is set when the output is complete
/// but reports a failed check.
#[derive(Debug)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub failure: Option<CliError>,
}

impl From<Vec<u8>> for Output {
    fn from(bytes: Vec<u8>) -> Self {
        Output { bytes, failure: None }
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_cutoff(text: &str) -> CliResult<CutoffPolicy> {
    let t = text.trim();
    if t == "auto" {
        return Ok(CutoffPolicy::Auto);
    }
    let digits = t.strip_prefix("fixed:").unwrap_or(t);
    digits
        .parse::<usize>()
        .map(|n| CutoffPolicy::Fixed(FockCutoff::new(n)))
        .map_err(|_| CliError::Input(format!("invalid value for `cutoff`: expected `auto` or n_max, got `{text}`")))
}

pub fn parse_tolerance(text: Option<&str>) -> CliResult<ToleranceProfile> {
    let mut tol = ToleranceProfile::default();
    let Some(text) = text else { return Ok(tol) };
    let bad = |field: &str, v: &str| CliError::Input(format!("invalid value for `tol.{field}`: `{v}`"));
    let positive = |field: &str, v: &str| -> CliResult<f64> {
        let x: f64 = v.trim().parse().map_err(|_| bad(field, v))?;
        if x.is_finite() && x > 0.0 {
            Ok(x)
        } else {
            Err(bad(field, v))
        }
    };
    if !text.contains('=') {
        tol.trace = positive("trace", text)?;
        return Ok(tol);
    }
    for part in text.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected key=value in `--tol`, got `{part}`")))?;
        let slot = match k.trim() {
            "trace" => &mut tol.trace,
            "psd" => &mut tol.psd,
            "quadrature" => &mut tol.quadrature,
            "grid" => &mut tol.grid,
            "offdiag" => &mut tol.offdiag,
            other => return Err(CliError::Input(format!("unknown tolerance `{other}`"))),
        };
        *slot = positive(k.trim(), v)?;
    }
    Ok(tol)
}

/// `0,1,2` or `B=1,2,3`; returns the optional variable name and the values.
pub fn parse_grid(text: &str) -> CliResult<(Option<String>, Vec<f64>)> {
    let (var, list) = match text.split_once('=') {
        Some((v, rest)) => (Some(v.trim().to_string()), rest),
        None => (None, text),
    };
    let values = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Input(format!("invalid value for `grid`: `{v}`")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(CliError::Input("invalid value for `grid`: empty".into()));
    }
    Ok((var, values))
}

fn options(common: &Common) -> CliResult<BuildOptions> {
    Ok(BuildOptions {
        cutoff: parse_cutoff(&common.cutoff)?,
        tol: parse_tolerance(common.tol.as_deref())?,
        quad: QuadratureSpec::default(),
        max_doublings: common.refine,
    })
}

fn json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn build(spec_text: &str, opts: &BuildOptions, diag: &mut dyn Write) -> CliResult<BuiltState> {
    let spec: GmmsSpec = spec_text.parse()?;
    if opts.cutoff == CutoffPolicy::Auto {
        let _ = writeln!(diag, "auto cutoff: n_max = {}", auto_cutoff(&spec, opts.tol.trace)?.n_max());
    }
    let built = build_state(&spec, opts)?;
    if let Some((q, change)) = built.quadrature {
        if change.is_finite() {
            let _ = writeln!(
                diag,
                "quadrature: {}x{} nodes, last refinement change {change:.3e}",
                q.radial_order, q.angular_order
            );
        } else {
            let _ = writeln!(diag, "quadrature: {}x{} nodes, not refined", q.radial_order, q.angular_order);
        }
    }
    Ok(built)
}

#[derive(Serialize)]
struct StateOutput {
    spec: String,
    n_max: usize,
    report: StateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PurifyOutput {
    spec: String,
    n_max: usize,
    offdiag_hs_mass_removed: f64,
    coefficients: Vec<f64>,
    verification: PurificationReport,
}

#[derive(Serialize)]
struct EntropyOutput {
    family: String,
    rows: Vec<EntropyRow>,
}

#[derive(Serialize)]
struct DistanceOutput {
    a: String,
    b: String,
    variable: String,
    trend: &'static str,
    rows: Vec<DistanceRow>,
}

#[derive(Serialize)]
struct AcceptanceOutput {
    passed: usize,
    total: usize,
    criteria: Vec<CriterionResult>,
}

fn trend(values: &[f64]) -> &'static str {
    if strictly_decreasing(values) {
        "strictly decreasing"
    } else if non_increasing(values) {
        "non-increasing"
    } else {
        "not monotone"
    }
}

fn distance_csv(header: &str, rows: &[DistanceRow]) -> Vec<u8> {
    let mut out = format!("{header},distance,n_max\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", fmt_f64(r.param), fmt_f64(r.distance), r.n_max);
    }
    out.into_bytes()
}

/// Write an 8-bit grayscale rendering, brightest at the grid maximum, with
/// the imaginary axis pointing up.
pub fn write_png(grid: &PhaseSpaceGrid, path: &Path) -> CliResult<()> {
    let n = grid.resolution as u32;
    let max = grid.values.iter().copied().fold(f64::MIN, f64::max);
    let min = grid.values.iter().copied().fold(f64::MAX, f64::min);
    let span = if max > min { max - min } else { 1.0 };
    let img = image::GrayImage::from_fn(n, n, |x, y| {
        let v = grid.value(x as usize, (n - 1 - y) as usize);
        image::Luma([(255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8])
    });
    img.save(path)
        .map_err(|e| CliError::Input(format!("cannot write `{}`: {e}", path.display())))
}

/// Run one command; returns the primary output.
pub fn execute(cli: &Cli, diag: &mut dyn Write) -> CliResult<Output> {
    run_command(&cli.command, diag)
}

fn run_command(command: &Command, diag: &mut dyn Write) -> CliResult<Output> {
    match command {
        Command::State { common, spec, weights } => {
            let opts = options(common)?;
            let built = build(spec, &opts, diag)?;
            let report = state_report(&built.operator, &opts.tol)?;
            let p = built.operator.diagonal();
            let bytes = match common.format {
                Format::Json => json(&StateOutput {
                    spec: built.spec.to_string(),
                    n_max: built.cutoff.n_max(),
                    report,
                    weights: weights.then_some(p),
                }),
                Format::Csv if *weights => {
                    let mut out = String::from("n,weight\n");
                    for (n, w) in p.iter().enumerate() {
                        let _ = writeln!(out, "{n},{}", fmt_f64(*w));
                    }
                    Ok(out.into_bytes())
                }
                Format::Csv => Ok(format!(
                    "spec,n_max,trace,entropy_nats,purity,mean_photon,offdiag_hs_mass\n\"{}\",{},{},{},{},{},{}\n",
                    built.spec,
                    built.cutoff.n_max(),
                    fmt_f64(report.trace),
                    fmt_f64(report.entropy_nats),
                    fmt_f64(report.purity),
                    fmt_f64(report.mean_photon),
                    fmt_f64(report.offdiag_hs_mass),
                )
                .into_bytes()),
            }?;
            Ok(bytes.into())
        }
        Command::Purify {
            common,
            spec,
            verify_tol,
        } => {
            let opts = options(common)?;
            let built = build(spec, &opts, diag)?;
            let (rho, removed) = built.operator.dephased();
            if removed > 0.0 {
                let _ = writeln!(diag, "dropped off-diagonal mass before purifying: HS norm {removed:.6e}");
            }
            let schmidt = g_purify(&rho, &opts.tol)?;
            let report = verify_purification(&schmidt.to_bipartite(), &rho, *verify_tol)?;
            let _ = writeln!(
                diag,
                "round trip: max entry deviation {:.3e}, HS deviation {:.3e}, {}",
                report.max_entry_deviation,
                report.hs_deviation,
                if report.pass { "pass" } else { "FAIL" }
            );
            let coefficients: Vec<f64> = schmidt.coefficients().iter().map(|c| c.re).collect();
            let out = match common.format {
                Format::Json => json(&PurifyOutput {
                    spec: built.spec.to_string(),
                    n_max: built.cutoff.n_max(),
                    offdiag_hs_mass_removed: removed,
                    coefficients,
                    verification: report,
                })?,
                Format::Csv => {
                    let p = rho.diagonal();
                    let mut out = String::from("n,coefficient,weight\n");
                    for (n, c) in coefficients.iter().enumerate() {
                        let _ = writeln!(out, "{n},{},{}", fmt_f64(*c), fmt_f64(p[n]));
                    }
                    out.into_bytes()
                }
            };
            let failure = (!report.pass).then(|| {
                CliError::Numeric(format!(
                    "purification round trip deviates by {:.3e} > {:.1e}",
                    report.max_entry_deviation, verify_tol
                ))
            });
            Ok(Output { bytes: out, failure })
        }
        Command::Husimi {
            common,
            spec,
            extent,
            res,
            png,
        } => {
            let opts = options(common)?;
            let built = build(spec, &opts, diag)?;
            let grid = husimi_grid(&built.operator, *extent, *res)?;
            if let Some(path) = png {
                write_png(&grid, path)?;
            }
            let bytes = match common.format {
                Format::Json => json(&grid)?,
                Format::Csv => grid.to_csv().into_bytes(),
            };
            Ok(bytes.into())
        }
        Command::Scan { kind } => scan(kind, diag).map(Output::from),
        Command::Acceptance { format, only, .. } => {
            let ids: Vec<usize> = match only {
                Some(id) if (1..=CRITERIA).contains(id) => vec![*id],
                Some(id) => return Err(CliError::Input(format!("invalid value for `only`: no criterion {id}"))),
                None => (1..=CRITERIA).collect(),
            };
            let results: Vec<CriterionResult> = ids.into_iter().map(acceptance::run).collect();
            let passed = results.iter().filter(|r| r.pass).count();
            let total = results.len();
            for r in &results {
                let _ = writeln!(diag, "{r}");
            }
            let out = match format {
                Format::Json => json(&AcceptanceOutput {
                    passed,
                    total,
                    criteria: results,
                })?,
                Format::Csv => {
                    let mut out = String::from("id,name,pass,seconds,detail\n");
                    for r in &results {
                        let _ = writeln!(
                            out,
                            "{},\"{}\",{},{:.3},\"{}\"",
                            r.id,
                            r.name,
                            r.pass,
                            r.seconds,
                            r.detail.replace('"', "'")
                        );
                    }
                    out.into_bytes()
                }
            };
            let failure =
                (passed < total).then(|| CliError::Numeric(format!("{} of {total} criteria failed", total - passed)));
            Ok(Output { bytes: out, failure })
        }
    }
}

fn scan(kind: &ScanKind, diag: &mut dyn Write) -> CliResult<Vec<u8>> {
    match kind {
        ScanKind::Entropy { common, spec, grid } => {
            let opts = options(common)?;
            let family = ScanFamily::from_str(spec)?;
            let (_, values) = parse_grid(grid)?;
            let rows = entropy_scan(&family, &values, &opts)?;
            let _ = writeln!(
                diag,
                "entropy trend: {}",
                if gmms_core::metrics::strictly_increasing(&rows.iter().map(|r| r.entropy_nats).collect::<Vec<_>>()) {
                    "strictly increasing"
                } else {
                    "not strictly increasing"
                }
            );
            match common.format {
                Format::Json => json(&EntropyOutput {
                    family: spec.trim().to_string(),
                    rows,
                }),
                Format::Csv => {
                    let mut out = String::from("param,entropy_nats,trace,mean_photon\n");
                    for r in &rows {
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            fmt_f64(r.param),
                            fmt_f64(r.entropy_nats),
                            fmt_f64(r.trace),
                            fmt_f64(r.mean_photon)
                        );
                    }
                    Ok(out.into_bytes())
                }
            }
        }
        ScanKind::Distance { common, a, b, grid } => {
            let opts = options(common)?;
            let (var, values) = parse_grid(grid)?;
            let var = var.ok_or_else(|| CliError::Input("distance scan needs `--grid VAR=v1,v2,...`".into()))?;
            let ta = SpecTemplate::new(a, &var)?;
            let tb = SpecTemplate::new(b, &var)?;
            let rows = distance_scan(&ta, &tb, &values, &opts)?;
            let t = trend(&rows.iter().map(|r| r.distance).collect::<Vec<_>>());
            let _ = writeln!(diag, "distance trend: {t}");
            match common.format {
                Format::Json => json(&DistanceOutput {
                    a: a.clone(),
                    b: b.clone(),
                    variable: var,
                    trend: t,
                    rows,
                }),
                Format::Csv => Ok(distance_csv("param", &rows)),
            }
        }
        ScanKind::Riemann { common, b, deltas } => {
            let opts = options(common)?;
            let (_, values) = parse_grid(deltas)?;
            let cutoff = match opts.cutoff {
                CutoffPolicy::Fixed(c) => c,
                CutoffPolicy::Auto => {
                    let c = cvmms_cutoff(*b, opts.tol.trace)?;
                    let _ = writeln!(diag, "auto cutoff: n_max = {}", c.n_max());
                    c
                }
            };
            let rows = riemann_scan(*b, &values, cutoff, &opts.tol)?;
            let t = trend(&rows.iter().map(|r| r.distance).collect::<Vec<_>>());
            let _ = writeln!(diag, "distance trend: {t}");
            match common.format {
                Format::Json => json(&DistanceOutput {
                    a: format!("riemann:b={b:?},delta=DELTA"),
                    b: format!("cvmms:b={b:?}"),
                    variable: "DELTA".into(),
                    trend: t,
                    rows,
                }),
                Format::Csv => Ok(distance_csv("delta", &rows)),
            }
        }
    }
}

/// Output path of a command, if any.
pub fn output_path(cli: &Cli) -> Option<&Path> {
    let common = match &cli.command {
        Command::State { common, .. } | Command::Purify { common, .. } | Command::Husimi { common, .. } => common,
        Command::Scan { kind } => match kind {
            ScanKind::Entropy { common, .. } | ScanKind::Distance { common, .. } | ScanKind::Riemann { common, .. } => {
                common
            }
        },
        Command::Acceptance { out, .. } => return out.as_deref(),
    };
    common.out.as_deref()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_and_tolerance_parsing() {
        assert_eq!(parse_cutoff("auto").unwrap(), CutoffPolicy::Auto);
        assert_eq!(parse_cutoff("12").unwrap(), CutoffPolicy::Fixed(FockCutoff::new(12)));
        assert_eq!(parse_cutoff("fixed:3").unwrap(), CutoffPolicy::Fixed(FockCutoff::new(3)));
        assert!(parse_cutoff("-1").is_err());
        assert_eq!(parse_tolerance(Some("1e-8")).unwrap().trace, 1e-8);
        let t = parse_tolerance(Some("psd=1e-9,grid=1e-2")).unwrap();
        assert_eq!((t.psd, t.grid, t.trace), (1e-9, 1e-2, 1e-10));
        assert!(parse_tolerance(Some("speed=1")).is_err());
        assert!(parse_tolerance(Some("0")).is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0,1,2.5").unwrap(), (None, vec![0.0, 1.0, 2.5]));
        assert_eq!(parse_grid("B=1,2").unwrap(), (Some("B".into()), vec![1.0, 2.0]));
        assert!(parse_grid("1,,2").is_err());
        assert!(parse_grid("1,nan").is_err());
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
