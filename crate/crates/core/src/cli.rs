//! Command-line front end.
//!
//! A run is described by a JSON document:
//!
//! ```json
//! {
//!   "space": { "family": "paley_wiener", "x": 1.0 },
//!   "sigma": [[0, 1], [1, 1]],
//!   "command": "kernel",
//!   "z_points": [[0, 2]],
//!   "grid": { "re_min": -2, "re_max": 2, "re_steps": 41, "im_min": -1, "im_max": 1, "im_steps": 21 },
//!   "output": { "path": "kernel.csv", "format": "csv" }
//! }
//! ```
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad configuration
//! (including derivative orders beyond the budget), 3 linearly dependent
//! evaluators.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Parser;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::Error;
use crate::gram::GramSystem;
use crate::kernels::{Family, StructureFunction};
use crate::sigma::ZeroSequence;
use crate::structure::{SigmaStructureFunction, Which};
use crate::verify::{CheckReport, Tolerances, Verifier, CHECKS, DEFAULT_PW_SAMPLES};

#[derive(Debug, Parser)]
#[command(
    name = "debranges",
    about = "Kernels and structure functions of spaces with imposed zeros"
)]
pub struct Args {
    /// JSON run configuration.
    #[arg(long, required_unless_present = "list_checks")]
    pub config: Option<PathBuf>,
    /// Output file; overrides `output.path`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the check ids and exit.
    #[arg(long)]
    pub list_checks: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    #[serde(default)]
    pub sigma: Vec<[f64; 2]>,
    pub command: Command,
    pub grid: Option<Grid>,
    pub eval_points: Option<Vec<[f64; 2]>>,
    pub z_points: Option<Vec<[f64; 2]>>,
    pub which: Option<Which>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub family: FamilyTag,
    /// Paley-Wiener half-width.
    pub x: Option<f64>,
    /// Polynomial roots, all in the open lower half-plane.
    pub roots: Option<Vec<[f64; 2]>>,
    pub max_derivative_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    PaleyWiener,
    PolynomialHb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernel,
    Structure,
    Verify,
    PwExample,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub re_min: f64,
    pub re_max: f64,
    pub re_steps: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub im_steps: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    StructuredText,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("linear dependence among the evaluators (condition estimate {condition:.3e})")]
    Dependence { condition: f64 },
    #[error("{0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Dependence { .. } => 3,
            _ => 2,
        }
    }

    fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::LinearDependence { condition } => CliError::Dependence { condition },
            Error::UnsupportedOrder { .. } => CliError::config("sigma", e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

/// Rendered output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub body: String,
    pub all_passed: bool,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            "<root>".to_string()
        } else {
            path
        };
        CliError::config(&field, e.inner().to_string())
    })
}

fn complex(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn points(field: &str, pts: &[[f64; 2]]) -> Result<Vec<Complex64>, CliError> {
    pts.iter()
        .enumerate()
        .map(|(i, p)| {
            if p.iter().all(|v| v.is_finite()) {
                Ok(complex(p))
            } else {
                Err(CliError::config(
                    &format!("{field}[{i}]"),
                    "non-finite coordinate",
                ))
            }
        })
        .collect()
}

impl RunConfig {
    pub fn build_space(&self) -> Result<StructureFunction, CliError> {
        let sp = &self.space;
        let sf = match sp.family {
            FamilyTag::PaleyWiener => {
                let x =
                    sp.x.ok_or_else(|| CliError::config("space.x", "required for paley_wiener"))?;
                StructureFunction::paley_wiener(x)
                    .map_err(|e| CliError::config("space.x", e.to_string()))?
            }
            FamilyTag::PolynomialHb => {
                let roots = sp
                    .roots
                    .as_ref()
                    .ok_or_else(|| CliError::config("space.roots", "required for polynomial_hb"))?;
                StructureFunction::polynomial_hb(points("space.roots", roots)?)
                    .map_err(|e| CliError::config("space.roots", e.to_string()))?
            }
        };
        Ok(match sp.max_derivative_order {
            Some(m) => sf.with_max_derivative_order(m),
            None => sf,
        })
    }

    pub fn zeros(&self) -> Result<ZeroSequence, CliError> {
        Ok(ZeroSequence::canonicalize(&points("sigma", &self.sigma)?))
    }

    /// The `w` points of a kernel or structure run, grid rows ordered by
    /// imaginary part and then real part.
    pub fn w_points(&self) -> Result<Vec<Complex64>, CliError> {
        match (&self.grid, &self.eval_points) {
            (Some(_), Some(_)) => Err(CliError::config(
                "grid",
                "give either `grid` or `eval_points`, not both",
            )),
            (None, None) => Err(CliError::config(
                "grid",
                "one of `grid` or `eval_points` is required",
            )),
            (None, Some(p)) => points("eval_points", p),
            (Some(g), None) => g.points(),
        }
    }
}

impl Grid {
    pub fn points(&self) -> Result<Vec<Complex64>, CliError> {
        let vals = [self.re_min, self.re_max, self.im_min, self.im_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("grid", "bounds must be finite"));
        }
        if self.re_steps == 0 {
            return Err(CliError::config("grid.re_steps", "must be at least 1"));
        }
        if self.im_steps == 0 {
            return Err(CliError::config("grid.im_steps", "must be at least 1"));
        }
        if self.re_min > self.re_max {
            return Err(CliError::config("grid.re_min", "exceeds re_max"));
        }
        if self.im_min > self.im_max {
            return Err(CliError::config("grid.im_min", "exceeds im_max"));
        }
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                vec![lo]
            } else {
                (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let re = axis(self.re_min, self.re_max, self.re_steps);
        let im = axis(self.im_min, self.im_max, self.im_steps);
        Ok(im
            .iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
            .collect())
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.into()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

fn pair(z: Complex64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

/// Executes the configured command and renders its output.
pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    let space = config.build_space()?;
    let zeros = config.zeros()?;
    let mut tolerances = Tolerances::default();
    for (id, t) in &config.tolerances {
        if !(*t >= 0.0) {
            return Err(CliError::config(
                &format!("tolerances.{id}"),
                "must be a non-negative number",
            ));
        }
        tolerances
            .set(id, *t)
            .map_err(|e| CliError::config(&format!("tolerances.{id}"), e.to_string()))?;
    }
    match config.command {
        Command::Kernel => {
            let z_field = config
                .z_points
                .as_ref()
                .ok_or_else(|| CliError::config("z_points", "required for the kernel command"))?;
            let zs = points("z_points", z_field)?;
            let ws = config.w_points()?;
            let gs = GramSystem::build(&space, &zeros)?;
            let pairs: Vec<(Complex64, Complex64)> = zs
                .iter()
                .flat_map(|&z| ws.iter().map(move |&w| (z, w)))
                .collect();
            let vals: Vec<Complex64> = pairs
                .par_iter()
                .map(|&(z, w)| gs.sigma_kernel(z, w))
                .collect();
            let body = match config.output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let rows: Vec<Vec<String>> = pairs
                        .iter()
                        .zip(&vals)
                        .map(|((z, w), v)| {
                            vec![
                                num(z.re),
                                num(z.im),
                                num(w.re),
                                num(w.im),
                                num(v.re),
                                num(v.im),
                            ]
                        })
                        .collect();
                    csv_table(&["re_z", "im_z", "re_w", "im_w", "re_val", "im_val"], &rows)?
                }
                Format::StructuredText => pairs.iter().zip(&vals).fold(
                    String::new(),
                    |mut s, ((z, w), v)| {
                        let rec =
                            serde_json::json!({ "z": pair(*z), "w": pair(*w), "value": pair(*v) });
                        writeln!(s, "{rec}").unwrap();
                        s
                    },
                ),
            };
            Ok(RunOutput {
                body,
                all_passed: true,
            })
        }
        Command::Structure => {
            let ws = config.w_points()?;
            let which = config.which.unwrap_or(Which::ESigma);
            let gs = GramSystem::build(&space, &zeros)?;
            let ssf = SigmaStructureFunction::derive(&gs)?;
            let vals: Vec<Complex64> = ws.par_iter().map(|&w| ssf.eval(which, w)).collect();
            let body = match config.output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let rows: Vec<Vec<String>> = ws
                        .iter()
                        .zip(&vals)
                        .map(|(w, v)| vec![num(w.re), num(w.im), num(v.re), num(v.im)])
                        .collect();
                    csv_table(&["re_w", "im_w", "re_val", "im_val"], &rows)?
                }
                Format::StructuredText => {
                    ws.iter().zip(&vals).fold(String::new(), |mut s, (w, v)| {
                        let rec =
                            serde_json::json!({ "which": which, "w": pair(*w), "value": pair(*v) });
                        writeln!(s, "{rec}").unwrap();
                        s
                    })
                }
            };
            Ok(RunOutput {
                body,
                all_passed: true,
            })
        }
        Command::Verify => {
            let reports =
                Verifier::new(tolerances).run_default_suite(&space, &zeros, config.seed)?;
            render_reports(
                &reports,
                config.output.format.unwrap_or(Format::StructuredText),
            )
        }
        Command::PwExample => {
            let x = match space.family() {
                Family::PaleyWiener { x } => *x,
                Family::PolynomialHB { .. } => {
                    return Err(CliError::config(
                        "space.family",
                        "pw-example needs the paley_wiener family",
                    ))
                }
            };
            let zs = match &config.eval_points {
                Some(p) => points("eval_points", p)?,
                None => DEFAULT_PW_SAMPLES.to_vec(),
            };
            let reports = Verifier::new(tolerances)
                .check_pw_example(x, zeros.points(), &zs)
                .map_err(|e| match e {
                    Error::Domain(m) => CliError::config("eval_points", m),
                    other => other.into(),
                })?;
            render_reports(
                &reports,
                config.output.format.unwrap_or(Format::StructuredText),
            )
        }
    }
}

fn render_reports(reports: &[CheckReport], format: Format) -> Result<RunOutput, CliError> {
    let passed = reports.iter().filter(|r| r.passed).count();
    let all_passed = passed == reports.len();
    let mut body = match format {
        Format::StructuredText => reports.iter().fold(String::new(), |mut s, r| {
            writeln!(
                s,
                "{}",
                serde_json::to_string(r).expect("reports serialize")
            )
            .unwrap();
            s
        }),
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.check_id.clone(),
                        r.samples.to_string(),
                        num(r.max_rel_residual),
                        num(r.tolerance),
                        num(r.condition_estimate),
                        r.passed.to_string(),
                        r.min_margin.map(num).unwrap_or_default(),
                        r.note.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_table(
                &[
                    "check_id",
                    "samples",
                    "max_rel_residual",
                    "tolerance",
                    "condition_estimate",
                    "passed",
                    "min_margin",
                    "note",
                ],
                &rows,
            )?
        }
    };
    if all_passed {
        writeln!(body, "PASS {}/{}", passed, reports.len()).unwrap();
    } else {
        writeln!(body, "FAIL {}/{}", reports.len() - passed, reports.len()).unwrap();
    }
    Ok(RunOutput { body, all_passed })
}

/// Parses the arguments, runs, writes output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if args.list_checks {
        for (id, _) in CHECKS {
            println!("{id}");
        }
        return 0;
    }
    match run_args(&args) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_args(args: &Args) -> Result<bool, CliError> {
    let path = args.config.as_ref().expect("clap enforces --config");
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.output {
        config.output.path = Some(out.clone());
    }
    let out = execute(&config)?;
    match &config.output.path {
        Some(p) => std::fs::write(p, &out.body)?,
        None => print!("{}", out.body),
    }
    Ok(out.all_passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(json: &str) -> Result<RunOutput, CliError> {
        execute(&parse_config(json)?)
    }

    #[test]
    fn verify_single_zero_passes() {
        let out = run(r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1]], "command": "verify"}"#).unwrap();
        assert!(out.all_passed, "{}", out.body);
        assert!(out.body.lines().last().unwrap().starts_with("PASS "));
    }

    #[test]
    fn non_contiguous_duplicates_are_accepted() {
        let out = run(
            r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1], [0, 2], [0, 1]], "command": "verify"}"#,
        )
        .unwrap();
        assert!(out.all_passed, "{}", out.body);
    }

    #[test]
    fn missing_points_name_the_field() {
        let err = run(r#"{"space": {"family": "paley_wiener", "x": 1}, "command": "kernel", "z_points": [[0, 1]]}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("grid"));
        let err = run(r#"{"space": {"family": "paley_wiener", "x": 1}, "command": "kernel", "eval_points": [[0, 1]]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("z_points"));
    }

    #[test]
    fn malformed_fields_are_located() {
        let err = parse_config(
            r#"{"space": {"family": "paley_wiener", "x": "one"}, "command": "verify"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("space.x"), "{err}");
        let err = run(r#"{"space": {"family": "paley_wiener", "x": -1}, "command": "verify"}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(
            r#"{"space": {"family": "paley_wiener", "x": 1}, "command": "structure",
                "grid": {"re_min": 1, "re_max": 0, "re_steps": 2, "im_min": 0, "im_max": 1, "im_steps": 2}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("grid.re_min"), "{err}");
    }

    #[test]
    fn dependence_maps_to_exit_three() {
        let err = run(
            r#"{"space": {"family": "paley_wiener", "x": 1}, "sigma": [[0, 1], [0, 1.000000001]], "command": "verify"}"#,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("condition estimate"));
    }

    #[test]
    fn grid_order_is_rows_of_constant_imaginary_part() {
        let g = Grid {
            re_min: 0.0,
            re_max: 1.0,
            re_steps: 2,
            im_min: 0.0,
            im_max: 2.0,
            im_steps: 3,
        };
        let p = g.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], Complex64::new(1.0, 0.0));
        assert_eq!(p[2], Complex64::new(0.0, 1.0));
    }
}
