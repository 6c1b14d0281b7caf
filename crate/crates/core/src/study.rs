//! Convergence studies over `(h, dt)` grids and their CSV / plot-data output.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fem::{error_norms_with, field_norms, ErrorNorms, FeSpace, Material};
use crate::linalg::CgOptions;
use crate::manufactured::ManufacturedCase;
use crate::mesh::Mesh;
use crate::rates::observed_rate;
use crate::solver::{run, ProblemSetup, SolveRecord};

/// Finest cell count per side accepted without `allow_fine`.
pub const DEFAULT_MAX_CELLS: usize = 64;

/// Errors below this fraction of the exact solution's norm count as exact.
pub const FLOOR_FRACTION: f64 = 1e-9;

/// Significant digits of table entries.
pub const TABLE_DIGITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Example1,
    Example2,
}

impl Example {
    pub fn case(self, material: Material) -> ManufacturedCase {
        match self {
            Example::Example1 => ManufacturedCase::example1(material),
            Example::Example2 => ManufacturedCase::example2(material),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Example1 => "example1",
            Example::Example2 => "example2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Final-time errors over the full `(h, dt)` grid.
    Table,
    /// Rates under `h` refinement at one fine `dt`.
    Spatial,
    /// Rates along `dt = h`.
    Diagonal,
    /// One solve.
    Single,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Table => "table",
            Mode::Spatial => "spatial",
            Mode::Diagonal => "diagonal",
            Mode::Single => "single",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
    Energy,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L2, Norm::H1, Norm::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::H1 => "h1",
            Norm::Energy => "energy",
        }
    }

    pub fn pick(self, e: &ErrorNorms) -> f64 {
        match self {
            Norm::L2 => e.l2,
            Norm::H1 => e.h1,
            Norm::Energy => e.energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub example: Example,
    pub alpha: f64,
    pub final_time: f64,
    pub degree: usize,
    /// Cells per side; `h = 1/n`.
    pub h_list: Vec<usize>,
    /// Step counts; `dt = T/N`. Unused in diagonal mode.
    pub dt_list: Vec<usize>,
    pub rho: f64,
    pub lambda_hat: f64,
    pub mu_hat: f64,
    pub cg_tol: f64,
    pub cg_max_iterations: usize,
    pub jacobi: bool,
    pub mode: Mode,
    pub out: PathBuf,
    /// Significant digits of emitted errors; `None` uses the mode default.
    pub precision: Option<usize>,
    /// Drop wall-clock data so repeated runs give identical bytes.
    pub reproducible: bool,
    pub allow_fine: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig::for_mode(Mode::Table)
    }
}

impl StudyConfig {
    /// Defaults: unit square, `T = 1`, `alpha = 1/2`, identity tensor, and
    /// a mode-specific sweep capped at `h = 1/64`, `dt = 1/512`.
    pub fn for_mode(mode: Mode) -> StudyConfig {
        let (h_list, dt_list) = default_lists(mode);
        StudyConfig {
            example: Example::Example1,
            alpha: 0.5,
            final_time: 1.0,
            degree: 1,
            h_list,
            dt_list,
            rho: 1.0,
            lambda_hat: 0.0,
            mu_hat: 0.5,
            cg_tol: 1e-10,
            cg_max_iterations: CgOptions::default().max_iterations,
            jacobi: false,
            mode,
            out: PathBuf::from("results"),
            precision: None,
            reproducible: false,
            allow_fine: false,
        }
    }

    pub fn material(&self) -> Material {
        Material {
            rho: self.rho,
            lambda_hat: self.lambda_hat,
            mu_hat: self.mu_hat,
            alpha: self.alpha,
        }
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions {
            tolerance: self.cg_tol,
            max_iterations: self.cg_max_iterations,
            jacobi: self.jacobi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.material().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("T must be positive, got {}", self.final_time));
        }
        if !(1..=2).contains(&self.degree) {
            return bad(format!("degree must be 1 or 2, got {}", self.degree));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return bad(format!("cg tolerance must lie in (0, 1), got {}", self.cg_tol));
        }
        if self.cg_max_iterations == 0 {
            return bad("cg iteration limit must be positive".into());
        }
        if let Some(p) = self.precision {
            if !(1..=17).contains(&p) {
                return bad(format!("precision must lie in 1..=17, got {p}"));
            }
        }
        if self.h_list.is_empty() {
            return bad("h list is empty".into());
        }
        if self.mode == Mode::Diagonal {
            if !self.dt_list.is_empty() {
                return bad("diagonal mode takes dt = h; do not pass a dt list".into());
            }
        } else if self.dt_list.is_empty() {
            return bad("dt list is empty".into());
        }
        if self.h_list.iter().chain(&self.dt_list).any(|&n| n == 0) {
            return bad("cell and step counts must be positive".into());
        }
        if !self.allow_fine {
            if let Some(&n) = self.h_list.iter().find(|&&n| n > DEFAULT_MAX_CELLS) {
                return bad(format!(
                    "h = 1/{n} is finer than 1/{DEFAULT_MAX_CELLS}; pass --allow-fine to run it"
                ));
            }
        }
        match self.mode {
            Mode::Spatial | Mode::Diagonal => {
                if self.h_list.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("rate studies need strictly increasing cell counts".into());
                }
                if self.mode == Mode::Spatial && self.dt_list.len() != 1 {
                    return bad(format!(
                        "spatial rates use a single dt, got {} values",
                        self.dt_list.len()
                    ));
                }
            }
            Mode::Table => {
                for list in [&self.h_list, &self.dt_list] {
                    let mut sorted = list.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != list.len() {
                        return bad("table axes must not repeat values".into());
                    }
                }
            }
            Mode::Single => {
                if self.h_list.len() != 1 || self.dt_list.len() != 1 {
                    return bad("single mode takes exactly one h and one dt".into());
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines describing every setting.
    pub fn describe(&self) -> Vec<(String, String)> {
        let list = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("mode".into(), self.mode.to_string()),
            ("example".into(), self.example.to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("T".into(), self.final_time.to_string()),
            ("degree".into(), self.degree.to_string()),
            ("h_list".into(), list(&self.h_list)),
            ("dt_list".into(), list(&self.dt_list)),
            ("rho".into(), self.rho.to_string()),
            ("lambda_hat".into(), self.lambda_hat.to_string()),
            ("mu_hat".into(), self.mu_hat.to_string()),
            ("cg_tol".into(), format!("{:e}", self.cg_tol)),
            ("cg_max_iterations".into(), self.cg_max_iterations.to_string()),
            ("jacobi".into(), self.jacobi.to_string()),
            (
                "precision".into(),
                self.precision.map_or_else(|| "default".into(), |p| p.to_string()),
            ),
        ]
    }

    fn stem(&self) -> String {
        format!("{}_k{}_{}", self.example, self.degree, self.mode)
    }
}

fn default_lists(mode: Mode) -> (Vec<usize>, Vec<usize>) {
    match mode {
        Mode::Table => (vec![2, 4, 8, 16, 32, 64], vec![8, 16, 32, 64, 128, 256, 512]),
        Mode::Spatial => (vec![2, 4, 8, 16, 32], vec![512]),
        Mode::Diagonal => (vec![8, 16, 32, 64], vec![]),
        Mode::Single => (vec![8], vec![512]),
    }
}

/// Outcome of one `(h, dt)` solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cells: usize,
    pub steps: usize,
    pub errors: ErrorNorms,
    /// Norms of the exact solution at the final time.
    pub reference: ErrorNorms,
    pub runtime_s: f64,
    pub cg_iterations: usize,
}

impl CellResult {
    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn at_floor(&self, norm: Norm) -> bool {
        norm.pick(&self.errors) <= FLOOR_FRACTION * norm.pick(&self.reference)
    }
}

/// Solves one cell of a study and measures final-time errors.
pub fn solve_cell(
    case: &ManufacturedCase,
    config: &StudyConfig,
    cells: usize,
    steps: usize,
    exec: Exec,
) -> Result<(CellResult, SolveRecord)> {
    let started = Instant::now();
    let mesh = Mesh::unit_square(cells)?;
    let space = Arc::new(FeSpace::new(mesh, config.degree, &case.dirichlet_sides)?);
    let mut setup = ProblemSetup::new(
        space.clone(),
        case.material,
        config.final_time,
        steps,
        case.body_force(),
        Arc::new(case.at_time(0.0)),
    );
    setup.traction = case.traction_fn();
    setup.cg = config.cg_options();
    setup.exec = exec;
    let record = run(&setup).map_err(|e| Error::Cell {
        cells,
        steps,
        source: Box::new(e),
    })?;
    let exact = case.at_time(config.final_time);
    let degree = 2 * config.degree + 4;
    let errors = error_norms_with(&space, Some(record.final_state()), &exact, &case.material, degree, exec);
    let reference = field_norms(&space, &exact, &case.material);
    let result = CellResult {
        cells,
        steps,
        errors,
        reference,
        runtime_s: started.elapsed().as_secs_f64(),
        cg_iterations: record.cg_reports.iter().map(|r| r.iterations).sum(),
    };
    Ok((result, record))
}

/// Solves independent cells, concurrently when there is more than one, and
/// returns them in input order.
fn solve_cells(
    case: &ManufacturedCase,
    config: &StudyConfig,
    cells: &[(usize, usize)],
) -> Result<Vec<CellResult>> {
    let (outer, inner) = if cells.len() > 1 {
        (Exec::default(), Exec::Sequential)
    } else {
        (Exec::Sequential, Exec::default())
    };
    outer
        .map_collect(cells.len(), |i| {
            let (h, n) = cells[i];
            solve_cell(case, config, h, n, inner).map(|(r, _)| r)
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Clone)]
pub struct TableOutcome {
    pub h_list: Vec<usize>,
    pub dt_list: Vec<usize>,
    /// `cells[i][j]` for `h_list[i]`, `dt_list[j]`.
    pub cells: Vec<Vec<CellResult>>,
}

impl TableOutcome {
    pub fn get(&self, cells: usize, steps: usize) -> Option<&CellResult> {
        let i = self.h_list.iter().position(|&h| h == cells)?;
        let j = self.dt_list.iter().position(|&n| n == steps)?;
        Some(&self.cells[i][j])
    }
}

pub fn run_table(config: &StudyConfig) -> Result<TableOutcome> {
    run_table_with(&config.example.case(config.material()), config)
}

pub fn run_table_with(case: &ManufacturedCase, config: &StudyConfig) -> Result<TableOutcome> {
    let grid: Vec<(usize, usize)> = config
        .h_list
        .iter()
        .flat_map(|&h| config.dt_list.iter().map(move |&n| (h, n)))
        .collect();
    let mut flat = solve_cells(case, config, &grid)?.into_iter();
    let cells = config
        .h_list
        .iter()
        .map(|_| flat.by_ref().take(config.dt_list.len()).collect())
        .collect();
    Ok(TableOutcome {
        h_list: config.h_list.clone(),
        dt_list: config.dt_list.clone(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// First row of a sequence.
    None,
    /// Both errors at the representation floor.
    Floor,
    Value(f64),
}

impl Rate {
    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub dt: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_energy: f64,
    pub rate_l2: Rate,
    pub rate_h1: Rate,
    pub rate_energy: Rate,
    pub runtime_s: f64,
}

impl RateRow {
    pub fn error(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L2 => self.err_l2,
            Norm::H1 => self.err_h1,
            Norm::Energy => self.err_energy,
        }
    }

    pub fn rate(&self, norm: Norm) -> Rate {
        match norm {
            Norm::L2 => self.rate_l2,
            Norm::H1 => self.rate_h1,
            Norm::Energy => self.rate_energy,
        }
    }
}

/// Builds rate rows from a refinement sequence. Errors are rounded to
/// `digits` significant digits first (if given) so every rate can be
/// recomputed from the emitted values.
pub fn rate_rows(results: &[CellResult], final_time: f64, digits: Option<usize>) -> Vec<RateRow> {
    let round = |x: f64| match digits {
        Some(d) => format_sci(x, d).parse().expect("formatted float parses"),
        None => x,
    };
    let mut rows: Vec<RateRow> = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        let rate = |norm: Norm| {
            if i == 0 {
                return Rate::None;
            }
            let prev = &results[i - 1];
            if prev.at_floor(norm) && r.at_floor(norm) {
                return Rate::Floor;
            }
            Rate::Value(observed_rate(
                prev.h(),
                round(norm.pick(&prev.errors)),
                r.h(),
                round(norm.pick(&r.errors)),
            ))
        };
        rows.push(RateRow {
            h: r.h(),
            dt: final_time / r.steps as f64,
            err_l2: round(r.errors.l2),
            err_h1: round(r.errors.h1),
            err_energy: round(r.errors.energy),
            rate_l2: rate(Norm::L2),
            rate_h1: rate(Norm::H1),
            rate_energy: rate(Norm::Energy),
            runtime_s: r.runtime_s,
        });
    }
    rows
}

pub fn run_spatial_rates(config: &StudyConfig) -> Result<Vec<RateRow>> {
    run_spatial_rates_with(&config.example.case(config.material()), config)
}

pub fn run_spatial_rates_with(case: &ManufacturedCase, config: &StudyConfig) -> Result<Vec<RateRow>> {
    let steps = *config.dt_list.first().ok_or_else(|| Error::Config("dt list is empty".into()))?;
    let grid: Vec<_> = config.h_list.iter().map(|&h| (h, steps)).collect();
    let results = solve_cells(case, config, &grid)?;
    Ok(rate_rows(&results, config.final_time, config.precision))
}

pub fn run_diagonal(config: &StudyConfig) -> Result<Vec<RateRow>> {
    run_diagonal_with(&config.example.case(config.material()), config)
}

/// `dt = h`: `N = n` steps for `n` cells per side (with `T = 1`).
pub fn run_diagonal_with(case: &ManufacturedCase, config: &StudyConfig) -> Result<Vec<RateRow>> {
    let grid: Vec<_> = config.h_list.iter().map(|&h| (h, h)).collect();
    let results = solve_cells(case, config, &grid)?;
    Ok(rate_rows(&results, config.final_time, config.precision))
}

/// `d.ddde+XX` with `digits` significant digits and a signed two-digit
/// exponent.
pub fn format_sci(x: f64, digits: usize) -> String {
    normalize_exponent(&format!("{:.*e}", digits.max(1) - 1, x))
}

/// Shortest round-trip scientific form, e.g. `4.0778e-02`.
pub fn format_full(x: f64) -> String {
    normalize_exponent(&format!("{x:e}"))
}

fn normalize_exponent(s: &str) -> String {
    let Some((mantissa, exp)) = s.split_once('e') else {
        return s.to_string();
    };
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

fn format_rate(rate: Rate) -> String {
    match rate {
        Rate::None => String::new(),
        Rate::Floor => "floor".into(),
        Rate::Value(v) => format!("{v}"),
    }
}

/// `git describe` of the source tree at build time.
pub fn source_version() -> String {
    let git = env!("FRACVISCO_GIT_DESCRIBE");
    format!("{} {} ({git})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

fn header(config: &StudyConfig, title: &str) -> String {
    let mut s = format!("# {title}\n# version = {}\n", source_version());
    if !config.reproducible {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let _ = writeln!(s, "# generated_unix = {now}");
    }
    for (k, v) in config.describe() {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

fn inverse_label(n: usize) -> String {
    format!("1/{n}")
}

/// One norm of a table: rows by `h`, columns by `dt`.
pub fn table_csv(config: &StudyConfig, outcome: &TableOutcome, norm: Norm) -> String {
    let digits = config.precision.unwrap_or(TABLE_DIGITS);
    let mut s = header(config, &format!("final-time {} errors", norm.name()));
    let cols: Vec<String> = outcome.dt_list.iter().map(|&n| dt_label(config.final_time, n)).collect();
    let _ = writeln!(s, "h,{}", cols.join(","));
    for (i, &h) in outcome.h_list.iter().enumerate() {
        let row: Vec<String> = outcome.cells[i]
            .iter()
            .map(|c| format_sci(norm.pick(&c.errors), digits))
            .collect();
        let _ = writeln!(s, "{},{}", inverse_label(h), row.join(","));
    }
    s
}

fn dt_label(final_time: f64, steps: usize) -> String {
    if final_time == 1.0 {
        inverse_label(steps)
    } else {
        format_full(final_time / steps as f64)
    }
}

pub fn rates_csv(config: &StudyConfig, rows: &[RateRow]) -> String {
    let fmt = |x: f64| match config.precision {
        Some(d) => format_sci(x, d),
        None => format_full(x),
    };
    let mut s = header(config, &format!("{} convergence rates", config.mode));
    s.push_str("h,dt,err_l2,err_h1,err_energy,rate_l2,rate_h1,rate_energy,runtime_s\n");
    for r in rows {
        let runtime = if config.reproducible {
            String::new()
        } else {
            format!("{:.3}", r.runtime_s)
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            format_full(r.h),
            format_full(r.dt),
            fmt(r.err_l2),
            fmt(r.err_h1),
            fmt(r.err_energy),
            format_rate(r.rate_l2),
            format_rate(r.rate_h1),
            format_rate(r.rate_energy),
            runtime
        );
    }
    s
}

/// Two columns `h error` for log-log plotting.
pub fn loglog_data(config: &StudyConfig, rows: &[RateRow], norm: Norm) -> String {
    let mut s = header(config, &format!("log-log data, {} error against h", norm.name()));
    s.push_str("# h error\n");
    for r in rows {
        let _ = writeln!(s, "{} {}", format_full(r.h), format_full(r.error(norm)));
    }
    s
}

/// Published final-time errors for the default material, `T = 1`,
/// `alpha = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCell {
    pub example: Example,
    pub degree: usize,
    pub cells: usize,
    pub steps: usize,
    pub h1: f64,
    pub l2: f64,
}

pub const REFERENCE_CELLS: [ReferenceCell; 3] = [
    ReferenceCell {
        example: Example::Example1,
        degree: 1,
        cells: 8,
        steps: 512,
        h1: 8.677e-01,
        l2: 4.078e-02,
    },
    ReferenceCell {
        example: Example::Example1,
        degree: 2,
        cells: 8,
        steps: 512,
        h1: 6.700e-02,
        l2: 1.100e-03,
    },
    ReferenceCell {
        example: Example::Example2,
        degree: 1,
        cells: 16,
        steps: 512,
        h1: 2.183e-01,
        l2: 4.030e-03,
    },
];

/// Relative tolerance against [`REFERENCE_CELLS`].
pub const REFERENCE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

fn default_setting(config: &StudyConfig) -> bool {
    config.material() == Material::default() && config.final_time == 1.0
}

/// Reference-cell comparisons for whichever cells the table contains.
pub fn check_table(config: &StudyConfig, outcome: &TableOutcome) -> Vec<CheckResult> {
    if !default_setting(config) {
        return Vec::new();
    }
    REFERENCE_CELLS
        .iter()
        .filter(|r| r.example == config.example && r.degree == config.degree)
        .filter_map(|r| {
            let c = outcome.get(r.cells, r.steps)?;
            let dev_h1 = (c.errors.h1 / r.h1 - 1.0).abs();
            let dev_l2 = (c.errors.l2 / r.l2 - 1.0).abs();
            Some(check(
                format!("reference cell h=1/{} dt=1/{}", r.cells, r.steps),
                dev_h1 <= REFERENCE_TOLERANCE && dev_l2 <= REFERENCE_TOLERANCE,
                format!(
                    "h1 {} vs {} ({:.2}%), l2 {} vs {} ({:.2}%)",
                    format_sci(c.errors.h1, 4),
                    format_sci(r.h1, 4),
                    100.0 * dev_h1,
                    format_sci(c.errors.l2, 4),
                    format_sci(r.l2, 4),
                    100.0 * dev_l2
                ),
            ))
        })
        .collect()
}

/// Finest-pair spatial rates against `k` (H1) and `k + 1` (L2).
pub fn check_spatial(config: &StudyConfig, rows: &[RateRow]) -> Vec<CheckResult> {
    let Some(last) = rows.last().filter(|_| rows.len() >= 2) else {
        return vec![check("spatial rates", false, "need at least two rows".into())];
    };
    let k = config.degree as f64;
    let l2_tol = if config.degree == 2 { 0.15 } else { 0.10 };
    [(Norm::H1, k, 0.10), (Norm::L2, k + 1.0, l2_tol)]
        .into_iter()
        .map(|(norm, target, tol)| {
            let rate = last.rate(norm).value();
            check(
                format!("{} spatial rate", norm.name()),
                rate.is_some_and(|r| (r - target).abs() <= tol),
                match rate {
                    Some(r) => format!("{r:.3} against {target} +/- {tol}"),
                    None => "no rate at the finest pair".into(),
                },
            )
        })
        .collect()
}

/// Diagonal L2 rates against the temporal order the case supports.
pub fn check_diagonal(config: &StudyConfig, rows: &[RateRow]) -> Vec<CheckResult> {
    let case = config.example.case(config.material());
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.rate_l2.value()).collect();
    let Some(&last) = rates.last() else {
        return vec![check("diagonal rates", false, "need at least two rows".into())];
    };
    let order = case.expected_temporal_order();
    if order >= 2.0 {
        return vec![check(
            "l2 diagonal rate",
            (last - 2.0).abs() <= 0.2,
            format!("{last:.3} against 2 +/- 0.2"),
        )];
    }
    let tail = &rates[rates.len().saturating_sub(3)..];
    let decreasing = tail.len() == 3 && tail.windows(2).all(|w| w[1] < w[0]);
    vec![
        check(
            "l2 diagonal rates decreasing",
            decreasing,
            format!(
                "last rates {}",
                tail.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
            ),
        ),
        check(
            "l2 diagonal final rate",
            (order..=1.9).contains(&last),
            format!("{last:.3} in [{order}, 1.9]"),
        ),
    ]
}

/// Everything a study produced.
#[derive(Debug, Default)]
pub struct StudyReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckResult>,
}

/// Runs the configured study and writes its files under `config.out`.
pub fn execute(config: &StudyConfig) -> Result<StudyReport> {
    execute_with(&config.example.case(config.material()), config, None)
}

/// As [`execute`], optionally writing per-step snapshots of a single solve.
pub fn execute_with(
    case: &ManufacturedCase,
    config: &StudyConfig,
    snapshots: Option<&Path>,
) -> Result<StudyReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.out)?;
    let mut report = StudyReport::default();
    let mut write = |name: String, text: String| -> Result<()> {
        let path = config.out.join(name);
        std::fs::write(&path, text)?;
        report.files.push(path);
        Ok(())
    };
    let stem = config.stem();
    let checks = match config.mode {
        Mode::Table => {
            let outcome = run_table_with(case, config)?;
            for norm in Norm::ALL {
                write(format!("{stem}_{}.csv", norm.name()), table_csv(config, &outcome, norm))?;
            }
            check_table(config, &outcome)
        }
        Mode::Spatial => {
            let rows = run_spatial_rates_with(case, config)?;
            write(format!("{stem}.csv"), rates_csv(config, &rows))?;
            check_spatial(config, &rows)
        }
        Mode::Diagonal => {
            let rows = run_diagonal_with(case, config)?;
            write(format!("{stem}.csv"), rates_csv(config, &rows))?;
            for norm in Norm::ALL {
                write(format!("{stem}_{}.dat", norm.name()), loglog_data(config, &rows, norm))?;
            }
            check_diagonal(config, &rows)
        }
        Mode::Single => {
            let (result, record) =
                solve_cell(case, config, config.h_list[0], config.dt_list[0], Exec::default())?;
            let rows = rate_rows(std::slice::from_ref(&result), config.final_time, config.precision);
            write(format!("{stem}.csv"), rates_csv(config, &rows))?;
            if let Some(path) = snapshots {
                let file = std::io::BufWriter::new(std::fs::File::create(path)?);
                record.write_snapshots(file)?;
                report.files.push(path.to_path_buf());
            }
            let residual = record.residual_checks.iter().map(|c| c.1).fold(0.0, f64::max);
            vec![check(
                "single solve",
                true,
                format!(
                    "{} cg iterations, worst residual {}",
                    result.cg_iterations,
                    format_sci(residual, 3)
                ),
            )]
        }
    };
    report.checks = checks;
    Ok(report)
}
