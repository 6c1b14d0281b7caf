//! Command-line driver.
//!
//! Settings come from defaults, then an optional TOML file, then flags.
//! Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure,
//! 3 failed check (with `--check`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::study::{execute_with, Example, Mode, StudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "fracvisco",
    version,
    about = "Convergence studies for fractional-memory viscoelasticity"
)]
pub struct Args {
    /// Manufactured solution to run.
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    /// Fractional order, strictly between 0 and 1.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Final time.
    #[arg(long = "T", visible_alias = "final-time")]
    pub final_time: Option<f64>,
    /// Polynomial degree (1 or 2).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Cells per side, comma separated (h = 1/n).
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<usize>>,
    /// Time steps, comma separated (dt = T/N).
    #[arg(long, value_delimiter = ',')]
    pub dt_list: Option<Vec<usize>>,
    /// Density.
    #[arg(long)]
    pub rho: Option<f64>,
    /// First Lame parameter of the relaxation tensor.
    #[arg(long)]
    pub lambda_hat: Option<f64>,
    /// Shear modulus of the relaxation tensor.
    #[arg(long)]
    pub mu_hat: Option<f64>,
    /// Relative residual tolerance of the conjugate gradient solver.
    #[arg(long)]
    pub cg_tol: Option<f64>,
    /// Iteration limit of the conjugate gradient solver.
    #[arg(long)]
    pub cg_max_iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Significant digits of emitted errors.
    #[arg(long)]
    pub precision: Option<usize>,
    /// TOML file with any of the settings above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exit with status 3 if the study's checks fail.
    #[arg(long)]
    pub check: bool,
    /// Diagonal preconditioning in the linear solves.
    #[arg(long)]
    pub jacobi: bool,
    /// Omit timestamps and timings so outputs are byte-identical across runs.
    #[arg(long)]
    pub reproducible: bool,
    /// Permit meshes finer than h = 1/64.
    #[arg(long)]
    pub allow_fine: bool,
    /// Write per-step solution vectors of a single solve to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Write the mesh of the first h to this file.
    #[arg(long)]
    pub mesh_dump: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    example: Option<Example>,
    alpha: Option<f64>,
    #[serde(rename = "T", alias = "final_time")]
    final_time: Option<f64>,
    degree: Option<usize>,
    h_list: Option<Vec<usize>>,
    dt_list: Option<Vec<usize>>,
    rho: Option<f64>,
    lambda_hat: Option<f64>,
    mu_hat: Option<f64>,
    cg_tol: Option<f64>,
    cg_max_iterations: Option<usize>,
    mode: Option<Mode>,
    out: Option<PathBuf>,
    precision: Option<usize>,
    jacobi: Option<bool>,
    reproducible: Option<bool>,
    allow_fine: Option<bool>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Merges defaults, the optional config file and the flags, then validates.
pub fn parse_config(args: &Args) -> Result<StudyConfig> {
    let file = match &args.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    let mode = args.mode.or(file.mode).unwrap_or(Mode::Table);
    let mut c = StudyConfig::for_mode(mode);
    macro_rules! layer {
        ($($field:ident),*) => {
            $(
                if let Some(v) = file.$field.clone() {
                    c.$field = v;
                }
                if let Some(v) = args.$field.clone() {
                    c.$field = v;
                }
            )*
        };
    }
    layer!(example, alpha, final_time, degree, h_list, dt_list, rho, lambda_hat, mu_hat, cg_tol, cg_max_iterations, out);
    c.precision = args.precision.or(file.precision);
    c.jacobi = args.jacobi || file.jacobi.unwrap_or(false);
    c.reproducible = args.reproducible || file.reproducible.unwrap_or(false);
    c.allow_fine = args.allow_fine || file.allow_fine.unwrap_or(false);
    c.validate()?;
    if args.dump.is_some() && c.mode != Mode::Single {
        return Err(Error::Config("--dump needs --mode single".into()));
    }
    Ok(c)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Cell { .. }
        | Error::SolverFailed { .. }
        | Error::NonFinite { .. }
        | Error::ResidualCheck { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

/// Runs the program on `argv` (including the program name).
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match run(&args, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run(args: &Args, out: &mut dyn Write) -> Result<i32> {
    let config = parse_config(args)?;
    if let Some(path) = &args.mesh_dump {
        let mesh = Mesh::unit_square(config.h_list[0])?;
        mesh.write_text(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    let case = config.example.case(config.material());
    let report = execute_with(&case, &config, args.dump.as_deref())?;
    for f in &report.files {
        writeln!(out, "wrote {}", f.display())?;
    }
    for c in &report.checks {
        writeln!(out, "{c}")?;
    }
    if args.check && report.checks.iter().any(|c| !c.passed) {
        return Ok(EXIT_CHECK);
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(v: &[&str]) -> Result<StudyConfig> {
        let args = Args::try_parse_from(std::iter::once("fracvisco").chain(v.iter().copied()))
            .map_err(|e| Error::Config(e.to_string()))?;
        parse_config(&args)
    }

    #[test]
    fn defaults() {
        let c = parse(&[]).unwrap();
        assert_eq!(c, StudyConfig::for_mode(Mode::Table));
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.final_time, 1.0);
        assert_eq!(c.example, Example::Example1);
    }

    #[test]
    fn flags() {
        let c = parse(&["--alpha", "0.5", "--example", "example1", "--degree", "2"]).unwrap();
        assert_eq!(c.degree, 2);
        let c = parse(&["--mode", "spatial", "--h-list", "4,8,16", "--dt-list", "256", "--T", "2"]).unwrap();
        assert_eq!(c.h_list, [4, 8, 16]);
        assert_eq!(c.dt_list, [256]);
        assert_eq!(c.final_time, 2.0);
        let c = parse(&["--mode", "diagonal"]).unwrap();
        assert!(c.dt_list.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse(&["--alpha", "1.2"]).is_err());
        assert!(parse(&["--alpha", "0"]).is_err());
        assert!(parse(&["--degree", "3"]).is_err());
        assert!(parse(&["--h-list", "128"]).is_err());
        assert!(parse(&["--h-list", "128", "--allow-fine"]).is_ok());
        assert!(parse(&["--dump", "x.txt"]).is_err());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "mode = \"spatial\"\nalpha = 0.3\nT = 2.0\nh_list = [2, 4]\ndt_list = [16]\n")
            .unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["--config", p]).unwrap();
        assert_eq!((c.mode, c.alpha, c.final_time), (Mode::Spatial, 0.3, 2.0));
        assert_eq!(c.h_list, [2, 4]);
        let c = parse(&["--config", p, "--alpha", "0.7"]).unwrap();
        assert_eq!(c.alpha, 0.7);

        std::fs::write(&path, "alpha = 0.3\ncolour = \"red\"\n").unwrap();
        assert!(matches!(parse(&["--config", p]), Err(Error::Config(_))));
    }

    #[test]
    fn exit_codes() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(main_with(["fracvisco", "--alpha", "1.2"], &mut out, &mut err), EXIT_CONFIG);
        assert!(String::from_utf8_lossy(&err).contains("alpha"));
        assert_eq!(main_with(["fracvisco", "--bogus"], &mut out, &mut err), EXIT_CONFIG);
        assert_eq!(main_with(["fracvisco", "--help"], &mut out, &mut err), EXIT_OK);

        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        let base = ["fracvisco", "--out", d, "--mode", "spatial", "--h-list", "2,4", "--dt-list", "4"];
        out.clear();
        assert_eq!(main_with(base, &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8_lossy(&out).contains("FAIL"));
        let with_check = base.iter().copied().chain(["--check"]);
        assert_eq!(main_with(with_check, &mut out, &mut err), EXIT_CHECK);

        let failing = ["fracvisco", "--out", d, "--mode", "single", "--h-list", "8", "--dt-list", "4", "--cg-max-iterations", "1"];
        assert_eq!(main_with(failing, &mut out, &mut err), EXIT_SOLVER);
    }
}
