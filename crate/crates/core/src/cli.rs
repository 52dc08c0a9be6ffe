//! The `carpetdim` command-line driver.
//!
//! Exit codes: 0 success, 1 validation or hypothesis failure, 2 numerical
//! non-convergence, 3 I/O or parse error. `CARPETDIM_THREADS` caps the
//! worker pool. CSV files open with `#` comment lines recording the tool
//! version and numerical settings, followed by a header row.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::carpet::{perturb_carpet, validate_carpet, CarpetSpec, DEFAULT_GRID};
use crate::coding::{FullWord, RowWord};
use crate::error::{CarpetError, Result};
use crate::fulldim::{
    base_cylinder, measure_cylinder, solve_full_dimension, uniqueness_certificate, CertificateOptions,
    FullDimSolution, SolverConfig, DEFAULT_MAX_PERIOD,
};
use crate::geometry::{box_count, render_regions, write_boundaries_csv, write_box_counts_csv, write_regions_csv};
use crate::transfer::DEFAULT_K;
use crate::variational::optimize_level_n;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "carpetdim", version, about = "Dimension and measures of full dimension for non-linear carpets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural, separation and domination hypotheses.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Solve for the dimension and the measure of full dimension.
    Dim {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Write the solution record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cylinder masses of the measure of full dimension.
    Measure {
        file: PathBuf,
        /// Comma-separated full words, e.g. `1.1,2.1 1.2`.
        #[arg(long, value_delimiter = ',', required = true)]
        words: Vec<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Concavity certificate for uniqueness of the maximizing measure.
    Uniqueness {
        file: PathBuf,
        /// Absolute margin; defaults to 5% of the t-range.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Pressure-curve CSV; printed to stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Level-n variational estimate.
    Variational {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Bounding boxes and boundary polylines of the depth-n regions.
    Render {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        boundaries: Option<PathBuf>,
    },
    /// Monte Carlo box-counting dimension.
    Boxcount {
        file: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 14)]
        depth: usize,
        /// Box sizes are 2^-k for k in this inclusive range.
        #[arg(long, default_value_t = 3)]
        min_level: i32,
        #[arg(long, default_value_t = 9)]
        max_level: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dimension, uniqueness and level-1 masses along a perturbation path.
    Sweep {
        file: PathBuf,
        #[arg(long, default_value = "epsilon")]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status for an error.
pub fn exit_code(err: &CarpetError) -> i32 {
    use CarpetError::*;
    match err {
        Parse { .. } | Io(_) => 3,
        NoConvergence { .. } | BracketFailure { .. } | IterationLimit(_) | NoRootInUnitInterval => 2,
        MalformedSpec(_)
        | InfeasibleLayout(_)
        | PerturbationTooLarge { .. }
        | NonContractive(_)
        | NonPrimitive(_)
        | DegenerateFamily { .. }
        | TooDeep { .. }
        | InvalidArgument(_) => 1,
    }
}

fn error_kind(err: &CarpetError) -> &'static str {
    match exit_code(err) {
        3 => "io",
        2 => "numeric",
        _ => "hypothesis",
    }
}

fn read_spec(path: &Path) -> Result<CarpetSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CarpetError::Io(format!("{}: {e}", path.display())))?;
    text.parse()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CarpetError::Io(format!("{}: {e}", path.display())))
}

fn csv_preamble(out: &mut impl Write, settings: &[(&str, String)]) -> Result<()> {
    writeln!(out, "# carpetdim {VERSION}")?;
    for (k, v) in settings {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn limit_threads() {
    if let Some(n) = std::env::var("CARPETDIM_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = write!(if code == 0 { &mut *out as &mut dyn Write } else { err }, "{e}");
            return code;
        }
    };
    limit_threads();
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command, out: &mut impl Write) -> Result<i32> {
    match cmd {
        Command::Validate { file, grid } => {
            let spec = read_spec(file)?;
            let report = validate_carpet(&spec, *grid)?;
            write!(out, "{report}")?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Dim { file, tol, k, out: path } => {
            let spec = read_spec(file)?;
            let cfg = SolverConfig {
                k: *k,
                tol: *tol,
                max_period: DEFAULT_MAX_PERIOD,
            };
            let sol = solve_full_dimension(&spec, &cfg)?;
            writeln!(
                out,
                "D={:.10} t*={:.10} beta*={:.10} rho*={:.10}",
                sol.d, sol.t_star, sol.beta_star, sol.rho_star
            )?;
            let tr = &sol.diagnostics.t_range;
            writeln!(
                out,
                "t-range=[{:.10}, {:.10}] outer=[{:.10}, {:.10}] P={:e} dPdt={:e} d2Pdt2={:.6}",
                tr.t_lower,
                tr.t_upper,
                tr.outer_lower,
                tr.outer_upper,
                sol.diagnostics.p_at_star,
                sol.diagnostics.dpdt_at_star,
                sol.diagnostics.d2pdt2_at_star
            )?;
            if sol.degenerate {
                writeln!(out, "degenerate family: closed-form solution")?;
            }
            if let Some(path) = path {
                let mut f = create(path)?;
                write_solution(&sol, &mut f)?;
                f.flush()?;
            }
            Ok(0)
        }
        Command::Measure { file, words, tol, k } => {
            let spec = read_spec(file)?;
            let words: Vec<FullWord> = words.iter().map(|w| w.trim().parse()).collect::<Result<_>>()?;
            let cfg = SolverConfig {
                k: *k,
                tol: *tol,
                ..Default::default()
            };
            let sol = solve_full_dimension(&spec, &cfg)?;
            for w in &words {
                writeln!(out, "{w}\t{:.15}", measure_cylinder(&sol, w, *tol)?)?;
            }
            Ok(0)
        }
        Command::Uniqueness {
            file,
            eps,
            grid,
            tol,
            k,
            csv,
        } => {
            let spec = read_spec(file)?;
            let opts = CertificateOptions {
                epsilon: *eps,
                grid: *grid,
                solver: SolverConfig {
                    k: *k,
                    tol: *tol,
                    ..Default::default()
                },
                ..Default::default()
            };
            let rep = uniqueness_certificate(&spec, &opts)?;
            writeln!(out, "unique={}", rep.unique)?;
            writeln!(out, "D={:.10} t*={:.10}", rep.d, rep.t_star)?;
            writeln!(
                out,
                "t-range=[{:.10}, {:.10}] epsilon={:.6} interval=[{:.10}, {:.10}]",
                rep.t_range.t_lower, rep.t_range.t_upper, rep.epsilon, rep.t_interval.0, rep.t_interval.1
            )?;
            writeln!(
                out,
                "concavity_ok={} max_d2Pdt2={:.6} h_eps_ok={} degenerate={}",
                rep.concavity_ok, rep.max_d2pdt2, rep.h_eps_ok, rep.degenerate
            )?;
            writeln!(
                out,
                "gamma={:.6} phi_seminorm={:.6} psi_seminorm={:.6}",
                rep.gamma_witness, rep.phi_seminorm, rep.psi_seminorm
            )?;
            let settings = [
                ("K", k.to_string()),
                ("tol", format!("{tol:e}")),
                ("grid", grid.to_string()),
                ("epsilon", format!("{:?}", rep.epsilon)),
            ];
            let write_csv = |w: &mut dyn Write| -> Result<()> {
                let mut w = w;
                csv_preamble(&mut w, &settings)?;
                writeln!(w, "t,P,dPdt,d2Pdt2,beta,rho")?;
                for p in &rep.points {
                    writeln!(w, "{:?},{:?},{:?},{:?},{:?},{:?}", p.t, p.p, p.dpdt, p.d2pdt2, p.beta, p.rho)?;
                }
                Ok(())
            };
            match csv {
                Some(path) => {
                    let mut f = create(path)?;
                    write_csv(&mut f)?;
                    f.flush()?;
                }
                None => write_csv(out)?,
            }
            Ok(if rep.unique { 0 } else { 1 })
        }
        Command::Variational { file, n, tol } => {
            let spec = read_spec(file)?;
            let sol = optimize_level_n(&spec, *n, *tol)?;
            writeln!(out, "n={n} value={:.10} lambda={:.10} t_n={:.10}", sol.value, sol.lambda, sol.t_star)?;
            let m = spec.m();
            for (k, p) in sol.p_star.iter().enumerate() {
                let word = RowWord::all(m, *n).swap_remove(k);
                writeln!(out, "p[{word}]={p:.10}")?;
            }
            Ok(0)
        }
        Command::Render {
            file,
            depth,
            out: path,
            boundaries,
        } => {
            let spec = read_spec(file)?;
            let regions = render_regions(&spec, *depth)?;
            let mut f = create(path)?;
            csv_preamble(&mut f, &[("depth", depth.to_string())])?;
            write_regions_csv(&regions, &mut f)?;
            f.flush()?;
            if let Some(bpath) = boundaries {
                let mut f = create(bpath)?;
                csv_preamble(&mut f, &[("depth", depth.to_string())])?;
                write_boundaries_csv(&regions, &mut f)?;
                f.flush()?;
            }
            writeln!(out, "regions={}", regions.len())?;
            Ok(0)
        }
        Command::Boxcount {
            file,
            samples,
            seed,
            depth,
            min_level,
            max_level,
            out: path,
        } => {
            let spec = read_spec(file)?;
            if min_level > max_level {
                return Err(CarpetError::InvalidArgument("min-level exceeds max-level".into()));
            }
            let scales: Vec<f64> = (*min_level..=*max_level).map(|k| 0.5f64.powi(k)).collect();
            let bc = box_count(&spec, *samples, *depth, &scales, *seed)?;
            writeln!(out, "estimate={:.6}", bc.estimate)?;
            let settings = [
                ("samples", samples.to_string()),
                ("depth", depth.to_string()),
                ("seed", seed.to_string()),
                ("estimate", format!("{:?}", bc.estimate)),
            ];
            match path {
                Some(p) => {
                    let mut f = create(p)?;
                    csv_preamble(&mut f, &settings)?;
                    write_box_counts_csv(&bc, &mut f)?;
                    f.flush()?;
                }
                None => {
                    csv_preamble(out, &settings)?;
                    write_box_counts_csv(&bc, out)?;
                }
            }
            Ok(0)
        }
        Command::Sweep {
            file,
            param,
            from,
            to,
            steps,
            seed,
            grid,
            k,
            out: path,
        } => {
            if param != "epsilon" {
                return Err(CarpetError::InvalidArgument(format!(
                    "unknown sweep parameter `{param}` (only `epsilon`)"
                )));
            }
            if *steps < 2 {
                return Err(CarpetError::InvalidArgument("steps must be ≥ 2".into()));
            }
            let spec = read_spec(file)?;
            let rows = sweep(&spec, *from, *to, *steps, *seed, *grid, *k)?;
            let symbols = spec.symbols();
            let settings = [
                ("param", param.clone()),
                ("seed", seed.to_string()),
                ("K", k.to_string()),
                ("grid", grid.to_string()),
            ];
            let write_csv = |w: &mut dyn Write| -> Result<()> {
                let mut w = w;
                csv_preamble(&mut w, &settings)?;
                write!(w, "epsilon,D,t_star,unique")?;
                for (i, j) in &symbols {
                    write!(w, ",mu_{}.{}", i + 1, j + 1)?;
                }
                writeln!(w)?;
                for r in &rows {
                    write!(w, "{:?},{:?},{:?},{}", r.epsilon, r.d, r.t_star, r.unique)?;
                    for m in &r.masses {
                        write!(w, ",{m:?}")?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            };
            match path {
                Some(p) => {
                    let mut f = create(p)?;
                    write_csv(&mut f)?;
                    f.flush()?;
                }
                None => write_csv(out)?,
            }
            Ok(0)
        }
    }
}

fn write_solution(sol: &FullDimSolution, w: &mut impl Write) -> Result<()> {
    csv_preamble(
        w,
        &[("K", sol.config.k.to_string()), ("tol", format!("{:e}", sol.config.tol))],
    )?;
    writeln!(w, "quantity,value")?;
    let d = &sol.diagnostics;
    for (name, v) in [
        ("D", sol.d),
        ("t_star", sol.t_star),
        ("beta_star", sol.beta_star),
        ("rho_star", sol.rho_star),
        ("t_lower", d.t_range.t_lower),
        ("t_upper", d.t_range.t_upper),
        ("P", d.p_at_star),
        ("dPdt", d.dpdt_at_star),
        ("d2Pdt2", d.d2pdt2_at_star),
        ("beta_prime", d.beta_prime_at_star),
    ] {
        writeln!(w, "{name},{v:?}")?;
    }
    for i in 0..sol.spec().m() {
        let mass = base_cylinder(sol, &RowWord(vec![i]), 1e-12)?;
        writeln!(w, "nu_{},{mass:?}", i + 1)?;
    }
    Ok(())
}

/// One step of a perturbation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub d: f64,
    pub t_star: f64,
    pub unique: bool,
    /// `μ*` of the length-1 cylinders in symbol order.
    pub masses: Vec<f64>,
}

/// Dimension, uniqueness flag and level-1 masses at `steps` evenly spaced
/// perturbation sizes, all drawn with the same seed.
pub fn sweep(spec: &CarpetSpec, from: f64, to: f64, steps: usize, seed: u64, grid: usize, k: usize) -> Result<Vec<SweepRow>> {
    let eps: Vec<f64> = (0..steps)
        .map(|s| from + (to - from) * s as f64 / (steps - 1).max(1) as f64)
        .collect();
    eps.par_iter()
        .map(|&e| {
            let perturbed = perturb_carpet(spec, e, seed)?.spec;
            let opts = CertificateOptions {
                grid,
                solver: SolverConfig { k, ..Default::default() },
                ..Default::default()
            };
            let rep = uniqueness_certificate(&perturbed, &opts)?;
            let sol = solve_full_dimension(&perturbed, &opts.solver)?;
            let masses = perturbed
                .symbols()
                .into_iter()
                .map(|s| measure_cylinder(&sol, &FullWord(vec![s]), 1e-12))
                .collect::<Result<_>>()?;
            Ok(SweepRow {
                epsilon: e,
                d: sol.d,
                t_star: sol.t_star,
                unique: rep.unique,
                masses,
            })
        })
        .collect()
}
