//! Command-line front end.
//!
//! Every subcommand writes its reports into `--out` (created if missing):
//! a `manifest.txt` with the tool version and the canonical configuration,
//! `report.csv` with the headline numbers, plus command-specific files
//! (`checks.csv`, `trace.csv`, `mask_*.pgm`, `field_*.pgm`).
//!
//! Exit codes: 0 on success, 1 when a solver fails to converge or a
//! verification row fails, 2 for invalid input or configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::cheeger::{cheeger_dinkelbach, history_to_csv_string};
use crate::eigensolver::{principal_eigen, torsion_detailed};
use crate::geometry::{rasterize, save_field_pgm, save_mask_pgm, DomainMask, Grid2D, PerimeterMode, ShapeSpec};
use crate::ratio::{checks_to_csv_string, ratio_f, verify_inequalities};
use crate::shapeopt::{optimize_mask, puncture_experiment, trace_to_csv_string};
use crate::{Error, Result};

use super::battery::run_battery;
use super::config::{parse_exponent, parse_shape, ExperimentConfig};
use super::sweep::{csv_safe, fmt_exponent, run_sweep, summaries_to_csv_string, sweep_to_csv_string};

#[derive(Parser)]
#[command(
    name = "cheegerlab",
    version,
    about = "p-Laplacian spectra, Cheeger constants, and shape optimization on planar grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Cells along the first axis of the bounding box (16 to 1024).
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// Bounding box side lengths as `w,h`.
    #[arg(long, value_parser = extent_arg, default_value = "1,1")]
    extent: (f64, f64),
    /// Directory reports and images are written to.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for every stochastic component.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget per solve.
    #[arg(long, default_value_t = 50_000)]
    max_iterations: usize,
    /// Relative convergence tolerance per solve.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum Command {
    /// First p-Laplacian eigenvalue and eigenfunction on a shape.
    Eigen {
        /// Domain: square | lshape | disk:cx,cy,r | rect:x,y,w,h |
        /// annulus:cx,cy,ro,ri | stadium:cx,cy,len,h | punctured-disk:cx,cy,r,n.
        #[arg(long, default_value = "square")]
        shape: String,
        /// Exponent p, strictly between 1 and infinity.
        #[arg(long, value_parser = exponent_arg, default_value = "2")]
        p: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Cheeger constant and an optimal subset.
    Cheeger {
        #[arg(long, default_value = "square")]
        shape: String,
        /// Perimeter flavor: isotropic or anisotropic.
        #[arg(long, value_parser = mode_arg, default_value = "isotropic")]
        mode: PerimeterMode,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// p-torsion function and its peak value.
    Torsion {
        #[arg(long, default_value = "square")]
        shape: String,
        #[arg(long, value_parser = exponent_arg, default_value = "2")]
        p: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generalized ratio F = lambda_p^{1/p} / lambda_q^{1/q} with its bounds.
    Ratio {
        #[arg(long, default_value = "square")]
        shape: String,
        #[arg(long, value_parser = exponent_arg, default_value = "2")]
        p: f64,
        #[arg(long, value_parser = exponent_arg, default_value = "1")]
        q: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the verification battery and gate on its checks.
    Verify {
        /// Comma-separated battery domains, or `default` for the full ledger.
        #[arg(long, default_value = "default")]
        battery: String,
        /// Scales every tolerance row (0 is the negative control).
        #[arg(long, default_value_t = 1.0)]
        slack_scale: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Anneal a subdomain of a design region to minimize F.
    Optimize {
        /// Design region candidates must stay inside.
        #[arg(long, default_value = "square")]
        shape: String,
        #[arg(long, value_parser = exponent_arg, default_value = "2")]
        p: f64,
        #[arg(long, value_parser = exponent_arg, default_value = "1")]
        q: f64,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.05)]
        initial_temperature: f64,
        #[arg(long, default_value_t = 0.995)]
        cooling: f64,
        #[arg(long, default_value_t = 8)]
        flip_batch: usize,
        /// Keep only the largest connected component of each proposal.
        #[arg(long)]
        connectivity_repair: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep exponent pairs across a list of domains on one grid.
    Sweep {
        /// Semicolon-separated shapes, each optionally `name=shape`.
        #[arg(long, default_value = "square;disk:0.5,0.5,0.4")]
        domains: String,
        /// Numerator exponents (repeatable).
        #[arg(long = "p", value_parser = exponent_arg, action = ArgAction::Append, default_values_t = [2.0])]
        p: Vec<f64>,
        /// Denominator exponents (repeatable).
        #[arg(long = "q", value_parser = exponent_arg, action = ArgAction::Append, default_values_t = [1.0])]
        q: Vec<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ratio of a punctured unit disk as holes accumulate.
    Puncture {
        #[arg(long, value_parser = exponent_arg, default_value = "inf")]
        p: f64,
        #[arg(long, value_parser = exponent_arg, default_value = "1")]
        q: f64,
        /// Hole counts (repeatable).
        #[arg(long = "holes", value_parser = clap::value_parser!(i64), action = ArgAction::Append, default_values_t = [0i64, 5, 20, 80])]
        holes: Vec<i64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Execute a key=value configuration file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
    },
}

fn exponent_arg(s: &str) -> std::result::Result<f64, String> {
    parse_exponent(s).map_err(|e| e.to_string())
}

fn extent_arg(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected w,h, got {s:?}"));
    }
    let w: f64 = parts[0].trim().parse().map_err(|_| format!("invalid width {:?}", parts[0]))?;
    let h: f64 = parts[1].trim().parse().map_err(|_| format!("invalid height {:?}", parts[1]))?;
    Ok((w, h))
}

fn mode_arg(s: &str) -> std::result::Result<PerimeterMode, String> {
    match s {
        "isotropic" => Ok(PerimeterMode::Isotropic),
        "anisotropic" => Ok(PerimeterMode::Anisotropic),
        other => Err(format!("expected isotropic or anisotropic, got {other:?}")),
    }
}

/// Entry point behind `main`: parse `argv`, run, and map the outcome to an
/// exit code instead of exiting, so tests can drive the binary in-process.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests travel as "errors" with exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn config_from(common: &CommonArgs, command: &str, shape: &str) -> ExperimentConfig {
    ExperimentConfig {
        command: command.into(),
        shape: shape.into(),
        resolution: common.grid,
        extent: common.extent,
        output_dir: common.out.to_string_lossy().into_owned(),
        seed: common.seed,
        max_iterations: common.max_iterations,
        tolerance: common.tolerance,
        ..Default::default()
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Eigen { shape, p, common } => {
            let mut cfg = config_from(&common, "eigen", &shape);
            cfg.p_list = vec![p];
            cfg.validate()?;
            cmd_eigen(&cfg)
        }
        Command::Cheeger { shape, mode, common } => {
            let mut cfg = config_from(&common, "cheeger", &shape);
            cfg.mode = mode;
            cfg.validate()?;
            cmd_cheeger(&cfg)
        }
        Command::Torsion { shape, p, common } => {
            let mut cfg = config_from(&common, "torsion", &shape);
            cfg.p_list = vec![p];
            cfg.validate()?;
            cmd_torsion(&cfg)
        }
        Command::Ratio { shape, p, q, common } => {
            let mut cfg = config_from(&common, "ratio", &shape);
            cfg.p_list = vec![p];
            cfg.q_list = vec![q];
            cfg.validate()?;
            cmd_ratio(&cfg)
        }
        Command::Verify { battery, slack_scale, common } => {
            let mut cfg = config_from(&common, "verify", "square");
            cfg.slack_scale = slack_scale;
            if battery != "default" {
                cfg.battery_domains =
                    battery.split(',').map(|s| s.trim().to_string()).collect();
            }
            cfg.validate()?;
            cmd_verify(&cfg)
        }
        Command::Optimize {
            shape,
            p,
            q,
            steps,
            initial_temperature,
            cooling,
            flip_batch,
            connectivity_repair,
            common,
        } => {
            let mut cfg = config_from(&common, "optimize", &shape);
            cfg.p_list = vec![p];
            cfg.q_list = vec![q];
            cfg.steps = steps;
            cfg.initial_temperature = initial_temperature;
            cfg.cooling = cooling;
            cfg.flip_batch = flip_batch;
            cfg.connectivity_repair = connectivity_repair;
            cfg.validate()?;
            cmd_optimize(&cfg)
        }
        Command::Sweep { domains, p, q, common } => {
            let mut cfg = config_from(&common, "sweep", &domains);
            cfg.p_list = p;
            cfg.q_list = q;
            let parsed = parse_domain_list(&domains)?;
            cfg.battery_domains = parsed.iter().map(|(n, _)| n.clone()).collect();
            cfg.validate()?;
            cmd_sweep(&cfg, &parsed)
        }
        Command::Puncture { p, q, holes, common } => {
            let mut cfg = config_from(&common, "puncture", "");
            // The experiment works on the unit disk, so the shared 1x1
            // default box cannot hold it; widen to the standard margin.
            if cfg.extent == (1.0, 1.0) {
                cfg.extent = (2.2, 2.2);
            }
            cfg.shape = format!("disk:{},{},1", cfg.extent.0 / 2.0, cfg.extent.1 / 2.0);
            cfg.p_list = vec![p];
            cfg.q_list = vec![q];
            cfg.puncture_counts = holes;
            cfg.validate()?;
            cmd_puncture(&cfg)
        }
        Command::Run { config } => {
            let text = fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::parse(&text)?;
            match cfg.command.as_str() {
                "eigen" => cmd_eigen(&cfg),
                "cheeger" => cmd_cheeger(&cfg),
                "torsion" => cmd_torsion(&cfg),
                "ratio" => cmd_ratio(&cfg),
                "verify" => cmd_verify(&cfg),
                "optimize" => cmd_optimize(&cfg),
                "puncture" => cmd_puncture(&cfg),
                other => Err(Error::InvalidInput(format!(
                    "config command {other:?} is not runnable from a file; \
                     use eigen, cheeger, torsion, ratio, verify, optimize, or puncture"
                ))),
            }
        }
    }
}

fn prepare(cfg: &ExperimentConfig) -> Result<(Grid2D, DomainMask)> {
    let shape = parse_shape(&cfg.shape)?;
    let grid = cfg.grid()?;
    let mask = rasterize(&shape, &grid)?;
    Ok((grid, mask))
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let text = format!(
        "cheegerlab {}\n\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_canonical_string()
    );
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

fn single_exponent(list: &[f64], which: &str) -> Result<f64> {
    match list {
        [e] => Ok(*e),
        other => Err(Error::InvalidInput(format!(
            "expected exactly one {which}, got {}",
            other.len()
        ))),
    }
}

fn cmd_eigen(cfg: &ExperimentConfig) -> Result<i32> {
    let p = single_exponent(&cfg.p_list, "p")?;
    let (grid, mask) = prepare(cfg)?;
    let result = principal_eigen(&mask, &grid, p, &cfg.solver_options())?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    save_field_pgm(result.eigenfunction.values(), &grid, dir.join("field_eigen.pgm"))?;
    let mut csv = String::from("domain,p,lambda[1/length^p],iterations,residual\n");
    writeln!(
        csv,
        "{},{},{},{},{}",
        csv_safe(&cfg.shape),
        fmt_exponent(p),
        result.lambda,
        result.iterations,
        result.residual
    )
    .unwrap();
    fs::write(dir.join("report.csv"), csv)?;
    println!(
        "lambda_{}({}) = {:.8} (root {:.8} per unit length) after {} iterations",
        fmt_exponent(p),
        cfg.shape,
        result.lambda,
        result.lambda.powf(1.0 / p),
        result.iterations
    );
    Ok(0)
}

fn cmd_cheeger(cfg: &ExperimentConfig) -> Result<i32> {
    let (grid, mask) = prepare(cfg)?;
    let result = cheeger_dinkelbach(&mask, &grid, cfg.mode, &cfg.solver_options())?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    save_mask_pgm(&result.cheeger_set, &grid, dir.join("mask_cheeger.pgm"))?;
    fs::write(dir.join("trace.csv"), history_to_csv_string(&result.history))?;
    let mut csv = String::from("domain,mode,h[1/length],set_cells,iterations\n");
    writeln!(
        csv,
        "{},{},{},{},{}",
        csv_safe(&cfg.shape),
        result.mode,
        result.h,
        result.cheeger_set.count_true(),
        result.iterations
    )
    .unwrap();
    fs::write(dir.join("report.csv"), csv)?;
    println!(
        "h({}) = {:.8} per unit length ({} mode, {}-cell set)",
        cfg.shape,
        result.h,
        result.mode,
        result.cheeger_set.count_true()
    );
    Ok(0)
}

fn cmd_torsion(cfg: &ExperimentConfig) -> Result<i32> {
    let p = single_exponent(&cfg.p_list, "p")?;
    let (grid, mask) = prepare(cfg)?;
    let (field, diagnostics) = torsion_detailed(&mask, &grid, p, &cfg.solver_options())?;
    let peak = field.values().iter().fold(0.0f64, |m, &v| m.max(v));
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    save_field_pgm(field.values(), &grid, dir.join("field_torsion.pgm"))?;
    let mut csv = String::from("domain,p,max_w,iterations,residual\n");
    writeln!(
        csv,
        "{},{},{},{},{}",
        csv_safe(&cfg.shape),
        fmt_exponent(p),
        peak,
        diagnostics.iterations,
        diagnostics.residual
    )
    .unwrap();
    fs::write(dir.join("report.csv"), csv)?;
    println!(
        "max torsion w_{}({}) = {:.8} after {} iterations",
        fmt_exponent(p),
        cfg.shape,
        peak,
        diagnostics.iterations
    );
    Ok(0)
}

fn cmd_ratio(cfg: &ExperimentConfig) -> Result<i32> {
    let p = single_exponent(&cfg.p_list, "p")?;
    let q = single_exponent(&cfg.q_list, "q")?;
    let (grid, mask) = prepare(cfg)?;
    let mut report = ratio_f(&mask, &grid, p, q, &cfg.solver_options())?;
    report.domain = cfg.shape.clone();
    let checks = verify_inequalities(&report, false, 2);
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    let mut csv = String::from(
        "domain,p,q,lambda_root_p[1/length],lambda_root_q[1/length],F[dimensionless]\n",
    );
    writeln!(
        csv,
        "{},{},{},{},{},{}",
        csv_safe(&cfg.shape),
        fmt_exponent(p),
        fmt_exponent(q),
        report.lambda_root_p,
        report.lambda_root_q,
        report.f
    )
    .unwrap();
    fs::write(dir.join("report.csv"), csv)?;
    fs::write(dir.join("checks.csv"), checks_to_csv_string(std::slice::from_ref(&checks)))?;
    let passed = checks.checks.iter().filter(|c| c.pass).count();
    println!(
        "F_{{{},{}}}({}) = {:.8} ({}/{} bounds hold)",
        fmt_exponent(p),
        fmt_exponent(q),
        cfg.shape,
        report.f,
        passed,
        checks.checks.len()
    );
    Ok(0)
}

fn cmd_verify(cfg: &ExperimentConfig) -> Result<i32> {
    let reports = run_battery(cfg)?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    fs::write(dir.join("checks.csv"), checks_to_csv_string(&reports))?;
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let passed: usize = reports
        .iter()
        .map(|r| r.checks.iter().filter(|c| c.pass).count())
        .sum();
    println!(
        "verification battery: {passed}/{total} checks passed at slack {}",
        cfg.slack_scale
    );
    if passed == total {
        Ok(0)
    } else {
        for report in &reports {
            for check in report.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "FAILED {} on {} (p={}, q={}): lhs {} vs rhs {} (margin {})",
                    check.name,
                    report.domain,
                    fmt_exponent(report.p),
                    fmt_exponent(report.q),
                    check.lhs,
                    check.rhs,
                    check.margin
                );
            }
        }
        Ok(1)
    }
}

fn cmd_optimize(cfg: &ExperimentConfig) -> Result<i32> {
    let p = single_exponent(&cfg.p_list, "p")?;
    let q = single_exponent(&cfg.q_list, "q")?;
    let design = parse_shape(&cfg.shape)?;
    let grid = cfg.grid()?;
    let result = optimize_mask(
        &design,
        &grid,
        p,
        q,
        None,
        &cfg.anneal_options(),
        &cfg.solver_options(),
    )?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    fs::write(dir.join("trace.csv"), trace_to_csv_string(&result.trace))?;
    save_mask_pgm(&result.best_mask, &result.rescaled_grid, dir.join("mask_best.pgm"))?;
    let accepted = result.trace.iter().filter(|t| t.step > 0 && t.accepted).count();
    let mut csv = String::from(
        "design,p,q,best_F[dimensionless],rescale_t,final_lambda_p,steps,accepted\n",
    );
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        csv_safe(&cfg.shape),
        fmt_exponent(p),
        fmt_exponent(q),
        result.best_f,
        result.rescale_t,
        result.final_lambda_p,
        cfg.steps,
        accepted
    )
    .unwrap();
    fs::write(dir.join("report.csv"), csv)?;
    if result.degenerate {
        eprintln!("warning: no proposal was accepted; the design region may be too tight");
    }
    println!(
        "best F_{{{},{}}} inside {} = {:.8} ({} accepted steps, eigenvalue {:.6} after rescale)",
        fmt_exponent(p),
        fmt_exponent(q),
        cfg.shape,
        result.best_f,
        accepted,
        result.final_lambda_p
    );
    Ok(0)
}

fn parse_domain_list(s: &str) -> Result<Vec<(String, ShapeSpec)>> {
    let domains: Vec<(String, ShapeSpec)> = s
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (name, spec) = match t.split_once('=') {
                Some((n, sp)) => (n.trim().to_string(), sp.trim()),
                None => (t.to_string(), t),
            };
            Ok((name, parse_shape(spec)?))
        })
        .collect::<Result<_>>()?;
    if domains.is_empty() {
        return Err(Error::InvalidInput("no domains given".into()));
    }
    Ok(domains)
}

fn cmd_sweep(cfg: &ExperimentConfig, domains: &[(String, ShapeSpec)]) -> Result<i32> {
    let grid = cfg.grid()?;
    let report = run_sweep(domains, &cfg.p_list, &cfg.q_list, &grid, &cfg.solver_options())?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    fs::write(dir.join("report.csv"), sweep_to_csv_string(&report))?;
    fs::write(dir.join("summary.csv"), summaries_to_csv_string(&report))?;
    for s in &report.summaries {
        println!(
            "F_{{{},{}}}: min {:.6} on {}, max {:.6} on {}",
            fmt_exponent(s.p),
            fmt_exponent(s.q),
            s.min_f,
            s.min_domain,
            s.max_f,
            s.max_domain
        );
    }
    let failures: Vec<&str> = report
        .rows
        .iter()
        .filter_map(|r| r.error.as_deref())
        .collect();
    if failures.is_empty() {
        Ok(0)
    } else {
        for f in failures {
            eprintln!("row failed: {f}");
        }
        Ok(1)
    }
}

fn cmd_puncture(cfg: &ExperimentConfig) -> Result<i32> {
    let p = single_exponent(&cfg.p_list, "p")?;
    let q = single_exponent(&cfg.q_list, "q")?;
    let grid = cfg.grid()?;
    let series = puncture_experiment(&cfg.puncture_counts, p, q, &grid, cfg.seed)?;
    let dir = out_dir(cfg)?;
    write_manifest(&dir, cfg)?;
    let mut csv = String::from("holes,F[dimensionless]\n");
    for (n, f) in &series {
        writeln!(csv, "{n},{f}").unwrap();
    }
    fs::write(dir.join("report.csv"), csv)?;
    for (n, f) in &series {
        println!("F_{{{},{}}} with {n} holes = {f:.8}", fmt_exponent(p), fmt_exponent(q));
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::load_mask_pgm;
    use tempfile::tempdir;

    fn run(args: &[&str]) -> i32 {
        run_cli(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn unknown_subcommands_and_invalid_regimes_exit_two() {
        assert_eq!(run(&["cheegerlab", "frobnicate"]), 2);
        assert_eq!(run(&["cheegerlab", "eigen", "--p", "nope"]), 2);
        let dir = tempdir().unwrap();
        let out = dir.path().join("o");
        assert_eq!(
            run(&[
                "cheegerlab", "ratio", "--p", "1", "--q", "2",
                "--grid", "16", "--out", out.to_str().unwrap(),
            ]),
            2
        );
        assert_eq!(run(&["cheegerlab", "eigen", "--grid", "8"]), 2);
    }

    #[test]
    fn ratio_command_writes_reports_and_exits_zero() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("ratio-out");
        let code = run(&[
            "cheegerlab", "ratio", "--shape", "disk:0.5,0.5,0.4",
            "--grid", "48", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let report = fs::read_to_string(out.join("report.csv")).unwrap();
        assert_eq!(report.lines().count(), 2);
        assert!(report.starts_with("domain,p,q,"));
        let checks = fs::read_to_string(out.join("checks.csv")).unwrap();
        assert!(checks.lines().count() > 1);
        assert!(checks.lines().skip(1).all(|l| l.ends_with(",true")));
        let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
        assert!(manifest.contains("command=ratio"));
        assert!(manifest.contains("shape=disk:0.5,0.5,0.4"));
        assert!(manifest.contains("seed=0"));
    }

    #[test]
    fn cheeger_command_writes_a_loadable_mask_and_trace() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("cheeger-out");
        let code = run(&[
            "cheegerlab", "cheeger", "--shape", "square",
            "--grid", "24", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let (mask, grid) = load_mask_pgm(out.join("mask_cheeger.pgm")).unwrap();
        assert!(!mask.is_empty());
        assert_eq!(grid.unwrap().nx(), 24);
        let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
        assert!(trace.starts_with("iteration,h[1/length]\n"));
        assert!(trace.lines().count() >= 2);
    }

    #[test]
    fn eigen_and_torsion_commands_write_field_images() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("fields");
        let code = run(&[
            "cheegerlab", "eigen", "--shape", "square", "--grid", "20",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let pgm = fs::read_to_string(out.join("field_eigen.pgm")).unwrap();
        assert!(pgm.starts_with("P2\n"));
        assert!(pgm.contains("255"));
        let code = run(&[
            "cheegerlab", "torsion", "--shape", "square", "--grid", "20",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(out.join("field_torsion.pgm").exists());
    }

    #[test]
    fn verify_gates_on_failing_rows() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("verify-out");
        let code = run(&[
            "cheegerlab", "verify", "--battery", "square", "--grid", "16",
            "--slack-scale", "0", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 1, "slack 0 is the negative control and must fail");
        let checks = fs::read_to_string(out.join("checks.csv")).unwrap();
        assert!(checks.lines().any(|l| l.ends_with(",false")));
        assert_eq!(run(&["cheegerlab", "verify", "--battery", "hexagon"]), 2);
    }

    #[test]
    fn sweep_command_writes_rows_and_summary() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("sweep-out");
        let code = run(&[
            "cheegerlab", "sweep", "--domains", "square", "--grid", "16",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let rows = fs::read_to_string(out.join("report.csv")).unwrap();
        assert_eq!(rows.lines().count(), 2);
        let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
        assert!(summary.lines().nth(1).unwrap().starts_with("2,1,"));
    }

    #[test]
    fn optimize_command_smoke_test() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("opt-out");
        let code = run(&[
            "cheegerlab", "optimize", "--shape", "square", "--grid", "16",
            "--steps", "3", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 5, "header plus steps 0..=3");
        assert!(out.join("mask_best.pgm").exists());
    }

    #[test]
    fn puncture_rejects_negative_hole_counts() {
        assert_eq!(run(&["cheegerlab", "puncture", "--holes=-1", "--grid", "16"]), 2);
    }

    #[test]
    fn run_command_executes_a_config_file() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("run-out");
        let config_path = dir.path().join("experiment.cfg");
        let text = format!(
            "command=ratio\nshape=square\nresolution=16\np=2\nq=1\noutput_dir={}\n",
            out.to_str().unwrap()
        );
        fs::write(&config_path, text).unwrap();
        let code = run(&["cheegerlab", "run", config_path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.join("report.csv").exists());
        let code = run(&["cheegerlab", "run", "/nonexistent/config.cfg"]);
        assert_eq!(code, 1, "missing file is an I/O failure");
        fs::write(&config_path, "command=sweep\n").unwrap();
        assert_eq!(run(&["cheegerlab", "run", config_path.to_str().unwrap()]), 2);
    }
}
