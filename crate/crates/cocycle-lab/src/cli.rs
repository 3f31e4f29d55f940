//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::anderson::{localization_report, LocalizationReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::family::{assess_assumptions, sample_word, validate_assumptions, AnyFamily, AssumptionReport, Cocycle, Interval, SchrodingerFamily};
use crate::jumpscan::{jump_statistics, scan_word, scan_word_streaming, ScanResult, StatReport};
use crate::lyapunov::{le_curve, uniform_upper_check, LEEstimate, UpperCheckReport};
use crate::output::{fmt_f64, write_csv, write_json, RunMeta};
use crate::regularity::{contraction_table, distortion_constants, select_contraction, ContractionParams, ContractionTable, DistortionConstants};
use crate::rng::derive_seed;
use crate::rotation::{johnson_scan, rotation_curve, uh_test, DOSMeasure, JohnsonOptions, JohnsonReport, UHReport};
use crate::with_family;

#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version, about = "Numerics for random SL(2,R) cocycles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lyapunov exponent over the parameter grid.
    LeScan(CommonArgs),
    /// Rotation number and density-of-states increments.
    RotationScan(CommonArgs),
    /// Jump-interval classification and cancellation parameters.
    JumpScan(JumpArgs),
    /// Eigenvector decay in a finite box.
    Localize(CommonArgs),
    /// Uniform hyperbolicity against flat rotation number.
    UhScan(CommonArgs),
    /// Search for a contracting power of the projective action.
    Contraction(CommonArgs),
    /// Standing assumptions and regularity constants.
    Validate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct JumpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the trajectory table of the first word.
    #[arg(long)]
    pub dump_table: bool,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (common, dump) = match &cli.command {
        Command::JumpScan(j) => (&j.common, j.dump_table),
        Command::LeScan(c)
        | Command::RotationScan(c)
        | Command::Localize(c)
        | Command::UhScan(c)
        | Command::Contraction(c)
        | Command::Validate(c) => (c, false),
    };
    let cfg = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&out)?;
    let go = || match &cli.command {
        Command::LeScan(_) => run_le_scan(&cfg, &out),
        Command::RotationScan(_) => run_rotation_scan(&cfg, &out),
        Command::JumpScan(_) => run_jump_scan(&cfg, &out, dump),
        Command::Localize(_) => run_localize(&cfg, &out),
        Command::UhScan(_) => run_uh_scan(&cfg, &out),
        Command::Contraction(_) => run_contraction(&cfg, &out),
        Command::Validate(_) => run_validate(&cfg, &out),
    };
    match common.threads {
        Some(t) => {
            if t == 0 {
                return Err(Error::Config("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Output(e.to_string()))?
                .install(go)
        }
        None => go(),
    }
}

fn build_family(cfg: &RunConfig) -> Result<AnyFamily> {
    cfg.family().map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("family: {other}")),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[derive(Serialize)]
struct LeSummary {
    nodes: usize,
    lambda_min: f64,
    lambda_max: f64,
    lambda_mean: f64,
}

pub fn run_le_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("le-scan", cfg)?;
    let fam = build_family(cfg)?;
    let grid = cfg.interval.grid(cfg.grid_cells);
    let curve = with_family!(&fam, f => le_curve(f, &grid, cfg.n, cfg.reps, cfg.seed))?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|e| vec![fmt_f64(e.a), fmt_f64(e.lambda_hat), fmt_f64(e.stderr), e.n.to_string(), e.reps.to_string(), e.seed.to_string()])
        .collect();
    let lams: Vec<f64> = curve.iter().map(|e| e.lambda_hat).collect();
    let summary = LeSummary {
        nodes: curve.len(),
        lambda_min: lams.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_max: lams.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lambda_mean: lams.iter().sum::<f64>() / lams.len() as f64,
    };
    Ok(vec![
        write_csv(out, "le_scan.csv", &meta, &["a", "lambda_hat", "stderr", "n", "reps", "seed"], &rows)?,
        write_json(out, "le_scan.json", &meta, cfg, &summary)?,
    ])
}

#[derive(Serialize)]
struct FlatCell {
    index: usize,
    lo: f64,
    hi: f64,
    increment: f64,
}

#[derive(Serialize)]
struct RotationSummary {
    dos: DOSMeasure,
    flat_cells: Vec<FlatCell>,
}

pub fn run_rotation_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("rotation-scan", cfg)?;
    let fam = build_family(cfg)?;
    let grid = cfg.interval.grid(cfg.grid_cells);
    let curve = with_family!(&fam, f => rotation_curve(f, &grid, cfg.n, cfg.rotation_scan.x0, cfg.seed, cfg.reps))?;
    let rows: Vec<Vec<String>> =
        (0..grid.len()).map(|i| vec![fmt_f64(grid[i]), fmt_f64(curve.rho_hat[i]), fmt_f64(curve.stderr[i])]).collect();
    let dos = DOSMeasure::from_curve(&curve);
    let floor = 1.0 / cfg.n as f64;
    let flat_cells = (0..dos.increments.len())
        .filter(|&i| dos.increments[i].abs() < (3.0 * dos.stderr[i]).max(floor))
        .map(|i| FlatCell { index: i, lo: grid[i], hi: grid[i + 1], increment: dos.increments[i] })
        .collect();
    Ok(vec![
        write_csv(out, "rotation_scan.csv", &meta, &["a", "rho_hat", "stderr"], &rows)?,
        write_json(out, "rotation_scan.json", &meta, cfg, &RotationSummary { dos, flat_cells })?,
    ])
}

#[derive(Serialize)]
struct UhPoint {
    a: f64,
    report: UHReport,
}

#[derive(Serialize)]
struct UhSummary {
    johnson: JohnsonReport,
    points: Vec<UhPoint>,
}

pub fn run_uh_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("uh-scan", cfg)?;
    let fam = build_family(cfg)?;
    let grid = cfg.interval.grid(cfg.grid_cells);
    let o = &cfg.uh_scan;
    let opts = JohnsonOptions { reps: o.rho_reps, words: o.words, eta_floor: o.eta_floor };
    let johnson = with_family!(&fam, f => johnson_scan(f, &grid, cfg.n, cfg.seed, &opts))?;
    let points = o
        .points
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let s = derive_seed(cfg.seed, 0x5054_0000 + i as u64);
            let report = with_family!(&fam, f => uh_test(f, a, cfg.n, o.words, o.eta_floor, s))?;
            Ok(UhPoint { a, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![write_json(out, "uh_scan.json", &meta, cfg, &UhSummary { johnson, points })?])
}

#[derive(Debug, Clone, Serialize)]
pub struct WordReport {
    pub scan: ScanResult,
    pub stats: StatReport,
    pub upper: Option<UpperCheckReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpSummary {
    pub words: usize,
    pub cells: usize,
    pub median_relative_gap: f64,
    pub median_discrepancy: f64,
    pub median_bad_fraction: f64,
    pub records: usize,
    /// Records with angle residual below `1e-6`.
    pub residual_ok_fraction: f64,
    /// Records with residual below `1e-6` and ψ deviation at most `0.1 λ̂`.
    pub psi_ok_fraction: f64,
    /// Pooled over words, nodes and anchored pairs.
    pub upper_violation_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpScanReport {
    pub assumptions: AssumptionReport,
    pub lambda_curve: Vec<LEEstimate>,
    pub rho_curve: Vec<(f64, f64)>,
    pub summary: JumpSummary,
    pub words: Vec<WordReport>,
}

pub fn summarize(reports: &[WordReport], cells: usize) -> JumpSummary {
    let recs: Vec<_> = reports.iter().flat_map(|r| r.scan.records.iter()).collect();
    let frac = |k: usize| if recs.is_empty() { f64::NAN } else { k as f64 / recs.len() as f64 };
    let residual_ok = recs.iter().filter(|r| r.residual < 1e-6).count();
    let psi_ok = recs.iter().filter(|r| r.residual < 1e-6 && r.psi_dev <= 0.1 * r.lambda_hat).count();
    let upper = reports.iter().map(|r| r.upper.as_ref()).collect::<Option<Vec<_>>>().map(|u| {
        let bad: usize = u.iter().map(|x| x.violations).sum();
        let all: usize = u.iter().map(|x| x.nodes * x.pairs_per_node).sum();
        bad as f64 / all.max(1) as f64
    });
    JumpSummary {
        words: reports.len(),
        cells,
        median_relative_gap: median(reports.iter().map(|r| r.stats.relative_gap).collect()),
        median_discrepancy: median(reports.iter().map(|r| r.stats.discrepancy).collect()),
        median_bad_fraction: median(reports.iter().map(|r| r.scan.counts.bad as f64 / cells as f64).collect()),
        records: recs.len(),
        residual_ok_fraction: frac(residual_ok),
        psi_ok_fraction: frac(psi_ok),
        upper_violation_fraction: upper,
    }
}

/// Seed of the `w`-th scanned word.
pub fn jump_word_seed(seed: u64, w: usize) -> u64 {
    derive_seed(seed, 0x574f_0000 + w as u64)
}

/// The whole jump-scan pipeline; also returns the first word's table when requested.
pub fn jump_scan_report<F: Cocycle>(
    family: &F,
    cfg: &RunConfig,
    keep_table: bool,
) -> Result<(JumpScanReport, Option<crate::jumpscan::TrajectoryTable>)> {
    let o = &cfg.jump_scan;
    let assumptions = validate_assumptions(family, cfg.validate.samples, cfg.validate.grid).map_err(|e| match e {
        Error::MonotonicityViolation(d) => Error::IneligibleFamily(format!("parameter derivative {d:e} is not positive")),
        other => other,
    })?;
    let j: Interval = cfg.interval;
    let nodes = j.grid(o.curve_nodes.max(2) - 1);
    let lambda_curve = le_curve(family, &nodes, o.le_n, o.le_reps, derive_seed(cfg.seed, 0x4c45))?;
    let lambda_pts: Vec<(f64, f64)> = lambda_curve.iter().map(|e| (e.a, e.lambda_hat)).collect();
    let rho = rotation_curve(family, &nodes, o.rho_n, o.x0, derive_seed(cfg.seed, 0x5248), o.rho_reps)?;
    let rho_curve = rho.points();
    let cells = o.cells_for(cfg.n);
    let grid = j.grid(cells);
    let mut table = None;
    let mut words = Vec::with_capacity(o.words);
    for w in 0..o.words {
        let word = sample_word(family, jump_word_seed(cfg.seed, w), cfg.n);
        let scan = if o.streaming && !(keep_table && w == 0) {
            scan_word_streaming(family, &word, &grid, o.x0, cfg.epsilon_prime, &lambda_pts)?
        } else {
            let (t, s) = scan_word(family, &word, &grid, o.x0, cfg.epsilon_prime, &lambda_pts)?;
            if keep_table && w == 0 {
                table = Some(t);
            }
            s
        };
        let stats = jump_statistics(&scan.records, scan.counts.jump, &rho_curve, cfg.n, j);
        let upper = if o.upper_epsilon_prime > 0.0 {
            Some(uniform_upper_check(family, &nodes, &word, o.upper_epsilon_prime, &lambda_curve, false)?)
        } else {
            None
        };
        words.push(WordReport { scan, stats, upper });
    }
    let summary = summarize(&words, cells);
    Ok((JumpScanReport { assumptions, lambda_curve, rho_curve, summary, words }, table))
}

pub fn run_jump_scan(cfg: &RunConfig, out: &Path, dump_table: bool) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("jump-scan", cfg)?;
    let fam = build_family(cfg)?;
    let (report, table) = with_family!(&fam, f => jump_scan_report(f, cfg, dump_table))?;
    let mut files = vec![write_json(out, "jump_scan.json", &meta, cfg, &report)?];
    if let Some(t) = table {
        let mut rows = Vec::with_capacity((t.n + 1) * t.grid.len());
        for m in 0..=t.n {
            for (i, x) in t.row(m).iter().enumerate() {
                rows.push(vec![m.to_string(), i.to_string(), fmt_f64(*x)]);
            }
        }
        files.push(write_csv(out, "jump_table.csv", &meta, &["m", "i", "x_tilde"], &rows)?);
    }
    Ok(files)
}

pub fn run_localize(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("localize", cfg)?;
    let mu = cfg
        .family
        .potential()
        .ok_or_else(|| Error::Config("localize needs a schrodinger family".into()))?
        .clone();
    let o = &cfg.localize;
    let window = Interval::new(o.window[0], o.window[1]).map_err(|e| Error::Config(format!("localize.window: {e}")))?;
    let fam = SchrodingerFamily { potential: mu.clone(), j: window };
    let nodes = window.grid(o.le_nodes.max(2) - 1);
    let curve = le_curve(&fam, &nodes, o.le_n, o.le_reps, derive_seed(cfg.seed, 0x4c45))?;
    let pts: Vec<(f64, f64)> = curve.iter().map(|e| (e.a, e.lambda_hat)).collect();
    let report: LocalizationReport = localization_report(&mu, o.l, (window.lo, window.hi), cfg.seed, Some(&pts))?;
    let rows: Vec<Vec<String>> = report
        .states
        .iter()
        .map(|s| vec![fmt_f64(s.e), s.center.to_string(), fmt_f64(s.rate), fmt_f64(s.r_squared), s.pass.to_string()])
        .collect();
    Ok(vec![
        write_csv(out, "localize.csv", &meta, &["E", "center", "rate", "r_squared", "pass"], &rows)?,
        write_json(out, "localize.json", &meta, cfg, &report)?,
    ])
}

#[derive(Serialize)]
struct ContractionReport {
    a: f64,
    selected: ContractionParams,
    table: ContractionTable,
}

pub fn run_contraction(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("contraction", cfg)?;
    let fam = build_family(cfg)?;
    let o = &cfg.contraction;
    let a = o.a.unwrap_or(cfg.interval.mid());
    let table = with_family!(&fam, f => contraction_table(f, a, &o.s_grid, &o.k_grid, o.pairs, cfg.seed))?;
    let selected = select_contraction(&table);
    Ok(vec![write_json(out, "contraction.json", &meta, cfg, &ContractionReport { a, selected, table })?])
}

#[derive(Serialize)]
struct ValidateReport {
    assumptions: AssumptionReport,
    constants: DistortionConstants,
    /// `⌈L_p |J|⌉ + 1` from the inflated constants.
    turn_bound: usize,
}

pub fn run_validate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let meta = RunMeta::new("validate", cfg)?;
    let fam = build_family(cfg)?;
    let o = &cfg.validate;
    let assumptions = with_family!(&fam, f => assess_assumptions(f, o.samples, o.grid))?;
    let constants = with_family!(&fam, f => distortion_constants(f, o.distortion_density))?;
    let turn_bound = constants.inflated(crate::regularity::SAFETY_FACTOR).turn_bound(cfg.interval.len());
    Ok(vec![write_json(out, "validate.json", &meta, cfg, &ValidateReport { assumptions, constants, turn_bound })?])
}
