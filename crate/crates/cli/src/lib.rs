//! `seqspec` command-line interface: critical values, sphericity tests on
//! observation CSVs, scenario simulation, the level/power figure harness,
//! Stieltjes-transform tables and limit-law kernel tables.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use seqspec_core::datagen::{self, ChangePointScenario, CovKind, CovarianceSpec};
use seqspec_core::error::Error;
use seqspec_core::exec;
use seqspec_core::harness::{self, AlternativeFamily, ExperimentOverrides};
use seqspec_core::limits::{law_logdet, law_u, law_u2, LimitLaw, TracePairLaw};
use seqspec_core::model::{Dimensions, SymmetryClass, TimeGrid};
use seqspec_core::monitor::{self, StatisticId};
use seqspec_core::mp::{companion_stieltjes, SpectralMeasure};

#[derive(Parser)]
#[command(
    name = "seqspec",
    about = "Sequential monitoring of high-dimensional covariance structure",
    long_about = "Monitors sphericity of a high-dimensional covariance over a time grid \
via linear spectral statistics of the sequential sample covariance matrix. \
Worker count is capped by the SEQSPEC_THREADS environment variable \
(default: hardware parallelism)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo critical value of a sup statistic's limit law
    Critval(CritvalArgs),
    /// Run a sphericity monitoring test on an observation CSV
    Test(TestArgs),
    /// Simulate an observation stream and write it as CSV
    Simulate(SimulateArgs),
    /// Emit level/power curves as plot-ready CSV files
    Figures(FiguresArgs),
    /// Tabulate the companion Stieltjes transform on a grid of z
    Mp(MpArgs),
    /// Tabulate mean/covariance kernels of a limit law over the time grid
    Kernels(KernelsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    U,
    U2,
    Logdet,
}

impl LawArg {
    fn statistic(self) -> StatisticId {
        match self {
            LawArg::U => StatisticId::U,
            LawArg::U2 => StatisticId::U2,
            LawArg::Logdet => StatisticId::LogDet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Real,
    Complex,
}

impl ClassArg {
    fn class(self) -> SymmetryClass {
        match self {
            ClassArg::Real => SymmetryClass::Real,
            ClassArg::Complex => SymmetryClass::Complex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    Null,
    DiagShift,
    DiagShiftOffdiag,
    ScaledIdentity,
    ScaledTridiag,
}

#[derive(Args)]
struct CritvalArgs {
    /// Limit law of the monitored statistic
    #[arg(long, value_enum)]
    law: LawArg,
    /// Sample size (observations)
    #[arg(long)]
    n: usize,
    /// Data dimension
    #[arg(long)]
    p: usize,
    /// Left end of the monitoring window, fraction of the sample in (0, 1]
    #[arg(long)]
    t0: f64,
    /// Nominal test level in (0, 1)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo path count
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    /// RNG seed
    #[arg(long)]
    seed: u64,
    /// Reuse/populate cached critical values in this directory
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Monitored statistic
    #[arg(long, value_enum)]
    statistic: LawArg,
    /// Observation CSV (header x1..xp, one observation per row)
    #[arg(long)]
    data: PathBuf,
    /// Left end of the monitoring window, fraction in (0, 1]
    #[arg(long)]
    t0: f64,
    /// Nominal test level in (0, 1)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo path count for the critical value
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    /// RNG seed for the critical-value Monte Carlo
    #[arg(long)]
    seed: u64,
    /// Write the trajectory as CSV (columns t,value) to this path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse/populate cached critical values in this directory
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sample size (observations)
    #[arg(long)]
    n: usize,
    /// Data dimension
    #[arg(long)]
    p: usize,
    /// Post-change covariance family
    #[arg(long, value_enum, default_value = "null")]
    alternative: AlternativeArg,
    /// Deviation parameter (delta or epsilon) of the alternative
    #[arg(long, default_value_t = 0.0)]
    param: f64,
    /// Change fraction in (0, 1]; 1 means no change
    #[arg(long, default_value_t = 0.6)]
    t_star: f64,
    /// Pre-change variance sigma^2 of the spherical covariance
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// RNG seed
    #[arg(long)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FiguresArgs {
    /// Output directory for the per-(dims, alternative) CSV files
    #[arg(long)]
    out_dir: PathBuf,
    /// RNG seed
    #[arg(long)]
    seed: u64,
    /// Use the full-scale study (2000 replications) instead of desk scale
    #[arg(long, default_value_t = false)]
    full_scale: bool,
    /// Monitored statistic
    #[arg(long, value_enum, default_value = "u")]
    statistic: LawArg,
    /// Comma-separated alternative families (default: all four)
    #[arg(long, value_delimiter = ',')]
    alternatives: Option<Vec<String>>,
    /// Override the replication count
    #[arg(long)]
    replications: Option<usize>,
    /// Override the critical-value draw count
    #[arg(long)]
    draws: Option<usize>,
    /// Override the (n, p) list, e.g. 200x120,150x300
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<String>>,
    /// Override the deviation grid, e.g. 0,0.25,0.5
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    /// Override the change fraction
    #[arg(long)]
    t_star: Option<f64>,
    /// Override the monitoring window start
    #[arg(long)]
    t0: Option<f64>,
    /// Override the nominal level
    #[arg(long)]
    alpha: Option<f64>,
    /// Reuse/populate cached critical values in this directory
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MpArgs {
    /// Time argument t of the companion transform
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Aspect ratio y
    #[arg(long)]
    y: f64,
    /// Real parts of z as lo:hi:count
    #[arg(long, default_value = "1:1:1")]
    grid_re: String,
    /// Imaginary parts of z as lo:hi:count
    #[arg(long, default_value = "0.5:2:4")]
    grid_im: String,
    /// Population spectrum as lambda:weight pairs, e.g. 1:0.6,2:0.4
    #[arg(long, default_value = "1:1")]
    atoms: String,
}

#[derive(Args)]
struct KernelsArgs {
    /// Limit law to tabulate
    #[arg(long)]
    law: String,
    /// Sample size (observations)
    #[arg(long)]
    n: usize,
    /// Data dimension
    #[arg(long)]
    p: usize,
    /// Left end of the monitoring window
    #[arg(long)]
    t0: f64,
    /// Number of grid times tabulated (subsampled from the canonical grid)
    #[arg(long, default_value_t = 25)]
    count: usize,
    /// Symmetry class of the limit law
    #[arg(long, value_enum, default_value = "real")]
    class: ClassArg,
}

/// Parses argv, dispatches, and maps errors to the exit-code contract.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = exec::with_threads(exec::thread_count(), || dispatch(cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Critval(a) => critval(a),
        Command::Test(a) => test(a),
        Command::Simulate(a) => simulate(a),
        Command::Figures(a) => figures(a),
        Command::Mp(a) => mp(a),
        Command::Kernels(a) => kernels(a),
    }
}

fn critval(a: CritvalArgs) -> Result<(), Error> {
    let dims = Dimensions::new(a.n, a.p)
        .map_err(|e| Error::Parameter(format!("--n/--p: {e}")))?;
    let cv = harness::critical_value(
        a.law.statistic(),
        dims,
        a.t0,
        a.alpha,
        a.draws as usize,
        a.seed,
        a.cache_dir.as_deref(),
    )?;
    println!("law={}", a.law.statistic().name());
    println!("n={}", a.n);
    println!("p={}", a.p);
    println!("t0={}", a.t0);
    println!("alpha={}", a.alpha);
    println!("draws={}", cv.draws);
    println!("grid_len={}", cv.grid_len);
    println!("c_alpha={}", cv.c_alpha);
    println!("std_err={}", cv.std_err);
    Ok(())
}

fn test(a: TestArgs) -> Result<(), Error> {
    let file = fs::File::open(&a.data)
        .map_err(|e| Error::Parameter(format!("--data {}: {e}", a.data.display())))?;
    let batch = datagen::read_csv(file)?;
    let dims = batch.dims()?;
    let grid = TimeGrid::canonical(dims.n(), a.t0)
        .map_err(|e| Error::Parameter(format!("--t0: {e}")))?;
    let statistic = a.statistic.statistic();
    let cv = harness::critical_value(
        statistic,
        dims,
        a.t0,
        a.alpha,
        a.draws as usize,
        a.seed,
        a.cache_dir.as_deref(),
    )?;
    let traj = monitor::trajectory(statistic, &batch, dims, &grid)?;
    let report = monitor::run_test(traj, cv.c_alpha, a.alpha)?;
    println!("statistic={}", report.statistic.name());
    println!("n={}", dims.n());
    println!("p={}", dims.p());
    println!("t0={}", a.t0);
    println!("alpha={}", report.alpha);
    println!("critical_value={}", report.critical_value);
    println!("sup_statistic={}", report.sup_value);
    println!("argmax_time={}", report.argmax_time);
    println!("argmax_time_note=heuristic change-time diagnostic");
    println!("reject={}", report.reject);
    if let Some(out) = &a.out {
        let mut csv = String::from("t,value\n");
        for (t, v) in report
            .trajectory
            .grid
            .points()
            .iter()
            .zip(&report.trajectory.values)
        {
            csv.push_str(&format!("{t},{v}\n"));
        }
        fs::write(out, csv)
            .map_err(|e| Error::Parameter(format!("--out {}: {e}", out.display())))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Error> {
    let dims = Dimensions::new(a.n, a.p)
        .map_err(|e| Error::Parameter(format!("--n/--p: {e}")))?;
    let pre = CovarianceSpec::new(CovKind::ScaledIdentity { sigma2: a.sigma2 }, a.p);
    let (post, t_star) = match a.alternative {
        AlternativeArg::Null => (pre, 1.0),
        AlternativeArg::DiagShift => (
            CovarianceSpec::new(CovKind::DiagShift { delta: a.param }, a.p),
            a.t_star,
        ),
        AlternativeArg::DiagShiftOffdiag => (
            CovarianceSpec::new(CovKind::DiagShiftOffdiag { delta: a.param }, a.p),
            a.t_star,
        ),
        AlternativeArg::ScaledIdentity => (
            CovarianceSpec::new(CovKind::ScaledIdentityEps { eps: a.param }, a.p),
            a.t_star,
        ),
        AlternativeArg::ScaledTridiag => (
            CovarianceSpec::new(CovKind::ScaledTridiag { eps: a.param }, a.p),
            a.t_star,
        ),
    };
    let scn = ChangePointScenario::new(pre, post, t_star)
        .map_err(|e| Error::Parameter(format!("--t-star: {e}")))?;
    let batch = datagen::draw_sample(&scn, dims, a.seed)?;
    let file = fs::File::create(&a.out)
        .map_err(|e| Error::Parameter(format!("--out {}: {e}", a.out.display())))?;
    datagen::write_csv(&batch, file)?;
    Ok(())
}

fn figures(a: FiguresArgs) -> Result<(), Error> {
    let alternatives: Vec<AlternativeFamily> = match &a.alternatives {
        None => AlternativeFamily::all().to_vec(),
        Some(names) => names
            .iter()
            .map(|s| {
                AlternativeFamily::from_name(s)
                    .map_err(|e| Error::Parameter(format!("--alternatives: {e}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let dims_list = a
        .dims
        .as_ref()
        .map(|list| {
            list.iter()
                .map(|s| {
                    let (n, p) = s.split_once(['x', 'X']).ok_or_else(|| {
                        Error::Parameter(format!("--dims entry {s:?} is not of the form NxP"))
                    })?;
                    let n = n
                        .parse()
                        .map_err(|_| Error::Parameter(format!("--dims: bad n in {s:?}")))?;
                    let p = p
                        .parse()
                        .map_err(|_| Error::Parameter(format!("--dims: bad p in {s:?}")))?;
                    Dimensions::new(n, p)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let overrides = ExperimentOverrides {
        dims_list,
        delta_grid: a.delta_grid.clone(),
        replications: a.replications,
        draws_for_critval: a.draws,
        t_star: a.t_star,
        t0: a.t0,
        alpha: a.alpha,
    };
    let written = harness::figures(
        &alternatives,
        a.seed,
        a.full_scale,
        a.statistic.statistic(),
        &a.out_dir,
        a.cache_dir.as_deref(),
        Some(&overrides),
    )?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn parse_grid(spec: &str, flag: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parameter(format!(
            "{flag} expects lo:hi:count, got {spec:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Parameter(format!("{flag}: bad lower bound {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Parameter(format!("{flag}: bad upper bound {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Parameter(format!("{flag}: bad count {:?}", parts[2])))?;
    if count == 0 {
        return Err(Error::Parameter(format!("{flag}: count must be >= 1")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

fn parse_atoms(spec: &str) -> Result<SpectralMeasure, Error> {
    let atoms = spec
        .split(',')
        .map(|pair| {
            let (l, w) = pair.split_once(':').ok_or_else(|| {
                Error::Parameter(format!("--atoms entry {pair:?} is not lambda:weight"))
            })?;
            let l: f64 = l
                .parse()
                .map_err(|_| Error::Parameter(format!("--atoms: bad lambda {l:?}")))?;
            let w: f64 = w
                .parse()
                .map_err(|_| Error::Parameter(format!("--atoms: bad weight {w:?}")))?;
            Ok((l, w))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    SpectralMeasure::new(atoms).map_err(|e| Error::Parameter(format!("--atoms: {e}")))
}

fn mp(a: MpArgs) -> Result<(), Error> {
    let res = parse_grid(&a.grid_re, "--grid-re")?;
    let ims = parse_grid(&a.grid_im, "--grid-im")?;
    let h = parse_atoms(&a.atoms)?;
    println!("z_re,z_im,s_re,s_im,residual");
    for &re in &res {
        for &im in &ims {
            if im == 0.0 {
                return Err(Error::Parameter(
                    "--grid-im: grid must avoid the real axis (Im z != 0)".into(),
                ));
            }
            let z = Complex64::new(re, im);
            let sol = companion_stieltjes(z, a.t, a.y, &h)?;
            println!("{},{},{},{},{}", re, im, sol.s.re, sol.s.im, sol.residual);
        }
    }
    Ok(())
}

fn kernels(a: KernelsArgs) -> Result<(), Error> {
    let dims = Dimensions::new(a.n, a.p)
        .map_err(|e| Error::Parameter(format!("--n/--p: {e}")))?;
    let grid = TimeGrid::canonical(a.n, a.t0)
        .map_err(|e| Error::Parameter(format!("--t0: {e}")))?;
    let step = (grid.len() / a.count.max(1)).max(1);
    let times: Vec<f64> = grid.points().iter().copied().step_by(step).collect();
    match a.law.as_str() {
        "u" | "u2" | "logdet" => {
            let law: LimitLaw = match a.law.as_str() {
                "u" => law_u(dims, grid.clone()),
                "u2" => law_u2(dims, grid.clone()),
                _ => law_logdet(dims, grid.clone(), a.class.class())?,
            };
            println!("t1,t2,mean_t1,mean_t2,cov");
            for &t1 in &times {
                for &t2 in &times {
                    println!(
                        "{},{},{},{},{}",
                        t1,
                        t2,
                        law.mean(t1),
                        law.mean(t2),
                        law.cov(t1, t2)
                    );
                }
            }
        }
        "trace-pair" => {
            let pair = TracePairLaw::new(dims);
            println!("t1,t2,mean_f1_t1,mean_f2_t1,cov_f1f1,cov_f2f2,cov_f1f2,cov_f2f1");
            for &t1 in &times {
                for &t2 in &times {
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        t1,
                        t2,
                        pair.mean_f1(t1),
                        pair.mean_f2(t1),
                        pair.cov_f1_f1(t1, t2),
                        pair.cov_f2_f2(t1, t2),
                        pair.cov_f1_f2(t1, t2),
                        pair.cov_f2_f1(t1, t2)
                    );
                }
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "--law: unknown law {other:?} (expected u, u2, logdet or trace-pair)"
            )));
        }
    }
    Ok(())
}
