use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use stripes::diagnostics::{region_decompose, verification_report, RegionParams, ReportParams};
use stripes::energy::{energy_dsc, jc_continuum, jc_dsc, EnergyContext};
use stripes::io;
use stripes::kernels::{periodize_cells, KernelSpec};
use stripes::search::{anneal, anneal_restarts, enumerate, random_config, stripe_scan, Objective, Schedule};
use stripes::stripes1d::{sweep, SCAN_RANGE};
use stripes::{Error, Result};

/// Environment variable holding the worker count for parallel commands.
const WORKERS_ENV: &str = "STRIPES_WORKERS";

#[derive(Parser)]
#[command(name = "stripes", version, about = "Stripe-formation energies on periodic lattices and in 1D")]
struct Cli {
    /// Worker threads for parallel commands (overrides STRIPES_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical coupling J_c (discrete lattice sum or continuum closed form).
    Jc {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Continuum constant instead of the lattice sum.
        #[arg(long)]
        continuum: bool,
    },
    /// Total energy of a grid file.
    Eval(EvalArgs),
    /// Energy decomposition (perimeter, slice deficits, cross terms, residual) of a grid file.
    Decompose(EvalArgs),
    /// Optimal stripe widths over a grid of tau and p values (CSV).
    Stripes {
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Comma-separated tau values.
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[arg(long, default_value_t = SCAN_RANGE.0)]
        h_min: f64,
        #[arg(long, default_value_t = SCAN_RANGE.1)]
        h_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive search (or stripe scan) for minimizers on a small torus.
    Search {
        #[command(flatten)]
        model: ModelArgs,
        /// Coupling for the unscaled Euclidean functional on the unit lattice.
        #[arg(long = "J")]
        j: Option<f64>,
        /// Only compare periodic stripes.
        #[arg(long)]
        stripes_only: bool,
        /// Refuse to enumerate more cells than this.
        #[arg(long)]
        max_cells: Option<usize>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated annealing from random starts.
    Anneal {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Metropolis proposals per chain.
        #[arg(long, default_value_t = 3_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 0.3)]
        t0: f64,
        /// Temperature factor per sweep.
        #[arg(long, default_value_t = 0.998)]
        cool: f64,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Start from this grid instead of random configurations.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Region decomposition of a grid file into A_-1, A_0 and stripe regions.
    Regions {
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        region: RegionArgs,
        /// Emit JSON (labels and distances) instead of the label grid.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report-only diagnostics with fitted constants and margins.
    Report {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    n: usize,
    /// Lattice spacing; defaults to tau^(1/beta).
    #[arg(long)]
    kappa: Option<f64>,
}

impl ModelArgs {
    fn context(&self) -> Result<EnergyContext> {
        let spec = KernelSpec::one_norm(self.d, self.p, self.tau)?;
        let kappa = self.kappa.unwrap_or_else(|| spec.offset());
        if !(kappa > 0.0) {
            return Err(Error::Precondition("kappa must be positive (tau = 0 needs an explicit --kappa)".into()));
        }
        EnergyContext::new(&spec, self.n, kappa)
    }
}

#[derive(Args)]
struct RegionArgs {
    /// Cube side in cells.
    #[arg(long, default_value_t = 4)]
    l: usize,
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    /// Local energy threshold on A_0 (reported only).
    #[arg(long = "M", default_value_t = 0.0)]
    big_m: f64,
}

impl RegionArgs {
    fn params(&self) -> RegionParams {
        RegionParams { l_cells: self.l, eta: self.eta, delta: self.delta, rho: self.rho, big_m: self.big_m }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Unscaled Euclidean energy with this coupling (unit lattice) instead of the rescaled one.
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn record_text(fields: &[(String, f64)], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                fields.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
            io::to_json(&map)? + "\n"
        }
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
            let vals: Vec<String> = fields.iter().map(|(_, v)| format!("{v:.17e}")).collect();
            format!("{}\n{}\n", head.join(","), vals.join(","))
        }
    })
}

fn run_eval(a: &EvalArgs, full: bool) -> Result<()> {
    let cfg = io::read_grid(&a.grid)?;
    if let Some(j) = a.j {
        let spec = KernelSpec::euclidean(cfg.d, a.p, 0.0)?;
        let kernel = periodize_cells(&spec, cfg.n, 1.0, 1e-12)?;
        let e = energy_dsc(&cfg, j, &kernel)?;
        return emit(&a.out, &record_text(&[("energy_dsc".into(), e)], a.format)?);
    }
    let spec = KernelSpec::one_norm(cfg.d, a.p, a.tau)?;
    let ctx = EnergyContext::new(&spec, cfg.n, cfg.spacing)?;
    let text = if full {
        let b = ctx.decompose(&cfg)?;
        match a.format {
            Format::Json => io::breakdown_json(&b)? + "\n",
            Format::Csv => io::breakdown_csv(&b)?,
        }
    } else {
        record_text(&[("total".into(), ctx.total(&cfg)?)], a.format)?
    };
    emit(&a.out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Jc { d, p, tol, continuum } => {
            if continuum {
                println!("J_c(d={d}, p={p}) = {:.12}", jc_continuum(d, p)?);
            } else {
                KernelSpec::euclidean(d, p, 0.0)?;
                let (v, err) = jc_dsc(d, p, tol)?;
                println!("J_c^dsc(d={d}, p={p}) = {v:.12} +- {err:.1e}");
            }
            Ok(())
        }
        Command::Eval(a) => run_eval(&a, false),
        Command::Decompose(a) => run_eval(&a, true),
        Command::Stripes { d, p, mut tau, h_min, h_max, out } => {
            tau.sort_by(f64::total_cmp);
            let rows = sweep(d, &tau, &p, (h_min, h_max))?;
            emit(&out, &io::sweep_csv(&rows)?)
        }
        Command::Search { model, j, stripes_only, max_cells, tol, out } => {
            let obj = match j {
                Some(j) => {
                    let spec = KernelSpec::euclidean(model.d, model.p, 0.0)?;
                    Objective::Discrete { j, kernel: periodize_cells(&spec, model.n, 1.0, tol)? }
                }
                None => {
                    let spec = KernelSpec::one_norm(model.d, model.p, model.tau)?;
                    let kappa = model.kappa.unwrap_or_else(|| spec.offset());
                    Objective::Rescaled(EnergyContext::with_tol(&spec, model.n, kappa, tol)?)
                }
            };
            let report = if stripes_only { stripe_scan(&obj)? } else { enumerate(&obj, max_cells)? };
            emit(&out, &(io::report_json(&report)? + "\n"))
        }
        Command::Anneal { model, seed, steps, t0, cool, restarts, grid, out } => {
            let ctx = model.context()?;
            let schedule = Schedule { t0, cooling: cool, steps, seed };
            let report = match grid {
                Some(path) => anneal(&io::read_grid(&path)?, &ctx, &schedule)?,
                None if restarts <= 1 => {
                    anneal(&random_config(model.d, model.n, ctx.spacing, seed), &ctx, &schedule)?
                }
                None => anneal_restarts(&ctx, &schedule, restarts)?,
            };
            emit(&out, &(io::report_json(&report)? + "\n"))
        }
        Command::Regions { grid, region, json, out } => {
            let cfg = io::read_grid(&grid)?;
            let map = region_decompose(&cfg, &region.params())?;
            let text = if json { io::to_json(&map)? + "\n" } else { io::regions_to_string(&map) };
            emit(&out, &text)
        }
        Command::Report { p, tau, n, region, seed, samples, json, out } => {
            let params = ReportParams { p, tau, n, region: region.params(), seed, samples };
            let report = verification_report(&params)?;
            let text = if json { io::to_json(&report)? + "\n" } else { report.to_text() };
            emit(&out, &text)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Tolerance { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let workers = cli.workers.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
