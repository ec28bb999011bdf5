//! `cloudtherm`: fit, simulate and report on cloud-growth datasets.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 input data, 4 model or
//! parameter, 5 validation failed, 6 filesystem or serialization.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloudtherm_core::microsim::{micro_run, MicroParams, MicroState};
use cloudtherm_core::scenarios::ClientEnergyParams;
use cloudtherm_core::shell::{
    emit, micro_table, tables, trajectory_table, validate, BackcastConfig, Dataset, ForecastConfig, PipelineConfig,
    Report, Table,
};
use cloudtherm_core::{Category, Error, Method, SeriesKind};

#[derive(Parser)]
#[command(name = "cloudtherm", version, about = "Thermodynamic growth model for cloud energy data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Dataset manifest (TOML).
    manifest: PathBuf,
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Write report.json and plot tables into this directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit alpha, eta and the size proxies.
    Fit {
        #[command(flatten)]
        input: Input,
    },
    /// Simulate forward from the last energy observation.
    Forecast {
        #[command(flatten)]
        input: Input,
        /// Years to simulate.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// rk4, euler or closed_form.
        #[arg(long)]
        method: Option<Method>,
        /// Reservoir capacity in MWh.
        #[arg(long)]
        reservoir: Option<f64>,
    },
    /// Estimate energy from revenue for years without reports.
    Backcast {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        start: Option<i32>,
        #[arg(long)]
        end: Option<i32>,
    },
    /// Data-center, device and network energy per year.
    ClientEnergy {
        #[command(flatten)]
        input: Input,
        /// Device energy per user and day, in Wh.
        #[arg(long)]
        wh_per_day: Option<f64>,
        #[arg(long)]
        charger_efficiency: Option<f64>,
        /// Share of internet energy attributed to the platform.
        #[arg(long)]
        internet_share: Option<f64>,
    },
    /// Run the particle-count ensemble and print its trajectory as CSV.
    Microsim(MicroArgs),
    /// Check the model identities against a dataset.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Full pipeline: fits, forecast, back-cast and breakdown, written to a directory.
    Report {
        manifest: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MicroArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e4)]
    n_system: f64,
    #[arg(long, default_value_t = 1.0)]
    n_reservoir: f64,
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    output_interval: f64,
    /// Draw particles from the reservoir, depleting it.
    #[arg(long)]
    conserve: bool,
    /// Poisson-round particle transfers with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

enum Failure {
    Core(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(category: Category) -> u8 {
    match category {
        Category::Config => 2,
        Category::Data => 3,
        Category::Model => 4,
        Category::Io => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(5),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.category()))
        }
    }
}

fn load(input: &Input) -> Result<(Dataset, PipelineConfig), Error> {
    let data = Dataset::open(&input.manifest)?;
    let config = match &input.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    Ok((data, config))
}

fn finish(report: &Report, out: Option<&Path>) -> Result<(), Error> {
    if let Some(dir) = out {
        for p in emit(report, dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn print_table(t: &Table) -> Result<(), Error> {
    print!("{}", t.to_csv()?);
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fit { input } => {
            let (data, config) = load(&input)?;
            let report = cloudtherm_core::shell::run_pipeline(&data, &config)?;
            print_fits(&report);
            finish(&report, input.out.as_deref())?;
        }
        Command::Forecast {
            input,
            horizon,
            dt,
            method,
            reservoir,
        } => {
            let (data, mut config) = load(&input)?;
            let mut fc = config.forecast.unwrap_or_default();
            fc.horizon = horizon.unwrap_or(fc.horizon);
            fc.dt = dt.unwrap_or(fc.dt);
            fc.method = method.unwrap_or(fc.method);
            fc.reservoir = reservoir.or(fc.reservoir);
            config.forecast = Some(fc);
            let report = cloudtherm_core::shell::run_pipeline(&data, &config)?;
            if let Some(f) = &report.forecast {
                print_table(&trajectory_table("forecast", f.start_year, &f.samples))?;
                if let Some(t) = f.depleted_at {
                    eprintln!("reservoir exhausted at t = {t}");
                }
            }
            finish(&report, input.out.as_deref())?;
        }
        Command::Backcast { input, start, end } => {
            let (data, mut config) = load(&input)?;
            let mut bc = config.backcast.unwrap_or_default();
            bc.start = start.or(bc.start);
            bc.end = end.or(bc.end);
            config.backcast = Some(bc);
            let report = cloudtherm_core::shell::run_pipeline(&data, &config)?;
            if let Some(t) = tables(&report).iter().find(|t| t.name == "backcast") {
                print_table(t)?;
            }
            finish(&report, input.out.as_deref())?;
        }
        Command::ClientEnergy {
            input,
            wh_per_day,
            charger_efficiency,
            internet_share,
        } => {
            let (data, mut config) = load(&input)?;
            data.require(SeriesKind::Users, "client energy")?;
            let mut cp: ClientEnergyParams = config.client.unwrap_or_default();
            cp.device_wh_per_user_day = wh_per_day.unwrap_or(cp.device_wh_per_user_day);
            cp.charger_efficiency = charger_efficiency.unwrap_or(cp.charger_efficiency);
            cp.internet_share = internet_share.unwrap_or(cp.internet_share);
            config.client = Some(cp);
            let report = cloudtherm_core::shell::run_pipeline(&data, &config)?;
            if let Some(t) = tables(&report).iter().find(|t| t.name == "energy_breakdown") {
                print_table(t)?;
            }
            finish(&report, input.out.as_deref())?;
        }
        Command::Microsim(args) => microsim(&args)?,
        Command::Validate { input } => {
            let (data, config) = load(&input)?;
            let v = validate(&data, &config)?;
            print!("{v}");
            if let Some(dir) = &input.out {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                let path = dir.join("validation.json");
                let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Serialize(e.to_string()))?;
                fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
            }
            let failed = v.failures().filter(|c| c.severity == cloudtherm_core::shell::Severity::Error).count();
            if !v.passed() {
                eprintln!("{failed} check(s) failed");
                return Err(Failure::Validation);
            }
        }
        Command::Report { manifest, config, out } => {
            let data = Dataset::open(&manifest)?;
            let mut config = match &config {
                Some(p) => PipelineConfig::load(p)?,
                None => PipelineConfig::default(),
            };
            config.forecast.get_or_insert_with(ForecastConfig::default);
            config.backcast.get_or_insert_with(BackcastConfig::default);
            let report = cloudtherm_core::shell::run_pipeline(&data, &config)?;
            for p in emit(&report, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn microsim(args: &MicroArgs) -> Result<(), Error> {
    let mut p = MicroParams::new(args.alpha, args.epsilon);
    p.dt = args.dt;
    p.output_interval = args.output_interval;
    p.conserve_matter = args.conserve;
    p.poisson_seed = args.seed;
    p.validate()?;
    let start = MicroState::new(args.n_system, args.n_reservoir, &p)?;
    let states = micro_run(&start, &p, args.horizon)?;
    let text = micro_table("microsim", &states, p.exponent).to_csv()?;
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_fits(report: &Report) {
    println!("entity: {}", report.entity);
    println!("{:<18} {:>14} {:>14} {:>10} {:>4}  flag", "fit", "slope", "intercept", "R^2", "n");
    for (name, f) in &report.fits {
        let r = &f.result;
        println!(
            "{name:<18} {:>14.6e} {:>14.6e} {:>10.6} {:>4}  {}",
            r.slope,
            r.intercept,
            r.r_squared,
            r.n,
            if f.flagged { "weak" } else { "" }
        );
    }
    let p = &report.params;
    println!(
        "alpha = {:e}  epsilon = {:e}  eta = {:.6}/yr  delta_phi0 = {}",
        p.alpha, p.epsilon, p.eta, p.delta_phi0
    );
    for flag in &report.flags {
        println!("flag: {flag}");
    }
}
