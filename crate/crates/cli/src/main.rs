use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stablemark::harness::{replication_rng, RegionConfig, Study};
use stablemark::limit::{
    covariance, gaussian_limit_variance, limit_scale_mean, limit_scale_variance, remark3_gap,
};
use stablemark::quadrature::Quadrature;
use stablemark::stats::codifference;
use stablemark::subsampling::{build_distribution, CiRecord, SubsampleConfig};
use stablemark::{c_alpha, sigma_psi, Error, ExperimentConfig, FilterSpec, MarkedSample, Method};

#[derive(Parser)]
#[command(
    name = "stablemark",
    version,
    about = "Subsampling inference for stable marked point processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one marked sample and write it as CSV.
    Simulate(Overrides),
    /// Subsampling confidence intervals for one dataset, as JSON.
    Ci {
        /// CSV with coordinate columns followed by a mark column.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a coverage study and write the table as CSV.
    Coverage(Overrides),
    /// Evaluate a limit-theory quantity, as JSON.
    Oracle {
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Lag vector for codifference and covariance, comma separated.
        #[arg(long, value_delimiter = ',')]
        lag: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    ScaleMean,
    ScaleVariance,
    GaussianVariance,
    CodifferenceGap,
    SigmaPsi,
    CAlpha,
    Codifference,
    Covariance,
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    mc_draws: Option<usize>,
    #[arg(long)]
    terms: Option<usize>,
    /// Region sides and scale: a,b,n for the box [0, n a) x [0, n b).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    region: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

impl Overrides {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let cfg = self.unchecked_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Merged configuration without study validation; the oracle checks its own domains.
    fn unchecked_config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(a) = self.alpha {
            cfg.alphas = vec![a];
        }
        if let Some(c) = self.c {
            cfg.c_values = vec![c];
        }
        if let Some(m) = self.method {
            cfg.methods = vec![m];
        }
        if let Some(r) = self.reps {
            cfg.replications = r;
        }
        if let Some(m) = self.mc_draws {
            cfg.mc_draws = m;
        }
        if let Some(t) = self.terms {
            cfg.series_terms = t;
        }
        if let Some(region) = &self.region {
            let (scale, sides) = region
                .split_last()
                .filter(|(_, sides)| !sides.is_empty())
                .ok_or_else(|| {
                    Error::Config("--region expects sides followed by a scale".into())
                })?;
            cfg.region = RegionConfig {
                sides: sides.to_vec(),
                scale: *scale,
            };
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }

    fn alpha(&self, cfg: &ExperimentConfig) -> f64 {
        self.alpha.unwrap_or(cfg.alphas[0])
    }

    fn c(&self, cfg: &ExperimentConfig) -> f64 {
        self.c.unwrap_or(cfg.c_values[0])
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Error> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn simulate(o: &Overrides) -> Result<(), Error> {
    let cfg = o.config()?;
    let alpha = o.alpha(&cfg);
    let study = Study::new(cfg.clone())?;
    let mut rng = replication_rng(cfg.master_seed, alpha, o.c(&cfg), 0);
    let sample = study.simulate(alpha, &mut rng)?;
    sample.write_csv(output(o.out.as_deref())?)
}

fn ci(data: &Path, o: &Overrides) -> Result<(), Error> {
    let cfg = o.config()?;
    let alpha = o.alpha(&cfg);
    let c = o.c(&cfg);
    let region = cfg.region.build()?;
    let full = MarkedSample::read_csv(File::open(data)?, region, cfg.intensity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let mut records = Vec::new();
    for &method in &cfg.methods {
        let sub = SubsampleConfig::for_method(method, c, cfg.mc_draws, alpha)?
            .with_tiny_sigma(cfg.tiny_sigma)?;
        let dist = build_distribution(&full, &sub, &mut rng)?;
        for &level in &cfg.nominal_levels {
            records.push(CiRecord::new(&full, &dist, level)?);
        }
    }
    write_json(&records, o.out.as_deref())
}

fn coverage(o: &Overrides) -> Result<(), Error> {
    let cfg = o.config()?;
    let table = Study::new(cfg)?.run()?;
    if table.degenerate > 0 {
        eprintln!("{} degenerate replications excluded", table.degenerate);
    }
    let text = table.to_csv()?;
    let mut out = output(o.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OracleRecord {
    quantity: String,
    estimate: f64,
    std_error: f64,
    draws: usize,
    seed: u64,
}

fn oracle(quantity: Quantity, lag: Option<&[f64]>, o: &Overrides) -> Result<(), Error> {
    let cfg = o.unchecked_config()?;
    let alpha = o.alpha(&cfg);
    let r = cfg.intensity;
    let draws = cfg.mc_draws;
    let filter = FilterSpec::builtin(&cfg.filter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let zero = vec![0.0; filter.dim()];
    let lag = lag.unwrap_or(&zero);
    let exact = |v: f64| (v, 0.0, 0);
    let (estimate, std_error, used) = match quantity {
        Quantity::ScaleMean => {
            let e = limit_scale_mean(&filter, r, alpha, draws, &mut rng)?;
            (e.estimate, e.std_error, e.draws)
        }
        Quantity::ScaleVariance => {
            let e = limit_scale_variance(&filter, r, alpha, draws, &mut rng)?;
            (e.estimate, e.std_error, e.draws)
        }
        Quantity::CodifferenceGap => {
            let g = remark3_gap(&filter, alpha, r, draws, &mut rng)?;
            (g.gap, g.moment.std_error, g.moment.draws)
        }
        Quantity::GaussianVariance => exact(gaussian_limit_variance(&filter, r)?),
        Quantity::SigmaPsi => exact(sigma_psi(&filter, alpha)?),
        Quantity::CAlpha => exact(c_alpha(alpha)?),
        Quantity::Codifference => exact(codifference(&filter, alpha, lag)?),
        Quantity::Covariance => exact(covariance(&filter, lag, &Quadrature::default())?),
    };
    let name = quantity
        .to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default();
    let record = OracleRecord {
        quantity: name,
        estimate,
        std_error,
        draws: used,
        seed: cfg.master_seed,
    };
    write_json(&record, o.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(o) => simulate(o),
        Command::Ci { data, overrides } => ci(data, overrides),
        Command::Coverage(o) => coverage(o),
        Command::Oracle {
            quantity,
            lag,
            overrides,
        } => oracle(*quantity, lag.as_deref(), overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
