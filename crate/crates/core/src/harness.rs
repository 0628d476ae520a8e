//! Seeded, parallel coverage studies of the subsampling confidence intervals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{simulate_marks, ModelSpec};
use crate::filter::FilterSpec;
use crate::region::{sample_prm, Region};
use crate::stats::MarkedSample;
use crate::subsampling::{
    block_summaries, confidence_interval, draw_anchors, AnchorScheme, Method, SubsampleConfig,
    SubsamplingDistribution, DEFAULT_TINY_SIGMA,
};

pub const CSV_HEADER: &str = "alpha,c,method,level,coverage,se,reps,mean_width,mean_count";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub sides: Vec<f64>,
    pub scale: f64,
}

impl RegionConfig {
    pub fn square() -> Self {
        Self {
            sides: vec![1.0, 1.0],
            scale: 10.0,
        }
    }

    pub fn rectangle() -> Self {
        Self {
            sides: vec![1.0, 4.0],
            scale: 5.0,
        }
    }

    pub fn build(&self) -> Result<Region> {
        Region::new(self.sides.clone(), self.scale).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub region: RegionConfig,
    pub alphas: Vec<f64>,
    pub c_values: Vec<f64>,
    pub methods: Vec<Method>,
    pub nominal_levels: Vec<f64>,
    pub replications: usize,
    pub mc_draws: usize,
    pub series_terms: usize,
    pub intensity: f64,
    pub master_seed: u64,
    pub true_mu: f64,
    pub workers: usize,
    /// Built-in filter name.
    pub filter: String,
    pub tiny_sigma: f64,
    /// Series centering vector; the region midpoint when absent.
    pub center: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            region: RegionConfig::square(),
            alphas: vec![1.5],
            c_values: vec![0.2],
            methods: vec![Method::Method1, Method::Method2],
            nominal_levels: vec![0.90, 0.95, 0.99],
            replications: 1000,
            mc_draws: 10_000,
            series_terms: 100,
            intensity: 1.0,
            master_seed: 0,
            true_mu: 0.0,
            workers: std::thread::available_parallelism().map_or(1, usize::from),
            filter: "gauss2d".into(),
            tiny_sigma: DEFAULT_TINY_SIGMA,
            center: None,
        }
    }
}

impl ExperimentConfig {
    /// Full grid at the published scale: 1000 replications, 10,000 anchors.
    pub fn full_scale() -> Self {
        Self {
            alphas: (1..=9).map(|k| 1.0 + 0.1 * k as f64).collect(),
            c_values: vec![0.1, 0.2, 0.3, 0.4],
            ..Self::default()
        }
    }

    /// Reduced budget: 500 replications, 2000 anchors.
    pub fn desk_scale() -> Self {
        Self {
            replications: 500,
            mc_draws: 2000,
            ..Self::full_scale()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        self.region.build()?;
        if self.alphas.is_empty() || self.c_values.is_empty() || self.methods.is_empty() {
            return fail("alphas, c_values and methods must be nonempty".into());
        }
        if self.nominal_levels.is_empty() {
            return fail("nominal_levels must be nonempty".into());
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 2.0) {
                return fail(format!("alpha {a} not in (0, 2)"));
            }
            if self.methods.contains(&Method::Method1) && a <= 1.0 {
                return fail(format!("method1 requires alpha > 1, got {a}"));
            }
        }
        for &c in &self.c_values {
            if !(c > 0.0 && c < 1.0) {
                return fail(format!("block ratio {c} not in (0, 1)"));
            }
        }
        for &l in &self.nominal_levels {
            if !(l > 0.0 && l < 1.0) {
                return fail(format!("nominal level {l} not in (0, 1)"));
            }
        }
        if self.replications == 0 || self.mc_draws == 0 || self.series_terms == 0 {
            return fail("replications, mc_draws and series_terms must be >= 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be >= 1".into());
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return fail(format!("intensity {} must be positive", self.intensity));
        }
        if !self.true_mu.is_finite() {
            return fail("true_mu must be finite".into());
        }
        if !(self.tiny_sigma > 0.0) {
            return fail("tiny_sigma must be positive".into());
        }
        let filter = FilterSpec::builtin(&self.filter)?;
        if filter.dim() != self.region.sides.len() {
            return fail(format!(
                "filter {} is {}-dimensional but the region is {}-dimensional",
                self.filter,
                filter.dim(),
                self.region.sides.len()
            ));
        }
        if let Some(center) = &self.center {
            if center.len() != filter.dim() {
                return fail("center dimension does not match the region".into());
            }
        }
        Ok(())
    }
}

/// One interval outcome inside a replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiOutcome {
    pub method: Method,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub alpha: f64,
    pub c: f64,
    pub rep: usize,
    /// No points fell in the region; excluded from coverage.
    pub degenerate: bool,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub outcomes: Vec<CiOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub alpha: f64,
    pub c: f64,
    pub method: Method,
    pub nominal_level: f64,
    pub empirical_coverage: f64,
    pub std_error: f64,
    pub replications: usize,
    pub mean_interval_width: f64,
    pub mean_observed_count: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageTable {
    pub rows: Vec<CoverageRow>,
    /// Replications dropped because the region held no points.
    pub degenerate: usize,
}

impl CoverageTable {
    pub fn row(&self, alpha: f64, c: f64, method: Method, level: f64) -> Option<&CoverageRow> {
        const EPS: f64 = 1e-9;
        self.rows.iter().find(|r| {
            (r.alpha - alpha).abs() < EPS
                && (r.c - c).abs() < EPS
                && r.method == method
                && (r.nominal_level - level).abs() < EPS
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::Config("coverage table is empty".into()));
        }
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{:.6},{:.6},{},{:.6},{:.6},{:.6},{},{:.6},{:.6}",
                r.alpha,
                r.c,
                r.method,
                r.nominal_level,
                r.empirical_coverage,
                r.std_error,
                r.replications,
                r.mean_interval_width,
                r.mean_observed_count
            )
            .expect("writing to a String");
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => return Err(Error::Config(format!("unexpected header {other:?}"))),
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
        };
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Config(format!("expected 9 fields in {line:?}")));
            }
            rows.push(CoverageRow {
                alpha: num(f[0])?,
                c: num(f[1])?,
                method: f[2].parse()?,
                nominal_level: num(f[3])?,
                empirical_coverage: num(f[4])?,
                std_error: num(f[5])?,
                replications: f[6]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad count {:?}: {e}", f[6])))?,
                mean_interval_width: num(f[7])?,
                mean_observed_count: num(f[8])?,
            });
        }
        Ok(Self {
            rows,
            degenerate: 0,
        })
    }
}

/// Writes the table as CSV.
pub fn emit(table: &CoverageTable, path: &Path) -> Result<()> {
    let text = table.to_csv()?;
    fs::write(path, text)?;
    Ok(())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Counter-based stream for one replication: the key mixes the master seed
/// with the cell, the stream id is the replication index.
pub fn replication_rng(master_seed: u64, alpha: f64, c: f64, rep: usize) -> ChaCha8Rng {
    let key = splitmix64(master_seed ^ splitmix64(alpha.to_bits() ^ splitmix64(c.to_bits())));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(rep as u64);
    rng
}

/// A validated configuration with its filter and region resolved.
#[derive(Debug, Clone)]
pub struct Study {
    config: ExperimentConfig,
    filter: FilterSpec,
    region: Region,
    center: Vec<f64>,
}

impl Study {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let filter = FilterSpec::builtin(&config.filter)?;
        let region = config.region.build()?;
        let center = config.center.clone().unwrap_or_else(|| region.midpoint());
        Ok(Self {
            config,
            filter,
            region,
            center,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn model(&self, alpha: f64) -> Result<ModelSpec> {
        ModelSpec::new(
            self.filter.clone(),
            alpha,
            self.config.true_mu,
            self.center.clone(),
        )
    }

    /// Simulates one marked sample from the replication stream.
    pub fn simulate(&self, alpha: f64, rng: &mut ChaCha8Rng) -> Result<MarkedSample> {
        let pattern = sample_prm(&self.region, self.config.intensity, rng)?;
        simulate_marks(&self.model(alpha)?, &pattern, self.config.series_terms, rng)
    }

    /// Subsampling distributions of every configured method, sharing one set of anchors.
    pub fn distributions(
        &self,
        full: &MarkedSample,
        alpha: f64,
        c: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<SubsamplingDistribution>> {
        let scheme = AnchorScheme::MonteCarlo {
            draws: self.config.mc_draws,
        };
        let anchors = draw_anchors(&self.region, c, scheme, rng)?;
        let summaries = block_summaries(full, c, &anchors)?;
        let full_mean = full.mean()?;
        self.config
            .methods
            .iter()
            .map(|&method| {
                let cfg = SubsampleConfig::for_method(method, c, self.config.mc_draws, alpha)?
                    .with_tiny_sigma(self.config.tiny_sigma)?;
                SubsamplingDistribution::from_summaries(&summaries, full_mean, &cfg)
            })
            .collect()
    }

    pub fn run_replication(&self, alpha: f64, c: f64, rep: usize) -> Result<ReplicationRecord> {
        let mut rng = replication_rng(self.config.master_seed, alpha, c, rep);
        let full = self.simulate(alpha, &mut rng)?;
        if full.is_empty() {
            return Ok(ReplicationRecord {
                alpha,
                c,
                rep,
                degenerate: true,
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
                outcomes: Vec::new(),
            });
        }
        let dists = self.distributions(&full, alpha, c, &mut rng)?;
        let mut outcomes = Vec::with_capacity(dists.len() * self.config.nominal_levels.len());
        for dist in &dists {
            for &level in &self.config.nominal_levels {
                let ci = confidence_interval(&full, dist, 1.0 - level)?;
                outcomes.push(CiOutcome {
                    method: dist.config().method,
                    level,
                    lower: ci.lower,
                    upper: ci.upper,
                    hit: ci.contains(self.config.true_mu),
                });
            }
        }
        Ok(ReplicationRecord {
            alpha,
            c,
            rep,
            degenerate: false,
            count: full.len(),
            mean: full.mean()?,
            std: full.std()?,
            outcomes,
        })
    }

    /// Runs every replication of every cell on a pool of `workers` threads.
    pub fn run(&self) -> Result<CoverageTable> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let cells: Vec<(f64, f64)> = self
            .config
            .alphas
            .iter()
            .flat_map(|&a| self.config.c_values.iter().map(move |&c| (a, c)))
            .collect();
        let reps = self.config.replications;
        let records: Vec<ReplicationRecord> = pool.install(|| {
            (0..cells.len() * reps)
                .into_par_iter()
                .map(|k| {
                    let (alpha, c) = cells[k / reps];
                    self.run_replication(alpha, c, k % reps)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut table = CoverageTable::default();
        for (cell, chunk) in cells.iter().zip(records.chunks(reps)) {
            let valid: Vec<&ReplicationRecord> = chunk.iter().filter(|r| !r.degenerate).collect();
            table.degenerate += chunk.len() - valid.len();
            let n = valid.len();
            let mean_count = if n == 0 {
                f64::NAN
            } else {
                valid.iter().map(|r| r.count as f64).sum::<f64>() / n as f64
            };
            for &method in &self.config.methods {
                for &level in &self.config.nominal_levels {
                    let picked: Vec<&CiOutcome> = valid
                        .iter()
                        .filter_map(|r| {
                            r.outcomes
                                .iter()
                                .find(|o| o.method == method && o.level == level)
                        })
                        .collect();
                    let hits = picked.iter().filter(|o| o.hit).count();
                    let (coverage, se, width) = if n == 0 {
                        (f64::NAN, f64::NAN, f64::NAN)
                    } else {
                        let cov = hits as f64 / n as f64;
                        let width =
                            picked.iter().map(|o| o.upper - o.lower).sum::<f64>() / n as f64;
                        (cov, (cov * (1.0 - cov) / n as f64).sqrt(), width)
                    };
                    table.rows.push(CoverageRow {
                        alpha: cell.0,
                        c: cell.1,
                        method,
                        nominal_level: level,
                        empirical_coverage: coverage,
                        std_error: se,
                        replications: n,
                        mean_interval_width: width,
                        mean_observed_count: mean_count,
                    });
                }
            }
        }
        Ok(table)
    }
}

pub fn run_replication(
    config: &ExperimentConfig,
    alpha: f64,
    c: f64,
    rep: usize,
) -> Result<ReplicationRecord> {
    Study::new(config.clone())?.run_replication(alpha, c, rep)
}

pub fn run_study(config: &ExperimentConfig) -> Result<CoverageTable> {
    Study::new(config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            alphas: vec![1.3, 1.7],
            c_values: vec![0.2, 0.4],
            replications: 6,
            mc_draws: 200,
            workers: 2,
            master_seed: 99,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn validation_errors() {
        let bad = [
            ExperimentConfig {
                alphas: vec![0.9],
                ..small()
            },
            ExperimentConfig {
                c_values: vec![1.0],
                ..small()
            },
            ExperimentConfig {
                nominal_levels: vec![1.0],
                ..small()
            },
            ExperimentConfig {
                replications: 0,
                ..small()
            },
            ExperimentConfig {
                series_terms: 0,
                ..small()
            },
            ExperimentConfig {
                workers: 0,
                ..small()
            },
            ExperimentConfig {
                filter: "gauss1d".into(),
                ..small()
            },
            ExperimentConfig {
                methods: vec![],
                ..small()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
        let ok = ExperimentConfig {
            alphas: vec![0.9],
            methods: vec![Method::Method2],
            ..small()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn json_defaults_fill_missing_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"alphas": [1.2], "replications": 3}"#).unwrap();
        assert_eq!(cfg.alphas, vec![1.2]);
        assert_eq!(cfg.replications, 3);
        assert_eq!(cfg.series_terms, 100);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn presets() {
        let desk = ExperimentConfig::desk_scale();
        assert_eq!((desk.replications, desk.mc_draws), (500, 2000));
        assert_eq!(desk.alphas.len(), 9);
        let full = ExperimentConfig::full_scale();
        assert_eq!(
            (full.replications, full.mc_draws, full.series_terms),
            (1000, 10_000, 100)
        );
        assert_eq!(
            RegionConfig::rectangle().build().unwrap().extent(),
            vec![5.0, 20.0]
        );
    }

    #[test]
    fn replication_is_deterministic() {
        let study = Study::new(small()).unwrap();
        assert_eq!(
            study.run_replication(1.3, 0.2, 4).unwrap(),
            study.run_replication(1.3, 0.2, 4).unwrap()
        );
    }

    #[test]
    fn location_shift_moves_everything_by_the_shift() {
        let base = Study::new(small()).unwrap();
        let shifted = Study::new(ExperimentConfig {
            true_mu: 5.0,
            ..small()
        })
        .unwrap();
        for rep in 0..4 {
            let a = base.run_replication(1.7, 0.2, rep).unwrap();
            let b = shifted.run_replication(1.7, 0.2, rep).unwrap();
            assert_eq!(a.count, b.count);
            assert!((b.mean - a.mean - 5.0).abs() < 1e-9);
            for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
                assert_eq!(x.hit, y.hit);
                assert!((y.lower - x.lower - 5.0).abs() < 1e-6 * (1.0 + x.lower.abs()));
            }
        }
    }

    #[test]
    fn single_replication_coverage_is_binary() {
        let table = run_study(&ExperimentConfig {
            replications: 1,
            ..small()
        })
        .unwrap();
        for row in &table.rows {
            assert!(row.empirical_coverage == 0.0 || row.empirical_coverage == 1.0);
            assert_eq!(row.std_error, 0.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_the_table() {
        let one = run_study(&ExperimentConfig {
            workers: 1,
            ..small()
        })
        .unwrap();
        for workers in [4, 8] {
            assert_eq!(
                one,
                run_study(&ExperimentConfig { workers, ..small() }).unwrap()
            );
        }
    }

    #[test]
    fn higher_levels_cover_more() {
        let table = run_study(&small()).unwrap();
        for chunk in table.rows.chunks(3) {
            assert!(chunk[0].empirical_coverage <= chunk[1].empirical_coverage);
            assert!(chunk[1].empirical_coverage <= chunk[2].empirical_coverage);
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let table = CoverageTable {
            rows: vec![CoverageRow {
                alpha: 1.5,
                c: 0.2,
                method: Method::Method2,
                nominal_level: 0.9,
                empirical_coverage: 0.954,
                std_error: 0.009366,
                replications: 500,
                mean_interval_width: 1.234567,
                mean_observed_count: 100.25,
            }],
            degenerate: 0,
        };
        let text = table.to_csv().unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(CoverageTable::from_csv(&text).unwrap(), table);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit(&table, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn empty_table_cannot_be_emitted() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit(&CoverageTable::default(), &dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let table = run_study(&ExperimentConfig {
            replications: 1,
            ..small()
        })
        .unwrap();
        let err = emit(&table, Path::new("/nonexistent-dir/forbidden/out.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
