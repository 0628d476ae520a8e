//! Simulation and inference for stable marked point processes: symmetric
//! alpha-stable random fields observed at Poisson-scattered locations,
//! subsampling confidence intervals for their mean, and the limit constants
//! that govern normalized sums.

pub mod error;
pub mod field;
pub mod filter;
pub mod harness;
pub mod limit;
pub mod quadrature;
pub mod region;
pub mod stable;
pub mod stats;
pub mod subsampling;

pub use error::{Error, Result};
pub use field::{draw_realization, sigma_psi, simulate_marks, ModelSpec, SeriesRealization};
pub use filter::FilterSpec;
pub use harness::{emit, run_replication, run_study, CoverageTable, ExperimentConfig, Study};
pub use region::{sample_prm, PointPattern, Region};
pub use stable::{abs_moment_gaussian, c_alpha, sample_stable, StableParams};
pub use stats::{ks_distance, ks_two_sample, EmpiricalDistribution, MarkedSample};
pub use subsampling::{
    build_distribution, ci_method1, ci_method2, subsample_stat, Interval, Method, SubsampleConfig,
    SubsamplingDistribution,
};
