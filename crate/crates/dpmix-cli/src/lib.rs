//! Support library for the `dpmix` binary: data IO and simulation models,
//! experiment configuration files, and the seeded trend experiment that
//! tracks the posterior of the cluster count across sample sizes.

pub mod config;
pub mod data;
pub mod experiment;

pub use config::{load_config, parse_config};
pub use data::{parse_data, read_data, simulate_data, DataModel};
pub use experiment::{
    render_csv, substream_seed, trend_experiment, Engine, ExperimentConfig, TrendRow, CSV_HEADER,
};
