mod commands;
mod config;
mod dataset;
mod output;

pub use commands::{run_evidence, run_fit, run_quantile, run_simulate, CommandOutput};
pub use config::{
    extract_overrides, parse_config_text, DataConfig, DrawFormat, Engine, EvidenceConfig, OutputConfig, RunConfig,
    SamplerSettings, SimulateConfig,
};
pub use dataset::{load_csv, Dataset};
pub use output::{
    read_draws_binary, sha256_hex, summarize, write_draws_binary, write_draws_csv, write_manifest, write_outputs,
    ParamSummary, PosteriorSummary, BINARY_MAGIC,
};
