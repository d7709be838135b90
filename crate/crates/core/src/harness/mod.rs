//! Instance generation, experiment runs and acceptance suites.

mod acceptance;
mod adversary;
mod experiment;
mod generate;
mod sampler;

pub use acceptance::{run_acceptance, AcceptanceReport, CriterionReport, Suite};
pub use adversary::AdversarySpec;
pub use experiment::{
    execute, run_experiment, ExperimentConfig, ExperimentResult, InstanceSource, Summary, CSV_HEADER,
};
pub use generate::{generate_instance, Family, InstanceSpec};
pub use sampler::RewardSampler;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "PERSUADE_THREADS";

/// Runs `f` on a pool sized by [`THREADS_ENV`], or on the global pool when
/// it is unset or unparsable.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
