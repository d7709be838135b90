use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adversary::AdversarySpec;
use super::generate::{generate_instance, InstanceSpec};
use crate::error::{Error, Result};
use crate::matroid_sep::OracleKind;
use crate::model::{tiny_instance, Instance, SignalingScheme};
use crate::ogd::{self, alpha_regret, regret_bound, Feedback, OgdConfig, StepRecord};

pub const CSV_HEADER: &str = "t,profile_id,utility,cum_utility,distinct_profiles,proj_ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// The one-receiver, two-state fixture.
    Tiny,
    /// A JSON instance file; relative paths resolve against the config file.
    Path(PathBuf),
    Generate {
        #[serde(flatten)]
        spec: InstanceSpec,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub adversary: AdversarySpec,
    #[serde(rename = "T")]
    pub t: usize,
    /// Defaults to `1/√T`.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Defaults to `1/T`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_oracle")]
    pub oracle: OracleKind,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_oracle() -> OracleKind {
    OracleKind::Exact
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let InstanceSource::Path(p) = &mut cfg.instance {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(1.0 / (self.t.max(1) as f64).sqrt())
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(1.0 / self.t.max(1) as f64)
    }

    pub fn check(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidInput("T must be at least 1".into()));
        }
        if !(self.eta() > 0.0 && self.eta() <= 1.0) {
            return Err(Error::InvalidInput(format!("η = {} not in (0, 1]", self.eta())));
        }
        if !(self.eps() >= 0.0 && self.eps() <= 1.0) {
            return Err(Error::InvalidInput(format!("ε = {} not in [0, 1]", self.eps())));
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<Instance> {
        match &self.instance {
            InstanceSource::Tiny => Ok(tiny_instance()),
            InstanceSource::Path(p) => Instance::load(p),
            InstanceSource::Generate { spec, seed } => generate_instance(spec, *seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(rename = "T")]
    pub t: usize,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub total_utility: f64,
    /// `None` when the instance is too large for the exact hindsight LP.
    pub best_in_hindsight: Option<f64>,
    pub regret: Option<f64>,
    pub distinct_profiles: usize,
    /// `|E|/(2η) + ηT/2 + εT/(2η)`, which is `√T(1 + |E|/2)` at the defaults.
    pub bound: f64,
    pub passed: Option<bool>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub records: Vec<StepRecord>,
    pub final_scheme: SignalingScheme,
    pub summary: Summary,
}

/// Runs the learner in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.check()?;
    let inst = cfg.instance()?;
    let seq = cfg.adversary.sequence(&inst, cfg.t, cfg.seed)?;
    let feedback: Vec<Feedback> = seq.into_iter().map(Feedback).collect();
    let ocfg = OgdConfig { eta: cfg.eta(), eps: cfg.eps(), oracle: cfg.oracle, projection: Default::default() };
    let (state, records) = ogd::run(&inst, &feedback, ocfg)?;

    let alpha = cfg.oracle.alpha();
    let total_utility = records.iter().map(|r| r.utility).sum::<f64>();
    let distinct = state.observed().len();
    let bound = regret_bound(distinct, cfg.t, cfg.eta(), cfg.eps());
    let regret = match alpha_regret(&inst, &records, alpha) {
        Ok(r) => Some(r),
        Err(Error::OracleScale { .. }) => None,
        Err(e) => return Err(e),
    };
    let summary = Summary {
        t: cfg.t,
        eta: cfg.eta(),
        eps: cfg.eps(),
        alpha,
        total_utility,
        best_in_hindsight: regret.map(|r| (r + total_utility) / alpha),
        regret,
        distinct_profiles: distinct,
        bound,
        passed: regret.map(|r| r <= bound + 1e-6),
        config: cfg.clone(),
    };
    Ok(ExperimentResult { final_scheme: state.scheme().clone(), records, summary })
}

pub fn csv(records: &[StepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let mut cum = 0.0;
    for r in records {
        cum += r.utility;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            r.t, r.profile_id, r.utility, cum, r.distinct_profiles, r.proj_ms
        );
    }
    out
}

/// Runs and writes `run.csv`, `summary.json` and `scheme_final.json` into
/// `cfg.out_dir`. On failure an `error.json` is left there instead.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    fs::create_dir_all(&cfg.out_dir)?;
    let result = execute(cfg);
    match &result {
        Ok(res) => {
            fs::write(cfg.out_dir.join("run.csv"), csv(&res.records))?;
            fs::write(cfg.out_dir.join("summary.json"), serde_json::to_string_pretty(&res.summary)?)?;
            fs::write(cfg.out_dir.join("scheme_final.json"), serde_json::to_string_pretty(&res.final_scheme)?)?;
        }
        Err(e) => {
            let diag = serde_json::json!({ "error": e.to_string(), "config": cfg });
            fs::write(cfg.out_dir.join("error.json"), serde_json::to_string_pretty(&diag)?)?;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Family;
    use crate::model::TypeProfile;

    fn tiny_cfg(t: usize, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            instance: InstanceSource::Tiny,
            adversary: AdversarySpec::Constant { profile: TypeProfile(vec![0]) },
            t,
            eta: None,
            eps: None,
            oracle: OracleKind::Exact,
            out_dir: dir.to_path_buf(),
            seed: 0,
        }
    }

    #[test]
    fn single_round_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&tiny_cfg(1, dir.path())).unwrap();
        let csv = fs::read_to_string(dir.path().join("run.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("scheme_final.json").exists());
    }

    #[test]
    fn tiny_constant_regret_within_fifteen() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { eta: Some(0.1), eps: Some(0.01), ..tiny_cfg(100, dir.path()) };
        let res = execute(&cfg).unwrap();
        assert!(res.summary.regret.unwrap() <= 15.0);
        assert!((res.summary.bound - 15.0).abs() < 1e-12);
        assert_eq!(res.summary.passed, Some(true));
    }

    #[test]
    fn cycle_over_three_profiles() {
        let dir = tempfile::tempdir().unwrap();
        let spec = InstanceSpec { family: Family::Coverage, n: 2, m: 2, d: 2 };
        let profiles = vec![TypeProfile(vec![0, 0]), TypeProfile(vec![0, 1]), TypeProfile(vec![1, 1])];
        let cfg = ExperimentConfig {
            instance: InstanceSource::Generate { spec, seed: 4 },
            adversary: AdversarySpec::Cycle { profiles },
            ..tiny_cfg(12, dir.path())
        };
        let res = run_experiment(&cfg).unwrap();
        let distinct: Vec<usize> = res.records.iter().map(|r| r.distinct_profiles).collect();
        assert!(distinct.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*distinct.last().unwrap(), 3);
        let text = fs::read_to_string(dir.path().join("run.csv")).unwrap();
        let mut cum = 0.0;
        for line in text.lines().skip(1) {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            cum += cols[2];
            assert!((cols[3] - cum).abs() < 1e-9);
        }
    }

    #[test]
    fn config_round_trips_and_rejects_zero_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(0, dir.path());
        assert!(execute(&cfg).is_err());
        let json = r#"{"instance":"tiny","adversary":{"kind":"constant","profile":[0]},"T":5,"out_dir":"o"}"#;
        let path = dir.path().join("c.json");
        fs::write(&path, json).unwrap();
        let loaded = ExperimentConfig::load(&path).unwrap();
        assert_eq!(loaded.out_dir, dir.path().join("o"));
        assert_eq!(loaded.eps(), 0.2);
    }
}
