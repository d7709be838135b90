use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::AdversarySpec;
use super::experiment::{execute, ExperimentConfig, InstanceSource};
use super::generate::{generate_instance, Family, InstanceSpec};
use super::sampler::RewardSampler;
use super::with_pool;
use crate::convex_solver::{solve_lp, solve_qp, LinearProgram, LpOutcome, QuadraticProgram};
use crate::ellipsoid::{feasibility_search, polytope_oracle, EllipsoidConfig};
use crate::error::{Error, Result};
use crate::matroid_sep::{
    check_submodular_composite, exact_sep_oracle, f_part, greedy_sep_oracle, linear_part, zero_weights, OracleKind,
    SepQuery,
};
use crate::model::{
    all_signal_profiles, all_type_profiles, min_residual, sender_utility, Instance, TypeProfile,
};
use crate::persuasion_opt::{approx_projection, exact_offline_solve, exact_projection, offline_solve, RewardVector};

const SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Projection,
    Offline,
    Regret,
    Oracle,
    Submodularity,
    Solvers,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] =
        ["projection", "offline", "regret", "oracle", "submodularity", "solvers", "all"];

    fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Projection => &[1],
            Suite::Offline => &[2],
            Suite::Regret => &[3, 7],
            Suite::Oracle => &[4],
            Suite::Submodularity => &[5],
            Suite::Solvers => &[6],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "projection" => Suite::Projection,
            "offline" => Suite::Offline,
            "regret" => Suite::Regret,
            "oracle" => Suite::Oracle,
            "submodularity" => Suite::Submodularity,
            "solvers" => Suite::Solvers,
            "all" => Suite::All,
            _ => return Err(Error::InvalidInput(format!("unknown suite {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub violations: usize,
    pub seconds: f64,
    /// First violation, or a short summary when none.
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {:<14} {} checks={} violations={} time={:.1}s {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.checks,
            self.violations,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub suite: Suite,
    pub seed: u64,
    pub criteria: Vec<CriterionReport>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

/// Counts checks and keeps the first failure message.
struct Tally {
    checks: usize,
    violations: usize,
    first: Option<String>,
    worst: f64,
}

impl Default for Tally {
    fn default() -> Self {
        Tally { checks: 0, violations: 0, first: None, worst: f64::NEG_INFINITY }
    }
}

impl Tally {
    /// Records `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        let excess = lhs - rhs;
        self.worst = self.worst.max(excess);
        if !(excess <= 0.0) {
            self.fail(format!("{}: {lhs} > {rhs}", what()));
        }
    }

    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.first.is_none() {
            self.first = Some(msg);
        }
    }

    fn error(&mut self, e: Error, what: impl FnOnce() -> String) {
        self.checks += 1;
        self.fail(format!("{}: {e}", what()));
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        if self.first.is_none() {
            self.first = other.first;
        }
        self
    }

    fn report(self, id: u8, name: &str, start: Instant, note: String) -> CriterionReport {
        let detail = match self.first {
            Some(f) => f,
            None if self.worst.is_finite() => format!("{note}; max lhs−rhs {:.3e}", self.worst),
            None => note,
        };
        CriterionReport {
            id,
            name: name.into(),
            passed: self.violations == 0 && self.checks > 0,
            checks: self.checks,
            violations: self.violations,
            seconds: start.elapsed().as_secs_f64(),
            detail,
        }
    }
}

fn rng_for(seed: u64, criterion: u64, item: u64) -> ChaCha8Rng {
    let mixed = seed ^ criterion.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ item.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

fn random_support(inst: &Instance, max: usize, rng: &mut ChaCha8Rng) -> Vec<TypeProfile> {
    let mut all = all_type_profiles(inst);
    all.shuffle(rng);
    let size = rng.gen_range(1..=max.min(all.len()));
    all.truncate(size);
    all
}

fn small_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_d: usize) -> Result<Instance> {
    let family = [Family::Coverage, Family::ConcaveCardinality, Family::Table][rng.gen_range(0..3)];
    let spec =
        InstanceSpec { family, n: rng.gen_range(1..=max_n), m: rng.gen_range(1..=max_m), d: rng.gen_range(1..=max_d) };
    generate_instance(&spec, rng.gen())
}

/// `‖x′ − x‖² ≤ ‖x′ − y‖² + ε`, all on the same support.
fn projection_inequality(t: &mut Tally, xp: &RewardVector, x: &RewardVector, y: &RewardVector, eps: f64, what: &str) {
    t.le(xp.dist_sq(x), xp.dist_sq(y) + eps + SLACK, || what.to_string());
}

fn criterion_1(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let eps = 1e-3;
    let tally = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let mut rng = rng_for(seed, 1, i);
            let setup = small_instance(&mut rng, 3, 2, 2).and_then(|inst| {
                let sampler = RewardSampler::new(&inst, 20, &mut rng)?;
                Ok((inst, sampler))
            });
            let (inst, sampler) = match setup {
                Ok(s) => s,
                Err(e) => {
                    t.error(e, || format!("instance {i}"));
                    return t;
                }
            };
            let k = random_support(&inst, 4, &mut rng);
            for j in 0..10 {
                let y = RewardVector::new(k.clone(), k.iter().map(|_| rng.gen_range(0.0..=2.0)).collect()).unwrap();
                let tag = |s: &str| format!("instance {i} target {j}: {s}");
                let out = match approx_projection(&inst, &k, &y, eps, OracleKind::Exact) {
                    Ok(o) => o,
                    Err(e) => {
                        t.error(e, || tag("approx_projection"));
                        continue;
                    }
                };
                let x = &out.x;
                t.le(-min_residual(&inst, &out.scheme), SLACK, || tag("persuasiveness"));
                for (kp, &v) in k.iter().zip(x.values()) {
                    t.le(v, sender_utility(&inst, &out.scheme, kp) + SLACK, || tag("x ≤ f(φ, k)"));
                }
                match exact_projection(&inst, &k, &y) {
                    Ok(star) => {
                        projection_inequality(&mut t, &star.x, x, &y, eps, &tag("x′ = exact projection"));
                        t.le(x.dist_sq(&star.x), eps, || tag("‖x − x*‖² ≤ ε"));
                    }
                    Err(e) => t.error(e, || tag("exact_projection")),
                }
                let g: Vec<f64> = y.values().iter().zip(x.values()).map(|(a, b)| a - b).collect();
                match RewardSampler::maximizer(&inst, &k, &g, 1.0) {
                    Ok(m) => projection_inequality(&mut t, &m, x, &y, eps, &tag("x′ = worst vertex")),
                    Err(e) => t.error(e, || tag("maximizer")),
                }
                for _ in 0..1000 {
                    let xp = sampler.sample(&k, 1.0, &mut rng);
                    projection_inequality(&mut t, &xp, x, &y, eps, &tag("sampled x′"));
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    tally.report(1, "projection", start, "50 instances × 10 targets".into())
}

fn criterion_2(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let eps = 0.01;
    let tally = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let mut rng = rng_for(seed, 2, i);
            let inst = match small_instance(&mut rng, 3, 2, 3) {
                Ok(inst) => inst,
                Err(e) => {
                    t.error(e, || format!("instance {i}"));
                    return t;
                }
            };
            let k = random_support(&inst, 4, &mut rng);
            let lambda: Vec<f64> = k.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let opt = exact_offline_solve(&inst, &k, &lambda);
            let apx = offline_solve(&inst, &k, &lambda, eps, OracleKind::Exact);
            match (opt, apx) {
                (Ok(opt), Ok(apx)) => {
                    t.le(-min_residual(&inst, &apx.scheme), SLACK, || format!("instance {i}: persuasiveness"));
                    t.le(opt.value - eps, apx.value, || format!("instance {i}: Apx ≥ OPT − ε"));
                }
                (Err(e), _) | (_, Err(e)) => t.error(e, || format!("instance {i}")),
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    tally.report(2, "offline", start, "50 instances".into())
}

struct RegretRun {
    label: String,
    cfg: ExperimentConfig,
}

fn regret_runs(seed: u64) -> Vec<RegretRun> {
    let mut runs = Vec::new();
    for t in [100usize, 400] {
        runs.push(RegretRun {
            label: format!("tiny constant T={t}"),
            cfg: ExperimentConfig {
                instance: InstanceSource::Tiny,
                adversary: AdversarySpec::Constant { profile: TypeProfile(vec![0]) },
                t,
                eta: None,
                eps: None,
                oracle: OracleKind::Exact,
                out_dir: Default::default(),
                seed,
            },
        });
    }
    for c in 0..5u64 {
        let mut rng = rng_for(seed, 3, c);
        let spec = InstanceSpec { family: Family::Coverage, n: 2, m: 2, d: 2 };
        let inst_seed: u64 = rng.gen();
        let mut profiles = all_type_profiles(&generate_instance(&spec, inst_seed).expect("valid sizes"));
        profiles.shuffle(&mut rng);
        let adversaries = [
            ("constant", AdversarySpec::Constant { profile: profiles[0].clone() }),
            ("3-cycle", AdversarySpec::Cycle { profiles: profiles[..3].to_vec() }),
        ];
        for (name, adv) in adversaries {
            for t in [100usize, 400] {
                runs.push(RegretRun {
                    label: format!("coverage#{c} {name} T={t}"),
                    cfg: ExperimentConfig {
                        instance: InstanceSource::Generate { spec, seed: inst_seed },
                        adversary: adv.clone(),
                        t,
                        eta: None,
                        eps: None,
                        oracle: OracleKind::Exact,
                        out_dir: Default::default(),
                        seed,
                    },
                });
            }
        }
    }
    runs
}

/// Regret bound and the per-step projection inequality share the runs.
fn criteria_3_and_7(seed: u64) -> (CriterionReport, CriterionReport) {
    let start = Instant::now();
    let runs = regret_runs(seed);
    let results: Vec<(Tally, Tally, f64)> = runs
        .par_iter()
        .enumerate()
        .map(|(i, run)| {
            let mut regret = Tally::default();
            let mut tele = Tally::default();
            let run_start = Instant::now();
            let res = match execute(&run.cfg) {
                Ok(r) => r,
                Err(e) => {
                    regret.error(e, || run.label.clone());
                    return (regret, tele, 0.0);
                }
            };
            let run_secs = run_start.elapsed().as_secs_f64();
            match res.summary.regret {
                Some(r) => regret.le(r, res.summary.bound + SLACK, || format!("{}: regret ≤ bound", run.label)),
                None => regret.error(Error::InvalidInput("hindsight optimum unavailable".into()), || run.label.clone()),
            }

            let inst = run.cfg.instance().expect("instance built once already");
            let mut rng = rng_for(seed, 7, i as u64);
            let sampler = match RewardSampler::new(&inst, 20, &mut rng) {
                Ok(s) => s,
                Err(e) => {
                    tele.error(e, || run.label.clone());
                    return (regret, tele, run_secs);
                }
            };
            let eps = run.cfg.eps();
            for rec in &res.records {
                let support = rec.y.support();
                let what = format!("{} t={}", run.label, rec.t);
                for _ in 0..100 {
                    let xp = sampler.sample(support, 1.0, &mut rng);
                    projection_inequality(&mut tele, &xp, &rec.x, &rec.y, eps, &what);
                }
                let g: Vec<f64> = rec.y.values().iter().zip(rec.x.values()).map(|(a, b)| a - b).collect();
                match RewardSampler::maximizer(&inst, support, &g, 1.0) {
                    Ok(m) => projection_inequality(&mut tele, &m, &rec.x, &rec.y, eps, &format!("{what} worst vertex")),
                    Err(e) => tele.error(e, || what.clone()),
                }
            }
            (regret, tele, run_secs)
        })
        .collect();
    let learner_secs: f64 = results.iter().map(|r| r.2).sum();
    let (regret, tele) = results
        .into_iter()
        .fold((Tally::default(), Tally::default()), |(a, b), (r, t, _)| (a.merge(r), b.merge(t)));
    let r3 = regret.report(3, "regret", start, format!("{} runs, learner {:.1}s", runs.len(), learner_secs));
    let r7 = tele.report(7, "telescoping", start, format!("{} runs", runs.len()));
    (r3, r7)
}

fn criterion_4(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let alpha = OracleKind::Greedy.alpha();
    let tally = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let mut rng = rng_for(seed, 4, i);
            let spec =
                InstanceSpec { family: Family::Coverage, n: rng.gen_range(1..=6), m: 2, d: rng.gen_range(1..=3) };
            let inst = match generate_instance(&spec, rng.gen()) {
                Ok(inst) => inst,
                Err(e) => {
                    t.error(e, || format!("instance {i}"));
                    return t;
                }
            };
            let n = inst.num_receivers() as f64;
            let all = all_signal_profiles(&inst);
            for state in 0..inst.num_states() {
                let k = random_support(&inst, 4, &mut rng);
                let nk = k.len() as f64;
                let projection_range = rng.gen_bool(0.5);
                let (lambda, lo, hi) = if projection_range {
                    let mu = inst.prior()[state];
                    let l: Vec<f64> = k.iter().map(|_| mu * rng.gen_range(0.0..nk + 10.0)).collect();
                    (l, -4.0 * nk * n - 10.0, 4.0 * nk)
                } else {
                    let raw: Vec<f64> = k.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
                    let s: f64 = raw.iter().sum::<f64>().max(1.0);
                    (raw.iter().map(|v| v / s).collect(), -n, 1.0)
                };
                let weights: Vec<Vec<f64>> = (0..inst.num_receivers())
                    .map(|r| {
                        (0..1usize << inst.num_types(r))
                            .map(|s| if s == 0 { 0.0 } else { rng.gen_range(lo..=hi) })
                            .collect()
                    })
                    .collect();
                let q = SepQuery { state, profiles: &k, lambda: &lambda, weights: &weights, eps: 0.0 };
                let tag = |s: &str| format!("instance {i} state {state}: {s}");
                let best = all
                    .iter()
                    .map(|s| (f_part(&inst, &q, s) + linear_part(&q, s), s))
                    .fold(None::<(f64, &_)>, |acc, (v, s)| match acc {
                        Some((b, _)) if b >= v => acc,
                        _ => Some((v, s)),
                    })
                    .expect("at least one profile");
                match exact_sep_oracle(&inst, &q) {
                    Ok(r) => {
                        t.le((r.value - best.0).abs(), 0.0, || tag("exact matches brute force"));
                    }
                    Err(e) => t.error(e, || tag("exact oracle")),
                }
                match greedy_sep_oracle(&inst, &q) {
                    Ok(r) => {
                        let target = alpha * f_part(&inst, &q, best.1) + linear_part(&q, best.1) - 1e-9;
                        t.le(target, r.value, || tag("greedy ≥ (1−1/e)·f(OPT) + ℓ(OPT)"));
                    }
                    Err(e) => t.error(e, || tag("greedy oracle")),
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    tally.report(4, "oracle", start, "100 coverage instances".into())
}

fn criterion_5(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let per_instance = 500;
    let tally = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let mut rng = rng_for(seed, 5, i);
            let family = if i % 2 == 0 { Family::Coverage } else { Family::ConcaveCardinality };
            let spec = InstanceSpec { family, n: rng.gen_range(1..=5), m: rng.gen_range(1..=3), d: rng.gen_range(1..=2) };
            let inst = match generate_instance(&spec, rng.gen()) {
                Ok(inst) => inst,
                Err(e) => {
                    t.error(e, || format!("instance {i}"));
                    return t;
                }
            };
            let k = random_support(&inst, 6, &mut rng);
            let lambda: Vec<f64> = k.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let weights = zero_weights(&inst);
            let state = rng.gen_range(0..inst.num_states());
            let q = SepQuery { state, profiles: &k, lambda: &lambda, weights: &weights, eps: 0.0 };
            t.checks += per_instance;
            if let Err(c) = check_submodular_composite(&inst, &q, per_instance, rng.gen()) {
                t.fail(format!("instance {i}: {c:?}"));
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    tally.report(5, "submodularity", start, "20 instances × 500 trials".into())
}

/// Solves `A x = b` for a square `A`, or `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best vertex of `{x ≥ 0, A x ≤ b}` by trying every basis.
fn vertex_enumeration(c: &[f64], rows: &[(Vec<f64>, f64)]) -> Option<f64> {
    let n = c.len();
    let mut all: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        all.push((e, 0.0));
    }
    let m = all.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..1 << m {
        if mask.count_ones() as usize != n {
            continue;
        }
        let chosen: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let a = chosen.iter().map(|&i| all[i].0.clone()).collect();
        let b = chosen.iter().map(|&i| all[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let ok = all.iter().all(|(a, b)| a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() <= b + 1e-9);
        if ok {
            let v: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

fn criterion_6(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let mut t = Tally::default();
    let mut rng = rng_for(seed, 6, 0);

    for i in 0..200 {
        let n = rng.gen_range(2..=3);
        let m = rng.gen_range(1..=4);
        let mut lp = LinearProgram::new(n);
        lp.objective = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut rows = Vec::new();
        for _ in 0..m {
            rows.push(((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>(), rng.gen_range(-0.5..2.0)));
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((e, 3.0));
        }
        for (a, b) in &rows {
            lp.add_le(a.clone(), *b);
        }
        let tag = || format!("LP {i}");
        match (solve_lp(&lp), vertex_enumeration(&lp.objective, &rows)) {
            (Ok(LpOutcome::Optimal(s)), Some(v)) => t.le((s.value - v).abs(), 1e-6, tag),
            (Ok(LpOutcome::Infeasible), None) => t.checks += 1,
            (Ok(other), v) => t.fail(format!("LP {i}: solver {other:?} vs enumeration {v:?}")),
            (Err(e), _) => t.error(e, tag),
        }
    }

    let mut polytopes = 0;
    let mut redraws = 0;
    while polytopes < 100 {
        let p = rng.gen_range(2..=3);
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            rows.push((e.clone(), 1.0));
            e[j] = -1.0;
            rows.push((e, 1.0));
        }
        for _ in 0..rng.gen_range(2..=5) {
            let a: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
            rows.push((a.iter().map(|v| v / norm).collect(), rng.gen_range(-0.6..0.6)));
        }
        // largest inscribed ball: max r with a·x + r‖a‖ ≤ b
        let mut cheb = LinearProgram::new(p + 1);
        cheb.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); p];
        cheb.bounds.push((-4.0, 1.0));
        cheb.objective[p] = 1.0;
        for (a, b) in &rows {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut row = a.clone();
            row.push(norm);
            cheb.add_le(row, *b);
        }
        let radius = match solve_lp(&cheb) {
            Ok(LpOutcome::Optimal(s)) => s.value,
            Ok(other) => {
                t.fail(format!("inscribed-ball LP {other:?}"));
                polytopes += 1;
                continue;
            }
            Err(e) => {
                t.error(e, || "inscribed-ball LP".into());
                polytopes += 1;
                continue;
            }
        };
        // too thin to call either way at the search tolerance
        if radius > -1e-4 && radius < 1e-4 {
            redraws += 1;
            continue;
        }
        polytopes += 1;
        let bounds = vec![(-1.0, 1.0); p];
        match feasibility_search(&bounds, polytope_oracle(&rows, 0.0), &EllipsoidConfig::default()) {
            Ok(out) => {
                t.checks += 1;
                if out.is_feasible() != (radius > 0.0) {
                    t.fail(format!("polytope {polytopes}: search {} vs radius {radius}", out.is_feasible()));
                }
            }
            Err(e) => t.error(e, || format!("polytope {polytopes}")),
        }
    }

    for i in 0..100 {
        let c = rng.gen_range(0.0..1.0);
        let target = rng.gen_range(-1.0..2.0);
        let mut lp = LinearProgram::new(1);
        lp.add_le(vec![1.0], c);
        let qp = QuadraticProgram::projection(lp, &[0], &[target]);
        match solve_qp(&qp) {
            Ok(s) => t.le((s.x[0] - target.clamp(0.0, c)).abs(), 1e-7, || format!("QP {i}")),
            Err(e) => t.error(e, || format!("QP {i}")),
        }
    }
    t.report(6, "solvers", start, format!("200 LPs, 100 polytopes ({redraws} thin redrawn), 100 QPs"))
}

/// Runs every criterion of `suite`. Failures are report entries, never errors.
pub fn run_acceptance(suite: Suite, seed: u64) -> AcceptanceReport {
    with_pool(|| {
        let wanted = suite.criteria();
        let mut criteria = Vec::new();
        let mut regret_pair = None;
        for &id in wanted {
            let report = match id {
                1 => criterion_1(seed),
                2 => criterion_2(seed),
                3 | 7 => {
                    let (r3, r7) = regret_pair.get_or_insert_with(|| criteria_3_and_7(seed)).clone();
                    if id == 3 {
                        r3
                    } else {
                        r7
                    }
                }
                4 => criterion_4(seed),
                5 => criterion_5(seed),
                6 => criterion_6(seed),
                _ => unreachable!("criteria are numbered 1 to 7"),
            };
            criteria.push(report);
        }
        AcceptanceReport { suite, seed, criteria }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for name in Suite::NAMES {
            assert!(name.parse::<Suite>().is_ok());
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn vertex_enumeration_on_square() {
        let rows = vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 2.0)];
        assert_eq!(vertex_enumeration(&[1.0, 1.0], &rows), Some(3.0));
        let empty = vec![(vec![1.0, 1.0], -1.0)];
        assert_eq!(vertex_enumeration(&[1.0, 1.0], &empty), None);
    }

    #[test]
    fn tally_counts() {
        let mut t = Tally::default();
        t.le(1.0, 2.0, || "ok".into());
        t.le(3.0, 2.0, || "bad".into());
        assert_eq!((t.checks, t.violations), (2, 1));
        assert!(t.first.unwrap().starts_with("bad"));
    }
}
