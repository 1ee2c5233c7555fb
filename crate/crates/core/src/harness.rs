//! Budgeted, reproducible experiment driver: batch simulation with
//! whole-design truncation, the per-epoch run log, artifact writers and
//! multi-seed campaigns.
//!
//! Run artifacts are byte-identical across repeated runs with the same seed;
//! everything wall-clock-dependent goes to `meta.json` only.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::BenchProblem;
use crate::evolve::{evaluated_individual, gde3_epoch};
use crate::hv::{hypervolume_exact, HvReference};
use crate::metrics::{build_normalizer, distribution_metric, CvNormalizer};
use crate::modebi::{modebi_epoch, Scenario};
use crate::problem::{
    repair_design, AlgoConfig, DesignPoint, Evaluation, Individual, Population, Simulate,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Gde3,
    Modebi(Scenario),
}

impl Algorithm {
    pub fn from_name(name: &str) -> Result<Algorithm> {
        Ok(match name {
            "gde3" => Algorithm::Gde3,
            "modebi-s1" => Algorithm::Modebi(Scenario::S1),
            "modebi-s2" => Algorithm::Modebi(Scenario::S2),
            "modebi-s3" => Algorithm::Modebi(Scenario::S3),
            other => return Err(Error::UnknownAlgorithm(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gde3 => "gde3",
            Algorithm::Modebi(Scenario::S1) => "modebi-s1",
            Algorithm::Modebi(Scenario::S2) => "modebi-s2",
            Algorithm::Modebi(Scenario::S3) => "modebi-s3",
        }
    }
}

/// Simulation budget in (design, corner) evaluations.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub total: u64,
    pub used: u64,
}

impl Budget {
    pub fn new(total: u64) -> Self {
        Budget { total, used: 0 }
    }

    pub fn remaining(&self) -> u64 {
        self.total - self.used
    }
}

/// Evaluates whole designs against every corner, in parallel batches of at
/// most `batch_size` (design, corner) pairs, truncating a request to the
/// prefix the budget still affords. Results are assembled in input order so
/// runs are deterministic regardless of thread scheduling.
pub struct BatchEvaluator<'a> {
    problem: &'a BenchProblem,
    pub budget: Budget,
    batch_size: usize,
}

impl<'a> BatchEvaluator<'a> {
    pub fn new(problem: &'a BenchProblem, budget: u64, batch_size: usize) -> Self {
        BatchEvaluator {
            problem,
            budget: Budget::new(budget),
            batch_size,
        }
    }
}

impl Simulate for BatchEvaluator<'_> {
    fn simulate(&mut self, designs: &[DesignPoint]) -> (Vec<Evaluation>, bool) {
        let spec = &self.problem.spec;
        let c = spec.num_corners() as u64;
        let affordable = (self.budget.remaining() / c) as usize;
        let take = designs.len().min(affordable);
        let partial = take < designs.len();
        let pairs: Vec<(usize, usize)> = (0..take)
            .flat_map(|d| (0..spec.num_corners()).map(move |k| (d, k)))
            .collect();
        let mut flat: Vec<Vec<f64>> = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.batch_size.max(1)) {
            flat.par_extend(
                chunk
                    .par_iter()
                    .map(|&(d, k)| self.problem.evaluate(&designs[d], &spec.corners[k])),
            );
        }
        let evals = (0..take)
            .map(|d| {
                // Transpose the per-design slice into response x corner rows.
                let rows = &flat[d * spec.num_corners()..(d + 1) * spec.num_corners()];
                let responses = (0..spec.num_responses())
                    .map(|r| rows.iter().map(|row| row[r]).collect())
                    .collect();
                Evaluation::simulated(responses)
            })
            .collect();
        self.budget.used += take as u64 * c;
        (evals, partial)
    }
}

/// One run-log row, written after initialization (epoch 0) and after every
/// epoch. `population_hv` and `dm` cover the feasible members of the current
/// population under the running-extremes reference built from everything
/// simulated; `population_hv` is absent while no member is feasible.
/// `sim_minutes` is the derived simulated-time axis: sims_used times the
/// configured per-simulation cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLogRow {
    pub epoch: usize,
    pub sims_used: u64,
    pub best_so_far_cv: f64,
    pub feasible_count: usize,
    pub population_hv: Option<f64>,
    pub dm: f64,
    pub sim_minutes: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub budget_total: u64,
    pub sims_used: u64,
    pub epochs: usize,
    /// Simulation count after which the first feasible design was observed;
    /// absent when the run never found one.
    pub first_feasible_sims: Option<u64>,
    pub feasible_count: usize,
    /// SHA-256 of the canonical config JSON; identifies the exact settings.
    pub config_hash: String,
    /// Final-population hypervolume under the running-extremes reference;
    /// absent while no member is feasible.
    pub final_hv: Option<f64>,
    /// Final-population hypervolume against the problem's pinned reference
    /// point, when it has one; directly comparable to its reference-front
    /// hypervolume.
    pub final_hv_fixed_ref: Option<f64>,
    pub final_dm: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<RunLogRow>,
    pub summary: RunSummary,
    pub population: Population,
    pub wall_ms: u128,
}

fn init_population<R: Rng>(
    problem: &BenchProblem,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DesignPoint>> {
    let spec = &problem.spec;
    (0..n)
        .map(|_| {
            let values: Vec<f64> = spec
                .variables
                .iter()
                .map(|v| rng.gen_range(v.lower..v.upper))
                .collect();
            repair_design(&values, spec)
        })
        .collect()
}

struct Trajectory {
    rows: Vec<RunLogRow>,
    best_cv: f64,
    first_feasible_sims: Option<u64>,
}

impl Trajectory {
    fn new() -> Self {
        Trajectory {
            rows: Vec::new(),
            best_cv: f64::INFINITY,
            first_feasible_sims: None,
        }
    }

    /// Folds the archive entries new since the last call into the running
    /// best-CV and first-feasible trackers, then logs one row.
    fn log(
        &mut self,
        epoch: usize,
        archive: &[Individual],
        prev_archive_len: usize,
        sims_before: u64,
        sims_used: u64,
        pop: &Population,
        config: &AlgoConfig,
        corners: u64,
    ) {
        for (j, ind) in archive[prev_archive_len..].iter().enumerate() {
            let cv = ind.cv();
            if cv < self.best_cv {
                self.best_cv = cv;
            }
            if cv == 0.0 && self.first_feasible_sims.is_none() {
                self.first_feasible_sims = Some(sims_before + (j as u64 + 1) * corners);
            }
        }
        let (hv, dm) = population_quality(pop, archive);
        self.rows.push(RunLogRow {
            epoch,
            sims_used,
            best_so_far_cv: self.best_cv,
            feasible_count: pop.feasible_indices().len(),
            population_hv: hv,
            dm,
            sim_minutes: sims_used as f64 * config.sim_cost_s / 60.0,
        });
    }
}

/// Feasible-population hypervolume and distribution metric under the
/// running-extremes reference built from every simulated objective vector.
/// HV is `None` while the population has no feasible member.
fn population_quality(pop: &Population, archive: &[Individual]) -> (Option<f64>, f64) {
    let feas: Vec<Vec<f64>> = pop
        .members
        .iter()
        .filter(|m| m.is_feasible())
        .map(|m| m.objectives().to_vec())
        .collect();
    if feas.is_empty() {
        return (None, 0.0);
    }
    let all: Vec<Vec<f64>> = archive.iter().map(|i| i.objectives().to_vec()).collect();
    let hv_ref = HvReference::from_observed(&all).expect("nonempty archive");
    let hv = hypervolume_exact(&feas, &hv_ref).unwrap_or(0.0);
    let dm = distribution_metric(&feas, &hv_ref.ideal, &hv_ref.nadir);
    (Some(hv), dm)
}

/// Runs one algorithm on one problem to budget exhaustion. The run charges
/// `pop_size * corners` for initialization, then loops epochs until the
/// budget cannot cover another whole design.
pub fn run_algorithm(
    problem: &BenchProblem,
    algorithm: Algorithm,
    config: &AlgoConfig,
) -> Result<RunResult> {
    config.validate()?;
    let spec = &problem.spec;
    let corners = spec.num_corners() as u64;
    let init_cost = config.pop_size as u64 * corners;
    if config.budget < init_cost {
        return Err(Error::BudgetTooSmall {
            needed: init_cost,
            got: config.budget,
        });
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sim = BatchEvaluator::new(problem, config.budget, config.batch_size);

    let designs = init_population(problem, config.pop_size, &mut rng)?;
    let (evals, partial) = sim.simulate(&designs);
    debug_assert!(!partial);
    // The normalizer needs raw P0 responses before any CV can exist.
    let provisional: Vec<Individual> = designs
        .iter()
        .zip(&evals)
        .map(|(d, e)| Individual {
            design: d.clone(),
            eval: Some(e.clone()),
            cv: None,
            objectives: None,
        })
        .collect();
    let norm: CvNormalizer = build_normalizer(&provisional, spec)?;
    let mut archive: Vec<Individual> = designs
        .into_iter()
        .zip(evals)
        .map(|(d, e)| evaluated_individual(d, e, spec, &norm))
        .collect::<Result<_>>()?;
    let mut pop = Population::new(archive.clone(), config.pop_size);

    let mut traj = Trajectory::new();
    traj.log(0, &archive, 0, 0, sim.budget.used, &pop, config, corners);

    let mut epoch = 0usize;
    loop {
        if sim.budget.remaining() < corners {
            break;
        }
        epoch += 1;
        let sims_before = sim.budget.used;
        let prev_len = archive.len();
        let outcome = match algorithm {
            Algorithm::Gde3 => {
                gde3_epoch(&mut pop, &mut sim, &norm, spec, config, &mut rng, &mut archive)?
            }
            Algorithm::Modebi(scenario) => modebi_epoch(
                &mut pop,
                &mut sim,
                &norm,
                spec,
                config,
                scenario,
                &mut rng,
                &mut archive,
            )?,
        };
        traj.log(
            epoch,
            &archive,
            prev_len,
            sims_before,
            sim.budget.used,
            &pop,
            config,
            corners,
        );
        if outcome.partial {
            break;
        }
    }

    let (final_hv, final_dm) = population_quality(&pop, &archive);
    let config_hash = config_hash(config)?;
    let final_hv_fixed_ref = match &problem.reference_point {
        Some(rp) => {
            let feas: Vec<Vec<f64>> = pop
                .members
                .iter()
                .filter(|m| m.is_feasible())
                .map(|m| m.objectives().to_vec())
                .collect();
            Some(hypervolume_exact(&feas, &HvReference::raw(rp.clone()))?)
        }
        None => None,
    };
    let summary = RunSummary {
        algorithm: algorithm.name().to_string(),
        problem: spec.name.clone(),
        seed: config.seed,
        budget_total: config.budget,
        sims_used: sim.budget.used,
        epochs: epoch,
        first_feasible_sims: traj.first_feasible_sims,
        feasible_count: pop.feasible_indices().len(),
        config_hash,
        final_hv,
        final_hv_fixed_ref,
        final_dm,
    };
    Ok(RunResult {
        rows: traj.rows,
        summary,
        population: pop,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// SHA-256 over the canonical (serde) config JSON, hex-encoded.
pub fn config_hash(config: &AlgoConfig) -> Result<String> {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_string(config)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Serializes the run log as CSV: comment lines identifying the run, a
/// column-header line, then one row per epoch. `population_hv` cells are
/// empty while no member is feasible. Floats use shortest round-trip
/// formatting, so the bytes are reproducible.
pub fn runlog_csv(rows: &[RunLogRow], summary: &RunSummary) -> String {
    let mut out = format!(
        "# algorithm={} problem={} seed={} config_hash={}\n",
        summary.algorithm, summary.problem, summary.seed, summary.config_hash
    );
    out.push_str("epoch,sims_used,best_so_far_cv,feasible_count,population_hv,dm,sim_minutes\n");
    for r in rows {
        let hv = r.population_hv.map(|h| h.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch, r.sims_used, r.best_so_far_cv, r.feasible_count, hv, r.dm, r.sim_minutes
        ));
    }
    out
}

/// Writes `runlog.csv`, `population.json`, `summary.json` and `meta.json`
/// into `out_dir`, creating it if needed. Only `meta.json` depends on wall
/// time.
pub fn write_artifacts(out_dir: &Path, result: &RunResult) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("runlog.csv"),
        runlog_csv(&result.rows, &result.summary),
    )?;
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&result.summary)?,
    )?;
    fs::write(
        out_dir.join("population.json"),
        serde_json::to_string_pretty(&result.population.members)?,
    )?;
    let meta = serde_json::json!({
        "wall_ms": result.wall_ms as u64,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(out_dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub algorithm: String,
    pub problem: String,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<RunSummary>,
    /// Median of `final_hv_fixed_ref` when the problem pins a reference
    /// point, otherwise of `final_hv`.
    pub median_final_hv: f64,
    /// Upper median; runs that never found a feasible design count as
    /// infinite, so `None` means the median run found none.
    pub median_first_feasible_sims: Option<u64>,
    pub feasible_runs: usize,
}

/// Upper median (`sorted[len / 2]`) with `None` ordered after every number.
fn median_option(values: &[Option<u64>]) -> Option<u64> {
    let mut v = values.to_vec();
    v.sort_by_key(|x| x.unwrap_or(u64::MAX));
    v[v.len() / 2]
}

fn median_f64(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// Runs the algorithm once per seed; with an output directory, per-seed
/// artifacts land in `seed-<s>/` next to a `campaign.json` roll-up.
pub fn run_campaign(
    problem: &BenchProblem,
    algorithm: Algorithm,
    base_config: &AlgoConfig,
    seeds: &[u64],
    out_dir: Option<&Path>,
) -> Result<CampaignSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("campaign needs at least one seed".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut config = base_config.clone();
        config.seed = seed;
        let result = run_algorithm(problem, algorithm, &config)?;
        if let Some(dir) = out_dir {
            write_artifacts(&dir.join(format!("seed-{seed}")), &result)?;
        }
        per_seed.push(result.summary);
    }
    let hvs: Vec<f64> = per_seed
        .iter()
        .map(|s| s.final_hv_fixed_ref.or(s.final_hv).unwrap_or(0.0))
        .collect();
    let firsts: Vec<Option<u64>> = per_seed.iter().map(|s| s.first_feasible_sims).collect();
    let summary = CampaignSummary {
        algorithm: algorithm.name().to_string(),
        problem: problem.spec.name.clone(),
        seeds: seeds.to_vec(),
        feasible_runs: per_seed.iter().filter(|s| s.feasible_count > 0).count(),
        median_final_hv: median_f64(&hvs),
        median_first_feasible_sims: median_option(&firsts),
        per_seed,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("campaign.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
    }
    Ok(summary)
}
