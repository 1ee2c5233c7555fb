//! The surrogate-assisted loop: oversampled DE offspring generation, GP
//! scoring with per-response optimism, the two preselection strategies
//! (hereditary, pooled), and the two survival policies (Pareto, improved).
//!
//! Scenario wiring: S1 = Pareto survival + hereditary selection,
//! S2 = improved survival + pooled selection, S3 = improved survival +
//! hereditary selection.

use rand::Rng;
use rayon::prelude::*;

use crate::evolve::{de_variation, evaluated_individual, nondominated_prune, EpochOutcome};
use crate::gp::{lcb, SurrogateSet};
use crate::hv::{greedy_hv_subset, hv_contribution, HvReference};
use crate::metrics::{
    constrained_dominates, constraint_violation_of, crowding_distance, distribution_metric,
    CvNormalizer,
};
use crate::problem::{
    aggregate_worst_case, AlgoConfig, DesignPoint, Evaluation, Individual, Population,
    ProblemSpec, Simulate,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Pareto survival + hereditary selection.
    S1,
    /// Improved survival + pooled selection.
    S2,
    /// Improved survival + hereditary selection.
    S3,
}

/// Surrogate-scored offspring tagged with their parent index.
#[derive(Debug, Clone)]
pub struct OffspringBatch {
    pub candidates: Vec<(usize, Individual)>,
    pub multiplier: usize,
}

/// Everything selection and survival need besides the individuals themselves.
pub struct SelectionContext<'a> {
    pub spec: &'a ProblemSpec,
    pub norm: &'a CvNormalizer,
    pub hv_ref: &'a HvReference,
    pub config: &'a AlgoConfig,
}

/// Improvement-score bands for hereditary selection, ordered by the
/// feasibility transition they describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreBand {
    /// Both feasible: HV-contribution difference, unbounded.
    FeasibleVsFeasible,
    /// Both infeasible: 1 + CV improvement.
    InfeasibleVsInfeasible,
    /// Parent infeasible, offspring feasible: 10 + CV improvement.
    FeasibleVsInfeasible,
    /// Parent feasible, offspring infeasible: ranks below everything.
    Regression,
}

#[derive(Debug, Clone, Copy)]
pub struct ImprovementScore {
    pub value: f64,
    pub band: ScoreBand,
}

/// Runs the DE operator `multiplier` times over the whole population,
/// re-drawing donors every round, and tags each offspring with its parent.
pub fn generate_candidates<R: Rng>(
    pop: &Population,
    config: &AlgoConfig,
    spec: &ProblemSpec,
    rng: &mut R,
) -> Result<Vec<(usize, DesignPoint)>> {
    let n = pop.len();
    let mut out = Vec::with_capacity(n * config.offspring_multiplier);
    for _ in 0..config.offspring_multiplier {
        for i in 0..n {
            out.push((i, de_variation(pop, i, config.f, config.cr, spec, rng)?));
        }
    }
    Ok(out)
}

/// Predicts every candidate with the per-response GPs, applies the
/// direction-aware LCB optimism, and caches the resulting surrogate CV and
/// minimization-convention objectives.
pub fn surrogate_score(
    candidates: Vec<(usize, DesignPoint)>,
    models: &SurrogateSet,
    norm: &CvNormalizer,
    spec: &ProblemSpec,
    config: &AlgoConfig,
) -> Result<OffspringBatch> {
    let designs: Vec<DesignPoint> = candidates.iter().map(|(_, d)| d.clone()).collect();
    let evals = models.batch_predict(&designs, spec);
    let mut out = Vec::with_capacity(candidates.len());
    for ((parent, design), eval) in candidates.into_iter().zip(evals) {
        let ind = surrogate_individual(design, eval, spec, norm, config.k)?;
        out.push((parent, ind));
    }
    Ok(OffspringBatch {
        candidates: out,
        multiplier: config.offspring_multiplier,
    })
}

/// Builds an individual whose cached CV and objectives come from the
/// optimism-adjusted (LCB) surrogate responses.
pub fn surrogate_individual(
    design: DesignPoint,
    eval: Evaluation,
    spec: &ProblemSpec,
    norm: &CvNormalizer,
    k: f64,
) -> Result<Individual> {
    let stds = eval.uncertainty.as_ref().expect("surrogate evaluation");
    let optimistic: Vec<Vec<f64>> = eval
        .responses
        .iter()
        .zip(stds)
        .zip(&spec.responses)
        .map(|((means, s), resp)| {
            means
                .iter()
                .zip(s)
                .map(|(&m, &sd)| lcb(m, sd, k, resp.direction))
                .collect()
        })
        .collect();
    let (objectives, _) = aggregate_worst_case(&optimistic, spec);
    let cv = constraint_violation_of(&optimistic, norm, spec)?;
    Ok(Individual {
        design,
        eval: Some(eval),
        cv: Some(cv),
        objectives: Some(objectives),
    })
}

fn feasible_objectives(pop: &Population) -> Vec<Vec<f64>> {
    pop.members
        .iter()
        .filter(|m| m.is_feasible())
        .map(|m| m.objectives().to_vec())
        .collect()
}

/// Hereditary selection: per parent, pick the winning offspring (feasible
/// first, then max HV contribution; all-infeasible falls back to min CV),
/// score each winner against its parent, and return the `quota` best-scoring
/// winners with their parent indices. Ties break by parent index.
pub fn hereditary_select(
    batch: &OffspringBatch,
    pop: &Population,
    quota: usize,
    ctx: &SelectionContext,
) -> Result<Vec<(usize, Individual)>> {
    let n = pop.len();
    if quota > n {
        return Err(Error::Numeric(format!(
            "hereditary selection quota {quota} exceeds parent count {n}"
        )));
    }
    let feas_pop = feasible_objectives(pop);

    let mut per_parent: Vec<Vec<&Individual>> = vec![Vec::new(); n];
    for (p, c) in &batch.candidates {
        per_parent[*p].push(c);
    }
    let winners: Vec<Option<Individual>> = per_parent
        .par_iter()
        .map(|mine| -> Result<Option<Individual>> {
            if mine.is_empty() {
                return Ok(None);
            }
            let feasible: Vec<&&Individual> = mine.iter().filter(|c| c.is_feasible()).collect();
            let winner = if !feasible.is_empty() {
                let mut best: Option<(&Individual, f64)> = None;
                for c in &feasible {
                    let contrib = hv_contribution(c.objectives(), &feas_pop, ctx.hv_ref)?;
                    match best {
                        Some((_, b)) if contrib <= b => {}
                        _ => best = Some((c, contrib)),
                    }
                }
                best.unwrap().0
            } else {
                mine.iter()
                    .min_by(|a, b| a.cv().partial_cmp(&b.cv()).unwrap())
                    .unwrap()
            };
            Ok(Some((*winner).clone()))
        })
        .collect::<Result<_>>()?;

    let mut scored: Vec<(usize, Individual, ImprovementScore)> = Vec::new();
    for (i, winner) in winners.into_iter().enumerate() {
        let Some(off) = winner else { continue };
        let parent = &pop.members[i];
        let score = improvement_score(parent, &off, &feas_pop, ctx)?;
        scored.push((i, off, score));
    }
    scored.sort_by(|a, b| b.2.value.partial_cmp(&a.2.value).unwrap().then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(quota)
        .map(|(i, off, _)| (i, off))
        .collect())
}

/// Scores one winning offspring against its parent. HV contributions use the
/// current feasible population minus the parent as base: the parent's from
/// its true objectives, the offspring's from its surrogate objectives.
fn improvement_score(
    parent: &Individual,
    offspring: &Individual,
    feas_pop: &[Vec<f64>],
    ctx: &SelectionContext,
) -> Result<ImprovementScore> {
    let (pf, of) = (parent.is_feasible(), offspring.is_feasible());
    Ok(match (pf, of) {
        (true, true) => {
            let base: Vec<Vec<f64>> = feas_pop
                .iter()
                .filter(|o| o.as_slice() != parent.objectives())
                .cloned()
                .collect();
            let off_c = hv_contribution(offspring.objectives(), &base, ctx.hv_ref)?;
            let par_c = hv_contribution(parent.objectives(), &base, ctx.hv_ref)?;
            ImprovementScore {
                value: off_c - par_c,
                band: ScoreBand::FeasibleVsFeasible,
            }
        }
        (false, false) => ImprovementScore {
            value: 1.0 + (parent.cv() - offspring.cv()),
            band: ScoreBand::InfeasibleVsInfeasible,
        },
        (false, true) => ImprovementScore {
            value: 10.0 + (parent.cv() - offspring.cv()),
            band: ScoreBand::FeasibleVsInfeasible,
        },
        (true, false) => ImprovementScore {
            value: -10.0 - offspring.cv(),
            band: ScoreBand::Regression,
        },
    })
}

/// Iterative CV/DM pick: each remaining candidate gets (cv, dm_gain) where
/// dm_gain is the distribution-metric change from adding it to the already
/// selected objectives; from the Pareto-nondominated set under (min cv,
/// max dm_gain) the lowest-CV candidate wins, ties by dm_gain then index.
fn cv_dm_pick(
    remaining: &[usize],
    cvs: &[f64],
    objectives: &[Vec<f64>],
    selected_objs: &[Vec<f64>],
    ctx: &SelectionContext,
) -> usize {
    let base_dm = distribution_metric(selected_objs, &ctx.hv_ref.ideal, &ctx.hv_ref.nadir);
    let scores: Vec<(usize, f64, f64)> = remaining
        .iter()
        .map(|&i| {
            let mut with = selected_objs.to_vec();
            with.push(objectives[i].clone());
            let gain =
                distribution_metric(&with, &ctx.hv_ref.ideal, &ctx.hv_ref.nadir) - base_dm;
            (i, cvs[i], gain)
        })
        .collect();
    let nondominated: Vec<&(usize, f64, f64)> = scores
        .iter()
        .filter(|(_, cv, gain)| {
            !scores
                .iter()
                .any(|(_, ocv, ogain)| {
                    (ocv <= cv && ogain >= gain) && (ocv < cv || ogain > gain)
                })
        })
        .collect();
    let pool = if nondominated.is_empty() { scores.iter().collect() } else { nondominated };
    pool.into_iter()
        .min_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then(b.2.partial_cmp(&a.2).unwrap())
                .then(a.0.cmp(&b.0))
        })
        .unwrap()
        .0
}

/// Pooled selection: ignores parentage. With more surrogate-feasible
/// candidates than the quota, greedily picks by HV contribution against the
/// top-HV slice of the feasible population plus earlier picks; otherwise all
/// feasible candidates plus infeasible ones chosen by the CV/DM rule against
/// the population plus earlier picks.
pub fn pooled_select(
    batch: &OffspringBatch,
    pop: &Population,
    quota: usize,
    ctx: &SelectionContext,
) -> Result<Vec<Individual>> {
    let cands = &batch.candidates;
    let feasible_idx: Vec<usize> = (0..cands.len())
        .filter(|&i| cands[i].1.is_feasible())
        .collect();

    if feasible_idx.len() > quota {
        // Population slice considered in the HV computation, capped.
        let feas_pop = feasible_objectives(pop);
        let cons_pop: Vec<Vec<f64>> = if feas_pop.len() > ctx.config.max_pop {
            greedy_hv_subset(&feas_pop, &[], ctx.config.max_pop, ctx.hv_ref)?
                .into_iter()
                .map(|i| feas_pop[i].clone())
                .collect()
        } else {
            feas_pop
        };
        let cand_objs: Vec<Vec<f64>> = feasible_idx
            .iter()
            .map(|&i| cands[i].1.objectives().to_vec())
            .collect();
        let picks = greedy_hv_subset(&cand_objs, &cons_pop, quota, ctx.hv_ref)?;
        return Ok(picks
            .into_iter()
            .map(|k| cands[feasible_idx[k]].1.clone())
            .collect());
    }

    // All feasible candidates, then fill with infeasible ones by CV/DM.
    let mut selected: Vec<Individual> = feasible_idx
        .iter()
        .map(|&i| cands[i].1.clone())
        .collect();
    let mut selected_objs: Vec<Vec<f64>> = pop
        .members
        .iter()
        .map(|m| m.objectives().to_vec())
        .chain(selected.iter().map(|s| s.objectives().to_vec()))
        .collect();
    let cvs: Vec<f64> = cands.iter().map(|(_, c)| c.cv()).collect();
    let objs: Vec<Vec<f64>> = cands.iter().map(|(_, c)| c.objectives().to_vec()).collect();
    let mut remaining: Vec<usize> = (0..cands.len())
        .filter(|&i| !cands[i].1.is_feasible())
        .collect();
    while selected.len() < quota && !remaining.is_empty() {
        let pick = cv_dm_pick(&remaining, &cvs, &objs, &selected_objs, ctx);
        remaining.retain(|&i| i != pick);
        selected_objs.push(objs[pick].clone());
        selected.push(cands[pick].1.clone());
    }
    Ok(selected)
}

/// Pareto survival (usable only after hereditary selection): each simulated
/// offspring is compared with its parent under constrained dominance, the
/// dominated one is dropped and incomparable pairs keep both; parents without
/// selected offspring pass through, then the pool is pruned back to N.
pub fn pareto_survival(
    pop: &Population,
    selected: &[(usize, Individual)],
    n: usize,
) -> Result<Population> {
    let mut pool: Vec<Individual> = Vec::with_capacity(pop.len() + selected.len());
    let mut replaced: Vec<usize> = Vec::new();
    for (parent_idx, child) in selected {
        let parent = &pop.members[*parent_idx];
        if constrained_dominates(child, parent) {
            replaced.push(*parent_idx);
            pool.push(child.clone());
        } else if constrained_dominates(parent, child) {
            // Parent stays, child dropped.
        } else {
            pool.push(child.clone());
        }
    }
    for (i, parent) in pop.members.iter().enumerate() {
        if !replaced.contains(&i) {
            pool.push(parent.clone());
        }
    }
    if pool.len() < n {
        // Possible only with degenerate quotas; nothing to prune.
        return Ok(Population::new(pool, n));
    }
    nondominated_prune(pool, n)
}

/// Improved survival over the parent+offspring pool: feasible first. With at
/// least N feasible members, an `hv_fraction` share of the slots is filled
/// greedily by HV contribution and the rest by crowding distance over the
/// remaining feasible members; otherwise every feasible member survives and
/// infeasible ones are added by the CV/DM rule.
pub fn improved_survival(
    pop: &Population,
    selected: Vec<Individual>,
    n: usize,
    ctx: &SelectionContext,
) -> Result<Population> {
    let mut pool: Vec<Individual> = pop.members.clone();
    pool.extend(selected);
    let feas: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].is_feasible()).collect();

    if feas.len() >= n {
        if feas.len() == n {
            let members = feas.into_iter().map(|i| pool[i].clone()).collect();
            return Ok(Population::new(members, n));
        }
        let objs: Vec<Vec<f64>> = feas.iter().map(|&i| pool[i].objectives().to_vec()).collect();
        let hv_count = ((ctx.config.hv_fraction * n as f64).floor() as usize).min(n);
        let picks = greedy_hv_subset(&objs, &[], hv_count, ctx.hv_ref)?;
        let mut chosen: Vec<usize> = picks.clone();
        // Remaining slots by crowding distance over the not-yet-chosen
        // feasible members, ties by index.
        let rest: Vec<usize> = (0..feas.len()).filter(|i| !chosen.contains(i)).collect();
        let rest_objs: Vec<Vec<f64>> = rest.iter().map(|&i| objs[i].clone()).collect();
        let cd = crowding_distance(&rest_objs);
        let mut order: Vec<usize> = (0..rest.len()).collect();
        order.sort_by(|&a, &b| cd[b].partial_cmp(&cd[a]).unwrap().then(rest[a].cmp(&rest[b])));
        chosen.extend(order.into_iter().take(n - chosen.len()).map(|k| rest[k]));
        chosen.sort_unstable();
        let members = chosen.into_iter().map(|k| pool[feas[k]].clone()).collect();
        return Ok(Population::new(members, n));
    }

    // Fewer feasible than N: keep them all, fill from infeasible by CV/DM.
    let mut members: Vec<Individual> = feas.iter().map(|&i| pool[i].clone()).collect();
    let mut selected_objs: Vec<Vec<f64>> =
        members.iter().map(|m| m.objectives().to_vec()).collect();
    let cvs: Vec<f64> = pool.iter().map(|m| m.cv()).collect();
    let objs: Vec<Vec<f64>> = pool.iter().map(|m| m.objectives().to_vec()).collect();
    let mut remaining: Vec<usize> = (0..pool.len()).filter(|i| !feas.contains(i)).collect();
    while members.len() < n && !remaining.is_empty() {
        let pick = cv_dm_pick(&remaining, &cvs, &objs, &selected_objs, ctx);
        remaining.retain(|&i| i != pick);
        selected_objs.push(objs[pick].clone());
        members.push(pool[pick].clone());
    }
    Ok(Population::new(members, n))
}

/// One full surrogate-assisted epoch: refresh the GPs on everything simulated
/// so far, oversample offspring, score them, preselect the quota, simulate
/// the picks, and apply the scenario's survival. Newly simulated individuals
/// are appended to `archive`.
#[allow(clippy::too_many_arguments)]
pub fn modebi_epoch<R: Rng>(
    pop: &mut Population,
    sim: &mut dyn Simulate,
    norm: &CvNormalizer,
    spec: &ProblemSpec,
    config: &AlgoConfig,
    scenario: Scenario,
    rng: &mut R,
    archive: &mut Vec<Individual>,
) -> Result<EpochOutcome> {
    let records: Vec<(DesignPoint, Evaluation)> = archive
        .iter()
        .map(|ind| (ind.design.clone(), ind.eval.clone().expect("simulated")))
        .collect();
    let models = SurrogateSet::fit(&records, spec, config)?;

    let candidates = generate_candidates(pop, config, spec, rng)?;
    let batch = surrogate_score(candidates, &models, norm, spec, config)?;

    let all_objs: Vec<Vec<f64>> = archive.iter().map(|i| i.objectives().to_vec()).collect();
    let hv_ref = HvReference::from_observed(&all_objs).expect("nonempty archive");
    let ctx = SelectionContext {
        spec,
        norm,
        hv_ref: &hv_ref,
        config,
    };
    let quota = config.quota();

    let (parents, picked_designs): (Vec<Option<usize>>, Vec<DesignPoint>) = match scenario {
        Scenario::S1 | Scenario::S3 => {
            let sel = hereditary_select(&batch, pop, quota, &ctx)?;
            sel.into_iter()
                .map(|(p, ind)| (Some(p), ind.design))
                .unzip()
        }
        Scenario::S2 => {
            let sel = pooled_select(&batch, pop, quota, &ctx)?;
            sel.into_iter().map(|ind| (None, ind.design)).unzip()
        }
    };

    let (evals, partial) = sim.simulate(&picked_designs);
    let simulated = evals.len();
    let mut simulated_children: Vec<(Option<usize>, Individual)> = Vec::with_capacity(simulated);
    for (i, eval) in evals.into_iter().enumerate() {
        let child = evaluated_individual(picked_designs[i].clone(), eval, spec, norm)?;
        archive.push(child.clone());
        simulated_children.push((parents[i], child));
    }

    *pop = match scenario {
        Scenario::S1 => {
            let linked: Vec<(usize, Individual)> = simulated_children
                .into_iter()
                .map(|(p, c)| (p.expect("hereditary parent link"), c))
                .collect();
            pareto_survival(pop, &linked, pop.capacity)?
        }
        Scenario::S2 | Scenario::S3 => {
            let children: Vec<Individual> =
                simulated_children.into_iter().map(|(_, c)| c).collect();
            improved_survival(pop, children, pop.capacity, &ctx)?
        }
    };
    Ok(EpochOutcome { simulated, partial })
}
