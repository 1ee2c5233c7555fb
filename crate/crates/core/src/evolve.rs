//! DE/rand/1/bin variation and the vanilla GDE3 baseline: parent-vs-offspring
//! constrained-dominance selection with nondominated pruning back to N.

use rand::Rng;

use crate::metrics::{
    constrained_dominates, constraint_violation_of, crowding_distance, nondominated_sort,
    CvNormalizer,
};
use crate::problem::{
    aggregate_worst_case, repair_design, AlgoConfig, DesignPoint, Evaluation, Individual,
    Population, ProblemSpec, Simulate,
};
use crate::{Error, Result};

/// The random draws behind one DE/rand/1/bin variation: three distinct donors
/// (all different from the target), the forced-crossover dimension, and the
/// per-gene crossover mask.
#[derive(Debug, Clone)]
pub struct DeDraw {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
    pub j_rand: usize,
    pub crossover_mask: Vec<bool>,
}

/// Draws donors and the crossover mask in a fixed order so a seeded RNG
/// reproduces the exact variation stream.
pub fn draw_de<R: Rng>(pop_size: usize, target: usize, dim: usize, cr: f64, rng: &mut R) -> DeDraw {
    debug_assert!(pop_size >= 4);
    let mut pick_distinct = |taken: &[usize]| loop {
        let c = rng.gen_range(0..pop_size);
        if c != target && !taken.contains(&c) {
            return c;
        }
    };
    let r1 = pick_distinct(&[]);
    let r2 = pick_distinct(&[r1]);
    let r3 = pick_distinct(&[r1, r2]);
    let j_rand = rng.gen_range(0..dim);
    let crossover_mask = (0..dim)
        .map(|j| rng.gen_range(0.0..1.0) < cr || j == j_rand)
        .collect();
    DeDraw {
        r1,
        r2,
        r3,
        j_rand,
        crossover_mask,
    }
}

/// Applies a draw to the population: masked genes take
/// `p_r1 + F * (p_r2 - p_r3)`, the rest come from the target parent. The
/// result is repaired into bounds (with integer rounding).
pub fn apply_de_draw(
    designs: &[&DesignPoint],
    target: usize,
    draw: &DeDraw,
    f: f64,
    spec: &ProblemSpec,
) -> Result<DesignPoint> {
    let dim = spec.dim();
    let mut values = Vec::with_capacity(dim);
    for j in 0..dim {
        let v = if draw.crossover_mask[j] {
            designs[draw.r1].values[j]
                + f * (designs[draw.r2].values[j] - designs[draw.r3].values[j])
        } else {
            designs[target].values[j]
        };
        values.push(v);
    }
    repair_design(&values, spec)
}

/// One DE/rand/1/bin offspring for the given target index.
pub fn de_variation<R: Rng>(
    pop: &Population,
    target: usize,
    f: f64,
    cr: f64,
    spec: &ProblemSpec,
    rng: &mut R,
) -> Result<DesignPoint> {
    if pop.len() < 4 {
        return Err(Error::Numeric(format!(
            "DE variation needs a population of at least 4, got {}",
            pop.len()
        )));
    }
    let designs: Vec<&DesignPoint> = pop.members.iter().map(|m| &m.design).collect();
    let draw = draw_de(pop.len(), target, spec.dim(), cr, rng);
    apply_de_draw(&designs, target, &draw, f, spec)
}

/// Builds an evaluated individual from a simulated response matrix.
pub fn evaluated_individual(
    design: DesignPoint,
    eval: Evaluation,
    spec: &ProblemSpec,
    norm: &CvNormalizer,
) -> Result<Individual> {
    let (objectives, _) = aggregate_worst_case(&eval.responses, spec);
    let cv = constraint_violation_of(&eval.responses, norm, spec)?;
    Ok(Individual {
        design,
        eval: Some(eval),
        cv: Some(cv),
        objectives: Some(objectives),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct EpochOutcome {
    /// Designs actually simulated this epoch.
    pub simulated: usize,
    /// True when the budget truncated the epoch.
    pub partial: bool,
}

/// One vanilla GDE3 epoch: one offspring per member, all simulated, pairwise
/// constrained-dominance survival (keep both when incomparable), then prune
/// back to N. Newly simulated individuals are appended to `archive`.
pub fn gde3_epoch<R: Rng>(
    pop: &mut Population,
    sim: &mut dyn Simulate,
    norm: &CvNormalizer,
    spec: &ProblemSpec,
    config: &AlgoConfig,
    rng: &mut R,
    archive: &mut Vec<Individual>,
) -> Result<EpochOutcome> {
    let n = pop.len();
    let mut offspring_designs = Vec::with_capacity(n);
    for i in 0..n {
        offspring_designs.push(de_variation(pop, i, config.f, config.cr, spec, rng)?);
    }
    let (evals, partial) = sim.simulate(&offspring_designs);
    let simulated = evals.len();

    let mut next: Vec<Individual> = Vec::with_capacity(n + simulated);
    for (i, eval) in evals.into_iter().enumerate() {
        let child = evaluated_individual(offspring_designs[i].clone(), eval, spec, norm)?;
        archive.push(child.clone());
        let parent = &pop.members[i];
        if constrained_dominates(&child, parent) {
            next.push(child);
        } else if constrained_dominates(parent, &child) {
            next.push(parent.clone());
        } else {
            next.push(parent.clone());
            next.push(child);
        }
    }
    // Parents whose offspring never got simulated pass through unchanged.
    for i in simulated..n {
        next.push(pop.members[i].clone());
    }
    *pop = nondominated_prune(next, pop.capacity)?;
    Ok(EpochOutcome { simulated, partial })
}

/// Fills by ascending Pareto front; the partially admitted front is filtered
/// by descending crowding distance, ties by input index.
pub fn nondominated_prune(members: Vec<Individual>, n: usize) -> Result<Population> {
    if members.len() < n {
        return Err(Error::Numeric(format!(
            "cannot prune {} members up to size {}",
            members.len(),
            n
        )));
    }
    let fronts = nondominated_sort(&members);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend_from_slice(&front);
            if keep.len() == n {
                break;
            }
            continue;
        }
        let objs: Vec<Vec<f64>> = front
            .iter()
            .map(|&i| members[i].objectives().to_vec())
            .collect();
        let cd = crowding_distance(&objs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| cd[b].partial_cmp(&cd[a]).unwrap().then(front[a].cmp(&front[b])));
        keep.extend(order.into_iter().take(n - keep.len()).map(|k| front[k]));
        break;
    }
    keep.sort_unstable();
    let selected = keep.into_iter().map(|i| members[i].clone()).collect();
    Ok(Population::new(selected, n))
}
