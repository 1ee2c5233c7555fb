//! Solution-quality machinery: normalized constraint violation, Pareto and
//! constrained dominance, nondominated sorting, crowding distance and the
//! distribution metric.

use crate::problem::{Direction, Individual, ProblemSpec, ResponseSpec};
use crate::{Error, Result};

/// Floor for CV denominators so constraints never violated in the initial
/// population still yield finite (large) normalized violations.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Per-(constraint, corner) normalization denominators, fixed from the
/// initial population P0. Slot order: constrained responses in spec order,
/// each expanded over corners in spec order.
#[derive(Debug, Clone)]
pub struct CvNormalizer {
    pub denominators: Vec<f64>,
    pub epsilon_floor: f64,
}

/// Direction-aware distance past the constraint bound; 0 when satisfied.
pub fn raw_violation(response_value: f64, spec: &ResponseSpec) -> Result<f64> {
    let bound = spec.constraint_bound.ok_or_else(|| {
        Error::Numeric(format!("response '{}' has no constraint bound", spec.name))
    })?;
    Ok(match spec.direction {
        Direction::Minimize => (response_value - bound).max(0.0),
        Direction::Maximize => (bound - response_value).max(0.0),
    })
}

/// Builds the CV normalizer from the fully simulated initial population:
/// each slot's denominator is the max raw violation observed in P0, floored.
pub fn build_normalizer(initial_pop: &[Individual], spec: &ProblemSpec) -> Result<CvNormalizer> {
    if initial_pop.is_empty() {
        return Err(Error::Numeric("empty initial population".into()));
    }
    let constraints = spec.constraint_indices();
    let c = spec.num_corners();
    let mut denominators = vec![EPSILON_FLOOR; constraints.len() * c];
    for ind in initial_pop {
        let eval = ind.eval.as_ref().ok_or_else(|| {
            Error::Numeric("unevaluated individual in initial population".into())
        })?;
        for (slot_base, &ri) in constraints.iter().enumerate() {
            for ci in 0..c {
                let v = raw_violation(eval.responses[ri][ci], &spec.responses[ri])?;
                let d = &mut denominators[slot_base * c + ci];
                if v > *d {
                    *d = v;
                }
            }
        }
    }
    Ok(CvNormalizer {
        denominators,
        epsilon_floor: EPSILON_FLOOR,
    })
}

/// Mean normalized violation over all (constraint, corner) slots, computed
/// from a response matrix. Zero iff every slot is satisfied.
pub fn constraint_violation_of(
    responses: &[Vec<f64>],
    norm: &CvNormalizer,
    spec: &ProblemSpec,
) -> Result<f64> {
    let constraints = spec.constraint_indices();
    let c = spec.num_corners();
    if constraints.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (slot_base, &ri) in constraints.iter().enumerate() {
        for ci in 0..c {
            let v = raw_violation(responses[ri][ci], &spec.responses[ri])?;
            sum += v / norm.denominators[slot_base * c + ci];
        }
    }
    Ok(sum / (constraints.len() * c) as f64)
}

pub fn constraint_violation(
    ind: &Individual,
    norm: &CvNormalizer,
    spec: &ProblemSpec,
) -> Result<f64> {
    let eval = ind
        .eval
        .as_ref()
        .ok_or_else(|| Error::Numeric("constraint_violation on unevaluated individual".into()))?;
    constraint_violation_of(&eval.responses, norm, spec)
}

/// True iff `a` is componentwise <= `b` with at least one strict <
/// (minimization convention).
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Feasibility-first dominance: feasible beats infeasible, lower CV beats
/// higher among infeasible, Pareto dominance among feasible.
pub fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    let (cva, cvb) = (a.cv(), b.cv());
    match (cva == 0.0, cvb == 0.0) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => cva < cvb,
        (true, true) => pareto_dominates(a.objectives(), b.objectives()),
    }
}

/// Fast nondominated sort under constrained dominance. Fronts partition the
/// input; within a front, indices keep input order.
pub fn nondominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&pop[i], &pop[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if constrained_dominates(&pop[j], &pop[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Crowding distance per member of one front: sum over objectives of the
/// sorted-neighbor gap, normalized per objective by its range. Boundary
/// members (and every member of a front of size <= 2) get +infinity.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut dist = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| front[a][obj].partial_cmp(&front[b][obj]).unwrap());
        let lo = front[order[0]][obj];
        let hi = front[order[n - 1]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue; // degenerate objective contributes nothing
        }
        for w in 1..n - 1 {
            let gap = (front[order[w + 1]][obj] - front[order[w - 1]][obj]) / range;
            dist[order[w]] += gap;
        }
    }
    dist
}

/// Distribution metric: spread and uniformity of the per-objective
/// projections, normalized by (nadir - ideal). Per objective m the sorted
/// values give consecutive gaps with mean mu and standard deviation sigma,
/// and spread S = max - min; the metric is the mean over objectives of
/// S / (1 + sigma/mu), with the term 0 when mu = 0.
pub fn distribution_metric(pop_objectives: &[Vec<f64>], ideal: &[f64], nadir: &[f64]) -> f64 {
    let n = pop_objectives.len();
    if n < 2 {
        return 0.0;
    }
    let m = ideal.len();
    let mut total = 0.0;
    for obj in 0..m {
        let range = nadir[obj] - ideal[obj];
        let scale = if range > 0.0 { range } else { 1.0 };
        let mut vals: Vec<f64> = pop_objectives
            .iter()
            .map(|p| (p[obj] - ideal[obj]) / scale)
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spread = vals[n - 1] - vals[0];
        if spread <= 0.0 {
            continue;
        }
        let gaps: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        let mu = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if mu == 0.0 {
            continue;
        }
        let var = gaps.iter().map(|g| (g - mu).powi(2)).sum::<f64>() / gaps.len() as f64;
        let sigma = var.sqrt();
        total += spread / (1.0 + sigma / mu);
    }
    total / m as f64
}
