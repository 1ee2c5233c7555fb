//! Pits the fast nondominated sort against a brute-force peeling oracle that
//! recomputes every pairwise dominance relation from the definitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modebi::metrics::nondominated_sort;
use modebi::problem::{DesignPoint, Evaluation, Individual};

fn individual(cv: f64, objectives: Vec<f64>) -> Individual {
    Individual {
        design: DesignPoint { values: vec![0.0] },
        eval: Some(Evaluation::simulated(
            objectives.iter().map(|&o| vec![o]).collect(),
        )),
        cv: Some(cv),
        objectives: Some(objectives),
    }
}

/// Constrained dominance straight from the definitions: feasible beats
/// infeasible, lower CV among infeasible, Pareto among feasible.
fn oracle_dominates(a: &Individual, b: &Individual) -> bool {
    let (acv, bcv) = (a.cv(), b.cv());
    if acv == 0.0 && bcv > 0.0 {
        return true;
    }
    if acv > 0.0 && bcv == 0.0 {
        return false;
    }
    if acv > 0.0 && bcv > 0.0 {
        return acv < bcv;
    }
    let (ao, bo) = (a.objectives(), b.objectives());
    ao.iter().zip(bo).all(|(x, y)| x <= y) && ao.iter().zip(bo).any(|(x, y)| x < y)
}

/// O(N^2 M) front peeling: repeatedly extract the set nobody dominates.
fn oracle_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining
                    .iter()
                    .any(|&j| j != i && oracle_dominates(&pop[j], &pop[i]))
            })
            .collect();
        assert!(!front.is_empty(), "dominance must be acyclic");
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

#[test]
fn sort_matches_pairwise_oracle_on_random_populations() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let n = rng.gen_range(1..=200);
        let m = rng.gen_range(2..=4);
        // Mixed feasibility with duplicate-prone discrete objectives.
        let pop: Vec<Individual> = (0..n)
            .map(|_| {
                let cv = if rng.gen_bool(0.5) {
                    0.0
                } else {
                    rng.gen_range(1..20) as f64 / 10.0
                };
                let objectives = (0..m).map(|_| rng.gen_range(0..8) as f64).collect();
                individual(cv, objectives)
            })
            .collect();
        let mut fast = nondominated_sort(&pop);
        let mut oracle = oracle_sort(&pop);
        for f in fast.iter_mut().chain(oracle.iter_mut()) {
            f.sort_unstable();
        }
        assert_eq!(fast, oracle, "case {case} (n={n}, m={m})");
    }
}

#[test]
fn sort_handles_degenerate_populations() {
    // All identical: one front holding everything.
    let pop: Vec<Individual> = (0..10).map(|_| individual(0.0, vec![1.0, 2.0])).collect();
    let fronts = nondominated_sort(&pop);
    assert_eq!(fronts.len(), 1);
    assert_eq!(fronts[0].len(), 10);

    // Strict chain: each individual its own front.
    let pop: Vec<Individual> = (0..5)
        .map(|i| individual(0.0, vec![i as f64, i as f64]))
        .collect();
    let fronts = nondominated_sort(&pop);
    assert_eq!(fronts.len(), 5);
}
