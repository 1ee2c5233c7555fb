//! End-to-end acceptance gate. Each test covers one numbered criterion and
//! prints a single `criterion NN (...): PASS/FAIL` line (run with
//! `--nocapture` to see them); criterion 7 is directional and prints
//! `FLAGGED` instead of failing.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modebi::bench::{self, BNH_REFERENCE_HV};
use modebi::evolve::{apply_de_draw, draw_de, DeDraw};
use modebi::gp::{fit_with_params, KernelParams};
use modebi::harness::{run_algorithm, runlog_csv, Algorithm, RunResult};
use modebi::hv::{hypervolume_exact, hypervolume_mc, HvReference};
use modebi::metrics::nondominated_sort;
use modebi::modebi::{improved_survival, pareto_survival, Scenario, SelectionContext};
use modebi::metrics::{constrained_dominates, CvNormalizer, EPSILON_FLOOR};
use modebi::problem::{
    AlgoConfig, DesignPoint, Evaluation, Individual, Population, ProblemSpec,
};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_gp_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(3..=20);
        let d = rng.gen_range(1..=5);
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (ls, sv, noise) = (
            rng.gen_range(0.2..1.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(1e-4..1e-2),
        );
        let model =
            fit_with_params(&inputs, &targets, KernelParams::isotropic(ls, sv, noise, d))
                .unwrap();

        // Dense oracle: explicit inverse on standardized targets.
        let mean_t = targets.iter().sum::<f64>() / n as f64;
        let var_t = targets.iter().map(|t| (t - mean_t).powi(2)).sum::<f64>() / n as f64;
        let std_t = if var_t.sqrt() > 1e-12 { var_t.sqrt() } else { 1.0 };
        let kernel = |a: &[f64], b: &[f64]| {
            let s: f64 = a.iter().zip(b).map(|(x, y)| ((x - y) / ls).powi(2)).sum();
            sv * (-0.5 * s).exp()
        };
        let mut k = DMatrix::from_fn(n, n, |i, j| kernel(&inputs[i], &inputs[j]));
        for i in 0..n {
            k[(i, i)] += noise;
        }
        let k_inv = k.try_inverse().unwrap();
        let y = DMatrix::from_fn(n, 1, |i, _| (targets[i] - mean_t) / std_t);

        for _ in 0..4 {
            let q: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let kstar = DMatrix::from_fn(n, 1, |i, _| kernel(&inputs[i], &q));
            let o_mean = (kstar.transpose() * &k_inv * &y)[(0, 0)] * std_t + mean_t;
            let o_var =
                (sv - (kstar.transpose() * &k_inv * &kstar)[(0, 0)]).max(0.0) * std_t * std_t;
            let (mean, std) = model.posterior(&q);
            worst = worst.max((mean - o_mean).abs()).max((std * std - o_var).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "01 (gp-oracle-equivalence)",
        worst < 1e-8 && elapsed.as_secs_f64() < 5.0,
        &format!("max abs deviation {worst:.3e}, {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_hypervolume_correctness() {
    let start = Instant::now();
    let three = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
    let exact3 = hypervolume_exact(&three, &HvReference::raw(vec![4.0, 4.0])).unwrap();
    let mut ok = exact3 == 6.0;
    let mut worst_rel = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let m = if case % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(3..=12);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0.0..0.9)).collect())
            .collect();
        let reference = HvReference::raw(vec![1.0; m]);
        let exact = hypervolume_exact(&pts, &reference).unwrap();
        let mc = hypervolume_mc(&pts, &reference, 1_000_000, &mut rng);
        let rel = (exact - mc).abs() / exact.max(1e-12);
        worst_rel = worst_rel.max(rel);
        ok &= rel < 0.01;
    }
    let elapsed = start.elapsed();
    verdict(
        "02 (hypervolume-correctness)",
        ok && elapsed.as_secs_f64() < 30.0,
        &format!("3-point HV {exact3}, worst exact/MC gap {worst_rel:.4}, {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- criterion 3

fn synthetic_individual(cv: f64, objectives: Vec<f64>) -> Individual {
    Individual {
        design: DesignPoint { values: vec![0.0] },
        eval: Some(Evaluation::simulated(
            objectives.iter().map(|&o| vec![o]).collect(),
        )),
        cv: Some(cv),
        objectives: Some(objectives),
    }
}

#[test]
fn criterion_03_sorting_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..=200);
        let m = rng.gen_range(2..=4);
        let pop: Vec<Individual> = (0..n)
            .map(|_| {
                let cv = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..2.0) };
                synthetic_individual(cv, (0..m).map(|_| rng.gen_range(0..6) as f64).collect())
            })
            .collect();
        let mut fast = nondominated_sort(&pop);
        // O(N^2 M) peeling oracle.
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut oracle: Vec<Vec<usize>> = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining
                        .iter()
                        .any(|&j| j != i && constrained_dominates(&pop[j], &pop[i]))
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            oracle.push(front);
        }
        for f in fast.iter_mut().chain(oracle.iter_mut()) {
            f.sort_unstable();
        }
        assert_eq!(fast, oracle);
        checked += 1;
    }
    let elapsed = start.elapsed();
    verdict(
        "03 (sorting-oracle)",
        checked == 100 && elapsed.as_secs_f64() < 10.0,
        &format!("{checked} populations matched, {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn criterion_04_de_operator_algebra() {
    let spec = ProblemSpec::from_json(
        r#"{
            "name": "cube",
            "variables": [
                {"name": "a", "kind": "Real", "lower": -10.0, "upper": 10.0},
                {"name": "b", "kind": "Real", "lower": -10.0, "upper": 10.0},
                {"name": "c", "kind": "Real", "lower": -10.0, "upper": 10.0}
            ],
            "responses": [
                {"name": "f1", "direction": "Minimize", "is_objective": true},
                {"name": "f2", "direction": "Minimize", "is_objective": true}
            ],
            "corners": [{"id": "nom", "shift": [0.0]}]
        }"#,
    )
    .unwrap();
    let designs_owned: Vec<DesignPoint> = vec![
        DesignPoint { values: vec![0.0, 1.0, 2.0] },
        DesignPoint { values: vec![1.0, -1.0, 0.5] },
        DesignPoint { values: vec![2.0, 3.0, 1.0] },
        DesignPoint { values: vec![0.5, 2.0, 4.0] },
    ];
    let designs: Vec<&DesignPoint> = designs_owned.iter().collect();

    // F = 0: masked genes copy donor r1 exactly.
    let draw = DeDraw {
        r1: 1,
        r2: 2,
        r3: 3,
        j_rand: 1,
        crossover_mask: vec![true, true, false],
    };
    let f0 = apply_de_draw(&designs, 0, &draw, 0.0, &spec).unwrap();
    let f0_ok = f0.values == vec![1.0, -1.0, 2.0];

    // CR = 1: every gene crosses over, and the draw's mask says so.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cr1_ok = (0..100).all(|_| {
        let d = draw_de(4, 0, 3, 1.0, &mut rng);
        d.crossover_mask.iter().all(|&b| b)
    });

    // j_rand guarantee over 10^4 draws at the lowest crossover rate.
    let mut mask_ok = true;
    for _ in 0..10_000 {
        let d = draw_de(8, 2, 6, 0.01, &mut rng);
        mask_ok &= d.crossover_mask.iter().any(|&b| b) && d.crossover_mask[d.j_rand];
    }
    verdict(
        "04 (de-operator-algebra)",
        f0_ok && cr1_ok && mask_ok,
        &format!("F=0 {f0_ok}, CR=1 {cr1_ok}, 10^4-draw j_rand {mask_ok}"),
    );
}

// ------------------------------------------------- shared campaign fixtures

/// Settings shared by the toy-regulator criteria: full-scale population and
/// budget, with surrogate-training caps sized for the test machine. Caps only
/// trade model fidelity for speed; the algorithms are unchanged.
fn toy_config(seed: u64) -> AlgoConfig {
    let mut c = AlgoConfig::default();
    c.pop_size = 60;
    c.budget = 12_000;
    c.gp_train_cap = 300;
    c.gp_hyper_cap = 128;
    c.max_pop = 30;
    c.seed = seed;
    c
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct ToyRuns {
    gde3: Vec<RunResult>,
    s2: Vec<RunResult>,
    s3: Vec<RunResult>,
}

static TOY: OnceLock<ToyRuns> = OnceLock::new();

fn toy_runs() -> &'static ToyRuns {
    TOY.get_or_init(|| {
        let problem = bench::toy_regulator().unwrap();
        let run_all = |algo: Algorithm| -> Vec<RunResult> {
            SEEDS
                .iter()
                .map(|&s| run_algorithm(&problem, algo, &toy_config(s)).unwrap())
                .collect()
        };
        ToyRuns {
            gde3: run_all(Algorithm::Gde3),
            s2: run_all(Algorithm::Modebi(Scenario::S2)),
            s3: run_all(Algorithm::Modebi(Scenario::S3)),
        }
    })
}

static BNH: OnceLock<Vec<RunResult>> = OnceLock::new();

fn bnh_runs() -> &'static Vec<RunResult> {
    BNH.get_or_init(|| {
        let problem = bench::bnh(1).unwrap();
        SEEDS
            .iter()
            .map(|&s| {
                let mut c = AlgoConfig::default();
                c.pop_size = 60;
                c.budget = 12_000;
                c.seed = s;
                run_algorithm(&problem, Algorithm::Gde3, &c).unwrap()
            })
            .collect()
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_gde3_convergence_on_bnh() {
    let start = Instant::now();
    let mut hvs: Vec<f64> = bnh_runs()
        .iter()
        .map(|r| r.summary.final_hv_fixed_ref.unwrap_or(0.0))
        .collect();
    let med = median(&mut hvs);
    let ratio = med / BNH_REFERENCE_HV;
    let elapsed = start.elapsed();
    verdict(
        "05 (gde3-convergence-bnh)",
        ratio >= 0.90 && elapsed.as_secs_f64() < 120.0,
        &format!("median HV {med:.1} = {:.1}% of reference, {elapsed:.2?}", ratio * 100.0),
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_06_preselection_benefit() {
    let start = Instant::now();
    let runs = toy_runs();
    let first = |rs: &[RunResult]| -> Vec<Option<u64>> {
        rs.iter().map(|r| r.summary.first_feasible_sims).collect()
    };
    let med_opt = |mut v: Vec<Option<u64>>| -> Option<u64> {
        v.sort_by_key(|x| x.unwrap_or(u64::MAX));
        v[v.len() / 2]
    };
    let s2_first = first(&runs.s2);
    let gde3_first = first(&runs.gde3);
    let s2_feasible_runs = runs
        .s2
        .iter()
        .filter(|r| r.summary.feasible_count > 0)
        .count();
    let s2_med = med_opt(s2_first.clone());
    let gde3_med = med_opt(gde3_first.clone());
    let strictly_lower = match (s2_med, gde3_med) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    let elapsed = start.elapsed();
    verdict(
        "06 (preselection-benefit)",
        strictly_lower && s2_feasible_runs >= 4 && elapsed.as_secs_f64() < 900.0,
        &format!(
            "first-feasible medians s2 {s2_med:?} vs gde3 {gde3_med:?}, s2 feasible {s2_feasible_runs}/5, {elapsed:.2?}"
        ),
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_07_scenario_ordering_flagged() {
    let runs = toy_runs();
    // Fixed common reference across every compared population so the HV
    // numbers are commensurable between runs and scenarios.
    let all_objs: Vec<Vec<f64>> = runs
        .s2
        .iter()
        .chain(&runs.s3)
        .flat_map(|r| r.population.members.iter())
        .filter(|m| m.is_feasible())
        .map(|m| m.objectives().to_vec())
        .collect();
    let reference = HvReference::from_observed(&all_objs).expect("feasible members");
    let pop_hv = |r: &RunResult| -> f64 {
        let feas: Vec<Vec<f64>> = r
            .population
            .members
            .iter()
            .filter(|m| m.is_feasible())
            .map(|m| m.objectives().to_vec())
            .collect();
        hypervolume_exact(&feas, &reference).unwrap_or(0.0)
    };
    let mut s2_hv: Vec<f64> = runs.s2.iter().map(pop_hv).collect();
    let mut s3_hv: Vec<f64> = runs.s3.iter().map(pop_hv).collect();
    let (m2, m3) = (median(&mut s2_hv), median(&mut s3_hv));
    // Directional and non-blocking: the ordering is problem-dependent.
    let pass = m2 >= m3;
    println!(
        "criterion 07 (scenario-ordering): {} (median common-ref HV s2 {m2:.4} vs s3 {m3:.4})",
        if pass { "PASS" } else { "FLAGGED" }
    );
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_08_budget_exactness() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, runs, corners, pop) in [
        ("bnh/gde3", bnh_runs().as_slice(), 1u64, 60u64),
        ("toy/gde3", toy_runs().gde3.as_slice(), 10, 60),
        ("toy/s2", toy_runs().s2.as_slice(), 10, 60),
        ("toy/s3", toy_runs().s3.as_slice(), 10, 60),
    ] {
        for r in runs {
            let s = &r.summary;
            let leftover = s.budget_total - s.sims_used;
            ok &= leftover < corners;
            ok &= r.rows[0].sims_used == pop * corners;
            ok &= r.rows.last().unwrap().sims_used == s.sims_used;
            if !ok {
                detail = format!(
                    "{name} seed {}: used {} of {}, init row {}",
                    s.seed, s.sims_used, s.budget_total, r.rows[0].sims_used
                );
                break;
            }
        }
    }
    if ok {
        detail = "all runs spent whole-design budgets with exact init cost".into();
    }
    verdict("08 (budget-exactness)", ok, &detail);
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_byte_determinism() {
    let bnh = bench::bnh(1).unwrap();
    let mut c = AlgoConfig::default();
    c.pop_size = 60;
    c.budget = 12_000;
    c.seed = 3;
    let a = run_algorithm(&bnh, Algorithm::Gde3, &c).unwrap();
    let b = run_algorithm(&bnh, Algorithm::Gde3, &c).unwrap();
    let bnh_same = runlog_csv(&a.rows, &a.summary) == runlog_csv(&b.rows, &b.summary);

    let toy = bench::toy_regulator().unwrap();
    let mut tc = toy_config(2);
    tc.budget = 1_800; // shortened rerun; the full campaign is cached above
    let ta = run_algorithm(&toy, Algorithm::Modebi(Scenario::S2), &tc).unwrap();
    let tb = run_algorithm(&toy, Algorithm::Modebi(Scenario::S2), &tc).unwrap();
    let toy_same = runlog_csv(&ta.rows, &ta.summary) == runlog_csv(&tb.rows, &tb.summary);

    verdict(
        "09 (byte-determinism)",
        bnh_same && toy_same,
        &format!("gde3/bnh identical {bnh_same}, modebi-s2/toy identical {toy_same}"),
    );
}

// --------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_survival_invariants() {
    let start = Instant::now();
    let spec = ProblemSpec::from_json(
        r#"{
            "name": "pair",
            "variables": [{"name": "x", "kind": "Real", "lower": 0.0, "upper": 1.0}],
            "responses": [
                {"name": "f1", "direction": "Minimize", "constraint_bound": 100.0, "is_objective": true},
                {"name": "f2", "direction": "Minimize", "constraint_bound": 100.0, "is_objective": true}
            ],
            "corners": [{"id": "nom", "shift": [0.0]}]
        }"#,
    )
    .unwrap();
    let norm = CvNormalizer {
        denominators: vec![1.0, 1.0],
        epsilon_floor: EPSILON_FLOOR,
    };
    let config = AlgoConfig::default();
    let hv_ref = HvReference::raw(vec![10.0, 10.0]);
    let ctx = SelectionContext {
        spec: &spec,
        norm: &norm,
        hv_ref: &hv_ref,
        config: &config,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rand_ind = |rng: &mut ChaCha8Rng| {
        let cv = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..2.0) };
        synthetic_individual(cv, vec![rng.gen_range(0.0..9.0), rng.gen_range(0.0..9.0)])
    };

    for trial in 0..50_000u32 {
        let n = rng.gen_range(2..=6);
        let pool_extra = rng.gen_range(0..=4);
        let pop = Population::new((0..n).map(|_| rand_ind(&mut rng)).collect(), n);
        let selected: Vec<Individual> = (0..pool_extra).map(|_| rand_ind(&mut rng)).collect();
        let feasible_in_pool = pop.members.iter().chain(&selected).filter(|m| m.is_feasible()).count();
        let next = improved_survival(&pop, selected, n, &ctx).unwrap();
        let survivors_infeasible = next.members.iter().filter(|m| !m.is_feasible()).count();
        let survivors_feasible = next.members.len() - survivors_infeasible;
        // An infeasible survivor implies every feasible pool member survived.
        assert!(
            survivors_infeasible == 0 || survivors_feasible == feasible_in_pool,
            "trial {trial}: dropped a feasible member while keeping an infeasible one"
        );
    }

    for trial in 0..50_000u32 {
        let n = rng.gen_range(2..=6);
        let pop = Population::new((0..n).map(|_| rand_ind(&mut rng)).collect(), n);
        let pairs = rng.gen_range(0..=n);
        let selected: Vec<(usize, Individual)> =
            (0..pairs).map(|i| (i, rand_ind(&mut rng))).collect();
        let next = pareto_survival(&pop, &selected, n).unwrap();
        // Individuals carry continuous random objectives, so matching on the
        // (objectives, cv) pair identifies them uniquely within a trial.
        let key = |ind: &Individual| (ind.objectives().to_vec(), ind.cv());
        for (pi, child) in &selected {
            let parent = &pop.members[*pi];
            // The constrained-dominated side of each pair must not survive.
            if constrained_dominates(child, parent) {
                assert!(
                    !next.members.iter().any(|m| key(m) == key(parent)),
                    "trial {trial}: dominated parent survived"
                );
            }
            if constrained_dominates(parent, child) {
                assert!(
                    !next.members.iter().any(|m| key(m) == key(child)),
                    "trial {trial}: dominated child survived"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "10 (survival-invariants)",
        elapsed.as_secs_f64() < 60.0,
        &format!("10^5 randomized trials, {elapsed:.2?}"),
    );
}
