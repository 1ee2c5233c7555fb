//! Synthetic, fully reproducible constrained multi-objective benchmark
//! problems with optional corner perturbations, standing in for an external
//! simulator. Evaluators are pure functions of (design, corner shift).

use std::sync::Arc;

use crate::hv::{hypervolume_exact, HvReference};
use crate::problem::{
    validate_problem, Corner, DesignPoint, Direction, ProblemSpec, ResponseSpec, VariableKind,
    VariableSpec,
};
use crate::{Error, Result};

type Evaluator = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A problem spec bound to its deterministic evaluator.
#[derive(Clone)]
pub struct BenchProblem {
    pub spec: ProblemSpec,
    evaluator: Evaluator,
    /// Brute-force quality ceiling for the nominal-corner Pareto front,
    /// where one has been pinned (see [`BNH_REFERENCE_HV`]).
    pub reference_hv: Option<f64>,
    /// Fixed hypervolume reference point paired with `reference_hv`, in
    /// minimization-convention objective space.
    pub reference_point: Option<Vec<f64>>,
}

impl BenchProblem {
    pub fn evaluate(&self, design: &DesignPoint, corner: &Corner) -> Vec<f64> {
        (self.evaluator)(&design.values, &corner.shift)
    }
}

/// Looks a benchmark problem up by its stable CLI name.
pub fn by_name(name: &str) -> Result<BenchProblem> {
    match name {
        "bnh" => bnh(1),
        "toy-regulator" => toy_regulator(),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Binds a user-supplied problem document to the builtin evaluator matching
/// its name, letting files adjust bounds, constraint thresholds or the corner
/// set while keeping the synthetic response functions.
pub fn from_spec(spec: ProblemSpec) -> Result<BenchProblem> {
    let builtin = by_name(&spec.name)?;
    let spec = validate_problem(spec)?;
    if spec.num_responses() != builtin.spec.num_responses() {
        return Err(Error::InvalidProblem(format!(
            "responses: evaluator '{}' produces {} responses, file declares {}",
            spec.name,
            builtin.spec.num_responses(),
            spec.num_responses()
        )));
    }
    if spec.dim() != builtin.spec.dim() {
        return Err(Error::InvalidProblem(format!(
            "variables: evaluator '{}' takes {} variables, file declares {}",
            spec.name,
            builtin.spec.dim(),
            spec.dim()
        )));
    }
    let want_shift = builtin.spec.corners[0].shift.len();
    if spec.corners[0].shift.len() != want_shift {
        return Err(Error::InvalidProblem(format!(
            "corners[0].shift: evaluator '{}' expects length {}, file declares {}",
            spec.name,
            want_shift,
            spec.corners[0].shift.len()
        )));
    }
    Ok(BenchProblem {
        spec,
        evaluator: builtin.evaluator,
        reference_hv: None,
        reference_point: None,
    })
}

/// Grid resolution behind [`BNH_REFERENCE_HV`].
pub const BNH_REFERENCE_RESOLUTION: usize = 500;
/// Reference point behind [`BNH_REFERENCE_HV`], in (f1, f2).
pub const BNH_REFERENCE_POINT: [f64; 2] = [140.0, 55.0];
/// Pinned nominal-corner reference-front hypervolume for `bnh`, computed once
/// by [`reference_front_hv`] at resolution 500 per axis against (140, 55).
/// Regenerate with the `bnh_reference_hv_regeneration` test.
pub const BNH_REFERENCE_HV: f64 = 5984.388673455223;

/// The classic two-variable, two-objective constrained testbed. Corner k adds
/// the shift `0.05 * (k - (C-1)/2)` to x before evaluation.
pub fn bnh(corners: usize) -> Result<BenchProblem> {
    if corners < 1 {
        return Err(Error::InvalidProblem("bnh needs at least one corner".into()));
    }
    let spec = validate_problem(ProblemSpec {
        name: "bnh".into(),
        variables: vec![
            VariableSpec {
                name: "x".into(),
                kind: VariableKind::Real,
                lower: 0.0,
                upper: 5.0,
            },
            VariableSpec {
                name: "y".into(),
                kind: VariableKind::Real,
                lower: 0.0,
                upper: 3.0,
            },
        ],
        responses: vec![
            ResponseSpec {
                name: "f1".into(),
                direction: Direction::Minimize,
                constraint_bound: None,
                is_objective: true,
            },
            ResponseSpec {
                name: "f2".into(),
                direction: Direction::Minimize,
                constraint_bound: None,
                is_objective: true,
            },
            ResponseSpec {
                name: "g1".into(),
                direction: Direction::Minimize,
                constraint_bound: Some(25.0),
                is_objective: false,
            },
            ResponseSpec {
                name: "g2".into(),
                direction: Direction::Maximize,
                constraint_bound: Some(7.7),
                is_objective: false,
            },
        ],
        corners: (0..corners)
            .map(|k| Corner {
                id: format!("c{k}"),
                shift: vec![0.05 * (k as f64 - (corners as f64 - 1.0) / 2.0)],
            })
            .collect(),
    })?;
    let evaluator: Evaluator = Arc::new(|values, shift| {
        let x = values[0] + shift[0];
        let y = values[1];
        vec![
            4.0 * x * x + 4.0 * y * y,
            (x - 5.0).powi(2) + (y - 5.0).powi(2),
            (x - 5.0).powi(2) + y * y,
            (x - 8.0).powi(2) + (y + 3.0).powi(2),
        ]
    });
    Ok(BenchProblem {
        spec,
        evaluator,
        reference_hv: Some(BNH_REFERENCE_HV),
        reference_point: Some(BNH_REFERENCE_POINT.to_vec()),
    })
}

const TOY_CORNER_GRID: [(f64, f64, f64); 10] = [
    (0.0, 0.0, 0.0),
    (-1.0, -1.0, -1.0),
    (-1.0, -1.0, 1.0),
    (-1.0, 1.0, -1.0),
    (-1.0, 1.0, 1.0),
    (1.0, -1.0, -1.0),
    (1.0, -1.0, 1.0),
    (1.0, 1.0, -1.0),
    (1.0, 1.0, 1.0),
    (1.0, 0.0, 0.0),
];

/// Response formulas for the synthetic regulator. Inputs: six reals in
/// [0, 1], two integer steps in [1, 8] (min-max normalized internally), and
/// the corner's (process, voltage, temperature) shift triple. See the README
/// for the closed forms; constraint bounds were calibrated by a pinned
/// Monte Carlo census to leave roughly half a percent of the design box
/// feasible across all ten corners.
fn toy_regulator_responses(values: &[f64], shift: &[f64]) -> Vec<f64> {
    let (p, v, t) = (shift[0], shift[1], shift[2]);
    let [x0, x1, x2, x3, x4, x5] = values[..6] else { unreachable!() };
    let u6 = (values[6] - 1.0) / 7.0;
    let u7 = (values[7] - 1.0) / 7.0;
    let gain = 20.0 + 30.0 * x0 + 10.0 * x1 * x2 - 12.0 * (x3 - 0.4).powi(2) + 5.0 * u6
        - 2.5 * p
        + 1.2 * v
        - 6.0 * (-3.0 * x4).exp();
    let psrr = 10.0 + 22.0 * x1 + 9.0 * x2 * x4 - 8.0 * (x0 - 0.6).powi(2) + 4.0 * u7
        - 2.0 * t
        + 1.5 * v
        - 5.0 * (-2.5 * x5).exp();
    let bw = 5.0 + 18.0 * x2 + 7.0 * x0 * x5 - 9.0 * (x1 - 0.5).powi(2) + 3.0 * u6
        - 1.8 * p
        - 1.2 * t
        - 4.0 * (-2.0 * x3).exp();
    let margin = 30.0 + 20.0 * x3 + 8.0 * x4 * x5 - 10.0 * (x2 - 0.5).powi(2)
        + 3.0 * (u6 + u7)
        - 2.2 * v
        - 1.5 * t
        - 5.0 * (-2.0 * x0).exp();
    let power = 2.0 + 6.0 * (x0 * x0 + 0.8 * x1 * x1 + 0.6 * x2 * x2) + 2.0 * u6 + 1.5 * u7
        + 1.2 * x4
        + 0.8 * x5
        + 0.5 * p
        + 0.4 * v
        + 0.3 * t;
    let area = 1.0 + 4.0 * (u6 * u6 + u7 * u7) + 2.5 * (x3 + x5) + 1.5 * x0 * x1 + 0.2 * p;
    vec![gain, psrr, bw, margin, power, area]
}

/// A synthetic voltage-regulator-shaped problem: eight design variables (six
/// real, two integer), ten corners with process/voltage/temperature shifts,
/// and six smooth constrained responses of which four are maximized
/// objectives and two are minimized costs.
pub fn toy_regulator() -> Result<BenchProblem> {
    let mut variables: Vec<VariableSpec> = (0..6)
        .map(|i| VariableSpec {
            name: format!("x{i}"),
            kind: VariableKind::Real,
            lower: 0.0,
            upper: 1.0,
        })
        .collect();
    for i in 6..8 {
        variables.push(VariableSpec {
            name: format!("n{i}"),
            kind: VariableKind::Integer,
            lower: 1.0,
            upper: 8.0,
        });
    }
    let maximized = [("gain", 36.0), ("psrr", 21.0), ("bw", 13.0), ("margin", 40.0)];
    let minimized = [("power", 12.5), ("area", 8.5)];
    let mut responses: Vec<ResponseSpec> = maximized
        .iter()
        .map(|&(name, bound)| ResponseSpec {
            name: name.into(),
            direction: Direction::Maximize,
            constraint_bound: Some(bound),
            is_objective: true,
        })
        .collect();
    responses.extend(minimized.iter().map(|&(name, bound)| ResponseSpec {
        name: name.into(),
        direction: Direction::Minimize,
        constraint_bound: Some(bound),
        is_objective: false,
    }));
    let spec = validate_problem(ProblemSpec {
        name: "toy-regulator".into(),
        variables,
        responses,
        corners: TOY_CORNER_GRID
            .iter()
            .enumerate()
            .map(|(i, &(p, v, t))| Corner {
                id: format!("pvt{i}"),
                shift: vec![p, v, t],
            })
            .collect(),
    })?;
    let evaluator: Evaluator = Arc::new(|values, shift| toy_regulator_responses(values, shift));
    Ok(BenchProblem {
        spec,
        evaluator,
        reference_hv: None,
        reference_point: None,
    })
}

/// Brute-force quality ceiling: hypervolume of the nondominated feasible set
/// over a dense grid at the problem's nominal (first) corner, against a fixed
/// reference point. Dense-grid mode only supports up to three variables.
pub fn reference_front_hv(
    problem: &BenchProblem,
    grid_resolution: usize,
    ref_point: &[f64],
) -> Result<f64> {
    let spec = &problem.spec;
    let d = spec.dim();
    if d > 3 {
        return Err(Error::Numeric(format!(
            "dense-grid reference front supports up to 3 variables, problem has {d}"
        )));
    }
    let nominal = &spec.corners[0];
    let axes: Vec<Vec<f64>> = spec
        .variables
        .iter()
        .map(|v| {
            (0..grid_resolution)
                .map(|i| {
                    v.lower + (v.upper - v.lower) * i as f64 / (grid_resolution - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut index = vec![0usize; d];
    let mut feasible_points: Vec<Vec<f64>> = Vec::new();
    loop {
        let values: Vec<f64> = index.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
        let responses = (problem.evaluator)(&values, &nominal.shift);
        let feasible = spec.responses.iter().zip(&responses).all(|(r, &val)| {
            r.constraint_bound.is_none_or(|b| match r.direction {
                Direction::Minimize => val <= b,
                Direction::Maximize => val >= b,
            })
        });
        if feasible {
            let objectives: Vec<f64> = spec
                .responses
                .iter()
                .zip(&responses)
                .filter(|(r, _)| r.is_objective)
                .map(|(r, &val)| match r.direction {
                    Direction::Minimize => val,
                    Direction::Maximize => -val,
                })
                .collect();
            feasible_points.push(objectives);
        }
        // Odometer increment.
        let mut axis = 0;
        loop {
            index[axis] += 1;
            if index[axis] < grid_resolution {
                break;
            }
            index[axis] = 0;
            axis += 1;
            if axis == d {
                return finish_reference_hv(feasible_points, ref_point);
            }
        }
    }
}

fn finish_reference_hv(mut points: Vec<Vec<f64>>, ref_point: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    // Thin to the nondominated subset before the HV sweep (2-D fast path).
    if ref_point.len() == 2 {
        points.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
        let mut nd: Vec<Vec<f64>> = Vec::new();
        let mut best = f64::INFINITY;
        for p in points {
            if p[1] < best {
                best = p[1];
                nd.push(p);
            }
        }
        points = nd;
    }
    hypervolume_exact(&points, &HvReference::raw(ref_point.to_vec()))
}
