//! Domain types shared by all modules: problem definition, design points,
//! evaluations, individuals, populations and the algorithm configuration.
//!
//! All objectives are handled internally in minimization convention;
//! `Maximize` responses are negated when aggregated into objective vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableKind {
    Real,
    Integer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// A response either carries a constraint bound (a threshold it must satisfy
/// in its stated direction: `<= bound` for `Minimize`, `>= bound` for
/// `Maximize`), is an objective, or both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub name: String,
    pub direction: Direction,
    #[serde(default)]
    pub constraint_bound: Option<f64>,
    #[serde(default)]
    pub is_objective: bool,
}

/// One operating-condition corner. The shift vector perturbs the evaluator's
/// inputs and doubles as the corner's encoding for the surrogate model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corner {
    pub id: String,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub variables: Vec<VariableSpec>,
    pub responses: Vec<ResponseSpec>,
    pub corners: Vec<Corner>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn num_responses(&self) -> usize {
        self.responses.len()
    }

    pub fn num_corners(&self) -> usize {
        self.corners.len()
    }

    /// Indices of objective responses, in spec order.
    pub fn objective_indices(&self) -> Vec<usize> {
        self.responses
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_objective)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of constrained responses, in spec order.
    pub fn constraint_indices(&self) -> Vec<usize> {
        self.responses
            .iter()
            .enumerate()
            .filter(|(_, r)| r.constraint_bound.is_some())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn num_objectives(&self) -> usize {
        self.responses.iter().filter(|r| r.is_objective).count()
    }

    /// Loads and validates a problem definition from its JSON document.
    /// Unknown fields are rejected by the schema.
    pub fn from_json(json: &str) -> Result<ProblemSpec> {
        let spec: ProblemSpec = serde_json::from_str(json)?;
        validate_problem(spec)
    }
}

/// Checks every type invariant, reporting the first violation with a field path.
pub fn validate_problem(spec: ProblemSpec) -> Result<ProblemSpec> {
    if spec.variables.is_empty() {
        return Err(Error::InvalidProblem("variables: at least one required".into()));
    }
    for (i, v) in spec.variables.iter().enumerate() {
        if !v.lower.is_finite() || !v.upper.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "variables[{i}].bounds: non-finite"
            )));
        }
        if v.lower >= v.upper {
            return Err(Error::InvalidProblem(format!(
                "variables[{i}]: degenerate bound (lower {} >= upper {})",
                v.lower, v.upper
            )));
        }
        if v.kind == VariableKind::Integer && (v.lower.fract() != 0.0 || v.upper.fract() != 0.0) {
            return Err(Error::InvalidProblem(format!(
                "variables[{i}]: integer variable requires whole-number bounds"
            )));
        }
    }
    for (i, r) in spec.responses.iter().enumerate() {
        if r.constraint_bound.is_none() && !r.is_objective {
            return Err(Error::InvalidProblem(format!(
                "responses[{i}]: needs constraint_bound, is_objective, or both"
            )));
        }
        if let Some(b) = r.constraint_bound {
            if !b.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "responses[{i}].constraint_bound: non-finite"
                )));
            }
        }
    }
    if spec.num_objectives() < 2 {
        return Err(Error::InvalidProblem(
            "responses: at least two objectives required".into(),
        ));
    }
    if spec.corners.is_empty() {
        return Err(Error::InvalidProblem("corners: at least one required".into()));
    }
    let shift_len = spec.corners[0].shift.len();
    for (i, c) in spec.corners.iter().enumerate() {
        if c.shift.len() != shift_len {
            return Err(Error::InvalidProblem(format!(
                "corners[{i}].shift: length {} != {}",
                c.shift.len(),
                shift_len
            )));
        }
        if c.shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidProblem(format!("corners[{i}].shift: non-finite")));
        }
        if spec.corners[..i].iter().any(|p| p.id == c.id) {
            return Err(Error::InvalidProblem(format!(
                "corners[{i}].id: duplicate '{}'",
                c.id
            )));
        }
    }
    Ok(spec)
}

/// A concrete design: one value per decision variable, within bounds, with
/// integer variables holding whole numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub values: Vec<f64>,
}

/// Clamps each coordinate to its bounds, then rounds integer coordinates
/// half-away-from-zero. Clamp precedes round so integer values stay in bounds.
pub fn repair_design(values: &[f64], spec: &ProblemSpec) -> Result<DesignPoint> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design values"));
    }
    let repaired = values
        .iter()
        .zip(&spec.variables)
        .map(|(&v, var)| {
            let c = v.clamp(var.lower, var.upper);
            match var.kind {
                VariableKind::Real => c,
                VariableKind::Integer => c.round(),
            }
        })
        .collect();
    Ok(DesignPoint { values: repaired })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalSource {
    Simulated,
    Surrogate,
}

/// Per-design evaluation: a response x corner matrix, plus a matching
/// standard-deviation matrix for surrogate evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    /// Row-major, `responses[r][c]` for response r at corner c.
    pub responses: Vec<Vec<f64>>,
    /// Present iff `source == Surrogate`; nonnegative entries.
    pub uncertainty: Option<Vec<Vec<f64>>>,
    pub source: EvalSource,
}

impl Evaluation {
    pub fn simulated(responses: Vec<Vec<f64>>) -> Self {
        Evaluation {
            responses,
            uncertainty: None,
            source: EvalSource::Simulated,
        }
    }

    pub fn surrogate(means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>) -> Self {
        Evaluation {
            responses: means,
            uncertainty: Some(stds),
            source: EvalSource::Surrogate,
        }
    }
}

/// Worst-case aggregation across corners: max of each response over corners
/// for `Minimize`, min for `Maximize`. Returns the objective vector in
/// minimization convention (`Maximize` objectives negated) and the raw
/// per-response worst values.
pub fn aggregate_worst_case(
    responses: &[Vec<f64>],
    spec: &ProblemSpec,
) -> (Vec<f64>, Vec<f64>) {
    let per_response_worst: Vec<f64> = responses
        .iter()
        .zip(&spec.responses)
        .map(|(row, r)| match r.direction {
            Direction::Minimize => row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Direction::Maximize => row.iter().cloned().fold(f64::INFINITY, f64::min),
        })
        .collect();
    let objectives = spec
        .responses
        .iter()
        .zip(&per_response_worst)
        .filter(|(r, _)| r.is_objective)
        .map(|(r, &w)| match r.direction {
            Direction::Minimize => w,
            Direction::Maximize => -w,
        })
        .collect();
    (objectives, per_response_worst)
}

/// One design point with (optionally) its evaluation and the cached
/// constraint violation and minimization-convention objective vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Individual {
    pub design: DesignPoint,
    pub eval: Option<Evaluation>,
    pub cv: Option<f64>,
    pub objectives: Option<Vec<f64>>,
}

impl Individual {
    pub fn unevaluated(design: DesignPoint) -> Self {
        Individual {
            design,
            eval: None,
            cv: None,
            objectives: None,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        self.eval.is_some()
    }

    pub fn cv(&self) -> f64 {
        self.cv.expect("individual not evaluated")
    }

    pub fn is_feasible(&self) -> bool {
        self.cv() == 0.0
    }

    pub fn objectives(&self) -> &[f64] {
        self.objectives.as_deref().expect("individual not evaluated")
    }
}

/// Fixed-capacity set of individuals. The member count may transiently exceed
/// the capacity between offspring insertion and survival pruning.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Individual>,
    pub capacity: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>, capacity: usize) -> Self {
        Population { members, capacity }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Indices of feasible members.
    pub fn feasible_indices(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_feasible())
            .map(|(i, _)| i)
            .collect()
    }
}

fn default_pop_size() -> usize {
    100
}
fn default_f() -> f64 {
    0.5
}
fn default_cr() -> f64 {
    0.9
}
fn default_k() -> f64 {
    2.0
}
fn default_multiplier() -> usize {
    10
}
fn default_batch() -> usize {
    50
}
fn default_max_pop() -> usize {
    50
}
fn default_hv_fraction() -> f64 {
    0.5
}
fn default_gp_train_cap() -> usize {
    2000
}
fn default_gp_hyper_cap() -> usize {
    256
}
fn default_sim_cost_s() -> f64 {
    60.0
}

/// Algorithm configuration. JSON config files may override any subset of
/// fields; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    /// Population size N.
    #[serde(default = "default_pop_size")]
    pub pop_size: usize,
    /// DE step size F.
    #[serde(default = "default_f")]
    pub f: f64,
    /// DE crossover rate CR.
    #[serde(default = "default_cr")]
    pub cr: f64,
    /// LCB exploration weight K.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Offspring generated per parent before preselection.
    #[serde(default = "default_multiplier")]
    pub offspring_multiplier: usize,
    /// Preselected offspring simulated per epoch; defaults to N/4.
    #[serde(default)]
    pub replace_quota: Option<usize>,
    /// Total simulation budget in (design, corner) evaluations.
    #[serde(default)]
    pub budget: u64,
    /// Parallel simulation batch size.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Cap on population members considered in pooled-selection HV scoring.
    #[serde(default = "default_max_pop")]
    pub max_pop: usize,
    /// Fraction of feasible survivor slots filled greedily by HV contribution.
    #[serde(default = "default_hv_fraction")]
    pub hv_fraction: f64,
    /// Max GP training points, most-recent-first retention.
    #[serde(default = "default_gp_train_cap")]
    pub gp_train_cap: usize,
    /// Max training points used during GP hyperparameter search.
    #[serde(default = "default_gp_hyper_cap")]
    pub gp_hyper_cap: usize,
    /// Assumed wall-clock cost of one simulation, for the derived
    /// simulated-time trajectory column.
    #[serde(default = "default_sim_cost_s")]
    pub sim_cost_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl AlgoConfig {
    pub fn quota(&self) -> usize {
        self.replace_quota.unwrap_or((self.pop_size / 4).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cr > 0.0 && self.cr <= 1.0) {
            return Err(Error::InvalidConfig(format!("cr must be in (0, 1], got {}", self.cr)));
        }
        if !(self.f > 0.0) || !self.f.is_finite() {
            return Err(Error::InvalidConfig(format!("f must be > 0, got {}", self.f)));
        }
        if self.quota() > self.pop_size {
            return Err(Error::InvalidConfig(format!(
                "replace_quota {} exceeds pop_size {}",
                self.quota(),
                self.pop_size
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.pop_size < 4 {
            return Err(Error::InvalidConfig("pop_size must be >= 4".into()));
        }
        if self.offspring_multiplier == 0 {
            return Err(Error::InvalidConfig("offspring_multiplier must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hv_fraction) {
            return Err(Error::InvalidConfig(format!(
                "hv_fraction must be in [0, 1], got {}",
                self.hv_fraction
            )));
        }
        Ok(())
    }
}

/// Budget-aware simulation of whole designs. Implementations evaluate each
/// design on every corner of the problem or not at all; the returned flag is
/// true when the budget forced truncation to a prefix of the input.
pub trait Simulate {
    fn simulate(&mut self, designs: &[DesignPoint]) -> (Vec<Evaluation>, bool);
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_spec() -> ProblemSpec {
        ProblemSpec {
            name: "toy".into(),
            variables: vec![
                VariableSpec {
                    name: "x".into(),
                    kind: VariableKind::Real,
                    lower: 0.0,
                    upper: 5.0,
                },
                VariableSpec {
                    name: "n".into(),
                    kind: VariableKind::Integer,
                    lower: 1.0,
                    upper: 10.0,
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
                    direction: Direction::Maximize,
                    constraint_bound: Some(10.0),
                    is_objective: true,
                },
            ],
            corners: vec![Corner {
                id: "nom".into(),
                shift: vec![0.0],
            }],
        }
    }

    #[test]
    fn validate_accepts_well_formed_spec() {
        assert!(validate_problem(toy_spec()).is_ok());
    }

    #[test]
    fn validate_rejects_degenerate_bound() {
        let mut s = toy_spec();
        s.variables[0].upper = s.variables[0].lower;
        let err = validate_problem(s).unwrap_err().to_string();
        assert!(err.contains("degenerate bound"), "{err}");
        assert!(err.contains("variables[0]"), "{err}");
    }

    #[test]
    fn validate_rejects_single_objective() {
        let mut s = toy_spec();
        s.responses[1].is_objective = false;
        let err = validate_problem(s).unwrap_err().to_string();
        assert!(err.contains("two objectives"), "{err}");
    }

    #[test]
    fn validate_rejects_duplicate_corner_ids() {
        let mut s = toy_spec();
        s.corners.push(Corner {
            id: "nom".into(),
            shift: vec![0.1],
        });
        assert!(validate_problem(s).is_err());
    }

    #[test]
    fn repair_rounds_integer_vars() {
        let spec = toy_spec();
        let d = repair_design(&[2.0, 7.3], &spec).unwrap();
        assert_eq!(d.values, vec![2.0, 7.0]);
    }

    #[test]
    fn repair_clamps_real_vars() {
        let spec = toy_spec();
        let d = repair_design(&[-2.0, 3.0], &spec).unwrap();
        assert_eq!(d.values[0], 0.0);
    }

    #[test]
    fn repair_clamps_before_rounding() {
        let spec = toy_spec();
        // 10.6 would round to 11 (out of bounds); clamp-then-round gives 10.
        let d = repair_design(&[1.0, 10.6], &spec).unwrap();
        assert_eq!(d.values[1], 10.0);
    }

    #[test]
    fn repair_rejects_non_finite() {
        let spec = toy_spec();
        assert!(repair_design(&[f64::NAN, 2.0], &spec).is_err());
    }

    #[test]
    fn repair_is_idempotent() {
        let spec = toy_spec();
        for v in [[3.7, 4.2], [-1.0, 12.9], [5.0, 1.0]] {
            let once = repair_design(&v, &spec).unwrap();
            let twice = repair_design(&once.values, &spec).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn worst_case_minimize_takes_max() {
        let mut spec = toy_spec();
        spec.corners = (0..3)
            .map(|i| Corner {
                id: format!("c{i}"),
                shift: vec![0.0],
            })
            .collect();
        let responses = vec![vec![1.0, 3.0, 2.0], vec![40.0, 38.0, 45.0]];
        let (obj, worst) = aggregate_worst_case(&responses, &spec);
        assert_eq!(worst, vec![3.0, 38.0]);
        // Maximize objective enters negated.
        assert_eq!(obj, vec![3.0, -38.0]);
    }

    #[test]
    fn worst_case_single_corner_is_identity() {
        let spec = toy_spec();
        let (obj, worst) = aggregate_worst_case(&[vec![1.5], vec![7.0]], &spec);
        assert_eq!(worst, vec![1.5, 7.0]);
        assert_eq!(obj, vec![1.5, -7.0]);
    }

    #[test]
    fn config_defaults_and_quota() {
        let c = AlgoConfig::default();
        assert_eq!(c.pop_size, 100);
        assert_eq!(c.quota(), 25);
        assert_eq!(c.batch_size, 50);
        assert_eq!(c.offspring_multiplier, 10);
        c.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_cr() {
        let mut c = AlgoConfig::default();
        c.cr = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn problem_json_rejects_unknown_fields() {
        let json = serde_json::to_string(&toy_spec()).unwrap();
        assert!(ProblemSpec::from_json(&json).is_ok());
        let with_extra = json.replacen('{', "{\"bogus\":1,", 1);
        assert!(ProblemSpec::from_json(&with_extra).is_err());
    }
}
