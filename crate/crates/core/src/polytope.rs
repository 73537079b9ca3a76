//! Membership in the classical correlation polytope by linear programming.
//!
//! The polytope is the convex hull of the coincidence vectors of all
//! deterministic strategies. Strategies with identical images on the
//! coordinates a problem references are merged before solving, keeping the
//! lowest canonical index as representative.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{enumerate_strategies, model_coincidence, LhvModel, Scenario, MAX_OBSERVABLES};
use crate::simplex::{self, Cmp, LinearProgram, LpOutcome, Row};

/// Targets must be reproduced by a witness within this tolerance.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTarget {
    pub x: String,
    pub y: String,
    pub pi: f64,
}

impl PairTarget {
    pub fn new(x: &str, y: &str, pi: f64) -> Self {
        PairTarget {
            x: x.to_string(),
            y: y.to_string(),
            pi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub x: String,
    pub y: String,
    pub coeff: f64,
}

impl Term {
    pub fn new(x: &str, y: &str, coeff: f64) -> Self {
        Term {
            x: x.to_string(),
            y: y.to_string(),
            coeff,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintCmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl From<ConstraintCmp> for Cmp {
    fn from(c: ConstraintCmp) -> Cmp {
        match c {
            ConstraintCmp::Le => Cmp::Le,
            ConstraintCmp::Eq => Cmp::Eq,
            ConstraintCmp::Ge => Cmp::Ge,
        }
    }
}

/// `Σ coeff·π(x,y) (<= | = | >=) rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<Term>,
    pub cmp: ConstraintCmp,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityProblem {
    pub scenario: Scenario,
    pub targets: Vec<PairTarget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<LinearConstraint>,
}

impl FeasibilityProblem {
    pub fn new(scenario: Scenario, targets: Vec<PairTarget>) -> Self {
        FeasibilityProblem {
            scenario,
            targets,
            constraints: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Linf,
    L1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FeasibilityResult {
    Feasible {
        witness: LhvModel,
        /// Largest `|π_witness − target|` over the targets.
        max_residual: f64,
    },
    Infeasible {
        metric: DistanceMetric,
        distance: f64,
        /// Closest classical coincidence vector, one entry per target.
        nearest: Vec<PairTarget>,
        nearest_witness: LhvModel,
    },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn distance(&self) -> f64 {
        match self {
            FeasibilityResult::Feasible { .. } => 0.0,
            FeasibilityResult::Infeasible { distance, .. } => *distance,
        }
    }
}

/// Lowest and highest value of a linear functional over a polytope section,
/// with the mixtures attaining them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoundResult {
    Interval {
        min: f64,
        max: f64,
        min_witness: LhvModel,
        max_witness: LhvModel,
    },
    Empty,
}

/// Sparse `(coordinate, coefficient)` row with its comparison and bound.
type SparseRow = (Vec<(usize, f64)>, Cmp, f64);

/// Coordinates a problem touches and the deduplicated vertex images on them.
struct Compiled {
    coords: Vec<(usize, usize)>,
    /// `(canonical strategy index, image over coords)`.
    vertices: Vec<(u64, Vec<f64>)>,
    target_rows: Vec<(usize, f64)>,
    constraint_rows: Vec<SparseRow>,
}

fn pair_index(sc: &Scenario, x: &str, y: &str) -> Result<(usize, usize)> {
    let i = sc.index_of(x)?;
    let j = sc.index_of(y)?;
    if i == j {
        return Err(Error::MalformedProblem(format!(
            "pair ({x}, {y}) repeats an observable"
        )));
    }
    Ok((i.min(j), i.max(j)))
}

fn coord_of(coords: &mut Vec<(usize, usize)>, p: (usize, usize)) -> usize {
    coords.iter().position(|&c| c == p).unwrap_or_else(|| {
        coords.push(p);
        coords.len() - 1
    })
}

fn compile(problem: &FeasibilityProblem, extra: &[Term]) -> Result<Compiled> {
    let sc = &problem.scenario;
    if sc.len() > MAX_OBSERVABLES {
        return Err(Error::ScenarioTooLarge(sc.len()));
    }
    let mut coords = Vec::new();
    let mut target_rows = Vec::new();
    for t in &problem.targets {
        if !(t.pi.is_finite() && (0.0..=1.0).contains(&t.pi)) {
            return Err(Error::InvalidProbability {
                value: t.pi,
                what: format!("target pi({},{})", t.x, t.y),
            });
        }
        let p = pair_index(sc, &t.x, &t.y)?;
        if coords.contains(&p) {
            return Err(Error::MalformedProblem(format!(
                "pair ({}, {}) targeted twice",
                t.x, t.y
            )));
        }
        target_rows.push((coord_of(&mut coords, p), t.pi));
    }
    let mut constraint_rows = Vec::new();
    for c in &problem.constraints {
        if c.terms.is_empty() || !c.rhs.is_finite() {
            return Err(Error::MalformedProblem(
                "constraint without terms or with non-finite rhs".into(),
            ));
        }
        let mut terms = Vec::new();
        for t in &c.terms {
            if !t.coeff.is_finite() {
                return Err(Error::MalformedProblem(format!(
                    "non-finite coefficient on ({}, {})",
                    t.x, t.y
                )));
            }
            terms.push((coord_of(&mut coords, pair_index(sc, &t.x, &t.y)?), t.coeff));
        }
        constraint_rows.push((terms, c.cmp.into(), c.rhs));
    }
    for t in extra {
        if !t.coeff.is_finite() {
            return Err(Error::MalformedProblem(format!(
                "non-finite coefficient on ({}, {})",
                t.x, t.y
            )));
        }
        coord_of(&mut coords, pair_index(sc, &t.x, &t.y)?);
    }

    let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut vertices = Vec::new();
    for s in enumerate_strategies(sc)? {
        let img: Vec<bool> = coords.iter().map(|&(i, j)| s.agrees(i, j)).collect();
        seen.entry(img.clone()).or_insert_with(|| {
            vertices.push((
                s.index,
                img.iter().map(|&b| f64::from(u8::from(b))).collect(),
            ));
            vertices.len() - 1
        });
    }
    Ok(Compiled {
        coords,
        vertices,
        target_rows,
        constraint_rows,
    })
}

impl Compiled {
    fn nv(&self) -> usize {
        self.vertices.len()
    }

    /// Rows shared by every LP: normalization and extra constraints, over the
    /// first `nv` of `width` variables.
    fn base_rows(&self, width: usize) -> Vec<Row> {
        let nv = self.nv();
        let mut rows = Vec::new();
        let mut norm = vec![0.0; width];
        norm[..nv].fill(1.0);
        rows.push(Row::new(norm, Cmp::Eq, 1.0));
        for (terms, cmp, rhs) in &self.constraint_rows {
            let mut r = vec![0.0; width];
            for (v, (_, img)) in self.vertices.iter().enumerate() {
                r[v] = terms.iter().map(|&(c, k)| k * img[c]).sum();
            }
            rows.push(Row::new(r, *cmp, *rhs));
        }
        rows
    }

    fn coordinate_row(&self, coord: usize, width: usize) -> Vec<f64> {
        let mut r = vec![0.0; width];
        for (v, (_, img)) in self.vertices.iter().enumerate() {
            r[v] = img[coord];
        }
        r
    }

    fn model(&self, scenario: &Scenario, w: &[f64]) -> Result<LhvModel> {
        let mut weights = BTreeMap::new();
        let total: f64 = w[..self.nv()].iter().sum();
        for (v, &wv) in w[..self.nv()].iter().enumerate() {
            if wv > 0.0 {
                weights.insert(self.vertices[v].0, wv / total);
            }
        }
        LhvModel::new(scenario.clone(), weights)
    }

    fn image(&self, w: &[f64], coord: usize) -> f64 {
        self.vertices
            .iter()
            .zip(w)
            .map(|((_, img), wv)| wv * img[coord])
            .sum()
    }
}

pub fn solve_membership(problem: &FeasibilityProblem) -> Result<FeasibilityResult> {
    solve_membership_with(problem, DistanceMetric::Linf)
}

/// Decides whether the targets are reproducible by a mixture of deterministic
/// strategies. When they are not, a second LP finds the classical point
/// closest to the targets under `metric` (respecting any extra constraints).
pub fn solve_membership_with(
    problem: &FeasibilityProblem,
    metric: DistanceMetric,
) -> Result<FeasibilityResult> {
    if problem.targets.is_empty() {
        return Err(Error::MalformedProblem("no targets".into()));
    }
    let c = compile(problem, &[])?;
    let nv = c.nv();

    let mut rows = c.base_rows(nv);
    for &(coord, pi) in &c.target_rows {
        rows.push(Row::new(c.coordinate_row(coord, nv), Cmp::Eq, pi));
    }
    let lp = LinearProgram {
        objective: vec![0.0; nv],
        rows,
    };
    if let LpOutcome::Optimal { x, .. } = simplex::solve(&lp) {
        return feasible(problem, &c, &x);
    }

    // distance LP: w (nv), d+ (T), d- (T), then t for L-infinity
    let nt = c.target_rows.len();
    let width = nv + 2 * nt + usize::from(metric == DistanceMetric::Linf);
    let mut rows = c.base_rows(width);
    for (j, &(coord, pi)) in c.target_rows.iter().enumerate() {
        let mut r = c.coordinate_row(coord, width);
        r[nv + j] = -1.0;
        r[nv + nt + j] = 1.0;
        rows.push(Row::new(r, Cmp::Eq, pi));
    }
    let mut objective = vec![0.0; width];
    match metric {
        DistanceMetric::Linf => {
            let t = width - 1;
            objective[t] = 1.0;
            for j in 0..2 * nt {
                let mut r = vec![0.0; width];
                r[nv + j] = 1.0;
                r[t] = -1.0;
                rows.push(Row::new(r, Cmp::Le, 0.0));
            }
        }
        DistanceMetric::L1 => objective[nv..nv + 2 * nt].fill(1.0),
    }
    let lp = LinearProgram { objective, rows };
    let (x, _) = match simplex::solve(&lp) {
        LpOutcome::Optimal { x, value } => (x, value),
        _ => {
            return Err(Error::MalformedProblem(
                "extra constraints admit no classical point".into(),
            ))
        }
    };

    let nearest: Vec<PairTarget> = problem
        .targets
        .iter()
        .zip(&c.target_rows)
        .map(|(t, &(coord, _))| PairTarget::new(&t.x, &t.y, c.image(&x, coord)))
        .collect();
    let devs = problem
        .targets
        .iter()
        .zip(&nearest)
        .map(|(t, n)| (t.pi - n.pi).abs());
    let distance = match metric {
        DistanceMetric::Linf => devs.fold(0.0, f64::max),
        DistanceMetric::L1 => devs.sum(),
    };
    if distance <= WITNESS_TOL {
        return feasible(problem, &c, &x);
    }
    Ok(FeasibilityResult::Infeasible {
        metric,
        distance,
        nearest,
        nearest_witness: c.model(&problem.scenario, &x)?,
    })
}

fn feasible(problem: &FeasibilityProblem, c: &Compiled, w: &[f64]) -> Result<FeasibilityResult> {
    let witness = c.model(&problem.scenario, w)?;
    let mut max_residual: f64 = 0.0;
    for t in &problem.targets {
        max_residual = max_residual.max((model_coincidence(&witness, &t.x, &t.y)? - t.pi).abs());
    }
    Ok(FeasibilityResult::Feasible {
        witness,
        max_residual,
    })
}

/// Range of `Σ coeff·π(x,y)` over all classical mixtures meeting the
/// problem's targets and constraints.
pub fn implied_bound(problem: &FeasibilityProblem, functional: &[Term]) -> Result<BoundResult> {
    if functional.is_empty() {
        return Err(Error::MalformedProblem("empty functional".into()));
    }
    let c = compile(problem, functional)?;
    let nv = c.nv();
    let mut rows = c.base_rows(nv);
    for &(coord, pi) in &c.target_rows {
        rows.push(Row::new(c.coordinate_row(coord, nv), Cmp::Eq, pi));
    }
    let mut objective = vec![0.0; nv];
    for t in functional {
        let p = pair_index(&problem.scenario, &t.x, &t.y)?;
        let coord = c.coords.iter().position(|&q| q == p).expect("compiled");
        for (v, (_, img)) in c.vertices.iter().enumerate() {
            objective[v] += t.coeff * img[coord];
        }
    }

    let lo = simplex::solve(&LinearProgram {
        objective: objective.clone(),
        rows: rows.clone(),
    });
    let hi = simplex::solve(&LinearProgram {
        objective: objective.iter().map(|v| -v).collect(),
        rows,
    });
    match (lo, hi) {
        (LpOutcome::Optimal { x: xl, value: vl }, LpOutcome::Optimal { x: xh, value: vh }) => {
            Ok(BoundResult::Interval {
                min: vl,
                max: -vh,
                min_witness: c.model(&problem.scenario, &xl)?,
                max_witness: c.model(&problem.scenario, &xh)?,
            })
        }
        _ => Ok(BoundResult::Empty),
    }
}

/// Evaluates `Σ coeff·π(x,y)` under a model.
pub fn evaluate_functional(model: &LhvModel, functional: &[Term]) -> Result<f64> {
    functional
        .iter()
        .map(|t| Ok(t.coeff * model_coincidence(model, &t.x, &t.y)?))
        .sum()
}
