//! Seeded coincidence experiments on singlet pairs and hidden-variable models.
//!
//! Pairs are sampled sequentially: E's outcome is a fair coin, and P's outcome
//! is drawn from the reduced single-particle state by Malus' law.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::inequalities::{CoincidenceStats, InequalityReport};
use crate::lhv::{model_coincidence, sample_model_runs, LhvModel, Provenance, RunTable, Scenario};
use crate::presets::ScenarioPreset;
use crate::quantum::{reduce_after_e, Direction, Outcome, Side};
use crate::sampling::{chunk_ranges, chunk_rng};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// `|z|` above which an estimate is flagged as disagreeing with its reference.
pub const Z_FLAG: f64 = 5.0;

/// One trial on a singlet pair measured along `a` (E) and `b` (P).
pub fn sample_singlet_pair<R: Rng + ?Sized>(
    a: Direction,
    b: Direction,
    rng: &mut R,
) -> (Outcome, Outcome) {
    let e = if rng.gen::<bool>() {
        Outcome::Up
    } else {
        Outcome::Down
    };
    let state = reduce_after_e(a, e);
    let p_up = state.outcome_probability(b, Outcome::Up);
    let p = if rng.gen::<f64>() < p_up {
        Outcome::Up
    } else {
        Outcome::Down
    };
    (e, p)
}

/// `n` singlet trials as a two-column table `[e_label, p_label]`.
pub fn sample_singlet_runs(
    a: Direction,
    b: Direction,
    labels: (&str, &str),
    n: usize,
    seed: u64,
) -> Result<RunTable> {
    if n == 0 {
        return Err(Error::NoTrials);
    }
    let chunks: Vec<Vec<Vec<i8>>> = chunk_ranges(n)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(seed, chunk);
            (0..len)
                .map(|_| {
                    let (e, p) = sample_singlet_pair(a, b, &mut rng);
                    vec![e.value(), p.value()]
                })
                .collect()
        })
        .collect();
    RunTable::from_rows(
        vec![labels.0.to_string(), labels.1.to_string()],
        chunks.concat(),
        Provenance::qm(seed),
    )
}

/// Two E-side settings read on one pair: `E` is measured along `a`, and the
/// partner is measured along `b`; by total spin zero the E-side value along
/// `b` is the negated partner outcome.
pub fn sample_same_side_proxy(
    a: Direction,
    b: Direction,
    labels: (&str, &str),
    n: usize,
    seed: u64,
) -> Result<RunTable> {
    let t = sample_singlet_runs(a, b, labels, n, seed)?;
    let rows = t.rows().map(|r| vec![r[0], -r[1]]).collect();
    RunTable::from_rows(t.columns().to_vec(), rows, t.provenance().clone())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Label of the E setting actually used.
    pub e_setting: String,
    /// Label of the P setting actually used.
    pub p_setting: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub x: String,
    pub y: String,
    pub n: u64,
    pub agreements: u64,
    pub estimate: f64,
    /// `sqrt(p̂(1 − p̂)/n)`.
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub analytic: f64,
    /// `(p̂ − p)/sqrt(p(1 − p)/n)` with `p` the analytic value.
    pub z_score: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub seed: u64,
    pub pairs: Vec<PairEstimate>,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::NoTrials);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidProbability {
            value: confidence,
            what: "confidence level".into(),
        });
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so the interval always contains p̂ despite rounding at 0 and 1
    Ok((
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    ))
}

fn z_against(estimate: f64, reference: f64, n: u64) -> f64 {
    let se = (reference * (1.0 - reference) / n as f64).sqrt();
    let d = estimate - reference;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

pub fn estimate_pair(
    table: &RunTable,
    x: &str,
    y: &str,
    analytic: f64,
    confidence: f64,
) -> Result<PairEstimate> {
    let c = table.pair_counts(x, y)?;
    let p = c.coincidence();
    let (lo, hi) = wilson_interval(c.agreements, c.n, confidence)?;
    let z = z_against(p, analytic, c.n);
    Ok(PairEstimate {
        x: x.to_string(),
        y: y.to_string(),
        n: c.n,
        agreements: c.agreements,
        estimate: p,
        std_error: (p * (1.0 - p) / c.n as f64).sqrt(),
        ci_low: lo,
        ci_high: hi,
        confidence,
        analytic,
        z_score: z,
        flagged: z.abs() > Z_FLAG,
    })
}

/// Samples the actual settings of `spec` and compares the empirical
/// coincidence with the singlet prediction.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(RunTable, EstimateReport)> {
    let e = spec.scenario.setting(&spec.e_setting)?;
    let p = spec.scenario.setting(&spec.p_setting)?;
    if e.side != Side::E || p.side != Side::P {
        return Err(Error::InvalidScenario(format!(
            "actual settings must be one E and one P setting, got {}:{} and {}:{}",
            e.side, e.label, p.side, p.label
        )));
    }
    let table = sample_singlet_runs(
        e.direction,
        p.direction,
        (&e.label, &p.label),
        spec.n,
        spec.seed,
    )?;
    let analytic = crate::quantum::singlet_coincidence(e.direction, p.direction);
    let est = estimate_pair(&table, &e.label, &p.label, analytic, spec.confidence)?;
    Ok((
        table,
        EstimateReport {
            seed: spec.seed,
            pairs: vec![est],
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub x: String,
    pub y: String,
    pub lhv_exact: f64,
    pub lhv_empirical: f64,
    pub qm_analytic: f64,
    /// Empirical LHV against the exact model value.
    pub z_vs_model: f64,
    /// Empirical LHV against the singlet prediction.
    pub z_vs_qm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: u64,
    pub seed: u64,
    pub pairs: Vec<PairComparison>,
    /// Inequalities on the empirical LHV statistics (empty unless the
    /// scenario is a preset).
    pub lhv_inequalities: Vec<InequalityReport>,
    pub qm_inequalities: Vec<InequalityReport>,
}

/// Samples the model on every observable of `scenario` and sets each pair's
/// empirical coincidence beside the quantum value.
pub fn compare_lhv_vs_qm(
    model: &LhvModel,
    scenario: &Scenario,
    n: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if model.scenario() != scenario {
        return Err(Error::InvalidModel(
            "model is defined on a different scenario".into(),
        ));
    }
    let obs: Vec<&str> = scenario.observables().collect();
    let table = sample_model_runs(model, &obs, n, seed)?;
    let emp = CoincidenceStats::from_table(&table)?;
    let qm = CoincidenceStats::from_qm(scenario);

    let mut pairs = Vec::new();
    for (x, y) in scenario.pairs() {
        let exact = model_coincidence(model, &x, &y)?;
        let got = emp.get(&x, &y)?;
        let q = qm.get(&x, &y)?;
        pairs.push(PairComparison {
            z_vs_model: z_against(got, exact, n as u64),
            z_vs_qm: z_against(got, q, n as u64),
            x,
            y,
            lhv_exact: exact,
            lhv_empirical: got,
            qm_analytic: q,
        });
    }

    let preset = ScenarioPreset::ALL
        .into_iter()
        .find(|p| &p.scenario() == scenario);
    let (lhv_inequalities, qm_inequalities) = match preset {
        Some(p) => (p.inequalities(&emp)?, p.inequalities(&qm)?),
        None => (Vec::new(), Vec::new()),
    };
    Ok(ComparisonReport {
        n: n as u64,
        seed,
        pairs,
        lhv_inequalities,
        qm_inequalities,
    })
}
