//! Deterministic hidden-variable strategies, mixtures over them, and the
//! counterfactual run tables they generate.
//!
//! Strategies are indexed in binary-counting order over the scenario's
//! observable order: for `k` observables, bit `k - 1 - j` of the index gives
//! observable `j` (0 means `+1`, 1 means `-1`). Index 0 is the all-`+1`
//! strategy and the first observable is the most significant bit.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{MeasurementSetting, Outcome, Side};
use crate::sampling::{chunk_ranges, chunk_rng, GENERATOR};

/// Upper bound on observables so that `2^k` strategies stay enumerable.
pub const MAX_OBSERVABLES: usize = 20;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Directions closer than this are treated as the same vector.
const SAME_DIRECTION_TOL: f64 = 1e-12;

/// An ordered set of measurement settings on both sides. Observable ids are
/// the setting labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    settings: Vec<MeasurementSetting>,
}

#[derive(Deserialize)]
struct RawScenario {
    settings: Vec<MeasurementSetting>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.settings)
    }
}

impl Scenario {
    pub fn new(settings: Vec<MeasurementSetting>) -> Result<Self> {
        if settings.len() > MAX_OBSERVABLES {
            return Err(Error::ScenarioTooLarge(settings.len()));
        }
        for side in [Side::E, Side::P] {
            if !settings.iter().any(|s| s.side == side) {
                return Err(Error::InvalidScenario(format!("no setting on side {side}")));
            }
        }
        let mut seen = HashSet::new();
        for s in &settings {
            if s.label.is_empty() {
                return Err(Error::InvalidScenario("empty label".into()));
            }
            if !seen.insert(s.label.as_str()) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate label `{}`",
                    s.label
                )));
            }
        }
        Ok(Scenario { settings })
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn observables(&self) -> impl Iterator<Item = &str> {
        self.settings.iter().map(|s| s.label.as_str())
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.settings
            .iter()
            .position(|s| s.label == id)
            .ok_or_else(|| Error::UnknownObservable(id.to_string()))
    }

    pub fn setting(&self, id: &str) -> Result<&MeasurementSetting> {
        Ok(&self.settings[self.index_of(id)?])
    }

    pub fn strategy_count(&self) -> u64 {
        1u64 << self.settings.len()
    }

    /// All unordered observable pairs, in scenario order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.settings.len() {
            for j in i + 1..self.settings.len() {
                out.push((
                    self.settings[i].label.clone(),
                    self.settings[j].label.clone(),
                ));
            }
        }
        out
    }
}

/// A total assignment of outcomes to every observable of a scenario.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub index: u64,
    pub values: Vec<Outcome>,
}

impl DeterministicStrategy {
    pub fn from_index(k: usize, index: u64) -> Self {
        let values = (0..k)
            .map(|j| {
                if (index >> (k - 1 - j)) & 1 == 0 {
                    Outcome::Up
                } else {
                    Outcome::Down
                }
            })
            .collect();
        DeterministicStrategy { index, values }
    }

    pub fn from_values(values: &[i8]) -> Result<Self> {
        let k = values.len();
        let mut index = 0u64;
        let mut outs = Vec::with_capacity(k);
        for (j, &v) in values.iter().enumerate() {
            let o = Outcome::from_value(v)
                .ok_or_else(|| Error::InvalidModel(format!("outcome {v} is not ±1")))?;
            if o == Outcome::Down {
                index |= 1 << (k - 1 - j);
            }
            outs.push(o);
        }
        Ok(DeterministicStrategy {
            index,
            values: outs,
        })
    }

    pub fn agrees(&self, i: usize, j: usize) -> bool {
        self.values[i] == self.values[j]
    }
}

pub fn enumerate_strategies(scenario: &Scenario) -> Result<Vec<DeterministicStrategy>> {
    let k = scenario.len();
    if k > MAX_OBSERVABLES {
        return Err(Error::ScenarioTooLarge(k));
    }
    Ok((0..1u64 << k)
        .map(|idx| DeterministicStrategy::from_index(k, idx))
        .collect())
}

/// Keeps strategies that give opposite outcomes on every E/P pair sharing a
/// direction (total spin zero).
pub fn filter_spin_zero(
    strategies: Vec<DeterministicStrategy>,
    scenario: &Scenario,
) -> Vec<DeterministicStrategy> {
    let settings = scenario.settings();
    let mut linked = Vec::new();
    for (i, a) in settings.iter().enumerate() {
        for (j, b) in settings.iter().enumerate() {
            if a.side == Side::E
                && b.side == Side::P
                && a.direction.separation(b.direction) < SAME_DIRECTION_TOL
            {
                linked.push((i, j));
            }
        }
    }
    strategies
        .into_iter()
        .filter(|s| linked.iter().all(|&(i, j)| !s.agrees(i, j)))
        .collect()
}

/// A probability mixture of deterministic strategies, keyed by canonical
/// strategy index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct LhvModel {
    scenario: Scenario,
    weights: BTreeMap<u64, f64>,
}

#[derive(Deserialize)]
struct RawModel {
    scenario: Scenario,
    weights: BTreeMap<u64, f64>,
}

impl TryFrom<RawModel> for LhvModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        LhvModel::new(raw.scenario, raw.weights)
    }
}

impl LhvModel {
    pub fn new(scenario: Scenario, weights: BTreeMap<u64, f64>) -> Result<Self> {
        let count = scenario.strategy_count();
        let mut total = 0.0;
        for (&idx, &w) in &weights {
            if idx >= count {
                return Err(Error::InvalidModel(format!(
                    "strategy index {idx} out of range (scenario has {count})"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "weight {w} for strategy {idx}"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(LhvModel { scenario, weights })
    }

    pub fn point_mass(scenario: Scenario, index: u64) -> Result<Self> {
        Self::new(scenario, BTreeMap::from([(index, 1.0)]))
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let count = scenario.strategy_count();
        let w = 1.0 / count as f64;
        let weights = (0..count).map(|i| (i, w)).collect();
        LhvModel { scenario, weights }
    }

    /// Builds a model from explicit `(assignment, weight)` pairs, where each
    /// assignment lists ±1 values in scenario order.
    pub fn from_assignments(scenario: Scenario, parts: &[(&[i8], f64)]) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (values, w) in parts {
            if values.len() != scenario.len() {
                return Err(Error::InvalidModel(format!(
                    "assignment has {} values, scenario has {} observables",
                    values.len(),
                    scenario.len()
                )));
            }
            let s = DeterministicStrategy::from_values(values)?;
            *weights.entry(s.index).or_insert(0.0) += w;
        }
        Self::new(scenario, weights)
    }

    /// Random mixture over `support` distinct strategies (all of them when
    /// `support` is `None`), with weights drawn uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(
        scenario: Scenario,
        support: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let count = scenario.strategy_count();
        let m = support.map_or(count, |m| (m as u64).clamp(1, count));
        let mut indices: Vec<u64> = (0..count).collect();
        // partial Fisher-Yates
        for i in 0..m as usize {
            let j = rng.gen_range(i..indices.len());
            indices.swap(i, j);
        }
        let raw: Vec<f64> = (0..m)
            .map(|_| -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights = indices[..m as usize]
            .iter()
            .zip(raw)
            .map(|(&i, w)| (i, w / total))
            .collect();
        LhvModel { scenario, weights }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn weights(&self) -> &BTreeMap<u64, f64> {
        &self.weights
    }

    /// Strategies with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (DeterministicStrategy, f64)> + '_ {
        let k = self.scenario.len();
        self.weights
            .iter()
            .filter(|(_, &w)| w > 0.0)
            .map(move |(&i, &w)| (DeterministicStrategy::from_index(k, i), w))
    }
}

/// `π(X = Y)` under the model.
pub fn model_coincidence(model: &LhvModel, x: &str, y: &str) -> Result<f64> {
    let i = model.scenario.index_of(x)?;
    let j = model.scenario.index_of(y)?;
    if i == j {
        return Err(Error::InvalidScenario(format!(
            "coincidence of `{x}` with itself"
        )));
    }
    let p: f64 = model
        .support()
        .filter(|(s, _)| s.agrees(i, j))
        .map(|(_, w)| w)
        .sum();
    // weights sum to 1 only up to rounding
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    SampledFromModel { generator: String, seed: u64 },
    SampledFromQm { generator: String, seed: u64 },
    Explicit,
}

impl Provenance {
    pub fn model(seed: u64) -> Self {
        Provenance::SampledFromModel {
            generator: GENERATOR.to_string(),
            seed,
        }
    }

    pub fn qm(seed: u64) -> Self {
        Provenance::SampledFromQm {
            generator: GENERATOR.to_string(),
            seed,
        }
    }
}

/// Exact agreement counts for one column pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub n: u64,
    pub agreements: u64,
    /// `Σ X_i·Y_i`.
    pub product_sum: i64,
}

impl PairCounts {
    pub fn coincidence(&self) -> f64 {
        self.agreements as f64 / self.n as f64
    }

    pub fn correlation(&self) -> f64 {
        self.product_sum as f64 / self.n as f64
    }

    /// `Σ X·Y = 2·#(X=Y) − n`, checked on integers.
    pub fn identity_holds(&self) -> bool {
        self.product_sum == 2 * self.agreements as i64 - self.n as i64
    }
}

/// `n` trials of ±1 outcomes, one column per observable. Stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTable {
    columns: Vec<String>,
    data: Vec<i8>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct RunTableJson {
    columns: Vec<String>,
    rows: Vec<Vec<i8>>,
    provenance: Provenance,
}

impl Serialize for RunTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RunTableJson {
            columns: self.columns.clone(),
            rows: self.rows().map(<[i8]>::to_vec).collect(),
            provenance: self.provenance.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RunTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RunTableJson::deserialize(d)?;
        RunTable::from_rows(raw.columns, raw.rows, raw.provenance).map_err(serde::de::Error::custom)
    }
}

impl RunTable {
    fn from_parts(columns: Vec<String>, data: Vec<i8>, provenance: Provenance) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::RunTable("no columns".into()));
        }
        let unique: HashSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(Error::RunTable("duplicate column names".into()));
        }
        if !data.len().is_multiple_of(columns.len()) {
            return Err(Error::RunTable("ragged data".into()));
        }
        if let Some(bad) = data.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::RunTable(format!("entry {bad} is not ±1")));
        }
        Ok(RunTable {
            columns,
            data,
            provenance,
        })
    }

    pub fn from_rows(
        columns: Vec<String>,
        rows: Vec<Vec<i8>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let width = columns.len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::RunTable(format!(
                "row has {} entries, expected {width}",
                r.len()
            )));
        }
        Self::from_parts(columns, rows.concat(), provenance)
    }

    pub fn explicit(columns: &[&str], rows: &[&[i8]]) -> Result<Self> {
        Self::from_rows(
            columns.iter().map(|c| c.to_string()).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
            Provenance::Explicit,
        )
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.data.chunks_exact(self.columns.len())
    }

    pub fn column_index(&self, id: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::UnknownObservable(id.to_string()))
    }

    pub fn column(&self, id: &str) -> Result<impl Iterator<Item = i8> + '_> {
        let j = self.column_index(id)?;
        Ok(self.rows().map(move |r| r[j]))
    }

    pub fn pair_counts(&self, x: &str, y: &str) -> Result<PairCounts> {
        let i = self.column_index(x)?;
        let j = self.column_index(y)?;
        let mut agreements = 0u64;
        let mut product_sum = 0i64;
        for r in self.rows() {
            let p = (r[i] * r[j]) as i64;
            product_sum += p;
            if p == 1 {
                agreements += 1;
            }
        }
        Ok(PairCounts {
            n: self.len() as u64,
            agreements,
            product_sum,
        })
    }

    /// Empirical `π(X = Y)`.
    pub fn coincidence(&self, x: &str, y: &str) -> Result<f64> {
        Ok(self.pair_counts(x, y)?.coincidence())
    }

    /// Empirical `⟨X·Y⟩`.
    pub fn correlation(&self, x: &str, y: &str) -> Result<f64> {
        Ok(self.pair_counts(x, y)?.correlation())
    }

    /// Sum of a column's entries.
    pub fn column_sum(&self, id: &str) -> Result<i64> {
        Ok(self.column(id)?.map(i64::from).sum())
    }

    pub fn with_column(&self, name: &str, values: Vec<i8>) -> Result<RunTable> {
        if self.columns.iter().any(|c| c == name) {
            return Err(Error::RunTable(format!("column `{name}` already present")));
        }
        if values.len() != self.len() {
            return Err(Error::RunTable(format!(
                "new column has {} entries, table has {} rows",
                values.len(),
                self.len()
            )));
        }
        let w = self.width();
        let mut data = Vec::with_capacity(self.data.len() + values.len());
        for (row, v) in self.rows().zip(values) {
            data.extend_from_slice(row);
            data.push(v);
        }
        debug_assert_eq!(data.len(), self.len() * (w + 1));
        let mut columns = self.columns.clone();
        columns.push(name.to_string());
        Self::from_parts(columns, data, self.provenance.clone())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(if *v == 1 { "1" } else { "-1" });
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, provenance: Provenance) -> Result<RunTable> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::RunTable("empty csv".into()))??;
        let columns: Vec<String> = header
            .trim()
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                let v: i8 = field.trim().parse().map_err(|_| {
                    Error::RunTable(format!("line {}: bad entry `{field}`", lineno + 2))
                })?;
                data.push(v);
            }
            if data.len() - before != columns.len() {
                return Err(Error::RunTable(format!(
                    "line {}: wrong field count",
                    lineno + 2
                )));
            }
        }
        Self::from_parts(columns, data, provenance)
    }
}

/// Appends `E″ := −E′` under the name of `col_e_prime` with one more prime.
pub fn derive_e_double_prime(table: &RunTable, col_e_prime: &str) -> Result<RunTable> {
    let values: Vec<i8> = table.column(col_e_prime)?.map(|v| -v).collect();
    table.with_column(&format!("{col_e_prime}'"), values)
}

/// Draws `n` i.i.d. strategies from the model and records the requested
/// observables. Rows are generated in fixed-size chunks, each with its own
/// ChaCha stream of the master seed, so output does not depend on thread count.
pub fn sample_model_runs(
    model: &LhvModel,
    observables: &[&str],
    n: usize,
    seed: u64,
) -> Result<RunTable> {
    if observables.is_empty() {
        return Err(Error::RunTable("no observables requested".into()));
    }
    if n == 0 {
        return Err(Error::NoTrials);
    }
    let cols: Vec<usize> = observables
        .iter()
        .map(|o| model.scenario.index_of(o))
        .collect::<Result<_>>()?;

    let support: Vec<(DeterministicStrategy, f64)> = model.support().collect();
    let mut cdf = Vec::with_capacity(support.len());
    let mut acc = 0.0;
    for (_, w) in &support {
        acc += w;
        cdf.push(acc);
    }
    let rows: Vec<Vec<i8>> = support
        .iter()
        .map(|(s, _)| cols.iter().map(|&c| s.values[c].value()).collect())
        .collect();

    let width = cols.len();
    let chunks: Vec<Vec<i8>> = chunk_ranges(n)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(seed, chunk);
            let mut out = Vec::with_capacity(len * width);
            for _ in 0..len {
                let u: f64 = rng.gen::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= u).min(rows.len() - 1);
                out.extend_from_slice(&rows[k]);
            }
            out
        })
        .collect();

    RunTable::from_parts(
        observables.iter().map(|o| o.to_string()).collect(),
        chunks.concat(),
        Provenance::model(seed),
    )
}
