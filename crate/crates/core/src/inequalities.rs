//! Bell-type inequalities over pairwise coincidence probabilities, and their
//! one- and two-angle families with the singlet predictions substituted.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{model_coincidence, LhvModel, PairCounts, Provenance, RunTable, Scenario};
use crate::quantum::{malus_coincidence, singlet_coincidence};

/// Slack below which an inequality still counts as satisfied.
pub const SATISFACTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatsSource {
    AnalyticQm,
    LhvModel,
    Empirical { seed: Option<u64>, n: u64 },
    Explicit,
}

/// Symmetric table of `π(X = Y)` over a set of observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StatsJson", into = "StatsJson")]
pub struct CoincidenceStats {
    observables: Vec<String>,
    pi: BTreeMap<(String, String), f64>,
    source: StatsSource,
}

#[derive(Clone, Serialize, Deserialize)]
struct PairEntry {
    x: String,
    y: String,
    pi: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct StatsJson {
    observables: Vec<String>,
    pairs: Vec<PairEntry>,
    source: StatsSource,
}

impl TryFrom<StatsJson> for CoincidenceStats {
    type Error = Error;

    fn try_from(raw: StatsJson) -> Result<Self> {
        let mut stats = CoincidenceStats::new(raw.observables, raw.source);
        for p in raw.pairs {
            stats.set(&p.x, &p.y, p.pi)?;
        }
        Ok(stats)
    }
}

impl From<CoincidenceStats> for StatsJson {
    fn from(s: CoincidenceStats) -> Self {
        StatsJson {
            pairs: s
                .pi
                .into_iter()
                .map(|((x, y), pi)| PairEntry { x, y, pi })
                .collect(),
            observables: s.observables,
            source: s.source,
        }
    }
}

fn key(x: &str, y: &str) -> (String, String) {
    if x <= y {
        (x.to_string(), y.to_string())
    } else {
        (y.to_string(), x.to_string())
    }
}

impl CoincidenceStats {
    pub fn new(observables: Vec<String>, source: StatsSource) -> Self {
        CoincidenceStats {
            observables,
            pi: BTreeMap::new(),
            source,
        }
    }

    /// Builds explicit stats from `(x, y, π)` triples; observables are
    /// collected in order of first appearance.
    pub fn explicit(entries: &[(&str, &str, f64)]) -> Result<Self> {
        let mut observables: Vec<String> = Vec::new();
        for (x, y, _) in entries {
            for o in [x, y] {
                if !observables.iter().any(|v| v == o) {
                    observables.push(o.to_string());
                }
            }
        }
        let mut stats = CoincidenceStats::new(observables, StatsSource::Explicit);
        for &(x, y, p) in entries {
            stats.set(x, y, p)?;
        }
        Ok(stats)
    }

    /// Singlet predictions: `½(1 − cos)` across sides, and `cos²(·/2)` for
    /// two settings on the same side (same particle, sequential reading).
    pub fn from_qm(scenario: &Scenario) -> Self {
        let mut stats = CoincidenceStats::new(
            scenario.observables().map(String::from).collect(),
            StatsSource::AnalyticQm,
        );
        let settings = scenario.settings();
        for (i, a) in settings.iter().enumerate() {
            for b in &settings[i + 1..] {
                let p = if a.side == b.side {
                    malus_coincidence(a.direction.separation(b.direction)).expect("finite")
                } else {
                    singlet_coincidence(a.direction, b.direction)
                };
                stats.pi.insert(key(&a.label, &b.label), p);
            }
        }
        stats
    }

    pub fn from_model(model: &LhvModel) -> Self {
        let sc = model.scenario();
        let mut stats = CoincidenceStats::new(
            sc.observables().map(String::from).collect(),
            StatsSource::LhvModel,
        );
        for (x, y) in sc.pairs() {
            let p = model_coincidence(model, &x, &y).expect("scenario pairs are valid");
            stats.pi.insert(key(&x, &y), p);
        }
        stats
    }

    pub fn from_table(table: &RunTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::NoTrials);
        }
        let seed = match table.provenance() {
            Provenance::SampledFromModel { seed, .. } | Provenance::SampledFromQm { seed, .. } => {
                Some(*seed)
            }
            Provenance::Explicit => None,
        };
        let cols = table.columns();
        let mut stats = CoincidenceStats::new(
            cols.to_vec(),
            StatsSource::Empirical {
                seed,
                n: table.len() as u64,
            },
        );
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                let p = table.coincidence(&cols[i], &cols[j])?;
                stats.pi.insert(key(&cols[i], &cols[j]), p);
            }
        }
        Ok(stats)
    }

    pub fn set(&mut self, x: &str, y: &str, p: f64) -> Result<()> {
        if x == y {
            return Err(Error::InvalidScenario(format!(
                "pair ({x}, {x}) is not a pair"
            )));
        }
        for o in [x, y] {
            if !self.observables.iter().any(|v| v == o) {
                return Err(Error::UnknownObservable(o.to_string()));
            }
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                value: p,
                what: format!("pi({x},{y})"),
            });
        }
        self.pi.insert(key(x, y), p);
        Ok(())
    }

    pub fn get(&self, x: &str, y: &str) -> Result<f64> {
        self.pi
            .get(&key(x, y))
            .copied()
            .ok_or_else(|| Error::MissingPair(x.to_string(), y.to_string()))
    }

    pub fn observables(&self) -> &[String] {
        &self.observables
    }

    pub fn source(&self) -> &StatsSource {
        &self.source
    }

    pub fn has(&self, id: &str) -> bool {
        self.observables.iter().any(|o| o == id)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.pi
            .iter()
            .map(|((x, y), &p)| (x.as_str(), y.as_str(), p))
    }

    fn trials(&self) -> Option<u64> {
        match self.source {
            StatsSource::Empirical { n, .. } => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

/// Outcome of evaluating `lhs (>= | <=) rhs`. `margin` is the slack on the
/// satisfied side: `lhs − rhs` for `>=`, `rhs − lhs` for `<=`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// Margin in binomial standard errors, for empirical statistics only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z_score: Option<f64>,
}

impl InequalityReport {
    fn new(name: &str, relation: Relation, lhs: f64, rhs: f64) -> Self {
        let margin = match relation {
            Relation::AtLeast => lhs - rhs,
            Relation::AtMost => rhs - lhs,
        };
        InequalityReport {
            name: name.to_string(),
            relation,
            lhs,
            rhs,
            margin,
            satisfied: margin >= -SATISFACTION_TOL,
            z_score: None,
        }
    }

    /// Attaches a z-score when the stats are empirical. `terms` lists the
    /// coefficient of each probability entering the margin.
    fn with_noise(mut self, stats: &CoincidenceStats, terms: &[(f64, f64)]) -> Self {
        if let Some(n) = stats.trials() {
            let var: f64 = terms
                .iter()
                .map(|(c, p)| c * c * p * (1.0 - p) / n as f64)
                .sum();
            let se = var.sqrt();
            self.z_score = Some(if se > 0.0 {
                self.margin / se
            } else if self.margin.abs() <= SATISFACTION_TOL {
                0.0
            } else {
                self.margin.signum() * f64::INFINITY
            });
        }
        self
    }
}

/// `max(π(P=E), π(P=E′)) ≥ (1 − π(E=E′)) / 2`.
pub fn check_star(
    stats: &CoincidenceStats,
    p: &str,
    e: &str,
    e_prime: &str,
) -> Result<InequalityReport> {
    let pe = stats.get(p, e)?;
    let pe2 = stats.get(p, e_prime)?;
    let ee = stats.get(e, e_prime)?;
    let lhs = pe.max(pe2);
    let rep = InequalityReport::new("star", Relation::AtLeast, lhs, (1.0 - ee) / 2.0);
    Ok(rep.with_noise(stats, &[(1.0, lhs), (0.5, ee)]))
}

/// `π(X=Y) + π(Y=Z) + π(Z=X) ≥ 1`.
pub fn check_star_star(
    stats: &CoincidenceStats,
    x: &str,
    y: &str,
    z: &str,
) -> Result<InequalityReport> {
    let a = stats.get(x, y)?;
    let b = stats.get(y, z)?;
    let c = stats.get(z, x)?;
    let rep = InequalityReport::new("star_star", Relation::AtLeast, a + b + c, 1.0);
    Ok(rep.with_noise(stats, &[(1.0, a), (1.0, b), (1.0, c)]))
}

/// `π(E′=P′) ≤ π(E′=P) + π(P=E) + π(E=P′)`.
pub fn check_penrose(
    stats: &CoincidenceStats,
    e: &str,
    e_prime: &str,
    p: &str,
    p_prime: &str,
) -> Result<InequalityReport> {
    let lhs = stats.get(e_prime, p_prime)?;
    let t1 = stats.get(e_prime, p)?;
    let t2 = stats.get(p, e)?;
    let t3 = stats.get(e, p_prime)?;
    let rep = InequalityReport::new("penrose", Relation::AtMost, lhs, t1 + t2 + t3);
    Ok(rep.with_noise(stats, &[(1.0, lhs), (1.0, t1), (1.0, t2), (1.0, t3)]))
}

/// Bookkeeping for `⟨X·Y⟩ = 0 ⇔ π(X=Y) = ½` on a concrete table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoCorrelationReport {
    pub x: String,
    pub y: String,
    pub counts: PairCounts,
    pub correlation: f64,
    pub coincidence: f64,
    /// `Σ X·Y = 2·#(X=Y) − n` on integer counts.
    pub identity_holds: bool,
    pub tolerance: f64,
    pub uncorrelated: bool,
    pub balanced: bool,
    /// `uncorrelated == balanced`.
    pub sides_agree: bool,
}

pub fn check_no_correlation_identity(
    table: &RunTable,
    x: &str,
    y: &str,
    tol: f64,
) -> Result<NoCorrelationReport> {
    if table.is_empty() {
        return Err(Error::NoTrials);
    }
    let counts = table.pair_counts(x, y)?;
    let correlation = counts.correlation();
    let coincidence = counts.coincidence();
    // compare on integers so the two sides cannot disagree by rounding
    let n = counts.n as f64;
    let uncorrelated = (counts.product_sum as f64).abs() <= tol * n;
    let balanced = (2.0 * counts.agreements as f64 - n).abs() <= tol * n;
    Ok(NoCorrelationReport {
        x: x.to_string(),
        y: y.to_string(),
        counts,
        correlation,
        coincidence,
        identity_holds: counts.identity_holds(),
        tolerance: tol,
        uncorrelated,
        balanced,
        sides_agree: uncorrelated == balanced,
    })
}

fn open_unit_half_turn(theta: f64, what: &'static str) -> Result<()> {
    if !theta.is_finite() {
        return Err(Error::NonFiniteAngle(theta));
    }
    if theta <= 0.0 || theta >= PI {
        return Err(Error::AngleDomain {
            value: theta,
            domain: what,
        });
    }
    Ok(())
}

/// Singlet coincidence at separation `theta`.
fn pa(theta: f64) -> f64 {
    0.5 * (1.0 - theta.cos())
}

/// `pa(θ) ≥ ½(1 − pp′(2θ))` with singlet values substituted.
pub fn check_generalized_star(theta: f64) -> Result<InequalityReport> {
    open_unit_half_turn(theta, "(0, pi)")?;
    let rhs = 0.5 * (1.0 - malus_coincidence(2.0 * theta)?);
    Ok(InequalityReport::new(
        "generalized_star",
        Relation::AtLeast,
        pa(theta),
        rhs,
    ))
}

/// `pa(θ) + pa(θ′) + pp′(θ + θ′) ≥ 1` with singlet values substituted.
pub fn check_generalized_star_star(theta: f64, theta_prime: f64) -> Result<InequalityReport> {
    open_unit_half_turn(theta, "(0, pi)")?;
    open_unit_half_turn(theta_prime, "(0, pi)")?;
    if theta + theta_prime > PI + SATISFACTION_TOL {
        return Err(Error::AngleDomain {
            value: theta + theta_prime,
            domain: "theta + theta' <= pi",
        });
    }
    let lhs = pa(theta) + pa(theta_prime) + malus_coincidence(theta + theta_prime)?;
    Ok(InequalityReport::new(
        "generalized_star_star",
        Relation::AtLeast,
        lhs,
        1.0,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Star,
    StarStar,
}

/// Angles for a scan, in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    /// `start + k·step` for `k ≥ 1`, strictly below `end`. For the two-angle
    /// family every pair of grid points with `θ + θ′ ≤ 180°` is used.
    Open { start: f64, end: f64, step: f64 },
    /// Explicit θ values (one-angle family).
    Points { thetas: Vec<f64> },
    /// Explicit (θ, θ′) values (two-angle family).
    Pairs { pairs: Vec<(f64, f64)> },
}

impl Grid {
    fn open_points(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::EmptyGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::EmptyGrid("non-finite bounds".into()));
        }
        let mut out = Vec::new();
        let mut k = 1u64;
        loop {
            let t = start + k as f64 * step;
            if t >= end - 1e-9 {
                break;
            }
            out.push(t);
            k += 1;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_prime_deg: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub family: Family,
    pub rows: Vec<ScanRow>,
}

/// A maximal run of consecutive violated rows, with the nearest satisfied
/// neighbours (or the grid bounds) that bracket it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRegion {
    pub first_violated_deg: f64,
    pub last_violated_deg: f64,
    pub lower_bound_deg: f64,
    pub upper_bound_deg: f64,
}

pub fn scan_angles(family: Family, grid: &Grid) -> Result<Scan> {
    let rows = match (family, grid) {
        (Family::Star, Grid::Open { start, end, step }) => {
            star_rows(&Grid::open_points(*start, *end, *step)?)?
        }
        (Family::Star, Grid::Points { thetas }) => star_rows(thetas)?,
        (Family::StarStar, Grid::Open { start, end, step }) => {
            let pts = Grid::open_points(*start, *end, *step)?;
            let pairs: Vec<(f64, f64)> = pts
                .iter()
                .flat_map(|&a| pts.iter().map(move |&b| (a, b)))
                .filter(|(a, b)| a + b <= 180.0 + 1e-9)
                .collect();
            star_star_rows(&pairs)?
        }
        (Family::StarStar, Grid::Pairs { pairs }) => star_star_rows(pairs)?,
        (f, g) => {
            return Err(Error::EmptyGrid(format!(
                "grid {g:?} does not fit family {f:?}"
            )));
        }
    };
    if rows.is_empty() {
        return Err(Error::EmptyGrid("grid has no points".into()));
    }
    Ok(Scan { family, rows })
}

fn star_rows(thetas: &[f64]) -> Result<Vec<ScanRow>> {
    thetas
        .iter()
        .map(|&t| {
            let r = check_generalized_star(t.to_radians())?;
            Ok(ScanRow {
                theta_deg: t,
                theta_prime_deg: None,
                lhs: r.lhs,
                rhs: r.rhs,
                violated: !r.satisfied,
            })
        })
        .collect()
}

fn star_star_rows(pairs: &[(f64, f64)]) -> Result<Vec<ScanRow>> {
    pairs
        .iter()
        .map(|&(a, b)| {
            let r = check_generalized_star_star(a.to_radians(), b.to_radians())?;
            Ok(ScanRow {
                theta_deg: a,
                theta_prime_deg: Some(b),
                lhs: r.lhs,
                rhs: r.rhs,
                violated: !r.satisfied,
            })
        })
        .collect()
}

impl Scan {
    pub fn violated_count(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }

    /// Violation regions along θ for the one-angle family. `bounds` are the
    /// grid's outer limits, used when a region touches the edge.
    pub fn violation_regions(&self, bounds: (f64, f64)) -> Vec<ViolationRegion> {
        let mut out = Vec::new();
        let rows = &self.rows;
        let mut i = 0;
        while i < rows.len() {
            if !rows[i].violated {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < rows.len() && rows[i + 1].violated {
                i += 1;
            }
            out.push(ViolationRegion {
                first_violated_deg: rows[start].theta_deg,
                last_violated_deg: rows[i].theta_deg,
                lower_bound_deg: if start == 0 {
                    bounds.0
                } else {
                    rows[start - 1].theta_deg
                },
                upper_bound_deg: rows.get(i + 1).map_or(bounds.1, |r| r.theta_deg),
            });
            i += 1;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match self.family {
            Family::Star => writeln!(w, "theta_deg,lhs,rhs,violated")?,
            Family::StarStar => writeln!(w, "theta_deg,theta_prime_deg,lhs,rhs,violated")?,
        }
        for r in &self.rows {
            match r.theta_prime_deg {
                Some(tp) => writeln!(
                    w,
                    "{:.10},{:.10},{:.10},{:.10},{}",
                    r.theta_deg, tp, r.lhs, r.rhs, r.violated
                )?,
                None => writeln!(
                    w,
                    "{:.10},{:.10},{:.10},{}",
                    r.theta_deg, r.lhs, r.rhs, r.violated
                )?,
            }
        }
        Ok(())
    }
}
