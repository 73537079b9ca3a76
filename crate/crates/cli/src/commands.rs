use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use bellforge::inequalities::{scan_angles, Family, Grid, InequalityReport};
use bellforge::lhv::Provenance;
use bellforge::montecarlo::{run_experiment, EstimateReport, ExperimentSpec};
use bellforge::polytope::{
    implied_bound, solve_membership_with, BoundResult, DistanceMetric, FeasibilityProblem,
    FeasibilityResult, LinearConstraint, PairTarget, Term,
};
use bellforge::presets::{E, E_PRIME, P};
use bellforge::quantum::{malus_coincidence, singlet_coincidence, singlet_correlation};
use bellforge::{
    json, CoincidenceStats, Direction, LhvModel, Scenario, ScenarioPreset, Side, SCHEMA_VERSION,
};

use crate::{bound, CheckArgs, FamilyArg, FitArgs, MetricArg, PredictArgs, ScanArgs, SimulateArgs};

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(out: impl Write, command: &str, body: T) -> Result<()> {
    let mut out = out;
    json::to_writer(
        &mut out,
        &Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            body,
        },
    )?;
    writeln!(out)?;
    Ok(())
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("schema mismatch in {what} {}", path.display()))
}

#[derive(Serialize)]
struct Prediction {
    #[serde(skip_serializing_if = "Option::is_none")]
    a_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_deg: Option<f64>,
    sep_deg: f64,
    singlet_coincidence: f64,
    singlet_correlation: f64,
    malus_coincidence: f64,
}

pub fn predict(args: &PredictArgs) -> Result<ExitCode> {
    let (a, b) = match (args.sep, args.a, args.b) {
        (Some(sep), _, _) => (0.0, sep),
        (None, Some(a), Some(b)) => (a, b),
        _ => bail!("give --sep or both --a and --b"),
    };
    let da = Direction::from_degrees(a)?;
    let db = Direction::from_degrees(b)?;
    let sep = da.separation(db);
    let body = Prediction {
        a_deg: args.a,
        b_deg: args.b,
        sep_deg: sep.to_degrees(),
        singlet_coincidence: singlet_coincidence(da, db),
        singlet_correlation: singlet_correlation(da, db),
        malus_coincidence: malus_coincidence(sep)?,
    };
    emit(io::stdout().lock(), "predict", body)?;
    Ok(ExitCode::SUCCESS)
}

/// Same labels and sides in the same order, directions within 1e-9 rad.
fn same_scenario(a: &Scenario, b: &Scenario) -> bool {
    a.len() == b.len()
        && a.settings().iter().zip(b.settings()).all(|(x, y)| {
            x.label == y.label && x.side == y.side && x.direction.separation(y.direction) < 1e-9
        })
}

#[derive(Serialize)]
struct CheckBody<'a> {
    preset: &'a str,
    source: &'a str,
    all_satisfied: bool,
    reports: Vec<InequalityReport>,
}

pub fn check(args: &CheckArgs) -> Result<ExitCode> {
    let preset: ScenarioPreset = args.preset.parse()?;
    let scenario = preset.scenario();
    let (stats, source) = if args.qm {
        (CoincidenceStats::from_qm(&scenario), "qm")
    } else if let Some(path) = &args.model {
        let model: LhvModel = read_json(path, "model")?;
        if !same_scenario(model.scenario(), &scenario) {
            bail!(
                "schema mismatch: model scenario is not the {} preset",
                preset
            );
        }
        (CoincidenceStats::from_model(&model), "model")
    } else if let Some(path) = &args.stats {
        (read_json(path, "stats")?, "stats")
    } else {
        bail!("give one of --qm, --model, --stats");
    };
    let reports = preset
        .inequalities(&stats)
        .map_err(|e| anyhow!("schema mismatch: {e}"))?;
    let all_satisfied = reports.iter().all(|r| r.satisfied);
    emit(
        io::stdout().lock(),
        "check",
        CheckBody {
            preset: preset.name(),
            source,
            all_satisfied,
            reports,
        },
    )?;
    Ok(status(all_satisfied))
}

#[derive(Serialize)]
struct ScanSummary {
    family: Family,
    rows: usize,
    violated_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation_regions: Option<Vec<bellforge::inequalities::ViolationRegion>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

pub fn scan(args: &ScanArgs) -> Result<ExitCode> {
    let family = match args.family {
        FamilyArg::Star => Family::Star,
        FamilyArg::Starstar => Family::StarStar,
    };
    let grid = match (args.theta, args.theta_prime, args.step, family) {
        (Some(t), None, None, Family::Star) => Grid::Points { thetas: vec![t] },
        (Some(t), Some(tp), None, Family::StarStar) => Grid::Pairs {
            pairs: vec![(t, tp)],
        },
        (Some(_), _, _, Family::StarStar) => bail!("starstar needs both --theta and --theta-prime"),
        (Some(_), Some(_), _, Family::Star) => bail!("--theta-prime applies to starstar only"),
        (None, _, Some(step), _) => {
            if !(step.is_finite() && step > 0.0) {
                bail!("--step must be positive, got {step}");
            }
            Grid::Open {
                start: args.from,
                end: args.to,
                step,
            }
        }
        _ => bail!("give --step or --theta"),
    };
    let scan = scan_angles(family, &grid)?;

    let regions = (family == Family::Star).then(|| scan.violation_regions((args.from, args.to)));
    let summary = ScanSummary {
        family,
        rows: scan.rows.len(),
        violated_rows: scan.violated_count(),
        violation_regions: regions,
        out: args.out.as_ref().map(|p| p.display().to_string()),
    };
    match &args.out {
        Some(path) => {
            let f =
                File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            let mut w = BufWriter::new(f);
            scan.write_csv(&mut w)?;
            w.flush()?;
            emit(io::stdout().lock(), "scan", summary)?;
        }
        None => {
            scan.write_csv(io::stdout().lock())?;
            emit(io::stderr().lock(), "scan", summary)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// A preset label, or an angle in degrees matching one setting on `side`.
fn resolve_setting(scenario: &Scenario, side: Side, arg: &str) -> Result<String> {
    if let Ok(s) = scenario.setting(arg) {
        if s.side != side {
            bail!("setting `{arg}` belongs to side {}, not {side}", s.side);
        }
        return Ok(s.label.clone());
    }
    let deg: f64 = arg
        .parse()
        .map_err(|_| anyhow!("invalid setting `{arg}`: not a label or angle of this preset"))?;
    let dir = Direction::from_degrees(deg)?;
    scenario
        .settings()
        .iter()
        .find(|s| s.side == side && s.direction.separation(dir) < 1e-9)
        .map(|s| s.label.clone())
        .ok_or_else(|| anyhow!("invalid setting: no {side} setting at {deg}° in this preset"))
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    preset: &'a str,
    e_setting: &'a str,
    p_setting: &'a str,
    n: u64,
    seed: u64,
    provenance: &'a Provenance,
    estimate: &'a EstimateReport,
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let preset: ScenarioPreset = args.preset.parse()?;
    let scenario = preset.scenario();
    let e = resolve_setting(&scenario, Side::E, &args.e)?;
    let p = resolve_setting(&scenario, Side::P, &args.p)?;
    let seed = args.seed.unwrap_or(0);
    let spec = ExperimentSpec {
        scenario,
        e_setting: e.clone(),
        p_setting: p.clone(),
        n: usize::try_from(args.n)?,
        seed,
        confidence: args.confidence,
    };
    let (table, estimate) = run_experiment(&spec)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join("runs.csv");
    let json_path = args.out_dir.join("report.json");
    let mut w = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?,
    );
    table.write_csv(&mut w)?;
    w.flush()?;

    let report = SimulationReport {
        preset: preset.name(),
        e_setting: &e,
        p_setting: &p,
        n: args.n,
        seed,
        provenance: table.provenance(),
        estimate: &estimate,
    };
    let f = File::create(&json_path)
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    emit(BufWriter::new(f), "simulate", &report)?;
    emit(io::stdout().lock(), "simulate", &report)?;
    eprintln!(
        "seed {seed}: wrote {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
struct TargetsFile {
    #[serde(default)]
    preset: Option<ScenarioPreset>,
    #[serde(default)]
    scenario: Option<Scenario>,
    targets: Vec<PairTarget>,
    #[serde(default)]
    constraints: Vec<LinearConstraint>,
}

#[derive(Serialize)]
struct FitBody<'a> {
    problem: &'a FeasibilityProblem,
    result: &'a FeasibilityResult,
}

#[derive(Serialize)]
struct BoundBody<'a> {
    preset: &'a str,
    functional: &'a [Term],
    fixed: &'a [PairTarget],
    result: &'a BoundResult,
}

/// The 15%-15%-50% coincidence triplet on the three-vector scenario.
pub fn triplet_problem() -> FeasibilityProblem {
    let sc = ScenarioPreset::ThreeVector.scenario();
    let dir = |id: &str| sc.setting(id).expect("preset label").direction;
    let pa = singlet_coincidence(dir(P), dir(E));
    let pa2 = singlet_coincidence(dir(P), dir(E_PRIME));
    let ee = malus_coincidence(dir(E).separation(dir(E_PRIME))).expect("finite");
    FeasibilityProblem::new(
        sc,
        vec![
            PairTarget::new(P, E, pa),
            PairTarget::new(P, E_PRIME, pa2),
            PairTarget::new(E, E_PRIME, ee),
        ],
    )
}

pub fn fit(args: &FitArgs) -> Result<ExitCode> {
    let metric = match args.metric {
        MetricArg::Linf => DistanceMetric::Linf,
        MetricArg::L1 => DistanceMetric::L1,
    };
    if let Some(expr) = &args.bound {
        let preset: ScenarioPreset = args.preset.parse()?;
        let spec = bound::parse(expr).map_err(|e| anyhow!("malformed --bound: {e}"))?;
        let problem = FeasibilityProblem::new(preset.scenario(), spec.fixed.clone());
        let result = implied_bound(&problem, &spec.functional)?;
        emit(
            io::stdout().lock(),
            "fit",
            BoundBody {
                preset: preset.name(),
                functional: &spec.functional,
                fixed: &spec.fixed,
                result: &result,
            },
        )?;
        return Ok(status(matches!(result, BoundResult::Interval { .. })));
    }

    let problem = if args.triplet {
        triplet_problem()
    } else if let Some(path) = &args.targets {
        let file: TargetsFile = read_json(path, "targets")?;
        let scenario = match (file.scenario, file.preset) {
            (Some(_), Some(_)) => bail!("targets file gives both `scenario` and `preset`"),
            (Some(s), None) => s,
            (None, Some(p)) => p.scenario(),
            (None, None) => ScenarioPreset::ThreeVector.scenario(),
        };
        FeasibilityProblem {
            scenario,
            targets: file.targets,
            constraints: file.constraints,
        }
    } else {
        bail!("give a targets file, --triplet, or --bound");
    };
    let result = solve_membership_with(&problem, metric)?;
    emit(
        io::stdout().lock(),
        "fit",
        FitBody {
            problem: &problem,
            result: &result,
        },
    )?;
    Ok(status(result.is_feasible()))
}
