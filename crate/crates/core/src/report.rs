//! Machine-readable reports: one JSON document per command, keys sorted,
//! every number finite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::connection::projected_connection_from_ambient;
use crate::error::{Error, Result};
use crate::geometry::{flag_at_point, orthogonal_projectors, FlagReport, RANK_TOL};
use crate::linalg::min_eigenvalue;
use crate::mechanics::Sample;
use crate::reference::{check_table, reference_table, CheckOutcome, Provenance, Status};
use crate::system::SystemDef;
use crate::tensor::Tensor;
use crate::wagner::{derived_seed, ScanEntry, WagnerAnalysis};

/// Points per parameter draw in `verify`.
pub const VERIFY_POINTS: usize = 20;
/// Parameter draws in `verify`.
pub const VERIFY_DRAWS: usize = 5;

const POINT_RETRIES: usize = 20;

/// Tolerances for the identities checked at every point.
pub const TORSION_TOL: f64 = 1e-10;
pub const COMPATIBILITY_TOL: f64 = 1e-9;
pub const CROSS_ORACLE_TOL: f64 = 1e-9;
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

fn property(name: &str, group: &'static str, residual: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        group,
        provenance: Provenance::Property,
        source: format!("residual <= {tol:e}"),
        expected: 0.0,
        computed: residual,
        status: if residual <= tol { Status::Pass } else { Status::Fail },
        note: None,
    }
}

/// Identities that must hold at any regular point.
pub fn property_checks(sys: &SystemDef, an: &WagnerAnalysis) -> Result<Vec<CheckOutcome>> {
    let frame = &an.frame;
    let con = &an.connection;
    let mut out = Vec::new();

    let flag = flag_at_point(sys, frame.point(), RANK_TOL)?;
    let flag_ok = flag.dims == frame.levels();
    out.push(property("flag matches declared levels", "flag", if flag_ok { 0.0 } else { 1.0 }, 0.0));

    out.push(property("torsion identity", "connection", con.torsion_residual(), TORSION_TOL));
    out.push(property(
        "metric compatibility",
        "connection",
        con.metric_compatibility_residual(frame)?,
        COMPATIBILITY_TOL,
    ));
    let projected = projected_connection_from_ambient(frame)?;
    let mut cross = 0.0f64;
    projected.for_each(|i, j| cross = cross.max((j.value() - con.gamma.get(i).value()).abs()));
    out.push(property("projected connection agrees", "connection", cross, CROSS_ORACLE_TOL));

    for level in 0..frame.levels().len() - 1 {
        let r = orthogonal_projectors(frame, level)?.residuals(frame.metric());
        let worst = r.idempotence.max(r.complement).max(r.orthogonality);
        out.push(property(&format!("projector identities level {level}"), "projectors", worst, PROJECTOR_TOL));
    }

    if !an.levels.is_empty() {
        let min_eig = an.levels.iter().map(|l| min_eigenvalue(&l.metric.upper)).fold(f64::INFINITY, f64::min);
        out.push(CheckOutcome {
            source: "smallest eigenvalue > 0".into(),
            computed: min_eig,
            status: if min_eig > 0.0 { Status::Pass } else { Status::Fail },
            ..property("level metrics positive definite", "level metric", 0.0, 0.0)
        });
    }

    out.push(property("schouten antisymmetry", "schouten", an.schouten.antisymmetry_residual(), ANTISYMMETRY_TOL));
    for level in &an.levels {
        out.push(property(
            &format!("level {} curvature antisymmetry", level.metric.level),
            "level curvature",
            level.curvature.antisymmetry_residual(),
            ANTISYMMETRY_TOL,
        ));
    }
    Ok(out)
}

/// Reference and property checks at one point.
pub fn checks_at(sys: &SystemDef, an: &WagnerAnalysis) -> Result<Vec<CheckOutcome>> {
    let mut out = match reference_table(sys) {
        Some(table) => check_table(sys, &table?, an)?,
        None => Vec::new(),
    };
    out.extend(property_checks(sys, an)?);
    Ok(out)
}

/// One check aggregated over every verify sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub group: &'static str,
    pub provenance: Provenance,
    pub source: String,
    pub samples: usize,
    pub passed: usize,
    pub flagged: usize,
    pub failed: usize,
    pub max_abs_error: f64,
    /// Largest relative error over samples with a nonzero reference value.
    pub max_rel_error: Option<f64>,
    /// The sample with the largest absolute error.
    pub worst_expected: f64,
    pub worst_computed: f64,
    pub note: Option<String>,
}

impl CheckSummary {
    fn new(o: &CheckOutcome) -> Self {
        CheckSummary {
            name: o.name.clone(),
            group: o.group,
            provenance: o.provenance,
            source: o.source.clone(),
            samples: 0,
            passed: 0,
            flagged: 0,
            failed: 0,
            max_abs_error: -1.0,
            max_rel_error: None,
            worst_expected: o.expected,
            worst_computed: o.computed,
            note: None,
        }
    }

    fn absorb(&mut self, o: &CheckOutcome) {
        self.samples += 1;
        match o.status {
            Status::Pass => self.passed += 1,
            Status::Flagged => self.flagged += 1,
            Status::Fail => self.failed += 1,
        }
        if o.abs_error() > self.max_abs_error {
            self.max_abs_error = o.abs_error();
            self.worst_expected = o.expected;
            self.worst_computed = o.computed;
        }
        if let Some(r) = o.rel_error() {
            self.max_rel_error = Some(self.max_rel_error.map_or(r, |m| m.max(r)));
        }
        if self.note.is_none() {
            self.note.clone_from(&o.note);
        }
    }

    /// Worst status over all samples.
    pub fn status(&self) -> Status {
        if self.failed > 0 {
            Status::Fail
        } else if self.flagged > 0 {
            Status::Flagged
        } else {
            Status::Pass
        }
    }
}

/// Outcome of `verify` for one system.
#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub system: String,
    pub seed: u64,
    /// Parameter values of each draw, in declaration order.
    pub draws: Vec<Vec<(String, f64)>>,
    pub points: Vec<Vec<Vec<f64>>>,
    pub checks: Vec<CheckSummary>,
}

impl VerifySummary {
    /// No check failed anywhere (flagged entries do not count as failures).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status() != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn is_singular(e: &Error) -> bool {
    matches!(e, Error::Singular(_) | Error::SingularMatrix(_) | Error::NotPositiveDefinite(_))
}

/// Draw a regular point and analyse it, redrawing on singular samples.
pub fn sample_analysis(sys: &SystemDef, rng: &mut ChaCha8Rng, order: Option<usize>) -> Result<WagnerAnalysis> {
    let mut last = None;
    for _ in 0..POINT_RETRIES {
        let point = sys.sample_point(rng)?;
        match WagnerAnalysis::run(sys, &point, order) {
            Ok(an) => return Ok(an),
            Err(e) if is_singular(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Every reference and property check at `points` random points for each
/// of `draws` random parameter draws.
pub fn run_verify_with(sys: &SystemDef, seed: u64, draws: usize, points: usize) -> Result<VerifySummary> {
    let per_draw: Vec<(Vec<(String, f64)>, Vec<Vec<f64>>, Vec<Vec<CheckOutcome>>)> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, d as u64));
            let mut local = sys.clone();
            local.sample_params(&mut rng);
            let params = local.params.iter().map(|p| (p.name.clone(), p.value)).collect();
            let mut pts = Vec::with_capacity(points);
            let mut outcomes = Vec::with_capacity(points);
            for _ in 0..points {
                let an = sample_analysis(&local, &mut rng, None)?;
                pts.push(an.frame.point().to_vec());
                outcomes.push(checks_at(&local, &an)?);
            }
            Ok((params, pts, outcomes))
        })
        .collect::<Result<_>>()?;

    let mut checks: Vec<CheckSummary> = Vec::new();
    let mut draws_out = Vec::new();
    let mut points_out = Vec::new();
    for (params, pts, outcomes) in per_draw {
        for o in outcomes.iter().flatten() {
            let idx = match checks.iter().position(|c| c.name == o.name && c.source == o.source) {
                Some(i) => i,
                None => {
                    checks.push(CheckSummary::new(o));
                    checks.len() - 1
                }
            };
            checks[idx].absorb(o);
        }
        draws_out.push(params);
        points_out.push(pts);
    }
    Ok(VerifySummary { system: sys.id.clone(), seed, draws: draws_out, points: points_out, checks })
}

pub fn run_verify(sys: &SystemDef, seed: u64) -> Result<VerifySummary> {
    run_verify_with(sys, seed, VERIFY_DRAWS, VERIFY_POINTS)
}

fn num(x: f64) -> Value {
    debug_assert!(x.is_finite(), "non-finite number in report");
    json!(x)
}

fn tensor_json(t: &Tensor<f64>) -> Value {
    fn nest(data: &[f64], shape: &[usize]) -> Value {
        match shape {
            [] => num(data[0]),
            [n] => Value::Array(data[..*n].iter().map(|&x| num(x)).collect()),
            [n, rest @ ..] => {
                let stride: usize = rest.iter().product();
                Value::Array((0..*n).map(|i| nest(&data[i * stride..], rest)).collect())
            }
        }
    }
    nest(t.data(), t.shape())
}

fn block(layout: &str, values: Value) -> Value {
    json!({ "layout": layout, "values": values })
}

fn matrix_json(m: &[Vec<crate::jet::Jet>]) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(|j| num(j.value())).collect())).collect())
}

fn params_json(sys: &SystemDef) -> Value {
    let mut map = Map::new();
    for p in &sys.params {
        map.insert(p.name.clone(), num(p.value));
    }
    Value::Object(map)
}

fn check_json(c: &CheckOutcome) -> Value {
    let mut v = json!({
        "name": c.name,
        "group": c.group,
        "provenance": c.provenance.as_str(),
        "reference": c.source,
        "expected": num(c.expected),
        "computed": num(c.computed),
        "abs_error": num(c.abs_error()),
        "status": c.status.as_str(),
        "pass": c.status == Status::Pass,
    });
    if let Some(r) = c.rel_error() {
        v["rel_error"] = num(r);
    }
    if let Some(n) = &c.note {
        v["note"] = json!(n);
    }
    v
}

fn flag_json(flag: &FlagReport) -> Value {
    json!({
        "dims": flag.dims,
        "degree": flag.degree,
        "singular_values": flag.singular_values.iter()
            .map(|s| Value::Array(s.iter().map(|&x| num(x)).collect()))
            .collect::<Vec<_>>(),
    })
}

/// Full `analyze` document.
pub fn analysis_report(sys: &SystemDef, an: &WagnerAnalysis, seed: Option<u64>) -> Result<Value> {
    let flag = flag_at_point(sys, an.frame.point(), RANK_TOL)?;
    let con = &an.connection;
    let levels: Vec<Value> = an
        .levels
        .iter()
        .map(|l| {
            json!({
                "level": l.metric.level,
                "block": [l.metric.lo + 1, l.metric.hi],
                "metric_upper": block("[A-lo][B-lo] = g^{AB}", matrix_json(&l.metric.upper)),
                "mu": block("[A-lo][a][b] = M*^{ab}_A", tensor_json(&l.mu.components.values())),
                "pi": block("[A][b][c] = Pi^c_{Ab}", tensor_json(&l.pi.components.values())),
                "curvature": block("[a][b][c][d] = K^d_{abc}", tensor_json(&l.curvature.values())),
            })
        })
        .collect();
    let checks: Vec<Value> = checks_at(sys, an)?.iter().map(check_json).collect();
    let mut doc = json!({
        "command": "analyze",
        "system": sys.id,
        "chart": sys.chart,
        "point": an.frame.point().iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "params": params_json(sys),
        "order": an.frame.order(),
        "flag": flag_json(&flag),
        "degree": an.degree(),
        "indexing": "zero-based; upper index last",
        "blocks": {
            "metric": block("[a][b] = g_ab", matrix_json(&con.metric)),
            "structure": block("[b][c][a] = C^a_{bc}", tensor_json(&con.structure.values())),
            "gamma": block("[a][b][c] = Gamma^c_{ab}", tensor_json(&con.gamma.values())),
            "omega": block("[a][b][c] = Omega^c_{ab}", tensor_json(&con.omega.values())),
            "lambda": block("[p-m][c][d] = Lambda^d_{pc}", tensor_json(&con.lambda.values())),
            "schouten": block("[a][b][c][d] = K^d_{abc}", tensor_json(&an.schouten.values())),
            "levels": levels,
            "wagner": block("[a][b][c][d] = K^d_{abc}", tensor_json(&an.wagner().values())),
        },
        "wagner_max_abs": num(an.wagner().max_abs()),
        "checks": checks,
    });
    if let Some(s) = seed {
        doc["seed"] = json!(s);
    }
    Ok(doc)
}

/// `verify` document.
pub fn verify_report(summary: &VerifySummary) -> Value {
    let checks: Vec<Value> = summary
        .checks
        .iter()
        .map(|c| {
            let mut v = json!({
                "name": c.name,
                "group": c.group,
                "provenance": c.provenance.as_str(),
                "reference": c.source,
                "samples": c.samples,
                "passed": c.passed,
                "flagged": c.flagged,
                "failed": c.failed,
                "max_abs_error": num(c.max_abs_error),
                "worst_expected": num(c.worst_expected),
                "worst_computed": num(c.worst_computed),
                "status": c.status().as_str(),
                "pass": c.status() == Status::Pass,
            });
            if let Some(r) = c.max_rel_error {
                v["max_rel_error"] = num(r);
            }
            if let Some(n) = &c.note {
                v["note"] = json!(n);
            }
            v
        })
        .collect();
    let count = |s: Status| summary.checks.iter().filter(|c| c.status() == s).count();
    let draws: Vec<Value> = summary
        .draws
        .iter()
        .zip(&summary.points)
        .map(|(params, pts)| {
            let map: Map<String, Value> = params.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
            json!({
                "params": map,
                "points": pts.iter()
                    .map(|p| Value::Array(p.iter().map(|&x| num(x)).collect()))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "command": "verify",
        "system": summary.system,
        "seed": summary.seed,
        "draws": draws,
        "checks": checks,
        "summary": {
            "pass": count(Status::Pass),
            "flagged": count(Status::Flagged),
            "fail": count(Status::Fail),
        },
        "passed": summary.passed(),
    })
}

/// `scan` document.
pub fn scan_report(sys: &SystemDef, param: &str, entries: &[ScanEntry], samples: usize, seed: u64, flat_tol: f64) -> Value {
    let rows: Vec<Value> = entries
        .iter()
        .map(|e| json!({ "value": num(e.value), "max_abs": num(e.max_abs), "flat": e.flat }))
        .collect();
    json!({
        "command": "scan",
        "system": sys.id,
        "param": param,
        "params": params_json(sys),
        "samples": samples,
        "seed": seed,
        "flat_tol": num(flat_tol),
        "entries": rows,
        "all_non_flat": entries.iter().all(|e| !e.flat),
    })
}

/// One line of `geodesic` output.
pub fn sample_json(s: &Sample) -> Value {
    json!({
        "t": num(s.t),
        "q": s.q.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "u": s.u.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "energy": num(s.energy),
        "energy_drift": num(s.energy_drift),
        "constraint_residual": num(s.constraint_residual),
    })
}

/// Canonical text of a report document.
pub fn to_text(doc: &Value) -> String {
    serde_json::to_string_pretty(doc).expect("report values serialize")
}

/// Parse a report back from its text.
pub fn from_text(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Usage(format!("malformed report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;

    #[test]
    fn analyze_report_round_trips() {
        let sys = builtin("heisenberg").unwrap();
        let an = WagnerAnalysis::run(&sys, &[0.3, -0.7, 0.2], None).unwrap();
        let text = to_text(&analysis_report(&sys, &an, Some(7)).unwrap());
        assert_eq!(to_text(&from_text(&text).unwrap()), text);
    }

    #[test]
    fn small_verify_passes_on_heisenberg() {
        let sys = builtin("heisenberg").unwrap();
        let summary = run_verify_with(&sys, 1, 1, 3).unwrap();
        assert!(summary.passed(), "{:?}", summary.checks.iter().filter(|c| c.failed > 0).collect::<Vec<_>>());
    }
}
