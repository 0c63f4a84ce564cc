//! Acceptance criteria for the toolkit, each returning a pass/fail verdict
//! with a one-line summary of what was measured.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wagner_core::catalog::builtin;
use wagner_core::expr::Expr;
use wagner_core::geometry::{directional_derivative, flag_at_point, lie_bracket, FrameEval, RANK_TOL};
use wagner_core::jet::{Jet, JetSpace};
use wagner_core::mechanics::{convergence_ratio, integrate_trajectory, ConnectionPath, State};
use wagner_core::reference::Status;
use wagner_core::report::{run_verify, sample_analysis, CheckSummary, VerifySummary};
use wagner_core::system::SystemDef;
use wagner_core::wagner::{flatness_scan, WagnerAnalysis, FLAT_TOL};
use wagner_core::Result;

const SEED: u64 = 7;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn from_result(id: usize, title: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Outcome { id, title, passed, detail },
            Err(e) => Outcome { id, title, passed: false, detail: format!("error: {e}") },
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<5} {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn flag_protocol(id: &str, dims: &[usize], points: usize) -> Result<(bool, String, Duration)> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sys = builtin(id)?;
    let mut matched = 0;
    for i in 0..points {
        if i % 10 == 0 {
            sys.sample_params(&mut rng);
        }
        let point = sys.sample_point(&mut rng)?;
        let flag = flag_at_point(&sys, &point, RANK_TOL)?;
        if flag.dims == dims && flag.degree == dims.len() - 1 {
            matched += 1;
        }
    }
    let elapsed = start.elapsed();
    Ok((matched == points, format!("{matched}/{points} points give dims {dims:?}"), elapsed))
}

pub fn disc_flag() -> Outcome {
    Outcome::from_result(
        1,
        "disc flag and degree",
        flag_protocol("disc", &[3, 4, 5], 50).map(|(ok, d, t)| {
            (ok && t < Duration::from_secs(1), format!("{d}, N = 2, {:.3} s (limit 1 s)", secs(t)))
        }),
    )
}

pub fn ball_flag() -> Outcome {
    Outcome::from_result(
        2,
        "ball flag and degree",
        flag_protocol("ball-sphere", &[3, 5], 50).map(|(ok, d, t)| {
            (ok && t < Duration::from_secs(1), format!("{d}, N = 1, {:.3} s (limit 1 s)", secs(t)))
        }),
    )
}

/// All selected checks must pass; returns the count and the ones that did not.
fn require<'a>(checks: impl Iterator<Item = &'a CheckSummary>) -> (bool, usize, Vec<String>) {
    let mut count = 0;
    let mut bad = Vec::new();
    for c in checks {
        count += 1;
        if c.status() != Status::Pass {
            bad.push(format!("{} {}", c.name, c.status().as_str()));
        }
    }
    (bad.is_empty() && count > 0, count, bad)
}

fn worst_rel<'a>(checks: impl Iterator<Item = &'a CheckSummary>) -> f64 {
    checks.filter_map(|c| c.max_rel_error).fold(0.0, f64::max)
}

fn worst_abs_of_zeros<'a>(checks: impl Iterator<Item = &'a CheckSummary>) -> f64 {
    checks.filter(|c| c.source == "0").map(|c| c.max_abs_error).fold(0.0, f64::max)
}

pub fn disc_connection(v: &VerifySummary) -> Outcome {
    let sel = |c: &&CheckSummary| {
        ["Gamma^", "Omega^", "Lambda^", "M0^", "M1^"].iter().any(|p| c.name.starts_with(p))
    };
    let (ok, count, bad) = require(v.checks.iter().filter(sel));
    let detail = format!(
        "{count} Γ/Ω/Λ/M components over {} samples each, max rel err {:.1e}, omitted components max {:.1e}{}",
        v.checks.iter().find(sel).map_or(0, |c| c.samples),
        worst_rel(v.checks.iter().filter(sel)),
        worst_abs_of_zeros(v.checks.iter().filter(sel)),
        if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join(", ")) }
    );
    Outcome { id: 3, title: "disc connection suite", passed: ok, detail }
}

pub fn disc_schouten(v: &VerifySummary) -> Outcome {
    let sel = |c: &&CheckSummary| c.name.starts_with("K0^");
    let (ok, count, bad) = require(v.checks.iter().filter(sel));
    let ok = ok && count == 9;
    let detail = format!(
        "{count} components, max rel err {:.1e}, zeros max {:.1e}{}",
        worst_rel(v.checks.iter().filter(sel)),
        worst_abs_of_zeros(v.checks.iter().filter(sel)),
        if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join(", ")) }
    );
    Outcome { id: 4, title: "disc Schouten suite", passed: ok, detail }
}

const DISC_WAGNER_NAMES: &[&str] =
    &["g^44", "g^55", "M*^12_4", "M*^24_5", "Pi1^2_41", "Pi1^2_42", "K1^2_243", "W^2_451", "W^2_121", "W^1_133"];

pub fn disc_wagner(v: &VerifySummary, elapsed: Duration) -> Outcome {
    let missing: Vec<&str> = DISC_WAGNER_NAMES.iter().copied().filter(|n| v.check(n).is_none()).collect();
    let (ok, count, bad) = require(DISC_WAGNER_NAMES.iter().filter_map(|n| v.check(n)));
    let fast = elapsed < Duration::from_secs(5);
    let detail = format!(
        "{count}/{} named components pass, max rel err {:.1e}, full suite {:.2} s (limit 5 s){}{}",
        DISC_WAGNER_NAMES.len(),
        worst_rel(DISC_WAGNER_NAMES.iter().filter_map(|n| v.check(n))),
        secs(elapsed),
        if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join(", ")) },
        if missing.is_empty() { String::new() } else { format!("; missing: {}", missing.join(", ")) }
    );
    Outcome { id: 5, title: "disc Wagner suite", passed: ok && fast && missing.is_empty(), detail }
}

pub fn ball_suite(v: &VerifySummary) -> Outcome {
    let named = |c: &&CheckSummary| {
        c.name.starts_with("g_") || ["g^44", "g^45", "g^55", "K0^1_121", "W^1_133"].contains(&c.name.as_str())
    };
    let (_, count, bad) = require(v.checks.iter().filter(named));
    let flagged: Vec<&str> = v
        .checks
        .iter()
        .filter(|c| c.status() == Status::Flagged)
        .map(|c| c.name.as_str())
        .collect();
    let failed_other: Vec<&str> = v
        .checks
        .iter()
        .filter(|c| c.status() == Status::Fail && !named(c))
        .map(|c| c.name.as_str())
        .collect();
    let passed = bad.is_empty() && failed_other.is_empty();
    let detail = format!(
        "{} of {count} required components pass{}; flagged as inconsistent: {}{}",
        count - bad.len(),
        if bad.is_empty() { String::new() } else { format!(" (not passing: {})", bad.join(", ")) },
        if flagged.is_empty() { "none".to_string() } else { flagged.join(", ") },
        if failed_other.is_empty() { String::new() } else { format!("; other failures: {}", failed_other.join(", ")) }
    );
    Outcome { id: 6, title: "ball suite", passed, detail }
}

pub fn ball_flatness() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let start = Instant::now();
        let sys = builtin("ball-sphere")?;
        let values: Vec<f64> = (0..25).map(|i| 0.1 + 9.9 * i as f64 / 24.0).collect();
        let entries = flatness_scan(&sys, "k", &values, 10, SEED, FLAT_TOL)?;
        let elapsed = start.elapsed();
        let min = entries.iter().map(|e| e.max_abs).fold(f64::INFINITY, f64::min);
        let ok = entries.len() == 25 && entries.iter().all(|e| !e.flat && e.max_abs > 1e-4);
        Ok((
            ok && elapsed < Duration::from_secs(30),
            format!(
                "25 values of k in [0.1, 10], 10 points each, smallest max|W| {min:.3e}, all non-flat: {}, {:.2} s (limit 30 s)",
                entries.iter().all(|e| !e.flat),
                secs(elapsed)
            ),
        ))
    };
    Outcome::from_result(7, "ball flatness scan", run())
}

pub fn cross_oracle(disc: &VerifySummary, ball: &VerifySummary) -> Outcome {
    let name = "projected connection agrees";
    let worst = [disc, ball].iter().filter_map(|v| v.check(name)).map(|c| c.max_abs_error).fold(0.0, f64::max);
    let samples: usize = [disc, ball].iter().filter_map(|v| v.check(name)).map(|c| c.samples).sum();
    let ok = samples == 200 && worst < 1e-9;
    Outcome {
        id: 8,
        title: "projected vs nonholonomic connection",
        passed: ok,
        detail: format!("{samples} points on disc and ball, max |ΔΓ| {worst:.1e} (limit 1e-9)"),
    }
}

/// Largest violation of the bracket identities on the frame at one point.
fn bracket_identities(frame: &FrameEval) -> Result<f64> {
    let n = frame.dim();
    let (x, y, z) = (frame.row(0), frame.row(1), frame.row(n - 1));
    let diff = |a: &[Jet], b: &[Jet]| a.iter().zip(b).map(|(p, q)| (p.value() - q.value()).abs()).fold(0.0, f64::max);
    let sum = |a: &[Jet], b: &[Jet]| a.iter().zip(b).map(|(p, q)| p + q).collect::<Vec<_>>();
    let scale = |f: &Jet, v: &[Jet]| v.iter().map(|p| f * p).collect::<Vec<_>>();
    let xy = lie_bracket(x, y)?;
    let yx = lie_bracket(y, x)?;
    let antisym = diff(&xy, &scale(&x[0].constant_like(-1.0), &yx));
    let jacobi = sum(
        &sum(&lie_bracket(x, &lie_bracket(y, z)?)?, &lie_bracket(y, &lie_bracket(z, x)?)?),
        &lie_bracket(z, &xy)?,
    );
    let jac = jacobi.iter().map(|j| j.value().abs()).fold(0.0, f64::max);
    let f = &frame.metric()[0][0];
    let leibniz = diff(
        &lie_bracket(x, &scale(f, y))?,
        &sum(&scale(&directional_derivative(x, f)?, y), &scale(f, &xy)),
    );
    Ok(antisym.max(jac).max(leibniz))
}

/// Relative deviation of the rescaled Schouten and Wagner tensors from the
/// tensorial transformation law.
fn covariance_defect(an: &WagnerAnalysis) -> Result<f64> {
    let frame = &an.frame;
    let m = frame.rank();
    let space = frame.space();
    let (q0, q1) = (space.variable(0)?, space.variable(1)?);
    let f: Vec<Jet> = (0..m).map(|a| (&q0 + &(&q1 * (a as f64 + 1.0))).sin() * 0.4 + 1.3).collect();
    let rows = frame
        .rows()
        .iter()
        .enumerate()
        .map(|(a, row)| row.iter().map(|x| if a < m { x * &f[a] } else { x.clone() }).collect())
        .collect();
    let scaled = WagnerAnalysis::from_frame(FrameEval::from_parts(rows, frame.metric().clone(), frame.levels().to_vec())?)?;
    let s: Vec<f64> = (0..frame.dim()).map(|a| if a < m { f[a].value() } else { 1.0 }).collect();
    let mut worst = 0.0f64;
    for (before, after) in [(&an.schouten, &scaled.schouten), (an.wagner(), scaled.wagner())] {
        let b = before.values();
        let a = after.values();
        b.for_each(|i, &v| {
            let want = v * s[i[0]] * s[i[1]] * s[i[2]] / s[i[3]];
            worst = worst.max((a[[i[0], i[1], i[2], i[3]]] - want).abs() / want.abs().max(1.0));
        });
    }
    Ok(worst)
}

/// Largest relative disagreement between jet first partials of the system's
/// metric and frame entries and Richardson-extrapolated central differences.
fn derivative_defect(sys: &SystemDef, point: &[f64]) -> Result<f64> {
    let params = sys.param_values();
    let space = JetSpace::new(point, 1);
    let mut worst = 0.0f64;
    let entries: Vec<&Expr> = sys.metric.iter().chain(&sys.frame).flatten().filter(|e| !e.is_zero()).collect();
    for e in entries {
        let jet = e.eval_jet(&space, &params)?;
        let grad = jet.gradient_values()?;
        for (i, g) in grad.iter().enumerate() {
            let central = |h: f64| {
                let (mut a, mut b) = (point.to_vec(), point.to_vec());
                a[i] += h;
                b[i] -= h;
                (e.eval(&a, &params) - e.eval(&b, &params)) / (2.0 * h)
            };
            let fd = (4.0 * central(0.5e-5) - central(1e-5)) / 3.0;
            worst = worst.max((g - fd).abs() / fd.abs().max(1.0));
        }
    }
    Ok(worst)
}

pub fn property_suites(summaries: &[&VerifySummary]) -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (mut brackets, mut covariance, mut derivatives) = (0.0f64, 0.0f64, 0.0f64);
        for id in ["disc", "ball-sphere", "heisenberg"] {
            let mut sys = builtin(id)?;
            sys.sample_params(&mut rng);
            for _ in 0..10 {
                let an = sample_analysis(&sys, &mut rng, None)?;
                brackets = brackets.max(bracket_identities(&an.frame)?);
                covariance = covariance.max(covariance_defect(&an)?);
                derivatives = derivatives.max(derivative_defect(&sys, an.frame.point())?);
            }
        }
        let mut failing = Vec::new();
        let mut property_count = 0;
        for v in summaries {
            for c in v.checks.iter().filter(|c| c.provenance == wagner_core::reference::Provenance::Property) {
                property_count += 1;
                if c.status() != Status::Pass {
                    failing.push(format!("{}:{}", v.system, c.name));
                }
            }
        }
        let ok = brackets < 1e-10 && covariance < 1e-8 && derivatives < 1e-6 && failing.is_empty();
        Ok((
            ok,
            format!(
                "bracket identities {brackets:.1e}, rescaling covariance {covariance:.1e}, jet vs finite difference \
                 {derivatives:.1e}, {property_count} per-point identity checks (torsion, compatibility, projectors, \
                 antisymmetry, positivity, flag) {}",
                if failing.is_empty() { "all pass".to_string() } else { format!("failing: {}", failing.join(", ")) }
            ),
        ))
    };
    Outcome::from_result(9, "property suites", run())
}

pub fn mechanics() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let sys = builtin("disc")?;
        let initial = State { q: vec![0.1, -0.2, 0.3, 0.5, 1.1], u: vec![0.7, -0.4, 0.9] };
        let traj = integrate_trajectory(&sys, &initial, 10.0, 1e-3, 100, ConnectionPath::Intrinsic)?;
        let drift = traj.max_energy_drift();
        let residual = traj.max_constraint_residual();
        let ratio = convergence_ratio(&sys, &initial, 2.0, 0.04)?;
        let ok = drift < 1e-8 && residual < 1e-12 && (12.0..=20.0).contains(&ratio);
        Ok((
            ok,
            format!("disc t in [0, 10], dt = 1e-3: energy drift {drift:.1e}, constraint residual {residual:.1e}; step-halving ratio {ratio:.3}"),
        ))
    };
    Outcome::from_result(10, "mechanics", run())
}

/// Independent symbolic values for the Heisenberg system: Schouten
/// `K^d_{abc}` at `(a, b) = (0, 1)` and Wagner at `(0, 2)`, `(1, 2)`, each
/// over `(c, d)` in lexicographic order.
pub const HEISENBERG_ORACLE: &[([f64; 3], [f64; 4], [f64; 4], [f64; 4])] = &[
    (
        [0.3, -0.7, 0.2],
        [3.00337522167769440e-02, -6.42150225968231125e-01, 5.84943078888656043e-01, -3.00337522167769440e-02],
        [-2.25253141625827123e-03, 4.81612669476173191e-02, -4.38707309166491838e-02, 2.25253141625827123e-03],
        [5.25590663793596476e-03, -1.12376289544440400e-01, 1.02365038805514758e-01, -5.25590663793596476e-03],
    ),
    (
        [1.1, 0.4, -0.5],
        [-4.57746845187936430e-02, -4.32778835450412513e-01, 5.42013878052079012e-01, 4.57746845187936430e-02],
        [1.25880382426682511e-02, 1.19014179748863455e-01, -1.49053816464321781e-01, -1.25880382426682511e-02],
        [4.57746845187936412e-03, 4.32778835450412583e-02, -5.42013878052079109e-02, -4.57746845187936412e-03],
    ),
    (
        [-0.6, 0.9, 0.8],
        [6.06085547852698789e-02, -5.39865089846570667e-01, 4.89357960858845753e-01, -6.06085547852698789e-02],
        [9.09128321779048218e-03, -8.09797634769855862e-02, 7.34036941288268574e-02, -9.09128321779048218e-03],
        [-1.36369248266857233e-02, 1.21469645215478414e-01, -1.10105541193240300e-01, 1.36369248266857233e-02],
    ),
];

pub fn heisenberg_oracle() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let sys = builtin("heisenberg")?;
        let mut worst = 0.0f64;
        let mut compared = 0;
        for (point, k0, w02, w12) in HEISENBERG_ORACLE {
            let an = WagnerAnalysis::run(&sys, point, None)?;
            let k = an.schouten.values();
            let w = an.wagner().values();
            // every component: listed ones, their antisymmetric partners, zeros elsewhere
            let expected_k = |a: usize, b: usize, j: usize| match (a, b) {
                (0, 1) => k0[j],
                (1, 0) => -k0[j],
                _ => 0.0,
            };
            let expected_w = |a: usize, b: usize, j: usize| match (a, b) {
                (0, 2) => w02[j],
                (2, 0) => -w02[j],
                (1, 2) => w12[j],
                (2, 1) => -w12[j],
                _ => 0.0,
            };
            k.for_each(|i, &v| {
                worst = worst.max((v - expected_k(i[0], i[1], 2 * i[2] + i[3])).abs());
                compared += 1;
            });
            w.for_each(|i, &v| {
                worst = worst.max((v - expected_w(i[0], i[1], 2 * i[2] + i[3])).abs());
                compared += 1;
            });
        }
        Ok((worst < 1e-9, format!("{compared} components at 3 points, max abs err {worst:.1e} (limit 1e-9)")))
    };
    Outcome::from_result(11, "Heisenberg oracle", run())
}

/// Run every criterion in order.
pub fn run_all() -> Vec<Outcome> {
    let mut out = vec![disc_flag(), ball_flag()];
    let start = Instant::now();
    let disc = run_verify(&builtin("disc").expect("built-in"), SEED);
    let disc_elapsed = start.elapsed();
    let ball = run_verify(&builtin("ball-sphere").expect("built-in"), SEED);
    let heis = run_verify(&builtin("heisenberg").expect("built-in"), SEED);
    match (&disc, &ball, &heis) {
        (Ok(d), Ok(b), Ok(h)) => {
            out.push(disc_connection(d));
            out.push(disc_schouten(d));
            out.push(disc_wagner(d, disc_elapsed));
            out.push(ball_suite(b));
            out.push(ball_flatness());
            out.push(cross_oracle(d, b));
            out.push(property_suites(&[d, b, h]));
        }
        _ => {
            let err = [&disc, &ball, &heis].iter().find_map(|r| r.as_ref().err()).map(ToString::to_string);
            for (id, title) in [
                (3, "disc connection suite"),
                (4, "disc Schouten suite"),
                (5, "disc Wagner suite"),
                (6, "ball suite"),
            ] {
                out.push(Outcome { id, title, passed: false, detail: format!("verify failed: {}", err.clone().unwrap_or_default()) });
            }
            out.push(ball_flatness());
            for (id, title) in [(8, "projected vs nonholonomic connection"), (9, "property suites")] {
                out.push(Outcome { id, title, passed: false, detail: format!("verify failed: {}", err.clone().unwrap_or_default()) });
            }
        }
    }
    out.push(mechanics());
    out.push(heisenberg_oracle());
    out
}

