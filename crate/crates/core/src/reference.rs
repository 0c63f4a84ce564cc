//! Published closed-form component values for the built-in systems, and the
//! machinery that compares them with computed components at a point.
//!
//! Indices in quantity names are 1-based, as in the usual notation:
//! `Gamma^1_23` is `Γ^1_{23}`, `K0^2_121` the Schouten component
//! `K^2_{121}`, `W^1_133` the Wagner component `K^1_{133}`.

use std::collections::BTreeMap;
use std::fmt;

use crate::connection::curvature_of;
use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::{orthogonal_projectors, ProjectorPair};
use crate::jet::Jet;
use crate::linalg::{self, JetMatrix};
use crate::system::SystemDef;
use crate::tensor::Tensor;
use crate::wagner::{extend_metric_level, WagnerAnalysis};

/// A single component, 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    /// Induced metric `g_ab` on `V`.
    Metric { a: usize, b: usize },
    /// `{^c_{ab}}`.
    Braces { c: usize, a: usize, b: usize },
    Omega { c: usize, a: usize, b: usize },
    Gamma { c: usize, a: usize, b: usize },
    /// `Λ^d_{pc}`.
    Lambda { d: usize, p: usize, c: usize },
    /// Level-`level` nonholonomicity `M^p_{ab}`.
    Nonholonomicity { level: usize, p: usize, a: usize, b: usize },
    /// Projector coordinates `p^a_i` onto `V_level`.
    ProjectorP { level: usize, a: usize, i: usize },
    /// Complement coordinates `q^p_i`.
    ProjectorQ { level: usize, p: usize, i: usize },
    /// Schouten `K^d_{abc}`.
    Schouten { d: usize, a: usize, b: usize, c: usize },
    /// Extended metric `ḡ^{AB}`.
    LevelMetric { a: usize, b: usize },
    /// `M*^{ab}_A`.
    Mu { big: usize, a: usize, b: usize },
    /// `Π^c_{Ab}` at `level`.
    Pi { level: usize, c: usize, big: usize, b: usize },
    /// Level curvature `K̄^d_{abc}`.
    LevelCurvature { level: usize, d: usize, a: usize, b: usize, c: usize },
    /// Wagner `K^d_{abc}`.
    Wagner { d: usize, a: usize, b: usize, c: usize },
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Quantity::*;
        match *self {
            Metric { a, b } => write!(f, "g_{a}{b}"),
            Braces { c, a, b } => write!(f, "braces^{c}_{a}{b}"),
            Omega { c, a, b } => write!(f, "Omega^{c}_{a}{b}"),
            Gamma { c, a, b } => write!(f, "Gamma^{c}_{a}{b}"),
            Lambda { d, p, c } => write!(f, "Lambda^{d}_{p}{c}"),
            Nonholonomicity { level, p, a, b } => write!(f, "M{level}^{p}_{a}{b}"),
            ProjectorP { level, a, i } => write!(f, "p{level}^{a}_{i}"),
            ProjectorQ { level, p, i } => write!(f, "q{level}^{p}_{i}"),
            Schouten { d, a, b, c } => write!(f, "K0^{d}_{a}{b}{c}"),
            LevelMetric { a, b } => write!(f, "g^{a}{b}"),
            Mu { big, a, b } => write!(f, "M*^{a}{b}_{big}"),
            Pi { level, c, big, b } => write!(f, "Pi{level}^{c}_{big}{b}"),
            LevelCurvature { level, d, a, b, c } => write!(f, "K{level}^{d}_{a}{b}{c}"),
            Wagner { d, a, b, c } => write!(f, "W^{d}_{a}{b}{c}"),
        }
    }
}

impl Quantity {
    /// Report group the quantity belongs to.
    pub fn group(&self) -> &'static str {
        use Quantity::*;
        match self {
            Metric { .. } => "induced metric",
            Braces { .. } | Omega { .. } | Gamma { .. } => "connection",
            Lambda { .. } | Nonholonomicity { .. } => "nonholonomicity",
            ProjectorP { .. } | ProjectorQ { .. } => "projectors",
            Schouten { .. } => "schouten",
            LevelMetric { .. } | Mu { .. } => "level metric",
            Pi { .. } => "iterated connection",
            LevelCurvature { .. } => "level curvature",
            Wagner { .. } => "wagner",
        }
    }
}

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    /// A published closed form.
    Published,
    /// An independent symbolic computation frozen before the build.
    Oracle,
    /// An identity that must hold for any input.
    Property,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Published => "published",
            Provenance::Oracle => "oracle",
            Provenance::Property => "property",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    /// The reference value disagrees, and is itself inconsistent with other
    /// published data.
    Flagged,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Flagged => "flagged",
            Status::Fail => "fail",
        }
    }
}

/// Pass when `|computed − expected| ≤ max(rel·|expected|, abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn accepts(&self, expected: f64, computed: f64) -> bool {
        (computed - expected).abs() <= (self.rel * expected.abs()).max(self.abs)
    }
}

/// Blocks whose components not listed explicitly are published as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Metric,
    Braces,
    Omega,
    Gamma,
    Lambda,
    Schouten,
    Wagner,
}

#[derive(Debug, Clone)]
pub struct ReferenceEntry {
    pub quantity: Quantity,
    pub expected: Expr,
    pub source: String,
    pub provenance: Provenance,
}

/// Reference values for one system.
#[derive(Debug, Clone)]
pub struct ReferenceTable {
    pub system: String,
    pub tolerance: Tolerance,
    pub entries: Vec<ReferenceEntry>,
}

struct Spec {
    tolerance: Tolerance,
    provenance: Provenance,
    entries: &'static [(Quantity, &'static str)],
    complete: &'static [Block],
}

/// Reference table for a built-in system id.
pub fn reference_table(sys: &SystemDef) -> Option<Result<ReferenceTable>> {
    let spec = match sys.id.as_str() {
        "disc" => disc_spec(),
        "ball-sphere" => ball_spec(),
        "heisenberg" => heisenberg_spec(),
        _ => return None,
    };
    Some(build_table(sys, spec))
}

fn build_table(sys: &SystemDef, spec: Spec) -> Result<ReferenceTable> {
    let names = sys.param_names();
    let mut entries = Vec::new();
    for &(quantity, text) in spec.entries {
        let expected = expr::parse(text, &sys.chart, &names)?;
        entries.push(ReferenceEntry { quantity, expected, source: text.to_string(), provenance: spec.provenance });
    }
    let listed: Vec<Quantity> = entries.iter().map(|e| e.quantity).collect();
    for block in spec.complete {
        for quantity in block_quantities(*block, sys.rank(), sys.dim()) {
            if !listed.contains(&quantity) {
                entries.push(ReferenceEntry {
                    quantity,
                    expected: Expr::zero(),
                    source: "0".into(),
                    provenance: spec.provenance,
                });
            }
        }
    }
    Ok(ReferenceTable { system: sys.id.clone(), tolerance: spec.tolerance, entries })
}

fn block_quantities(block: Block, m: usize, n: usize) -> Vec<Quantity> {
    let mut out = Vec::new();
    let r = |k: usize| 1..=k;
    match block {
        Block::Metric => {
            for a in r(m) {
                for b in r(m) {
                    out.push(Quantity::Metric { a, b });
                }
            }
        }
        Block::Braces | Block::Omega | Block::Gamma => {
            for c in r(m) {
                for a in r(m) {
                    for b in r(m) {
                        out.push(match block {
                            Block::Braces => Quantity::Braces { c, a, b },
                            Block::Omega => Quantity::Omega { c, a, b },
                            _ => Quantity::Gamma { c, a, b },
                        });
                    }
                }
            }
        }
        Block::Lambda => {
            for d in r(m) {
                for p in m + 1..=n {
                    for c in r(m) {
                        out.push(Quantity::Lambda { d, p, c });
                    }
                }
            }
        }
        Block::Schouten | Block::Wagner => {
            let slots = if block == Block::Schouten { m } else { n };
            for a in r(slots) {
                for b in a + 1..=slots {
                    for c in r(m) {
                        for d in r(m) {
                            out.push(if block == Block::Schouten {
                                Quantity::Schouten { d, a, b, c }
                            } else {
                                Quantity::Wagner { d, a, b, c }
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Result of comparing one reference entry at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub group: &'static str,
    pub provenance: Provenance,
    pub source: String,
    pub expected: f64,
    pub computed: f64,
    pub status: Status,
    /// Why a mismatch was flagged rather than failed.
    pub note: Option<String>,
}

impl CheckOutcome {
    pub fn abs_error(&self) -> f64 {
        (self.computed - self.expected).abs()
    }

    /// Relative error, `None` for a zero reference value.
    pub fn rel_error(&self) -> Option<f64> {
        (self.expected != 0.0).then(|| self.abs_error() / self.expected.abs())
    }
}

/// Computed values of quantities from one analysis, with projectors built
/// on demand.
pub struct Evaluator<'a> {
    analysis: &'a WagnerAnalysis,
    projectors: BTreeMap<usize, ProjectorPair>,
}

impl<'a> Evaluator<'a> {
    pub fn new(analysis: &'a WagnerAnalysis) -> Self {
        Evaluator { analysis, projectors: BTreeMap::new() }
    }

    fn projector(&mut self, level: usize) -> Result<&ProjectorPair> {
        if !self.projectors.contains_key(&level) {
            let pair = orthogonal_projectors(&self.analysis.frame, level)?;
            self.projectors.insert(level, pair);
        }
        Ok(&self.projectors[&level])
    }

    pub fn value(&mut self, q: Quantity) -> Result<f64> {
        let an = self.analysis;
        let m = an.frame.rank();
        let n = an.frame.dim();
        let z = |i: usize, dim: usize| -> Result<usize> {
            if i == 0 || i > dim {
                Err(Error::IndexOutOfRange { index: i, dim })
            } else {
                Ok(i - 1)
            }
        };
        let con = &an.connection;
        use Quantity::*;
        Ok(match q {
            Metric { a, b } => con.metric[z(a, m)?][z(b, m)?].value(),
            Braces { c, a, b } => con.braces[[z(a, m)?, z(b, m)?, z(c, m)?]].value(),
            Omega { c, a, b } => con.omega[[z(a, m)?, z(b, m)?, z(c, m)?]].value(),
            Gamma { c, a, b } => con.gamma[[z(a, m)?, z(b, m)?, z(c, m)?]].value(),
            Lambda { d, p, c } => {
                let p = z(p, n)?;
                if p < m {
                    return Err(Error::IndexOutOfRange { index: p + 1, dim: n });
                }
                con.lambda[[p - m, z(c, m)?, z(d, m)?]].value()
            }
            Nonholonomicity { p, a, b, .. } => con.structure[[z(a, n)?, z(b, n)?, z(p, n)?]].value(),
            ProjectorP { level, a, i } => {
                let (a, i) = (z(a, n)?, z(i, n)?);
                let pair = self.projector(level)?;
                pair.p_coords.get(a).ok_or(Error::IndexOutOfRange { index: a + 1, dim: pair.p_coords.len() })?[i]
                    .value()
            }
            ProjectorQ { level, p, i } => {
                let (p, i) = (z(p, n)?, z(i, n)?);
                let k = *an.frame.levels().get(level).ok_or(Error::IndexOutOfRange { index: level, dim: 0 })?;
                if p < k {
                    return Err(Error::IndexOutOfRange { index: p + 1, dim: n });
                }
                self.projector(level)?.q_coords[p - k][i].value()
            }
            Schouten { d, a, b, c } => an.schouten.get(z(a, m)?, z(b, m)?, z(c, m)?, z(d, m)?).value(),
            LevelMetric { a, b } => {
                let (a, b) = (z(a, n)?, z(b, n)?);
                let level = an
                    .levels
                    .iter()
                    .find(|l| (l.metric.lo..l.metric.hi).contains(&a))
                    .ok_or(Error::IndexOutOfRange { index: a + 1, dim: n })?;
                let lm = &level.metric;
                if (lm.lo..lm.hi).contains(&b) {
                    lm.upper[a - lm.lo][b - lm.lo].value()
                } else {
                    0.0
                }
            }
            Mu { big, a, b } => {
                let big = z(big, n)?;
                let level = an
                    .levels
                    .iter()
                    .find(|l| (l.mu.lo..l.mu.hi).contains(&big))
                    .ok_or(Error::IndexOutOfRange { index: big + 1, dim: n })?;
                let lo = level.mu.lo;
                let (a, b) = (z(a, lo)?, z(b, lo)?);
                level.mu.get(big, a, b).map_or(0.0, Jet::value)
            }
            Pi { level, c, big, b } => {
                let pi = an.pi(level).ok_or(Error::IndexOutOfRange { index: level, dim: an.degree() + 1 })?;
                pi[[z(big, pi.shape()[0])?, z(b, m)?, z(c, m)?]].value()
            }
            LevelCurvature { level, d, a, b, c } => {
                let k = an.curvature(level).ok_or(Error::IndexOutOfRange { index: level, dim: an.degree() + 1 })?;
                k.get(z(a, k.slots)?, z(b, k.slots)?, z(c, m)?, z(d, m)?).value()
            }
            Wagner { d, a, b, c } => {
                let k = an.wagner();
                k.get(z(a, k.slots)?, z(b, k.slots)?, z(c, m)?, z(d, m)?).value()
            }
        })
    }
}

/// Compare every entry of `table` with the analysis at its point.
///
/// A mismatching entry is flagged (instead of failed) when the published
/// data contradict themselves there: a conflicting second listing that does
/// match, a published `Γ` table violating the torsion or metric-compatibility
/// identity in a pair containing the entry, a Schouten value different from
/// the Schouten formula applied to the published `Γ` table, or a level
/// metric different from the extension formula applied to the published
/// induced metric.
pub fn check_table(sys: &SystemDef, table: &ReferenceTable, analysis: &WagnerAnalysis) -> Result<Vec<CheckOutcome>> {
    let point = analysis.frame.point().to_vec();
    let params = sys.param_values();
    let tol = table.tolerance;
    let mut eval = Evaluator::new(analysis);
    let mut outcomes = Vec::with_capacity(table.entries.len());
    for entry in &table.entries {
        let expected = entry.expected.eval(&point, &params);
        let computed = eval.value(entry.quantity)?;
        let status = if tol.accepts(expected, computed) { Status::Pass } else { Status::Fail };
        outcomes.push(CheckOutcome {
            name: entry.quantity.to_string(),
            group: entry.quantity.group(),
            provenance: entry.provenance,
            source: entry.source.clone(),
            expected,
            computed,
            status,
            note: None,
        });
    }
    if outcomes.iter().all(|o| o.status == Status::Pass) {
        return Ok(outcomes);
    }
    let published = Published::new(sys, table, analysis)?;
    for (i, entry) in table.entries.iter().enumerate() {
        if outcomes[i].status != Status::Fail {
            continue;
        }
        let conflicting = table.entries.iter().enumerate().any(|(j, other)| {
            j != i && other.quantity == entry.quantity && outcomes[j].status == Status::Pass
        });
        let note = if conflicting {
            Some("listed twice with different values; the other listing matches".to_string())
        } else {
            published.inconsistency(entry.quantity, outcomes[i].expected, tol)
        };
        if let Some(note) = note {
            outcomes[i].status = Status::Flagged;
            outcomes[i].note = Some(note);
        }
    }
    Ok(outcomes)
}

/// Published blocks re-evaluated as jets for self-consistency tests.
struct Published<'a> {
    analysis: &'a WagnerAnalysis,
    gamma: Option<Tensor<Jet>>,
    metric: Option<JetMatrix>,
}

impl<'a> Published<'a> {
    fn new(sys: &SystemDef, table: &ReferenceTable, analysis: &'a WagnerAnalysis) -> Result<Self> {
        let m = analysis.frame.rank();
        let space = analysis.frame.space();
        let order = analysis.connection.gamma.data()[0].order();
        let params = sys.param_values();
        let lookup = |q: Quantity| table.entries.iter().find(|e| e.quantity == q);
        let all_present = |qs: &[Quantity]| qs.iter().all(|q| lookup(*q).is_some());

        let gamma_qs = block_quantities(Block::Gamma, m, sys.dim());
        let gamma = if all_present(&gamma_qs) {
            Some(Tensor::try_from_fn(&[m, m, m], |i| {
                let q = Quantity::Gamma { c: i[2] + 1, a: i[0] + 1, b: i[1] + 1 };
                Ok(lookup(q).expect("present").expected.eval_jet(space, &params)?.truncate(order))
            })?)
        } else {
            None
        };
        let metric_qs = block_quantities(Block::Metric, m, sys.dim());
        let metric = if all_present(&metric_qs) {
            Some(
                (0..m)
                    .map(|a| {
                        (0..m)
                            .map(|b| {
                                let q = Quantity::Metric { a: a + 1, b: b + 1 };
                                lookup(q).expect("present").expected.eval_jet(space, &params)
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            )
        } else {
            None
        };
        Ok(Published { analysis, gamma, metric })
    }

    fn inconsistency(&self, q: Quantity, expected: f64, tol: Tolerance) -> Option<String> {
        match q {
            Quantity::Gamma { c, a, b } => self.gamma_inconsistency(c - 1, a - 1, b - 1, tol),
            Quantity::Schouten { d, a, b, c } => {
                let gamma = self.gamma.as_ref()?;
                let frame = &self.analysis.frame;
                let k = curvature_of(frame, &self.analysis.connection.structure, gamma, frame.rank(), 0).ok()?;
                let from_table = k.get(a - 1, b - 1, c - 1, d - 1).value();
                (!tol.accepts(expected, from_table)).then(|| {
                    format!("the Schouten formula applied to the published Γ table gives {from_table:.12e}")
                })
            }
            Quantity::LevelMetric { a, b } => {
                let g = self.metric.as_ref()?;
                let level = self.analysis.levels.first()?;
                if level.metric.level != 1 || !(level.metric.lo..level.metric.hi).contains(&(a - 1)) {
                    return None;
                }
                let ginv = linalg::inverse(g, "published induced metric").ok()?;
                let lm = extend_metric_level(
                    &ginv,
                    &self.analysis.connection.structure,
                    level.metric.lo,
                    level.metric.hi,
                    1,
                )
                .ok()?;
                let lo = lm.lo;
                let from_table = lm.upper.get(a - 1 - lo)?.get(b - 1 - lo)?.value();
                (!tol.accepts(expected, from_table)).then(|| {
                    format!("the extension formula applied to the published induced metric gives {from_table:.12e}")
                })
            }
            _ => None,
        }
    }

    /// Torsion and metric-compatibility residuals of the published `Γ`
    /// table in the identities that involve `Γ^c_{ab}`.
    fn gamma_inconsistency(&self, c: usize, a: usize, b: usize, tol: Tolerance) -> Option<String> {
        let gamma = self.gamma.as_ref()?;
        let con = &self.analysis.connection;
        let torsion = gamma[[a, b, c]].value() - gamma[[b, a, c]].value() + 2.0 * con.omega[[a, b, c]].value();
        if !tol.accepts(0.0, torsion) {
            return Some(format!("published Γ table violates the torsion identity for this pair by {torsion:.6e}"));
        }
        let g = self.metric.as_ref()?;
        let m = g.len();
        let frame = &self.analysis.frame;
        // compatibility equations e_a(g_xy) = Γ^e_{ax} g_ey + Γ^e_{ay} g_xe with x = b or y = b
        for x in 0..m {
            for (u, v) in [(b, x), (x, b)] {
                let lhs = frame.frame_derivative(a, &g[u][v]).ok()?.value();
                let mut rhs = 0.0;
                for e in 0..m {
                    rhs += gamma[[a, u, e]].value() * g[e][v].value() + gamma[[a, v, e]].value() * g[u][e].value();
                }
                let r = lhs - rhs;
                if !tol.accepts(0.0, r) && r.abs() > 1e-9 {
                    return Some(format!("published Γ and metric violate metric compatibility by {r:.6e}"));
                }
            }
        }
        let _ = c;
        None
    }
}

fn disc_spec() -> Spec {
    use Quantity::*;
    const E: &[(Quantity, &str)] = &[
        (Metric { a: 1, b: 1 }, "R^2 + C"),
        (Metric { a: 2, b: 2 }, "A*sin(theta)^2"),
        (Metric { a: 3, b: 3 }, "A + R^2"),
        (Braces { c: 2, a: 2, b: 3 }, "cos(theta)/sin(theta)"),
        (Braces { c: 2, a: 3, b: 2 }, "cos(theta)/sin(theta)"),
        (Braces { c: 3, a: 2, b: 2 }, "-A*sin(theta)*cos(theta)/(A + R^2)"),
        (Omega { c: 3, a: 1, b: 2 }, "R^2*sin(theta)/(2*(A + R^2))"),
        (Omega { c: 3, a: 2, b: 1 }, "-R^2*sin(theta)/(2*(A + R^2))"),
        (Omega { c: 1, a: 2, b: 3 }, "sin(theta)/2"),
        (Omega { c: 1, a: 3, b: 2 }, "-sin(theta)/2"),
        (Gamma { c: 1, a: 2, b: 3 }, "-(2*R^2 + C)*sin(theta)/(2*(C + R^2))"),
        (Gamma { c: 1, a: 3, b: 2 }, "C*sin(theta)/(2*(C + R^2))"),
        (Gamma { c: 2, a: 2, b: 3 }, "cos(theta)/sin(theta)"),
        (Gamma { c: 2, a: 3, b: 2 }, "cos(theta)/sin(theta)"),
        (Gamma { c: 2, a: 1, b: 3 }, "-C/(2*A*sin(theta))"),
        (Gamma { c: 2, a: 3, b: 1 }, "-C/(2*A*sin(theta))"),
        (Gamma { c: 3, a: 1, b: 2 }, "C*sin(theta)/(2*(A + R^2))"),
        (Gamma { c: 3, a: 2, b: 1 }, "(2*R^2 + C)*sin(theta)/(2*(A + R^2))"),
        (Gamma { c: 3, a: 2, b: 2 }, "-A*sin(theta)*cos(theta)/(A + R^2)"),
        (Lambda { d: 1, p: 4, c: 2 }, "-R*(A + R^2*cos(theta)^2 - C*sin(theta)^2)/(C + R^2)"),
        (Lambda { d: 3, p: 4, c: 3 }, "-R*cos(theta)"),
        (Lambda { d: 3, p: 5, c: 2 }, "-R*C*sin(theta)/(A + R^2)"),
        (Nonholonomicity { level: 0, p: 4, a: 1, b: 2 }, "R/(A + R^2)"),
        (Nonholonomicity { level: 1, p: 5, a: 2, b: 4 }, "(A + R^2)/(C + R^2)"),
        // orthogonal projector onto V
        (ProjectorP { level: 0, a: 1, i: 1 }, "R*cos(varphi)/(C + R^2)"),
        (ProjectorP { level: 0, a: 2, i: 1 }, "0"),
        (ProjectorP { level: 0, a: 3, i: 1 }, "R*sin(theta)*sin(varphi)/(A + R^2)"),
        (ProjectorP { level: 0, a: 1, i: 2 }, "R*sin(varphi)/(C + R^2)"),
        (ProjectorP { level: 0, a: 2, i: 2 }, "0"),
        (ProjectorP { level: 0, a: 3, i: 2 }, "-R*sin(theta)*cos(varphi)/(A + R^2)"),
        (ProjectorP { level: 0, a: 1, i: 3 }, "-C*cos(theta)/(C + R^2)"),
        (ProjectorP { level: 0, a: 2, i: 3 }, "-1"),
        (ProjectorP { level: 0, a: 3, i: 3 }, "0"),
        (ProjectorP { level: 0, a: 1, i: 4 }, "-C/(C + R^2)"),
        (ProjectorP { level: 0, a: 2, i: 4 }, "0"),
        (ProjectorP { level: 0, a: 3, i: 4 }, "0"),
        (ProjectorP { level: 0, a: 1, i: 5 }, "0"),
        (ProjectorP { level: 0, a: 2, i: 5 }, "0"),
        (ProjectorP { level: 0, a: 3, i: 5 }, "(A + R^2*cos(theta)^2)/(A + R^2)"),
        (ProjectorQ { level: 0, p: 4, i: 1 }, "-sin(varphi)/(A + R^2)"),
        (ProjectorQ { level: 0, p: 5, i: 1 }, "cos(varphi)/(C + R^2)"),
        (ProjectorQ { level: 0, p: 4, i: 2 }, "cos(varphi)/(A + R^2)"),
        (ProjectorQ { level: 0, p: 5, i: 2 }, "sin(varphi)/(C + R^2)"),
        (ProjectorQ { level: 0, p: 4, i: 3 }, "0"),
        (ProjectorQ { level: 0, p: 5, i: 3 }, "R*cos(theta)/(C + R^2)"),
        (ProjectorQ { level: 0, p: 4, i: 4 }, "0"),
        (ProjectorQ { level: 0, p: 5, i: 4 }, "R/(C + R^2)"),
        (ProjectorQ { level: 0, p: 4, i: 5 }, "R*sin(theta)/(A + R^2)"),
        (ProjectorQ { level: 0, p: 5, i: 5 }, "0"),
        // and onto V_1
        (ProjectorP { level: 1, a: 1, i: 1 }, "R*cos(varphi)/(C + R^2)"),
        (ProjectorP { level: 1, a: 2, i: 1 }, "0"),
        (ProjectorP { level: 1, a: 3, i: 1 }, "R*sin(theta)*sin(varphi)/(A + R^2)"),
        (ProjectorP { level: 1, a: 4, i: 1 }, "-sin(varphi)/(A + R^2)"),
        (ProjectorP { level: 1, a: 1, i: 2 }, "R*sin(varphi)/(C + R^2)"),
        (ProjectorP { level: 1, a: 2, i: 2 }, "0"),
        (ProjectorP { level: 1, a: 3, i: 2 }, "-R*sin(theta)*cos(varphi)/(A + R^2)"),
        (ProjectorP { level: 1, a: 4, i: 2 }, "cos(varphi)/(A + R^2)"),
        (ProjectorP { level: 1, a: 1, i: 3 }, "-C*cos(theta)/(C + R^2)"),
        (ProjectorP { level: 1, a: 2, i: 3 }, "-1"),
        (ProjectorP { level: 1, a: 3, i: 3 }, "0"),
        (ProjectorP { level: 1, a: 4, i: 3 }, "0"),
        (ProjectorP { level: 1, a: 1, i: 4 }, "-C/(C + R^2)"),
        (ProjectorP { level: 1, a: 2, i: 4 }, "0"),
        (ProjectorP { level: 1, a: 3, i: 4 }, "0"),
        (ProjectorP { level: 1, a: 4, i: 4 }, "0"),
        (ProjectorP { level: 1, a: 1, i: 5 }, "0"),
        (ProjectorP { level: 1, a: 2, i: 5 }, "0"),
        (ProjectorP { level: 1, a: 3, i: 5 }, "(A + R^2*cos(theta)^2)/(A + R^2)"),
        (ProjectorP { level: 1, a: 4, i: 5 }, "R*sin(theta)/(A + R^2)"),
        (ProjectorQ { level: 1, p: 5, i: 1 }, "cos(varphi)/(C + R^2)"),
        (ProjectorQ { level: 1, p: 5, i: 2 }, "sin(varphi)/(C + R^2)"),
        (ProjectorQ { level: 1, p: 5, i: 3 }, "R*cos(theta)/(C + R^2)"),
        (ProjectorQ { level: 1, p: 5, i: 4 }, "R/(C + R^2)"),
        (ProjectorQ { level: 1, p: 5, i: 5 }, "0"),
        (LevelMetric { a: 4, b: 4 }, "2*R^2/((A + R^2)^2*(C + R^2)*A*sin(theta)^2)"),
        (LevelMetric { a: 5, b: 5 }, "4*R^2/(A^2*(C + R^2)^3*sin(theta)^4)"),
        (Mu { big: 4, a: 1, b: 2 }, "(A + R^2)/(2*R)"),
        (Mu { big: 5, a: 2, b: 4 }, "(C + R^2)/(2*(A + R^2))"),
        (Schouten { d: 1, a: 1, b: 2, c: 1 }, "0"),
        (Schouten { d: 2, a: 1, b: 2, c: 1 }, "-C*(4*R^2 + C)/(4*A*(A + R^2))"),
        (Schouten { d: 3, a: 1, b: 2, c: 1 }, "0"),
        (
            Schouten { d: 1, a: 1, b: 2, c: 2 },
            "(4*R^2*A + 4*R^4*cos(theta)^2 + C^2*sin(theta)^2)/(4*(A + R^2)*(C + R^2))",
        ),
        (Schouten { d: 2, a: 1, b: 2, c: 2 }, "R^2*cos(theta)/(A + R^2)"),
        (Schouten { d: 3, a: 1, b: 2, c: 2 }, "0"),
        (Schouten { d: 1, a: 1, b: 2, c: 3 }, "0"),
        (Schouten { d: 2, a: 1, b: 2, c: 3 }, "0"),
        (Schouten { d: 3, a: 1, b: 2, c: 3 }, "R^2*cos(theta)/(A + R^2)"),
        (Pi { level: 1, c: 1, big: 4, b: 1 }, "0"),
        (Pi { level: 1, c: 3, big: 4, b: 1 }, "0"),
        (Pi { level: 1, c: 2, big: 4, b: 1 }, "-C*(4*R^2 + C)/(4*A*R)"),
        (Pi { level: 1, c: 2, big: 4, b: 2 }, "R*cos(theta)"),
        (Pi { level: 1, c: 3, big: 4, b: 2 }, "0"),
        (Pi { level: 1, c: 1, big: 4, b: 3 }, "0"),
        (Pi { level: 1, c: 2, big: 4, b: 3 }, "0"),
        (Pi { level: 1, c: 3, big: 4, b: 3 }, "0"),
        (LevelCurvature { level: 1, d: 2, a: 2, b: 4, c: 1 }, "0"),
        (LevelCurvature { level: 1, d: 2, a: 2, b: 4, c: 2 }, "0"),
        (LevelCurvature { level: 1, d: 1, a: 2, b: 4, c: 1 }, "0"),
        (
            LevelCurvature { level: 1, d: 2, a: 2, b: 4, c: 3 },
            "(8*R^4*A*sin(theta)^2 - 10*R^2*C^2*sin(theta)^2 - C^3*sin(theta)^2 + 8*R^2*A*C*sin(theta)^2 \
             + 4*R^2*A*C - 8*R^4*C*sin(theta)^2 + 4*R^4*C*cos(theta)^2)/(8*A*R*sin(theta)*(C + R^2))",
        ),
        (Pi { level: 2, c: 1, big: 5, b: 1 }, "0"),
        (Pi { level: 2, c: 2, big: 5, b: 1 }, "0"),
        (Pi { level: 2, c: 2, big: 5, b: 2 }, "0"),
        (Wagner { d: 2, a: 4, b: 5, c: 1 }, "0"),
        (Wagner { d: 2, a: 1, b: 2, c: 1 }, "0"),
        (Wagner { d: 1, a: 1, b: 3, c: 3 }, "C^2/(4*A*(R^2 + C))"),
    ];
    Spec {
        tolerance: Tolerance { rel: 1e-8, abs: 1e-10 },
        provenance: Provenance::Published,
        entries: E,
        complete: &[Block::Metric, Block::Braces, Block::Omega, Block::Gamma, Block::Lambda],
    }
}

fn ball_spec() -> Spec {
    use Quantity::*;
    const E: &[(Quantity, &str)] = &[
        (Metric { a: 1, b: 1 }, "A + cos(beta)^2"),
        (Metric { a: 1, b: 2 }, "sin(beta)*cos(beta)*sin(theta)"),
        (Metric { a: 2, b: 1 }, "sin(beta)*cos(beta)*sin(theta)"),
        (Metric { a: 2, b: 2 }, "sin(theta)^2*(A + sin(beta)^2)"),
        (Metric { a: 3, b: 3 }, "sin(theta)^2*(1 + A)"),
        (Gamma { c: 3, a: 1, b: 1 }, "sin(beta)*cos(beta)/(sin(theta)*(1 + A))"),
        (Gamma { c: 3, a: 1, b: 2 }, "-(A*k - A - 2 + 2*cos(beta)^2)/(2*(1 + A))"),
        (Gamma { c: 1, a: 1, b: 3 }, "-(1 + k)*sin(theta)*sin(beta)*cos(beta)/(1 + A)"),
        (Gamma { c: 2, a: 1, b: 3 }, "(A*k - A + cos(beta)^2*k - 2 + cos(beta)^2)/(2*(1 + A))"),
        (Gamma { c: 3, a: 2, b: 1 }, "(A + A*k + 2 - 2*cos(beta)^2)/(2*(1 + A))"),
        (Gamma { c: 2, a: 2, b: 2 }, "-(1 + k)*cos(theta)*cos(psi - alpha)"),
        (Gamma { c: 3, a: 2, b: 2 }, "(A + sin(beta)^2)*sin(theta)*sin(beta)/(cos(beta)*(1 + A))"),
        (
            Gamma { c: 1, a: 2, b: 3 },
            "(k + 1)*(-A*sin(theta)^2 + cos(beta)^2 - 1 + cos(beta)^2*cos(theta)^2 + cos(theta)^2)/(2*(1 + A))",
        ),
        (Gamma { c: 2, a: 2, b: 3 }, "-(2*A - (1 + k)*cos(beta)^2 + 2)*sin(theta)*sin(beta)/(2*cos(beta)*(1 + A))"),
        (Gamma { c: 3, a: 2, b: 3 }, "-(1 + k)*cos(theta)*cos(psi - alpha)"),
        (Gamma { c: 1, a: 3, b: 1 }, "(k - 1)*cos(beta)*sin(beta)*sin(theta)/(2*(1 + A))"),
        (Gamma { c: 2, a: 3, b: 1 }, "-(A + A*k + cos(beta)^2*k - cos(beta)^2 + 2)/(2*(1 + A))"),
        (
            Gamma { c: 1, a: 3, b: 2 },
            "((1 + k)*(-A*sin(theta)^2 - 1) + (1 - k)*(cos(beta)^2*cos(theta)^2 + cos(theta)^2 - cos(beta)^2))\
             /(2*(1 + A))",
        ),
        (
            Gamma { c: 2, a: 3, b: 2 },
            "(-2*(1 + k)*(1 + A)*sin(psi - alpha)*cos(theta) + (1 - k)*sin(theta)*sin(beta)*cos(theta))/(2*(1 + A))",
        ),
        (Gamma { c: 3, a: 3, b: 3 }, "-(1 + k)*sin(psi - alpha)*cos(theta)"),
        (Schouten { d: 1, a: 1, b: 2, c: 1 }, "((k - 1)^2*A + 4*k^2)*sin(beta)*cos(beta)*sin(theta)/(4*(1 + A)^2)"),
        (Schouten { d: 2, a: 1, b: 2, c: 2 }, "-((k - 1)^2*A + 4*k^2)*sin(beta)*cos(beta)*sin(theta)/(4*(1 + A)^2)"),
        (
            Schouten { d: 2, a: 1, b: 2, c: 1 },
            "-((1 + k^2)*(A^2 + A*cos(beta)^2) + 4*A*k*(1 + k) + 2*k*(A^2 - A*cos(beta)^2 + 2*k*cos(beta)^2))\
             /(1 + A)^2",
        ),
        (
            Schouten { d: 2, a: 1, b: 3, c: 2 },
            "(-5*A + 2*A*k + 3*A*k^2 - 4)*cos(beta)*sin(beta)*sin(theta)/(4*(1 + A)^2)",
        ),
        (
            Schouten { d: 3, a: 2, b: 3, c: 1 },
            "(-5*A + 2*A*k + 3*A*k^2 - 4)*cos(beta)*sin(beta)*sin(theta)/(4*(1 + A)^2)",
        ),
        (Schouten { d: 2, a: 1, b: 3, c: 3 }, "-(-1 + k^2)*sin(theta)*sin(beta)*cos(beta)/(1 + A)"),
        (Schouten { d: 3, a: 1, b: 2, c: 1 }, "0"),
        (Schouten { d: 3, a: 1, b: 2, c: 2 }, "0"),
        (Schouten { d: 1, a: 1, b: 2, c: 3 }, "0"),
        (Schouten { d: 2, a: 1, b: 2, c: 3 }, "0"),
        (Schouten { d: 3, a: 1, b: 2, c: 3 }, "0"),
        (Schouten { d: 1, a: 1, b: 3, c: 1 }, "0"),
        (Schouten { d: 2, a: 1, b: 3, c: 1 }, "0"),
        (Schouten { d: 1, a: 1, b: 3, c: 2 }, "0"),
        (Schouten { d: 2, a: 1, b: 3, c: 2 }, "0"),
        (Schouten { d: 3, a: 1, b: 3, c: 3 }, "0"),
        (Schouten { d: 1, a: 2, b: 3, c: 1 }, "0"),
        (Schouten { d: 2, a: 2, b: 3, c: 1 }, "0"),
        (Schouten { d: 1, a: 2, b: 3, c: 2 }, "0"),
        (Schouten { d: 2, a: 2, b: 3, c: 2 }, "0"),
        (Schouten { d: 3, a: 2, b: 3, c: 3 }, "0"),
        (LevelMetric { a: 4, b: 4 }, "2*k^2/(A*(A + 1)^3*cos(beta)^2*cos(psi - alpha)^2)"),
        (
            LevelMetric { a: 4, b: 5 },
            "-2*k^2*sin(beta)*sin(psi - alpha)/(A*(A + 1)^3*sin(theta)*cos(beta)*cos(psi - alpha))",
        ),
        (
            LevelMetric { a: 5, b: 5 },
            "k^2*(1 - cos(beta)^2*sin(psi - alpha)^2)/(A*(1 + A)^3*sin(theta)^2*cos(psi - alpha)^2)",
        ),
        (
            Wagner { d: 1, a: 1, b: 3, c: 3 },
            "sin(theta)^2*cos(beta)^2*(k^2*(A + 4*sin(beta)^2) + 2*A*k + A + 4*cos(beta)^2)/(4*(1 + A))",
        ),
    ];
    Spec {
        tolerance: Tolerance { rel: 1e-7, abs: 1e-10 },
        provenance: Provenance::Published,
        entries: E,
        complete: &[Block::Metric, Block::Gamma],
    }
}

fn heisenberg_spec() -> Spec {
    use Quantity::*;
    const E: &[(Quantity, &str)] = &[
        (Metric { a: 1, b: 1 }, "y^2/4 + 1"),
        (Metric { a: 1, b: 2 }, "-x*y/4"),
        (Metric { a: 2, b: 1 }, "-x*y/4"),
        (Metric { a: 2, b: 2 }, "x^2/4 + 1"),
        (Gamma { c: 1, a: 1, b: 2 }, "-y/(x^2 + y^2 + 4)"),
        (Gamma { c: 2, a: 1, b: 2 }, "x/(x^2 + y^2 + 4)"),
        (Gamma { c: 1, a: 2, b: 1 }, "y/(x^2 + y^2 + 4)"),
        (Gamma { c: 2, a: 2, b: 1 }, "-x/(x^2 + y^2 + 4)"),
        (Schouten { d: 1, a: 1, b: 2, c: 1 }, "-3*x*y/(x^2 + y^2 + 4)^2"),
        (Schouten { d: 2, a: 1, b: 2, c: 1 }, "-3*(y^2 + 4)/(x^2 + y^2 + 4)^2"),
        (Schouten { d: 1, a: 1, b: 2, c: 2 }, "3*(x^2 + 4)/(x^2 + y^2 + 4)^2"),
        (Schouten { d: 2, a: 1, b: 2, c: 2 }, "3*x*y/(x^2 + y^2 + 4)^2"),
        (LevelMetric { a: 3, b: 3 }, "128/(x^2 + y^2 + 4)^3"),
        (Mu { big: 3, a: 1, b: 2 }, "(x^2 + y^2 + 4)/8"),
        (Pi { level: 1, c: 1, big: 3, b: 1 }, "-3*x*y/(4*(x^2 + y^2 + 4))"),
        (Pi { level: 1, c: 2, big: 3, b: 1 }, "(x^2/2 - y^2/4 - 1)/(x^2 + y^2 + 4)"),
        (Pi { level: 1, c: 1, big: 3, b: 2 }, "(x^2/4 - y^2/2 + 1)/(x^2 + y^2 + 4)"),
        (Pi { level: 1, c: 2, big: 3, b: 2 }, "3*x*y/(4*(x^2 + y^2 + 4))"),
        (Wagner { d: 1, a: 1, b: 3, c: 1 }, "3*x^2*y/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 2, a: 1, b: 3, c: 1 }, "3*x*(y^2 + 4)/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 1, a: 1, b: 3, c: 2 }, "-3*x*(x^2 + 4)/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 2, a: 1, b: 3, c: 2 }, "-3*x^2*y/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 1, a: 2, b: 3, c: 1 }, "3*x*y^2/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 2, a: 2, b: 3, c: 1 }, "3*y*(y^2 + 4)/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 1, a: 2, b: 3, c: 2 }, "-3*y*(x^2 + 4)/(4*(x^2 + y^2 + 4)^2)"),
        (Wagner { d: 2, a: 2, b: 3, c: 2 }, "-3*x*y^2/(4*(x^2 + y^2 + 4)^2)"),
    ];
    Spec {
        tolerance: Tolerance { rel: 0.0, abs: 1e-9 },
        provenance: Provenance::Oracle,
        entries: E,
        complete: &[Block::Metric, Block::Gamma, Block::Schouten, Block::Wagner],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;

    #[test]
    fn names_use_one_based_indices() {
        assert_eq!(Quantity::Gamma { c: 1, a: 2, b: 3 }.to_string(), "Gamma^1_23");
        assert_eq!(Quantity::Mu { big: 4, a: 1, b: 2 }.to_string(), "M*^12_4");
        assert_eq!(Quantity::Wagner { d: 1, a: 1, b: 3, c: 3 }.to_string(), "W^1_133");
    }

    #[test]
    fn completion_adds_zeros() {
        let sys = builtin("heisenberg").unwrap();
        let table = reference_table(&sys).unwrap().unwrap();
        // 4 metric, 8 gamma, 4 schouten (a<b), 12 wagner (a<b), plus g^33, M*, four Pi
        assert_eq!(table.entries.len(), 4 + 8 + 4 + 12 + 6);
    }

    #[test]
    fn tolerance_switches_to_absolute_near_zero() {
        let t = Tolerance { rel: 1e-8, abs: 1e-10 };
        assert!(t.accepts(0.0, 5e-11));
        assert!(!t.accepts(0.0, 5e-10));
        assert!(t.accepts(100.0, 100.0 + 5e-7));
    }
}
