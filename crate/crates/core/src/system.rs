//! System definitions and the plain-text system file format.
//!
//! ```text
//! # comment
//! [system]
//! id = disc
//! [chart]
//! x, y, varphi, psi, theta
//! [params]
//! A = 1 in 0.5..3
//! [metric]
//! 3 3 = A*sin(theta)^2 + C*cos(theta)^2
//! [frame]
//! 1 = R*cos(varphi), R*sin(varphi), 0, -1, 0
//! [levels]
//! 3 4 5
//! [singular]
//! sin(theta)
//! [sample]
//! theta = 0.3, pi - 0.3
//! ```
//!
//! Indices in `[metric]` and `[frame]` are 1-based. Metric entries are
//! completed symmetrically; entries not listed are zero. A `[frame]` with
//! only `levels[0]` rows asks for automatic completion of the adapted frame.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};

/// Points whose smallest singular-predicate magnitude falls below this are
/// rejected outright.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Random sample points keep every singular predicate at least this far from
/// zero.
pub const SAMPLE_MARGIN: f64 = 0.2;

const MAX_SAMPLE_TRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: f64,
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SystemDef {
    pub id: String,
    pub chart: Vec<String>,
    pub params: Vec<Param>,
    /// Ambient (kinetic-energy) metric `G_ij`, symmetric.
    pub metric: Vec<Vec<Expr>>,
    /// Frame rows `e_a = B^i_a ∂/∂q^i`.
    pub frame: Vec<Vec<Expr>>,
    pub levels: Vec<usize>,
    pub singular: Vec<Expr>,
    pub sample_box: Vec<(f64, f64)>,
}

impl SystemDef {
    pub fn dim(&self) -> usize {
        self.chart.len()
    }

    /// Rank `m` of the constraint distribution.
    pub fn rank(&self) -> usize {
        self.levels[0]
    }

    pub fn degree(&self) -> usize {
        self.levels.len() - 1
    }

    /// True when only the distribution generators are declared.
    pub fn auto_frame(&self) -> bool {
        self.frame.len() < self.dim()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn param_values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Usage(format!("parameter {name} must be finite")));
        }
        match self.params.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.value = value;
                Ok(())
            }
            None => Err(Error::Usage(format!("system '{}' has no parameter '{name}'", self.id))),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self> {
        self.set_param(name, value)?;
        Ok(self)
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.chart.iter().position(|c| c == name)
    }

    /// Smallest magnitude among the singular predicates (infinite if none).
    pub fn singular_margin(&self, point: &[f64]) -> f64 {
        let params = self.param_values();
        self.singular
            .iter()
            .map(|e| e.eval(point, &params).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, system '{}' needs {}",
                point.len(),
                self.id,
                self.dim()
            )));
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::Usage("point coordinates must be finite".into()));
        }
        let params = self.param_values();
        for pred in &self.singular {
            let v = pred.eval(point, &params);
            if !(v.abs() >= SINGULAR_TOL) {
                return Err(Error::Singular(format!("{pred} = {v:e} at {point:?}")));
            }
        }
        Ok(())
    }

    /// Uniform draw from the sample box, rejecting points near the singular
    /// locus.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..MAX_SAMPLE_TRIES {
            let p: Vec<f64> = self.sample_box.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            if self.singular_margin(&p) > SAMPLE_MARGIN {
                return Ok(p);
            }
        }
        Err(Error::Singular(format!(
            "could not draw a non-singular point for '{}' after {MAX_SAMPLE_TRIES} tries",
            self.id
        )))
    }

    /// Draw every ranged parameter uniformly from its range.
    pub fn sample_params<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in &mut self.params {
            if let Some((lo, hi)) = p.range {
                p.value = rng.gen_range(lo..=hi);
            }
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
        parse_system(&text, stem)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if n == 0 {
            return bad("empty chart".into());
        }
        if self.levels.is_empty() {
            return bad("missing [levels]".into());
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("levels {:?} must be strictly increasing", self.levels));
        }
        if *self.levels.last().unwrap() != n {
            return bad(format!("last level must equal chart dimension {n}"));
        }
        if self.levels[0] == 0 {
            return bad("first level must be positive".into());
        }
        if self.frame.len() != n && self.frame.len() != self.levels[0] {
            return bad(format!(
                "[frame] has {} rows; expected {n} (declared) or {} (generators only)",
                self.frame.len(),
                self.levels[0]
            ));
        }
        if self.sample_box.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return bad("sample intervals must satisfy lo <= hi".into());
        }
        Ok(())
    }
}

fn file_err(line: usize, message: impl Into<String>) -> Error {
    Error::SystemFile { line, message: message.into() }
}

fn names_of(list: &str) -> Vec<String> {
    list.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    let pi = ["pi".to_string()];
    let e = expr::parse(text.trim(), &[], &pi).map_err(|e| file_err(line, e.to_string()))?;
    let v = e.eval(&[], &[PI]);
    if !v.is_finite() {
        return Err(file_err(line, format!("'{}' is not a finite number", text.trim())));
    }
    Ok(v)
}

fn parse_index(s: &str, n: usize, line: usize) -> Result<usize> {
    let i: usize = s
        .trim()
        .parse()
        .map_err(|_| file_err(line, format!("expected an index, found '{}'", s.trim())))?;
    if i == 0 || i > n {
        return Err(file_err(line, format!("index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

/// Parse a system file. `default_id` names the system when the file has no
/// `[system]` section.
pub fn parse_system(text: &str, default_id: &str) -> Result<SystemDef> {
    let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.trim().to_string(), Vec::new()));
        } else {
            match sections.last_mut() {
                Some((_, body)) => body.push((lineno, line.to_string())),
                None => return Err(file_err(lineno, "content before the first [section]")),
            }
        }
    }
    let section = |name: &str| -> Vec<(usize, String)> {
        sections
            .iter()
            .filter(|(s, _)| s == name)
            .flat_map(|(_, b)| b.iter().cloned())
            .collect()
    };
    for (name, body) in &sections {
        if !["system", "chart", "params", "metric", "frame", "levels", "singular", "sample"]
            .contains(&name.as_str())
        {
            let line = body.first().map_or(0, |l| l.0);
            return Err(file_err(line, format!("unknown section [{name}]")));
        }
    }

    let mut id = default_id.to_string();
    for (line, l) in section("system") {
        let (k, v) = l.split_once('=').ok_or_else(|| file_err(line, "expected key = value"))?;
        match k.trim() {
            "id" => id = v.trim().to_string(),
            other => return Err(file_err(line, format!("unknown key '{other}'"))),
        }
    }

    let chart: Vec<String> = section("chart").iter().flat_map(|(_, l)| names_of(l)).collect();
    let chart_line = section("chart").first().map_or(0, |l| l.0);
    if chart.is_empty() {
        return Err(file_err(0, "missing [chart]"));
    }

    let mut params = Vec::new();
    for (line, l) in section("params") {
        let (name, rest) = l.split_once('=').ok_or_else(|| file_err(line, "expected name = value"))?;
        let name = name.trim().to_string();
        let (value, range) = match rest.split_once(" in ") {
            Some((v, r)) => {
                let (lo, hi) = r
                    .split_once("..")
                    .ok_or_else(|| file_err(line, "range must look like lo..hi"))?;
                (v, Some((parse_number(lo, line)?, parse_number(hi, line)?)))
            }
            None => (rest, None),
        };
        params.push(Param { name, value: parse_number(value, line)?, range });
    }

    let mut seen: Vec<&str> = Vec::new();
    for name in chart.iter().chain(params.iter().map(|p| &p.name)) {
        if !is_ident(name) || expr::is_reserved(name) || name == "pi" {
            return Err(file_err(chart_line, format!("'{name}' is not a valid name")));
        }
        if seen.contains(&name.as_str()) {
            return Err(file_err(chart_line, format!("duplicate name '{name}'")));
        }
        seen.push(name);
    }

    let n = chart.len();
    let pnames: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
    let parse_expr = |text: &str, line: usize| -> Result<Expr> {
        expr::parse(text.trim(), &chart, &pnames).map_err(|e| file_err(line, e.to_string()))
    };

    let mut metric: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
    for (line, l) in section("metric") {
        let (idx, rhs) = l.split_once('=').ok_or_else(|| file_err(line, "expected i j = expr"))?;
        let ij: Vec<&str> = idx.split_whitespace().collect();
        if ij.len() != 2 {
            return Err(file_err(line, "metric entries need two indices"));
        }
        let (i, j) = (parse_index(ij[0], n, line)?, parse_index(ij[1], n, line)?);
        let e = parse_expr(rhs, line)?;
        for (a, b) in [(i, j), (j, i)] {
            match &metric[a][b] {
                Some(prev) if *prev != e && (a, b) == (i, j) => {
                    return Err(file_err(line, format!("metric entry {} {} given twice", i + 1, j + 1)));
                }
                Some(prev) if *prev != e => {
                    return Err(file_err(line, format!("metric entry {} {} is not symmetric", i + 1, j + 1)));
                }
                _ => metric[a][b] = Some(e.clone()),
            }
        }
    }
    let metric: Vec<Vec<Expr>> = metric
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.unwrap_or_else(Expr::zero)).collect())
        .collect();

    let mut rows: Vec<(usize, Vec<Expr>)> = Vec::new();
    for (line, l) in section("frame") {
        let (idx, rhs) = l.split_once('=').ok_or_else(|| file_err(line, "expected a = expr, ..."))?;
        let a = parse_index(idx, n, line)?;
        let comps: Vec<Expr> = rhs.split(',').map(|c| parse_expr(c, line)).collect::<Result<_>>()?;
        if comps.len() != n {
            return Err(file_err(line, format!("frame row has {} components, expected {n}", comps.len())));
        }
        if rows.iter().any(|(b, _)| *b == a) {
            return Err(file_err(line, format!("frame row {} given twice", a + 1)));
        }
        rows.push((a, comps));
    }
    rows.sort_by_key(|(a, _)| *a);
    if rows.iter().enumerate().any(|(k, (a, _))| k != *a) {
        return Err(file_err(0, "frame rows must be numbered 1..k without gaps"));
    }
    let frame = rows.into_iter().map(|(_, r)| r).collect();

    let mut levels = Vec::new();
    for (line, l) in section("levels") {
        for tok in names_of(&l) {
            levels.push(tok.parse::<usize>().map_err(|_| file_err(line, format!("bad level '{tok}'")))?);
        }
    }

    let singular = section("singular")
        .iter()
        .map(|(line, l)| parse_expr(l, *line))
        .collect::<Result<Vec<_>>>()?;

    let mut sample_box = vec![(-1.0, 1.0); n];
    for (line, l) in section("sample") {
        let (name, rhs) = l.split_once('=').ok_or_else(|| file_err(line, "expected name = lo, hi"))?;
        let i = chart
            .iter()
            .position(|c| c == name.trim())
            .ok_or_else(|| file_err(line, format!("unknown coordinate '{}'", name.trim())))?;
        let (lo, hi) = rhs.split_once(',').ok_or_else(|| file_err(line, "expected lo, hi"))?;
        sample_box[i] = (parse_number(lo, line)?, parse_number(hi, line)?);
    }

    let sys = SystemDef { id, chart, params, metric, frame, levels, singular, sample_box };
    sys.validate()?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEIS: &str = "
[chart]
x y z
[metric]
1 1 = 1
2 2 = 1
3 3 = 1
[frame]
1 = 1, 0, -y/2
2 = 0, 1, x/2
[levels]
2 3
";

    #[test]
    fn parses_generators_only_file() {
        let sys = parse_system(HEIS, "h").unwrap();
        assert_eq!(sys.id, "h");
        assert_eq!(sys.dim(), 3);
        assert!(sys.auto_frame());
        assert_eq!(sys.levels, vec![2, 3]);
        assert!(sys.metric[0][1].is_zero());
    }

    #[test]
    fn symmetric_completion_and_conflicts() {
        let text = "[chart]\na b\n[metric]\n1 1 = 1\n2 2 = 1\n1 2 = a\n[frame]\n1 = 1, 0\n2 = 0, 1\n[levels]\n2\n";
        let sys = parse_system(text, "t").unwrap();
        assert_eq!(sys.metric[1][0], sys.metric[0][1]);
        let bad = text.replace("1 2 = a", "1 2 = a\n2 1 = b");
        assert!(matches!(parse_system(&bad, "t"), Err(Error::SystemFile { line: 7, .. })));
    }

    #[test]
    fn rejects_undeclared_identifier() {
        let text = HEIS.replace("-y/2", "-w/2");
        let err = parse_system(&text, "h").unwrap_err();
        assert!(err.to_string().contains("unknown identifier 'w'"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_bad_levels_and_sections() {
        let text = HEIS.replace("2 3\n", "3 2\n");
        assert!(matches!(parse_system(&text, "h"), Err(Error::InvalidSystem(_))));
        let text = format!("{HEIS}\n[bogus]\nx = 1\n");
        assert!(matches!(parse_system(&text, "h"), Err(Error::SystemFile { .. })));
    }

    #[test]
    fn params_with_ranges_and_sample_box() {
        let text = format!("{HEIS}\n[params]\nk = 2 in 0.1..10\n[sample]\nz = -pi, pi\n");
        let sys = parse_system(&text, "h").unwrap();
        assert_eq!(sys.params[0].range, Some((0.1, 10.0)));
        assert_eq!(sys.sample_box[2], (-PI, PI));
    }

    #[test]
    fn singular_points_rejected() {
        let text = format!("{HEIS}\n[singular]\nx - 1\n");
        let sys = parse_system(&text, "h").unwrap();
        assert!(matches!(sys.check_point(&[1.0, 0.0, 0.0]), Err(Error::Singular(_))));
        assert!(sys.check_point(&[0.5, 0.0, 0.0]).is_ok());
    }
}
