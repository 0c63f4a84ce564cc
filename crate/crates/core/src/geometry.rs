//! Frames, Lie brackets, induced metrics, orthogonal projectors and the
//! flag of a distribution.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, JetSpace};
use crate::linalg::{self, JetMatrix};
use crate::system::SystemDef;
use crate::tensor::Tensor;

/// Relative singular-value threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Relative tolerance on `G(e_a, e_p)` between different flag levels.
const ADAPTED_TOL: f64 = 1e-9;

/// `[X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`, one order lower than the inputs.
pub fn lie_bracket(x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::IndexOutOfRange { index: y.len(), dim: x.len() });
    }
    if !x.iter().chain(y).all(|j| j.same_space(&x[0])) {
        return Err(Error::SpaceMismatch);
    }
    let order = x.iter().chain(y).map(Jet::order).min().unwrap_or(0);
    if order == 0 {
        return Err(Error::OrderExceeded { requested: 1, order: 0 });
    }
    let dx: Vec<Vec<Jet>> = x.iter().map(Jet::gradient).collect::<Result<_>>()?;
    let dy: Vec<Vec<Jet>> = y.iter().map(Jet::gradient).collect::<Result<_>>()?;
    Ok(bracket_from_gradients(x, &dx, y, &dy))
}

/// Bracket from fields and precomputed component gradients
/// (`dx[i][j] = ∂_j X^i`).
fn bracket_from_gradients(x: &[Jet], dx: &[Vec<Jet>], y: &[Jet], dy: &[Vec<Jet>]) -> Vec<Jet> {
    let n = x.len();
    let order = dx.iter().chain(dy).flatten().map(Jet::order).min().unwrap_or(0);
    (0..n)
        .map(|i| {
            let mut acc = x[0].space().zero().truncate(order);
            for j in 0..n {
                acc.add_product(&x[j], &dy[i][j]);
                acc.sub_product(&y[j], &dx[i][j]);
            }
            acc
        })
        .collect()
}

/// `X^i g_i` for a precomputed gradient `g`.
pub fn contract_gradient(x: &[Jet], grad: &[Jet]) -> Jet {
    let order = grad.iter().map(Jet::order).min().unwrap_or(0);
    let mut acc = grad[0].constant_like(0.0).truncate(order);
    for (xi, gi) in x.iter().zip(grad) {
        acc.add_product(xi, gi);
    }
    acc
}

/// `X(f) = X^i ∂_i f`.
pub fn directional_derivative(x: &[Jet], f: &Jet) -> Result<Jet> {
    if f.order() == 0 {
        return Err(Error::OrderExceeded { requested: 1, order: 0 });
    }
    let mut acc = f.constant_like(0.0).truncate(f.order() - 1);
    for (i, xi) in x.iter().enumerate() {
        let d = f.derivative(i)?;
        acc.add_product(xi, &d);
    }
    Ok(acc)
}

fn eval_matrix(rows: &[Vec<Expr>], space: &Arc<JetSpace>, params: &[f64]) -> Result<JetMatrix> {
    rows.iter()
        .map(|row| row.iter().map(|e| e.eval_jet(space, params)).collect())
        .collect()
}

/// `G(x, y)` for coordinate vectors.
fn inner(metric: &JetMatrix, x: &[Jet], y: &[Jet]) -> Jet {
    let mut acc = x[0].constant_like(0.0);
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            if metric[i][j].is_zero() {
                continue;
            }
            acc += &(xi * yj * &metric[i][j]);
        }
    }
    acc
}

fn column_values(v: &[Jet]) -> Vec<f64> {
    let vals: Vec<f64> = v.iter().map(Jet::value).collect();
    let norm = vals.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        vals.iter().map(|x| x / norm).collect()
    } else {
        vals
    }
}

fn rank_of(vectors: &[Vec<Jet>]) -> usize {
    let cols: Vec<Vec<f64>> = vectors.iter().map(|v| column_values(v)).collect();
    linalg::numerical_rank(&cols, RANK_TOL).0
}

/// Frame components `B^i_a` and ambient metric `G_ij` as jets at a point.
#[derive(Debug, Clone)]
pub struct FrameEval {
    space: Arc<JetSpace>,
    levels: Vec<usize>,
    b: JetMatrix,
    metric: JetMatrix,
}

impl FrameEval {
    /// Evaluate the system's frame at `point` with jets of `order`. Frames
    /// given only by their generators are completed through brackets and
    /// made orthogonal across levels.
    pub fn new(sys: &SystemDef, point: &[f64], order: usize) -> Result<Self> {
        sys.check_point(point)?;
        let params = sys.param_values();
        let extra = if sys.auto_frame() { sys.degree() } else { 0 };
        let space = JetSpace::new(point, order + extra);
        let metric = eval_matrix(&sys.metric, &space, &params)?;
        let rows = eval_matrix(&sys.frame, &space, &params)?;
        let b = if sys.auto_frame() {
            complete_frame(rows, &metric, &sys.levels)?
        } else {
            rows
        };
        let b: JetMatrix = b.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect();
        let metric = metric.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect();
        let frame = FrameEval { space, levels: sys.levels.clone(), b, metric };
        frame.validate()?;
        Ok(frame)
    }

    /// Build from explicit jets (rows `e_a`, ambient metric).
    pub fn from_parts(b: JetMatrix, metric: JetMatrix, levels: Vec<usize>) -> Result<Self> {
        let space = b
            .first()
            .and_then(|r| r.first())
            .map(|j| j.space().clone())
            .ok_or_else(|| Error::InvalidSystem("empty frame".into()))?;
        let frame = FrameEval { space, levels, b, metric };
        frame.validate()?;
        Ok(frame)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.b.len() != n || self.b.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSystem(format!("frame is not {n}x{n}")));
        }
        let (rank, sv) = linalg::numerical_rank(
            &self.b.iter().map(|r| r.iter().map(Jet::value).collect()).collect::<Vec<_>>(),
            RANK_TOL,
        );
        if rank < n {
            return Err(Error::Singular(format!(
                "frame rank {rank} < {n} (singular values {sv:?})"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&self.metric);
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("ambient metric, smallest eigenvalue {min_eig:e}")));
        }
        let gram = self.gram();
        let scale = (0..n).map(|a| gram[a][a].value()).fold(0.0, f64::max);
        for w in self.levels.windows(2).map(|w| w[0]).chain(std::iter::once(self.levels[0])) {
            for a in 0..w {
                for p in w..n {
                    let v = gram[a][p].value();
                    if v.abs() > ADAPTED_TOL * scale {
                        return Err(Error::FrameNotAdapted(format!(
                            "G(e{}, e{}) = {v:e}; levels must be mutually orthogonal",
                            a + 1,
                            p + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn point(&self) -> &[f64] {
        self.space.point()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn rank(&self) -> usize {
        self.levels[0]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn degree(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn order(&self) -> usize {
        self.b.iter().flatten().map(Jet::order).min().unwrap_or(0)
    }

    /// Rows `e_a`, entries `B^i_a`.
    pub fn rows(&self) -> &JetMatrix {
        &self.b
    }

    pub fn row(&self, a: usize) -> &[Jet] {
        &self.b[a]
    }

    pub fn metric(&self) -> &JetMatrix {
        &self.metric
    }

    /// `e_a(f)`.
    pub fn frame_derivative(&self, a: usize, f: &Jet) -> Result<Jet> {
        if a >= self.dim() {
            return Err(Error::IndexOutOfRange { index: a, dim: self.dim() });
        }
        directional_derivative(&self.b[a], f)
    }

    /// `[e_a, e_b]` in coordinates.
    pub fn bracket(&self, a: usize, b: usize) -> Result<Vec<Jet>> {
        lie_bracket(&self.b[a], &self.b[b])
    }

    /// `G(e_a, e_b)` for the whole frame.
    pub fn gram(&self) -> JetMatrix {
        let n = self.dim();
        let mut g: JetMatrix = vec![Vec::with_capacity(n); n];
        for a in 0..n {
            for b in 0..n {
                let v = if b < a { g[b][a].clone() } else { inner(&self.metric, &self.b[a], &self.b[b]) };
                g[a].push(v);
            }
        }
        g
    }

    /// Induced metric on `V_level`.
    pub fn induced_metric(&self, level: usize) -> Result<JetMatrix> {
        let k = *self
            .levels
            .get(level)
            .ok_or(Error::IndexOutOfRange { index: level, dim: self.levels.len() })?;
        let mut g: JetMatrix = vec![Vec::with_capacity(k); k];
        for a in 0..k {
            for b in 0..k {
                let v = if b < a { g[b][a].clone() } else { inner(&self.metric, &self.b[a], &self.b[b]) };
                g[a].push(v);
            }
        }
        let min_eig = linalg::min_eigenvalue(&g);
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("induced metric on level {level}, smallest eigenvalue {min_eig:e}")));
        }
        Ok(g)
    }

    /// Dual coframe: row `A` holds `θ^A` with `θ^A(e_B) = δ^A_B`.
    pub fn coframe(&self) -> Result<JetMatrix> {
        linalg::inverse(&linalg::transpose(&self.b), "frame matrix")
    }

    /// Structure functions `C^a_{bc} = θ^a([e_b, e_c])`, indexed `[b, c, a]`.
    pub fn structure(&self) -> Result<Tensor<Jet>> {
        let n = self.dim();
        let order = self.order().saturating_sub(1);
        // the result only carries order − 1, so the coframe need not carry more
        let bt: JetMatrix = (0..n).map(|i| (0..n).map(|a| self.b[a][i].truncate(order)).collect()).collect();
        let w = linalg::inverse(&bt, "frame matrix")?;
        let grads: Vec<Vec<Vec<Jet>>> = self
            .b
            .iter()
            .map(|row| row.iter().map(Jet::gradient).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let mut brackets: Vec<Option<Vec<Jet>>> = vec![None; n * n];
        for b in 0..n {
            for c in b + 1..n {
                brackets[b * n + c] = Some(bracket_from_gradients(&self.b[b], &grads[b], &self.b[c], &grads[c]));
            }
        }
        let zero = self.space.zero().truncate(order);
        Ok(Tensor::from_fn(&[n, n, n], |idx| {
            let (b, c, a) = (idx[0], idx[1], idx[2]);
            let (lo, hi, sign) = match b.cmp(&c) {
                std::cmp::Ordering::Equal => return zero.clone(),
                std::cmp::Ordering::Less => (b, c, 1.0),
                std::cmp::Ordering::Greater => (c, b, -1.0),
            };
            let br = brackets[lo * n + hi].as_ref().expect("bracket computed");
            let mut acc = zero.clone();
            for i in 0..n {
                acc.add_product(&w[a][i], &br[i]);
            }
            acc * sign
        }))
    }
}

/// Ambient-orthogonal projector onto `V_level` and its complement.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub level: usize,
    /// `P` acting on coordinate vectors: `(Pv)^i = P[i][j] v^j`.
    pub p: JetMatrix,
    pub q: JetMatrix,
    /// `p^a_i` with `P(∂_i) = p^a_i e_a`, rows `a < n_level`.
    pub p_coords: JetMatrix,
    /// `q^p_i` with `Q(∂_i) = q^p_i e_p`, rows `p ≥ n_level`.
    pub q_coords: JetMatrix,
}

/// Residuals of the projector identities at the base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorResiduals {
    pub idempotence: f64,
    pub complement: f64,
    pub orthogonality: f64,
}

impl ProjectorPair {
    pub fn residuals(&self, metric: &JetMatrix) -> ProjectorResiduals {
        let p = linalg::values(&self.p);
        let q = linalg::values(&self.q);
        let g = linalg::values(metric);
        let n = p.nrows();
        let id = nalgebra::DMatrix::<f64>::identity(n, n);
        ProjectorResiduals {
            idempotence: (&p * &p - &p).amax(),
            complement: (&p + &q - id).amax(),
            orthogonality: (p.transpose() * g * q).amax(),
        }
    }
}

pub fn orthogonal_projectors(frame: &FrameEval, level: usize) -> Result<ProjectorPair> {
    let n = frame.dim();
    let k = *frame
        .levels()
        .get(level)
        .ok_or(Error::IndexOutOfRange { index: level, dim: frame.levels().len() })?;
    let g = frame.induced_metric(level)?;
    let ginv = linalg::inverse(&g, "induced metric")?;
    let e: JetMatrix = frame.rows()[..k].to_vec();
    let eg = linalg::mul(&e, frame.metric());
    let p_coords = linalg::mul(&ginv, &eg);
    let p = linalg::mul(&linalg::transpose(&e), &p_coords);
    let q: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 - &p[i][j] } else { -&p[i][j] }).collect())
        .collect();
    let w = frame.coframe()?;
    let q_coords = linalg::mul(&w[k..].to_vec(), &q);
    Ok(ProjectorPair { level, p, q, p_coords, q_coords })
}

/// Flag dimensions found at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagReport {
    pub dims: Vec<usize>,
    pub degree: usize,
    /// Singular values of the normalized spanning set at each level.
    pub singular_values: Vec<Vec<f64>>,
}

/// Generators of the distribution as jets of `order` at `point`.
fn generators(sys: &SystemDef, point: &[f64], order: usize) -> Result<(JetMatrix, JetMatrix)> {
    let params = sys.param_values();
    let space = JetSpace::new(point, order);
    let gens = eval_matrix(&sys.frame[..sys.rank()], &space, &params)?;
    let metric = eval_matrix(&sys.metric, &space, &params)?;
    Ok((gens, metric))
}

/// Bracket-generated flag of the distribution spanned by the first `m`
/// frame rows; checks it against the declared levels and frame.
pub fn flag_at_point(sys: &SystemDef, point: &[f64], rank_tol: f64) -> Result<FlagReport> {
    sys.check_point(point)?;
    let n = sys.dim();
    let m = sys.rank();
    let (gens, _) = generators(sys, point, n - m + 1)?;
    let cols = |v: &[Vec<Jet>]| v.iter().map(|x| column_values(x)).collect::<Vec<_>>();

    let (r0, sv0) = linalg::numerical_rank(&cols(&gens), rank_tol);
    if r0 < m {
        return Err(Error::Singular(format!("distribution rank drops to {r0} < {m}")));
    }
    let mut span: Vec<Vec<Jet>> = gens.clone();
    let mut layer: Vec<Vec<Jet>> = gens.clone();
    let mut dims = vec![m];
    let mut svs = vec![sv0];
    while *dims.last().unwrap() < n {
        if layer.is_empty() || layer[0][0].order() == 0 {
            break;
        }
        let mut next = Vec::new();
        for g in &gens {
            for f in &layer {
                let br = lie_bracket(g, f)?;
                let mut trial = span.clone();
                trial.push(br.clone());
                if linalg::numerical_rank(&cols(&trial), rank_tol).0 > span.len() {
                    span.push(br.clone());
                    next.push(br);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        let order = next[0][0].order();
        span = span.iter().map(|v| v.iter().map(|j| j.truncate(order)).collect()).collect();
        layer = next;
        dims.push(span.len());
        svs.push(linalg::numerical_rank(&cols(&span), rank_tol).1);
    }
    let rank = *dims.last().unwrap();
    if rank < n {
        return Err(Error::NotCompletelyNonholonomic { rank, dim: n });
    }
    if dims != sys.levels {
        return Err(Error::LevelMismatch { declared: sys.levels.clone(), computed: dims });
    }
    if !sys.auto_frame() {
        let params = sys.param_values();
        let space = JetSpace::new(point, 0);
        let rows = eval_matrix(&sys.frame, &space, &params)?;
        for (i, &k) in dims.iter().enumerate() {
            let mut set: Vec<Vec<Jet>> = span[..k].to_vec();
            set.extend(rows[..k].iter().map(|r| r.iter().map(|j| span[0][0].constant_like(j.value())).collect()));
            if rank_of(&set) != k {
                return Err(Error::FrameNotAdapted(format!(
                    "frame rows 1..{k} do not span the level-{i} distribution"
                )));
            }
        }
    }
    Ok(FlagReport { degree: dims.len() - 1, dims, singular_values: svs })
}

/// Extend generator rows to a full frame adapted to `levels`: each new level
/// is drawn from brackets of the generators with the previous level and made
/// ambient-orthogonal to everything below it.
pub fn complete_frame(generators: JetMatrix, metric: &JetMatrix, levels: &[usize]) -> Result<JetMatrix> {
    let n = metric.len();
    let m = generators.len();
    if m != levels[0] {
        return Err(Error::InvalidSystem(format!("{m} generators for rank {}", levels[0])));
    }
    let mut rows = generators.clone();
    let mut layer = generators.clone();
    for (i, w) in levels.windows(2).enumerate() {
        let need = w[1] - w[0];
        let mut chosen: Vec<Vec<Jet>> = Vec::new();
        'outer: for g in &generators {
            for f in &layer {
                let br = lie_bracket(g, f)?;
                let order = br[0].order();
                let mut trial: Vec<Vec<Jet>> =
                    rows.iter().chain(&chosen).map(|v| v.iter().map(|j| j.truncate(order)).collect()).collect();
                trial.push(br.clone());
                if rank_of(&trial) == trial.len() {
                    chosen.push(br);
                    if chosen.len() == need {
                        break 'outer;
                    }
                }
            }
        }
        if chosen.len() < need {
            return Err(Error::LevelMismatch {
                declared: levels.to_vec(),
                computed: levels[..=i].iter().copied().chain([w[0] + chosen.len()]).collect(),
            });
        }
        let order = chosen[0][0].order();
        rows = rows.iter().map(|v| v.iter().map(|j| j.truncate(order)).collect()).collect();
        // G-orthogonal complement of the rows so far
        let g: JetMatrix = rows.iter().map(|x| rows.iter().map(|y| inner(metric, x, y)).collect()).collect();
        let ginv = linalg::inverse(&g, "level Gram matrix")?;
        let orthogonalized: Vec<Vec<Jet>> = chosen
            .iter()
            .map(|v| {
                let coeffs: Vec<Jet> = rows.iter().map(|r| inner(metric, r, v)).collect();
                let c = linalg::mul_vec(&ginv, &coeffs);
                (0..n)
                    .map(|j| {
                        let mut out = v[j].clone();
                        for (a, ca) in c.iter().enumerate() {
                            out -= &(ca * &rows[a][j]);
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        rows.extend(orthogonalized.iter().cloned());
        layer = orthogonalized;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    fn heisenberg_fields(point: &[f64], order: usize) -> (Vec<Jet>, Vec<Jet>) {
        let s = JetSpace::new(point, order);
        let (x, y) = (s.variable(0).unwrap(), s.variable(1).unwrap());
        let one = s.constant(1.0);
        let zero = s.zero();
        (
            vec![one.clone(), zero.clone(), &y * -0.5],
            vec![zero, one, &x * 0.5],
        )
    }

    #[test]
    fn heisenberg_bracket_is_dz() {
        let (x, y) = heisenberg_fields(&[0.3, -1.1, 2.0], 2);
        let br = lie_bracket(&x, &y).unwrap();
        let v: Vec<f64> = br.iter().map(Jet::value).collect();
        assert_eq!(v, vec![0.0, 0.0, 1.0]);
        assert_eq!(br[0].order(), 1);
        let self_br = lie_bracket(&x, &x).unwrap();
        assert!(self_br.iter().all(|j| j.is_zero()));
    }

    #[test]
    fn bracket_needs_order() {
        let (x, y) = heisenberg_fields(&[0.0, 0.0, 0.0], 0);
        assert!(matches!(lie_bracket(&x, &y), Err(Error::OrderExceeded { .. })));
    }

    #[test]
    fn coordinate_subspace_projector() {
        let text = "[chart]\nx y z\n[metric]\n1 1 = 1\n2 2 = 1\n3 3 = 1\n[frame]\n1 = 1, 0, 0\n2 = 0, 1, 0\n3 = 0, 0, 1\n[levels]\n2 3\n";
        let sys = parse_system(text, "flat").unwrap();
        let frame = FrameEval::new(&sys, &[0.1, 0.2, 0.3], 1).unwrap();
        let pr = orthogonal_projectors(&frame, 0).unwrap();
        let p = linalg::values(&pr.p);
        assert_eq!(p, nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0])));
        // integrable: the flag never grows
        assert!(matches!(
            flag_at_point(&sys, &[0.0, 0.0, 0.0], RANK_TOL),
            Err(Error::NotCompletelyNonholonomic { rank: 2, dim: 3 })
        ));
    }

    #[test]
    fn full_distribution_has_degree_zero() {
        let text = "[chart]\nx y\n[metric]\n1 1 = 1\n2 2 = 1\n[frame]\n1 = 1, 0\n2 = 0, 1\n[levels]\n2\n";
        let sys = parse_system(text, "plane").unwrap();
        let flag = flag_at_point(&sys, &[0.5, 0.5], RANK_TOL).unwrap();
        assert_eq!(flag.dims, vec![2]);
        assert_eq!(flag.degree, 0);
        let frame = FrameEval::new(&sys, &[0.5, 0.5], 1).unwrap();
        let g = linalg::values(&frame.induced_metric(0).unwrap());
        assert_eq!(g, nalgebra::DMatrix::identity(2, 2));
    }

    #[test]
    fn non_orthogonal_levels_rejected() {
        let text = "[chart]\nx y z\n[metric]\n1 1 = 1\n2 2 = 1\n3 3 = 1\n[frame]\n1 = 1, 0, -y/2\n2 = 0, 1, x/2\n3 = 1, 0, 1\n[levels]\n2 3\n";
        let sys = parse_system(text, "h").unwrap();
        assert!(matches!(FrameEval::new(&sys, &[0.2, 0.1, 0.0], 2), Err(Error::FrameNotAdapted(_))));
    }
}
