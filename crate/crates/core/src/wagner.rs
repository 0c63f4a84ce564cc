//! The iterated construction up the flag: level metrics, μ-morphisms,
//! iterated connections Π, level curvatures and the Wagner tensor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::connection::{curvature_of, schouten_tensor, ConnectionTable, CurvatureBlock};
use crate::error::{Error, Result};
use crate::geometry::FrameEval;
use crate::jet::Jet;
use crate::linalg::{self, JetMatrix};
use crate::system::SystemDef;
use crate::tensor::Tensor;

/// Absolute threshold below which the Wagner tensor counts as zero.
pub const FLAT_TOL: f64 = 1e-8;

/// Index pairs `(a, b)` with `a < b < k`, in lexicographic order.
pub fn bivector_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
}

/// `g^∧(e_a∧e_b, e_c∧e_d) = g_ac g_bd − g_ad g_bc` on the basis of
/// [`bivector_pairs`].
pub fn wedge_metric(g: &JetMatrix) -> JetMatrix {
    let pairs = bivector_pairs(g.len());
    pairs
        .iter()
        .map(|&(a, b)| {
            pairs
                .iter()
                .map(|&(c, d)| &g[a][c] * &g[b][d] - &g[a][d] * &g[b][c])
                .collect()
        })
        .collect()
}

/// Extended metric on the complement block `lo..hi` of one flag level.
#[derive(Debug, Clone)]
pub struct LevelMetric {
    pub level: usize,
    pub lo: usize,
    pub hi: usize,
    /// `ḡ^{AB}` for `A, B` in `lo..hi` (shifted to start at 0).
    pub upper: JetMatrix,
    /// `ḡ_{AB}`, the inverse of `upper`.
    pub lower: JetMatrix,
}

/// `ḡ^{AB} = C^A_{ab} C^B_{cd} g^{ac} g^{bd}` summed over all ordered pairs
/// `a, b, c, d < lo`, where `g^{-1}` is the inverse metric of the level
/// below (`lower_inv`, `lo × lo`).
pub fn extend_metric_level(
    lower_inv: &JetMatrix,
    structure: &Tensor<Jet>,
    lo: usize,
    hi: usize,
    level: usize,
) -> Result<LevelMetric> {
    let k = hi - lo;
    let zero = structure.data()[0].constant_like(0.0);
    // t[A][b][c] = C^A_{ab} g^{ac}, i.e. one index raised
    let raised: Vec<Vec<Vec<Jet>>> = (lo..hi)
        .map(|big| {
            (0..lo)
                .map(|b| {
                    (0..lo)
                        .map(|c| {
                            let mut acc = zero.clone();
                            for a in 0..lo {
                                let s = &structure[[a, b, big]];
                                if !s.is_zero() {
                                    acc.add_product(s, &lower_inv[a][c]);
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut upper: JetMatrix = vec![Vec::with_capacity(k); k];
    for x in 0..k {
        for y in 0..k {
            if y < x {
                let v = upper[y][x].clone();
                upper[x].push(v);
                continue;
            }
            // Σ C^A_{ab} g^{ac} C^B_{cd} g^{bd}
            let mut acc = zero.clone();
            for b in 0..lo {
                for c in 0..lo {
                    let t = &raised[x][b][c];
                    if t.is_zero() {
                        continue;
                    }
                    let mut inner = zero.clone();
                    for d in 0..lo {
                        let s = &structure[[c, d, lo + y]];
                        if !s.is_zero() {
                            inner.add_product(s, &lower_inv[b][d]);
                        }
                    }
                    acc.add_product(t, &inner);
                }
            }
            upper[x].push(acc);
        }
    }
    let min_eig = linalg::min_eigenvalue(&upper);
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "extended metric on level {level}, smallest eigenvalue {min_eig:e}"
        )));
    }
    let lower = linalg::inverse(&upper, "extended metric")?;
    Ok(LevelMetric { level, lo, hi, upper, lower })
}

/// `M*^{ab}_A = C^B_{cd} ḡ_{AB} g^{ca} g^{db}` for `A` in `lo..hi`.
#[derive(Debug, Clone)]
pub struct MuComponents {
    pub level: usize,
    pub lo: usize,
    pub hi: usize,
    /// `[A − lo, a, b]`.
    pub components: Tensor<Jet>,
}

impl MuComponents {
    /// `M*^{ab}_A`; `None` for `A < lo`, where μ vanishes.
    pub fn get(&self, big: usize, a: usize, b: usize) -> Option<&Jet> {
        (big >= self.lo && big < self.hi).then(|| &self.components[[big - self.lo, a, b]])
    }
}

pub fn mu_components(metric: &LevelMetric, lower_inv: &JetMatrix, structure: &Tensor<Jet>) -> MuComponents {
    let (lo, hi) = (metric.lo, metric.hi);
    let zero = structure.data()[0].constant_like(0.0);
    // s[A][c][d] = ḡ_{AB} C^B_{cd}
    let s: Vec<Vec<Vec<Jet>>> = (0..hi - lo)
        .map(|x| {
            (0..lo)
                .map(|c| {
                    (0..lo)
                        .map(|d| {
                            let mut acc = zero.clone();
                            for y in 0..hi - lo {
                                acc.add_product(&metric.lower[x][y], &structure[[c, d, lo + y]]);
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let components = Tensor::from_fn(&[hi - lo, lo, lo], |i| {
        let (x, a, b) = (i[0], i[1], i[2]);
        let mut acc = zero.clone();
        for c in 0..lo {
            for d in 0..lo {
                if s[x][c][d].is_zero() {
                    continue;
                }
                acc += &(&s[x][c][d] * &lower_inv[c][a] * &lower_inv[d][b]);
            }
        }
        acc
    });
    MuComponents { level: metric.level, lo, hi, components }
}

/// Iterated connection coefficients `Π^c_{Ab}` for `A < slots`.
#[derive(Debug, Clone)]
pub struct PiTable {
    pub level: usize,
    pub slots: usize,
    /// `[A, b, c]`.
    pub components: Tensor<Jet>,
}

/// Coefficients `p^a_A` of the ambient-orthogonal projection of `e_A` onto
/// `V = span(e_0..e_lo)`, for `A < hi`: `[a][A]`.
pub fn frame_projection(gram: &JetMatrix, lo: usize, hi: usize) -> Result<JetMatrix> {
    let g: JetMatrix = gram[..lo].iter().map(|r| r[..lo].to_vec()).collect();
    let ginv = linalg::inverse(&g, "level Gram matrix")?;
    let cross: JetMatrix = gram[..lo].iter().map(|r| r[..hi].to_vec()).collect();
    Ok(linalg::mul(&ginv, &cross))
}

/// `Π^c_{Ab} = p^a_A Π^c_{ab} + M*^{a'b'}_A K^c_{a'b'b} + q^p_A Λ^c_{pb}`.
///
/// With an adapted frame `q^p_A = δ^p_A` for `p ≥ lo`, and `Λ^c_{pb}` is the
/// structure function `C^c_{pb}`.
pub fn pi_level(
    prev: &PiTable,
    prev_curvature: &CurvatureBlock,
    mu: &MuComponents,
    projection: &JetMatrix,
    structure: &Tensor<Jet>,
) -> PiTable {
    let (lo, hi) = (mu.lo, mu.hi);
    let m = prev.components.shape()[1];
    let order = prev_curvature.components.data().iter().map(Jet::order).min().unwrap_or(0);
    let components = Tensor::from_fn(&[hi, m, m], |i| {
        let (big, b, c) = (i[0], i[1], i[2]);
        if big < lo {
            return prev.components[[big, b, c]].truncate(order);
        }
        let mut acc = structure[[big, b, c]].truncate(order);
        for a in 0..lo {
            let p = &projection[a][big];
            if !p.is_zero() {
                acc.add_product(p, &prev.components[[a, b, c]]);
            }
        }
        for a1 in 0..lo {
            for b1 in 0..lo {
                if a1 == b1 {
                    continue;
                }
                let ms = mu.get(big, a1, b1).expect("complement index");
                if ms.is_zero() {
                    continue;
                }
                acc.add_product(ms, prev_curvature.get(a1, b1, b, c));
            }
        }
        acc
    });
    PiTable { level: mu.level, slots: hi, components }
}

pub fn level_curvature(frame: &FrameEval, pi: &PiTable, structure: &Tensor<Jet>) -> Result<CurvatureBlock> {
    curvature_of(frame, structure, &pi.components, pi.slots, pi.level)
}

/// Everything computed for one flag level `i ≥ 1`.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub metric: LevelMetric,
    pub mu: MuComponents,
    pub pi: PiTable,
    pub curvature: CurvatureBlock,
}

/// The whole pipeline at one point.
#[derive(Debug, Clone)]
pub struct WagnerAnalysis {
    pub frame: FrameEval,
    pub connection: ConnectionTable,
    pub schouten: CurvatureBlock,
    pub levels: Vec<LevelData>,
}

impl WagnerAnalysis {
    /// Smallest jet order that carries the pipeline through `degree` levels.
    pub fn required_order(degree: usize) -> usize {
        degree + 2
    }

    pub fn run(sys: &SystemDef, point: &[f64], order: Option<usize>) -> Result<Self> {
        let need = Self::required_order(sys.degree());
        let order = order.unwrap_or(need);
        if order < need {
            return Err(Error::OrderExceeded { requested: need, order });
        }
        let frame = FrameEval::new(sys, point, order)?;
        Self::from_frame(frame)
    }

    pub fn from_frame(frame: FrameEval) -> Result<Self> {
        let m = frame.rank();
        let n = frame.dim();
        let connection = ConnectionTable::new(&frame)?;
        let schouten = schouten_tensor(&frame, &connection)?;
        let structure = &connection.structure;
        let gram = frame.gram();

        let mut lower_inv = connection.metric_inv.clone();
        let mut prev_pi = PiTable { level: 0, slots: m, components: connection.gamma.clone() };
        let mut prev_curv = schouten.clone();
        let mut levels = Vec::new();
        let bounds: Vec<usize> = frame.levels().to_vec();
        for (i, w) in bounds.windows(2).enumerate() {
            let (lo, hi) = (w[0], w[1]);
            let level = i + 1;
            let metric = extend_metric_level(&lower_inv, structure, lo, hi, level)?;
            let mu = mu_components(&metric, &lower_inv, structure);
            let projection = frame_projection(&gram, lo, hi)?;
            let pi = pi_level(&prev_pi, &prev_curv, &mu, &projection, structure);
            let curvature = level_curvature(&frame, &pi, structure)?;
            lower_inv = block_diag(&lower_inv, &metric.upper);
            prev_pi = pi.clone();
            prev_curv = curvature.clone();
            levels.push(LevelData { metric, mu, pi, curvature });
        }
        debug_assert_eq!(prev_curv.slots, n);
        Ok(WagnerAnalysis { frame, connection, schouten, levels })
    }

    pub fn degree(&self) -> usize {
        self.levels.len()
    }

    /// The final-level curvature (the Schouten tensor when `V = TM`).
    pub fn wagner(&self) -> &CurvatureBlock {
        self.levels.last().map_or(&self.schouten, |l| &l.curvature)
    }

    /// Level `i` curvature; level 0 is the Schouten tensor.
    pub fn curvature(&self, level: usize) -> Option<&CurvatureBlock> {
        if level == 0 {
            Some(&self.schouten)
        } else {
            self.levels.get(level - 1).map(|l| &l.curvature)
        }
    }

    /// `Π` at level `i`; level 0 is `Γ`.
    pub fn pi(&self, level: usize) -> Option<&Tensor<Jet>> {
        if level == 0 {
            Some(&self.connection.gamma)
        } else {
            self.levels.get(level - 1).map(|l| &l.pi.components)
        }
    }
}

pub fn wagner_tensor(sys: &SystemDef, point: &[f64]) -> Result<CurvatureBlock> {
    Ok(WagnerAnalysis::run(sys, point, None)?.wagner().clone())
}

fn block_diag(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    let zero = a[0][0].constant_like(0.0);
    let (na, nb) = (a.len(), b.len());
    (0..na + nb)
        .map(|i| {
            (0..na + nb)
                .map(|j| match (i < na, j < na) {
                    (true, true) => a[i][j].clone(),
                    (false, false) => b[i - na][j - na].clone(),
                    _ => zero.clone(),
                })
                .collect()
        })
        .collect()
}

/// Result of a flatness scan at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub value: f64,
    /// Largest `|K^d_{abc}|` over all components and sample points.
    pub max_abs: f64,
    pub flat: bool,
    pub points: Vec<Vec<f64>>,
}

const SCAN_RETRIES: usize = 20;

fn stream_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Evaluate the Wagner tensor at `samples` random points for each value of
/// `param`, in parallel; output order follows `values`.
pub fn flatness_scan(
    sys: &SystemDef,
    param: &str,
    values: &[f64],
    samples: usize,
    seed: u64,
    flat_tol: f64,
) -> Result<Vec<ScanEntry>> {
    if values.is_empty() {
        return Err(Error::Usage("empty parameter range".into()));
    }
    if sys.param(param).is_none() {
        return Err(Error::Usage(format!("system '{}' has no parameter '{param}'", sys.id)));
    }
    values
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let local = sys.clone().with_param(param, value)?;
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, idx as u64));
            let mut max_abs = 0.0f64;
            let mut points = Vec::with_capacity(samples);
            for _ in 0..samples {
                let mut tries = 0;
                loop {
                    let point = local.sample_point(&mut rng)?;
                    match wagner_tensor(&local, &point) {
                        Ok(w) => {
                            max_abs = max_abs.max(w.max_abs());
                            points.push(point);
                            break;
                        }
                        Err(e @ (Error::Singular(_) | Error::SingularMatrix(_) | Error::NotPositiveDefinite(_)))
                            if tries + 1 >= SCAN_RETRIES =>
                        {
                            return Err(e)
                        }
                        Err(Error::Singular(_) | Error::SingularMatrix(_) | Error::NotPositiveDefinite(_)) => {
                            tries += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(ScanEntry { value, max_abs, flat: max_abs < flat_tol, points })
        })
        .collect()
}

/// Seed for sample stream `index` derived from a run seed.
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    stream_seed(seed, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    #[test]
    fn wedge_of_small_metrics() {
        let s = JetSpace::new(&[0.0], 0);
        let g = vec![vec![s.constant(2.0), s.zero()], vec![s.zero(), s.constant(3.0)]];
        let w = wedge_metric(&g);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0][0].value(), 6.0);
        let id: JetMatrix = (0..3)
            .map(|i| (0..3).map(|j| s.constant(if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        let w = linalg::values(&wedge_metric(&id));
        assert_eq!(w, nalgebra::DMatrix::identity(3, 3));
    }

    #[test]
    fn pairs_are_lexicographic() {
        assert_eq!(bivector_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
    }
}
