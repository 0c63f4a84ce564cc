//! The nonholonomic metric connection, the Schouten curvature and the
//! connection obtained by projecting the ambient Levi-Civita connection.
//!
//! Index convention throughout: the single upper index comes last, so
//! `gamma[[a, b, c]] = Γ^c_{ab}` (with `∇_{e_a} e_b = Γ^c_{ab} e_c`) and
//! `curvature[[a, b, c, d]] = K^d_{abc}`.

use crate::error::{Error, Result};
use crate::geometry::{contract_gradient, orthogonal_projectors, FrameEval};
use crate::jet::Jet;
use crate::linalg::{self, JetMatrix};
use crate::tensor::Tensor;

/// Connection coefficients and related blocks at one point.
#[derive(Debug, Clone)]
pub struct ConnectionTable {
    pub m: usize,
    pub n: usize,
    /// Induced metric `g_ab` on `V`.
    pub metric: JetMatrix,
    pub metric_inv: JetMatrix,
    /// `C^a_{bc} = θ^a([e_b, e_c])` over the whole frame, `[b, c, a]`.
    pub structure: Tensor<Jet>,
    /// Christoffel-type braces `{^c_{ab}}`, `[a, b, c]`.
    pub braces: Tensor<Jet>,
    /// `Ω^c_{ab}`, defined by `−2Ω^c_{ab} e_c = p₀[e_a, e_b]`.
    pub omega: Tensor<Jet>,
    pub gamma: Tensor<Jet>,
    /// `Λ^d_{pc}` with `p₀[e_p, e_c] = Λ^d_{pc} e_d`, indexed `[p − m, c, d]`.
    pub lambda: Tensor<Jet>,
    /// `M^p_{ab}` with `q₀[e_a, e_b] = M^p_{ab} e_p`, indexed `[a, b, p − m]`.
    pub nonholonomicity: Tensor<Jet>,
}

pub fn omega_coefficients(structure: &Tensor<Jet>, m: usize) -> Tensor<Jet> {
    Tensor::from_fn(&[m, m, m], |i| structure[[i[0], i[1], i[2]]].clone() * -0.5)
}

/// `(Λ, M)` read off from the structure functions.
pub fn lambda_and_m(structure: &Tensor<Jet>, m: usize) -> (Tensor<Jet>, Tensor<Jet>) {
    let n = structure.shape()[0];
    let lambda = Tensor::from_fn(&[n - m, m, m], |i| structure[[i[0] + m, i[1], i[2]]].clone());
    let mm = Tensor::from_fn(&[m, m, n - m], |i| structure[[i[0], i[1], i[2] + m]].clone());
    (lambda, mm)
}

/// `e_e(g_ab)` for every frame direction `e < m`, indexed `[e][a][b]`.
fn metric_derivatives(frame: &FrameEval, g: &JetMatrix) -> Result<Vec<JetMatrix>> {
    let m = g.len();
    let grads: Vec<Vec<Vec<Jet>>> = g.iter().map(|row| row.iter().map(Jet::gradient).collect()).collect::<Result<_>>()?;
    Ok((0..m)
        .map(|e| {
            (0..m)
                .map(|a| (0..m).map(|b| contract_gradient(frame.row(e), &grads[a][b])).collect())
                .collect()
        })
        .collect())
}

impl ConnectionTable {
    pub fn new(frame: &FrameEval) -> Result<Self> {
        let m = frame.rank();
        let n = frame.dim();
        let structure = frame.structure()?;
        Self::with_structure(frame, structure, m, n)
    }

    pub(crate) fn with_structure(frame: &FrameEval, structure: Tensor<Jet>, m: usize, n: usize) -> Result<Self> {
        let g = frame.induced_metric(0)?;
        let ginv = linalg::inverse(&g, "induced metric")?;
        let dg = metric_derivatives(frame, &g)?;
        let order = frame.order().saturating_sub(1);
        let zero = frame.space().zero().truncate(order);

        let braces = Tensor::from_fn(&[m, m, m], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            let mut acc = zero.clone();
            for e in 0..m {
                let t = &dg[a][b][e] + &dg[b][a][e] - &dg[e][a][b];
                acc.add_product(&ginv[c][e], &t);
            }
            acc * 0.5
        });
        let omega = omega_coefficients(&structure, m);
        // lowered Ω: w[e][b][c] = g_{ae}-contracted pieces, computed once
        // as h[a][b][c] = g_{ae} g^{cd} Ω^e_{bd}
        let h = Tensor::from_fn(&[m, m, m], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            let mut acc = zero.clone();
            for e in 0..m {
                if g[a][e].is_zero() {
                    continue;
                }
                let mut inner = zero.clone();
                for d in 0..m {
                    inner.add_product(&ginv[c][d], &omega[[b, d, e]]);
                }
                acc.add_product(&g[a][e], &inner);
            }
            acc
        });
        let gamma = Tensor::from_fn(&[m, m, m], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            &braces[[a, b, c]] + &h[[a, b, c]] + &h[[b, a, c]] - &omega[[a, b, c]]
        });
        let (lambda, nonholonomicity) = lambda_and_m(&structure, m);
        Ok(ConnectionTable { m, n, metric: g, metric_inv: ginv, structure, braces, omega, gamma, lambda, nonholonomicity })
    }

    /// `max |Γ^c_{ab} − Γ^c_{ba} + 2Ω^c_{ab}|` over value parts.
    pub fn torsion_residual(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let r = self.gamma[[a, b, c]].value() - self.gamma[[b, a, c]].value()
                        + 2.0 * self.omega[[a, b, c]].value();
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// `max |e_c(g_ab) − Γ^e_{ca} g_eb − Γ^e_{cb} g_ae|` over value parts.
    pub fn metric_compatibility_residual(&self, frame: &FrameEval) -> Result<f64> {
        let m = self.m;
        let mut worst = 0.0f64;
        for c in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let lhs = frame.frame_derivative(c, &self.metric[a][b])?.value();
                    let rhs: f64 = (0..m)
                        .map(|e| {
                            self.gamma[[c, a, e]].value() * self.metric[e][b].value()
                                + self.gamma[[c, b, e]].value() * self.metric[a][e].value()
                        })
                        .sum();
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Curvature components `K^d_{abc}`, antisymmetric in `(a, b)`.
#[derive(Debug, Clone)]
pub struct CurvatureBlock {
    /// 0 for the Schouten tensor, `i` for the level-`i` tensor; the last
    /// level is the Wagner tensor.
    pub level: usize,
    /// Slot indices `a, b` range over `0..slots`; `c, d` over `0..m`.
    pub slots: usize,
    pub m: usize,
    /// `[a, b, c, d]`.
    pub components: Tensor<Jet>,
}

impl CurvatureBlock {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet {
        &self.components[[a, b, c, d]]
    }

    pub fn values(&self) -> Tensor<f64> {
        self.components.values()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().max_abs()
    }

    /// `max |K_{abcd} + K_{bacd}|`; zero by construction.
    pub fn antisymmetry_residual(&self) -> f64 {
        let v = self.values();
        let mut worst = 0.0f64;
        v.for_each(|i, x| worst = worst.max((x + v[[i[1], i[0], i[2], i[3]]]).abs()));
        worst
    }
}

/// Curvature of the iterated connection `pi` (`[a, b, c] = Π^c_{ab}`,
/// `a < slots`) along the first `slots` frame vectors:
///
/// `K^d_{abc} = e_a(Π^d_{bc}) − e_b(Π^d_{ac}) + Π^d_{ae}Π^e_{bc} − Π^d_{be}Π^e_{ac}
///  + 2Ω̄^f_{ab}Π^d_{fc} − M̄^p_{ab}Λ^d_{pc}`
///
/// with `2Ω̄^f_{ab} = −C^f_{ab}` for `f < slots` and `M̄^p_{ab} = C^p_{ab}`,
/// `Λ^d_{pc} = C^d_{pc}` for `p ≥ slots`.
pub(crate) fn curvature_of(
    frame: &FrameEval,
    structure: &Tensor<Jet>,
    pi: &Tensor<Jet>,
    slots: usize,
    level: usize,
) -> Result<CurvatureBlock> {
    let m = frame.rank();
    let n = frame.dim();
    let order = pi.data().iter().map(Jet::order).min().unwrap_or(0);
    if order == 0 {
        return Err(Error::OrderExceeded { requested: 1, order: 0 });
    }
    let zero = frame.space().zero().truncate(order - 1);
    // e_a(Π^d_{bc}) for all a, b < slots
    let mut dpi: Vec<Option<Jet>> = vec![None; slots * slots * m * m];
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * slots + b) * m + c) * m + d;
    for b in 0..slots {
        for c in 0..m {
            for d in 0..m {
                let grad = pi[[b, c, d]].gradient()?;
                for a in (0..slots).filter(|&a| a != b) {
                    dpi[idx(a, b, c, d)] = Some(contract_gradient(frame.row(a), &grad));
                }
            }
        }
    }
    let mut comps: Vec<Jet> = vec![zero.clone(); slots * slots * m * m];
    for a in 0..slots {
        for b in a + 1..slots {
            for c in 0..m {
                for d in 0..m {
                    let mut k = dpi[idx(a, b, c, d)].clone().expect("derivative computed");
                    k -= dpi[idx(b, a, c, d)].as_ref().expect("derivative computed");
                    for e in 0..m {
                        k.add_product(&pi[[a, e, d]], &pi[[b, c, e]]);
                        k.sub_product(&pi[[b, e, d]], &pi[[a, c, e]]);
                    }
                    for f in 0..slots {
                        let cf = &structure[[a, b, f]];
                        if !cf.is_zero() {
                            k.sub_product(cf, &pi[[f, c, d]]);
                        }
                    }
                    for p in slots..n {
                        let cp = &structure[[a, b, p]];
                        if !cp.is_zero() {
                            k.sub_product(cp, &structure[[p, c, d]]);
                        }
                    }
                    comps[idx(b, a, c, d)] = -&k;
                    comps[idx(a, b, c, d)] = k;
                }
            }
        }
    }
    let components = Tensor::from_fn(&[slots, slots, m, m], |i| comps[idx(i[0], i[1], i[2], i[3])].clone());
    Ok(CurvatureBlock { level, slots, m, components })
}

pub fn schouten_tensor(frame: &FrameEval, table: &ConnectionTable) -> Result<CurvatureBlock> {
    curvature_of(frame, &table.structure, &table.gamma, table.m, 0)
}

/// Levi-Civita Christoffel symbols of the ambient metric,
/// `[i, j, k] = Γ^k_{ij}`.
pub fn ambient_christoffel(metric: &JetMatrix) -> Result<Tensor<Jet>> {
    let n = metric.len();
    let ginv = linalg::inverse(metric, "ambient metric")?;
    let dg: Vec<JetMatrix> = (0..n)
        .map(|l| {
            (0..n)
                .map(|i| (0..n).map(|j| metric[i][j].derivative(l)).collect())
                .collect()
        })
        .collect::<Result<_>>()?;
    let order = metric[0][0].order().saturating_sub(1);
    let zero = metric[0][0].space().zero().truncate(order);
    Ok(Tensor::from_fn(&[n, n, n], |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let mut acc = zero.clone();
        for l in 0..n {
            let t = &dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j];
            acc.add_product(&ginv[k][l], &t);
        }
        acc * 0.5
    }))
}

/// Coefficients of the projected connection
/// `Γ̃^c_{ab} = Γ^k_{ij} B^i_a B^j_b p^c_k + B^i_a ∂_i(B^j_b) p^c_j`,
/// computed from the ambient Levi-Civita connection and the orthogonal
/// projector onto `V`; `[a, b, c]`.
pub fn projected_connection_from_ambient(frame: &FrameEval) -> Result<Tensor<Jet>> {
    let m = frame.rank();
    let n = frame.dim();
    let chr = ambient_christoffel(frame.metric())?;
    let proj = orthogonal_projectors(frame, 0)?;
    let p = &proj.p_coords;
    let b = frame.rows();
    // ∇_{e_a} e_b in coordinates
    let mut out = Vec::with_capacity(m * m * m);
    for a in 0..m {
        for bb in 0..m {
            let mut cov: Vec<Jet> = Vec::with_capacity(n);
            for k in 0..n {
                let mut acc = frame.frame_derivative(a, &b[bb][k])?;
                for i in 0..n {
                    for j in 0..n {
                        let ch = &chr[[i, j, k]];
                        if ch.is_zero() {
                            continue;
                        }
                        acc += &(&b[a][i] * &b[bb][j] * ch);
                    }
                }
                cov.push(acc);
            }
            for c in 0..m {
                let mut acc = cov[0].constant_like(0.0);
                for k in 0..n {
                    acc.add_product(&p[c][k], &cov[k]);
                }
                out.push(acc);
            }
        }
    }
    let mut it = out.into_iter();
    Ok(Tensor::from_fn(&[m, m, m], |_| it.next().expect("component")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    #[test]
    fn integrable_euclidean_case_is_flat() {
        let text = "[chart]\nx y z\n[metric]\n1 1 = 1\n2 2 = 1\n3 3 = 1\n[frame]\n1 = 1, 0, 0\n2 = 0, 1, 0\n3 = 0, 0, 1\n[levels]\n2 3\n";
        let sys = parse_system(text, "flat").unwrap();
        let frame = FrameEval::new(&sys, &[0.3, 0.1, -0.4], 2).unwrap();
        let table = ConnectionTable::new(&frame).unwrap();
        assert_eq!(table.gamma.values().max_abs(), 0.0);
        assert_eq!(table.omega.values().max_abs(), 0.0);
        let tilde = projected_connection_from_ambient(&frame).unwrap();
        assert_eq!(tilde.values().max_abs(), 0.0);
        assert_eq!(schouten_tensor(&frame, &table).unwrap().max_abs(), 0.0);
    }
}
