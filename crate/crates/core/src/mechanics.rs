//! Free nonholonomic motion: geodesics of the nonholonomic connection with
//! velocities carried in frame components, so the constraints hold by
//! construction.

use nalgebra::DMatrix;

use crate::connection::{projected_connection_from_ambient, ConnectionTable};
use crate::error::{Error, Result};
use crate::geometry::FrameEval;
use crate::linalg;
use crate::system::SystemDef;
use crate::tensor::Tensor;

/// Configuration `q` and frame velocity `u` (`γ̇ = u^a e_a`).
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: Vec<f64>,
    pub u: Vec<f64>,
}

/// Which connection coefficients drive the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectionPath {
    /// Coefficients built from the induced metric and the frame brackets.
    #[default]
    Intrinsic,
    /// Ambient Levi-Civita connection projected onto `V`.
    Projected,
}

/// Time derivative of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub q_dot: Vec<f64>,
    pub u_dot: Vec<f64>,
}

fn frame_at(sys: &SystemDef, q: &[f64]) -> Result<FrameEval> {
    FrameEval::new(sys, q, 1)
}

fn gamma_values(frame: &FrameEval, path: ConnectionPath) -> Result<Tensor<f64>> {
    Ok(match path {
        ConnectionPath::Intrinsic => ConnectionTable::new(frame)?.gamma.values(),
        ConnectionPath::Projected => projected_connection_from_ambient(frame)?.values(),
    })
}

fn check_state(sys: &SystemDef, state: &State) -> Result<()> {
    if state.u.len() != sys.rank() {
        return Err(Error::Usage(format!(
            "velocity has {} components, the distribution has rank {}",
            state.u.len(),
            sys.rank()
        )));
    }
    if state.u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("velocity components must be finite".into()));
    }
    Ok(())
}

/// `q̇^i = B^i_a u^a`, `u̇^c = −Γ^c_{ab} u^a u^b`.
pub fn geodesic_rhs(sys: &SystemDef, state: &State, path: ConnectionPath) -> Result<Rates> {
    check_state(sys, state)?;
    let frame = frame_at(sys, &state.q)?;
    let gamma = gamma_values(&frame, path)?;
    let m = sys.rank();
    let n = sys.dim();
    let q_dot = (0..n)
        .map(|i| (0..m).map(|a| frame.row(a)[i].value() * state.u[a]).sum())
        .collect();
    let mut u_dot = vec![0.0; m];
    for (c, out) in u_dot.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                acc += gamma[[a, b, c]] * state.u[a] * state.u[b];
            }
        }
        *out = -acc;
    }
    Ok(Rates { q_dot, u_dot })
}

/// Kinetic energy `½ g_ab u^a u^b`.
pub fn energy(sys: &SystemDef, state: &State) -> Result<f64> {
    check_state(sys, state)?;
    let frame = FrameEval::new(sys, &state.q, 0)?;
    let g = frame.induced_metric(0)?;
    let m = sys.rank();
    let mut e = 0.0;
    for a in 0..m {
        for b in 0..m {
            e += g[a][b].value() * state.u[a] * state.u[b];
        }
    }
    Ok(0.5 * e)
}

/// `max_p |θ^p(q̇)|` over the coframe directions transverse to `V`.
pub fn constraint_residual(sys: &SystemDef, q: &[f64], q_dot: &[f64]) -> Result<f64> {
    let frame = FrameEval::new(sys, q, 0)?;
    let n = sys.dim();
    let m = sys.rank();
    let b = linalg::values(frame.rows());
    let coframe = b
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("frame".into()))?;
    let v = DMatrix::from_column_slice(n, 1, q_dot);
    let theta = coframe * v;
    Ok((m..n).map(|p| theta[p].abs()).fold(0.0, f64::max))
}

/// One trajectory sample with its monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    pub energy: f64,
    /// `|E(t) − E(0)| / E(0)`.
    pub energy_drift: f64,
    pub constraint_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.energy_drift).fold(0.0, f64::max)
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.constraint_residual).fold(0.0, f64::max)
    }
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(sys: &SystemDef, s: &State, dt: f64, path: ConnectionPath) -> Result<(State, Rates)> {
    let k1 = geodesic_rhs(sys, s, path)?;
    let at = |k: &Rates, h: f64| State { q: axpy(&s.q, h, &k.q_dot), u: axpy(&s.u, h, &k.u_dot) };
    let k2 = geodesic_rhs(sys, &at(&k1, 0.5 * dt), path)?;
    let k3 = geodesic_rhs(sys, &at(&k2, 0.5 * dt), path)?;
    let k4 = geodesic_rhs(sys, &at(&k3, dt), path)?;
    let combine = |f: fn(&Rates) -> &Vec<f64>, x: &[f64]| -> Vec<f64> {
        (0..x.len())
            .map(|i| x[i] + dt / 6.0 * (f(&k1)[i] + 2.0 * f(&k2)[i] + 2.0 * f(&k3)[i] + f(&k4)[i]))
            .collect()
    };
    let next = State { q: combine(|r| &r.q_dot, &s.q), u: combine(|r| &r.u_dot, &s.u) };
    Ok((next, k1))
}

/// Classical fixed-step RK4 from `t = 0` to `t_end`, recording a sample
/// every `every` steps (and always the final state). Aborts with a
/// singularity error if the path approaches the system's singular locus.
pub fn integrate_trajectory(
    sys: &SystemDef,
    initial: &State,
    t_end: f64,
    dt: f64,
    every: usize,
    path: ConnectionPath,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Usage(format!("end time must be non-negative, got {t_end}")));
    }
    check_state(sys, initial)?;
    let steps = (t_end / dt).round() as usize;
    let every = every.max(1);
    let e0 = energy(sys, initial)?;
    let drift = |e: f64| if e0 > 0.0 { (e - e0).abs() / e0 } else { (e - e0).abs() };

    let sample = |t: f64, state: &State, rates: &Rates| -> Result<Sample> {
        let e = energy(sys, state)?;
        Ok(Sample {
            t,
            q: state.q.clone(),
            u: state.u.clone(),
            energy: e,
            energy_drift: drift(e),
            constraint_residual: constraint_residual(sys, &state.q, &rates.q_dot)?,
        })
    };

    let mut samples = Vec::with_capacity(steps / every + 2);
    let mut state = initial.clone();
    for step in 0..steps {
        let (next, rates) = rk4_step(sys, &state, dt, path)?;
        if step % every == 0 {
            samples.push(sample(step as f64 * dt, &state, &rates)?);
        }
        state = next;
    }
    let rates = geodesic_rhs(sys, &state, path)?;
    samples.push(sample(steps as f64 * dt, &state, &rates)?);
    Ok(Trajectory { samples })
}

/// Observed convergence ratio `|y_h − y_{h/2}| / |y_{h/2} − y_{h/4}|` of the
/// final state; close to 16 for a fourth-order method.
pub fn convergence_ratio(sys: &SystemDef, initial: &State, t_end: f64, dt: f64) -> Result<f64> {
    let end = |h: f64| -> Result<Vec<f64>> {
        let traj = integrate_trajectory(sys, initial, t_end, h, usize::MAX, ConnectionPath::Intrinsic)?;
        let last = traj.last();
        Ok(last.q.iter().chain(&last.u).copied().collect())
    };
    let y1 = end(dt)?;
    let y2 = end(dt / 2.0)?;
    let y4 = end(dt / 4.0)?;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    Ok(dist(&y1, &y2) / dist(&y2, &y4))
}
