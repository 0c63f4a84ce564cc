use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wagner_core::catalog::builtin;
use wagner_core::connection::{projected_connection_from_ambient, schouten_tensor, ConnectionTable};
use wagner_core::geometry::FrameEval;
use wagner_core::jet::Jet;

const SYSTEMS: &[&str] = &["disc", "ball-sphere", "heisenberg"];

fn frames(id: &str, seed: u64, count: usize, order: usize) -> Vec<FrameEval> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = builtin(id).unwrap();
    sys.sample_params(&mut rng);
    (0..count)
        .map(|_| {
            let point = sys.sample_point(&mut rng).unwrap();
            FrameEval::new(&sys, &point, order).unwrap()
        })
        .collect()
}

/// Positive weights `f_a = 1.3 + 0.4 sin(q^0 + (a + 1) q^1)` as jets.
fn weights(frame: &FrameEval) -> Vec<Jet> {
    let space = frame.space();
    let q0 = space.variable(0).unwrap();
    let q1 = space.variable(1).unwrap();
    (0..frame.rank()).map(|a| (&q0 + &(&q1 * (a as f64 + 1.0))).sin() * 0.4 + 1.3).collect()
}

fn rescaled(frame: &FrameEval, f: &[Jet]) -> FrameEval {
    let rows = frame
        .rows()
        .iter()
        .enumerate()
        .map(|(a, row)| row.iter().map(|x| if a < f.len() { x * &f[a] } else { x.clone() }).collect())
        .collect();
    FrameEval::from_parts(rows, frame.metric().clone(), frame.levels().to_vec()).unwrap()
}

#[test]
fn torsion_and_compatibility() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for frame in frames(id, k as u64, 20, 2) {
            let con = ConnectionTable::new(&frame).unwrap();
            assert!(con.torsion_residual() < 1e-10, "{id}");
            assert!(con.metric_compatibility_residual(&frame).unwrap() < 1e-9, "{id}");
        }
    }
}

#[test]
fn projected_ambient_connection_agrees() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for frame in frames(id, 100 + k as u64, 20, 2) {
            let con = ConnectionTable::new(&frame).unwrap();
            let projected = projected_connection_from_ambient(&frame).unwrap();
            let mut worst = 0.0f64;
            projected.for_each(|i, j| worst = worst.max((j.value() - con.gamma.get(i).value()).abs()));
            assert!(worst < 1e-9, "{id}: {worst:e}");
        }
    }
}

#[test]
fn schouten_is_covariant_under_rescaling() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for frame in frames(id, 200 + k as u64, 8, 2) {
            let f = weights(&frame);
            let fv: Vec<f64> = f.iter().map(Jet::value).collect();
            let k0 = schouten_tensor(&frame, &ConnectionTable::new(&frame).unwrap()).unwrap().values();
            let scaled = rescaled(&frame, &f);
            let k1 = schouten_tensor(&scaled, &ConnectionTable::new(&scaled).unwrap()).unwrap().values();
            k0.for_each(|i, &v| {
                let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
                let want = v * fv[a] * fv[b] * fv[c] / fv[d];
                let got = k1[[a, b, c, d]];
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{id} {i:?}: {got} vs {want}");
            });
        }
    }
}

#[test]
fn lambda_matches_direct_brackets() {
    for frame in frames("disc", 300, 10, 2) {
        let con = ConnectionTable::new(&frame).unwrap();
        let w = frame.coframe().unwrap();
        let (m, n) = (frame.rank(), frame.dim());
        for p in m..n {
            for c in 0..m {
                let br = frame.bracket(p, c).unwrap();
                for d in 0..m {
                    let direct: f64 = (0..n).map(|i| w[d][i].value() * br[i].value()).sum();
                    assert!((con.lambda[[p - m, c, d]].value() - direct).abs() < 1e-10);
                }
            }
        }
    }
}
