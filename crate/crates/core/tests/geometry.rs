use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wagner_core::catalog::builtin;
use wagner_core::geometry::{directional_derivative, flag_at_point, lie_bracket, orthogonal_projectors, FrameEval, RANK_TOL};
use wagner_core::jet::Jet;
use wagner_core::system::SystemDef;

const SYSTEMS: &[&str] = &["disc", "ball-sphere", "heisenberg"];

fn sampled(id: &str, seed: u64) -> (SystemDef, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = builtin(id).unwrap();
    sys.sample_params(&mut rng);
    (sys, rng)
}

fn max_diff(a: &[Jet], b: &[Jet]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.value() - y.value()).abs()).fold(0.0, f64::max)
}

fn add(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale(f: &Jet, v: &[Jet]) -> Vec<Jet> {
    v.iter().map(|x| f * x).collect()
}

#[test]
fn bracket_identities() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        let (sys, mut rng) = sampled(id, 10 + k as u64);
        for _ in 0..10 {
            let point = sys.sample_point(&mut rng).unwrap();
            let frame = FrameEval::new(&sys, &point, 3).unwrap();
            let n = frame.dim();
            let (x, y, z) = (frame.row(0), frame.row(1), frame.row(n - 1));

            let xy = lie_bracket(x, y).unwrap();
            let yx = lie_bracket(y, x).unwrap();
            assert!(max_diff(&xy, &scale(&x[0].constant_like(-1.0), &yx)) < 1e-12, "{id} antisymmetry");

            let jacobi = add(
                &add(&lie_bracket(x, &lie_bracket(y, z).unwrap()).unwrap(), &lie_bracket(y, &lie_bracket(z, x).unwrap()).unwrap()),
                &lie_bracket(z, &xy).unwrap(),
            );
            assert!(jacobi.iter().all(|j| j.value().abs() < 1e-10), "{id} Jacobi");

            // [X, fY] = X(f) Y + f [X, Y] with f a component of the metric
            let f = &frame.metric()[0][0];
            let lhs = lie_bracket(x, &scale(f, y)).unwrap();
            let rhs = add(&scale(&directional_derivative(x, f).unwrap(), y), &scale(f, &xy));
            assert!(max_diff(&lhs, &rhs) < 1e-10, "{id} Leibniz");
        }
    }
}

#[test]
fn projector_identities() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        let (sys, mut rng) = sampled(id, 20 + k as u64);
        for _ in 0..10 {
            let point = sys.sample_point(&mut rng).unwrap();
            let frame = FrameEval::new(&sys, &point, 1).unwrap();
            for level in 0..sys.levels.len() - 1 {
                let pair = orthogonal_projectors(&frame, level).unwrap();
                let r = pair.residuals(frame.metric());
                assert!(r.idempotence < 1e-10 && r.complement < 1e-10 && r.orthogonality < 1e-10, "{id} {r:?}");
                // P fixes the level's frame vectors and Q kills them
                let kdim = sys.levels[level];
                for a in 0..kdim {
                    let e = frame.row(a);
                    for i in 0..frame.dim() {
                        let pe: f64 = (0..frame.dim()).map(|j| pair.p[i][j].value() * e[j].value()).sum();
                        assert!((pe - e[i].value()).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn flags_match_declared_levels() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        let (sys, mut rng) = sampled(id, 30 + k as u64);
        for _ in 0..20 {
            let point = sys.sample_point(&mut rng).unwrap();
            let flag = flag_at_point(&sys, &point, RANK_TOL).unwrap();
            assert_eq!(flag.dims, sys.levels, "{id} at {point:?}");
            assert_eq!(flag.degree, sys.levels.len() - 1);
        }
    }
}

#[test]
fn structure_functions_are_antisymmetric() {
    let (sys, mut rng) = sampled("disc", 40);
    let point = sys.sample_point(&mut rng).unwrap();
    let frame = FrameEval::new(&sys, &point, 2).unwrap();
    let c = frame.structure().unwrap();
    let n = frame.dim();
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                assert!((c[[a, b, d]].value() + c[[b, a, d]].value()).abs() < 1e-14);
            }
        }
    }
}
