use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wagner_core::catalog::builtin;
use wagner_core::geometry::FrameEval;
use wagner_core::jet::Jet;
use wagner_core::linalg::{inverse, min_eigenvalue};
use wagner_core::reference::{check_table, reference_table, Status};
use wagner_core::report::sample_analysis;
use wagner_core::system::{parse_system, SystemDef};
use wagner_core::wagner::{bivector_pairs, wedge_metric, WagnerAnalysis};

const SYSTEMS: &[&str] = &["disc", "ball-sphere", "heisenberg"];

fn analyses(id: &str, seed: u64, count: usize) -> Vec<(SystemDef, WagnerAnalysis)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = builtin(id).unwrap();
    sys.sample_params(&mut rng);
    (0..count).map(|_| (sys.clone(), sample_analysis(&sys, &mut rng, None).unwrap())).collect()
}

/// Independent symbolic computation at three points; `K^d_{abc}` for the
/// Schouten tensor at `[a][b][c][d]` with `(a, b) = (0, 1)`, and the Wagner
/// tensor for `(a, b) = (0, 2)` and `(1, 2)`, each over `(c, d)` in
/// lexicographic order.
const HEISENBERG_ORACLE: &[([f64; 3], [f64; 4], [f64; 4], [f64; 4])] = &[
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

#[test]
fn heisenberg_matches_oracle_table() {
    let sys = builtin("heisenberg").unwrap();
    for (point, k0, w02, w12) in HEISENBERG_ORACLE {
        let an = WagnerAnalysis::run(&sys, point, None).unwrap();
        let k = an.schouten.values();
        let w = an.wagner().values();
        let cd = [(0, 0), (0, 1), (1, 0), (1, 1)];
        for (j, &(c, d)) in cd.iter().enumerate() {
            assert!((k[[0, 1, c, d]] - k0[j]).abs() < 1e-9);
            assert!((k[[1, 0, c, d]] + k0[j]).abs() < 1e-9);
            assert!((w[[0, 2, c, d]] - w02[j]).abs() < 1e-9);
            assert!((w[[1, 2, c, d]] - w12[j]).abs() < 1e-9);
            assert!(w[[0, 1, c, d]].abs() < 1e-9);
            for a in 0..3 {
                assert!(w[[a, a, c, d]].abs() < 1e-12);
            }
        }
    }
}

/// Level metric of the ball from an independent numerical computation
/// (finite-difference brackets of the frame, dense linear algebra).
#[test]
fn ball_level_metric_matches_numeric_oracle() {
    let cases: &[(f64, f64, [f64; 5], [f64; 3])] = &[
        (1.0, 1.0, [0.2, 0.5, 1.0, 0.3, 1.1], [0.6687503973460646, -0.22647967258852436, 0.39146196349662066]),
        (2.0, 3.0, [0.2, 0.5, 1.0, 0.3, 1.1], [0.8916671964614193, -0.3019728967846992, 0.521949284662161]),
        (1.5, 0.5, [-0.4, 0.3, 0.9, 1.0, 2.0], [0.32666470889566585, -0.09772771598775977, 0.05503864109420695]),
    ];
    for &(a, k, point, [g44, g45, g55]) in cases {
        let sys = builtin("ball-sphere").unwrap().with_param("A", a).unwrap().with_param("k", k).unwrap();
        let an = WagnerAnalysis::run(&sys, &point, None).unwrap();
        let up = &an.levels[0].metric.upper;
        for (got, want) in [(up[0][0].value(), g44), (up[0][1].value(), g45), (up[1][1].value(), g55)] {
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "A={a} k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn disc_published_values_hold() {
    for (sys, an) in analyses("disc", 1, 10) {
        let table = reference_table(&sys).unwrap().unwrap();
        for o in check_table(&sys, &table, &an).unwrap() {
            assert_eq!(o.status, Status::Pass, "{}: {} vs {}", o.name, o.computed, o.expected);
        }
    }
}

#[test]
fn level_metrics_positive_definite_and_curvatures_antisymmetric() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for (_, an) in analyses(id, 10 + k as u64, 15) {
            assert!(an.schouten.antisymmetry_residual() < 1e-12);
            for level in &an.levels {
                assert!(min_eigenvalue(&level.metric.upper) > 0.0, "{id}");
                assert!(level.curvature.antisymmetry_residual() < 1e-12, "{id}");
            }
            assert_eq!(an.wagner().slots, an.frame.dim());
        }
    }
}

#[test]
fn pi_restricts_to_previous_level() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for (_, an) in analyses(id, 20 + k as u64, 5) {
            for level in 1..=an.degree() {
                let prev = an.pi(level - 1).unwrap();
                let cur = an.pi(level).unwrap();
                let lo = prev.shape()[0];
                prev.for_each(|i, p| {
                    assert!(i[0] < lo);
                    assert!((cur[[i[0], i[1], i[2]]].value() - p.value()).abs() < 1e-12, "{id} level {level} {i:?}");
                });
            }
        }
    }
}

#[test]
fn extension_equals_wedge_route() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for (_, an) in analyses(id, 30 + k as u64, 5) {
            let m = an.frame.rank();
            let level = &an.levels[0];
            let pairs = bivector_pairs(m);
            let wedge_inv = inverse(&wedge_metric(&an.connection.metric), "wedge").unwrap();
            let c = &an.connection.structure;
            for x in level.metric.lo..level.metric.hi {
                for y in level.metric.lo..level.metric.hi {
                    let mut acc = 0.0;
                    for (i, &(a, b)) in pairs.iter().enumerate() {
                        for (j, &(cc, d)) in pairs.iter().enumerate() {
                            acc += c[[a, b, x]].value() * c[[cc, d, y]].value() * wedge_inv[i][j].value();
                        }
                    }
                    let lo = level.metric.lo;
                    let got = level.metric.upper[x - lo][y - lo].value();
                    assert!((got - 2.0 * acc).abs() < 1e-10 * got.abs().max(1.0), "{id}");
                }
            }
        }
    }
}

#[test]
fn wagner_is_covariant_under_rescaling() {
    for (k, id) in SYSTEMS.iter().enumerate() {
        for (_, an) in analyses(id, 40 + k as u64, 4) {
            let frame = &an.frame;
            let m = frame.rank();
            let space = frame.space();
            let q0 = space.variable(0).unwrap();
            let q1 = space.variable(1).unwrap();
            let f: Vec<Jet> = (0..m).map(|a| (&q0 - &(&q1 * (a as f64 + 0.5))).cos() * 0.3 + 1.2).collect();
            let rows = frame
                .rows()
                .iter()
                .enumerate()
                .map(|(a, row)| row.iter().map(|x| if a < m { x * &f[a] } else { x.clone() }).collect())
                .collect();
            let scaled = FrameEval::from_parts(rows, frame.metric().clone(), frame.levels().to_vec()).unwrap();
            let w1 = WagnerAnalysis::from_frame(scaled).unwrap().wagner().values();
            let s: Vec<f64> = (0..frame.dim()).map(|a| if a < m { f[a].value() } else { 1.0 }).collect();
            an.wagner().values().for_each(|i, &v| {
                let want = v * s[i[0]] * s[i[1]] * s[i[2]] / s[i[3]];
                let got = w1[[i[0], i[1], i[2], i[3]]];
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{id} {i:?}: {got} vs {want}");
            });
        }
    }
}

#[test]
fn generated_frame_agrees_with_declared_frame() {
    let text = "[chart]\nx, y, z\n[metric]\n1 1 = 1\n2 2 = 1\n3 3 = 1\n[frame]\n1 = 1, 0, -y/2\n2 = 0, 1, x/2\n\
                [levels]\n2 3\n";
    let auto = parse_system(text, "heisenberg-generators").unwrap();
    assert!(auto.auto_frame());
    let declared = builtin("heisenberg").unwrap();
    for point in [[0.3, -0.7, 0.2], [1.1, 0.4, -0.5]] {
        let a = WagnerAnalysis::run(&auto, &point, None).unwrap();
        let d = WagnerAnalysis::run(&declared, &point, None).unwrap();
        assert_eq!(a.degree(), d.degree());
        let (ka, kd) = (a.schouten.values(), d.schouten.values());
        kd.for_each(|i, &v| assert!((ka[[i[0], i[1], i[2], i[3]]] - v).abs() < 1e-12));
        // the completed third vector is a multiple of the declared one
        let (ea, ed) = (a.frame.row(2), d.frame.row(2));
        let dot = |u: &[Jet], v: &[Jet]| u.iter().zip(v).map(|(x, y)| x.value() * y.value()).sum::<f64>();
        let s = dot(ea, ed) / dot(ed, ed);
        let scale = |k: usize| if k == 2 { s } else { 1.0 };
        let (wa, wd) = (a.wagner().values(), d.wagner().values());
        wd.for_each(|i, &v| {
            let want = v * scale(i[0]) * scale(i[1]);
            assert!((wa[[i[0], i[1], i[2], i[3]]] - want).abs() < 1e-10, "{i:?}");
        });
    }
}
