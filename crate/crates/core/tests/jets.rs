use proptest::prelude::*;
use wagner_core::expr::{self, Expr};
use wagner_core::jet::{Jet, JetSpace};

fn chart() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

const FUNCTIONS: &[&str] = &[
    "sin(x*y) + cos(x)^2/(2 + y^2)",
    "sqrt(3 + x^2*y^2) - tan(x/3)*y",
    "(x - 2*y)^3/(5 + sin(y))",
    "cos(sin(x) + y)*x^-2",
];

fn parse(text: &str) -> Expr {
    expr::parse(text, &chart(), &[]).unwrap()
}

/// Central difference with one Richardson step.
fn d1(f: &Expr, p: &[f64], i: usize, h: f64) -> f64 {
    let central = |h: f64| {
        let (mut a, mut b) = (p.to_vec(), p.to_vec());
        a[i] += h;
        b[i] -= h;
        (f.eval(&a, &[]) - f.eval(&b, &[])) / (2.0 * h)
    };
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_derivatives_match_finite_differences(x in 0.3f64..1.5, y in -1.5f64..1.5, k in 0usize..4) {
        let f = parse(FUNCTIONS[k]);
        let p = [x, y];
        let jet = f.eval_jet(&JetSpace::new(&p, 2), &[]).unwrap();
        prop_assert!((jet.value() - f.eval(&p, &[])).abs() < 1e-12);
        for i in 0..2 {
            let mut alpha = [0u8; 2];
            alpha[i] = 1;
            let fd = d1(&f, &p, i, 1e-5);
            prop_assert!(close(jet.partial(&alpha).unwrap(), fd, 1e-6), "d{i}: {} vs {fd}", jet.partial(&alpha).unwrap());
        }
    }

    #[test]
    fn second_derivatives_match_differenced_gradients(x in 0.3f64..1.5, y in -1.5f64..1.5, k in 0usize..4) {
        let f = parse(FUNCTIONS[k]);
        let p = [x, y];
        let jet = f.eval_jet(&JetSpace::new(&p, 3), &[]).unwrap();
        // differentiate the exact first-derivative jets numerically
        for i in 0..2 {
            for j in 0..2 {
                let grad_at = |q: &[f64]| {
                    let g = f.eval_jet(&JetSpace::new(q, 1), &[]).unwrap();
                    let mut alpha = [0u8; 2];
                    alpha[j] = 1;
                    g.partial(&alpha).unwrap()
                };
                let central = |h: f64| {
                    let (mut a, mut b) = (p.to_vec(), p.to_vec());
                    a[i] += h;
                    b[i] -= h;
                    (grad_at(&a) - grad_at(&b)) / (2.0 * h)
                };
                let fd = (4.0 * central(0.5e-5) - central(1e-5)) / 3.0;
                let mut alpha = [0u8; 2];
                alpha[i] += 1;
                alpha[j] += 1;
                prop_assert!(close(jet.partial(&alpha).unwrap(), fd, 1e-6));
            }
        }
    }

    #[test]
    fn ring_axioms(a in prop::collection::vec(-2.0f64..2.0, 6), b in prop::collection::vec(-2.0f64..2.0, 6),
                   c in prop::collection::vec(-2.0f64..2.0, 6)) {
        let space = JetSpace::new(&[0.4, -0.2], 2);
        let lift = |v: &[f64]| -> Jet {
            let x = space.variable(0).unwrap();
            let y = space.variable(1).unwrap();
            space.constant(v[0]) + &x * v[1] + &y * v[2] + &(&x * &x) * v[3] + &(&x * &y) * v[4] + &(&y * &y) * v[5]
        };
        let (a, b, c) = (lift(&a), lift(&b), lift(&c));
        prop_assert!((&a * &b).max_abs_diff(&(&b * &a)) < 1e-12);
        prop_assert!((&(&a * &b) * &c).max_abs_diff(&(&a * &(&b * &c))) < 1e-11);
        prop_assert!((&a * &(&b + &c)).max_abs_diff(&(&(&a * &b) + &(&a * &c))) < 1e-11);
        prop_assert!((&(&a + &b) - &b).max_abs_diff(&a) < 1e-12);
        prop_assert!((&a * &space.constant(1.0)).max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn pythagorean_identity(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let f = parse("x*y + sin(x) - y^3");
        let j = f.eval_jet(&JetSpace::new(&[x, y], 4), &[]).unwrap();
        let s = j.sin();
        let c = j.cos();
        let one = &(&s * &s) + &(&c * &c);
        prop_assert!(one.max_abs_diff(&j.constant_like(1.0)) < 1e-9);
    }

    #[test]
    fn order_zero_is_plain_evaluation(x in 0.3f64..1.5, y in -1.5f64..1.5, k in 0usize..4) {
        let f = parse(FUNCTIONS[k]);
        let j = f.eval_jet(&JetSpace::new(&[x, y], 0), &[]).unwrap();
        prop_assert_eq!(j.order(), 0);
        let v = f.eval(&[x, y], &[]);
        prop_assert!((j.value() - v).abs() <= 1e-14 * v.abs().max(1.0));
    }

    #[test]
    fn print_then_parse_is_stable(text in expression()) {
        let e = parse(&text);
        let printed = e.to_string();
        let again = parse(&printed);
        prop_assert_eq!(&again, &e, "{} -> {}", text, printed);
        prop_assert_eq!(again.to_string(), printed);
    }
}

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (1u32..9).prop_map(|n| n.to_string()),
        (1u32..99).prop_map(|n| format!("{}.{}", n / 10, n % 10)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), -3i32..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner, prop::sample::select(vec!["sin", "cos", "tan", "sqrt"])).prop_map(|(a, f)| format!("{f}({a})")),
        ]
    })
}

#[test]
fn mixed_order_operations_truncate() {
    let space = JetSpace::new(&[0.5, 0.5], 3);
    let x = space.variable(0).unwrap();
    let low = x.truncate(1);
    assert_eq!((&x * &low).order(), 1);
    assert_eq!((&x + &low).order(), 1);
}

#[test]
fn division_by_vanishing_jet_is_an_error() {
    let f = parse("1/(x - y)");
    assert!(f.eval_jet(&JetSpace::new(&[0.7, 0.7], 2), &[]).is_err());
}
