mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use common::strategies::{bindings, check_round_trip, expr, fuzz_input};
use s1avg::averaging::{average, QuadratureRule};
use s1avg::bounds::{gronwall_bound, sample_sup, surface_length_bound, Domain, DomainSampler, GronwallParams};
use s1avg::field::{ScalarField, VectorField};
use s1avg::flows::{flow_map, FlowSpec};
use s1avg::geometry::{ModelKind, Point};
use s1avg::harness::{format_float, parse_table, write_table};
use s1avg::ode::SolverOptions;
use s1avg::vfdsl::parse_expr;

const K1: ModelKind = ModelKind::Trivial { k: 1 };
const K2: ModelKind = ModelKind::Trivial { k: 2 };

fn trivial_point() -> impl Strategy<Value = Vec<f64>> {
    (0.0..2.0 * PI, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(p, x, y)| vec![p, x, y])
}

fn hopf_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
        .prop_filter("away from 0", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|v| ModelKind::Hopf.normalized(&v))
}

fn tangent(kind: ModelKind, p: &[f64], v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    kind.tangent_project(p, &mut v);
    v
}

fn point_and_vector() -> impl Strategy<Value = (ModelKind, Vec<f64>, Vec<f64>)> {
    let v3 = prop::collection::vec(-2.0f64..2.0, 3);
    let v4 = prop::collection::vec(-2.0f64..2.0, 4);
    prop_oneof![
        (trivial_point(), v3).prop_map(|(p, v)| (K2, p, v)),
        (hopf_point(), v4).prop_map(|(p, v)| {
            let v = tangent(ModelKind::Hopf, &p, &v);
            (ModelKind::Hopf, p, v)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn gronwall_is_monotone(
        d1 in 0.01f64..3.0, d2 in 0.0f64..3.0, d3 in 0.0f64..3.0,
        t0 in -1.0f64..1.0, dt in 0.0f64..3.0, h in 0.0f64..1.0,
    ) {
        let b = |d2: f64, d3: f64, t: f64| {
            gronwall_bound(&GronwallParams { delta1: d1, delta2: d2, delta3: d3, t0 }, t).unwrap()
        };
        let base = b(d2, d3, t0 + dt);
        prop_assert!(b(d2, d3, t0 + dt + h) >= base);
        prop_assert!(b(d2 + h, d3, t0 + dt) >= base);
        prop_assert!(b(d2, d3 + h, t0 + dt) >= base);
        prop_assert!((b(d2, d3, t0) - d3).abs() <= 1e-12 * (1.0 + d3));
        let limit = d3 * (d1 * dt).exp();
        prop_assert!((b(1e-12, d3, t0 + dt) - limit).abs() <= 1e-9 * (1.0 + limit));
    }

    #[test]
    fn surface_bound_starts_at_initial_length(c1 in 0.01f64..3.0, c2 in 0.0f64..3.0, l in 0.0f64..3.0, t in 0.0f64..3.0) {
        prop_assert!((surface_length_bound(c1, c2, l, 0.0).unwrap() - l).abs() <= 1e-12 * (1.0 + l));
        prop_assert!(surface_length_bound(c1, c2, l, t).unwrap() >= l);
    }

    #[test]
    fn projection_is_fiber_invariant(p in trivial_point(), q in hopf_point(), theta in -10.0f64..10.0) {
        for (kind, p) in [(K2, p), (ModelKind::Hopf, q)] {
            let r = kind.s1_flow(&p, theta);
            let d = kind.orbit_distance(&kind.project(&p), &kind.project(&r)).unwrap();
            prop_assert!(d <= 1e-10);
            let back = kind.s1_flow(&r, 2.0 * PI - theta);
            prop_assert!(kind.manifold_distance(&p, &back).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn splitting_reassembles((kind, p, v) in point_and_vector()) {
        let (h, w) = kind.split(&p, &v);
        let u = kind.upsilon(&p);
        for i in 0..v.len() {
            prop_assert!((h[i] + w[i] - v[i]).abs() <= 1e-12 * (1.0 + v[i].abs()));
        }
        prop_assert!(kind.inner(&p, &h, &u).abs() <= 1e-12);
        let dh = kind.project_vector(&p, &h);
        let n = dh.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n - kind.norm_at(&p, &h)).abs() <= 1e-8);
    }

    #[test]
    fn orbit_distance_is_dominated(p in hopf_point(), q in hopf_point(), a in trivial_point(), b in trivial_point()) {
        for (kind, p, q) in [(ModelKind::Hopf, p, q), (K2, a, b)] {
            let dm = kind.manifold_distance(&p, &q).unwrap();
            let dz = kind.orbit_distance(&kind.project(&p), &kind.project(&q)).unwrap();
            prop_assert!(dz <= dm + 1e-12);
        }
    }

    #[test]
    fn triangle_inequality(p in hopf_point(), q in hopf_point(), r in hopf_point()) {
        let d = |a: &[f64], b: &[f64]| ModelKind::Hopf.manifold_distance(a, b).unwrap();
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }

    #[test]
    fn mean_is_shift_invariant(p in trivial_point(), theta in 0.0f64..(2.0 * PI)) {
        let f = ScalarField::new(K2, |m| (m[0].cos()).exp() * m[1] + (2.0 * m[0] + m[2]).sin());
        let quad = QuadratureRule::new(64).unwrap();
        let avg = average(&quad, &f);
        let (u, v) = (avg.eval(&p), avg.eval(&K2.s1_flow(&p, theta)));
        prop_assert!((u - v).abs() <= 1e-10, "{u} {v}");
    }

    #[test]
    fn floats_survive_csv(xs in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 1..6)) {
        for x in &xs {
            prop_assert_eq!(format_float(*x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        let mut buf = Vec::new();
        let header: Vec<String> = (0..xs.len()).map(|i| format!("c{i}")).collect();
        write_table(&mut buf, &header.join(","), std::slice::from_ref(&xs), Some(1.5)).unwrap();
        let t = parse_table(&String::from_utf8(buf).unwrap()).unwrap();
        prop_assert_eq!(&t.rows[0], &xs);
        prop_assert_eq!(t.slope, Some(1.5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, ..ProptestConfig::default() })]

    #[test]
    fn parser_never_panics(src in fuzz_input()) {
        let _ = parse_expr(&src);
    }

    #[test]
    fn printer_round_trip(e in expr()) {
        check_round_trip(&e, &bindings(100)).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn flow_composes(p in trivial_point(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let p = Point::new(K1, p[..2].to_vec()).unwrap();
        let x = VectorField::new(K1, |m| {
            let w = 1.0 + 0.5 * m[1].cos();
            vec![w + 0.3 * m[0].cos(), 0.3 * (m[0].sin() + m[1])]
        });
        let spec = FlowSpec::new(&x, 2.0).with_options(SolverOptions::with_tol(1e-11));
        let direct = flow_map(&spec, &p, s + t).unwrap();
        let mid = flow_map(&spec, &p, s).unwrap();
        let composed = flow_map(&spec, &mid, t).unwrap();
        prop_assert!(K1.manifold_distance(&direct.coords, &composed.coords).unwrap() <= 1e-7);
    }

    #[test]
    fn sup_grows_under_refinement(
        amp in prop::collection::vec(-2.0f64..2.0, 3),
        freq in prop::collection::vec(0.2f64..3.0, 3),
        lo in -2.0f64..0.0, width in 0.5f64..3.0, seed in 0u64..1000,
    ) {
        let f = move |p: &Point| {
            let c = &p.coords;
            amp[0] * (freq[0] * c[0]).sin() + amp[1] * (freq[1] * c[1]).cos() + amp[2] * (freq[2] * c[2] + c[0]).sin()
        };
        let domain = Domain::Box { lower: vec![lo, lo], upper: vec![lo + width, lo + width] };
        let mut sampler = DomainSampler::new(K2, domain, 3, 4, 3, seed);
        let mut prev = sample_sup(&sampler, &f).value;
        for _ in 0..2 {
            sampler = sampler.refine();
            let next = sample_sup(&sampler, &f).value;
            prop_assert!(next >= prev);
            prev = next;
        }
    }
}
