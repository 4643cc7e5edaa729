use orlicz_core::analysis::{
    bloch_integral, caccioppoli_check, caccioppoli_constant, harnack_quotient, monotonicity_check,
    random_bump_tests, sphere_oscillation, variational_residual, CaccioppoliParams, ExtremumKind,
};
use orlicz_core::function_spaces::{ScalarField, Shape, TriangulatedDomain};
use orlicz_core::minimizer::{solve, DirichletProblem, SolverConfig};
use orlicz_core::phi::{Ball, GrowthEnvelope, PhiSpec, Region};
use orlicz_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn disk(radius: f64, h: f64) -> TriangulatedDomain {
    TriangulatedDomain::build(
        Shape::Disk {
            center: [0.0, 0.0],
            radius,
        },
        h,
    )
    .unwrap()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn harnack_examples() {
    let d = disk(1.5, 0.125);
    let c = ScalarField::constant(&d, 3.0);
    assert_eq!(harnack_quotient(&d, &c, [0.0, 0.0], 1.0, 0.0).unwrap(), 1.0);
    let u = ScalarField::from_fn(&d, |x| x[0] + 2.0);
    let q = harnack_quotient(&d, &u, [0.0, 0.0], 1.0, 1.0).unwrap();
    assert!((q - 2.0).abs() < 1e-12, "{q}");
}

#[test]
fn harnack_rejects_nonpositive_values() {
    let d = disk(1.0, 0.25);
    let u = ScalarField::from_fn(&d, |x| x[0]);
    match harnack_quotient(&d, &u, [0.0, 0.0], 0.5, 0.1) {
        Err(Error::NonPositive { vertex, value }) => {
            assert!(value <= 0.0);
            assert!(d.vertices()[vertex][0] <= -0.1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn harnack_scaling_by_powers_of_two_is_exact() {
    let d = disk(1.0, 0.125);
    let u = ScalarField::from_fn(&d, |x| (x[0] * 3.0).sin() + 1.5 * x[1] * x[1] + 1.1);
    let base = harnack_quotient(&d, &u, [0.1, 0.0], 0.5, 0.5).unwrap();
    for c in [0.25, 2.0, 1024.0] {
        assert_eq!(harnack_quotient(&d, &u.map(|v| v * c), [0.1, 0.0], 0.5, 0.5 * c).unwrap(), base);
    }
    let c = 3.7;
    let q = harnack_quotient(&d, &u.map(|v| v * c), [0.1, 0.0], 0.5, 0.5 * c).unwrap();
    assert!((q - base).abs() <= 4.0 * f64::EPSILON * base);
}

#[test]
fn bloch_examples() {
    let d = disk(1.5, 1.0 / 32.0);
    let ball = Ball::new([0.0, 0.0], 1.0);
    let c = ScalarField::constant(&d, 2.0);
    assert_eq!(bloch_integral(&d, &c, &ball, 2.0).unwrap(), 0.0);
    let w = ScalarField::from_fn(&d, |x| x[0].exp());
    let b = bloch_integral(&d, &w, &ball, 2.0).unwrap();
    assert!((b - std::f64::consts::PI).abs() < 1e-3, "{b}");
}

#[test]
fn bloch_matches_radial_quadrature() {
    let shape = Shape::Annulus {
        center: [0.0, 0.0],
        inner: 0.25,
        outer: 1.0,
    };
    let d = TriangulatedDomain::build(shape, 1.0 / 64.0).unwrap();
    let w = ScalarField::from_fn(&d, |x| x[0].hypot(x[1]).powf(2.0 / 3.0) + 0.5);
    let b = bloch_integral(&d, &w, &Ball::new([0.0, 0.0], 1.0), 2.0).unwrap();
    // 2π ∫ r (d/dr log w)² dr by composite Simpson
    let f = |r: f64| {
        let g = (2.0 / 3.0) * r.powf(-1.0 / 3.0) / (r.powf(2.0 / 3.0) + 0.5);
        r * g * g
    };
    let n = 20000;
    let (a, e) = (0.25, 1.0);
    let h = (e - a) / n as f64;
    let mut s = f(a) + f(e);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let oracle = 2.0 * std::f64::consts::PI * s * h / 3.0;
    assert!((b / oracle - 1.0).abs() < 0.01, "{b} vs {oracle}");
}

#[test]
fn bloch_ignores_scaling() {
    let d = disk(1.0, 0.0625);
    let ball = Ball::new([0.2, -0.1], 0.6);
    let w = ScalarField::from_fn(&d, |x| 1.2 + x[0] * x[1] + (2.0 * x[0]).cos());
    let base = bloch_integral(&d, &w, &ball, 2.0).unwrap();
    for c in [0.125, 8.0, 65536.0] {
        assert_eq!(bloch_integral(&d, &w.map(|v| v * c), &ball, 2.0).unwrap(), base);
    }
    let other = bloch_integral(&d, &w.map(|v| v * 0.3), &ball, 2.0).unwrap();
    assert!((other - base).abs() <= 1e-10 * base);
}

#[test]
fn bloch_rejects_nonpositive_weights() {
    let d = disk(1.0, 0.25);
    let w = ScalarField::from_fn(&d, |x| x[1]);
    assert!(matches!(
        bloch_integral(&d, &w, &Ball::new([0.0, 0.0], 0.5), 2.0),
        Err(Error::NonPositive { .. })
    ));
}

#[test]
fn oscillation_of_a_coordinate() {
    let d = disk(2.5, 1.0 / 16.0);
    let v = ScalarField::from_fn(&d, |x| x[0]);
    let o = sphere_oscillation(&d, &v, [0.0, 0.0], 1.0, 2.0).unwrap();
    assert!((o.osc_integral / (28.0 / 3.0) - 1.0).abs() < 0.01, "{}", o.osc_integral);
    assert!(o.monotone_step_holds());

    let c = ScalarField::constant(&d, 4.0);
    let o = sphere_oscillation(&d, &c, [0.0, 0.0], 1.0, 2.0).unwrap();
    assert_eq!((o.osc_integral, o.gradient_bound), (0.0, 0.0));
}

#[test]
fn oscillation_needs_enough_nodes() {
    let d = disk(2.5, 0.5);
    let v = ScalarField::from_fn(&d, |x| x[0]);
    assert!(matches!(
        sphere_oscillation(&d, &v, [0.0, 0.0], 0.5, 2.0),
        Err(Error::RefinementRequired(_))
    ));
}

#[test]
fn caccioppoli_constant_spot_value() {
    let k = caccioppoli_constant(1.0, 1.0, 4.0, 4.0, 4.0, 4.0, 1.0, 0.5);
    let e = std::f64::consts::E;
    let oracle = 8.0 * 4.0 * 4.0 * (e - 1.0) * 2f64.ln() / (4.0 * 3.0 * 0.5) + 1.0;
    assert!((k - oracle).abs() < 1e-12);
    assert!((k - 26.41).abs() < 0.005, "{k}");
}

#[test]
fn caccioppoli_with_constant_field() {
    let d = disk(1.0, 0.0625);
    let phi = PhiSpec::power(4.0);
    let env = GrowthEnvelope::power_law(4.0, Region::Shape(Shape::unit_disk()));
    let ball = Ball::new([0.0, 0.0], 0.5);
    let params = CaccioppoliParams::standard(&phi, &env, &d, ball, 0.5, &grid(1e-6, 1e8, 400)).unwrap();
    params.validate(&d).unwrap();
    let u = ScalarField::constant(&d, 1.0);
    let out = caccioppoli_check(&phi, &d, &u, &params).unwrap();
    assert_eq!(out.lhs, 0.0);
    assert!(out.rhs > 0.0);
    assert!(out.holds(0.0));
}

#[test]
fn caccioppoli_rejects_bad_cutoff() {
    let d = disk(1.0, 0.0625);
    let phi = PhiSpec::power(4.0);
    let env = GrowthEnvelope::power_law(4.0, Region::Shape(Shape::unit_disk()));
    let mut params =
        CaccioppoliParams::standard(&phi, &env, &d, Ball::new([0.0, 0.0], 0.5), 0.5, &grid(1e-6, 1e8, 400)).unwrap();
    params.cutoff = ScalarField::constant(&d, 1.0);
    assert!(matches!(params.validate(&d), Err(Error::InvalidCutoff(_))));
}

#[test]
fn monotonicity_examples() {
    let d = disk(1.0, 0.0625);
    let subs = [
        Shape::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        },
        Shape::Square {
            origin: [-0.3, -0.2],
            side: 0.6,
        },
    ];
    let u = ScalarField::from_fn(&d, |x| x[0]);
    assert!(monotonicity_check(&d, &u, &subs).unwrap().passed);

    let u = ScalarField::from_fn(&d, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    let out = monotonicity_check(&d, &u, &subs).unwrap();
    assert!(!out.passed);
    let w = out.witness.unwrap();
    assert_eq!(w.subdomain, 0);
    assert_eq!(w.kind, ExtremumKind::Max);
    assert_eq!(d.vertices()[w.vertex], [0.0, 0.0]);
}

#[test]
fn monotonicity_needs_compact_subdomains() {
    let d = disk(1.0, 0.125);
    let u = ScalarField::from_fn(&d, |x| x[0]);
    let sub = Shape::Disk {
        center: [0.8, 0.0],
        radius: 0.5,
    };
    assert!(matches!(monotonicity_check(&d, &u, &[sub]), Err(Error::InvalidParameter(_))));
}

#[test]
fn residual_of_affine_minimizer_vanishes() {
    let d = disk(1.0, 0.0625);
    let phi = PhiSpec::power(3.0);
    let u = ScalarField::from_fn(&d, |x| 0.7 * x[0] - 0.2 * x[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tests = random_bump_tests(&d, 20, &mut rng);
    assert_eq!(tests.len(), 20);
    let out = variational_residual(&phi, &d, &u, &tests).unwrap();
    assert!(out.min_relative.abs() < 1e-12, "{out:?}");
}

#[test]
fn residual_detects_non_minimizers() {
    let shape = Shape::unit_disk();
    let d = TriangulatedDomain::build(shape, 1.0 / 16.0).unwrap();
    let f = ScalarField::from_fn(&d, |x| x[0] * x[0] + 0.5 * x[1]);
    let pr = DirichletProblem::new(d.clone(), PhiSpec::power(3.0), f.clone(), GrowthEnvelope::power_law(3.0, Region::Shape(shape)))
        .unwrap();
    let (u, report) = solve(&pr, &SolverConfig::default()).unwrap();
    assert!(report.converged());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tests = random_bump_tests(&d, 30, &mut rng);
    tests.push(u.combine(1.0, &f, -1.0));
    let at_min = variational_residual(&pr.phi, &d, &u, &tests).unwrap();
    assert!(at_min.nonnegative(1e-8), "{at_min:?}");
    let at_data = variational_residual(&pr.phi, &d, &f, &tests).unwrap();
    assert!(at_data.min_residual < 0.0);
}

#[test]
fn residual_rejects_tests_touching_the_boundary() {
    let d = disk(1.0, 0.25);
    let u = ScalarField::from_fn(&d, |x| x[0]);
    let t = ScalarField::constant(&d, 1.0);
    assert!(matches!(
        variational_residual(&PhiSpec::power(2.0), &d, &u, &[t]),
        Err(Error::TestNotCompact { .. })
    ));
}
