use std::f64::consts::PI;

use fowler_transient::laplace::{sqrt_branch, Channel, InitialCondition, LaplaceBatch, LaplaceEvaluator, Side};
use fowler_transient::quadrature::QuadOptions;
use fowler_transient::stationary::step_solve;
use fowler_transient::units::{derive, PhysicalParams};
use fowler_transient::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params(field_v_nm: f64) -> PhysicalParams {
    PhysicalParams::from_lab(9.0, 4.5, field_v_nm).unwrap()
}

fn evaluator(init: InitialCondition) -> LaplaceEvaluator {
    LaplaceEvaluator::new(params(4.0), init, QuadOptions::default()).unwrap()
}

/// Five-point second derivative with step `h`; truncation `h^4 f^(6) / 90`.
fn second_derivative_step(f: impl Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

fn second_derivative(f: impl Fn(f64) -> Complex64, x: f64) -> Complex64 {
    second_derivative_step(f, x, H)
}

fn potential(p: &PhysicalParams, x: f64) -> f64 {
    if x > 0.0 {
        p.barrier - p.field * x
    } else {
        0.0
    }
}

/// `|(-1/2 d^2 + V - ip) f + i psi0| / |f|`. Values carry rounding noise of
/// order 1e-13 relative (the Airy exponent is ~50 in parts of the box), which
/// the h = 1e-3 stencil amplifies to a few 1e-8.
fn ode_residual(ev: &LaplaceEvaluator, x: f64, p: Complex64) -> f64 {
    let f = |y: f64| ev.psi_hat(y, p).unwrap().0;
    let d2 = second_derivative(f, x);
    let v = f(x);
    let lhs = -0.5 * d2 + (potential(&ev.params, x) - Complex64::i() * p) * v;
    let rhs = -Complex64::i() * ev.initial_value(x).0;
    (lhs - rhs).norm() / v.norm()
}

/// Sample `p` away from the cut, the principal pole and the resonances
/// (all of which have `Re p < -0.05` here).
fn sample_p(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let p = c(rng.gen_range(-0.04..0.5), rng.gen_range(-0.5..0.5));
        let principal = c(0.0, -0.5 * params(4.0).k * params(4.0).k);
        if (p - principal).norm() > 1e-2 && !(p.re < 0.0 && p.im.abs() < 1e-2) {
            return p;
        }
    }
}

#[test]
fn transform_satisfies_the_laplace_equation() {
    let ev = evaluator(InitialCondition::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = loop {
            let x = rng.gen_range(-30.0..45.0);
            if f64::abs(x) > 0.01 {
                break x;
            }
        };
        let p = sample_p(&mut rng);
        let r = ode_residual(&ev, x, p);
        assert!(r < 1e-7, "x = {x}, p = {p}: residual {r:e}");
        worst = worst.max(r);
    }
    eprintln!("worst relative residual {worst:e}");
}

#[test]
fn incident_only_transform_satisfies_its_equation() {
    let ev = evaluator(InitialCondition::incident_only());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..15 {
        let x = rng.gen_range(0.05..40.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let p = sample_p(&mut rng);
        let r = ode_residual(&ev, x, p);
        assert!(r < 1e-7, "x = {x}, p = {p}: residual {r:e}");
    }
}

fn jump_at_origin(ev: &LaplaceEvaluator, p: Complex64) -> (f64, f64) {
    let left = ev.psi_hat(-f64::MIN_POSITIVE, p).unwrap();
    let right = ev.psi_hat(0.0, p).unwrap();
    (
        (left.0 - right.0).norm() / right.0.norm().max(left.0.norm()),
        (left.1 - right.1).norm() / right.1.norm().max(left.1.norm()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transform_is_continuous_at_the_surface(re in -0.04f64..2.0, im in -2.0f64..2.0) {
        let p = c(re, im);
        prop_assume!(!(re < 0.0 && im.abs() < 1e-3));
        prop_assume!((p - c(0.0, -0.5 * params(4.0).k.powi(2))).norm() > 1e-3);
        let ev = evaluator(InitialCondition::default());
        let (dv, dd) = jump_at_origin(&ev, p);
        prop_assert!(dv < 1e-10 && dd < 1e-10, "p = {}: {:e} {:e}", p, dv, dd);
    }

    #[test]
    fn incident_only_transform_is_continuous(re in 0.001f64..1.0, im in -1.0f64..1.0) {
        let p = c(re, im);
        let ev = evaluator(InitialCondition::incident_only());
        let (dv, dd) = jump_at_origin(&ev, p);
        prop_assert!(dv < 1e-10 && dd < 1e-10);
    }
}

#[test]
fn large_p_recovers_the_initial_condition() {
    let ev = evaluator(InitialCondition::default());
    // x0 itself is avoided: H psi_0 vanishes there, so the approach is
    // governed by the p^-3 term and hits the rounding floor early.
    for x in [-20.0, -1.0, 0.0, 1.0, 5.0] {
        let psi0 = ev.initial_value(x).0;
        for theta in [-PI / 3.0, 0.0, PI / 3.0] {
            let mut last = f64::INFINITY;
            for r in [10.0, 1e2, 1e3, 1e4] {
                let p = Complex64::from_polar(r, theta);
                let gap = (p * ev.psi_hat(x, p).unwrap().0 - psi0).norm();
                assert!(gap < last, "x = {x}, theta = {theta}, R = {r}: {gap:e} >= {last:e}");
                last = gap;
            }
            assert!(last < 1e-3 * psi0.norm().max(1e-3), "x = {x}: {last:e}");
        }
    }
}

#[test]
fn large_p_limit_left_of_surface() {
    let ev = evaluator(InitialCondition::default());
    let step = step_solve(&ev.params).unwrap();
    let k = ev.params.k;
    let want = (-Complex64::i() * k).exp() + step.r0 * (Complex64::i() * k).exp();
    let p = c(1e4, 0.0);
    let got = p * ev.psi_hat(-1.0, p).unwrap().0;
    assert!((got - want).norm() < 1e-3, "{got} vs {want}");
}

/// The displayed closed forms for C1 and C2, in terms of `L = phi'/phi`.
fn closed_form_coefficients(ev: &LaplaceEvaluator, p: Complex64) -> (Complex64, Complex64) {
    let params = ev.params;
    let region = ev.batch().region();
    let k = params.k;
    let kappa = params.kappa();
    let t0 = step_solve(&params).unwrap().t0;
    let w = sqrt_branch(p).unwrap();
    let q = k * k - 2.0 * Complex64::i() * p;
    let phi = region.phi(0.0, p);
    let l = phi.log_derivative();
    let eta = region.eta(0.0, p);
    let tail = ev.tail_integral(p).unwrap();
    let lead = -2.0 * Complex64::i() * t0 / (w - l);
    let c1 = lead * ((kappa + l) / q + tail.div(phi.value()).value());
    let green = 2.0 * Complex64::i() * PI / (2.0 * params.field).cbrt();
    let cross = eta.value().scale(w).add(eta.derivative().scale(c(-1.0, 0.0))).mul(tail).value();
    let c2_normalized = lead * ((kappa + w) / q - green * cross);
    (c1, c2_normalized)
}

#[test]
fn matching_agrees_with_closed_forms() {
    let ev = evaluator(InitialCondition::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..25 {
        let p = c(rng.gen_range(0.001..1.0), rng.gen_range(-1.0..1.0));
        let m = ev.matching(p, Side::Principal).unwrap();
        let (c1, c2n) = closed_form_coefficients(&ev, p);
        assert!((m.c1 - c1).norm() < 1e-9 * c1.norm(), "p = {p}: C1 {} vs {c1}", m.c1);
        assert!(
            (m.c2_normalized - c2n).norm() < 1e-9 * c2n.norm(),
            "p = {p}: C2 phi(0) {} vs {c2n}",
            m.c2_normalized
        );
        let phi0 = ev.batch().region().phi(0.0, p).value();
        assert!((m.c2.mul(phi0).value() - m.c2_normalized).norm() < 1e-12 * c2n.norm());
    }
}

#[test]
fn matching_coefficient_has_a_simple_pole_at_the_fermi_energy() {
    let ev = evaluator(InitialCondition::default());
    let pole = c(0.0, -0.5 * ev.params.k.powi(2));
    let mut scaled = Vec::new();
    for d in [1e-3, 1e-4, 1e-5, 1e-6] {
        let m = ev.matching(pole + c(d, 0.0), Side::Principal).unwrap();
        scaled.push(m.c2_normalized.norm() * d);
    }
    for pair in scaled.windows(2) {
        assert!((pair[1] / pair[0] - 1.0).abs() < 2e-2, "{scaled:?}");
    }
}

#[test]
fn incident_only_keeps_the_principal_pole() {
    let ev = evaluator(InitialCondition::incident_only());
    let pole = c(0.0, -0.5 * ev.params.k.powi(2));
    let x = derive(&ev.params).x0.unwrap();
    let a = ev.psi_hat(x, pole + c(1e-5, 0.0)).unwrap().0.norm() * 1e-5;
    let b = ev.psi_hat(x, pole + c(1e-6, 0.0)).unwrap().0.norm() * 1e-6;
    assert!(a > 0.0 && (b / a - 1.0).abs() < 1e-3, "{a:e} {b:e}");
}

#[test]
fn near_pole_matching_is_refused() {
    let ev = evaluator(InitialCondition::default());
    let pole = c(0.0, -0.5 * ev.params.k.powi(2));
    assert!(matches!(ev.psi_hat(-1.0, pole), Err(Error::NearPole { .. })));
}

#[test]
fn green_response_solves_the_driven_equation() {
    let ev = evaluator(InitialCondition::default());
    let kappa = ev.params.kappa();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let x = rng.gen_range(0.05..40.0);
        let p = sample_p(&mut rng);
        let f = |y: f64| ev.transmitted_response(y, p).unwrap().0;
        let d2 = second_derivative(f, x);
        let v = f(x);
        let lhs = -0.5 * d2 + (potential(&ev.params, x) - Complex64::i() * p) * v;
        let rhs = -Complex64::i() * (-kappa * x).exp();
        let r = (lhs - rhs).norm() / v.norm();
        assert!(r < 1e-7, "x = {x}, p = {p}: {r:e}");
    }
}

#[test]
fn free_responses_solve_the_free_equation() {
    let ev = evaluator(InitialCondition::default());
    let k = ev.params.k;
    let p = c(0.2, 0.3);
    for x in [-0.5, -3.0, -17.0] {
        let fi = |y: f64| ev.f_terms(y, p).unwrap().0;
        let fr = |y: f64| ev.f_terms(y, p).unwrap().1;
        // A wider step keeps stencil rounding below the threshold; the
        // truncation error is ~h^4 k^6 / 90 ~ 1e-11.
        let h = 1e-2;
        let ri = -0.5 * second_derivative_step(fi, x, h) - Complex64::i() * p * fi(x)
            + Complex64::i() * (Complex64::i() * k * x).exp();
        let rr = -0.5 * second_derivative_step(fr, x, h) - Complex64::i() * p * fr(x)
            + Complex64::i() * (-Complex64::i() * k * x).exp();
        assert!(ri.norm() < 1e-9 && rr.norm() < 1e-9, "{ri:e} {rr:e}");
    }
}

#[test]
fn green_response_decays_far_out() {
    let ev = evaluator(InitialCondition::default());
    let p = c(0.3, 0.1);
    let mut last = f64::INFINITY;
    for x in [50.0, 100.0, 200.0, 400.0] {
        let v = ev.transmitted_response(x, p).unwrap().0.norm();
        assert!(v < last);
        last = v;
    }
    assert!(last < 1e-6);
}

/// Composite Gauss-Legendre (10 nodes per panel, hard-coded) on `[0, y]`,
/// with `y` doubled until the result is stable.
fn tail_oracle(ev: &LaplaceEvaluator, p: Complex64) -> Complex64 {
    const NODES: [f64; 5] = [
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    const WEIGHTS: [f64; 5] = [
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_4,
        0.219_086_362_515_982_0,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    let region = ev.batch().region();
    let kappa = ev.params.kappa();
    let f = |y: f64| region.phi(y, p).value().value() * (-kappa * y).exp();
    let integrate = |upper: f64| {
        let panels = (upper / 0.05).ceil() as usize;
        let h = upper / panels as f64;
        let mut sum = c(0.0, 0.0);
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * h;
            for (n, w) in NODES.iter().zip(WEIGHTS) {
                sum += w * 0.5 * h * (f(mid - 0.5 * h * n) + f(mid + 0.5 * h * n));
            }
        }
        sum
    };
    let mut upper = 10.0;
    let mut last = integrate(upper);
    loop {
        upper *= 2.0;
        let next = integrate(upper);
        if (next - last).norm() <= 1e-14 * next.norm() {
            return next;
        }
        last = next;
    }
}

#[test]
fn tail_integral_matches_fixed_rule_oracle() {
    let ev = evaluator(InitialCondition::default());
    for p in [c(0.1, 0.0), c(0.02, 0.4), c(0.5, -0.3), c(-0.03, 0.2)] {
        let want = tail_oracle(&ev, p);
        let got = ev.tail_integral(p).unwrap().value();
        assert!((got - want).norm() < 1e-8 * want.norm(), "p = {p}: {got} vs {want}");
    }
}

#[test]
fn tail_integral_tends_to_endpoint_value_for_large_kappa() {
    let params = params(4.0);
    let p = c(0.1, 0.05);
    let channels: Vec<Channel> = [10.0, 100.0, 1000.0, 10000.0]
        .iter()
        .map(|&kappa| Channel {
            kappa,
            ..Channel::new(&params, &InitialCondition::default()).unwrap()
        })
        .collect();
    let batch = LaplaceBatch::new(params.barrier, params.field, channels.clone(), QuadOptions::default()).unwrap();
    let phi0 = batch.region().phi(0.0, p).value().value();
    let tails = batch.tail_integral(p).unwrap();
    let mut last = f64::INFINITY;
    for (ch, tail) in channels.iter().zip(tails) {
        let dev = (tail.value() * ch.kappa / phi0 - 1.0).norm();
        assert!(dev < last, "kappa = {}: {dev:e}", ch.kappa);
        last = dev;
    }
    assert!(last < 1e-3);
}

#[test]
fn cut_jump_equals_difference_of_the_two_sides() {
    let ev = evaluator(InitialCondition::default());
    let x0 = derive(&ev.params).x0.unwrap();
    let xs = [-x0, -1.0, 0.0, 2.0, x0];
    // Further out both one-sided values grow like the tail integral and the
    // difference cancels to rounding, which is why the jump is computed in
    // closed form.
    for s in [0.01, 0.1, 0.3] {
        let jump = ev.batch().cut_jump(-s, &xs).unwrap();
        let lower = ev.batch().eval(c(-s, 0.0), Side::Lower, &xs).unwrap();
        let upper = ev.batch().eval(c(-s, 0.0), Side::Upper, &xs).unwrap();
        for i in 0..xs.len() {
            let diff = lower[0][i].0 - upper[0][i].0;
            let scale = lower[0][i].0.norm() + upper[0][i].0.norm();
            assert!((jump[0][i].0 - diff).norm() < 1e-9 * scale, "s = {s}, x = {}", xs[i]);
            let diff_d = lower[0][i].1 - upper[0][i].1;
            let scale_d = lower[0][i].1.norm() + upper[0][i].1.norm();
            assert!((jump[0][i].1 - diff_d).norm() < 1e-9 * scale_d);
        }
    }
}

#[test]
fn sides_are_limits_of_nearby_points() {
    let ev = evaluator(InitialCondition::default());
    let p = -0.2;
    let upper = ev.psi_hat_side(3.0, c(p, 0.0), Side::Upper).unwrap().0;
    let lower = ev.psi_hat_side(3.0, c(p, 0.0), Side::Lower).unwrap().0;
    let above = ev.psi_hat(3.0, c(p, 1e-7)).unwrap().0;
    let below = ev.psi_hat(3.0, c(p, -1e-7)).unwrap().0;
    assert!((above - upper).norm() < 1e-5 * upper.norm());
    assert!((below - lower).norm() < 1e-5 * lower.norm());
    assert!((upper - lower).norm() > 1e-3 * upper.norm());
}

#[test]
fn principal_evaluation_refuses_the_cut() {
    let ev = evaluator(InitialCondition::default());
    assert!(matches!(ev.psi_hat(1.0, c(-0.3, 0.0)), Err(Error::OnBranchCut { .. })));
}
