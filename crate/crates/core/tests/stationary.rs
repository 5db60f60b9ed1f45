mod common;

use common::shooting::shoot;
use fowler_transient::stationary::{fn_iv_curve, fn_solve, probability_current, step_solve, transmission};
use fowler_transient::units::{convert, derive, PhysicalParams, Unit};

fn reference(field: f64) -> PhysicalParams {
    PhysicalParams::from_lab(9.0, 4.5, field).unwrap()
}

#[test]
fn transmission_matches_shooting_reference() {
    for field in [4.0, 8.0] {
        let params = reference(field);
        let (d_ref, r_ref) = shoot(params.barrier, params.field, params.k, 500.0);
        let sol = fn_solve(&params).unwrap();
        assert!((sol.d - d_ref).abs() < 1e-6 * d_ref, "E={field}: {} vs {d_ref}", sol.d);
        assert!((sol.r_e - r_ref).norm() < 1e-6);
    }
}

#[test]
fn frozen_transmission_at_four_volts_per_nm() {
    let d = transmission(&reference(4.0)).unwrap();
    assert!((d - FROZEN_D4).abs() < 1e-6 * FROZEN_D4, "{d:e}");
}

// Dormand–Prince shooting from 500 bohr at rtol 1e-12 (stable to 3e-10 over 400-700 bohr).
const FROZEN_D4: f64 = 1.670_005_690_59e-7;

#[test]
fn current_is_uniform_and_equals_flux() {
    let params = reference(4.0);
    let sol = fn_solve(&params).unwrap();
    let x0 = derive(&params).x0.unwrap();
    let target = 2.0 * params.k * sol.d;
    for i in 0..20 {
        let x = -5.0 * x0 + 10.0 * x0 * (i as f64 + 0.5) / 20.0;
        let (v, dv) = sol.eval(x);
        let j = probability_current(v, dv);
        assert!((j - target).abs() < 1e-8 * target, "x={x}: {j:e} vs {target:e}");
    }
}

#[test]
fn transmission_tends_to_one_monotonically() {
    let mut last = 0.0;
    for field in [2.0, 4.0, 6.0, 8.0, 10.0, 20.0, 40.0, 80.0] {
        let d = transmission(&reference(field)).unwrap();
        assert!(d > last && d < 1.0, "E={field}: {d}");
        last = d;
    }
    assert!(last > 0.5);
}

#[test]
fn fn_trend_is_linear_in_inverse_field() {
    let fields_vnm = [2.0, 4.0, 6.0, 8.0, 10.0];
    let params = reference(4.0);
    let fields: Vec<f64> = fields_vnm
        .iter()
        .map(|f| convert(*f, Unit::VoltPerNm, Unit::AuField).unwrap())
        .collect();
    let curve = fn_iv_curve(params.barrier, params.k_fermi, &fields).unwrap();
    let xs: Vec<f64> = curve.iter().map(|p| 1.0 / p.field).collect();
    let ys: Vec<f64> = curve.iter().map(|p| (p.current / p.field.powi(2)).ln()).collect();
    assert!(curve.iter().all(|p| p.current > 0.0 && p.nodes >= 64));
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.99, "R^2 = {r2}");
}

#[test]
fn step_current_vanishes() {
    let s = step_solve(&reference(0.0)).unwrap();
    for x in [-20.0, -1.0, 0.0, 2.0] {
        let (v, dv) = s.eval(x);
        assert!(probability_current(v, dv).abs() < 1e-14);
    }
}
