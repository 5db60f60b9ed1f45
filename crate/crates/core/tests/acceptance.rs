//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::airy_oracle::airy_reference;
use fowler_transient::airy::{airy, airy_scaled};
use fowler_transient::inversion::asymptotics::asymptotics;
use fowler_transient::inversion::contour::{fn_states, principal_residue, CutOptions, DeformedContour};
use fowler_transient::inversion::fft::TimeGrid;
use fowler_transient::inversion::poles::find_poles_default;
use fowler_transient::laplace::{Channel, InitialCondition, LaplaceBatch, LaplaceEvaluator};
use fowler_transient::observables::{density_current, evolve_batch, integrated_current, EvolutionOptions, Method, MIN_K_NODES};
use fowler_transient::quadrature::QuadOptions;
use fowler_transient::stationary::{fn_iv_curve, fn_solve, fowler_nordheim_fit, probability_current};
use fowler_transient::units::{derive, PhysicalParams, AU_TIME_FS, BOHR_NM};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params(field: f64) -> PhysicalParams {
    PhysicalParams::from_lab(9.0, 4.5, field).unwrap()
}

fn x0(p: &PhysicalParams) -> f64 {
    derive(p).x0.unwrap()
}

fn fs(t: f64) -> f64 {
    t / AU_TIME_FS
}

fn batch(p: &PhysicalParams, init: InitialCondition) -> LaplaceBatch {
    let ch = Channel::new(p, &init).unwrap();
    LaplaceBatch::new(p.barrier, p.field, vec![ch], QuadOptions::default()).unwrap()
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn airy_correctness() -> Check {
    let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let z = c(-10.0 + 20.0 * i as f64 / 19.0, -10.0 + 20.0 * j as f64 / 19.0);
            let a = airy_scaled(z).value();
            let b = airy_scaled(w * z).value().scale(w);
            let d = airy_scaled(w * w * z).value().scale(w * w);
            let scale = a.ln_abs().max(b.ln_abs()).max(d.ln_abs());
            worst = worst.max((a.add(b).add(d).ln_abs() - scale).exp());
        }
    }
    let (ai, aip) = airy_reference(c(0.0, 0.0));
    let ours = airy(c(0.0, 0.0)).map_err(|e| e.to_string())?;
    let origin = ((ours.ai - ai).norm() / ai.norm()).max((ours.ai_prime - aip).norm() / aip.norm());
    verdict(
        worst < 1e-10 && origin < 1e-12,
        format!("connection residual max {worst:.1e} on 400 points; origin error {origin:.1e}"),
    )
}

fn potential(p: &PhysicalParams, x: f64) -> f64 {
    if x > 0.0 {
        p.barrier - p.field * x
    } else {
        0.0
    }
}

fn laplace_correctness() -> Check {
    let p4 = params(4.0);
    let ev = LaplaceEvaluator::new(p4, InitialCondition::default(), QuadOptions::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let principal = c(0.0, -0.5 * p4.k * p4.k);
    let h = 1e-3;
    let mut worst_ode: f64 = 0.0;
    for _ in 0..50 {
        let x = loop {
            let x: f64 = rng.gen_range(-30.0..45.0);
            if x.abs() > 0.01 {
                break x;
            }
        };
        let p = loop {
            let p = c(rng.gen_range(-0.04..0.5), rng.gen_range(-0.5..0.5));
            if (p - principal).norm() > 1e-2 && !(p.re < 0.0 && p.im.abs() < 1e-2) {
                break p;
            }
        };
        let f = |y: f64| ev.psi_hat(y, p).unwrap().0;
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        let v = f(x);
        let lhs = -0.5 * d2 + (potential(&p4, x) - Complex64::i() * p) * v;
        let rhs = -Complex64::i() * ev.initial_value(x).0;
        worst_ode = worst_ode.max((lhs - rhs).norm() / v.norm());
    }
    let mut worst_jump: f64 = 0.0;
    for _ in 0..100 {
        let p = loop {
            let p = c(rng.gen_range(-0.04..2.0), rng.gen_range(-2.0..2.0));
            if (p - principal).norm() > 1e-3 && !(p.re < 0.0 && p.im.abs() < 1e-3) {
                break p;
            }
        };
        let left = ev.psi_hat(-f64::MIN_POSITIVE, p).unwrap();
        let right = ev.psi_hat(0.0, p).unwrap();
        let dv = (left.0 - right.0).norm() / right.0.norm().max(left.0.norm());
        let dd = (left.1 - right.1).norm() / right.1.norm().max(left.1.norm());
        worst_jump = worst_jump.max(dv).max(dd);
    }
    verdict(
        worst_ode < 1e-7 && worst_jump < 1e-10,
        format!("ODE residual max {worst_ode:.1e} at 50 (x, p); surface mismatch max {worst_jump:.1e} at 100 p"),
    )
}

fn initial_recovery() -> Check {
    let ev = LaplaceEvaluator::with_defaults(params(4.0)).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for x in [-20.0, -1.0, 0.0, 1.0, 5.0] {
        let psi0 = ev.initial_value(x).0;
        for theta in [-PI / 3.0, 0.0, PI / 3.0] {
            let gaps: Vec<f64> = [10.0, 1e2, 1e3, 1e4]
                .iter()
                .map(|&r| {
                    let p = Complex64::from_polar(r, theta);
                    (p * ev.psi_hat(x, p).unwrap().0 - psi0).norm()
                })
                .collect();
            if gaps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(format!("not monotone at x = {x}, theta = {theta:.3}: {gaps:?}"));
            }
            if x == 0.0 && theta == 0.0 {
                detail.push(format!("x = 0: {}", sci(&gaps)));
            }
        }
    }
    Ok(format!("monotone at 5 x and 3 directions; {}", detail.join("")))
}

fn principal_residue_check() -> Check {
    let p4 = params(4.0);
    let xs = [-x0(&p4), 0.0, x0(&p4), 10.0 * x0(&p4)];
    let state = fn_solve(&p4).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for init in [InitialCondition::default(), InitialCondition::incident_only()] {
        let b = batch(&p4, init);
        let res = principal_residue(&b, &xs, 0.02, 64).map_err(|e| e.to_string())?;
        for (x, r) in xs.iter().zip(&res[0]) {
            let want = b.channels()[0].incident * state.eval(*x).0;
            worst = worst.max((r.0 - want).norm() / want.norm());
        }
    }
    verdict(worst < 1e-8, format!("max relative deviation {worst:.1e} at x in {{-x0, 0, x0, 10 x0}}, both initial conditions"))
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|g| format!("{g:.1e}")).collect::<Vec<_>>().join(" ")
}

/// Least-squares line through `(ln t, ln y)`.
fn log_fit(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn long_time() -> Check {
    let p4 = params(4.0);
    let x = x0(&p4);
    let b = batch(&p4, InitialCondition::default());
    let poles = find_poles_default(b.region()).map_err(|e| e.to_string())?.poles;
    let states = fn_states(&b).map_err(|e| e.to_string())?;
    let contour = DeformedContour::new(&poles, CutOptions::default());
    let ts: Vec<f64> = (0..11).map(|i| fs(50.0 * 10f64.powf(i as f64 / 10.0))).collect();
    let mut dev = Vec::new();
    for &t in &ts {
        let d = contour.decompose(&b, &states, &[x], t).map_err(|e| e.to_string())?;
        dev.push(d.transient()[0][0].0.norm());
    }
    let (slope, _) = log_fit(&ts, &dev);
    let tau = asymptotics(&p4, &InitialCondition::default(), x).map_err(|e| e.to_string())?.tau_e;
    let predicted = tau.norm().powf(1.5);
    // Amplitude with the slope held at -3/2.
    let n = ts.len() as f64;
    let amplitude = (ts.iter().zip(&dev).map(|(t, d)| (d * t.powf(1.5)).ln()).sum::<f64>() / n).exp();
    let rel = (amplitude - predicted).abs() / predicted;
    verdict(
        (slope + 1.5).abs() <= 0.1 && rel < 0.05,
        format!("slope {slope:.4} over [50, 500] fs; amplitude {amplitude:.4e} vs |tau_E|^1.5 {predicted:.4e} ({:.2}%)", 100.0 * rel),
    )
}

fn decomposition() -> Check {
    let p4 = params(4.0);
    let x = x0(&p4);
    let b = batch(&p4, InitialCondition::default());
    let poles = find_poles_default(b.region()).map_err(|e| e.to_string())?.poles;
    let states = fn_states(&b).map_err(|e| e.to_string())?;
    let contour = DeformedContour::new(&poles, CutOptions::default());
    let opts = EvolutionOptions {
        method: Method::Fft,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for t_fs in [5.0, 20.0, 80.0] {
        // The truncated contour is not valid at 10 x0 before the signal arrives.
        let xs: Vec<f64> = if t_fs < 10.0 {
            vec![-x, 0.0, x]
        } else {
            vec![-x, 0.0, x, 10.0 * x]
        };
        let t = fs(t_fs);
        let grid = TimeGrid::from_points(&[t]).map_err(|e| e.to_string())?;
        let fft = evolve_batch(&b, &xs, &grid, &opts).map_err(|e| e.to_string())?;
        let d = contour.decompose(&b, &states, &xs, t).map_err(|e| e.to_string())?.total();
        let mut here: f64 = 0.0;
        for xi in 0..xs.len() {
            here = here.max((fft.values[0][xi][0].0 - d[0][xi].0).norm());
        }
        parts.push(format!("{t_fs} fs: {here:.1e}"));
        worst = worst.max(here);
    }
    verdict(worst < 1e-5, format!("|FFT - (principal + resonances + cut)| max {}", parts.join(", ")))
}

fn pole_audit() -> Check {
    let mut parts = Vec::new();
    for field in [4.0, 8.0] {
        let p = params(field);
        let b = batch(&p, InitialCondition::default());
        let search = find_poles_default(b.region()).map_err(|e| e.to_string())?;
        let right = search.poles.iter().map(|q| q.location.re).fold(f64::NEG_INFINITY, f64::max);
        if search.winding != search.poles.len() as i64 || right >= 0.0 {
            return Err(format!("E = {field}: winding {} vs {} roots, max Re p {right}", search.winding, search.poles.len()));
        }
        parts.push(format!("E = {field} V/nm: {} roots = winding, max Re p {right:.4}", search.poles.len()));
    }
    Ok(parts.join("; "))
}

fn geometry() -> Check {
    let a = x0(&params(4.0)) * BOHR_NM;
    let b = x0(&params(8.0)) * BOHR_NM;
    verdict(
        (a - 1.125).abs() < 1e-9 && (b - 0.5625).abs() < 1e-9,
        format!("x0 = {a:.6} nm at 4 V/nm, {b:.6} nm at 8 V/nm"),
    )
}

/// First grid time at which `series` reaches `level`.
fn arrival(times: &[f64], series: &[f64], level: f64) -> Option<f64> {
    times.iter().zip(series).find(|(_, v)| **v >= level).map(|(t, _)| *t)
}

fn when(t: Option<f64>) -> String {
    t.map_or("after 5 fs".into(), |t| format!("{t:.2} fs"))
}

fn transient() -> Check {
    let p8 = params(8.0);
    let x8 = x0(&p8);
    let contour = EvolutionOptions {
        method: Method::Contour,
        ..Default::default()
    };
    let at = |t: f64| -> Result<f64, String> {
        let g = TimeGrid::from_points(&[fs(t)]).map_err(|e| e.to_string())?;
        let j = integrated_current(&p8, &[x8], &g, MIN_K_NODES, &contour).map_err(|e| e.to_string())?;
        Ok(j.current_norm[0][0])
    };
    let (early, plateau) = (at(10.0)?, at(200.0)?);
    let settle = (early - plateau).abs() / plateau.abs();

    // Arrival: first time the single-channel current reaches half its
    // stationary value, 4 V/nm.
    let p4 = params(4.0);
    let x4 = x0(&p4);
    let grid = TimeGrid::new(fs(0.25), fs(0.25), 20).map_err(|e| e.to_string())?;
    let fft = EvolutionOptions {
        method: Method::Fft,
        ..Default::default()
    };
    let s = density_current(&p4, &InitialCondition::default(), &[x4, 10.0 * x4], &grid, &fft).map_err(|e| e.to_string())?;
    let (v, d) = fn_solve(&p4).map_err(|e| e.to_string())?.eval(x4);
    let stationary = probability_current(v, d) / (2.0 * p4.k);
    let times: Vec<f64> = s.times.iter().map(|t| t * AU_TIME_FS).collect();
    let near = arrival(&times, &s.current_norm[0], 0.5 * stationary);
    let far = arrival(&times, &s.current_norm[1], 0.5 * stationary);
    let lag = match (near, far) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        _ => false,
    };
    verdict(
        settle < 0.1 && lag,
        format!(
            "E = 8: J(x0, 10 fs) within {:.2e}% of J(x0, 200 fs); E = 4 half-current arrival at x0 {}, at 10 x0 {}",
            100.0 * settle,
            when(near),
            when(far)
        ),
    )
}

fn fn_trend() -> Check {
    let p = params(4.0);
    let per_v_nm = p.field / 4.0;
    let fields: Vec<f64> = (2..=10).map(|f| f as f64).collect();
    let au: Vec<f64> = fields.iter().map(|f| f * per_v_nm).collect();
    let curve = fn_iv_curve(p.barrier, p.k_fermi, &au).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = fields.iter().zip(&curve).map(|(f, c)| (*f, c.current)).collect();
    let fit = fowler_nordheim_fit(&pts).map_err(|e| e.to_string())?;
    verdict(
        fit.r_squared > 0.99,
        format!("R^2 = {:.5} over 2..10 V/nm, slope {:.3} V/nm", fit.r_squared, fit.slope),
    )
}

fn conservation() -> Check {
    let mut worst: f64 = 0.0;
    for field in [4.0, 8.0] {
        let p = params(field);
        let sol = fn_solve(&p).map_err(|e| e.to_string())?;
        let target = 2.0 * p.k * sol.d;
        let x = x0(&p);
        for i in 0..40 {
            let y = -5.0 * x + 10.0 * x * (i as f64 + 0.5) / 40.0;
            let (v, d) = sol.eval(y);
            worst = worst.max((probability_current(v, d) - target).abs() / target);
        }
    }
    verdict(worst < 1e-8, format!("max |j(x) - 2kD| / 2kD = {worst:.1e} over [-5 x0, 5 x0] at 4 and 8 V/nm"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("Airy correctness", airy_correctness),
        ("Laplace-domain correctness", laplace_correctness),
        ("Initial-condition recovery", initial_recovery),
        ("Principal residue = FN state", principal_residue_check),
        ("Long-time convergence and rate", long_time),
        ("Contour decomposition", decomposition),
        ("Pole audit", pole_audit),
        ("Geometry", geometry),
        ("Transient timescale", transient),
        ("FN trend", fn_trend),
        ("Stationary current conservation", conservation),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
