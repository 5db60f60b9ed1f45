//! Resonance poles: zeros of `w(p) phi_p(0) - phi_p'(0)` in the left half-plane.
//!
//! Roots are isolated by recursive subdivision with the argument principle
//! and refined by Newton iteration on the normalised form `w - phi'/phi`.
//! The unnormalised form is entire off the cut, so its winding number on a
//! box boundary counts zeros only.

use num_complex::Complex64;

use crate::airy::FieldRegion;
use crate::error::{Error, Result};
use crate::laplace::sqrt_branch;
use crate::scaled::Scaled;

/// Closed rectangle in the complex `p` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::PoleSearch(format!(
                "empty box [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, p: Complex64) -> bool {
        p.re >= self.re_min && p.re <= self.re_max && p.im >= self.im_min && p.im <= self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    /// Four children, split slightly off-centre so that symmetric root
    /// patterns do not land on the new edges.
    fn quarter(&self) -> [SearchBox; 4] {
        let rm = self.re_min + 0.4871 * (self.re_max - self.re_min);
        let im = self.im_min + 0.5137 * (self.im_max - self.im_min);
        [
            SearchBox { re_max: rm, im_max: im, ..*self },
            SearchBox { re_min: rm, im_max: im, ..*self },
            SearchBox { re_max: rm, im_min: im, ..*self },
            SearchBox { re_min: rm, im_min: im, ..*self },
        ]
    }

    /// The part of the left half-plane searched by default, as two boxes
    /// that keep a margin from the negative real axis.
    pub fn default_halves() -> [SearchBox; 2] {
        [
            SearchBox::new(-2.0, -1e-4, DEFAULT_AXIS_MARGIN, 2.0).unwrap(),
            SearchBox::new(-2.0, -1e-4, -2.0, -DEFAULT_AXIS_MARGIN).unwrap(),
        ]
    }
}

pub const DEFAULT_AXIS_MARGIN: f64 = 1e-3;

/// A refined resonance pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub location: Complex64,
    /// Derivative of `w - phi'(0)/phi(0)` at the pole.
    pub determinant_slope: Complex64,
    /// `|w - phi'/phi| / (|w| + |phi'/phi|)` at the returned location.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSearch {
    pub poles: Vec<Pole>,
    /// Argument-principle count on the outer boundary.
    pub winding: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSearchOptions {
    /// Initial boundary segments per box edge before adaptive refinement.
    pub edge_segments: usize,
    pub max_depth: usize,
    pub newton_tolerance: f64,
}

impl Default for PoleSearchOptions {
    fn default() -> Self {
        Self {
            edge_segments: 16,
            max_depth: 10,
            newton_tolerance: 1e-12,
        }
    }
}

/// `w phi(0) - phi'(0)` in scaled form.
fn entire_determinant(region: &FieldRegion, p: Complex64) -> Result<Scaled> {
    let w = sqrt_branch(p)?;
    let phi = region.phi(0.0, p);
    Ok(phi.value().scale(w).add(phi.derivative().scale(Complex64::new(-1.0, 0.0))))
}

/// Normalised determinant `w - L` with `L = phi'(0)/phi(0)`, its p-derivative,
/// and the scale `|w| + |L|`.
pub fn determinant(region: &FieldRegion, p: Complex64) -> Result<(Complex64, Complex64, f64)> {
    let w = sqrt_branch(p)?;
    let (l, dl) = region.surface_log_derivative(p);
    Ok((w - l, -Complex64::i() / w - dl, w.norm() + l.norm()))
}

/// Principal argument of `b / a` for scaled numbers.
fn arg_step(a: Scaled, b: Scaled) -> f64 {
    let raw = (b.mantissa / a.mantissa).arg() + (b.exponent.im - a.exponent.im);
    raw.sin().atan2(raw.cos())
}

const MAX_ARG_STEP: f64 = 0.6;

/// Continuous change of `arg D` along the segment from `a` to `b`.
fn arg_change(region: &FieldRegion, a: Complex64, b: Complex64, depth: usize) -> Result<f64> {
    let da = entire_determinant(region, a)?;
    let db = entire_determinant(region, b)?;
    arg_change_inner(region, a, b, da, db, depth)
}

fn arg_change_inner(
    region: &FieldRegion,
    a: Complex64,
    b: Complex64,
    da: Scaled,
    db: Scaled,
    depth: usize,
) -> Result<f64> {
    let whole = arg_step(da, db);
    let m = 0.5 * (a + b);
    let dm = entire_determinant(region, m)?;
    let left = arg_step(da, dm);
    let right = arg_step(dm, db);
    // The Airy factor turns at a rate |d zeta/dp| ~ |z|^{1/2} |dz/dp|; a step
    // that could wrap a full turn between samples is never accepted.
    let z = region.phi_argument(0.0, m);
    let dz = (region.phi_argument(0.0, m + 1.0) - z).norm();
    let rate = dz * (1.0 + z.norm().sqrt()) + 1.0 / m.norm();
    let resolved = rate * (b - a).norm() < MAX_ARG_STEP;
    if resolved && left.abs() < MAX_ARG_STEP && right.abs() < MAX_ARG_STEP && (left + right - whole).abs() < 1e-9 {
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(Error::PoleSearch(format!(
            "argument of the determinant not resolved between {a} and {b}; a root may lie on the path"
        )));
    }
    Ok(arg_change_inner(region, a, m, da, dm, depth - 1)? + arg_change_inner(region, m, b, dm, db, depth - 1)?)
}

/// Argument-principle count of determinant zeros inside `bx`.
pub fn winding_number(region: &FieldRegion, bx: &SearchBox, edge_segments: usize) -> Result<i64> {
    let corners = bx.corners();
    let n = edge_segments.max(1);
    let mut total = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for j in 0..n {
            let pa = a + (b - a) * (j as f64 / n as f64);
            let pb = a + (b - a) * ((j + 1) as f64 / n as f64);
            total += arg_change(region, pa, pb, 48)?;
        }
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-3 {
        return Err(Error::PoleSearch(format!("non-integer winding {turns}")));
    }
    Ok(rounded as i64)
}

/// Newton iteration on the normalised determinant.
pub fn refine(region: &FieldRegion, start: Complex64, tolerance: f64) -> Result<Pole> {
    let mut p = start;
    for _ in 0..60 {
        let (d, dd, scale) = determinant(region, p)?;
        let step = d / dd;
        p -= step;
        if step.norm() <= 1e-15 * (1.0 + p.norm()) || d.norm() <= tolerance * scale * 1e-3 {
            break;
        }
    }
    let (d, dd, scale) = determinant(region, p)?;
    let rel = d.norm() / scale;
    if !(rel <= tolerance) {
        return Err(Error::PoleSearch(format!(
            "Newton from {start} stalled at {p} with relative residual {rel:.3e}"
        )));
    }
    Ok(Pole {
        location: p,
        determinant_slope: dd,
        relative_residual: rel,
    })
}

/// All determinant zeros inside `bx`, with the boundary winding number.
pub fn find_poles(region: &FieldRegion, bx: &SearchBox, opts: &PoleSearchOptions) -> Result<PoleSearch> {
    if bx.re_max >= 0.0 {
        return Err(Error::PoleSearch("search box must lie in Re p < 0".into()));
    }
    if bx.im_min <= 0.0 && bx.im_max >= 0.0 {
        return Err(Error::PoleSearch("search box must not touch the negative real axis".into()));
    }
    let winding = winding_number(region, bx, opts.edge_segments)?;
    let mut poles: Vec<Pole> = Vec::new();
    isolate(region, bx, winding, opts, opts.max_depth, &mut poles)?;
    poles.sort_by(|a, b| {
        (b.location.re, a.location.im)
            .partial_cmp(&(a.location.re, b.location.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if poles.len() as i64 != winding {
        return Err(Error::PoleCountMismatch {
            winding,
            found: poles.len(),
        });
    }
    Ok(PoleSearch { poles, winding })
}

/// Poles in both default half-boxes.
pub fn find_poles_default(region: &FieldRegion) -> Result<PoleSearch> {
    let mut all = PoleSearch {
        poles: Vec::new(),
        winding: 0,
    };
    for bx in SearchBox::default_halves() {
        let part = find_poles(region, &bx, &PoleSearchOptions::default())?;
        all.poles.extend(part.poles);
        all.winding += part.winding;
    }
    all.poles.sort_by(|a, b| b.location.re.partial_cmp(&a.location.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(all)
}

fn isolate(
    region: &FieldRegion,
    bx: &SearchBox,
    count: i64,
    opts: &PoleSearchOptions,
    depth: usize,
    out: &mut Vec<Pole>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    if count == 1 {
        if let Ok(pole) = refine(region, bx.center(), opts.newton_tolerance) {
            let margin = 1e-9 * (1.0 + bx.diameter());
            let grown = SearchBox {
                re_min: bx.re_min - margin,
                re_max: bx.re_max + margin,
                im_min: bx.im_min - margin,
                im_max: bx.im_max + margin,
            };
            if grown.contains(pole.location) {
                if !out.iter().any(|q| (q.location - pole.location).norm() < 1e-9) {
                    out.push(pole);
                }
                return Ok(());
            }
        }
    }
    if depth == 0 {
        return Err(Error::PoleSearch(format!(
            "could not isolate {count} root(s) near {}",
            bx.center()
        )));
    }
    let children = bx.quarter();
    let mut counted = 0;
    let mut counts = [0i64; 4];
    for (i, child) in children.iter().enumerate() {
        counts[i] = winding_number(region, child, opts.edge_segments.div_ceil(2).max(4))?;
        counted += counts[i];
    }
    if counted != count {
        return Err(Error::PoleCountMismatch {
            winding: count,
            found: counted.max(0) as usize,
        });
    }
    for (child, c) in children.iter().zip(counts) {
        isolate(region, child, c, opts, depth - 1, out)?;
    }
    Ok(())
}
