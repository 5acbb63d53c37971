//! Moving-average kernels and their one-dimensional cross integrals.
//!
//! The field's covariance factorizes over axes into integrals of products of
//! g(u) = (t − u)_+^{h−1/2} − (−u)_+^{h−1/2} (or the one-sided Liouville kernel
//! (t − u)^{h−1/2} on [0, t]). These have integrable power singularities at
//! u = 0 and u = t, approached from the left, and an algebraic tail as u → −∞.
//! [`cross_integral_1d`] splits at the singular points, removes each
//! singularity by a power substitution and truncates the tail at a window
//! chosen from an explicit bound.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, gauss_legendre, integrate, Integration, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelVariant {
    MovingAverage,
    Liouville,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub t: f64,
    pub h: f64,
}

impl KernelSpec {
    pub fn moving_average(t: f64, h: f64) -> Self {
        KernelSpec { variant: KernelVariant::MovingAverage, t, h }
    }

    pub fn liouville(t: f64, h: f64) -> Self {
        KernelSpec { variant: KernelVariant::Liouville, t, h }
    }

    pub fn exponent(&self) -> f64 {
        self.h - 0.5
    }

    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::arg(format!("kernel time must be positive and finite, got {}", self.t)));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::arg(format!("kernel Hurst exponent {} outside (0, 1)", self.h)));
        }
        Ok(())
    }

    /// Kernel value given a = t − u and v = −u, computed without cancellation.
    #[inline]
    fn value_from(&self, a: f64, v: f64) -> f64 {
        let e = self.exponent();
        if a <= 0.0 {
            return 0.0;
        }
        match self.variant {
            KernelVariant::MovingAverage => {
                if v > 0.0 {
                    // (t + v)^e − v^e = v^e·((1 + t/v)^e − 1)
                    v.powf(e) * (e * (self.t / v).ln_1p()).exp_m1()
                } else {
                    a.powf(e)
                }
            }
            KernelVariant::Liouville => {
                if v > 0.0 {
                    0.0
                } else {
                    a.powf(e)
                }
            }
        }
    }

    /// ∫_{lo}^{hi} kernel(u) du in closed form.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let e1 = self.exponent() + 1.0;
        let anti = |u: f64| -> f64 {
            let a = (self.t - u).max(0.0);
            let near = -a.powf(e1) / e1;
            match self.variant {
                KernelVariant::MovingAverage => near + (-u).max(0.0).powf(e1) / e1,
                KernelVariant::Liouville => {
                    if u < 0.0 {
                        -self.t.powf(e1) / e1
                    } else {
                        near
                    }
                }
            }
        };
        anti(hi) - anti(lo)
    }
}

/// Pointwise kernel value. At a singular point with h < 1/2 the value is
/// the signed infinity of the one-sided limit from the left.
pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    let e = spec.exponent();
    if e < 0.0 {
        if u == spec.t {
            return f64::INFINITY;
        }
        if u == 0.0 && spec.variant == KernelVariant::MovingAverage {
            return f64::NEG_INFINITY;
        }
    }
    spec.value_from(spec.t - u, -u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region1D {
    /// The whole real line; effectively (−∞, min(t_a, t_b)].
    FullLine,
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub truncation_bound: f64,
    pub n_evals: usize,
}

const ZERO: QuadratureResult = QuadratureResult { value: 0.0, abs_error_estimate: 0.0, truncation_bound: 0.0, n_evals: 0 };

/// Bound on ∫_{−∞}^{−U} |a(u) b(u)| du for two moving-average kernels, using
/// |g(u)| ≤ |h − 1/2|·t·|u|^{h−3/2} for u ≤ −t and a factor 2 of safety.
pub fn tail_bound(a: &KernelSpec, b: &KernelSpec, window: f64) -> f64 {
    let (ea, eb) = (a.exponent(), b.exponent());
    let e = ea + eb;
    2.0 * (ea * eb).abs() * a.t * b.t * window.powf(e - 1.0) / (1.0 - e)
}

fn tail_window(a: &KernelSpec, b: &KernelSpec, target: f64) -> Result<f64> {
    let (ea, eb) = (a.exponent(), b.exponent());
    let coef = tail_bound(a, b, 1.0);
    if coef == 0.0 {
        return Ok(a.t.max(b.t));
    }
    let e = ea + eb;
    let w = (coef / target).powf(1.0 / (1.0 - e));
    if !w.is_finite() {
        return Err(Error::Configuration(format!(
            "tail window overflows for h = ({}, {}) at tolerance {target:e}",
            a.h, b.h
        )));
    }
    Ok(w.max(a.t.max(b.t)))
}

/// Integrates the product over [lo, hi] where any singularity sits at `hi`,
/// approached from the left. The distance x = hi − u is passed to the kernels
/// exactly so that |t − u| is not lost to rounding near the singular point.
fn singular_panel(a: &KernelSpec, b: &KernelSpec, lo: f64, hi: f64, tol: f64) -> Result<Integration> {
    let len = hi - lo;
    let mut e_neg = 0.0;
    let mut fractional = false;
    for k in [a, b] {
        let singular_here = k.t == hi || (hi == 0.0 && k.variant == KernelVariant::MovingAverage);
        if singular_here {
            let e = k.exponent();
            if e < 0.0 {
                e_neg += e;
            } else if e > 0.0 {
                fractional = true;
            }
        }
    }
    let p = if e_neg < 0.0 {
        1.0 / (1.0 + e_neg)
    } else if fractional {
        2.0
    } else {
        1.0
    };
    let f = |w: f64| -> f64 {
        let x = if p == 1.0 { len * w } else { len * w.powf(p) };
        let jac = if p == 1.0 { len } else { len * p * w.powf(p - 1.0) };
        let va = a.value_from((a.t - hi) + x, x - hi);
        let vb = b.value_from((b.t - hi) + x, x - hi);
        va * vb * jac
    };
    integrate(f, 0.0, 1.0, QuadConfig::absolute(tol))
}

/// Integrates over [−outer, −inner] (0 < inner < outer) via u = −e^y.
fn log_panel(a: &KernelSpec, b: &KernelSpec, inner: f64, outer: f64, tol: f64) -> Result<Integration> {
    let f = |y: f64| -> f64 {
        let v = y.exp();
        a.value_from(a.t + v, v) * b.value_from(b.t + v, v) * v
    };
    integrate(f, inner.ln(), outer.ln(), QuadConfig::absolute(tol))
}

/// ∫_region a(u)·b(u) du with |error| ≤ tol (quadrature estimate plus tail bound).
pub fn cross_integral_1d(a: &KernelSpec, b: &KernelSpec, region: Region1D, tol: f64) -> Result<QuadratureResult> {
    a.validate()?;
    b.validate()?;
    if !(tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    let one_sided = a.variant == KernelVariant::Liouville || b.variant == KernelVariant::Liouville;
    let mut lo = if one_sided { 0.0 } else { f64::NEG_INFINITY };
    let mut hi = a.t.min(b.t);
    if let Region1D::Interval { lo: rl, hi: rh } = region {
        if !(rl < rh) || rl.is_nan() || rh.is_nan() {
            return Err(Error::arg(format!("interval region needs lo < hi, got [{rl}, {rh}]")));
        }
        lo = lo.max(rl);
        hi = hi.min(rh);
    }
    if lo >= hi {
        return Ok(ZERO);
    }

    let far = a.t.max(b.t);
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let near_lo = lo.max(-far);
    if near_lo < 0.0 && hi > 0.0 {
        pieces.push((near_lo, 0.0));
        pieces.push((0.0, hi));
    } else if near_lo < hi {
        pieces.push((near_lo, hi));
    }
    let tail = lo < -far;
    let n_panels = pieces.len() + usize::from(tail);
    let quad_tol = 0.9 * tol / n_panels as f64;

    let mut values = Vec::with_capacity(n_panels);
    let mut err = 0.0;
    let mut evals = 0;
    let mut truncation = 0.0;
    if tail {
        let outer = if lo.is_finite() {
            -lo
        } else {
            let w = tail_window(a, b, 0.1 * tol)?;
            truncation = tail_bound(a, b, w);
            w
        };
        let inner = far.max(-hi);
        if outer > inner {
            let r = log_panel(a, b, inner, outer, quad_tol)?;
            values.push(r.value);
            err += r.abs_error;
            evals += r.n_evals;
        }
    }
    for &(pl, ph) in &pieces {
        let r = singular_panel(a, b, pl, ph, quad_tol).map_err(|e| locate(e, pl, ph))?;
        values.push(r.value);
        err += r.abs_error;
        evals += r.n_evals;
    }
    Ok(QuadratureResult {
        value: quad::compensated_sum(values),
        abs_error_estimate: err,
        truncation_bound: truncation,
        n_evals: evals,
    })
}

/// Re-expresses a quadrature failure on the substituted variable in terms of u.
fn locate(e: Error, lo: f64, hi: f64) -> Error {
    match e {
        Error::Quadrature { message, panel_error, .. } => Error::Quadrature {
            message: format!("{message} (on u-panel [{lo:e}, {hi:e}])"),
            panel_lo: lo,
            panel_hi: hi,
            panel_error,
        },
        other => other,
    }
}

fn normalization_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// c_h = ∫ g(u)² du at t = 1, so that the full-line covariance equals
/// c_h·½(s^{2h} + t^{2h} − |t − s|^{2h}). Computed once per h by quadrature.
pub fn fbm_normalization(h: f64) -> Result<f64> {
    if let Some(&c) = normalization_cache().lock().unwrap().get(&h.to_bits()) {
        return Ok(c);
    }
    let k = KernelSpec::moving_average(1.0, h);
    let c = cross_integral_1d(&k, &k, Region1D::FullLine, 1e-11)?.value;
    normalization_cache().lock().unwrap().insert(h.to_bits(), c);
    Ok(c)
}

/// Fitted constants of an inequality of the form `integral ≤ c·shape` over a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub label: String,
    pub sweep: Vec<f64>,
    pub integrals: Vec<f64>,
    pub errors: Vec<f64>,
    pub shapes: Vec<f64>,
    pub ratios: Vec<f64>,
    /// max ratio: the smallest constant that makes the bound hold on the sweep.
    pub c_hat: f64,
    /// max ratio / min ratio.
    pub spread: f64,
    pub passed: bool,
    pub notes: Vec<String>,
}

const SPREAD_LIMIT: f64 = 10.0;

fn bound_report(label: String, sweep: Vec<f64>, integrals: Vec<f64>, errors: Vec<f64>, shapes: Vec<f64>, notes: Vec<String>) -> BoundReport {
    let ratios: Vec<f64> = integrals.iter().zip(&shapes).map(|(i, s)| i / s).collect();
    let c_hat = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if ratios.is_empty() { f64::NAN } else { c_hat / c_min };
    let passed = !ratios.is_empty() && ratios.iter().all(|r| r.is_finite() && *r > 0.0) && spread < SPREAD_LIMIT;
    BoundReport { label, sweep, integrals, errors, shapes, ratios, c_hat, spread, passed, notes }
}

/// ∫_0^hi f with a log-spaced change of variables below `scale`, where f varies fastest.
fn integrate_multiscale<F: Fn(f64) -> f64>(f: F, hi: f64, scale: f64, rel_tol: f64) -> Result<Integration> {
    let cfg = QuadConfig { abs_tol: 1e-300, rel_tol, max_panels: 8000 };
    let cut = 1e-3 * scale;
    if cut >= 0.5 * hi {
        return integrate(&f, 0.0, hi, cfg);
    }
    let near = integrate(&f, 0.0, cut, cfg)?;
    let far = integrate(|y: f64| { let x = y.exp(); f(x) * x }, cut.ln(), hi.ln(), cfg)?;
    Ok(Integration {
        value: near.value + far.value,
        abs_error: near.abs_error + far.abs_error,
        n_evals: near.n_evals + far.n_evals,
        panels: near.panels + far.panels,
    })
}

/// Checks ∫_ε^1∫_ε^1 [a + |s − r|^{2h}]^{−β} ds dr ≤ c·(a^{−(β−1/δ)} + 1) over `a_values`.
///
/// The double integral depends on |s − r| only and is reduced to
/// 2∫_0^{1−ε} (1 − ε − x)·[a + x^{2h}]^{−β} dx.
pub fn verify_double_integral_bound(h: f64, delta: f64, beta: f64, a_values: &[f64], eps: f64, tol: f64) -> Result<BoundReport> {
    if !(h > 0.0 && h < 1.0) || !(delta > 2.0 * h) || beta < 0.0 || !(0.0..1.0).contains(&eps) {
        return Err(Error::arg(format!("need 0 < h < 1, delta > 2h, beta >= 0, eps in [0, 1); got h={h}, delta={delta}, beta={beta}, eps={eps}")));
    }
    if a_values.is_empty() || a_values.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::arg("a values must be positive"));
    }
    let len = 1.0 - eps;
    let mut integrals = Vec::new();
    let mut errors = Vec::new();
    let mut shapes = Vec::new();
    let mut notes = Vec::new();
    for &a in a_values {
        let r = integrate_multiscale(|x| 2.0 * (len - x) * (a + x.powf(2.0 * h)).powf(-beta), len, a.powf(0.5 / h), tol)?;
        if a >= 1.0 && r.value > len * len * a.powf(-beta) * (1.0 + 10.0 * tol) {
            notes.push(format!("a = {a}: integral {} exceeds the pointwise bound", r.value));
        }
        integrals.push(r.value);
        errors.push(r.abs_error);
        shapes.push(a.powf(-(beta - 1.0 / delta)) + 1.0);
    }
    let mut rep = bound_report(format!("h={h}, delta={delta}, beta={beta}, eps={eps}"), a_values.to_vec(), integrals, errors, shapes, notes);
    rep.passed &= rep.notes.is_empty();
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PowerCase {
    /// αβ > 1: J ≲ A^{−(β − 1/α)} B^{−η}.
    Steep,
    /// αβ = 1: J ≲ B^{−η} log(1 + B A^{−1/α}).
    Critical,
    /// αβ < 1, αβ + η ≠ 1: J ≲ B^{−(αβ+η−1)} + 1.
    Shallow,
}

/// Checks the bound shape of J(A, B) = ∫_0^1 (A + t^α)^{−β} (B + t)^{−η} dt
/// over all pairs with A^{1/α} ≤ B (the precondition with constant 1).
pub fn verify_two_scale_bound(alpha: f64, beta: f64, eta: f64, a_values: &[f64], b_values: &[f64], tol: f64) -> Result<(PowerCase, BoundReport)> {
    if !(alpha > 0.0) || beta < 0.0 || eta < 0.0 {
        return Err(Error::arg("need alpha > 0 and beta, eta >= 0"));
    }
    let ab = alpha * beta;
    let case = if (ab - 1.0).abs() < 1e-12 {
        PowerCase::Critical
    } else if ab > 1.0 {
        PowerCase::Steep
    } else {
        if (ab + eta - 1.0).abs() < 1e-12 {
            return Err(Error::arg("the case alpha*beta < 1 with alpha*beta + eta = 1 has no bound shape"));
        }
        PowerCase::Shallow
    };
    let mut sweep = Vec::new();
    let mut integrals = Vec::new();
    let mut errors = Vec::new();
    let mut shapes = Vec::new();
    let mut notes = Vec::new();
    let mut skipped = 0;
    let mut largest_ratio: f64 = 0.0;
    for &b in b_values {
        for &a in a_values {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::arg("A and B must be positive"));
            }
            let scale = a.powf(1.0 / alpha);
            if scale > b {
                skipped += 1;
                continue;
            }
            largest_ratio = largest_ratio.max(scale / b);
            let r = integrate_multiscale(|t| (a + t.powf(alpha)).powf(-beta) * (b + t).powf(-eta), 1.0, scale.min(b), tol)?;
            let shape = match case {
                PowerCase::Steep => a.powf(-(beta - 1.0 / alpha)) * b.powf(-eta),
                PowerCase::Critical => b.powf(-eta) * (1.0 + b / scale).ln(),
                PowerCase::Shallow => b.powf(-(ab + eta - 1.0)) + 1.0,
            };
            sweep.push(a / b);
            integrals.push(r.value);
            errors.push(r.abs_error);
            shapes.push(shape);
        }
    }
    if skipped > 0 {
        notes.push(format!("{skipped} (A, B) pairs violate A^(1/alpha) <= B and were excluded"));
    }
    notes.push(format!("largest A^(1/alpha)/B checked: {largest_ratio:e}"));
    let rep = bound_report(format!("alpha={alpha}, beta={beta}, eta={eta}, case={case:?}"), sweep, integrals, errors, shapes, notes);
    Ok((case, rep))
}

/// Ordered-simplex integral with its fitted r-exponent.
#[derive(Debug, Clone, Serialize)]
pub struct SimplexReport {
    pub bound: BoundReport,
    /// Least-squares slope of log integral against log r.
    pub fitted_exponent: f64,
    /// n − Σ_{j≥2} b_j.
    pub bound_exponent: f64,
}

fn simplex_integral(a: f64, r: f64, b: &[f64], s0: f64, m: usize) -> f64 {
    let rule = gauss_legendre(m);
    let top = a + r;
    fn level(k: usize, prev: f64, a: f64, top: f64, b: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        if k == b.len() {
            return 1.0;
        }
        let lo = if k == 0 { a } else { prev };
        let half = 0.5 * (top - lo);
        if half <= 0.0 {
            return 0.0;
        }
        let bk = b[k];
        let p = if k == 0 { 1.0 } else { 1.0 / (1.0 - bk) };
        // left half: s = lo + half·w^p removes (s − prev)^{−b_k};
        // right half: s = top − half·v² softens the vanishing power at the top.
        let left = |w: f64| -> f64 {
            let x = half * w.powf(p);
            let s = lo + x;
            let dist = if k == 0 { s - prev } else { x };
            dist.powf(-bk) * level(k + 1, s, a, top, b, rule) * half * p * w.powf(p - 1.0)
        };
        let right = |v: f64| -> f64 {
            let s = top - half * v * v;
            (s - prev).powf(-bk) * level(k + 1, s, a, top, b, rule) * 2.0 * half * v
        };
        quad::fixed_gauss_legendre(left, 0.0, 1.0, rule) + quad::fixed_gauss_legendre(right, 0.0, 1.0, rule)
    }
    level(0, s0, a, top, b, &rule)
}

/// Checks ∫_{a ≤ s_1 ≤ … ≤ s_n ≤ a+r} Π_j (s_j − s_{j−1})^{−b_j} ds against
/// c^n (n!)^{(1/n)Σb_j − 1} r^{n − Σ_{j≥2} b_j} for r, r/2, r/4.
pub fn verify_ordered_simplex_bound(a: f64, r: f64, b: &[f64], s0: f64, tol: f64) -> Result<SimplexReport> {
    let n = b.len();
    if n == 0 || n > 6 {
        return Err(Error::arg(format!("simplex dimension must be in 1..=6, got {n}")));
    }
    if !(a > 0.0 && r > 0.0) || !(0.0..=0.5 * a).contains(&s0) || b.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::arg("need a, r > 0, s0 in [0, a/2] and b_j in [0, 1)"));
    }
    let radii = [r, r / 2.0, r / 4.0];
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let sum_b: f64 = b.iter().sum();
    let bound_exponent = n as f64 - b[1..].iter().sum::<f64>();
    let mut integrals = Vec::new();
    let mut errors = Vec::new();
    let mut shapes = Vec::new();
    let mut notes = Vec::new();
    for &rr in &radii {
        let mut m = 8;
        let mut prev = simplex_integral(a, rr, b, s0, m);
        let mut err = f64::INFINITY;
        while (m * 2).pow(n as u32) * 2usize.pow(n as u32) <= 40_000_000 {
            m *= 2;
            let cur = simplex_integral(a, rr, b, s0, m);
            err = (cur - prev).abs();
            prev = cur;
            if err <= tol * cur.abs() {
                break;
            }
        }
        if !(err <= tol * prev.abs()) {
            notes.push(format!("r = {rr}: refinement stopped at relative change {:e}", err / prev.abs()));
        }
        integrals.push(prev);
        errors.push(err);
        // c^n is fitted as a whole; the report's constant is its n-th root.
        shapes.push(fact.powf(sum_b / n as f64 - 1.0) * rr.powf(bound_exponent));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let fitted_exponent = crate::fit::least_squares(&xs, &ys)?.slope;
    let mut bound = bound_report(format!("a={a}, b={b:?}, s0={s0}"), radii.to_vec(), integrals, errors, shapes, notes);
    let nth = 1.0 / n as f64;
    bound.ratios.iter_mut().for_each(|x| *x = x.powf(nth));
    bound.c_hat = bound.c_hat.powf(nth);
    bound.spread = bound.spread.powf(nth);
    Ok(SimplexReport { bound, fitted_exponent, bound_exponent })
}
