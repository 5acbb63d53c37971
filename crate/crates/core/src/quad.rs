//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (21 points)
//! and fixed-order Gauss–Legendre rules.
//!
//! The adaptive routine bisects the panel with the largest error estimate
//! until the summed estimate falls below the requested tolerance. Final sums
//! are accumulated left-to-right with Neumaier compensation, so the result is
//! a deterministic function of the integrand and the tolerances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_138_377,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub value: f64,
    pub abs_error: f64,
    pub n_evals: usize,
    pub panels: usize,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl QuadConfig {
    pub fn absolute(abs_tol: f64) -> Self {
        QuadConfig { abs_tol, rel_tol: 0.0, max_panels: 4000 }
    }

    pub fn with_rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// 21-point Kronrod estimate and QUADPACK-style error estimate on [a, b].
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Globally adaptive Gauss–Kronrod integration of `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<Integration> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::arg(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integration { value: 0.0, abs_error: 0.0, n_evals: 0, panels: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let (v, e) = gk21(&f, lo, hi);
    heap.push(Panel { a: lo, b: hi, value: v, error: e });
    let mut n_evals = 21;
    let mut total_value = v;
    let mut total_error = e;
    let mut frozen_error = 0.0;

    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total_value.abs());
        if total_error <= target {
            break;
        }
        let Some(worst) = heap.pop() else {
            // every remaining panel is at the resolution limit
            if frozen_error <= 10.0 * target {
                break;
            }
            let w = frozen
                .iter()
                .max_by(|p, q| p.error.total_cmp(&q.error))
                .copied()
                .unwrap_or(Panel { a: lo, b: hi, value: 0.0, error: total_error });
            return Err(Error::Quadrature {
                message: format!(
                    "roundoff limit reached: error estimate {total_error:e} above target {target:e}"
                ),
                panel_lo: w.a,
                panel_hi: w.b,
                panel_error: w.error,
            });
        };
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        if width <= 64.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE) || mid <= worst.a || mid >= worst.b {
            frozen_error += worst.error;
            frozen.push(worst);
            continue;
        }
        if heap.len() + frozen.len() + 2 > cfg.max_panels {
            return Err(Error::Quadrature {
                message: format!(
                    "no convergence after {} panels: error estimate {total_error:e}, target {target:e}",
                    cfg.max_panels
                ),
                panel_lo: worst.a,
                panel_hi: worst.b,
                panel_error: worst.error,
            });
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        n_evals += 42;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }

    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = compensated_sum(panels.iter().map(|p| p.value));
    let abs_error = compensated_sum(panels.iter().map(|p| p.error));
    Ok(Integration { value: sign * value, abs_error, n_evals, panels: panels.len() })
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre rule mapped to [a, b].
pub fn fixed_gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    compensated_sum(rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(c + h * x))) * h
}
