//! Covariance matrices of the sheet and of its Liouville pieces, Gaussian
//! conditioning, and numerical certificates of non-determinism and increment bounds.
//!
//! Every entry is a product over axes of one-dimensional kernel cross integrals.
//! The pieces split [0, t] into [0, ε]^N, the strips R_ℓ(t) (axis ℓ in (ε, t_ℓ],
//! the others in [0, ε]) and the remainder Δ(ε, t) where at least two
//! coordinates exceed ε.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Interval;
use crate::hurst::HurstFunctional;
use crate::kernel::{cross_integral_1d, fbm_normalization, KernelSpec, KernelVariant, Region1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProcessTag {
    /// The moving-average sheet itself.
    B,
    /// The Liouville sheet on [0, t].
    X0,
    /// The piece over [0, ε]^N.
    XEps,
    /// The strip piece along axis ℓ (0-based).
    Y(usize),
    /// The remainder over Δ(ε, t).
    ZEps,
}

#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub points: Vec<Vec<f64>>,
    pub entries: DMatrix<f64>,
    /// λ added to the diagonal by the last successful factorization.
    pub jitter_applied: f64,
    pub tag: ProcessTag,
    /// Largest propagated quadrature error bound over all entries.
    pub entry_error: f64,
}

/// Cholesky factor L with L·Lᵀ = C + jitter·I.
#[derive(Debug, Clone)]
pub struct Factor {
    pub l: DMatrix<f64>,
    pub jitter: f64,
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky with the jitter ladder λ = 1e-12·(trace/n), ×10 per step, up to 1e-6·(trace/n).
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<Factor> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Factor { l: DMatrix::zeros(0, 0), jitter: 0.0 });
    }
    if let Some(c) = m.clone().cholesky() {
        return Ok(Factor { l: c.l(), jitter: 0.0 });
    }
    let scale = m.trace() / n as f64;
    let mut lambda = JITTER_START * scale;
    while lambda <= JITTER_MAX * scale * (1.0 + 1e-9) {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += lambda;
        }
        if let Some(c) = shifted.cholesky() {
            return Ok(Factor { l: c.l(), jitter: lambda });
        }
        lambda *= 10.0;
    }
    Err(Error::Conditioning(format!(
        "{n}x{n} matrix is not positive definite even with jitter {:e}",
        JITTER_MAX * scale
    )))
}

impl CovarianceMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn factor(&mut self) -> Result<Factor> {
        let f = cholesky_with_jitter(&self.entries)?;
        self.jitter_applied = f.jitter;
        Ok(f)
    }

    /// uᵀ C u.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (v.transpose() * &self.entries * &v)[(0, 0)]
    }
}

fn check_points(points: &[Vec<f64>], n: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::arg("point list is empty"));
    }
    for p in points {
        if p.len() != n {
            return Err(Error::arg(format!("point {p:?} has {} coordinates, expected {n}", p.len())));
        }
        if p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::arg(format!("point {p:?} is not in (0, inf)^N")));
        }
    }
    Ok(())
}

/// Per-axis kernel variant and region of one product piece.
type AxisRegions = Vec<(KernelVariant, Region1D)>;

/// Gram matrix Π_ℓ ∫_{region_ℓ} k(t^i_ℓ, u) k(t^j_ℓ, u) du with its propagated error bound.
fn assemble_product(hv: &[Vec<f64>], points: &[Vec<f64>], regions: &AxisRegions, tol: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = points.len();
    let dims = regions.len();
    let mut values: Vec<DMatrix<f64>> = Vec::with_capacity(dims);
    let mut errors: Vec<DMatrix<f64>> = Vec::with_capacity(dims);
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(dims);
    for (l, &(variant, region)) in regions.iter().enumerate() {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut specs: Vec<KernelSpec> = Vec::new();
        let axis_ids: Vec<usize> = (0..n)
            .map(|i| {
                let key = (points[i][l].to_bits(), hv[i][l].to_bits());
                *index.entry(key).or_insert_with(|| {
                    specs.push(KernelSpec { variant, t: points[i][l], h: hv[i][l] });
                    specs.len() - 1
                })
            })
            .collect();
        let m = specs.len();
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
        let results = pairs
            .par_iter()
            .map(|&(a, b)| {
                cross_integral_1d(&specs[a], &specs[b], region, tol).map_err(|e| match e {
                    Error::Quadrature { message, panel_lo, panel_hi, panel_error } => Error::Quadrature {
                        message: format!("axis {l} factor (t={}, h={}) x (t={}, h={}): {message}", specs[a].t, specs[a].h, specs[b].t, specs[b].h),
                        panel_lo,
                        panel_hi,
                        panel_error,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut v = DMatrix::zeros(m, m);
        let mut e = DMatrix::zeros(m, m);
        for (&(a, b), r) in pairs.iter().zip(&results) {
            v[(a, b)] = r.value;
            v[(b, a)] = r.value;
            e[(a, b)] = r.abs_error_estimate + r.truncation_bound;
            e[(b, a)] = e[(a, b)];
        }
        values.push(v);
        errors.push(e);
        ids.push(axis_ids);
    }
    let mut out = DMatrix::zeros(n, n);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut prod: f64 = 1.0;
            let mut err: f64 = 0.0;
            for l in 0..dims {
                let (a, b) = (ids[l][i], ids[l][j]);
                let (f, fe) = (values[l][(a, b)], errors[l][(a, b)]);
                // (p + δp)(f + δf) − p f bounded by |p| δf + δp (|f| + δf)
                err = prod.abs() * fe + err * (f.abs() + fe);
                prod *= f;
            }
            out[(i, j)] = prod;
            out[(j, i)] = prod;
            worst = worst.max(err);
        }
    }
    Ok((out, worst))
}

fn eval_all(h: &HurstFunctional, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    points.iter().map(|p| h.eval(p)).collect()
}

/// Gram matrix of B over `points`. Constant H uses the closed form
/// Π_ℓ c_{h_ℓ}·½(s_ℓ^{2h_ℓ} + t_ℓ^{2h_ℓ} − |t_ℓ − s_ℓ|^{2h_ℓ}) with the quadrature-calibrated c_h.
pub fn covariance_b(h: &HurstFunctional, points: &[Vec<f64>], tol: f64) -> Result<CovarianceMatrix> {
    let n_dims = h.n_dims();
    check_points(points, n_dims)?;
    if let Some(hc) = h.constant_value() {
        let c: Vec<f64> = hc.iter().map(|&x| fbm_normalization(x)).collect::<Result<_>>()?;
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n_dims)
                            .map(|l| {
                                let (s, t, e) = (points[i][l], points[j][l], 2.0 * hc[l]);
                                0.5 * c[l] * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
                            })
                            .product()
                    })
                    .collect()
            })
            .collect();
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        return Ok(CovarianceMatrix { points: points.to_vec(), entries, jitter_applied: 0.0, tag: ProcessTag::B, entry_error: 0.0 });
    }
    covariance_b_quadrature(h, points, tol)
}

/// Gram matrix of B by quadrature on every factor, bypassing the closed form.
pub fn covariance_b_quadrature(h: &HurstFunctional, points: &[Vec<f64>], tol: f64) -> Result<CovarianceMatrix> {
    check_points(points, h.n_dims())?;
    let hv = eval_all(h, points)?;
    let regions = vec![(KernelVariant::MovingAverage, Region1D::FullLine); h.n_dims()];
    let (entries, entry_error) = assemble_product(&hv, points, &regions, tol)?;
    Ok(CovarianceMatrix { points: points.to_vec(), entries, jitter_applied: 0.0, tag: ProcessTag::B, entry_error })
}

fn lower(eps: f64) -> (KernelVariant, Region1D) {
    (KernelVariant::Liouville, Region1D::Interval { lo: 0.0, hi: eps })
}

fn upper(eps: f64) -> (KernelVariant, Region1D) {
    (KernelVariant::Liouville, Region1D::Interval { lo: eps, hi: f64::INFINITY })
}

fn check_eps(points: &[Vec<f64>], eps: f64) -> Result<()> {
    let min = points.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    if !(eps > 0.0 && eps < 0.5 * min) {
        return Err(Error::arg(format!("eps = {eps} must lie in (0, min coordinate / 2 = {})", 0.5 * min)));
    }
    Ok(())
}

/// Gram matrix of one Liouville piece. Z(ε, ·) is assembled as X0 − X(ε) − Σ_ℓ Y_ℓ.
pub fn covariance_piece(h: &HurstFunctional, tag: ProcessTag, eps: f64, points: &[Vec<f64>], tol: f64) -> Result<CovarianceMatrix> {
    let n = h.n_dims();
    check_points(points, n)?;
    check_eps(points, eps)?;
    let hv = eval_all(h, points)?;
    let (entries, entry_error) = match tag {
        ProcessTag::B => return covariance_b(h, points, tol),
        ProcessTag::X0 => assemble_product(&hv, points, &vec![(KernelVariant::Liouville, Region1D::FullLine); n], tol)?,
        ProcessTag::XEps => assemble_product(&hv, points, &vec![lower(eps); n], tol)?,
        ProcessTag::Y(l) => {
            if l >= n {
                return Err(Error::arg(format!("axis {l} out of range for N = {n}")));
            }
            let regions = (0..n).map(|k| if k == l { upper(eps) } else { lower(eps) }).collect();
            assemble_product(&hv, points, &regions, tol)?
        }
        ProcessTag::ZEps => {
            let (mut z, mut err) = assemble_product(&hv, points, &vec![(KernelVariant::Liouville, Region1D::FullLine); n], tol)?;
            let (x, ex) = assemble_product(&hv, points, &vec![lower(eps); n], tol)?;
            z -= x;
            err += ex;
            for l in 0..n {
                let regions = (0..n).map(|k| if k == l { upper(eps) } else { lower(eps) }).collect();
                let (y, ey) = assemble_product(&hv, points, &regions, tol)?;
                z -= y;
                err += ey;
            }
            for i in 0..z.nrows() {
                if z[(i, i)] < -tol.max(err) {
                    return Err(Error::InternalConsistency(format!(
                        "remainder variance {} at {:?} is negative beyond tolerance",
                        z[(i, i)],
                        points[i]
                    )));
                }
            }
            (z, err)
        }
    };
    Ok(CovarianceMatrix { points: points.to_vec(), entries, jitter_applied: 0.0, tag, entry_error })
}

/// Gram matrix of the remainder integrated directly over Δ(ε, t), as the sum over
/// axis subsets S with |S| ≥ 2 of Π_{ℓ∈S} (ε, ·] × Π_{ℓ∉S} [0, ε].
pub fn delta_region_covariance(h: &HurstFunctional, eps: f64, points: &[Vec<f64>], tol: f64) -> Result<CovarianceMatrix> {
    let n = h.n_dims();
    check_points(points, n)?;
    check_eps(points, eps)?;
    let hv = eval_all(h, points)?;
    let mut total = DMatrix::zeros(points.len(), points.len());
    let mut err = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let regions = (0..n).map(|k| if mask & (1 << k) != 0 { upper(eps) } else { lower(eps) }).collect();
        let (m, e) = assemble_product(&hv, points, &regions, tol)?;
        total += m;
        err += e;
    }
    Ok(CovarianceMatrix { points: points.to_vec(), entries: total, jitter_applied: 0.0, tag: ProcessTag::ZEps, entry_error: err })
}

/// Var(Z_target | Z_given) as the Schur complement, via Cholesky solves on C_gg.
pub fn conditional_variance(c: &DMatrix<f64>, target: usize, given: &[usize]) -> Result<f64> {
    let n = c.nrows();
    if target >= n || given.iter().any(|&g| g >= n) {
        return Err(Error::arg("index out of range"));
    }
    if given.contains(&target) {
        return Err(Error::arg("target is among the conditioning indices"));
    }
    let ctt = c[(target, target)];
    if given.is_empty() {
        return Ok(ctt);
    }
    let k = given.len();
    let cgg = DMatrix::from_fn(k, k, |a, b| c[(given[a], given[b])]);
    let cgt = DVector::from_fn(k, |a, _| c[(given[a], target)]);
    let f = cholesky_with_jitter(&cgg)?;
    let z = f
        .l
        .solve_lower_triangular(&cgt)
        .ok_or_else(|| Error::Conditioning("singular Cholesky factor".into()))?;
    let v = ctt - z.norm_squared();
    if v >= 0.0 {
        Ok(v)
    } else if v >= -1e-12 * ctt.abs().max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Conditioning(format!("conditional variance {v:e} is negative beyond rounding")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LndMode {
    /// Strip process Y_ℓ along a configuration sorted in coordinate ℓ.
    Directional(usize),
    /// The sheet B along a configuration with t^j ≤ t^n componentwise.
    Sectorial,
}

#[derive(Debug, Clone, Serialize)]
pub struct LndCertificate {
    pub mode: LndMode,
    pub ordered_points: Vec<Vec<f64>>,
    pub cond_variance: f64,
    pub lower_bound_ref: f64,
    pub ratio: f64,
    /// Constant c with cond_variance = c·lower_bound_ref on this configuration.
    pub fitted_c: f64,
    pub jitter_applied: f64,
}

/// Conditional variance of the last point given the others against its reference scale.
pub fn lnd_certificate(h: &HurstFunctional, points: &[Vec<f64>], mode: LndMode, eps: f64, tol: f64) -> Result<LndCertificate> {
    let n = points.len();
    if !(2..=50).contains(&n) {
        return Err(Error::arg(format!("certificate needs 2..=50 points, got {n}")));
    }
    let dims = h.n_dims();
    check_points(points, dims)?;
    let last = &points[n - 1];
    let h_last = h.eval(last)?;
    let (cov, reference) = match mode {
        LndMode::Directional(l) => {
            if l >= dims {
                return Err(Error::arg(format!("axis {l} out of range")));
            }
            if points.windows(2).any(|w| w[0][l] > w[1][l]) {
                return Err(Error::arg(format!("points are not sorted in coordinate {l}")));
            }
            let cov = covariance_piece(h, ProcessTag::Y(l), eps, points, tol)?;
            let gap = last[l] - points[n - 2][l];
            (cov, gap.abs().powf(2.0 * h_last[l]))
        }
        LndMode::Sectorial => {
            for p in &points[..n - 1] {
                if p.iter().zip(last).any(|(a, b)| a > b) {
                    return Err(Error::arg(format!("point {p:?} is not dominated by the last point")));
                }
            }
            let cov = covariance_b(h, points, tol)?;
            let reference = (0..dims)
                .map(|j| {
                    let closest = points[..n - 1].iter().map(|p| last[j] - p[j]).fold(last[j], f64::min);
                    closest.powf(2.0 * h_last[j])
                })
                .sum();
            (cov, reference)
        }
    };
    let given: Vec<usize> = (0..n - 1).collect();
    let cf = cholesky_with_jitter(&DMatrix::from_fn(n - 1, n - 1, |a, b| cov.entries[(a, b)]))?;
    let cond_variance = conditional_variance(&cov.entries, n - 1, &given)?;
    let ratio = cond_variance / reference;
    Ok(LndCertificate {
        mode,
        ordered_points: points.to_vec(),
        cond_variance,
        lower_bound_ref: reference,
        ratio,
        fitted_c: ratio,
        jitter_applied: cf.jitter,
    })
}

/// Random configuration of `n` points in `interval`, ordered as `mode` requires:
/// sorted in coordinate ℓ, or with every point dominated by the last.
pub fn random_configuration(rng: &mut ChaCha8Rng, interval: &Interval, n: usize, mode: LndMode) -> Vec<Vec<f64>> {
    match mode {
        LndMode::Directional(l) => {
            let mut pts: Vec<Vec<f64>> = (0..n).map(|_| uniform_in(rng, interval)).collect();
            pts.sort_by(|a, b| a[l].total_cmp(&b[l]));
            pts
        }
        LndMode::Sectorial => {
            let upper = Interval { lo: interval.center(), hi: interval.hi.clone() };
            let last = uniform_in(rng, &upper);
            let below = Interval { lo: interval.lo.clone(), hi: last.clone() };
            let mut pts: Vec<Vec<f64>> = (0..n - 1).map(|_| uniform_in(rng, &below)).collect();
            pts.push(last);
            pts
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LndSizeSummary {
    pub n: usize,
    pub r_min: f64,
    pub r_median: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LndSweep {
    /// Certificates per configuration size, in the order of `sizes`.
    pub certificates: Vec<Vec<LndCertificate>>,
    pub summary: Vec<LndSizeSummary>,
    /// max r_min / min r_min over sizes.
    pub r_min_spread: f64,
}

/// Certificates on `configurations` random ordered configurations for each size.
pub fn lnd_sweep(
    h: &HurstFunctional,
    interval: &Interval,
    mode: LndMode,
    eps: f64,
    sizes: &[usize],
    configurations: usize,
    seed: u64,
    tol: f64,
) -> Result<LndSweep> {
    if configurations == 0 || sizes.is_empty() {
        return Err(Error::arg("need at least one size and one configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut certificates = Vec::with_capacity(sizes.len());
    let mut summary = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let configs: Vec<Vec<Vec<f64>>> = (0..configurations).map(|_| random_configuration(&mut rng, interval, n, mode)).collect();
        let certs: Vec<LndCertificate> = configs.par_iter().map(|p| lnd_certificate(h, p, mode, eps, tol)).collect::<Result<_>>()?;
        let ratios: Vec<f64> = certs.iter().map(|c| c.ratio).collect();
        let r_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        summary.push(LndSizeSummary { n, r_min, r_median: crate::fit::median(&ratios).unwrap(), r_max });
        certificates.push(certs);
    }
    let lo = summary.iter().map(|s| s.r_min).fold(f64::INFINITY, f64::min);
    let hi = summary.iter().map(|s| s.r_min).fold(f64::NEG_INFINITY, f64::max);
    Ok(LndSweep { certificates, summary, r_min_spread: hi / lo })
}

/// Smallest ratio Var(Σ u_j ΔY_j) / Σ u_j² Var(ΔY_j) for increments ΔY_j = Y_ℓ(t^j) − Y_ℓ(t^{j−1}), Y_ℓ(t^0) = 0.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementGramReport {
    /// Exact minimum over u: the smallest eigenvalue of the diagonally normalized increment covariance.
    pub c_exact: f64,
    /// Minimum over the random u vectors drawn.
    pub c_sampled: f64,
    pub n_u: usize,
}

pub fn increment_gram_report(h: &HurstFunctional, points: &[Vec<f64>], axis: usize, eps: f64, n_u: usize, seed: u64, tol: f64) -> Result<IncrementGramReport> {
    let n = points.len();
    if n < 2 {
        return Err(Error::arg("need at least two points"));
    }
    if points.windows(2).any(|w| w[0][axis] >= w[1][axis]) {
        return Err(Error::arg(format!("points must be strictly increasing in coordinate {axis}")));
    }
    let c = covariance_piece(h, ProcessTag::Y(axis), eps, points, tol)?.entries;
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if j + 1 == i { -1.0 } else { 0.0 });
    let d = &a * c * a.transpose();
    let scale = DVector::from_fn(n, |i, _| 1.0 / d[(i, i)].sqrt());
    let normalized = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * scale[i] * scale[j]);
    let c_exact = normalized.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_sampled = f64::INFINITY;
    for _ in 0..n_u {
        let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let num = (u.transpose() * &d * &u)[(0, 0)];
        let den: f64 = (0..n).map(|i| u[i] * u[i] * d[(i, i)]).sum();
        c_sampled = c_sampled.min(num / den);
    }
    Ok(IncrementGramReport { c_exact, c_sampled, n_u })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperadditivityReport {
    pub n_u: usize,
    /// min over u of uᵀ Cov(B) u − Σ_ℓ uᵀ Cov(Y_ℓ) u, for unit vectors u.
    pub min_margin_strips: f64,
    /// min over u of uᵀ Cov(B) u − uᵀ Cov(X0) u.
    pub min_margin_liouville: f64,
}

/// Quadratic-form comparison of the sheet against its Liouville part and strip pieces.
pub fn superadditivity_report(h: &HurstFunctional, points: &[Vec<f64>], eps: f64, n_u: usize, seed: u64, tol: f64) -> Result<SuperadditivityReport> {
    let b = covariance_b(h, points, tol)?.entries;
    let x0 = covariance_piece(h, ProcessTag::X0, eps, points, tol)?.entries;
    let mut strips = DMatrix::zeros(points.len(), points.len());
    for l in 0..h.n_dims() {
        strips += covariance_piece(h, ProcessTag::Y(l), eps, points, tol)?.entries;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ms, mut ml) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..n_u {
        let mut u = DVector::from_fn(points.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        u /= u.norm();
        let q = |m: &DMatrix<f64>| (u.transpose() * m * &u)[(0, 0)];
        let qb = q(&b);
        ms = ms.min(qb - q(&strips));
        ml = ml.min(qb - q(&x0));
    }
    Ok(SuperadditivityReport { n_u, min_margin_strips: ms, min_margin_liouville: ml })
}

#[derive(Debug, Clone, Serialize)]
pub struct IncrementReport {
    pub delta: f64,
    pub pairs_used: usize,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// E[(Z^β(t) − Z^{β'}(t))²] / |β − β'|² for constant-exponent pairs near H(t).
    pub cross_hurst_ratios: Vec<f64>,
    pub cross_hurst_max: f64,
}

fn uniform_in(rng: &mut ChaCha8Rng, interval: &Interval) -> Vec<f64> {
    interval.lo.iter().zip(&interval.hi).map(|(&a, &b)| if b > a { rng.random_range(a..=b) } else { a }).collect()
}

const INCREMENT_TOL: f64 = 1e-11;

/// Increment variances E[(B(t) − B(s))²] over random pairs with |s − t| < delta, as
/// ratios to Σ_ℓ |t_ℓ − s_ℓ|^{2H_ℓ(u)} at the componentwise midpoint u.
pub fn increment_bounds_report(h: &HurstFunctional, interval: &Interval, n_pairs: usize, delta: f64, seed: u64) -> Result<IncrementReport> {
    let dims = h.n_dims();
    if interval.n_dims() != dims || !interval.is_positive() {
        return Err(Error::arg("interval must match the functional's dimension and lie in (0, inf)^N"));
    }
    if !(delta > 0.0) {
        return Err(Error::arg("delta must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut attempts = 0usize;
    while pairs.len() < n_pairs {
        attempts += 1;
        if attempts > 1000 * n_pairs.max(1) {
            return Err(Error::arg("could not place pairs with |s - t| < delta inside the interval"));
        }
        let s = uniform_in(&mut rng, interval);
        let dir: Vec<f64> = (0..dims).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = delta * rng.random::<f64>();
        let t: Vec<f64> = s.iter().zip(&dir).map(|(a, d)| a + r * d / norm).collect();
        if interval.contains(&t) {
            pairs.push((s, t));
        }
    }
    let results: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(s, t)| -> Result<Option<f64>> {
            if s == t {
                return Ok(None);
            }
            let c = covariance_b(h, &[s.clone(), t.clone()], INCREMENT_TOL)?.entries;
            let inc = c[(0, 0)] + c[(1, 1)] - 2.0 * c[(0, 1)];
            let mid: Vec<f64> = s.iter().zip(t).map(|(a, b)| 0.5 * (a + b)).collect();
            let hm = h.eval(&mid)?;
            let reference: f64 = (0..dims).map(|l| (t[l] - s[l]).abs().powf(2.0 * hm[l])).sum();
            Ok(if reference > 0.0 { Some(inc / reference) } else { None })
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = results.into_iter().flatten().collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let n_cross = n_pairs.min(100);
    let mut cross_cfg = Vec::with_capacity(n_cross);
    for _ in 0..n_cross {
        let t = uniform_in(&mut rng, interval);
        let beta = h.eval(&t)?;
        let beta2: Vec<f64> = beta.iter().map(|b| (b + rng.random_range(-0.05..0.05)).clamp(0.02, 0.98)).collect();
        cross_cfg.push((t, beta, beta2));
    }
    let cross_hurst_ratios: Vec<f64> = cross_cfg
        .par_iter()
        .map(|(t, b1, b2)| -> Result<Option<f64>> {
            let dist2: f64 = b1.iter().zip(b2).map(|(a, b)| (a - b).powi(2)).sum();
            if dist2 == 0.0 {
                return Ok(None);
            }
            let (mut v1, mut v2, mut c12) = (1.0, 1.0, 1.0);
            for l in 0..t.len() {
                let k1 = KernelSpec::moving_average(t[l], b1[l]);
                let k2 = KernelSpec::moving_average(t[l], b2[l]);
                v1 *= cross_integral_1d(&k1, &k1, Region1D::FullLine, INCREMENT_TOL)?.value;
                v2 *= cross_integral_1d(&k2, &k2, Region1D::FullLine, INCREMENT_TOL)?.value;
                c12 *= cross_integral_1d(&k1, &k2, Region1D::FullLine, INCREMENT_TOL)?.value;
            }
            Ok(Some((v1 + v2 - 2.0 * c12) / dist2))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let cross_hurst_max = cross_hurst_ratios.iter().cloned().fold(0.0, f64::max);
    Ok(IncrementReport { delta, pairs_used: ratios.len(), ratios, min_ratio, max_ratio, cross_hurst_ratios, cross_hurst_max })
}

/// Symmetric lag grid s = k·spacing, k_ℓ ∈ {−m_ℓ, …, m_ℓ}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagGrid {
    pub spacing: Vec<f64>,
    pub half_counts: Vec<usize>,
}

impl LagGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.half_counts.iter().map(|m| 2 * m + 1).collect()
    }

    pub fn lags(&self) -> Vec<Vec<f64>> {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|mut flat| {
                let mut s = vec![0.0; shape.len()];
                for l in (0..shape.len()).rev() {
                    let k = flat % shape[l];
                    flat /= shape[l];
                    s[l] = (k as f64 - self.half_counts[l] as f64) * self.spacing[l];
                }
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub lags: Vec<Vec<f64>>,
    pub correlation: Vec<f64>,
    /// Rectangle-rule transform Σ_s e^{−i⟨s, ξ⟩} r(s) Π spacing on the FFT frequency grid.
    pub spectral_re: Vec<f64>,
    pub spectral_im: Vec<f64>,
    /// Frequency spacing 2π / ((2m_ℓ + 1)·spacing_ℓ) per axis; frequencies are in FFT order.
    pub frequency_spacing: Vec<f64>,
    pub lag_window: Vec<f64>,
}

/// Correlation of the increment Y_η(t) = B(t + η) − B(t) with Y_η(t + s) over a lag grid.
pub fn increment_correlation(h: &HurstFunctional, t: &[f64], eta: &[f64], lags: &LagGrid, tol: f64) -> Result<CorrelationReport> {
    let dims = h.n_dims();
    if t.len() != dims || eta.len() != dims || lags.spacing.len() != dims || lags.half_counts.len() != dims {
        return Err(Error::arg("t, eta and the lag grid must all have N components"));
    }
    if eta.iter().all(|&x| x == 0.0) {
        return Err(Error::arg("eta must be non-zero"));
    }
    let shifts = lags.lags();
    let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let correlation: Vec<f64> = shifts
        .par_iter()
        .map(|s| -> Result<f64> {
            let pts = vec![t.to_vec(), add(t, eta), add(t, s), add(&add(t, s), eta)];
            check_points(&pts, dims)?;
            let c = covariance_b(h, &pts, tol)?.entries;
            // indices: 0 = t, 1 = t+η, 2 = t+s, 3 = t+s+η
            let cov = c[(3, 1)] - c[(3, 0)] - c[(2, 1)] + c[(2, 0)];
            let v0 = c[(1, 1)] + c[(0, 0)] - 2.0 * c[(1, 0)];
            let vs = c[(3, 3)] + c[(2, 2)] - 2.0 * c[(3, 2)];
            Ok((cov / (v0 * vs).sqrt()).clamp(-1.0, 1.0))
        })
        .collect::<Result<_>>()?;

    let shape = lags.shape();
    let mut buf: Vec<Complex<f64>> = correlation.iter().map(|&r| Complex::new(r, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let total = buf.len();
    let mut stride = 1;
    for l in (0..dims).rev() {
        let len = shape[l];
        let fft = planner.plan_fft_forward(len);
        let mut line = vec![Complex::new(0.0, 0.0); len];
        let outer = total / (len * stride);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * len * stride + inner;
                for k in 0..len {
                    line[k] = buf[base + k * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    // the grid starts at −m·spacing, not at 0
                    let phase = 2.0 * std::f64::consts::PI * (j * lags.half_counts[l]) as f64 / len as f64;
                    buf[base + j * stride] = v * Complex::new(phase.cos(), phase.sin()) * lags.spacing[l];
                }
            }
        }
        stride *= len;
    }
    let frequency_spacing = (0..dims).map(|l| 2.0 * std::f64::consts::PI / (shape[l] as f64 * lags.spacing[l])).collect();
    let lag_window = (0..dims).map(|l| lags.half_counts[l] as f64 * lags.spacing[l]).collect();
    Ok(CorrelationReport {
        lags: shifts,
        correlation,
        spectral_re: buf.iter().map(|c| c.re).collect(),
        spectral_im: buf.iter().map(|c| c.im).collect(),
        frequency_spacing,
        lag_window,
    })
}
