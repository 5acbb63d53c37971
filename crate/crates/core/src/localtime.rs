//! Local times of sampled fields: the existence test, Gaussian-mollified occupation
//! densities, the occupation identity, and power-law fits of local-time mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, median};
use crate::grid::{Grid, Interval};
use crate::hurst::{tau_and_beta, HurstFunctional, Regime, TIE_TOL};
use crate::simulate::FieldSample;

/// Relative tolerance of the bin-grid quadrature of a mollified local time.
pub const SPATIAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Existence {
    ExistsL2,
    None,
    Boundary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub verdict: Existence,
    pub d: usize,
    /// H̄_ℓ = max over the refinement grid of H_ℓ(t).
    pub h_bar: Vec<f64>,
    pub sum_inverse_h_bar: f64,
    pub min_sum_inverse: f64,
    pub max_sum_inverse: f64,
}

/// Compares Σ_ℓ 1/H_ℓ(t) against d over a refinement grid of `interval`.
pub fn existence_predicate(h: &HurstFunctional, interval: &Interval, d: usize, resolution: &[usize]) -> Result<ExistenceReport> {
    if d == 0 {
        return Err(Error::arg("d must be at least 1"));
    }
    let grid = Grid::new(interval.clone(), resolution.to_vec())?;
    let n = h.n_dims();
    let mut h_bar = vec![f64::NEG_INFINITY; n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in grid.points() {
        let hp = h.eval(&p)?;
        for (b, v) in h_bar.iter_mut().zip(&hp) {
            *b = b.max(*v);
        }
        let s: f64 = hp.iter().map(|x| 1.0 / x).sum();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let df = d as f64;
    let verdict = if lo > df + TIE_TOL {
        Existence::ExistsL2
    } else if lo < df - TIE_TOL {
        Existence::None
    } else {
        Existence::Boundary
    };
    let sum_inverse_h_bar = h_bar.iter().map(|x| 1.0 / x).sum();
    Ok(ExistenceReport { verdict, d, h_bar, sum_inverse_h_bar, min_sum_inverse: lo, max_sum_inverse: hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeSet {
    /// Every grid point.
    All,
    /// Closed sub-rectangle [lo, hi].
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open Euclidean ball U(center, radius).
    Ball { center: Vec<f64>, radius: f64 },
}

impl TimeSet {
    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            TimeSet::All => true,
            TimeSet::Box { lo, hi } => t.iter().zip(lo.iter().zip(hi)).all(|(&x, (&a, &b))| a <= x && x <= b),
            TimeSet::Ball { center, radius } => t.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < radius * radius,
        }
    }

    /// Grid points in the set; errors if the set leaves the grid's interval.
    pub fn indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        let iv = &grid.interval;
        let n = grid.n_dims();
        let inside = match self {
            TimeSet::All => true,
            TimeSet::Box { lo, hi } => lo.len() == n && hi.len() == n && iv.contains(lo) && iv.contains(hi),
            TimeSet::Ball { center, radius } => {
                center.len() == n && (0..n).all(|l| center[l] - radius >= iv.lo[l] && center[l] + radius <= iv.hi[l])
            }
        };
        if !inside {
            return Err(Error::arg(format!("time set {self:?} is not inside the grid interval")));
        }
        Ok((0..grid.n_points()).filter(|&p| self.contains(&grid.point(p))).collect())
    }
}

/// Regular bins in ℝ^d; bin i along axis j is centred at lo_j + (i + ½)·spacing_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialBins {
    pub lo: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl SpatialBins {
    pub fn new(lo: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != spacing.len() || lo.len() != counts.len() {
            return Err(Error::arg("bin bounds, spacings and counts must have equal non-zero length"));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) || counts.contains(&0) {
            return Err(Error::arg("bin spacings and counts must be positive"));
        }
        Ok(SpatialBins { lo, spacing, counts })
    }

    /// Bins covering [min − pad, max + pad] of the field over the time set, with
    /// pad = 10·k^{−1/2} and spacing k^{−1/2}/4.
    pub fn covering(field: &FieldSample, set: &TimeSet, k: f64) -> Result<Self> {
        let idx = set.indices(&field.grid)?;
        if idx.is_empty() {
            return Err(Error::arg("time set contains no grid points"));
        }
        let w = k.sqrt().recip();
        let (pad, step) = (10.0 * w, 0.25 * w);
        let mut lo = vec![f64::INFINITY; field.d];
        let mut hi = vec![f64::NEG_INFINITY; field.d];
        for &p in &idx {
            for (j, &v) in field.at(p).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let counts: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a + 2.0 * pad) / step).ceil() as usize).collect();
        SpatialBins::new(lo.iter().map(|a| a - pad).collect(), vec![step; field.d], counts)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n_bins(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn bin_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn center(&self, mut flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for j in (0..self.dim()).rev() {
            let i = flat % self.counts[j];
            flat /= self.counts[j];
            x[j] = self.lo[j] + (i as f64 + 0.5) * self.spacing[j];
        }
        x
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.n_bins()).map(|b| self.center(b)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalTimeEstimate {
    pub bins: SpatialBins,
    pub time_set: TimeSet,
    pub k: f64,
    pub values: Vec<f64>,
    /// Time-cell volume Δt attached to each grid point.
    pub quadrature_weight: f64,
    /// λ_N of the time set as seen by the grid: (points in set)·Δt.
    pub time_measure: f64,
}

impl LocalTimeEstimate {
    /// Σ value·bin_volume, which should reproduce `time_measure`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bins.bin_volume()
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::arg(format!("mollification parameter k must be positive, got {k}")));
    }
    Ok(())
}

/// Normalized Gaussian kernel with precision k in ℝ^d.
fn kernel_at(k: f64, d: usize, dist2: f64) -> f64 {
    (k / (2.0 * std::f64::consts::PI)).powf(0.5 * d as f64) * (-0.5 * k * dist2).exp()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nonempty_indices(field: &FieldSample, set: &TimeSet) -> Result<Vec<usize>> {
    let idx = set.indices(&field.grid)?;
    if idx.is_empty() {
        return Err(Error::arg("time set contains no grid points"));
    }
    Ok(idx)
}

/// L_k(x, C) = Σ_{t ∈ C} (k/2π)^{d/2} exp(−k|B(t) − x|²/2)·Δt.
pub fn local_time_at(field: &FieldSample, set: &TimeSet, x: &[f64], k: f64) -> Result<f64> {
    check_k(k)?;
    if x.len() != field.d {
        return Err(Error::arg(format!("level has {} components, field has d = {}", x.len(), field.d)));
    }
    let idx = nonempty_indices(field, set)?;
    Ok(sum_kernel(field, &idx, x, k))
}

fn sum_kernel(field: &FieldSample, idx: &[usize], x: &[f64], k: f64) -> f64 {
    let dt = field.grid.cell_volume();
    idx.iter().map(|&p| kernel_at(k, field.d, dist2(field.at(p), x))).sum::<f64>() * dt
}

pub fn mollified_local_time(field: &FieldSample, set: &TimeSet, bins: &SpatialBins, k: f64) -> Result<LocalTimeEstimate> {
    check_k(k)?;
    if bins.dim() != field.d {
        return Err(Error::arg("bin dimension differs from the field dimension"));
    }
    let idx = nonempty_indices(field, set)?;
    let values: Vec<f64> = (0..bins.n_bins()).into_par_iter().map(|b| sum_kernel(field, &idx, &bins.center(b), k)).collect();
    let dt = field.grid.cell_volume();
    Ok(LocalTimeEstimate {
        bins: bins.clone(),
        time_set: set.clone(),
        k,
        values,
        quadrature_weight: dt,
        time_measure: idx.len() as f64 * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KRule {
    Fixed { k: f64 },
    /// k^{−1/2} = factor × median |ΔB| over adjacent grid points.
    GridIncrement { factor: f64 },
}

impl Default for KRule {
    fn default() -> Self {
        KRule::GridIncrement { factor: 2.0 }
    }
}

impl KRule {
    pub fn resolve(&self, field: &FieldSample) -> Result<f64> {
        match *self {
            KRule::Fixed { k } => {
                check_k(k)?;
                Ok(k)
            }
            KRule::GridIncrement { factor } => {
                let g = &field.grid;
                let mut incs = Vec::new();
                for p in 0..g.n_points() {
                    let idx = g.multi_index(p);
                    for l in 0..g.n_dims() {
                        if idx[l] + 1 < g.counts[l] {
                            let mut j = idx.clone();
                            j[l] += 1;
                            incs.push(dist2(field.at(p), field.at(g.flat_index(&j))).sqrt());
                        }
                    }
                }
                let m = median(&incs).ok_or_else(|| Error::arg("grid has no adjacent points"))?;
                if !(m > 0.0) {
                    return Err(Error::arg("field has zero median increment; use a fixed k"));
                }
                Ok((factor * m).powi(-2))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant,
    /// Indicator of the closed box [lo, hi] in ℝ^d.
    Indicator { lo: Vec<f64>, hi: Vec<f64> },
    /// exp(−|x − center|² / (2 width²)).
    GaussianBump { center: Vec<f64>, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Indicator { lo, hi } => {
                if x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&a, &b))| a <= v && v <= b) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::GaussianBump { center, width } => (-dist2(x, center) / (2.0 * width * width)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OccupationResidual {
    /// ∫_C f(B(t)) dt on the time grid.
    pub path_side: f64,
    /// Σ_bins f(x)·L_k(x, C)·bin_volume.
    pub density_side: f64,
    pub residual: f64,
}

pub const RESIDUAL_FLOOR: f64 = 1e-12;

pub fn occupation_identity_residual(field: &FieldSample, f: &TestFunction, set: &TimeSet, bins: &SpatialBins, k: f64) -> Result<OccupationResidual> {
    let est = mollified_local_time(field, set, bins, k)?;
    let idx = nonempty_indices(field, set)?;
    let path_side = idx.iter().map(|&p| f.eval(field.at(p))).sum::<f64>() * est.quadrature_weight;
    let density_side = est.values.iter().enumerate().map(|(b, v)| f.eval(&bins.center(b)) * v).sum::<f64>() * bins.bin_volume();
    let residual = (path_side - density_side).abs() / path_side.abs().max(RESIDUAL_FLOOR);
    Ok(OccupationResidual { path_side, density_side, residual })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Radii or side lengths, decreasing.
    pub scales: Vec<f64>,
    pub observed: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub theoretical_exponent: f64,
    /// 95% half-width of the slope.
    pub ci_halfwidth: f64,
    /// slope ≥ theoretical − ci: the mass bound is an upper bound, i.e. a lower bound on the exponent.
    pub consistent_with_bound: bool,
}

pub const MIN_SCALING_ENSEMBLE: usize = 30;

fn fit_scaling(scales: &[f64], observed: &[f64], theoretical: f64) -> Result<ScalingFit> {
    if observed.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::arg(format!("observed values must be positive for a log-log fit, got {observed:?}")));
    }
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = observed.iter().map(|v| v.ln()).collect();
    let lf = least_squares(&xs, &ys)?;
    let ci = lf.ci_halfwidth(0.95);
    Ok(ScalingFit {
        scales: scales.to_vec(),
        observed: observed.to_vec(),
        slope: lf.slope,
        intercept: lf.intercept,
        r2: lf.r2,
        theoretical_exponent: theoretical,
        ci_halfwidth: ci,
        consistent_with_bound: lf.slope >= theoretical - ci,
    })
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 2 {
        return Err(Error::arg("a scaling fit needs at least two scales"));
    }
    if scales.iter().any(|&r| !(r > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("scales must be positive and strictly decreasing"));
    }
    Ok(())
}

fn check_ensemble(ensemble: &[FieldSample], min: usize) -> Result<()> {
    if ensemble.len() < min {
        return Err(Error::arg(format!("ensemble needs at least {min} paths, got {}", ensemble.len())));
    }
    if ensemble.iter().any(|f| f.grid != ensemble[0].grid || f.d != ensemble[0].d) {
        return Err(Error::arg("ensemble paths do not share a grid"));
    }
    Ok(())
}

fn finite_beta(h_vec: &[f64], d: usize) -> Result<f64> {
    let rep = tau_and_beta(h_vec, d)?;
    match (rep.regime, rep.beta) {
        (Regime::Exists, Some(b)) => Ok(b),
        _ => Err(Error::arg(format!("H = {h_vec:?}, d = {d} is outside the existence regime; no local-time exponent"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevelMode {
    Fixed { x: Vec<f64> },
    /// x = B(t) of each path, read at the grid point nearest to t.
    RandomLevel,
}

fn nearest_index(grid: &Grid, t: &[f64]) -> usize {
    let idx: Vec<usize> = (0..grid.n_dims())
        .map(|l| {
            let s = grid.spacing(l);
            if s == 0.0 {
                0
            } else {
                (((t[l] - grid.interval.lo[l]) / s).round().max(0.0) as usize).min(grid.counts[l] - 1)
            }
        })
        .collect();
    grid.flat_index(&idx)
}

/// Median over the ensemble of L_k(x, U(t, r)) against r, with k from `k_rule` per path.
pub fn ball_scaling_fit(ensemble: &[FieldSample], h: &HurstFunctional, t: &[f64], mode: &LevelMode, radii: &[f64], k_rule: KRule) -> Result<ScalingFit> {
    check_scales(radii)?;
    check_ensemble(ensemble, MIN_SCALING_ENSEMBLE)?;
    let d = ensemble[0].d;
    let theoretical = finite_beta(&h.eval(t)?, d)?;
    let sets: Vec<TimeSet> = radii.iter().map(|&r| TimeSet::Ball { center: t.to_vec(), radius: r }).collect();
    let grid = &ensemble[0].grid;
    let members: Vec<Vec<usize>> = sets.iter().map(|s| s.indices(grid)).collect::<Result<_>>()?;
    if members.iter().any(|m| m.is_empty()) {
        return Err(Error::arg("a ball contains no grid points; refine the grid or enlarge the radii"));
    }
    let center = nearest_index(grid, t);
    let per_path: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let k = k_rule.resolve(f)?;
            let x = match mode {
                LevelMode::Fixed { x } => x.clone(),
                LevelMode::RandomLevel => f.at(center).to_vec(),
            };
            if x.len() != d {
                return Err(Error::arg("level dimension differs from d"));
            }
            Ok(members.iter().map(|m| sum_kernel(f, m, &x, k)).collect())
        })
        .collect::<Result<_>>()?;
    let observed: Vec<f64> = (0..radii.len())
        .map(|i| median(&per_path.iter().map(|v| v[i]).collect::<Vec<_>>()).unwrap())
        .collect();
    fit_scaling(radii, &observed, theoretical)
}

/// Monte Carlo E[L_k(x, [a, a + ⟨s⟩])^n] against s, for even n ∈ {2, 4}.
pub fn moment_scaling_fit(ensemble: &[FieldSample], h: &HurstFunctional, x: &[f64], a: &[f64], sides: &[f64], n: u32, k_rule: KRule) -> Result<(ScalingFit, Vec<f64>)> {
    if n != 2 && n != 4 {
        return Err(Error::arg(format!("moment order must be 2 or 4, got {n}")));
    }
    check_scales(sides)?;
    check_ensemble(ensemble, MIN_SCALING_ENSEMBLE)?;
    let d = ensemble[0].d;
    if x.len() != d {
        return Err(Error::arg("level dimension differs from d"));
    }
    let grid = &ensemble[0].grid;
    let sets: Vec<TimeSet> = sides
        .iter()
        .map(|&s| TimeSet::Box { lo: a.to_vec(), hi: a.iter().map(|v| v + s).collect() })
        .collect();
    let members: Vec<Vec<usize>> = sets.iter().map(|s| s.indices(grid)).collect::<Result<_>>()?;
    if members.iter().any(|m| m.is_empty()) {
        return Err(Error::arg("a cube contains no grid points"));
    }
    // H̄ over the largest cube
    let mut h_bar = vec![f64::NEG_INFINITY; h.n_dims()];
    for &p in &members[0] {
        for (b, v) in h_bar.iter_mut().zip(h.eval(&grid.point(p))?) {
            *b = b.max(v);
        }
    }
    let theoretical = n as f64 * finite_beta(&h_bar, d)?;
    let per_path: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let k = k_rule.resolve(f)?;
            Ok(members.iter().map(|m| sum_kernel(f, m, x, k).powi(n as i32)).collect())
        })
        .collect::<Result<_>>()?;
    let m = per_path.len() as f64;
    let mut moments = Vec::with_capacity(sides.len());
    let mut se = Vec::with_capacity(sides.len());
    for i in 0..sides.len() {
        let v: Vec<f64> = per_path.iter().map(|p| p[i]).collect();
        let mean = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        moments.push(mean);
        se.push((var / m).sqrt());
    }
    Ok((fit_scaling(sides, &moments, theoretical)?, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::SamplerTag;

    fn constant_field(grid: Grid, value: f64) -> FieldSample {
        let n = grid.n_points();
        FieldSample { grid, d: 1, values: vec![value; n], seed: 0, sampler: SamplerTag::Cholesky, noise: None }
    }

    #[test]
    fn existence_examples() {
        let i2 = Interval::cube(2, 1.0, 2.0).unwrap();
        let i1 = Interval::cube(1, 1.0, 2.0).unwrap();
        let h = HurstFunctional::constant(&[0.5, 0.5]).unwrap();
        assert_eq!(existence_predicate(&h, &i2, 3, &[3, 3]).unwrap().verdict, Existence::ExistsL2);
        let h = HurstFunctional::constant(&[0.4]).unwrap();
        assert_eq!(existence_predicate(&h, &i1, 3, &[3]).unwrap().verdict, Existence::None);
        let h = HurstFunctional::constant(&[0.5]).unwrap();
        assert_eq!(existence_predicate(&h, &i1, 2, &[3]).unwrap().verdict, Existence::Boundary);
    }

    #[test]
    fn constant_field_kernel_peak() {
        let g = Grid::uniform(&[1.0], &[2.0], &[11]).unwrap();
        let f = constant_field(g, 0.3);
        let k = 16.0;
        let v = local_time_at(&f, &TimeSet::All, &[0.3], k).unwrap();
        let lambda = 11.0 * 0.1;
        assert!((v - lambda * (k / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mass_is_time_measure() {
        let g = Grid::uniform(&[1.0], &[2.0], &[21]).unwrap();
        let mut f = constant_field(g, 0.0);
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = (i as f64 * 0.7).sin();
        }
        let k = 100.0;
        let bins = SpatialBins::covering(&f, &TimeSet::All, k).unwrap();
        let est = mollified_local_time(&f, &TimeSet::All, &bins, k).unwrap();
        assert!((est.total_mass() - est.time_measure).abs() <= SPATIAL_TOL * est.time_measure);
        // far tail
        let far = local_time_at(&f, &TimeSet::All, &[1.0 + 10.0 / k.sqrt()], k).unwrap();
        assert!(far <= est.time_measure * (k / (2.0 * std::f64::consts::PI)).sqrt() * (-50.0f64).exp());
        let r = occupation_identity_residual(&f, &TestFunction::Constant, &TimeSet::All, &bins, k).unwrap();
        assert!(r.residual < SPATIAL_TOL);
    }

    #[test]
    fn empty_and_outside_sets() {
        let g = Grid::uniform(&[1.0], &[2.0], &[11]).unwrap();
        let f = constant_field(g, 0.0);
        let empty = TimeSet::Box { lo: vec![1.01], hi: vec![1.02] };
        assert!(local_time_at(&f, &empty, &[0.0], 1.0).is_err());
        let outside = TimeSet::Ball { center: vec![1.05], radius: 0.1 };
        assert!(local_time_at(&f, &outside, &[0.0], 1.0).is_err());
        assert!(local_time_at(&f, &TimeSet::All, &[0.0], 0.0).is_err());
    }

    #[test]
    fn moment_order_and_radii_checks() {
        let g = Grid::uniform(&[1.0], &[2.0], &[11]).unwrap();
        let ens = vec![constant_field(g, 0.0); 30];
        let h = HurstFunctional::constant(&[0.5]).unwrap();
        let kr = KRule::Fixed { k: 4.0 };
        assert!(moment_scaling_fit(&ens, &h, &[0.0], &[1.0], &[0.5, 0.25], 3, kr).is_err());
        assert!(ball_scaling_fit(&ens, &h, &[1.5], &LevelMode::RandomLevel, &[0.2], kr).is_err());
        assert!(ball_scaling_fit(&ens, &h, &[1.5], &LevelMode::RandomLevel, &[0.1, 0.2], kr).is_err());
    }
}
