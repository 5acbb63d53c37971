//! Sample paths of the (N, d) sheet on a grid: exact Gaussian sampling from the
//! covariance matrix, and a discretized white-noise integral of the moving-average kernel.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::covariance_b;
use crate::grid::Grid;
use crate::hurst::HurstFunctional;
use crate::kernel::{fbm_normalization, tail_bound, KernelSpec};

pub const DEFAULT_CHOLESKY_CAP: usize = 4096;
pub const DEFAULT_COVARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerTag {
    Cholesky,
    WhiteNoise,
}

impl SamplerTag {
    pub fn code(self) -> u8 {
        match self {
            SamplerTag::Cholesky => 0,
            SamplerTag::WhiteNoise => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SamplerTag::Cholesky),
            1 => Some(SamplerTag::WhiteNoise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub spacing: f64,
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: Grid,
    pub d: usize,
    /// Point-major: `values[p * d + k]` is component k at grid point p.
    pub values: Vec<f64>,
    pub seed: u64,
    pub sampler: SamplerTag,
    pub noise: Option<NoiseSpec>,
}

impl FieldSample {
    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn at(&self, p: usize) -> &[f64] {
        &self.values[p * self.d..(p + 1) * self.d]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.d).cloned().collect()
    }
}

/// Seed of replicate r in an ensemble started from `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_grid(grid: &Grid) -> Result<()> {
    if !grid.interval.is_positive() {
        return Err(Error::arg("sampling grid must lie in (0, inf)^N"));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 || d > u16::MAX as usize {
        return Err(Error::arg(format!("d = {d} must be in 1..=65535")));
    }
    Ok(())
}

/// Exact sampler: the jittered Cholesky factor of the grid covariance, computed once.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    pub grid: Grid,
    pub factor: DMatrix<f64>,
    pub jitter_applied: f64,
}

impl CholeskySampler {
    pub fn new(h: &HurstFunctional, grid: &Grid) -> Result<Self> {
        Self::with_cap(h, grid, DEFAULT_CHOLESKY_CAP, DEFAULT_COVARIANCE_TOL)
    }

    pub fn with_cap(h: &HurstFunctional, grid: &Grid, cap: usize, tol: f64) -> Result<Self> {
        check_grid(grid)?;
        let n = grid.n_points();
        if n > cap {
            return Err(Error::Size(format!(
                "{n} grid points exceed the exact-sampler cap of {cap}; use the white-noise sampler"
            )));
        }
        let mut cov = covariance_b(h, &grid.points(), tol)?;
        let f = cov.factor()?;
        Ok(CholeskySampler { grid: grid.clone(), factor: f.l, jitter_applied: f.jitter })
    }

    /// Component k uses the standard normals of ChaCha8 stream k under `seed`.
    pub fn sample(&self, d: usize, seed: u64) -> Result<FieldSample> {
        check_d(d)?;
        let n = self.grid.n_points();
        let mut values = vec![0.0; n * d];
        for k in 0..d {
            let mut rng = stream_rng(seed, k as u64);
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &self.factor * z;
            for p in 0..n {
                values[p * d + k] = x[p];
            }
        }
        Ok(FieldSample { grid: self.grid.clone(), d, values, seed, sampler: SamplerTag::Cholesky, noise: None })
    }

    pub fn ensemble(&self, d: usize, seed: u64, m: usize) -> Result<Vec<FieldSample>> {
        (0..m).into_par_iter().map(|r| self.sample(d, replicate_seed(seed, r))).collect()
    }
}

pub fn sample_cholesky(h: &HurstFunctional, grid: &Grid, d: usize, seed: u64) -> Result<FieldSample> {
    CholeskySampler::new(h, grid)?.sample(d, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub spacing: f64,
    /// Lattice left end is −window; defaults to max coordinate + 4.
    #[serde(default)]
    pub window: Option<f64>,
    /// Largest admissible kernel tail mass beyond the window, relative to the variance.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Growth factor of cell widths on the negative half-line; `None` keeps the lattice uniform.
    #[serde(default)]
    pub grading: Option<f64>,
}

fn default_tail_tol() -> f64 {
    0.05
}

impl NoiseConfig {
    pub fn new(spacing: f64) -> Self {
        NoiseConfig { spacing, window: None, tail_tol: default_tail_tol(), grading: None }
    }
}

/// Cell edges along one axis: uniform with spacing s on [0, max coordinate], then
/// uniform or geometrically widening cells down to −window.
fn axis_edges(spacing: f64, max_b: f64, window: f64, grading: Option<f64>) -> Vec<f64> {
    let mut edges: Vec<f64> = match grading {
        None => (1..=(window / spacing).ceil() as i64).map(|j| -(j as f64) * spacing).collect(),
        Some(q) => {
            let mut neg = Vec::new();
            let (mut u, mut width) = (0.0, spacing);
            while u > -window {
                u = (u - width).max(-window);
                neg.push(u);
                width *= q;
            }
            neg
        }
    };
    edges.reverse();
    let pos = (max_b / spacing).ceil() as usize;
    edges.extend((0..=pos).map(|j| j as f64 * spacing));
    edges
}

#[derive(Debug, Clone)]
struct AxisLattice {
    edges: Vec<f64>,
    /// Cells carrying a non-negligible weight for some grid point.
    active: Vec<usize>,
}

enum Weights {
    /// One (grid count × active cells) matrix per axis.
    Separable(Vec<DMatrix<f64>>),
    /// Per grid point, per axis, weights over that axis's active cells.
    General(Vec<Vec<Vec<f64>>>),
}

/// Discretized white-noise integral. Each lattice cell carries an independent
/// N(0, s^N) increment and the kernel is replaced by its cell average.
pub struct WhiteNoiseSampler {
    pub grid: Grid,
    pub spec: NoiseSpec,
    /// Var B(t) minus the variance of the discretized field, per grid point.
    pub residual_variance: Vec<f64>,
    /// Bound on |Cov − Cov_discretized| over all entries: max residual variance.
    pub discretization_bound: f64,
    /// Largest relative kernel tail mass beyond the window.
    pub tail_fraction: f64,
    lattices: Vec<AxisLattice>,
    weights: Weights,
}

const DROP_REL: f64 = 1e-13;

impl AxisLattice {
    fn n_cells(&self) -> usize {
        self.edges.len() - 1
    }
}

/// Cell integrals of the kernel scaled by |cell|^{−1/2}, so that B = Σ Π_ℓ a_ℓ z with z ~ N(0, 1).
fn axis_weights(t: f64, h: f64, edges: &[f64]) -> Vec<f64> {
    let k = KernelSpec::moving_average(t, h);
    edges.windows(2).map(|e| k.integral(e[0], e[1]) / (e[1] - e[0]).sqrt()).collect()
}

impl WhiteNoiseSampler {
    pub fn new(h: &HurstFunctional, grid: &Grid, cfg: NoiseConfig) -> Result<Self> {
        check_grid(grid)?;
        let n = grid.n_dims();
        if h.n_dims() != n {
            return Err(Error::arg("Hurst functional and grid dimensions differ"));
        }
        let s = cfg.spacing;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Configuration(format!("noise spacing must be positive, got {s}")));
        }
        let max_b = grid.interval.hi.iter().cloned().fold(0.0, f64::max);
        let window = cfg.window.unwrap_or(max_b + 4.0);
        if !(window >= max_b + 1.0) {
            return Err(Error::Configuration(format!("window {window} must be at least max coordinate + 1 = {}", max_b + 1.0)));
        }
        if let Some(q) = cfg.grading {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::Configuration(format!("grading factor must be at least 1, got {q}")));
            }
        }
        let edges = axis_edges(s, max_b, window, cfg.grading);
        let n_cells = edges.len() - 1;
        let total_cells = (n_cells as f64).powi(n as i32);
        if total_cells > 5e8 {
            return Err(Error::Configuration(format!("noise lattice of {total_cells:e} cells is too large; increase the spacing")));
        }

        let points = grid.points();
        let hv: Vec<Vec<f64>> = points.iter().map(|p| h.eval(p)).collect::<Result<_>>()?;

        let mut tail_fraction: f64 = 0.0;
        for (p, hp) in points.iter().zip(&hv) {
            for l in 0..n {
                let k = KernelSpec::moving_average(p[l], hp[l]);
                let var = fbm_normalization(hp[l])? * p[l].powf(2.0 * hp[l]);
                tail_fraction = tail_fraction.max(tail_bound(&k, &k, window) / var);
            }
        }
        if tail_fraction > cfg.tail_tol {
            return Err(Error::Configuration(format!(
                "kernel tail beyond window {window} carries up to {tail_fraction:.3e} of the variance (tolerance {:.1e}); widen the window",
                cfg.tail_tol
            )));
        }

        let separable = h.axis_separable();
        // full-lattice weights, per axis: separable keys by grid coordinate index, general by point
        let full: Vec<Vec<Vec<f64>>> = if separable {
            (0..n)
                .map(|l| {
                    let mut base = grid.interval.lo.clone();
                    (0..grid.counts[l])
                        .map(|i| {
                            let t = grid.coord(l, i);
                            base[l] = t;
                            Ok(axis_weights(t, h.eval_axis(l, t, &base)?, &edges))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        } else {
            // for each axis, one row per grid point
            (0..n)
                .map(|l| points.par_iter().zip(&hv).map(|(p, hp)| axis_weights(p[l], hp[l], &edges)).collect())
                .collect()
        };

        let mut lattices = Vec::with_capacity(n);
        for rows in &full {
            let peak = rows.iter().flatten().fold(0.0f64, |m, w| m.max(w.abs()));
            let active: Vec<usize> = (0..n_cells).filter(|&j| rows.iter().any(|r| r[j].abs() > DROP_REL * peak)).collect();
            lattices.push(AxisLattice { edges: edges.clone(), active });
        }

        let gather = |row: &[f64], active: &[usize]| -> Vec<f64> { active.iter().map(|&j| row[j]).collect() };
        let axis_energy = |row: &[f64]| -> f64 { row.iter().map(|w| w * w).sum() };

        let mut residual_variance = Vec::with_capacity(points.len());
        let weights = if separable {
            let mut mats = Vec::with_capacity(n);
            let mut energies: Vec<Vec<f64>> = Vec::with_capacity(n);
            for (l, rows) in full.iter().enumerate() {
                let act = &lattices[l].active;
                let g: Vec<Vec<f64>> = rows.iter().map(|r| gather(r, act)).collect();
                energies.push(g.iter().map(|r| axis_energy(r)).collect());
                mats.push(DMatrix::from_fn(rows.len(), act.len(), |i, j| g[i][j]));
            }
            for (pi, hp) in hv.iter().enumerate() {
                let idx = grid.multi_index(pi);
                let disc: f64 = (0..n).map(|l| energies[l][idx[l]]).product();
                residual_variance.push(exact_variance(&points[pi], hp)? - disc);
            }
            Weights::Separable(mats)
        } else {
            let mut per_point = Vec::with_capacity(points.len());
            for pi in 0..points.len() {
                let w: Vec<Vec<f64>> = (0..n).map(|l| gather(&full[l][pi], &lattices[l].active)).collect();
                let disc: f64 = w.iter().map(|r| axis_energy(r)).product();
                residual_variance.push(exact_variance(&points[pi], &hv[pi])? - disc);
                per_point.push(w);
            }
            Weights::General(per_point)
        };
        for r in &mut residual_variance {
            *r = r.max(0.0);
        }
        let discretization_bound = residual_variance.iter().cloned().fold(0.0, f64::max);
        Ok(WhiteNoiseSampler {
            grid: grid.clone(),
            spec: NoiseSpec { spacing: s, window },
            residual_variance,
            discretization_bound,
            tail_fraction,
            lattices,
            weights,
        })
    }

    /// Standard normals on the active cells, drawn row by row along the last axis.
    /// Row r of component k reads ChaCha8 stream (k << 40) | r, so values do not
    /// depend on which cells are active elsewhere or on thread scheduling.
    fn noise(&self, seed: u64, k: usize) -> Vec<f64> {
        let n = self.lattices.len();
        let last = &self.lattices[n - 1];
        let prefix_shape: Vec<usize> = self.lattices[..n - 1].iter().map(|a| a.active.len()).collect();
        let n_rows: usize = prefix_shape.iter().product();
        let rows: Vec<Vec<f64>> = (0..n_rows)
            .into_par_iter()
            .map(|r| {
                // full-lattice row id of the r-th active prefix
                let mut rem = r;
                let mut full_idx = vec![0usize; n - 1];
                for l in (0..n - 1).rev() {
                    full_idx[l] = self.lattices[l].active[rem % prefix_shape[l]];
                    rem /= prefix_shape[l];
                }
                let row_id = full_idx.iter().enumerate().fold(0u64, |acc, (l, &j)| acc * self.lattices[l].n_cells() as u64 + j as u64);
                let mut rng = stream_rng(seed, ((k as u64) << 40) | row_id);
                let z: Vec<f64> = (0..last.n_cells()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                last.active.iter().map(|&j| z[j]).collect()
            })
            .collect();
        rows.concat()
    }

    pub fn sample(&self, d: usize, seed: u64) -> Result<FieldSample> {
        check_d(d)?;
        let n_points = self.grid.n_points();
        let mut values = vec![0.0; n_points * d];
        for k in 0..d {
            let z = self.noise(seed, k);
            let field = match &self.weights {
                Weights::Separable(mats) => contract_separable(z, mats, &self.lattices),
                Weights::General(per_point) => contract_general(&z, per_point, &self.lattices),
            };
            for p in 0..n_points {
                values[p * d + k] = field[p];
            }
        }
        Ok(FieldSample { grid: self.grid.clone(), d, values, seed, sampler: SamplerTag::WhiteNoise, noise: Some(self.spec) })
    }

    pub fn ensemble(&self, d: usize, seed: u64, m: usize) -> Result<Vec<FieldSample>> {
        (0..m).into_par_iter().map(|r| self.sample(d, replicate_seed(seed, r))).collect()
    }

    pub fn active_cells(&self) -> Vec<usize> {
        self.lattices.iter().map(|a| a.active.len()).collect()
    }

    /// Lattice cells per axis, active or not.
    pub fn lattice_cells(&self) -> Vec<usize> {
        self.lattices.iter().map(|a| a.n_cells()).collect()
    }
}

fn exact_variance(t: &[f64], h: &[f64]) -> Result<f64> {
    t.iter().zip(h).map(|(&x, &e)| Ok(fbm_normalization(e)? * x.powf(2.0 * e))).product()
}

/// Contract axis 0 of a row-major tensor with W_0, moving the new axis to the end;
/// after N steps the axis order is restored.
fn contract_separable(mut t: Vec<f64>, mats: &[DMatrix<f64>], lattices: &[AxisLattice]) -> Vec<f64> {
    let mut shape: Vec<usize> = lattices.iter().map(|a| a.active.len()).collect();
    for w in mats {
        let a0 = shape[0];
        let rest = t.len() / a0;
        let m = DMatrix::from_row_slice(a0, rest, &t);
        // column-major (n0 × rest) is row-major (rest × n0)
        t = (w * m).data.as_vec().clone();
        shape.remove(0);
        shape.push(w.nrows());
    }
    t
}

fn contract_general(z: &[f64], per_point: &[Vec<Vec<f64>>], lattices: &[AxisLattice]) -> Vec<f64> {
    let shape: Vec<usize> = lattices.iter().map(|a| a.active.len()).collect();
    per_point
        .par_iter()
        .map(|w| {
            let mut buf = z.to_vec();
            let mut len = buf.len();
            for l in (0..shape.len()).rev() {
                let a = shape[l];
                len /= a;
                for r in 0..len {
                    let row = &buf[r * a..(r + 1) * a];
                    let v: f64 = row.iter().zip(&w[l]).map(|(x, y)| x * y).sum();
                    buf[r] = v;
                }
            }
            buf[0]
        })
        .collect()
}

pub fn sample_whitenoise(h: &HurstFunctional, grid: &Grid, d: usize, seed: u64, noise_spacing: f64, window: f64) -> Result<FieldSample> {
    let cfg = NoiseConfig { spacing: noise_spacing, window: Some(window), ..NoiseConfig::new(noise_spacing) };
    WhiteNoiseSampler::new(h, grid, cfg)?.sample(d, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "kebab-case")]
pub enum SamplerConfig {
    Cholesky,
    WhiteNoise(NoiseConfig),
}

/// A constructed sampler of either kind.
pub enum Sampler {
    Cholesky(CholeskySampler),
    WhiteNoise(WhiteNoiseSampler),
}

impl Sampler {
    pub fn new(h: &HurstFunctional, grid: &Grid, cfg: &SamplerConfig) -> Result<Self> {
        Ok(match cfg {
            SamplerConfig::Cholesky => Sampler::Cholesky(CholeskySampler::new(h, grid)?),
            SamplerConfig::WhiteNoise(c) => Sampler::WhiteNoise(WhiteNoiseSampler::new(h, grid, *c)?),
        })
    }

    pub fn sample(&self, d: usize, seed: u64) -> Result<FieldSample> {
        match self {
            Sampler::Cholesky(s) => s.sample(d, seed),
            Sampler::WhiteNoise(s) => s.sample(d, seed),
        }
    }

    pub fn ensemble(&self, d: usize, seed: u64, m: usize) -> Result<Vec<FieldSample>> {
        match self {
            Sampler::Cholesky(s) => s.ensemble(d, seed, m),
            Sampler::WhiteNoise(s) => s.ensemble(d, seed, m),
        }
    }

    /// Covariance discretization bound; zero for the exact sampler.
    pub fn discretization_bound(&self) -> f64 {
        match self {
            Sampler::Cholesky(_) => 0.0,
            Sampler::WhiteNoise(s) => s.discretization_bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub n_samples: usize,
    pub mean_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    /// Unbiased sample covariance Cov(X_i, Y_j).
    pub cov: DMatrix<f64>,
    /// Monte Carlo standard error of each entry.
    pub se: DMatrix<f64>,
}

pub const MIN_REPLICATES: usize = 100;

/// Sample covariance between component `ka` at point i and component `kb` at point j.
pub fn empirical_cross_covariance(samples: &[FieldSample], ka: usize, kb: usize) -> Result<EmpiricalCovariance> {
    let m = samples.len();
    if m < MIN_REPLICATES {
        return Err(Error::arg(format!("empirical covariance needs at least {MIN_REPLICATES} replicates, got {m}")));
    }
    let first = &samples[0];
    if samples.iter().any(|s| s.grid != first.grid || s.d != first.d) {
        return Err(Error::arg("replicates do not share a grid and dimension"));
    }
    if ka >= first.d || kb >= first.d {
        return Err(Error::arg("component index out of range"));
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.component(ka)).collect();
    let ys: Vec<Vec<f64>> = samples.iter().map(|s| s.component(kb)).collect();
    Ok(covariance_from_rows(&xs, &ys))
}

pub fn empirical_covariance(samples: &[FieldSample], component: usize) -> Result<EmpiricalCovariance> {
    empirical_cross_covariance(samples, component, component)
}

/// Covariance of paired observation rows, with SE from the spread of the centred products.
pub fn covariance_from_rows(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> EmpiricalCovariance {
    let m = xs.len();
    let mf = m as f64;
    let (p, q) = (xs[0].len(), ys[0].len());
    let mean = |rows: &[Vec<f64>], n: usize| -> Vec<f64> { (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / mf).collect() };
    let (ma, mb) = (mean(xs, p), mean(ys, q));
    let cx = DMatrix::from_fn(m, p, |r, i| xs[r][i] - ma[i]);
    let cy = DMatrix::from_fn(m, q, |r, j| ys[r][j] - mb[j]);
    let prod_sum = cx.transpose() * &cy;
    let sq_sum = cx.map(|v| v * v).transpose() * cy.map(|v| v * v);
    let mean_prod = &prod_sum / mf;
    let cov = &prod_sum / (mf - 1.0);
    // Σ (x y − mean)² = Σ x² y² − m·mean²
    let se = DMatrix::from_fn(p, q, |i, j| {
        let ss = (sq_sum[(i, j)] - mf * mean_prod[(i, j)].powi(2)).max(0.0);
        (ss / (mf * (mf - 1.0))).sqrt()
    });
    EmpiricalCovariance { n_samples: m, mean_a: ma, mean_b: mb, cov, se }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> HurstFunctional {
        HurstFunctional::constant(&[0.5]).unwrap()
    }

    #[test]
    fn hand_cholesky_on_two_points() {
        let g = Grid::uniform(&[1.0], &[2.0], &[2]).unwrap();
        let s = CholeskySampler::new(&bm(), &g).unwrap();
        let l = &s.factor;
        assert!((l[(0, 0)] - 1.0).abs() < 1e-12 && (l[(1, 0)] - 1.0).abs() < 1e-12 && (l[(1, 1)] - 1.0).abs() < 1e-12);
        let f = s.sample(1, 9).unwrap();
        let mut rng = stream_rng(9, 0);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        assert!((f.values[0] - z1).abs() < 1e-12);
        assert!((f.values[1] - (z1 + z2)).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let g = Grid::uniform(&[1.0], &[2.0], &[10]).unwrap();
        assert!(matches!(CholeskySampler::with_cap(&bm(), &g, 5, 1e-10), Err(Error::Size(_))));
    }

    #[test]
    fn deterministic() {
        let g = Grid::uniform(&[1.0], &[2.0], &[8]).unwrap();
        let a = sample_cholesky(&bm(), &g, 2, 3).unwrap();
        let b = sample_cholesky(&bm(), &g, 2, 3).unwrap();
        assert_eq!(a.values, b.values);
        let w1 = sample_whitenoise(&bm(), &g, 2, 3, 0.05, 6.0).unwrap();
        let w2 = sample_whitenoise(&bm(), &g, 2, 3, 0.05, 6.0).unwrap();
        assert_eq!(w1.values, w2.values);
        assert_ne!(w1.component(0), w1.component(1));
    }

    #[test]
    fn brownian_cell_weights_skip_the_negative_half_line() {
        let g = Grid::uniform(&[1.0], &[2.0], &[5]).unwrap();
        let s = WhiteNoiseSampler::new(&bm(), &g, NoiseConfig::new(0.25)).unwrap();
        // cells [0, 2] only
        assert_eq!(s.active_cells(), vec![8]);
        // grid points sit on cell edges: the projection is exact
        assert!(s.discretization_bound < 1e-12);
    }

    #[test]
    fn window_and_spacing_checks() {
        let g = Grid::uniform(&[1.0], &[2.0], &[5]).unwrap();
        assert!(matches!(sample_whitenoise(&bm(), &g, 1, 0, 0.1, 2.5), Err(Error::Configuration(_))));
        assert!(matches!(sample_whitenoise(&bm(), &g, 1, 0, -0.1, 6.0), Err(Error::Configuration(_))));
        let rough = HurstFunctional::constant(&[0.9]).unwrap();
        let err = sample_whitenoise(&rough, &g, 1, 0, 0.1, 3.0).unwrap_err();
        assert!(err.to_string().contains("tail"));
    }

    #[test]
    fn constant_rows_have_zero_covariance() {
        let rows = vec![vec![1.5, -2.0]; 120];
        let c = covariance_from_rows(&rows, &rows);
        assert_eq!(c.cov.abs().max(), 0.0);
        assert_eq!(c.se.abs().max(), 0.0);
    }

    #[test]
    fn separable_and_general_paths_agree() {
        // an axis-separable functional sampled through both contraction routes
        let spec: crate::hurst::HurstSpec = toml::from_str(
            "family = \"user-supplied\"\nexpressions = [\"0.4 + 0.1 * t1\", \"0.6\"]\nalpha = 0.3\nk = [0.6, 0.6]\nlipschitz = [0.1, 0.0]",
        )
        .unwrap();
        let h = spec.build().unwrap();
        let g = Grid::uniform(&[1.0, 1.0], &[1.5, 1.5], &[3, 4]).unwrap();
        let cfg = NoiseConfig::new(0.125);
        let sep = WhiteNoiseSampler::new(&h, &g, cfg).unwrap();
        assert!(matches!(sep.weights, Weights::Separable(_)));
        let mut general = WhiteNoiseSampler::new(&h, &g, cfg).unwrap();
        let points = g.points();
        general.weights = Weights::General(
            points
                .iter()
                .map(|p| {
                    let hp = h.eval(p).unwrap();
                    (0..2)
                        .map(|l| {
                            let full = axis_weights(p[l], hp[l], &general.lattices[l].edges);
                            general.lattices[l].active.iter().map(|&j| full[j]).collect()
                        })
                        .collect()
                })
                .collect(),
        );
        let a = sep.sample(1, 5).unwrap();
        let b = general.sample(1, 5).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }
}
