//! Level sets of sampled fields as sets of grid cells, their box-counting
//! dimension, and comparison against the exponent map of the Hurst functional.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, median, spearman};
use crate::grid::Grid;
use crate::hurst::{tau_and_beta, HurstFunctional, Regime};
use crate::simulate::{replicate_seed, FieldSample, Sampler, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevelRule {
    /// d = 1: B − x changes sign over the cell's corners, or a corner hits x.
    SignChange,
    /// min over corners of |B(t) − x| ≤ c_thr·diam^{min_ℓ H_ℓ(cell centre)}.
    Threshold { c_thr: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetCells {
    pub level: Vec<f64>,
    /// Cells per axis of the underlying grid.
    pub cell_counts: Vec<usize>,
    /// Multi-indices of the selected cells, in row-major order.
    pub cells: Vec<Vec<usize>>,
    pub rule: LevelRule,
}

/// Index ranges [start, end) of cells per axis.
type CellRange = Vec<(usize, usize)>;

fn full_range(grid: &Grid) -> CellRange {
    grid.cell_counts().into_iter().map(|c| (0, c)).collect()
}

fn cell_diameter(grid: &Grid) -> f64 {
    (0..grid.n_dims()).map(|l| grid.spacing(l).powi(2)).sum::<f64>().sqrt()
}

fn for_each_cell(range: &CellRange, mut f: impl FnMut(&[usize])) {
    let n = range.len();
    if range.iter().any(|&(a, b)| b <= a) {
        return;
    }
    let mut idx: Vec<usize> = range.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut l = n;
        loop {
            if l == 0 {
                return;
            }
            l -= 1;
            idx[l] += 1;
            if idx[l] < range[l].1 {
                break;
            }
            idx[l] = range[l].0;
        }
    }
}

/// Flat indices of the 2^N corners of a cell.
fn corners(grid: &Grid, cell: &[usize]) -> Vec<usize> {
    let n = cell.len();
    (0..1usize << n)
        .map(|mask| {
            let node: Vec<usize> = (0..n).map(|l| cell[l] + ((mask >> l) & 1)).collect();
            grid.flat_index(&node)
        })
        .collect()
}

fn cell_center(grid: &Grid, cell: &[usize]) -> Vec<f64> {
    cell.iter().enumerate().map(|(l, &c)| 0.5 * (grid.coord(l, c) + grid.coord(l, c + 1))).collect()
}

fn distance(field: &FieldSample, p: usize, x: &[f64]) -> f64 {
    field.at(p).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Per cell, the smallest c_thr that would select it under the threshold rule.
fn threshold_ratio(field: &FieldSample, h: &HurstFunctional, x: &[f64], cell: &[usize], diam: f64) -> Result<f64> {
    let g = &field.grid;
    let near = corners(g, cell).into_iter().map(|p| distance(field, p, x)).fold(f64::INFINITY, f64::min);
    let hmin = h.eval(&cell_center(g, cell))?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(near / diam.powf(hmin))
}

fn sign_change(field: &FieldSample, x: f64, cell: &[usize]) -> bool {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in corners(&field.grid, cell) {
        let v = field.values[p] - x;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    lo <= 0.0 && hi >= 0.0
}

fn check_field(field: &FieldSample, x: &[f64], h: &HurstFunctional, rule: &LevelRule) -> Result<()> {
    if x.len() != field.d {
        return Err(Error::arg(format!("level has {} components, field has d = {}", x.len(), field.d)));
    }
    if h.n_dims() != field.grid.n_dims() {
        return Err(Error::arg("Hurst functional and grid dimensions differ"));
    }
    if field.grid.counts.iter().any(|&c| c < 2) {
        return Err(Error::arg("level-set extraction needs at least two grid points per axis"));
    }
    match *rule {
        LevelRule::SignChange if field.d != 1 => Err(Error::arg("the sign-change rule needs d = 1; use the threshold rule")),
        LevelRule::Threshold { c_thr } if !(c_thr >= 0.0) => Err(Error::arg("c_thr must be non-negative")),
        _ => Ok(()),
    }
}

fn extract_in(field: &FieldSample, x: &[f64], rule: &LevelRule, h: &HurstFunctional, range: &CellRange) -> Result<Vec<Vec<usize>>> {
    let diam = cell_diameter(&field.grid);
    let mut cells = Vec::new();
    let mut err = None;
    for_each_cell(range, |c| {
        if err.is_some() {
            return;
        }
        let keep = match *rule {
            LevelRule::SignChange => Ok(sign_change(field, x[0], c)),
            LevelRule::Threshold { c_thr } => threshold_ratio(field, h, x, c, diam).map(|r| r <= c_thr),
        };
        match keep {
            Ok(true) => cells.push(c.to_vec()),
            Ok(false) => {}
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(cells),
    }
}

pub fn extract_level_set(field: &FieldSample, x: &[f64], rule: LevelRule, h: &HurstFunctional) -> Result<LevelSetCells> {
    check_field(field, x, h, &rule)?;
    let cells = extract_in(field, x, &rule, h, &full_range(&field.grid))?;
    Ok(LevelSetCells { level: x.to_vec(), cell_counts: field.grid.cell_counts(), cells, rule })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxCount {
    /// Box sides in cells.
    pub box_sizes: Vec<usize>,
    pub counts: Vec<usize>,
    /// Slope of log count against log(1 / size); `None` for an empty set.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub r2: Option<f64>,
}

fn check_box_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 4 {
        return Err(Error::arg(format!("box counting needs at least 4 scales, got {}", sizes.len())));
    }
    if sizes[0] != 1 {
        return Err(Error::arg("the finest box size must be one grid cell"));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("box sizes must be strictly increasing"));
    }
    if *sizes.last().unwrap() < 4 {
        return Err(Error::arg("box sizes must span at least two octaves"));
    }
    Ok(())
}

/// Dyadic sizes 1, 2, 4, … up to `max_cells / 4`.
pub fn dyadic_box_sizes(max_cells: usize) -> Vec<usize> {
    let mut v = vec![1];
    while v.last().unwrap() * 8 <= max_cells {
        v.push(v.last().unwrap() * 2);
    }
    v
}

/// Occupied boxes of side b cells, boxes anchored at `origin`.
fn count_boxes(cells: &[Vec<usize>], origin: &[usize], sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&b| {
            let set: HashSet<Vec<usize>> = cells.iter().map(|c| c.iter().zip(origin).map(|(i, o)| (i - o) / b).collect()).collect();
            set.len()
        })
        .collect()
}

fn slope_report(sizes: &[usize], counts: Vec<usize>) -> Result<BoxCount> {
    if counts.iter().all(|&c| c == 0) {
        return Ok(BoxCount { box_sizes: sizes.to_vec(), counts, slope: None, intercept: None, ci_halfwidth: None, r2: None });
    }
    let xs: Vec<f64> = sizes.iter().map(|&b| -(b as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let f = least_squares(&xs, &ys)?;
    Ok(BoxCount {
        box_sizes: sizes.to_vec(),
        counts,
        slope: Some(f.slope),
        intercept: Some(f.intercept),
        ci_halfwidth: Some(f.ci_halfwidth(0.95)),
        r2: Some(f.r2),
    })
}

pub fn box_counting(cells: &LevelSetCells, sizes: &[usize]) -> Result<BoxCount> {
    check_box_sizes(sizes)?;
    let origin = vec![0; cells.cell_counts.len()];
    slope_report(sizes, count_boxes(&cells.cells, &origin, sizes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub d: usize,
    pub level: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub box_sizes: Option<Vec<usize>>,
    /// Threshold constant for d ≥ 2 and starting point of the halving sweep.
    #[serde(default = "default_c_thr")]
    pub c_thr: f64,
    #[serde(default = "default_halvings")]
    pub threshold_halvings: usize,
}

fn default_c_thr() -> f64 {
    1.0
}

fn default_halvings() -> usize {
    6
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionExperiment {
    pub t_star: Vec<f64>,
    pub h_star: Vec<f64>,
    pub regime: Regime,
    /// β_τ at t*; `None` outside the existence regime.
    pub theoretical: Option<f64>,
    pub per_path: Vec<BoxCount>,
    /// Median slope over paths with a non-empty level set.
    pub median_slope: Option<f64>,
    /// Fraction of paths whose extracted set (default rule) is non-empty.
    pub nonempty_fraction: f64,
    /// (c_thr, fraction of paths with a non-empty threshold set), c_thr halving.
    pub threshold_sweep: Vec<(f64, f64)>,
}

/// Maximizer of Σ_ℓ 1/H_ℓ over the grid nodes; the first in row-major (lexicographic) order wins ties.
pub fn t_star(h: &HurstFunctional, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for p in grid.points() {
        let hp = h.eval(&p)?;
        let s: f64 = hp.iter().map(|x| 1.0 / x).sum();
        if best.as_ref().is_none_or(|b| s > b.0) {
            best = Some((s, p, hp));
        }
    }
    let (_, t, hp) = best.ok_or_else(|| Error::arg("empty grid"))?;
    Ok((t, hp))
}

pub fn dimension_experiment(h: &HurstFunctional, grid: &Grid, cfg: &DimensionConfig) -> Result<DimensionExperiment> {
    if cfg.level.len() != cfg.d {
        return Err(Error::arg("level dimension differs from d"));
    }
    if cfg.n_paths == 0 {
        return Err(Error::arg("n_paths must be positive"));
    }
    let (ts, hs) = t_star(h, grid)?;
    let rep = tau_and_beta(&hs, cfg.d)?;
    let theoretical = if rep.regime == Regime::Exists { rep.beta } else { None };
    let sizes = match &cfg.box_sizes {
        Some(s) => s.clone(),
        None => dyadic_box_sizes(grid.cell_counts().into_iter().min().unwrap_or(0)),
    };
    check_box_sizes(&sizes)?;
    let rule = if cfg.d == 1 { LevelRule::SignChange } else { LevelRule::Threshold { c_thr: cfg.c_thr } };
    let sampler = Sampler::new(h, grid, &cfg.sampler)?;
    let diam = cell_diameter(grid);
    let origin = vec![0; grid.n_dims()];
    let results: Vec<(BoxCount, f64)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|r| -> Result<(BoxCount, f64)> {
            let field = sampler.sample(cfg.d, replicate_seed(cfg.seed, r))?;
            check_field(&field, &cfg.level, h, &rule)?;
            let cells = extract_in(&field, &cfg.level, &rule, h, &full_range(grid))?;
            let bc = slope_report(&sizes, count_boxes(&cells, &origin, &sizes))?;
            let mut min_ratio = f64::INFINITY;
            let mut err = None;
            for_each_cell(&full_range(grid), |c| match threshold_ratio(&field, h, &cfg.level, c, diam) {
                Ok(v) => min_ratio = min_ratio.min(v),
                Err(e) => err = Some(e),
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok((bc, min_ratio))
        })
        .collect::<Result<_>>()?;
    let m = results.len() as f64;
    let slopes: Vec<f64> = results.iter().filter_map(|(b, _)| b.slope).collect();
    let nonempty_fraction = slopes.len() as f64 / m;
    let threshold_sweep = (0..=cfg.threshold_halvings)
        .map(|j| {
            let c = cfg.c_thr / (1u64 << j) as f64;
            (c, results.iter().filter(|(_, r)| *r <= c).count() as f64 / m)
        })
        .collect();
    Ok(DimensionExperiment {
        t_star: ts,
        h_star: hs,
        regime: rep.regime,
        theoretical,
        per_path: results.into_iter().map(|(b, _)| b).collect(),
        median_slope: median(&slopes),
        nonempty_fraction,
        threshold_sweep,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowResult {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub center: Vec<f64>,
    pub h_center: Vec<f64>,
    pub theoretical: f64,
    /// Median over paths of the box-count slope at the level B(centre).
    pub empirical: f64,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDimensionMap {
    pub windows: Vec<WindowResult>,
    pub box_sizes: Vec<usize>,
    /// Spearman correlation of theoretical and empirical values over windows.
    pub spearman: f64,
}

/// Windows tiling the grid's interval with boxes of side `window`, anchored at the lower corner.
/// Each window is returned as node-index ranges per axis.
pub fn tile_windows(grid: &Grid, window: f64) -> Result<Vec<Vec<(usize, usize)>>> {
    let n = grid.n_dims();
    let mut per_axis = Vec::with_capacity(n);
    for l in 0..n {
        let side = grid.interval.side(l);
        let count = (side / window * (1.0 + 1e-12)).floor() as usize;
        if count == 0 || !(window > 0.0) {
            return Err(Error::arg(format!("window {window} does not fit inside axis {l} of side {side}")));
        }
        let s = grid.spacing(l);
        let ranges: Vec<(usize, usize)> = (0..count)
            .map(|j| (((j as f64 * window) / s).round() as usize, (((j + 1) as f64 * window) / s).round() as usize))
            .collect();
        per_axis.push(ranges);
    }
    let mut out = vec![vec![]];
    for ranges in per_axis {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<(usize, usize)>| {
                ranges.iter().map(move |r| {
                    let mut p = prefix.clone();
                    p.push(*r);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalMapConfig {
    pub d: usize,
    pub window: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub box_sizes: Option<Vec<usize>>,
    #[serde(default = "default_c_thr")]
    pub c_thr: f64,
}

pub fn local_dimension_map(h: &HurstFunctional, grid: &Grid, cfg: &LocalMapConfig) -> Result<LocalDimensionMap> {
    let tiles = tile_windows(grid, cfg.window)?;
    let min_cells = tiles.iter().flat_map(|w| w.iter().map(|(a, b)| b - a)).min().unwrap_or(0);
    let sizes = match &cfg.box_sizes {
        Some(s) => s.clone(),
        None => dyadic_box_sizes(min_cells),
    };
    check_box_sizes(&sizes)?;
    let mut windows = Vec::with_capacity(tiles.len());
    let mut centers = Vec::with_capacity(tiles.len());
    for w in &tiles {
        let node: Vec<usize> = w.iter().map(|(a, b)| (a + b) / 2).collect();
        let center = grid.point(grid.flat_index(&node));
        let hc = h.eval(&center)?;
        let rep = tau_and_beta(&hc, cfg.d)?;
        let theoretical = match (rep.regime, rep.beta) {
            (Regime::Exists, Some(b)) => b,
            _ => return Err(Error::arg(format!("window centred at {center:?} is outside the existence regime"))),
        };
        let lo: Vec<f64> = w.iter().enumerate().map(|(l, r)| grid.coord(l, r.0)).collect();
        let hi: Vec<f64> = w.iter().enumerate().map(|(l, r)| grid.coord(l, r.1)).collect();
        windows.push(WindowResult { lo, hi, center: center.clone(), h_center: hc, theoretical, empirical: f64::NAN, slopes: vec![] });
        centers.push(grid.flat_index(&node));
    }
    let rule = if cfg.d == 1 { LevelRule::SignChange } else { LevelRule::Threshold { c_thr: cfg.c_thr } };
    let sampler = Sampler::new(h, grid, &cfg.sampler)?;
    let per_path: Vec<Vec<Option<f64>>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|r| -> Result<Vec<Option<f64>>> {
            let field = sampler.sample(cfg.d, replicate_seed(cfg.seed, r))?;
            tiles
                .iter()
                .zip(&centers)
                .map(|(w, &c)| {
                    let x = field.at(c).to_vec();
                    check_field(&field, &x, h, &rule)?;
                    let cells = extract_in(&field, &x, &rule, h, w)?;
                    let origin: Vec<usize> = w.iter().map(|r| r.0).collect();
                    Ok(slope_report(&sizes, count_boxes(&cells, &origin, &sizes))?.slope)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    for (i, w) in windows.iter_mut().enumerate() {
        w.slopes = per_path.iter().filter_map(|p| p[i]).collect();
        w.empirical = median(&w.slopes).unwrap_or(f64::NAN);
    }
    let th: Vec<f64> = windows.iter().map(|w| w.theoretical).collect();
    let em: Vec<f64> = windows.iter().map(|w| w.empirical).collect();
    let spearman = spearman(&th, &em)?;
    Ok(LocalDimensionMap { windows, box_sizes: sizes, spearman })
}
