//! Executes a validated manifest and writes its artifact directory.
//!
//! Every run writes `manifest.toml` (the input, verbatim), `manifest.effective.toml`
//! (after overrides), `version.json`, and the experiment's CSV tables, SVG plots
//! and binary field files. A failed run also writes `failure.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{least_squares, median};
use crate::format::{self, loglog_svg, num, Table};
use crate::gaussian::{self, cholesky_with_jitter, LndMode, ProcessTag};
use crate::hurst::{holder_split, tau_and_beta, validate_condition_a};
use crate::kernel::{verify_double_integral_bound, verify_ordered_simplex_bound, verify_two_scale_bound, BoundReport, SimplexReport};
use crate::levelset::{self, DimensionConfig, LevelRule, LocalMapConfig};
use crate::localtime::{self, SpatialBins, TimeSet};
use crate::manifest::*;
use crate::simulate::{replicate_seed, FieldSample, Sampler, DEFAULT_CHOLESKY_CAP};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the manifest's output directory.
    pub out: Option<PathBuf>,
    /// Overrides the manifest's seed.
    pub seed: Option<u64>,
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    /// The report or certificate that failed, when there is one.
    pub certificate: Option<serde_json::Value>,
}

impl RunFailure {
    pub fn exit_code(&self) -> i32 {
        if self.error.is_validation() {
            2
        } else {
            3
        }
    }
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        RunFailure { error, certificate: None }
    }
}

type RunResult<T> = std::result::Result<T, RunFailure>;

fn failure<T: Serialize>(error: Error, certificate: &T) -> RunFailure {
    RunFailure { error, certificate: serde_json::to_value(certificate).ok() }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct VersionStamp {
    package: &'static str,
    version: &'static str,
    array_format_version: u16,
    target_os: &'static str,
    target_arch: &'static str,
}

pub fn run_file(path: &Path, opts: &RunOptions) -> RunResult<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    run(&text, opts)
}

/// Parses, validates and executes a manifest. Validation happens before the output directory is touched.
pub fn run(text: &str, opts: &RunOptions) -> RunResult<RunSummary> {
    let mut manifest = Manifest::parse(text)?;
    if let Some(s) = opts.seed {
        manifest.seed = s;
    }
    let v = manifest.validate()?;
    let out = match (&opts.out, &manifest.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => return Err(Error::Manifest("no output directory: set `output` or pass --out".into()).into()),
    };
    fs::create_dir_all(&out).map_err(Error::from)?;
    let mut ctx = Ctx { out: out.clone(), files: Vec::new(), verbose: opts.verbose };
    ctx.text("manifest.toml", text)?;
    ctx.text("manifest.effective.toml", &manifest.to_toml()?)?;
    let stamp = VersionStamp {
        package: env!("CARGO_PKG_NAME"),
        version: VERSION,
        array_format_version: format::VERSION,
        target_os: std::env::consts::OS,
        target_arch: std::env::consts::ARCH,
    };
    ctx.json("version.json", &stamp)?;
    ctx.log(format!("running {} into {}", manifest.experiment.name(), out.display()));
    let result = dispatch(&mut ctx, &v);
    if let Err(f) = &result {
        let body = serde_json::json!({
            "error": f.error.to_string(),
            "exit_code": f.exit_code(),
            "certificate": f.certificate,
        });
        let _ = ctx.json("failure.json", &body);
    }
    result?;
    Ok(RunSummary { experiment: manifest.experiment, out, files: ctx.files })
}

struct Ctx {
    out: PathBuf,
    files: Vec<PathBuf>,
    verbose: bool,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[mfbs] {}", msg.as_ref());
        }
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.out.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(p.clone());
        Ok(p)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(p, body)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        self.text(name, &(body + "\n"))
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name)?;
        t.write(&p)?;
        self.log(format!("wrote {name} ({} rows)", t.rows.len()));
        Ok(())
    }

    fn field(&mut self, name: &str, f: &FieldSample) -> Result<()> {
        let p = self.path(name)?;
        format::write_field(&p, f)
    }

    /// Writes a fit table (scale, observed, fit columns repeated per row) and its plot.
    fn fit_plot(&mut self, stem: &str, title: &str, x_label: &str, y_label: &str, fit: &PlotFit) -> Result<()> {
        let mut header = vec!["scale", "observed", "slope", "intercept", "ci_halfwidth", "r2", "theoretical"];
        if fit.se.is_some() {
            header.insert(2, "standard_error");
        }
        let mut t = Table::new(&header);
        for (i, (x, y)) in fit.xs.iter().zip(&fit.ys).enumerate() {
            let mut row = vec![num(*x), num(*y)];
            if let Some(se) = &fit.se {
                row.push(num(se[i]));
            }
            row.extend([fit.slope, fit.intercept, fit.ci, fit.r2].map(num));
            row.push(fit.theoretical.map(num).unwrap_or_default());
            t.push(row);
        }
        self.table(&format!("{stem}.csv"), &t)?;
        let svg = loglog_svg(title, x_label, y_label, &fit.xs, &fit.ys, Some((fit.slope, fit.intercept)));
        self.text(&format!("{stem}.svg"), &svg)
    }
}

/// A log–log fit ready for tabulation: ln y ≈ intercept + slope·ln x.
struct PlotFit {
    xs: Vec<f64>,
    ys: Vec<f64>,
    se: Option<Vec<f64>>,
    slope: f64,
    intercept: f64,
    ci: f64,
    r2: f64,
    theoretical: Option<f64>,
}

impl From<&localtime::ScalingFit> for PlotFit {
    fn from(f: &localtime::ScalingFit) -> Self {
        PlotFit {
            xs: f.scales.clone(),
            ys: f.observed.clone(),
            se: None,
            slope: f.slope,
            intercept: f.intercept,
            ci: f.ci_halfwidth,
            r2: f.r2,
            theoretical: Some(f.theoretical_exponent),
        }
    }
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Manifest(format!("missing {what}")))
}

fn dispatch(ctx: &mut Ctx, v: &ValidatedManifest) -> RunResult<()> {
    match &v.params {
        Params::ValidateHurst(p) => run_validate_hurst(ctx, v, p),
        Params::Covariance(p) => run_covariance(ctx, v, p),
        Params::Simulate(p) => run_simulate(ctx, v, p),
        Params::Lnd(p) => run_lnd(ctx, v, p),
        Params::Increments(p) => run_increments(ctx, v, p),
        Params::Localtime(p) => run_localtime(ctx, v, p),
        Params::Levelset(p) => run_levelset(ctx, v, p),
        Params::DimensionMap(p) => run_dimension_map(ctx, v, p),
        Params::VerifyLemmas(p) => run_verify_lemmas(ctx, v, p),
    }
}

fn run_validate_hurst(ctx: &mut Ctx, v: &ValidatedManifest, p: &ValidateHurstParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    let rep = validate_condition_a(h, &grid.interval, &grid.counts, p.delta_a, p.tol)?;
    let mut t = Table::new(&[
        "axis",
        "min",
        "max",
        "alpha",
        "k",
        "bounds_ok",
        "lipschitz_ratio",
        "lipschitz_declared",
        "lipschitz_ok",
        "delta_a",
        "pairs",
    ]);
    for a in &rep.axes {
        t.push(vec![
            a.axis.to_string(),
            num(a.min),
            num(a.max),
            num(a.alpha),
            num(a.k),
            a.bounds_ok.to_string(),
            num(a.lipschitz_ratio),
            num(a.lipschitz_declared),
            a.lipschitz_ok.to_string(),
            num(rep.delta_a),
            rep.pairs.to_string(),
        ]);
    }
    ctx.table("condition_a.csv", &t)?;
    ctx.json("condition_a.json", &rep)?;

    let (ts, hs) = levelset::t_star(h, grid)?;
    let e = tau_and_beta(&hs, v.manifest.d)?;
    let mut ex = Table::new(&["d", "t_star", "h_star", "sum_inverse", "regime", "tau", "beta"]);
    ex.push(vec![
        e.d.to_string(),
        join(&ts),
        join(&hs),
        num(e.sum_inverse),
        format!("{:?}", e.regime),
        e.tau.map(|x| x.to_string()).unwrap_or_default(),
        e.beta.map(num).unwrap_or_default(),
    ]);
    ctx.table("exponents.csv", &ex)?;
    if !rep.passed() {
        return Err(failure(Error::Model("the Hurst functional violates its declared bounds or Lipschitz constant".into()), &rep));
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn default_eps(grid_or_interval_lo: &[f64]) -> f64 {
    0.25 * grid_or_interval_lo.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn run_covariance(ctx: &mut Ctx, v: &ValidatedManifest, p: &CovarianceParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    if grid.n_points() > DEFAULT_CHOLESKY_CAP {
        return Err(Error::Size(format!("{} points exceeds the covariance cap {DEFAULT_CHOLESKY_CAP}", grid.n_points())).into());
    }
    let points = grid.points();
    let eps = p.eps.unwrap_or_else(|| default_eps(&grid.interval.lo));
    let tag = match p.process {
        ProcessName::B => ProcessTag::B,
        ProcessName::X0 => ProcessTag::X0,
        ProcessName::XEps => ProcessTag::XEps,
        ProcessName::Y => ProcessTag::Y(p.axis),
        ProcessName::ZEps => ProcessTag::ZEps,
    };
    let cov = match (tag, p.quadrature) {
        (ProcessTag::B, false) => gaussian::covariance_b(h, &points, p.tol)?,
        (ProcessTag::B, true) => gaussian::covariance_b_quadrature(h, &points, p.tol)?,
        _ => gaussian::covariance_piece(h, tag, eps, &points, p.tol)?,
    };
    let n = cov.n();
    ctx.path("covariance.bin").and_then(|path| format::covariance_array(&cov.entries).write(&path))?;
    let mut pts = Table::new(&["index", "t"]);
    for (i, t) in points.iter().enumerate() {
        pts.push(vec![i.to_string(), join(t)]);
    }
    ctx.table("points.csv", &pts)?;
    let mut t = Table::new(&["i", "j", "covariance"]);
    for i in 0..n {
        for j in 0..n {
            t.push(vec![i.to_string(), j.to_string(), num(cov.entries[(i, j)])]);
        }
    }
    ctx.table("covariance.csv", &t)?;
    let trace = cov.entries.trace();
    let factor = cholesky_with_jitter(&cov.entries).map_err(|e| {
        let cert = serde_json::json!({ "n": n, "trace": trace, "entry_error": cov.entry_error });
        RunFailure { error: e, certificate: Some(cert) }
    })?;
    let mut s = Table::new(&["n", "process", "eps", "trace", "entry_error", "jitter_applied"]);
    s.push(vec![n.to_string(), format!("{tag:?}"), num(eps), num(trace), num(cov.entry_error), num(factor.jitter)]);
    ctx.table("covariance_summary.csv", &s)?;
    Ok(())
}

fn run_simulate(ctx: &mut Ctx, v: &ValidatedManifest, p: &SimulateParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    let sampler = Sampler::new(h, grid, &v.sampler)?;
    let fields = sampler.ensemble(v.manifest.d, v.manifest.seed, p.replicates)?;
    let mut t = Table::new(&["replicate", "file", "seed", "min", "max", "mean", "discretization_bound"]);
    for (r, f) in fields.iter().enumerate() {
        let name = format!("fields/field_{r:04}.bin");
        ctx.field(&name, f)?;
        let min = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = f.values.iter().sum::<f64>() / f.values.len() as f64;
        t.push(vec![r.to_string(), name, f.seed.to_string(), num(min), num(max), num(mean), num(sampler.discretization_bound())]);
    }
    ctx.table("fields.csv", &t)?;
    Ok(())
}

fn run_lnd(ctx: &mut Ctx, v: &ValidatedManifest, p: &LndParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let iv = need(&v.interval, "interval")?;
    let mode = match p.mode {
        LndModeName::Directional => LndMode::Directional(p.axis),
        LndModeName::Sectorial => LndMode::Sectorial,
    };
    let eps = p.eps.unwrap_or_else(|| default_eps(&iv.lo));
    let sweep = gaussian::lnd_sweep(h, iv, mode, eps, &p.sizes, p.configurations, v.manifest.seed, p.tol)?;
    let mut t = Table::new(&["n", "configuration", "cond_variance", "lower_bound_ref", "ratio", "jitter_applied"]);
    for certs in &sweep.certificates {
        for (c, cert) in certs.iter().enumerate() {
            t.push(vec![
                cert.ordered_points.len().to_string(),
                c.to_string(),
                num(cert.cond_variance),
                num(cert.lower_bound_ref),
                num(cert.ratio),
                num(cert.jitter_applied),
            ]);
        }
    }
    ctx.table("lnd.csv", &t)?;
    let mut s = Table::new(&["n", "r_min", "r_median", "r_max", "r_min_spread"]);
    for row in &sweep.summary {
        s.push(vec![row.n.to_string(), num(row.r_min), num(row.r_median), num(row.r_max), num(sweep.r_min_spread)]);
    }
    ctx.table("lnd_summary.csv", &s)?;
    if let Some(bad) = sweep.certificates.iter().flatten().find(|c| !(c.ratio > 0.0 && c.ratio.is_finite())) {
        return Err(failure(Error::InternalConsistency(format!("non-positive certificate ratio {}", bad.ratio)), bad));
    }
    Ok(())
}

fn run_increments(ctx: &mut Ctx, v: &ValidatedManifest, p: &IncrementsParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let iv = need(&v.interval, "interval")?;
    let delta0 = p.delta.unwrap_or(0.1 * iv.diameter());
    let mut t = Table::new(&["delta", "pair", "ratio"]);
    let mut s = Table::new(&["delta", "pairs_used", "min_ratio", "max_ratio", "cross_hurst_max"]);
    let mut reports = Vec::new();
    for j in 0..=p.halvings {
        let delta = delta0 / (1u64 << j) as f64;
        let rep = gaussian::increment_bounds_report(h, iv, p.n_pairs, delta, v.manifest.seed)?;
        for (i, r) in rep.ratios.iter().enumerate() {
            t.push(vec![num(delta), i.to_string(), num(*r)]);
        }
        s.push(vec![num(delta), rep.pairs_used.to_string(), num(rep.min_ratio), num(rep.max_ratio), num(rep.cross_hurst_max)]);
        reports.push(rep);
    }
    ctx.table("increments.csv", &t)?;
    ctx.table("increments_summary.csv", &s)?;
    if let Some(bad) = reports.iter().find(|r| !(r.min_ratio > 0.0 && r.max_ratio.is_finite())) {
        return Err(failure(Error::InternalConsistency("increment ratio outside (0, inf)".into()), bad));
    }
    Ok(())
}

fn run_localtime(ctx: &mut Ctx, v: &ValidatedManifest, p: &LocaltimeParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    let d = v.manifest.d;
    let ex = localtime::existence_predicate(h, &grid.interval, d, &vec![p.existence_resolution; grid.n_dims()])?;
    let mut et = Table::new(&["d", "verdict", "h_bar", "sum_inverse_h_bar", "min_sum_inverse", "max_sum_inverse"]);
    et.push(vec![
        d.to_string(),
        format!("{:?}", ex.verdict),
        join(&ex.h_bar),
        num(ex.sum_inverse_h_bar),
        num(ex.min_sum_inverse),
        num(ex.max_sum_inverse),
    ]);
    ctx.table("existence.csv", &et)?;

    let sampler = Sampler::new(h, grid, &v.sampler)?;
    let ensemble = sampler.ensemble(d, v.manifest.seed, p.n_paths)?;
    ctx.field("fields/field_0000.bin", &ensemble[0])?;
    ctx.log(format!("sampled {} paths", ensemble.len()));

    let mut occ = Table::new(&["path", "k", "time_measure", "total_mass", "mass_error", "path_side", "density_side", "residual"]);
    for (i, f) in ensemble.iter().enumerate() {
        let k = p.k_rule.resolve(f)?;
        let bins = SpatialBins::covering(f, &TimeSet::All, k)?;
        let est = localtime::mollified_local_time(f, &TimeSet::All, &bins, k)?;
        let res = localtime::occupation_identity_residual(f, &p.test_function, &TimeSet::All, &bins, k)?;
        let mass_error = (est.total_mass() - est.time_measure).abs() / est.time_measure;
        occ.push(vec![
            i.to_string(),
            num(k),
            num(est.time_measure),
            num(est.total_mass()),
            num(mass_error),
            num(res.path_side),
            num(res.density_side),
            num(res.residual),
        ]);
    }
    ctx.table("occupation.csv", &occ)?;

    let t = p.t.clone().unwrap_or_else(|| grid.interval.center());
    let ball = localtime::ball_scaling_fit(&ensemble, h, &t, &p.level, &p.radii, p.k_rule)?;
    ctx.fit_plot("ball_fit", "local time of shrinking balls", "radius", "median L_k", &PlotFit::from(&ball))?;
    if let Some(m) = &p.moment {
        let (fit, se) = localtime::moment_scaling_fit(&ensemble, h, &m.x, &m.a, &m.sides, m.order, p.k_rule)?;
        let mut pf = PlotFit::from(&fit);
        pf.se = Some(se);
        ctx.fit_plot("moment_fit", &format!("moment of order {} of local time", m.order), "side", "mean L_k^n", &pf)?;
    }
    Ok(())
}

fn run_levelset(ctx: &mut Ctx, v: &ValidatedManifest, p: &LevelsetParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    let d = v.manifest.d;
    let cfg = DimensionConfig {
        d,
        level: p.level.clone().unwrap_or_else(|| vec![0.0; d]),
        n_paths: p.n_paths,
        seed: v.manifest.seed,
        sampler: v.sampler,
        box_sizes: p.box_sizes.clone(),
        c_thr: p.c_thr,
        threshold_halvings: p.threshold_halvings,
    };
    let exp = levelset::dimension_experiment(h, grid, &cfg)?;
    let theo = exp.theoretical.map(num).unwrap_or_default();

    let mut t = Table::new(&["path", "slope", "ci_halfwidth", "r2", "theoretical"]);
    let mut bc = Table::new(&["path", "box_size", "count"]);
    for (i, b) in exp.per_path.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            b.slope.map(num).unwrap_or_default(),
            b.ci_halfwidth.map(num).unwrap_or_default(),
            b.r2.map(num).unwrap_or_default(),
            theo.clone(),
        ]);
        for (s, c) in b.box_sizes.iter().zip(&b.counts) {
            bc.push(vec![i.to_string(), s.to_string(), c.to_string()]);
        }
    }
    ctx.table("dimension.csv", &t)?;
    ctx.table("box_counts.csv", &bc)?;

    let mut s = Table::new(&["t_star", "h_star", "regime", "theoretical", "median_slope", "nonempty_fraction"]);
    s.push(vec![join(&exp.t_star), join(&exp.h_star), format!("{:?}", exp.regime), theo.clone(), exp.median_slope.map(num).unwrap_or_default(), num(exp.nonempty_fraction)]);
    ctx.table("dimension_summary.csv", &s)?;
    let mut sw = Table::new(&["c_thr", "nonempty_fraction"]);
    for (c, f) in &exp.threshold_sweep {
        sw.push(vec![num(*c), num(*f)]);
    }
    ctx.table("threshold_sweep.csv", &sw)?;

    // median count per box size, plotted against 1 / size
    let sizes = &exp.per_path[0].box_sizes;
    let xs: Vec<f64> = sizes.iter().map(|&b| 1.0 / b as f64).collect();
    let ys: Vec<f64> = (0..sizes.len()).map(|j| median(&exp.per_path.iter().map(|b| b.counts[j] as f64).collect::<Vec<_>>()).unwrap()).collect();
    if ys.iter().all(|&y| y > 0.0) {
        let lf = least_squares(&xs.iter().map(|x| x.ln()).collect::<Vec<_>>(), &ys.iter().map(|y| y.ln()).collect::<Vec<_>>())?;
        let pf = PlotFit { xs, ys, se: None, slope: lf.slope, intercept: lf.intercept, ci: lf.ci_halfwidth(0.95), r2: lf.r2, theoretical: exp.theoretical };
        ctx.fit_plot("dimension_plot", "median box count", "1 / box size (cells)", "occupied boxes", &pf)?;
    }

    // cells of the first path, regenerated with its replicate seed
    let sampler = Sampler::new(h, grid, &v.sampler)?;
    let field = sampler.sample(d, replicate_seed(v.manifest.seed, 0))?;
    ctx.field("fields/field_0000.bin", &field)?;
    let rule = if d == 1 { LevelRule::SignChange } else { LevelRule::Threshold { c_thr: p.c_thr } };
    let cells = levelset::extract_level_set(&field, &cfg.level, rule, h)?;
    let axes: Vec<String> = (0..grid.n_dims()).map(|l| format!("i{l}")).collect();
    let mut ct = Table::new(&axes.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for c in &cells.cells {
        ct.push(c.iter().map(|i| i.to_string()));
    }
    ctx.table("cells_path0.csv", &ct)?;
    Ok(())
}

fn run_dimension_map(ctx: &mut Ctx, v: &ValidatedManifest, p: &DimensionMapParams) -> RunResult<()> {
    let h = need(&v.hurst, "hurst")?;
    let grid = need(&v.grid, "grid")?;
    let cfg = LocalMapConfig {
        d: v.manifest.d,
        window: p.window,
        n_paths: p.n_paths,
        seed: v.manifest.seed,
        sampler: v.sampler,
        box_sizes: p.box_sizes.clone(),
        c_thr: p.c_thr,
    };
    let map = levelset::local_dimension_map(h, grid, &cfg)?;
    let mut t = Table::new(&["window", "lo", "hi", "center", "h_center", "theoretical", "empirical", "spearman"]);
    for (i, w) in map.windows.iter().enumerate() {
        t.push(vec![i.to_string(), join(&w.lo), join(&w.hi), join(&w.center), join(&w.h_center), num(w.theoretical), num(w.empirical), num(map.spearman)]);
    }
    ctx.table("dimension_map.csv", &t)?;
    let xs: Vec<f64> = map.windows.iter().map(|w| w.theoretical).collect();
    let ys: Vec<f64> = map.windows.iter().map(|w| w.empirical).collect();
    let svg = loglog_svg(&format!("windowed dimension, Spearman {:.3}", map.spearman), "theoretical", "empirical", &xs, &ys, Some((1.0, 0.0)));
    ctx.text("dimension_map.svg", &svg)?;
    Ok(())
}

/// Results of the calculus-inequality sweeps and the random Hoelder-split draws.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSuite {
    pub bounds: Vec<BoundReport>,
    pub simplex: Vec<SimplexReport>,
    pub draws: usize,
    /// max |Σ 1/p_ℓ − 1| over draws.
    pub max_split_error: f64,
    /// max over draws and ℓ of H̄_ℓ d / p_ℓ.
    pub max_exponent_product: f64,
}

impl LemmaSuite {
    pub fn passed(&self) -> bool {
        self.bounds.iter().all(|b| b.passed)
            && self.simplex.iter().all(|s| s.bound.passed)
            && self.max_split_error <= 1e-12
            && self.max_exponent_product < 1.0
    }
}

/// The standard sweeps: decade sweeps in a for the double-integral and two-scale bounds,
/// r-halving for the ordered simplex, and `draws` random (H̄, d) in the existence regime.
pub fn lemma_suite(p: &VerifyLemmasParams, seed: u64) -> Result<LemmaSuite> {
    let tol = 1e-10;
    let decades = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut bounds = vec![verify_double_integral_bound(0.25, 0.6, 2.0, &decades[..3], 0.1, tol)?];
    for (alpha, beta, eta, b) in [(1.0, 2.0, 1.0, vec![1.0]), (0.5, 2.0, 1.0, vec![1.0]), (0.5, 1.0, 0.2, vec![0.1, 1.0])] {
        bounds.push(verify_two_scale_bound(alpha, beta, eta, &decades, &b, tol)?.1);
    }
    let simplex = vec![
        verify_ordered_simplex_bound(1.0, 0.25, &[0.5], 0.5, tol)?,
        verify_ordered_simplex_bound(1.0, 0.2, &[0.5, 0.5], 0.5, 1e-8)?,
        verify_ordered_simplex_bound(1.0, 0.2, &[0.3, 0.6, 0.4], 0.2, 1e-6)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_split_error, mut max_exponent_product) = (0.0f64, 0.0f64);
    let mut done = 0;
    while done < p.draws {
        let n = rng.random_range(1..=p.max_dims.max(1));
        let d = rng.random_range(1..=3usize);
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        if h.iter().map(|x| 1.0 / x).sum::<f64>() <= d as f64 + 1e-6 {
            continue;
        }
        let split = holder_split(&h, d, p.delta)?;
        max_split_error = max_split_error.max((split.sum_inverse_p - 1.0).abs());
        for (hl, pl) in split.sorted_h.iter().zip(&split.p) {
            max_exponent_product = max_exponent_product.max(hl * d as f64 / pl);
        }
        done += 1;
    }
    Ok(LemmaSuite { bounds, simplex, draws: done, max_split_error, max_exponent_product })
}

fn run_verify_lemmas(ctx: &mut Ctx, v: &ValidatedManifest, p: &VerifyLemmasParams) -> RunResult<()> {
    let suite = lemma_suite(p, v.manifest.seed)?;
    let mut t = Table::new(&["label", "sweep", "ratio", "c_hat", "spread", "passed"]);
    let all: Vec<&BoundReport> = suite.bounds.iter().chain(suite.simplex.iter().map(|s| &s.bound)).collect();
    for b in &all {
        for (x, r) in b.sweep.iter().zip(&b.ratios) {
            t.push(vec![b.label.clone(), num(*x), num(*r), num(b.c_hat), num(b.spread), b.passed.to_string()]);
        }
    }
    ctx.table("lemmas.csv", &t)?;
    let mut s = Table::new(&["draws", "max_split_error", "max_exponent_product"]);
    s.push(vec![suite.draws.to_string(), num(suite.max_split_error), num(suite.max_exponent_product)]);
    ctx.table("holder_split.csv", &s)?;
    if !suite.passed() {
        return Err(failure(Error::InternalConsistency("a lemma verifier failed".into()), &suite));
    }
    Ok(())
}
