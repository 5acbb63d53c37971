//! Hurst functionals t ↦ (H_1(t), …, H_N(t)) and the exponent formulas
//! built from them.
//!
//! Every formula that depends on the ordering H_1 ≤ … ≤ H_N sorts its input
//! first and reports the permutation, so callers can pass vectors in any order.

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Interval};

/// Tolerance used to classify Σ 1/H_ℓ against d and to break τ ties.
pub const TIE_TOL: f64 = 1e-12;

/// Parametric families of Hurst functionals, as written in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum HurstFamily {
    /// H(t) ≡ h.
    Constant { h: Vec<f64> },
    /// H_ℓ(t) = clamp(intercept_ℓ + Σ_j slopes[ℓ][j]·t_j, lo, hi).
    AffineClamped {
        intercept: Vec<f64>,
        slopes: Vec<Vec<f64>>,
        lo: f64,
        hi: f64,
    },
    /// H_ℓ(t) = lo_ℓ + (hi_ℓ − lo_ℓ) / (1 + exp(−steepness_ℓ·(t_{axis_ℓ} − center_ℓ))).
    SmoothSigmoid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        steepness: Vec<f64>,
        center: Vec<f64>,
        axis: Vec<usize>,
    },
    /// One arithmetic expression per axis in the variables t1, …, tN.
    UserSupplied { expressions: Vec<String> },
}

/// A family plus optional overrides of the Condition-A metadata.
///
/// User-supplied expressions must declare all three of `alpha`, `k` and `lipschitz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSpec {
    #[serde(flatten)]
    pub family: HurstFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<Vec<f64>>,
}

impl HurstSpec {
    pub fn constant(h: Vec<f64>) -> Self {
        HurstSpec { family: HurstFamily::Constant { h }, alpha: None, k: None, lipschitz: None }
    }

    pub fn build(&self) -> Result<HurstFunctional> {
        HurstFunctional::from_spec(self.clone())
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Native,
    Expressions(Vec<Node<DefaultNumericTypes>>),
}

/// A Hurst functional together with its Condition-A metadata (α, K, c).
#[derive(Debug, Clone)]
pub struct HurstFunctional {
    spec: HurstSpec,
    compiled: Compiled,
    n_dims: usize,
    pub alpha: f64,
    pub k: Vec<f64>,
    pub lipschitz: Vec<f64>,
}

fn model(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

fn check_len(name: &str, v: usize, n: usize) -> Result<()> {
    if v != n {
        return Err(model(format!("{name} has {v} entries, expected {n}")));
    }
    Ok(())
}

impl HurstFunctional {
    pub fn constant(h: &[f64]) -> Result<Self> {
        HurstSpec::constant(h.to_vec()).build()
    }

    pub fn from_spec(spec: HurstSpec) -> Result<Self> {
        let (n, alpha0, k0, c0, compiled) = match &spec.family {
            HurstFamily::Constant { h } => {
                if h.is_empty() {
                    return Err(model("constant Hurst vector is empty"));
                }
                for &x in h {
                    if !(x > 0.0 && x < 1.0) {
                        return Err(model(format!("constant Hurst value {x} outside (0, 1)")));
                    }
                }
                let alpha = h.iter().cloned().fold(f64::INFINITY, f64::min);
                (h.len(), Some(alpha), Some(h.clone()), Some(vec![0.0; h.len()]), Compiled::Native)
            }
            HurstFamily::AffineClamped { intercept, slopes, lo, hi } => {
                let n = intercept.len();
                if n == 0 {
                    return Err(model("affine intercept is empty"));
                }
                check_len("slopes", slopes.len(), n)?;
                for row in slopes {
                    check_len("slope row", row.len(), n)?;
                }
                if !(*lo > 0.0 && lo <= hi && *hi < 1.0) {
                    return Err(model(format!("affine clamp [{lo}, {hi}] must satisfy 0 < lo <= hi < 1")));
                }
                let c = slopes.iter().map(|row| row.iter().fold(0.0f64, |m, s| m.max(s.abs()))).collect();
                (n, Some(*lo), Some(vec![*hi; n]), Some(c), Compiled::Native)
            }
            HurstFamily::SmoothSigmoid { lo, hi, steepness, center, axis } => {
                let n = lo.len();
                if n == 0 {
                    return Err(model("sigmoid bounds are empty"));
                }
                check_len("hi", hi.len(), n)?;
                check_len("steepness", steepness.len(), n)?;
                check_len("center", center.len(), n)?;
                check_len("axis", axis.len(), n)?;
                for l in 0..n {
                    if !(lo[l] > 0.0 && lo[l] <= hi[l] && hi[l] < 1.0) {
                        return Err(model(format!("sigmoid axis {l}: need 0 < lo <= hi < 1")));
                    }
                    if axis[l] >= n {
                        return Err(model(format!("sigmoid axis {l} refers to coordinate {}", axis[l])));
                    }
                }
                let alpha = lo.iter().cloned().fold(f64::INFINITY, f64::min);
                let c = (0..n).map(|l| (hi[l] - lo[l]) * steepness[l].abs() / 4.0).collect();
                (n, Some(alpha), Some(hi.clone()), Some(c), Compiled::Native)
            }
            HurstFamily::UserSupplied { expressions } => {
                let n = expressions.len();
                if n == 0 {
                    return Err(model("no user expressions given"));
                }
                let mut nodes = Vec::with_capacity(n);
                for (l, e) in expressions.iter().enumerate() {
                    let node = build_operator_tree::<DefaultNumericTypes>(e)
                        .map_err(|err| model(format!("expression {l} ({e:?}): {err}")))?;
                    for var in node.iter_variable_identifiers() {
                        let ok = var
                            .strip_prefix('t')
                            .and_then(|s| s.parse::<usize>().ok())
                            .is_some_and(|i| (1..=n).contains(&i));
                        if !ok {
                            return Err(model(format!("expression {l} uses unknown variable {var:?}")));
                        }
                    }
                    nodes.push(node);
                }
                (n, None, None, None, Compiled::Expressions(nodes))
            }
        };
        let alpha = spec.alpha.or(alpha0).ok_or_else(|| model("user-supplied functional must declare alpha"))?;
        let k = spec.k.clone().or(k0).ok_or_else(|| model("user-supplied functional must declare k"))?;
        let lipschitz = spec
            .lipschitz
            .clone()
            .or(c0)
            .ok_or_else(|| model("user-supplied functional must declare lipschitz"))?;
        check_len("k", k.len(), n)?;
        check_len("lipschitz", lipschitz.len(), n)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(model(format!("alpha = {alpha} outside (0, 1)")));
        }
        for (l, &kl) in k.iter().enumerate() {
            if !(kl > 0.0 && kl < 1.0) || kl < alpha {
                return Err(model(format!("K_{l} = {kl} must lie in [alpha, 1)")));
            }
        }
        if lipschitz.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(model("Lipschitz constants must be finite and non-negative"));
        }
        Ok(HurstFunctional { spec, compiled, n_dims: n, alpha, k, lipschitz })
    }

    pub fn spec(&self) -> &HurstSpec {
        &self.spec
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn family_tag(&self) -> &'static str {
        match self.spec.family {
            HurstFamily::Constant { .. } => "constant",
            HurstFamily::AffineClamped { .. } => "affine-clamped",
            HurstFamily::SmoothSigmoid { .. } => "smooth-sigmoid",
            HurstFamily::UserSupplied { .. } => "user-supplied",
        }
    }

    /// H(t); fails with a model error if any component leaves (0, 1).
    pub fn eval(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.n_dims {
            return Err(Error::arg(format!("point has {} coordinates, functional expects {}", t.len(), self.n_dims)));
        }
        let h: Vec<f64> = match (&self.spec.family, &self.compiled) {
            (HurstFamily::Constant { h }, _) => h.clone(),
            (HurstFamily::AffineClamped { intercept, slopes, lo, hi }, _) => intercept
                .iter()
                .zip(slopes)
                .map(|(b, row)| (b + row.iter().zip(t).map(|(s, x)| s * x).sum::<f64>()).clamp(*lo, *hi))
                .collect(),
            (HurstFamily::SmoothSigmoid { lo, hi, steepness, center, axis }, _) => (0..self.n_dims)
                .map(|l| lo[l] + (hi[l] - lo[l]) / (1.0 + (-steepness[l] * (t[axis[l]] - center[l])).exp()))
                .collect(),
            (HurstFamily::UserSupplied { .. }, Compiled::Expressions(nodes)) => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                for (i, &x) in t.iter().enumerate() {
                    ctx.set_value(format!("t{}", i + 1), Value::Float(x))
                        .map_err(|e| model(format!("cannot bind t{}: {e}", i + 1)))?;
                }
                nodes
                    .iter()
                    .enumerate()
                    .map(|(l, node)| {
                        node.eval_number_with_context(&ctx)
                            .map_err(|e| model(format!("expression {l} failed at {t:?}: {e}")))
                    })
                    .collect::<Result<_>>()?
            }
            (HurstFamily::UserSupplied { .. }, Compiled::Native) => unreachable!("user expressions are compiled"),
        };
        for (l, &x) in h.iter().enumerate() {
            if !(x > 0.0 && x < 1.0) {
                return Err(model(format!("H_{l}({t:?}) = {x} outside (0, 1)")));
            }
        }
        Ok(h)
    }

    /// The constant Hurst vector, if the functional does not depend on t.
    pub fn constant_value(&self) -> Option<Vec<f64>> {
        match &self.spec.family {
            HurstFamily::Constant { h } => Some(h.clone()),
            HurstFamily::AffineClamped { intercept, slopes, lo, hi } if slopes.iter().flatten().all(|&s| s == 0.0) => {
                Some(intercept.iter().map(|b| b.clamp(*lo, *hi)).collect())
            }
            _ => None,
        }
    }

    /// True when each H_ℓ depends on t_ℓ alone, so kernel weights factorize per axis.
    pub fn axis_separable(&self) -> bool {
        match &self.spec.family {
            HurstFamily::Constant { .. } => true,
            HurstFamily::AffineClamped { slopes, .. } => slopes
                .iter()
                .enumerate()
                .all(|(l, row)| row.iter().enumerate().all(|(j, &s)| j == l || s == 0.0)),
            HurstFamily::SmoothSigmoid { axis, steepness, .. } => {
                axis.iter().zip(steepness).enumerate().all(|(l, (&a, &s))| a == l || s == 0.0)
            }
            HurstFamily::UserSupplied { .. } => match &self.compiled {
                Compiled::Expressions(nodes) => nodes.iter().enumerate().all(|(l, node)| {
                    let own = format!("t{}", l + 1);
                    node.iter_variable_identifiers().all(|v| v == own)
                }),
                Compiled::Native => false,
            },
        }
    }

    /// H_ℓ as a function of t_ℓ alone; only meaningful when [`Self::axis_separable`] holds.
    pub fn eval_axis(&self, axis: usize, x: f64, base: &[f64]) -> Result<f64> {
        let mut t = base.to_vec();
        t[axis] = x;
        Ok(self.eval(&t)?[axis])
    }
}

/// ρ_K(s, t) = Σ_ℓ |s_ℓ − t_ℓ|^{K_ℓ}.
pub fn rho_k(s: &[f64], t: &[f64], k: &[f64]) -> Result<f64> {
    if s.len() != t.len() || s.len() != k.len() {
        return Err(Error::arg(format!(
            "rho_k dimension mismatch: |s| = {}, |t| = {}, |K| = {}",
            s.len(),
            t.len(),
            k.len()
        )));
    }
    Ok(s.iter().zip(t).zip(k).map(|((a, b), e)| if a == b { 0.0 } else { (a - b).abs().powf(*e) }).sum())
}

/// Per-axis result of a Condition-A check.
#[derive(Debug, Clone, Serialize)]
pub struct AxisCheck {
    pub axis: usize,
    pub min: f64,
    pub max: f64,
    pub alpha: f64,
    pub k: f64,
    pub bounds_ok: bool,
    pub lipschitz_ratio: f64,
    pub lipschitz_declared: f64,
    pub lipschitz_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionAReport {
    pub axes: Vec<AxisCheck>,
    pub delta_a: f64,
    pub tol: f64,
    pub pairs: usize,
    pub lipschitz_vacuous: bool,
    pub warnings: Vec<String>,
}

impl ConditionAReport {
    pub fn bounds_ok(&self) -> bool {
        self.axes.iter().all(|a| a.bounds_ok)
    }

    pub fn lipschitz_ok(&self) -> bool {
        self.lipschitz_vacuous || self.axes.iter().all(|a| a.lipschitz_ok)
    }

    pub fn passed(&self) -> bool {
        self.bounds_ok() && self.lipschitz_ok()
    }
}

/// Samples H on a grid over `interval` and checks the bound and ρ_K-Lipschitz clauses.
///
/// `delta_a` defaults to a tenth of the interval diameter.
pub fn validate_condition_a(
    h: &HurstFunctional,
    interval: &Interval,
    resolution: &[usize],
    delta_a: Option<f64>,
    tol: f64,
) -> Result<ConditionAReport> {
    let n = h.n_dims();
    if interval.n_dims() != n {
        return Err(Error::arg(format!("interval is {}-dimensional, functional is {n}-dimensional", interval.n_dims())));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::arg("Condition A check needs at least 2 points per axis"));
    }
    let grid = Grid::new(interval.clone(), resolution.to_vec())?;
    let delta_a = delta_a.unwrap_or(0.1 * interval.diameter());
    let pts = grid.points();
    let vals = pts.iter().map(|t| h.eval(t)).collect::<Result<Vec<_>>>()?;

    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for v in &vals {
        for l in 0..n {
            min[l] = min[l].min(v[l]);
            max[l] = max[l].max(v[l]);
        }
    }

    let mut ratio = vec![0.0f64; n];
    let mut pairs = 0usize;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dist = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist >= delta_a {
                continue;
            }
            pairs += 1;
            let rho = rho_k(&pts[i], &pts[j], &h.k)?;
            for l in 0..n {
                ratio[l] = ratio[l].max((vals[i][l] - vals[j][l]).abs() / rho);
            }
        }
    }
    let vacuous = pairs == 0;
    let mut warnings = Vec::new();
    if vacuous {
        warnings.push(format!(
            "no sampled pair is closer than delta_a = {delta_a:e}; the Lipschitz clause is vacuous on this grid"
        ));
    }
    let axes = (0..n)
        .map(|l| AxisCheck {
            axis: l,
            min: min[l],
            max: max[l],
            alpha: h.alpha,
            k: h.k[l],
            bounds_ok: min[l] >= h.alpha * (1.0 - tol) && max[l] <= h.k[l] * (1.0 + tol),
            lipschitz_ratio: ratio[l],
            lipschitz_declared: h.lipschitz[l],
            lipschitz_ok: ratio[l] <= h.lipschitz[l] * (1.0 + tol),
        })
        .collect();
    Ok(ConditionAReport { axes, delta_a, tol, pairs, lipschitz_vacuous: vacuous, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Exists,
    Empty,
    Boundary,
}

/// τ, β_τ and the associated Hölder split for a Hurst vector and target dimension d.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub d: usize,
    /// `permutation[i]` is the input index of the i-th smallest entry.
    pub permutation: Vec<usize>,
    pub sorted_h: Vec<f64>,
    pub sum_inverse: f64,
    pub regime: Regime,
    /// 1-based, as in the formulas.
    pub tau: Option<usize>,
    pub beta: Option<f64>,
    pub beta_min_formula: f64,
    /// Σ_{ℓ≤k} H_k/H_ℓ + N − k − H_k d for k = 1, …, N.
    pub per_k_values: Vec<f64>,
    pub nu: Option<f64>,
    pub p: Option<Vec<f64>>,
}

fn sorted_with_permutation(h: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut perm: Vec<usize> = (0..h.len()).collect();
    perm.sort_by(|&a, &b| h[a].total_cmp(&h[b]).then(a.cmp(&b)));
    let sorted = perm.iter().map(|&i| h[i]).collect();
    (perm, sorted)
}

fn check_hurst_vector(h: &[f64], d: usize) -> Result<()> {
    if h.is_empty() {
        return Err(Error::arg("Hurst vector is empty"));
    }
    if d == 0 {
        return Err(Error::arg("d must be at least 1"));
    }
    for &x in h {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::arg(format!("Hurst entry {x} outside (0, 1)")));
        }
    }
    Ok(())
}

/// Index τ (1-based) with S_{τ−1} ≤ q < S_τ, ties within [`TIE_TOL`] counted as ≤.
fn select_tau(sorted: &[f64], q: f64) -> Option<usize> {
    let mut s = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        s += 1.0 / x;
        if s > q + TIE_TOL {
            return Some(i + 1);
        }
    }
    None
}

pub fn tau_and_beta(h: &[f64], d: usize) -> Result<ExponentReport> {
    check_hurst_vector(h, d)?;
    let n = h.len();
    let (permutation, sorted) = sorted_with_permutation(h);
    let df = d as f64;
    let sum_inverse: f64 = sorted.iter().map(|x| 1.0 / x).sum();

    let mut per_k_values = Vec::with_capacity(n);
    let mut partial = 0.0;
    for k in 0..n {
        partial += 1.0 / sorted[k];
        per_k_values.push((n - k - 1) as f64 + sorted[k] * (partial - df));
    }
    let beta_min_formula = per_k_values.iter().cloned().fold(f64::INFINITY, f64::min);

    let regime = if (sum_inverse - df).abs() <= TIE_TOL {
        Regime::Boundary
    } else if sum_inverse < df {
        Regime::Empty
    } else {
        Regime::Exists
    };

    let (tau, beta, nu, p) = if regime == Regime::Exists {
        let tau = select_tau(&sorted, df).ok_or_else(|| {
            Error::InternalConsistency(format!("no tau found although sum 1/H = {sum_inverse} > d = {d}"))
        })?;
        let h_tau = sorted[tau - 1];
        let beta = (n - tau) as f64 - h_tau * df + sorted[..tau].iter().map(|x| h_tau / x).sum::<f64>();
        if (beta - beta_min_formula).abs() > TIE_TOL * beta.abs().max(1.0) {
            return Err(Error::InternalConsistency(format!(
                "beta = {beta} disagrees with the min-formula value {beta_min_formula}"
            )));
        }
        let p = sorted.iter().map(|hl| sorted.iter().map(|hi| hl / hi).sum()).collect();
        (Some(tau), Some(beta), Some(df / sum_inverse), Some(p))
    } else {
        (None, None, None, None)
    };

    Ok(ExponentReport {
        d,
        permutation,
        sorted_h: sorted,
        sum_inverse,
        regime,
        tau,
        beta,
        beta_min_formula,
        per_k_values,
        nu,
        p,
    })
}

/// Split into τ exponents satisfying Σ 1/p_ℓ = 1, ρ_ℓ q/p_ℓ < 1 and the Δ-inequality.
#[derive(Debug, Clone, Serialize)]
pub struct TauSplit {
    pub tau: usize,
    pub delta: f64,
    pub p: Vec<f64>,
    /// (1 − Δ) Σ ρ_ℓ q/p_ℓ, the left side of the Δ-inequality.
    pub lhs: f64,
    /// ρ_τ q + τ − Σ_{ℓ≤τ} ρ_τ/ρ_ℓ, its right side.
    pub rhs: f64,
    /// γ chosen in (0, α_τ/(2τ)) with α_τ = Σ_{ℓ≤τ} 1/ρ_ℓ − q.
    pub gamma: f64,
    /// 1-based index ℓ_0 with ρ_{ℓ0} q/p_{ℓ0} + 2ρ_{ℓ0}γ < 1.
    pub ell0: usize,
    pub ell0_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderSplit {
    pub permutation: Vec<usize>,
    pub sorted_h: Vec<f64>,
    /// p_ℓ = Σ_i H̄_ℓ/H̄_i on sorted H̄.
    pub p: Vec<f64>,
    pub nu: f64,
    pub sum_inverse_p: f64,
    pub tau_split: TauSplit,
}

fn violated(msg: String) -> Error {
    Error::InternalConsistency(msg)
}

/// Explicit N-term split plus a constructed τ-term split for (H̄, q = d, Δ = delta).
pub fn holder_split(h_bar: &[f64], d: usize, delta: f64) -> Result<HolderSplit> {
    check_hurst_vector(h_bar, d)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("delta = {delta} outside (0, 1)")));
    }
    let (permutation, rho) = sorted_with_permutation(h_bar);
    let q = d as f64;
    let s: f64 = rho.iter().map(|x| 1.0 / x).sum();
    if s <= q + TIE_TOL {
        return Err(Error::arg(format!("Hölder split needs sum 1/H = {s} > d = {d}")));
    }
    let p: Vec<f64> = rho.iter().map(|hl| rho.iter().map(|hi| hl / hi).sum()).collect();
    let sum_inverse_p = crate::quad::compensated_sum(p.iter().map(|x| 1.0 / x));
    let nu = q / s;

    let tau = select_tau(&rho, q).ok_or_else(|| violated("no tau for the split".into()))?;
    let s_prev: f64 = rho[..tau - 1].iter().map(|x| 1.0 / x).sum();
    let s_tau = s_prev + 1.0 / rho[tau - 1];
    let r_tau = rho[tau - 1];
    let alpha_tau = s_tau - q;

    // x_ℓ = 1/p_ℓ: the first τ−1 sit a factor (1 − η) below their caps 1/(ρ_ℓ q),
    // the last absorbs the remainder. η trades slack in ρ_ℓ q x_ℓ < 1 against the Δ-inequality.
    let rhs = r_tau * q + tau as f64 - rho[..tau].iter().map(|x| r_tau / x).sum::<f64>();
    let growth = r_tau * s_prev - (tau - 1) as f64;
    let mut eta: f64 = 0.5;
    if s_prev > 0.0 {
        eta = eta.min(0.5 * alpha_tau / s_prev);
    }
    if growth > 0.0 {
        eta = eta.min(0.5 * delta * rhs / ((1.0 - delta) * growth));
    }
    let mut x: Vec<f64> = rho[..tau - 1].iter().map(|r| (1.0 - eta) / (r * q)).collect();
    x.push(1.0 - (1.0 - eta) * s_prev / q);
    let p_tau: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();

    let sum_x = crate::quad::compensated_sum(x.iter().cloned());
    if (sum_x - 1.0).abs() > 1e-12 {
        return Err(violated(format!("sum of 1/p_l = {sum_x}, expected 1")));
    }
    for (l, (&r, &pl)) in rho.iter().zip(&p_tau).enumerate() {
        if pl < 1.0 - 1e-12 {
            return Err(violated(format!("p_{} = {pl} < 1", l + 1)));
        }
        if r * q / pl >= 1.0 {
            return Err(violated(format!("rho_{} q / p = {} is not below 1", l + 1, r * q / pl)));
        }
    }
    let lhs = (1.0 - delta) * rho.iter().zip(&p_tau).map(|(r, pl)| r * q / pl).sum::<f64>();
    if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
        return Err(violated(format!("Delta-inequality fails: {lhs} > {rhs}")));
    }

    let gamma = alpha_tau / (4.0 * tau as f64);
    let (ell0, ell0_value) = rho
        .iter()
        .zip(&p_tau)
        .map(|(r, pl)| r * q / pl + 2.0 * r * gamma)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, v)| (i + 1, v))
        .unwrap();
    if ell0_value >= 1.0 {
        return Err(violated(format!("no l0 with rho q/p + 2 rho gamma < 1 (best {ell0_value})")));
    }

    Ok(HolderSplit {
        permutation,
        sorted_h: rho,
        p,
        nu,
        sum_inverse_p,
        tau_split: TauSplit { tau, delta, p: p_tau, lhs, rhs, gamma, ell0, ell0_value },
    })
}
