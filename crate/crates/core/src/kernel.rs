//! Kernels on (0,∞)^n: a registry of named families, moment integrals,
//! reflection, and the truncations used by the sweep drivers.
//!
//! The moment M_α(φ) = ∫ φ(t) ∏ t_j^{-α_j} dt is the central quantity:
//! the sharp operator norms on L^p and on the product Hardy space are
//! exactly such moments (α = 1 - 1/p, α = 1/p, α = 0, α = 1). All
//! quadrature runs in log coordinates s = log t, where the algebraic
//! endpoint weights become smooth exponentials.

use crate::error::{Error, Result};
use crate::quad::{self, QuadOutcome};
use once_cell::sync::Lazy;
use std::sync::Arc;

pub type KernelEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type FactorEval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One axis of a separable kernel.
#[derive(Clone)]
pub struct KernelFactor {
    pub(crate) eval: FactorEval,
    /// Support interval in t; `f64::INFINITY` upper end means unbounded.
    pub(crate) support: Option<(f64, f64)>,
}

impl KernelFactor {
    pub fn new<F>(f: F, support: Option<(f64, f64)>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        KernelFactor {
            eval: Arc::new(f),
            support,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }
}

/// A kernel φ on (0,∞)^n with structural metadata.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    dim: usize,
    eval: KernelEval,
    support: Option<Vec<(f64, f64)>>,
    factors: Option<Vec<KernelFactor>>,
    nonnegative: bool,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("separable", &self.factors.is_some())
            .field("nonnegative", &self.nonnegative)
            .finish()
    }
}

impl Kernel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: KernelEval,
        support: Option<Vec<(f64, f64)>>,
        factors: Option<Vec<KernelFactor>>,
        nonnegative: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("kernel dimension must be >= 1".into()));
        }
        if let Some(s) = &support {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.len(),
                });
            }
            for &(a, b) in s {
                if !(0.0..f64::INFINITY).contains(&a) || b <= a {
                    return Err(Error::InvalidArgument(format!(
                        "invalid support interval [{a}, {b}]"
                    )));
                }
            }
        }
        if let Some(fs) = &factors {
            if fs.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: fs.len(),
                });
            }
        }
        Ok(Kernel {
            name: name.into(),
            dim,
            eval,
            support,
            factors,
            nonnegative,
        })
    }

    /// Separable kernel assembled from per-axis factors.
    pub fn from_factors(
        name: impl Into<String>,
        factors: Vec<KernelFactor>,
        nonnegative: bool,
    ) -> Result<Self> {
        let dim = factors.len();
        let support: Option<Vec<(f64, f64)>> = factors
            .iter()
            .map(|f| f.support)
            .collect::<Option<Vec<_>>>();
        let evals: Vec<FactorEval> = factors.iter().map(|f| f.eval.clone()).collect();
        let eval: KernelEval = Arc::new(move |t: &[f64]| {
            evals.iter().zip(t).map(|(f, &ti)| f(ti)).product()
        });
        Kernel::new(name, dim, eval, support, Some(factors), nonnegative)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        debug_assert_eq!(t.len(), self.dim);
        (self.eval)(t)
    }

    pub fn support(&self) -> Option<&[(f64, f64)]> {
        self.support.as_deref()
    }

    pub fn factors(&self) -> Option<&[KernelFactor]> {
        self.factors.as_deref()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// The factor acting on axis `j`, available whenever the kernel is
    /// separable (every 1-d kernel trivially is).
    pub fn axis_factor(&self, j: usize) -> Option<KernelFactor> {
        if let Some(fs) = &self.factors {
            return fs.get(j).cloned();
        }
        if self.dim == 1 && j == 0 {
            let eval = self.eval.clone();
            return Some(KernelFactor {
                eval: Arc::new(move |t| eval(&[t])),
                support: self.support.as_ref().map(|s| s[0]),
            });
        }
        None
    }

    /// Pointwise sum of two kernels on the same parameter space. The sum
    /// of separable kernels is in general not separable, so the result
    /// carries no factors.
    pub fn sum(a: &Kernel, b: &Kernel) -> Result<Kernel> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                actual: b.dim,
            });
        }
        let (ea, eb) = (a.eval.clone(), b.eval.clone());
        let support = match (&a.support, &b.support) {
            (Some(sa), Some(sb)) => Some(
                sa.iter()
                    .zip(sb)
                    .map(|(&(a0, a1), &(b0, b1))| (a0.min(b0), a1.max(b1)))
                    .collect(),
            ),
            _ => None,
        };
        Kernel::new(
            format!("{}+{}", a.name, b.name),
            a.dim,
            Arc::new(move |t: &[f64]| ea(t) + eb(t)),
            support,
            None,
            a.nonnegative && b.nonnegative,
        )
    }

    /// Drops the separability metadata; used by tests to force the
    /// general quadrature path as a cross-check oracle.
    pub fn without_factors(&self) -> Kernel {
        let mut k = self.clone();
        k.factors = None;
        k
    }
}

/// Computed moment integral with an honest error estimate.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// The moment value; `f64::INFINITY` is the divergence sentinel.
    pub value: f64,
    pub error_estimate: f64,
    pub alpha: Vec<f64>,
    pub converged: bool,
}

impl MomentReport {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

static BUMP_MASS: Lazy<f64> = Lazy::new(|| {
    // \int_{-1}^{1} e^{-1/(1-u^2)} du, the normalization of the standard
    // smooth bump.
    quad::adaptive(&mut |u: f64| bump_profile_raw(u), -1.0, 1.0, 1e-14, 4000).value
});

/// Unnormalized C^∞ bump supported on [-1, 1].
pub fn bump_profile_raw(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// C^∞ bump supported on [-1, 1] with unit integral.
pub fn bump_profile(u: f64) -> f64 {
    bump_profile_raw(u) / *BUMP_MASS
}

fn broadcast_params(params: &[f64], n: usize, family: &str) -> Result<Vec<f64>> {
    if params.len() == 1 {
        Ok(vec![params[0]; n])
    } else if params.len() == n {
        Ok(params.to_vec())
    } else {
        Err(Error::InvalidParams {
            family: family.into(),
            reason: format!("expected 1 or {n} parameters, got {}", params.len()),
        })
    }
}

/// Instantiate a kernel from the registry of named families. All the
/// registry families are separable products of 1-d profiles.
///
/// Families: `box` (indicator of the unit cube; the generated operator is
/// the adjoint Hardy average), `adjoint_hardy` (alias of `box`), `hardy`
/// (t^{-1} above 1; generates the classical Hardy operator), `exp`
/// (product of e^{-t}), `power_box` (t^β on (0,1), β > -1), and `bump`
/// (normalized smooth bump, params = [center, halfwidth]).
pub fn make_named_kernel(name: &str, params: &[f64], n: usize) -> Result<Kernel> {
    if n == 0 {
        return Err(Error::InvalidArgument("kernel dimension must be >= 1".into()));
    }
    match name {
        "box" | "adjoint_hardy" => {
            if !params.is_empty() {
                return Err(Error::InvalidParams {
                    family: name.into(),
                    reason: "family takes no parameters".into(),
                });
            }
            let factors = (0..n)
                .map(|_| {
                    KernelFactor::new(
                        |t| if t > 0.0 && t < 1.0 { 1.0 } else { 0.0 },
                        Some((0.0, 1.0)),
                    )
                })
                .collect();
            Kernel::from_factors(name, factors, true)
        }
        "hardy" => {
            if !params.is_empty() {
                return Err(Error::InvalidParams {
                    family: "hardy".into(),
                    reason: "family takes no parameters".into(),
                });
            }
            let factors = (0..n)
                .map(|_| {
                    KernelFactor::new(
                        |t| if t > 1.0 { 1.0 / t } else { 0.0 },
                        Some((1.0, f64::INFINITY)),
                    )
                })
                .collect();
            Kernel::from_factors("hardy", factors, true)
        }
        "exp" => {
            if !params.is_empty() {
                return Err(Error::InvalidParams {
                    family: "exp".into(),
                    reason: "family takes no parameters".into(),
                });
            }
            let factors = (0..n)
                .map(|_| KernelFactor::new(|t| (-t).exp(), None))
                .collect();
            Kernel::from_factors("exp", factors, true)
        }
        "power_box" => {
            let betas = broadcast_params(params, n, "power_box")?;
            for &b in &betas {
                if b + 1.0 <= 0.0 || !b.is_finite() {
                    return Err(Error::InvalidParams {
                        family: "power_box".into(),
                        reason: format!("exponent base 1+beta must be positive, got beta = {b}"),
                    });
                }
            }
            let factors = betas
                .iter()
                .map(|&b| {
                    KernelFactor::new(
                        move |t| if t > 0.0 && t < 1.0 { t.powf(b) } else { 0.0 },
                        Some((0.0, 1.0)),
                    )
                })
                .collect();
            Kernel::from_factors("power_box", factors, true)
        }
        "bump" => {
            if params.len() != 2 {
                return Err(Error::InvalidParams {
                    family: "bump".into(),
                    reason: "expected [center, halfwidth]".into(),
                });
            }
            let (c, w) = (params[0], params[1]);
            if !(w > 0.0) || !(c - w >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParams {
                    family: "bump".into(),
                    reason: format!(
                        "need halfwidth > 0 and center - halfwidth >= 0, got center = {c}, halfwidth = {w}"
                    ),
                });
            }
            let factors = (0..n)
                .map(|_| {
                    KernelFactor::new(move |t| bump_profile((t - c) / w) / w, Some((c - w, c + w)))
                })
                .collect();
            Kernel::from_factors("bump", factors, true)
        }
        other => Err(Error::UnknownKernel(other.into())),
    }
}

/// Log-coordinate bounds of a factor's support, as `Option` ends for the
/// improper integrator (`None` = infinite).
fn log_bounds(support: Option<(f64, f64)>) -> (Option<f64>, Option<f64>, f64) {
    match support {
        Some((a, b)) => {
            let lo = if a > 0.0 { Some(a.ln()) } else { None };
            let hi = if b.is_finite() { Some(b.ln()) } else { None };
            // Geometric tails start at max(1, a) per the integration rule
            // for unbounded support boxes.
            let anchor = a.max(1.0).ln();
            (lo, hi, anchor)
        }
        None => (None, None, 0.0),
    }
}

/// ∫_0^{upper} φ_j(t) t^{-beta} dt for one separable factor, in log
/// coordinates. `upper = f64::INFINITY` gives the full moment.
pub(crate) fn factor_weighted_moment(
    factor: &KernelFactor,
    beta: f64,
    upper: f64,
    tol: f64,
    max_intervals: usize,
) -> QuadOutcome<f64> {
    let (lo, hi, anchor) = log_bounds(factor.support);
    let hi = match (hi, upper.is_finite()) {
        (Some(h), true) => Some(h.min(upper.ln())),
        (Some(h), false) => Some(h),
        (None, true) => Some(upper.ln()),
        (None, false) => None,
    };
    if let (Some(l), Some(h)) = (lo, hi) {
        if h <= l {
            return QuadOutcome {
                value: 0.0,
                error: 0.0,
                evals: 0,
                converged: true,
                diverged: false,
            };
        }
    }
    let f = factor.eval.clone();
    let mut integrand = move |s: f64| {
        let t = s.exp();
        f(t) * ((1.0 - beta) * s).exp()
    };
    quad::integrate_improper(&mut integrand, lo, hi, anchor, tol, max_intervals)
}

const MOMENT_MAX_INTERVALS: usize = 20_000;

/// Weighted moment ∫ φ(t) ∏ t_j^{-beta_j} dt without the [0,1] exponent
/// restriction of [`moment`]; the sweep drivers need exponents 1 - 1/p - ε.
pub(crate) fn raw_moment(k: &Kernel, beta: &[f64], tol: f64) -> MomentReport {
    assert_eq!(beta.len(), k.dim());
    if let Some(factors) = k.factors() {
        return separable_moment(factors, beta, tol);
    }
    if k.dim() == 1 {
        let factor = k.axis_factor(0).expect("1-d kernel always has a factor");
        return separable_moment(&[factor], beta, tol);
    }
    nd_moment(k, beta, tol)
}

fn separable_moment(factors: &[KernelFactor], beta: &[f64], tol: f64) -> MomentReport {
    let n = factors.len();
    let mut per_axis_tol = tol / n as f64;
    for _pass in 0..2 {
        let outs: Vec<QuadOutcome<f64>> = factors
            .iter()
            .zip(beta)
            .map(|(f, &b)| {
                factor_weighted_moment(f, b, f64::INFINITY, per_axis_tol, MOMENT_MAX_INTERVALS)
            })
            .collect();
        if outs.iter().any(|o| o.diverged) {
            return MomentReport {
                value: f64::INFINITY,
                error_estimate: f64::INFINITY,
                alpha: beta.to_vec(),
                converged: false,
            };
        }
        let value: f64 = outs.iter().map(|o| o.value).product();
        // First-order error propagation through the product.
        let mut err = 0.0;
        for j in 0..n {
            let others: f64 = outs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, o)| o.value.abs())
                .product();
            err += outs[j].error * others;
        }
        let all_converged = outs.iter().all(|o| o.converged);
        if err <= tol || !all_converged {
            return MomentReport {
                value,
                error_estimate: err,
                alpha: beta.to_vec(),
                converged: all_converged && err <= tol,
            };
        }
        // Second pass with tolerances scaled by the observed magnitudes.
        let scale: f64 = outs
            .iter()
            .map(|o| o.value.abs().max(1e-12))
            .fold(f64::INFINITY, f64::min);
        per_axis_tol = (tol / n as f64) * scale / value.abs().max(1e-12);
        per_axis_tol = per_axis_tol.max(1e-15);
    }
    // Fall through after the refinement pass.
    let outs: Vec<QuadOutcome<f64>> = factors
        .iter()
        .zip(beta)
        .map(|(f, &b)| {
            factor_weighted_moment(f, b, f64::INFINITY, per_axis_tol, MOMENT_MAX_INTERVALS)
        })
        .collect();
    let value: f64 = outs.iter().map(|o| o.value).product();
    let err: f64 = outs.iter().map(|o| o.error).sum::<f64>() * value.abs().max(1.0);
    MomentReport {
        value,
        error_estimate: err,
        alpha: beta.to_vec(),
        converged: err <= tol,
    }
}

/// Iterated adaptive quadrature over all axes. Retained as the slow
/// cross-check oracle for the separable product path.
fn nd_moment(k: &Kernel, beta: &[f64], tol: f64) -> MomentReport {
    let n = k.dim();
    let support: Vec<Option<(f64, f64)>> = match k.support() {
        Some(s) => s.iter().map(|&iv| Some(iv)).collect(),
        None => vec![None; n],
    };
    let diverged = std::sync::atomic::AtomicBool::new(false);
    let eval = &k.eval;

    fn level(
        eval: &KernelEval,
        beta: &[f64],
        support: &[Option<(f64, f64)>],
        t_prefix: &mut Vec<f64>,
        axis: usize,
        tol: f64,
        diverged: &std::sync::atomic::AtomicBool,
    ) -> f64 {
        let n = beta.len();
        let (lo, hi, anchor) = log_bounds(support[axis]);
        let b = beta[axis];
        let mut integrand = |s: f64| {
            let t = s.exp();
            t_prefix.push(t);
            let inner = if axis + 1 == n {
                eval(t_prefix)
            } else {
                level(eval, beta, support, t_prefix, axis + 1, tol / 8.0, diverged)
            };
            t_prefix.pop();
            inner * ((1.0 - b) * s).exp()
        };
        let out = quad::integrate_improper(&mut integrand, lo, hi, anchor, tol, 4000);
        if out.diverged {
            diverged.store(true, std::sync::atomic::Ordering::Relaxed);
        }
        out.value
    }

    let mut prefix = Vec::with_capacity(n);
    let value = level(eval, beta, &support, &mut prefix, 0, tol, &diverged);
    if diverged.load(std::sync::atomic::Ordering::Relaxed) {
        return MomentReport {
            value: f64::INFINITY,
            error_estimate: f64::INFINITY,
            alpha: beta.to_vec(),
            converged: false,
        };
    }
    MomentReport {
        value,
        // Iterated error control is heuristic; report the requested
        // tolerance as the estimate rather than pretending to better.
        error_estimate: tol,
        alpha: beta.to_vec(),
        converged: true,
    }
}

/// Moment M_α(φ) = ∫ φ(t) ∏ t_j^{-α_j} dt with α componentwise in [0, 1].
///
/// Separable kernels are evaluated as a product of n one-dimensional
/// integrals; divergence is reported through the `f64::INFINITY` sentinel
/// with `converged = false` rather than an error, so that sweep drivers
/// can tabulate unbounded cases.
pub fn moment(k: &Kernel, alpha: &[f64], tol: f64) -> Result<MomentReport> {
    if alpha.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: alpha.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    for &a in alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidArgument(format!(
                "moment exponent {a} outside [0, 1]"
            )));
        }
    }
    Ok(raw_moment(k, alpha, tol))
}

/// Scalar-α convenience wrapper: the same exponent on every axis.
pub fn moment_uniform(k: &Kernel, alpha: f64, tol: f64) -> Result<MomentReport> {
    moment(k, &vec![alpha; k.dim()], tol)
}

/// The n-dimensional iterated-quadrature route to the same moment,
/// bypassing the separable product fast path.
pub fn moment_via_nd(k: &Kernel, alpha: &[f64], tol: f64) -> Result<MomentReport> {
    if alpha.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: alpha.len(),
        });
    }
    Ok(nd_moment(k, alpha, tol))
}

/// Reflected kernel φ̄(t) = φ(1/t_1, …, 1/t_n) / (t_1 ⋯ t_n), so that
/// H*_φ = H_φ̄. Support boxes invert componentwise and separability is
/// preserved.
pub fn reflect(k: &Kernel) -> Kernel {
    let n = k.dim();
    let eval = k.eval.clone();
    let reflected: KernelEval = Arc::new(move |t: &[f64]| {
        let mut inv = Vec::with_capacity(t.len());
        let mut jac = 1.0;
        for &ti in t {
            inv.push(1.0 / ti);
            jac *= ti;
        }
        eval(&inv) / jac
    });
    let support = k.support().map(|s| {
        s.iter()
            .map(|&(a, b)| {
                let lo = if b.is_finite() { 1.0 / b } else { 0.0 };
                let hi = if a > 0.0 { 1.0 / a } else { f64::INFINITY };
                (lo, hi)
            })
            .collect::<Vec<_>>()
    });
    let factors = k.factors().map(|fs| {
        fs.iter()
            .map(|f| {
                let e = f.eval.clone();
                let support = f.support.map(|(a, b)| {
                    let lo = if b.is_finite() { 1.0 / b } else { 0.0 };
                    let hi = if a > 0.0 { 1.0 / a } else { f64::INFINITY };
                    (lo, hi)
                });
                KernelFactor {
                    eval: Arc::new(move |t: f64| e(1.0 / t) / t),
                    support,
                }
            })
            .collect::<Vec<_>>()
    });
    Kernel {
        name: format!("reflect({})", k.name),
        dim: n,
        eval: reflected,
        support,
        factors,
        nonnegative: k.nonnegative,
    }
}

/// φ_δ = φ · χ_{[δ,1]^n}; requires the kernel to live inside (0,1]^n.
pub fn truncate_inner(k: &Kernel, delta: f64) -> Result<Kernel> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let sup = k.support().ok_or_else(|| {
        Error::SupportViolation("inner truncation requires a declared support box".into())
    })?;
    for &(_, b) in sup {
        if b > 1.0 + 1e-12 {
            return Err(Error::SupportViolation(format!(
                "kernel has mass outside (0,1]^n (support upper end {b})"
            )));
        }
    }
    let eval = k.eval.clone();
    let d = delta;
    let truncated: KernelEval = Arc::new(move |t: &[f64]| {
        if t.iter().all(|&ti| (d..=1.0).contains(&ti)) {
            eval(t)
        } else {
            0.0
        }
    });
    let support = Some(
        sup.iter()
            .map(|&(a, b)| (a.max(delta), b.min(1.0)))
            .collect::<Vec<_>>(),
    );
    let factors = k.factors().map(|fs| {
        fs.iter()
            .map(|f| {
                let e = f.eval.clone();
                let support = f.support.map(|(a, b)| (a.max(d), b.min(1.0)));
                KernelFactor {
                    eval: Arc::new(move |t: f64| if (d..=1.0).contains(&t) { e(t) } else { 0.0 }),
                    support,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(Kernel {
        name: format!("{}|delta={delta}", k.name),
        dim: k.dim,
        eval: truncated,
        support,
        factors,
        nonnegative: k.nonnegative,
    })
}

/// φ_m(t) = φ(m t) · χ_{(0,1)^n}(t), the scaling truncation.
pub fn truncate_scaled(k: &Kernel, m: f64) -> Result<Kernel> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale m must be positive and finite, got {m}"
        )));
    }
    let eval = k.eval.clone();
    let truncated: KernelEval = Arc::new(move |t: &[f64]| {
        if t.iter().any(|&ti| ti <= 0.0 || ti >= 1.0) {
            return 0.0;
        }
        let scaled: Vec<f64> = t.iter().map(|&ti| m * ti).collect();
        eval(&scaled)
    });
    let support = Some(match k.support() {
        Some(s) => s
            .iter()
            .map(|&(a, b)| ((a / m).min(1.0), (b / m).min(1.0).max(a / m + f64::MIN_POSITIVE)))
            .collect::<Vec<_>>(),
        None => vec![(0.0, 1.0); k.dim],
    });
    let factors = k.factors().map(|fs| {
        fs.iter()
            .map(|f| {
                let e = f.eval.clone();
                let support = Some(match f.support {
                    Some((a, b)) => ((a / m).min(1.0), (b / m).min(1.0).max(a / m + f64::MIN_POSITIVE)),
                    None => (0.0, 1.0),
                });
                KernelFactor {
                    eval: Arc::new(move |t: f64| {
                        if t > 0.0 && t < 1.0 {
                            e(m * t)
                        } else {
                            0.0
                        }
                    }),
                    support,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(Kernel {
        name: format!("{}|scaled m={m}", k.name),
        dim: k.dim,
        eval: truncated,
        support,
        factors,
        nonnegative: k.nonnegative,
    })
}

/// Names of the built-in kernel families.
pub fn registry_names() -> &'static [&'static str] {
    &["box", "hardy", "adjoint_hardy", "exp", "power_box", "bump"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-10;

    #[test]
    fn registry_rejects_unknown_and_bad_params() {
        assert!(matches!(
            make_named_kernel("nope", &[], 1),
            Err(Error::UnknownKernel(_))
        ));
        assert!(matches!(
            make_named_kernel("power_box", &[-1.5], 1),
            Err(Error::InvalidParams { .. })
        ));
        assert!(matches!(
            make_named_kernel("bump", &[0.2, 0.5], 1),
            Err(Error::InvalidParams { .. })
        ));
    }

    #[test]
    fn box_moments() {
        let k = make_named_kernel("box", &[], 1).unwrap();
        let m = moment(&k, &[0.5], TOL).unwrap();
        assert!(m.converged);
        assert_abs_diff_eq!(m.value, 2.0, epsilon = 1e-10);

        let k2 = make_named_kernel("box", &[], 2).unwrap();
        let m2 = moment(&k2, &[0.0, 0.0], TOL).unwrap();
        assert_abs_diff_eq!(m2.value, 1.0, epsilon = 1e-10);
        let m2h = moment(&k2, &[0.5, 0.5], TOL).unwrap();
        assert_abs_diff_eq!(m2h.value, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn exp_moment_is_gamma_half() {
        let k = make_named_kernel("exp", &[], 1).unwrap();
        let m = moment(&k, &[0.5], TOL).unwrap();
        assert!(m.converged);
        assert_abs_diff_eq!(m.value, std::f64::consts::PI.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn hardy_moments() {
        let k = make_named_kernel("hardy", &[], 1).unwrap();
        let m = moment(&k, &[0.5], TOL).unwrap();
        assert_abs_diff_eq!(m.value, 2.0, epsilon = 1e-9);
        // \int_1^\infty dt/t diverges.
        let m0 = moment(&k, &[0.0], 1e-8).unwrap();
        assert!(m0.value.is_infinite());
        assert!(!m0.converged);
    }

    #[test]
    fn hardy_reproduces_hardy_average() {
        // H_phi with the hardy kernel is (1/x) \int_0^x f; check on
        // f = chi_(0,1) at x = 2: (1/2) * 1 = 0.5, via direct quadrature
        // of the defining integral.
        let k = make_named_kernel("hardy", &[], 1).unwrap();
        let f = |u: f64| if u > 0.0 && u < 1.0 { 1.0 } else { 0.0 };
        let x = 2.0f64;
        let factor = k.axis_factor(0).unwrap();
        let mut integrand = |s: f64| {
            let t = s.exp();
            f(x / t) * factor.eval(t)
        };
        let out = quad::integrate_improper(&mut integrand, Some(0.0), None, 0.0, 1e-11, 4000);
        assert_abs_diff_eq!(out.value, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn reflect_box_is_hardy() {
        let b = make_named_kernel("box", &[], 1).unwrap();
        let h = make_named_kernel("hardy", &[], 1).unwrap();
        let r = reflect(&b);
        for &t in &[0.5, 1.5, 2.0, 10.0] {
            assert_abs_diff_eq!(r.eval(&[t]), h.eval(&[t]), epsilon = 1e-14);
        }
        let s = r.support().unwrap()[0];
        assert_abs_diff_eq!(s.0, 1.0);
        assert!(s.1.is_infinite());
    }

    #[test]
    fn reflect_is_involution_on_samples() {
        for name in ["box", "hardy", "exp"] {
            let k = make_named_kernel(name, &[], 2).unwrap();
            let rr = reflect(&reflect(&k));
            for &t in &[[0.3, 0.7], [1.2, 2.5], [0.9, 1.1]] {
                assert_abs_diff_eq!(rr.eval(&t), k.eval(&t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reflect_moment_duality_box() {
        let b = make_named_kernel("box", &[], 1).unwrap();
        let r = reflect(&b);
        let lhs = moment(&r, &[0.5], TOL).unwrap();
        let rhs = moment(&b, &[0.5], TOL).unwrap();
        assert_abs_diff_eq!(lhs.value, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lhs.value, rhs.value, epsilon = 1e-9);
    }

    #[test]
    fn truncations() {
        let b = make_named_kernel("box", &[], 1).unwrap();
        let t = truncate_inner(&b, 0.25).unwrap();
        let m = moment(&t, &[0.0], TOL).unwrap();
        assert_abs_diff_eq!(m.value, 0.75, epsilon = 1e-10);

        let h = make_named_kernel("hardy", &[], 1).unwrap();
        assert!(matches!(
            truncate_inner(&h, 0.25),
            Err(Error::SupportViolation(_))
        ));

        let e = make_named_kernel("exp", &[], 1).unwrap();
        let ts = truncate_scaled(&e, 2.0).unwrap();
        let m = moment(&ts, &[0.0], TOL).unwrap();
        // \int_0^1 e^{-2t} dt = (1 - e^{-2})/2
        assert_abs_diff_eq!(m.value, (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn scaled_truncation_change_of_variables() {
        // m^n * moment(phi_m, 0) = \int_{(0,m)^n} phi, cross-checked by a
        // direct restricted quadrature.
        let e = make_named_kernel("exp", &[], 1).unwrap();
        let m = 3.0;
        let ts = truncate_scaled(&e, m).unwrap();
        let lhs = m * moment(&ts, &[0.0], TOL).unwrap().value;
        let factor = e.axis_factor(0).unwrap();
        let direct = factor_weighted_moment(
            &KernelFactor {
                eval: factor.eval.clone(),
                support: Some((0.0, m)),
            },
            0.0,
            f64::INFINITY,
            1e-12,
            4000,
        );
        assert_abs_diff_eq!(lhs, direct.value, epsilon = 1e-9);
    }

    #[test]
    fn monotone_truncation() {
        let b = make_named_kernel("box", &[], 1).unwrap();
        let full = moment(&b, &[0.0], TOL).unwrap().value;
        let mut prev = 0.0;
        for &d in &[0.5, 0.25, 0.125, 0.0625] {
            let v = moment(&truncate_inner(&b, d).unwrap(), &[0.0], TOL).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        assert!((full - prev).abs() < 0.07);
    }

    #[test]
    fn separable_and_nd_paths_agree() {
        let k = make_named_kernel("exp", &[], 2).unwrap();
        let a = [0.3, 0.6];
        let fast = moment(&k, &a, 1e-9).unwrap();
        let slow = moment_via_nd(&k, &a, 1e-7).unwrap();
        assert_abs_diff_eq!(fast.value, slow.value, epsilon = 1e-6);
    }

    #[test]
    fn moment_additivity() {
        let a = make_named_kernel("box", &[], 1).unwrap();
        let b = make_named_kernel("exp", &[], 1).unwrap();
        let s = Kernel::sum(&a, &b).unwrap();
        let ma = moment(&a, &[0.4], TOL).unwrap();
        let mb = moment(&b, &[0.4], TOL).unwrap();
        let ms = moment(&s, &[0.4], 1e-8).unwrap();
        assert!(
            (ms.value - ma.value - mb.value).abs()
                <= 10.0 * (ma.error_estimate + mb.error_estimate + ms.error_estimate) + 1e-8
        );
    }

    #[test]
    fn bump_has_unit_mass() {
        let k = make_named_kernel("bump", &[1.0, 0.5], 1).unwrap();
        let m = moment(&k, &[0.0], TOL).unwrap();
        assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn separable_factor_consistency() {
        for (name, params) in [("box", &[][..]), ("exp", &[][..]), ("power_box", &[1.5][..])] {
            let k = make_named_kernel(name, params, 2).unwrap();
            let fs = k.factors().unwrap();
            for t in [[0.2, 0.8], [0.5, 0.5], [0.9, 0.1], [1.5, 0.3]] {
                let direct = k.eval(&t);
                let product: f64 = fs.iter().zip(&t).map(|(f, &ti)| f.eval(ti)).product();
                assert!((direct - product).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }
}
