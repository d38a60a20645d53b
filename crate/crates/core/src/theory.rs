//! Population-side quantities used to validate estimators and design
//! simulations.
//!
//! The spike-forward map ψ and its derivative are evaluated in closed form
//! for the three structured bulk families the simulation models use
//! (point mass, symmetric two-point mixture, uniform interval), and as a
//! finite average for empirical bulks. ψ′(α) > 0 is the detectability
//! criterion for a population spike α against the given bulk.

use crate::error::{Error, Result};
use crate::matrix::{sym_sqrt, Matrix};

/// Minimal distance from the evaluation point to the bulk support.
const SUPPORT_GAP: f64 = 1e-8;

/// Shape of the limiting (or finite) bulk eigenvalue distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum BulkKind {
    /// All bulk mass at a single point.
    PointMass { value: f64 },
    /// Equal mass at two points.
    TwoPoint { a: f64, b: f64 },
    /// Uniform on [lo, hi].
    Uniform { lo: f64, hi: f64 },
    /// Finite list of eigenvalues with equal weights (descending order).
    Empirical(Vec<f64>),
}

/// A bulk spectral distribution together with the aspect ratio y = p/n.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSpectrum {
    kind: BulkKind,
    y: f64,
}

impl BulkSpectrum {
    pub fn point_mass(value: f64, y: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(Error::Domain(format!(
                "point mass location must be positive, got {value}"
            )));
        }
        Self::with_kind(BulkKind::PointMass { value }, y)
    }

    pub fn two_point(a: f64, b: f64, y: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!(
                "two-point locations must be positive, got {a} and {b}"
            )));
        }
        Self::with_kind(BulkKind::TwoPoint { a, b }, y)
    }

    pub fn uniform(lo: f64, hi: f64, y: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(format!(
                "uniform bulk requires 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        Self::with_kind(BulkKind::Uniform { lo, hi }, y)
    }

    /// Empirical bulk from a list of eigenvalues; stored in descending order.
    pub fn empirical(mut eigenvalues: Vec<f64>, y: f64) -> Result<Self> {
        if eigenvalues.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(
                "empirical bulk eigenvalues must be finite and nonnegative".into(),
            ));
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        Self::with_kind(BulkKind::Empirical(eigenvalues), y)
    }

    fn with_kind(kind: BulkKind, y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!(
                "aspect ratio y must be positive and finite, got {y}"
            )));
        }
        Ok(Self { kind, y })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn kind(&self) -> &BulkKind {
        &self.kind
    }

    fn support_distance(&self, alpha: f64) -> f64 {
        match &self.kind {
            BulkKind::PointMass { value } => (alpha - value).abs(),
            BulkKind::TwoPoint { a, b } => (alpha - a).abs().min((alpha - b).abs()),
            BulkKind::Uniform { lo, hi } => {
                if alpha < *lo {
                    lo - alpha
                } else if alpha > *hi {
                    alpha - hi
                } else {
                    0.0
                }
            }
            BulkKind::Empirical(list) => list
                .iter()
                .map(|v| (alpha - v).abs())
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn check_outside_support(&self, alpha: f64, context: &str) -> Result<()> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("{context}: alpha must be finite")));
        }
        if self.support_distance(alpha) < SUPPORT_GAP {
            return Err(Error::Domain(format!(
                "{context}: alpha = {alpha} is within {SUPPORT_GAP} of the bulk support"
            )));
        }
        Ok(())
    }

    /// ∫ t/(α-t) dH(t).
    fn first_integral(&self, alpha: f64) -> f64 {
        match &self.kind {
            BulkKind::PointMass { value } => value / (alpha - value),
            BulkKind::TwoPoint { a, b } => 0.5 * (a / (alpha - a) + b / (alpha - b)),
            BulkKind::Uniform { lo, hi } => {
                let w = hi - lo;
                -1.0 - alpha / w * ((alpha - hi) / (alpha - lo)).ln()
            }
            BulkKind::Empirical(list) => {
                if list.is_empty() {
                    return 0.0;
                }
                let sum: f64 = list.iter().map(|t| t / (alpha - t)).sum();
                sum / list.len() as f64
            }
        }
    }

    /// ∫ t²/(α-t)² dH(t).
    fn second_integral(&self, alpha: f64) -> f64 {
        match &self.kind {
            BulkKind::PointMass { value } => {
                let r = value / (alpha - value);
                r * r
            }
            BulkKind::TwoPoint { a, b } => {
                let ra = a / (alpha - a);
                let rb = b / (alpha - b);
                0.5 * (ra * ra + rb * rb)
            }
            BulkKind::Uniform { lo, hi } => {
                let w = hi - lo;
                let part = alpha * alpha * (1.0 / (alpha - hi) - 1.0 / (alpha - lo))
                    + 2.0 * alpha * ((alpha - hi) / (alpha - lo)).ln()
                    + w;
                part / w
            }
            BulkKind::Empirical(list) => {
                if list.is_empty() {
                    return 0.0;
                }
                let sum: f64 = list
                    .iter()
                    .map(|t| {
                        let r = t / (alpha - t);
                        r * r
                    })
                    .sum();
                sum / list.len() as f64
            }
        }
    }
}

/// Spike-forward map ψ(α) = α + yα ∫ t/(α-t) dH(t).
pub fn psi(bulk: &BulkSpectrum, alpha: f64) -> Result<f64> {
    bulk.check_outside_support(alpha, "psi")?;
    Ok(alpha + bulk.y * alpha * bulk.first_integral(alpha))
}

/// ψ′(α) = 1 - y ∫ t²/(α-t)² dH(t).
pub fn psi_prime(bulk: &BulkSpectrum, alpha: f64) -> Result<f64> {
    bulk.check_outside_support(alpha, "psi_prime")?;
    Ok(1.0 - bulk.y * bulk.second_integral(alpha))
}

/// A population eigenvalue is supercritical when ψ′ is positive there, in
/// which case its sample counterpart detaches from the bulk.
pub fn is_supercritical(bulk: &BulkSpectrum, alpha: f64) -> Result<bool> {
    Ok(psi_prime(bulk, alpha)? > 0.0)
}

/// Finite-sample spike location: ψ evaluated over the empirical bulk of
/// remaining population eigenvalues. The sample spike concentrates here.
pub fn theta_finite(bulk: &BulkSpectrum, alpha: f64) -> Result<f64> {
    if !matches!(bulk.kind, BulkKind::Empirical(_)) {
        return Err(Error::Domain(
            "theta_finite requires an empirical bulk of remaining eigenvalues".into(),
        ));
    }
    psi(bulk, alpha)
}

/// Population variance of the centered Frobenius statistic b1 + b2 - 2c.
///
/// Every term is evaluated exactly as written: per-sample traces of Σᵢ²,
/// traces of (Σᵢ² - Σ₁Σ₂)², the kurtosis term over the diagonal of the
/// Hadamard square of Σᵢ^{1/2}(Σ₁-Σ₂)Σᵢ^{1/2}, plus the cross term
/// 8 tr²(Σ₁Σ₂)/n².
pub fn population_sigma1_sq(
    sigma1: &Matrix,
    sigma2: &Matrix,
    gamma4_1: f64,
    gamma4_2: f64,
    n: usize,
) -> Result<f64> {
    if !sigma1.is_square() || !sigma2.is_square() || sigma1.rows() != sigma2.rows() {
        return Err(Error::Dimension(
            "population_sigma1_sq: covariance matrices must be square with equal size".into(),
        ));
    }
    if n == 0 {
        return Err(Error::Domain("population_sigma1_sq: n must be positive".into()));
    }
    let nf = n as f64;
    let s12 = sigma1.matmul(sigma2)?;
    let diff = sigma1.sub(sigma2)?;

    let mut total = 0.0;
    for (sigma, gamma4) in [(sigma1, gamma4_1), (sigma2, gamma4_2)] {
        let ssq = sigma.matmul(sigma)?;
        total += 4.0 / (nf * nf) * ssq.trace();

        let a = ssq.sub(&s12)?;
        total += 8.0 / nf * a.trace_product(&a)?;

        let root = sym_sqrt(sigma)?;
        let mid = root.matmul(&diff)?.matmul(&root)?;
        total += 4.0 * (gamma4 - 3.0) / nf * mid.diag_square_sum();
    }
    let cross = s12.trace();
    total += 8.0 / (nf * nf) * cross * cross;
    Ok(total)
}

/// Asymptotic variance of a sqrt(n)-scaled supercritical sample eigenvalue:
/// (γ₄-3) α² ψ′(α)² Σu⁴ + 2 α² ψ′(α).
pub fn population_spike_var(
    bulk: &BulkSpectrum,
    alpha_k: f64,
    gamma4: f64,
    u4_sum: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&u4_sum) {
        return Err(Error::Domain(format!(
            "population_spike_var: u4_sum must lie in [0,1], got {u4_sum}"
        )));
    }
    let deriv = psi_prime(bulk, alpha_k)?;
    if deriv <= 0.0 {
        return Err(Error::Domain(format!(
            "population_spike_var: alpha = {alpha_k} is subcritical (psi' = {deriv})"
        )));
    }
    Ok((gamma4 - 3.0) * alpha_k * alpha_k * deriv * deriv * u4_sum
        + 2.0 * alpha_k * alpha_k * deriv)
}

/// Asymptotic covariance of two distinct sqrt(n)-scaled supercritical sample
/// eigenvalues: (γ₄-3) α_k α_l ψ′(α_k) ψ′(α_l) Σu²u².
pub fn population_spike_cov(
    bulk: &BulkSpectrum,
    alpha_k: f64,
    alpha_l: f64,
    gamma4: f64,
    u22_sum: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&u22_sum) {
        return Err(Error::Domain(format!(
            "population_spike_cov: u22_sum must lie in [0,1], got {u22_sum}"
        )));
    }
    let dk = psi_prime(bulk, alpha_k)?;
    let dl = psi_prime(bulk, alpha_l)?;
    if dk <= 0.0 || dl <= 0.0 {
        return Err(Error::Domain(
            "population_spike_cov: both spikes must be supercritical".into(),
        ));
    }
    Ok((gamma4 - 3.0) * alpha_k * alpha_l * dk * dl * u22_sum)
}
