//! Leading-eigenvalue detector.
//!
//! Sample covariance spectra and the plug-in estimators of the spike
//! parameters: the population spike locations, the derivative of the
//! spike-forward map, the entry kurtosis, and the eigenvector functionals
//! needed to assemble the asymptotic variance of the leading sample
//! eigenvalues. The single-spike statistic has a closed-form normal p-value;
//! the multi-spike statistic is calibrated by resampling the L1 norm of a
//! centered Gaussian vector with the estimated covariance.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dist::{std_normal_cdf, RngStream};
use crate::error::{Error, Result};
use crate::matrix::{cholesky_psd, sym_eigen, Matrix, SampleMatrix};

/// Minimal gap between consecutive eigenvalues for a spike to count as simple.
const SPIKE_GAP: f64 = 1e-8;

/// Eigenvalues within this distance are collapsed to one pole when locating
/// the roots of the empirical spectral equation.
const POLE_COLLAPSE_TOL: f64 = 1e-10;

/// Spectral decomposition of a sample covariance matrix.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    /// Eigenvalues in descending order, clipped below at zero.
    pub eigenvalues: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: Matrix,
    /// Sample size the covariance was computed from.
    pub n: usize,
    /// Dimension.
    pub p: usize,
}

impl SpectrumSummary {
    /// Aspect ratio y = p/n.
    pub fn y(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Sample covariance with divisor n: S = (1/n) Σ (x_j - x̄)(x_j - x̄)ᵀ.
pub fn sample_covariance(x: &SampleMatrix) -> Result<Matrix> {
    let n = x.n();
    if n < 2 {
        return Err(Error::InsufficientSample { min: 2, got: n });
    }
    let mean = x.mean();
    let p = x.p();
    let mut centered = nalgebra::DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            centered[(i, j)] = x.get(i, j) - mean[j];
        }
    }
    let s = centered.transpose() * &centered / n as f64;
    let s = (&s + s.transpose()) * 0.5;
    Ok(Matrix::from_inner(s))
}

/// Sample covariance spectrum.
///
/// Negative eigenvalues are clipped to zero, and so is anything below the
/// numerical-rank tolerance p·eps·λ₁: a centered covariance has rank at most
/// n-1, and the solver's machine-noise remnants of the exact zeros must not
/// masquerade as poles of the spectral equation.
pub fn spectrum(x: &SampleMatrix) -> Result<SpectrumSummary> {
    let s = sample_covariance(x)?;
    let eig = sym_eigen(&s)?;
    let scale = eig.values.first().map_or(1.0, |v| v.abs().max(1.0));
    let rank_tol = x.p() as f64 * f64::EPSILON * scale;
    let mut eigenvalues = Vec::with_capacity(eig.values.len());
    for &v in &eig.values {
        if v < -1e-6 * scale {
            return Err(Error::DegenerateSpectrum(format!(
                "sample covariance produced eigenvalue {v}, far below zero"
            )));
        }
        eigenvalues.push(if v < rank_tol { 0.0 } else { v });
    }
    Ok(SpectrumSummary {
        eigenvalues,
        vectors: eig.vectors,
        n: x.n(),
        p: x.p(),
    })
}

fn check_spike_index(spec: &SpectrumSummary, k: usize) -> Result<()> {
    let lam = &spec.eigenvalues;
    if k + 1 >= lam.len() {
        return Err(Error::DegenerateSpectrum(format!(
            "spike index {k} needs a trailing eigenvalue; spectrum has length {}",
            lam.len()
        )));
    }
    if !(lam[k] > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "spike eigenvalue {} at index {k} is not positive",
            lam[k]
        )));
    }
    if lam[k] - lam[k + 1] < SPIKE_GAP {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalues {} and {} at indices {k}, {} are not separated by {SPIKE_GAP}",
            lam[k],
            lam[k + 1],
            k + 1
        )));
    }
    if k > 0 && lam[k - 1] - lam[k] < SPIKE_GAP {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalues at indices {}, {k} are not separated by {SPIKE_GAP}",
            k - 1
        )));
    }
    Ok(())
}

/// Estimate of the k-th population spike (zero-based k) from the sample
/// spectrum: the reciprocal of (1-y)/λ_k + (1/n) Σ_{j≠k} 1/(λ_k - λ_j).
pub fn alpha_hat(spec: &SpectrumSummary, k: usize) -> Result<f64> {
    check_spike_index(spec, k)?;
    let lam = &spec.eigenvalues;
    let y = spec.y();
    let lead = (1.0 - y) / lam[k];
    let mut sum = 0.0;
    let mut magnitude = lead.abs();
    for (j, &v) in lam.iter().enumerate() {
        if j == k {
            continue;
        }
        let term = 1.0 / (lam[k] - v);
        sum += term;
        magnitude += term.abs() / spec.n as f64;
    }
    let den = lead + sum / spec.n as f64;
    if !den.is_finite() || den.abs() < 1e-12 * magnitude.max(1e-300) {
        return Err(Error::DegenerateSpectrum(format!(
            "alpha_hat denominator cancels at spike {k} (value {den})"
        )));
    }
    Ok(1.0 / den)
}

/// Estimate of ψ′ at the k-th spike, from the sample spectrum and the
/// matching [`alpha_hat`] value.
pub fn xi_hat(spec: &SpectrumSummary, alpha_hat_k: f64, k: usize) -> Result<f64> {
    check_spike_index(spec, k)?;
    let lam = &spec.eigenvalues;
    let y = spec.y();
    let lead = (1.0 - y) / (lam[k] * lam[k]);
    let mut sum = 0.0;
    let mut magnitude = lead.abs();
    for (j, &v) in lam.iter().enumerate() {
        if j == k {
            continue;
        }
        let gap = lam[k] - v;
        let term = 1.0 / (gap * gap);
        sum += term;
        magnitude += term / spec.n as f64;
    }
    let den = alpha_hat_k * alpha_hat_k * (lead + sum / spec.n as f64);
    if !den.is_finite() || den.abs() < 1e-12 * (alpha_hat_k * alpha_hat_k * magnitude).max(1e-300)
    {
        return Err(Error::DegenerateSpectrum(format!(
            "xi_hat denominator cancels at spike {k} (value {den})"
        )));
    }
    Ok(1.0 / den)
}

/// Kurtosis estimate of the i.i.d. data entries, clipped below at 1.
///
/// Uses tau = tr(S²) - tr²(S)/n, nu = the empirical variance of the centered
/// squared norms, and omega = Σ_j S_jj²; the estimate is 3 + (nu - 2 tau)/omega.
pub fn kurtosis_hat(x: &SampleMatrix) -> Result<f64> {
    let n = x.n();
    if n < 2 {
        return Err(Error::InsufficientSample { min: 2, got: n });
    }
    let s = sample_covariance(x)?;
    let p = x.p();

    let tr_s = s.trace();
    let mut tr_s2 = 0.0;
    let mut omega = 0.0;
    for i in 0..p {
        for j in 0..p {
            let v = s.get(i, j);
            tr_s2 += v * v;
        }
        let d = s.get(i, i);
        omega += d * d;
    }
    let tau = tr_s2 - tr_s * tr_s / n as f64;

    let mean = x.mean();
    let norms: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..p {
                let c = x.get(i, j) - mean[j];
                acc += c * c;
            }
            acc
        })
        .collect();
    let nbar = norms.iter().sum::<f64>() / n as f64;
    let nu = norms.iter().map(|v| (v - nbar) * (v - nbar)).sum::<f64>() / (n as f64 - 1.0);

    if omega <= 0.0 {
        return Err(Error::DegenerateData(
            "all coordinates have zero empirical variance".into(),
        ));
    }
    Ok((3.0 + (nu - 2.0 * tau) / omega).max(1.0))
}

/// Evaluate (1/p) Σ w_i v_i / (v_i - x) over collapsed poles.
fn spectral_equation(poles: &[(f64, f64)], p: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for &(v, w) in poles {
        acc += w * v / (v - x);
    }
    acc / p as f64
}

/// Roots of the empirical spectral equation (1/p) Σ λ_j/(λ_j - x) = 1/y,
/// with y = p/n.
///
/// One root lies strictly inside each gap between consecutive distinct
/// positive sample eigenvalues and one below the smallest; the map is
/// strictly increasing between poles, so monotone bisection always brackets.
/// The returned vector is descending and padded with zeros to length p, which
/// also realizes the convention that trailing positions are zero when y > 1.
pub fn theta_roots(spec: &SpectrumSummary) -> Result<Vec<f64>> {
    let p = spec.p;
    let target = spec.n as f64 / p as f64; // 1/y

    // Collapse near-equal positive eigenvalues into weighted poles, descending.
    let mut poles: Vec<(f64, f64)> = Vec::new();
    for &v in &spec.eigenvalues {
        if v <= 0.0 {
            continue;
        }
        match poles.last_mut() {
            Some((pv, w)) if *pv - v < POLE_COLLAPSE_TOL => *w += 1.0,
            _ => poles.push((v, 1.0)),
        }
    }
    if poles.is_empty() {
        return Ok(vec![0.0; p]);
    }

    let h = |x: f64| spectral_equation(&poles, p, x);
    let mut roots = Vec::with_capacity(poles.len());
    for i in 0..poles.len() {
        // Bracket (lower, upper): endpoints are poles and are never evaluated;
        // bisection only probes interior midpoints.
        let upper = poles[i].0;
        let lower = if i + 1 < poles.len() {
            poles[i + 1].0
        } else {
            -1e-3 * poles[0].0.max(1.0)
        };
        roots.push(bisect_increasing(&h, target, lower, upper, poles[i].0)?);
    }

    roots.resize(p, 0.0);
    Ok(roots)
}

/// Bisection for h(x) = target on the open interval (lo, hi) where h is
/// strictly increasing and diverges to -inf and +inf at the endpoints.
fn bisect_increasing(
    h: &dyn Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    pole: f64,
) -> Result<f64> {
    let mut best = f64::NAN;
    let mut best_residual = f64::INFINITY;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval exhausted at f64 resolution
        }
        let val = h(mid);
        let residual = (val - target).abs();
        if residual < best_residual {
            best_residual = residual;
            best = mid;
        }
        if val < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !best.is_finite() {
        return Err(Error::RootFinding(format!(
            "no evaluable point inside bracket ({lo}, {hi}) below pole {pole}"
        )));
    }
    Ok(best)
}

/// 0/0 evaluates to 0; all other quotients are plain division.
fn frac(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Weights ρ_k(m) over eigenvector indices, combined with the squared
/// eigenvector coordinates into one vector per spike.
fn eigenvector_weights(spec: &SpectrumSummary, theta: &[f64], k: usize) -> Result<Vec<f64>> {
    let lam = &spec.eigenvalues;
    let p = spec.p;
    let mut rho = vec![0.0; p];
    for m in 0..p {
        if m == k {
            let mut eta = 0.0;
            for l in 0..p {
                if l == k {
                    continue;
                }
                eta += frac(lam[l], lam[k] - lam[l]) - frac(theta[l], lam[k] - theta[l]);
            }
            rho[m] = 1.0 + eta;
        } else {
            let zeta = frac(lam[k], lam[m] - lam[k]) - frac(theta[k], lam[m] - theta[k]);
            rho[m] = -zeta;
        }
    }

    let g = &spec.vectors;
    let mut w = vec![0.0; p];
    for m in 0..p {
        let r = rho[m];
        if r == 0.0 {
            continue;
        }
        for j in 0..p {
            let gc = g.get(j, m);
            w[j] += r * gc * gc;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvector functional for spike {k} is not finite (tied eigenvalues)"
        )));
    }
    Ok(w)
}

/// Estimator of Σ_j u²_{j,k} u²_{j,l} for population eigenvectors u, from the
/// sample eigenvectors and the spectral-equation roots. Symmetric in (k, l).
pub fn kappa_hat(spec: &SpectrumSummary, theta: &[f64], k: usize, l: usize) -> Result<f64> {
    if theta.len() != spec.p {
        return Err(Error::Dimension(format!(
            "kappa_hat: expected {} roots, got {}",
            spec.p,
            theta.len()
        )));
    }
    let wk = eigenvector_weights(spec, theta, k)?;
    if l == k {
        return Ok(wk.iter().map(|v| v * v).sum());
    }
    let wl = eigenvector_weights(spec, theta, l)?;
    Ok(wk.iter().zip(wl.iter()).map(|(a, b)| a * b).sum())
}

/// Eigenvector functionals estimate quantities in [0, 1]; estimates are
/// clipped into this range (with slack) to keep variance assembly sane when
/// a spike sits close to its neighbors.
const KAPPA_MAX: f64 = 1.05;

/// Per-sample bundle of spike parameter estimates for the leading m spikes.
#[derive(Debug, Clone)]
pub struct SpikeEstimates {
    pub alpha_hat: Vec<f64>,
    pub xi_hat: Vec<f64>,
    pub gamma4_hat: f64,
    /// m×m symmetric matrix of eigenvector functionals, entries in
    /// [0, KAPPA_MAX].
    pub kappa_hat: Matrix,
    /// Roots of the empirical spectral equation (length p).
    pub theta_roots: Vec<f64>,
    /// Clipping events recorded while enforcing the bundle invariants.
    pub diagnostics: Vec<String>,
}

/// Compute all spike estimates for one sample.
pub fn estimate_spikes(
    x: &SampleMatrix,
    spec: &SpectrumSummary,
    m: usize,
) -> Result<SpikeEstimates> {
    if m == 0 {
        return Err(Error::Config("number of spikes m must be at least 1".into()));
    }
    if m >= spec.p {
        return Err(Error::Dimension(format!(
            "m = {m} spikes requested but the spectrum has only p = {} eigenvalues",
            spec.p
        )));
    }
    let theta = theta_roots(spec)?;
    let mut alpha = Vec::with_capacity(m);
    let mut xi = Vec::with_capacity(m);
    for k in 0..m {
        let a = alpha_hat(spec, k)?;
        let x = xi_hat(spec, a, k)?;
        if !(x > 0.0) {
            return Err(Error::DegenerateSpectrum(format!(
                "xi_hat at spike {k} is {x}; the spike is below the detection regime"
            )));
        }
        alpha.push(a);
        xi.push(x);
    }
    let gamma4 = kurtosis_hat(x)?;

    let mut diagnostics = Vec::new();
    let mut kappa = vec![0.0; m * m];
    for k in 0..m {
        for l in k..m {
            let raw = kappa_hat(spec, &theta, k, l)?;
            let v = raw.clamp(0.0, KAPPA_MAX);
            if v != raw {
                diagnostics.push(format!(
                    "kappa_hat[{k},{l}] = {raw} clipped to {v}"
                ));
            }
            kappa[k * m + l] = v;
            kappa[l * m + k] = v;
        }
    }

    Ok(SpikeEstimates {
        alpha_hat: alpha,
        xi_hat: xi,
        gamma4_hat: gamma4,
        kappa_hat: Matrix::from_rows(m, m, &kappa)?,
        theta_roots: theta,
        diagnostics,
    })
}

/// Estimated covariance of the sqrt(n)-scaled leading eigenvalue differences.
#[derive(Debug, Clone)]
pub struct SpikeCovariance {
    /// Variance of the scaled leading-eigenvalue difference (the (0,0) entry).
    pub sigma2_hat: f64,
    /// m×m covariance matrix, the entrywise sum of both samples' spike
    /// variances and covariances.
    pub sigma_e_hat: Matrix,
}

fn spike_entry(est: &SpikeEstimates, k: usize, l: usize) -> f64 {
    let g = est.gamma4_hat - 3.0;
    let (ak, al) = (est.alpha_hat[k], est.alpha_hat[l]);
    let (xk, xl) = (est.xi_hat[k], est.xi_hat[l]);
    let kap = est.kappa_hat.get(k, l);
    if k == l {
        g * ak * ak * xk * xk * kap + 2.0 * ak * ak * xk
    } else {
        g * ak * al * xk * xl * kap
    }
}

/// Assemble the spike covariance estimate from both samples' estimates.
pub fn spike_sigma_hat(
    est1: &SpikeEstimates,
    est2: &SpikeEstimates,
    m: usize,
) -> Result<SpikeCovariance> {
    if est1.alpha_hat.len() < m || est2.alpha_hat.len() < m {
        return Err(Error::Dimension(format!(
            "spike_sigma_hat: estimates cover {} and {} spikes, need {m}",
            est1.alpha_hat.len(),
            est2.alpha_hat.len()
        )));
    }
    let mut entries = vec![0.0; m * m];
    for k in 0..m {
        for l in k..m {
            let v = spike_entry(est1, k, l) + spike_entry(est2, k, l);
            entries[k * m + l] = v;
            entries[l * m + k] = v;
        }
    }
    for k in 0..m {
        if !(entries[k * m + k] > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "spike covariance diagonal entry {k} is {} (must be positive)",
                entries[k * m + k]
            )));
        }
    }
    let sigma_e_hat = Matrix::from_rows(m, m, &entries)?;
    Ok(SpikeCovariance {
        sigma2_hat: sigma_e_hat.get(0, 0),
        sigma_e_hat,
    })
}

/// Leading-eigenvalue test statistic and its p-value.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EigenStat {
    /// Signed standardized difference for m = 1; the nonnegative scaled L1
    /// sum of eigenvalue differences for m >= 2.
    pub t2: f64,
    /// Two-sided normal p-value for m = 1, Monte-Carlo p-value otherwise.
    pub p2: f64,
    pub m: usize,
    /// Monte-Carlo draws used (0 when the closed form applies).
    pub mc_draws: usize,
    /// (seed, stream) of the Monte-Carlo sampler, when one was used.
    pub mc_seed: Option<(u64, u64)>,
    pub diagnostics: Vec<String>,
}

fn check_same_shape(spec1: &SpectrumSummary, spec2: &SpectrumSummary) -> Result<()> {
    if spec1.n != spec2.n || spec1.p != spec2.p {
        return Err(Error::Dimension(format!(
            "spectra come from different shapes: ({}, {}) vs ({}, {})",
            spec1.n, spec1.p, spec2.n, spec2.p
        )));
    }
    Ok(())
}

/// Single-spike statistic with its closed-form two-sided p-value.
pub fn eigen_stat_single(
    spec1: &SpectrumSummary,
    spec2: &SpectrumSummary,
    cov: &SpikeCovariance,
) -> Result<EigenStat> {
    check_same_shape(spec1, spec2)?;
    if !(cov.sigma2_hat > 0.0) {
        return Err(Error::DegenerateVariance(format!(
            "sigma2_hat = {} must be positive",
            cov.sigma2_hat
        )));
    }
    let n = spec1.n as f64;
    let t2 = n.sqrt() * (spec1.eigenvalues[0] - spec2.eigenvalues[0]) / cov.sigma2_hat.sqrt();
    // 2(1 - Φ(|t2|)) in the cancellation-free survival form.
    let p2 = 2.0 * std_normal_cdf(-t2.abs());
    Ok(EigenStat {
        t2,
        p2,
        m: 1,
        mc_draws: 0,
        mc_seed: None,
        diagnostics: Vec::new(),
    })
}

/// Multi-spike statistic with a resampled p-value.
///
/// The p-value is P(‖W‖₁ >= t) for W drawn from a centered Gaussian with the
/// estimated spike covariance, estimated with add-one smoothing so it never
/// reaches zero. The covariance factor comes from [`cholesky_psd`]; a repair
/// whose eigenvalue shift exceeds 1e-3 of the spectral norm is recorded as a
/// diagnostic but is not fatal.
pub fn eigen_stat_multi(
    spec1: &SpectrumSummary,
    spec2: &SpectrumSummary,
    cov: &SpikeCovariance,
    m: usize,
    draws: usize,
    rng: &mut RngStream,
) -> Result<EigenStat> {
    check_same_shape(spec1, spec2)?;
    if m == 0 {
        return Err(Error::Config("eigen_stat_multi: m must be at least 1".into()));
    }
    if draws < 1000 {
        return Err(Error::Config(format!(
            "eigen_stat_multi: at least 1000 Monte-Carlo draws required, got {draws}"
        )));
    }
    if cov.sigma_e_hat.rows() != m {
        return Err(Error::Dimension(format!(
            "eigen_stat_multi: covariance is {}x{}, expected {m}x{m}",
            cov.sigma_e_hat.rows(),
            cov.sigma_e_hat.cols()
        )));
    }
    if spec1.eigenvalues.len() < m {
        return Err(Error::Dimension(format!(
            "eigen_stat_multi: spectra have {} eigenvalues, need {m}",
            spec1.eigenvalues.len()
        )));
    }

    let n = spec1.n as f64;
    let mut t2m = 0.0;
    for j in 0..m {
        t2m += (spec1.eigenvalues[j] - spec2.eigenvalues[j]).abs();
    }
    t2m *= n.sqrt();

    let mut diagnostics = Vec::new();
    let factor = cholesky_psd(&cov.sigma_e_hat, 1e-10)?;
    if let Some(repair) = factor.repair {
        if repair.eigen_shift > 1e-3 * repair.spectral_norm {
            diagnostics.push(format!(
                "spike covariance repair exceeded budget: eigenvalue shift {} vs spectral norm {}",
                repair.eigen_shift, repair.spectral_norm
            ));
        } else {
            diagnostics.push(format!(
                "spike covariance repaired by eigenvalue clipping (shift {})",
                repair.eigen_shift
            ));
        }
    }

    let l = &factor.l;
    let mut z = vec![0.0_f64; m];
    let mut exceed = 0_usize;
    for _ in 0..draws {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let mut l1 = 0.0;
        for i in 0..m {
            let mut w = 0.0;
            for j in 0..=i {
                w += l.get(i, j) * z[j];
            }
            l1 += w.abs();
        }
        if l1 >= t2m {
            exceed += 1;
        }
    }
    let p2 = (1.0 + exceed as f64) / (draws as f64 + 1.0);

    Ok(EigenStat {
        t2: t2m,
        p2,
        m,
        mc_draws: draws,
        mc_seed: Some((rng.seed(), rng.stream())),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_entry, DataDist};

    fn basis_spectrum(values: &[f64], n: usize) -> SpectrumSummary {
        let p = values.len();
        SpectrumSummary {
            eigenvalues: values.to_vec(),
            vectors: Matrix::identity(p),
            n,
            p,
        }
    }

    #[test]
    fn covariance_of_identical_observations_is_zero() {
        let x = SampleMatrix::from_rows(2, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        let s = sample_covariance(&x).unwrap();
        assert!(s.max_abs() < 1e-15);
    }

    #[test]
    fn covariance_hand_value_and_guards() {
        let x = SampleMatrix::from_rows(2, 1, &[0.0, 2.0]).unwrap();
        let s = sample_covariance(&x).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-15);

        let one = SampleMatrix::from_rows(1, 2, &[1.0, 2.0]).unwrap();
        assert!(matches!(
            sample_covariance(&one),
            Err(Error::InsufficientSample { min: 2, .. })
        ));
    }

    #[test]
    fn covariance_is_psd_for_duplicated_rows() {
        let x = SampleMatrix::from_rows(
            4,
            2,
            &[1.0, -1.0, 1.0, -1.0, 0.5, 2.0, 0.5, 2.0],
        )
        .unwrap();
        let spec = spectrum(&x).unwrap();
        assert!(spec.eigenvalues.iter().all(|v| *v >= 0.0));
        for k in 1..spec.eigenvalues.len() {
            assert!(spec.eigenvalues[k - 1] >= spec.eigenvalues[k]);
        }
    }

    #[test]
    fn alpha_hat_formula_arithmetic() {
        // y = 1 kills the leading term; the index sum gives (1/4)(3/9) = 1/12.
        let spec = basis_spectrum(&[10.0, 1.0, 1.0, 1.0], 4);
        assert!((alpha_hat(&spec, 0).unwrap() - 12.0).abs() < 1e-12);

        // y -> 0 recovers the raw eigenvalue.
        let spec = basis_spectrum(&[10.0, 1.0, 1.0, 1.0], 1_000_000);
        assert!((alpha_hat(&spec, 0).unwrap() - 10.0).abs() < 1e-4);
    }

    #[test]
    fn xi_hat_formula_arithmetic() {
        let spec = basis_spectrum(&[10.0, 1.0, 1.0, 1.0], 4);
        let xi = xi_hat(&spec, 12.0, 0).unwrap();
        assert!((xi - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tied_spike_is_degenerate() {
        let spec = basis_spectrum(&[5.0, 5.0, 1.0], 10);
        assert!(matches!(
            alpha_hat(&spec, 0),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(xi_hat(&spec, 5.0, 0).is_err());
    }

    #[test]
    fn kurtosis_clips_at_one() {
        // Equal squared norms (nu = 0) with strongly correlated coordinates
        // (tau > omega) push the raw estimate below 1.
        let x = SampleMatrix::from_rows(
            4,
            2,
            &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        )
        .unwrap();
        assert_eq!(kurtosis_hat(&x).unwrap(), 1.0);
    }

    #[test]
    fn kurtosis_rejects_constant_data() {
        let x = SampleMatrix::from_rows(3, 2, &[5.0, -2.0, 5.0, -2.0, 5.0, -2.0]).unwrap();
        assert!(matches!(
            kurtosis_hat(&x),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn kurtosis_tracks_the_entry_distribution() {
        let mut rng = RngStream::new(404, 0);
        let n = 200;
        let p = 40;
        let entries: Vec<f64> = (0..n * p)
            .map(|_| sample_entry(DataDist::Gaussian, &mut rng))
            .collect();
        let x = SampleMatrix::from_rows(n, p, &entries).unwrap();
        let g = kurtosis_hat(&x).unwrap();
        assert!((2.0..4.0).contains(&g), "gaussian kurtosis estimate {g}");
    }

    #[test]
    fn theta_roots_two_point_hand_value() {
        // lambda = (2, 1) at y = 1: 2/(2-x) + 1/(1-x) = 2 has roots 3/2 and 0.
        let spec = basis_spectrum(&[2.0, 1.0], 2);
        let roots = theta_roots(&spec).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 1.5).abs() < 1e-9, "roots {roots:?}");
        assert!(roots[1].abs() < 1e-9);
    }

    #[test]
    fn theta_roots_equal_spectrum_collapses_to_zero() {
        let spec = basis_spectrum(&[3.0, 3.0, 3.0], 3);
        let roots = theta_roots(&spec).unwrap();
        for r in roots {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn theta_roots_satisfy_equation_and_interlace() {
        let mut rng = RngStream::new(311, 0);
        for _ in 0..10 {
            let p = 6;
            let n = 12;
            let entries: Vec<f64> = (0..n * p)
                .map(|_| sample_entry(DataDist::Gaussian, &mut rng))
                .collect();
            let x = SampleMatrix::from_rows(n, p, &entries).unwrap();
            let spec = spectrum(&x).unwrap();
            let roots = theta_roots(&spec).unwrap();
            let target = 1.0 / spec.y();
            for (idx, &r) in roots.iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                let h: f64 = spec
                    .eigenvalues
                    .iter()
                    .map(|&l| l / (l - r))
                    .sum::<f64>()
                    / p as f64;
                assert!(
                    (h - target).abs() < 1e-9,
                    "root {idx} residual {}",
                    (h - target).abs()
                );
                // Interlacing: strictly inside the gap below eigenvalue idx.
                assert!(spec.eigenvalues[idx] > r);
                if idx + 1 < p && spec.eigenvalues[idx + 1] > 0.0 {
                    assert!(r > spec.eigenvalues[idx + 1]);
                }
            }
        }
    }

    #[test]
    fn kappa_single_coordinate_is_one() {
        let spec = basis_spectrum(&[4.0], 8);
        let kappa = kappa_hat(&spec, &[0.0], 0, 0).unwrap();
        assert!((kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_exactly_symmetric() {
        let mut rng = RngStream::new(98, 0);
        let n = 30;
        let p = 8;
        let entries: Vec<f64> = (0..n * p)
            .map(|_| sample_entry(DataDist::Gaussian, &mut rng))
            .collect();
        let x = SampleMatrix::from_rows(n, p, &entries).unwrap();
        let spec = spectrum(&x).unwrap();
        let theta = theta_roots(&spec).unwrap();
        let a = kappa_hat(&spec, &theta, 0, 1).unwrap();
        let b = kappa_hat(&spec, &theta, 1, 0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn spike_sigma_gaussian_case_drops_cross_terms() {
        let est = SpikeEstimates {
            alpha_hat: vec![12.0, 8.0],
            xi_hat: vec![0.75, 0.6],
            gamma4_hat: 3.0,
            kappa_hat: Matrix::from_rows(2, 2, &[0.9, 0.2, 0.2, 0.8]).unwrap(),
            theta_roots: vec![],
            diagnostics: vec![],
        };
        let cov = spike_sigma_hat(&est, &est, 2).unwrap();
        assert!((cov.sigma2_hat - 432.0).abs() < 1e-10); // 2 * 2 * 144 * 0.75
        assert_eq!(cov.sigma_e_hat.get(0, 1), 0.0);
        assert_eq!(cov.sigma_e_hat.get(1, 0), 0.0);
        assert!((cov.sigma_e_hat.get(1, 1) - 2.0 * 2.0 * 64.0 * 0.6).abs() < 1e-10);
    }

    #[test]
    fn eigen_stat_single_examples() {
        let spec1 = basis_spectrum(&[14.0, 2.0, 1.0], 100);
        let cov = SpikeCovariance {
            sigma2_hat: 400.0,
            sigma_e_hat: Matrix::from_rows(1, 1, &[400.0]).unwrap(),
        };

        let same = eigen_stat_single(&spec1, &spec1, &cov).unwrap();
        assert_eq!(same.t2, 0.0);
        assert!((same.p2 - 1.0).abs() < 1e-12);

        // Difference of exactly sigma/sqrt(n) = 2 gives t2 = 1.
        let spec2 = basis_spectrum(&[12.0, 2.0, 1.0], 100);
        let one = eigen_stat_single(&spec1, &spec2, &cov).unwrap();
        assert!((one.t2 - 1.0).abs() < 1e-12);
        assert!((one.p2 - 0.31731050786291415).abs() < 1e-9);
    }

    #[test]
    fn eigen_stat_multi_identical_spectra_and_determinism() {
        let spec = basis_spectrum(&[14.0, 9.0, 5.0, 1.0], 50);
        let cov = SpikeCovariance {
            sigma2_hat: 300.0,
            sigma_e_hat: Matrix::from_rows(
                3,
                3,
                &[300.0, 10.0, 5.0, 10.0, 200.0, 8.0, 5.0, 8.0, 150.0],
            )
            .unwrap(),
        };
        let mut rng = RngStream::new(9, 1);
        let stat = eigen_stat_multi(&spec, &spec, &cov, 3, 2000, &mut rng).unwrap();
        assert_eq!(stat.t2, 0.0);
        assert!((stat.p2 - 1.0).abs() < 1e-12);

        let spec2 = basis_spectrum(&[12.0, 8.5, 4.0, 1.0], 50);
        let mut rng1 = RngStream::new(9, 1);
        let mut rng2 = RngStream::new(9, 1);
        let a = eigen_stat_multi(&spec, &spec2, &cov, 3, 5000, &mut rng1).unwrap();
        let b = eigen_stat_multi(&spec, &spec2, &cov, 3, 5000, &mut rng2).unwrap();
        assert_eq!(a.p2.to_bits(), b.p2.to_bits());
        assert!(a.t2 > 0.0);
    }

    #[test]
    fn eigen_stat_multi_agrees_with_half_normal_for_m_1() {
        let spec1 = basis_spectrum(&[14.0, 2.0, 1.0], 100);
        let spec2 = basis_spectrum(&[13.0, 2.0, 1.0], 100);
        let cov = SpikeCovariance {
            sigma2_hat: 90.0,
            sigma_e_hat: Matrix::from_rows(1, 1, &[90.0]).unwrap(),
        };
        let exact = eigen_stat_single(&spec1, &spec2, &cov).unwrap().p2;
        let draws = 200_000;
        let mut rng = RngStream::new(55, 0);
        let mc = eigen_stat_multi(&spec1, &spec2, &cov, 1, draws, &mut rng)
            .unwrap()
            .p2;
        let se = (exact * (1.0 - exact) / draws as f64).sqrt();
        assert!(
            (mc - exact).abs() < 3.0 * se,
            "mc {mc} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn eigen_stat_multi_guards() {
        let spec = basis_spectrum(&[5.0, 1.0], 10);
        let cov = SpikeCovariance {
            sigma2_hat: 1.0,
            sigma_e_hat: Matrix::from_rows(1, 1, &[1.0]).unwrap(),
        };
        let mut rng = RngStream::new(0, 0);
        assert!(eigen_stat_multi(&spec, &spec, &cov, 1, 10, &mut rng).is_err());
    }
}
