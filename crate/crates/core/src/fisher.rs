//! Fisher combination of the two detectors and the rejection decision.
//!
//! Under the null the two detector statistics are asymptotically independent
//! standard normals, so -2 log p₁ - 2 log p₂ is asymptotically chi-square
//! with 4 degrees of freedom; the test rejects when it exceeds the
//! chi-square(4) quantile.

use crate::dist::{chi2_4_quantile, RngStream};
use crate::error::{Error, Result};
use crate::frobenius::{frobenius_test, FrobeniusStat};
use crate::matrix::SampleMatrix;
use crate::spike::{
    eigen_stat_multi, eigen_stat_single, estimate_spikes, spectrum, spike_sigma_hat, EigenStat,
};

/// Defensive lower bound for p-values entering the logarithm.
const P_FLOOR: f64 = 1e-300;

/// Complete outcome of the combined test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TestOutcome {
    pub frob: FrobeniusStat,
    pub eigen: EigenStat,
    /// Fisher statistic -2 log p1 - 2 log p2.
    pub t_fc: f64,
    pub alpha: f64,
    /// Chi-square(4) critical value at level alpha.
    pub q: f64,
    pub reject: bool,
    /// Number of leading eigenvalues compared.
    pub m: usize,
    /// (seed, stream) of the random stream driving the run.
    pub seed: (u64, u64),
    pub diagnostics: Vec<String>,
}

/// Fisher's combination statistic for two p-values.
pub fn fisher_statistic(p1: f64, p2: f64) -> Result<f64> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!(
                "fisher_statistic: {name} = {p} is outside (0, 1]"
            )));
        }
    }
    Ok(-2.0 * p1.ln() - 2.0 * p2.ln())
}

/// Critical value and strict rejection decision at level alpha.
pub fn decide(t_fc: f64, alpha: f64) -> Result<(f64, bool)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "decide: alpha = {alpha} is outside (0, 1)"
        )));
    }
    let q = chi2_4_quantile(1.0 - alpha)?;
    Ok((q, t_fc > q))
}

fn floor_p(name: &str, p: f64, diagnostics: &mut Vec<String>) -> f64 {
    if p < P_FLOOR {
        diagnostics.push(format!(
            "{name} = {p} floored to {P_FLOOR} before taking logs"
        ));
        P_FLOOR
    } else {
        p
    }
}

/// Run the full combined test on two samples.
///
/// Pipeline: Frobenius-norm statistic, sample spectra, spike parameter
/// estimates for both samples, the spike covariance estimate, the
/// leading-eigenvalue statistic (closed-form p-value for m = 1, Monte-Carlo
/// calibration with `draws` resamples otherwise), Fisher combination, and the
/// strict comparison against the chi-square(4) critical value.
pub fn run_test(
    x1: &SampleMatrix,
    x2: &SampleMatrix,
    m: usize,
    alpha: f64,
    draws: usize,
    rng: &mut RngStream,
) -> Result<TestOutcome> {
    if m == 0 {
        return Err(Error::Config("run_test: m must be at least 1".into()));
    }
    let seed = (rng.seed(), rng.stream());

    let frob = frobenius_test(x1, x2).map_err(|e| e.at_stage("frobenius"))?;

    let spec1 = spectrum(x1).map_err(|e| e.at_stage("spectrum"))?;
    let spec2 = spectrum(x2).map_err(|e| e.at_stage("spectrum"))?;

    let est1 = estimate_spikes(x1, &spec1, m).map_err(|e| e.at_stage("estimators"))?;
    let est2 = estimate_spikes(x2, &spec2, m).map_err(|e| e.at_stage("estimators"))?;

    let cov = spike_sigma_hat(&est1, &est2, m).map_err(|e| e.at_stage("spike-variance"))?;

    let eigen = if m == 1 {
        eigen_stat_single(&spec1, &spec2, &cov)
    } else {
        eigen_stat_multi(&spec1, &spec2, &cov, m, draws, rng)
    }
    .map_err(|e| e.at_stage("eigen-stat"))?;

    let mut diagnostics = Vec::new();
    for (label, est) in [("sample 1", &est1), ("sample 2", &est2)] {
        for d in &est.diagnostics {
            diagnostics.push(format!("{label}: {d}"));
        }
    }
    diagnostics.extend(eigen.diagnostics.iter().cloned());
    let p1 = floor_p("p1", frob.p1, &mut diagnostics);
    let p2 = floor_p("p2", eigen.p2, &mut diagnostics);

    let t_fc = fisher_statistic(p1, p2).map_err(|e| e.at_stage("fisher"))?;
    let (q, reject) = decide(t_fc, alpha).map_err(|e| e.at_stage("fisher"))?;

    Ok(TestOutcome {
        frob,
        eigen,
        t_fc,
        alpha,
        q,
        reject,
        m,
        seed,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_entry, DataDist};
    use crate::sim::{generate_sample, model_sigma, CovModelSpec, ModelId, SampleSide};

    #[test]
    fn fisher_statistic_values() {
        assert_eq!(fisher_statistic(1.0, 1.0).unwrap(), 0.0);

        let e = std::f64::consts::E;
        assert!((fisher_statistic(1.0 / e, 1.0 / e).unwrap() - 4.0).abs() < 1e-12);

        let v = fisher_statistic(0.05, 0.05).unwrap();
        assert!((v - (-4.0 * 0.05_f64.ln())).abs() < 1e-12);
        assert!((v - 11.982929094).abs() < 1e-6);
    }

    #[test]
    fn fisher_statistic_domain_and_monotonicity() {
        assert!(fisher_statistic(0.0, 0.5).is_err());
        assert!(fisher_statistic(0.5, 1.5).is_err());
        assert!(fisher_statistic(-0.1, 0.5).is_err());

        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let p1 = i as f64 / 20.0;
            let v = fisher_statistic(p1, 0.3).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn decide_examples() {
        let (_, reject) = decide(0.0, 0.05).unwrap();
        assert!(!reject);

        let (q, reject) = decide(12.0, 0.05).unwrap();
        assert!((q - 9.487729).abs() < 1e-5);
        assert!(reject);

        // Boundary: strict inequality means no rejection at exactly q.
        let (q, reject) = decide(q, 0.05).unwrap();
        assert!(!reject);
        assert!((q - 9.487729).abs() < 1e-5);

        assert!(decide(1.0, 0.0).is_err());
        assert!(decide(1.0, 1.0).is_err());
    }

    #[test]
    fn run_test_produces_consistent_outcome() {
        let spec = CovModelSpec {
            model: ModelId::M1,
            delta: 0.0,
            p: 30,
            n: 40,
            dist: DataDist::Gaussian,
            side: SampleSide::First,
        };
        let sigma = model_sigma(&spec).unwrap();
        let mut rng = RngStream::new(7, 0);
        let x1 = generate_sample(&sigma, 40, DataDist::Gaussian, &mut rng).unwrap();
        let x2 = generate_sample(&sigma, 40, DataDist::Gaussian, &mut rng).unwrap();

        let outcome = run_test(&x1, &x2, 1, 0.05, 2000, &mut rng).unwrap();
        assert_eq!(outcome.m, 1);
        assert_eq!(outcome.seed, (7, 0));
        let expect = -2.0 * outcome.frob.p1.ln() - 2.0 * outcome.eigen.p2.ln();
        assert!((outcome.t_fc - expect).abs() < 1e-12);
        assert_eq!(outcome.reject, outcome.t_fc > outcome.q);
    }

    #[test]
    fn run_test_rejects_shape_mismatch_with_stage() {
        let mut rng = RngStream::new(1, 0);
        let a: Vec<f64> = (0..40)
            .map(|_| sample_entry(DataDist::Gaussian, &mut rng))
            .collect();
        let b: Vec<f64> = (0..50)
            .map(|_| sample_entry(DataDist::Gaussian, &mut rng))
            .collect();
        let x1 = SampleMatrix::from_rows(8, 5, &a).unwrap();
        let x2 = SampleMatrix::from_rows(10, 5, &b).unwrap();
        let err = run_test(&x1, &x2, 1, 0.05, 2000, &mut rng).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("frobenius"), "message: {msg}");
        assert!(!err.is_degenerate());
    }
}
