//! Simulation models and the Monte-Carlo rejection-probability harness.
//!
//! Five diagonal population covariance families parameterized by a signal
//! strength delta (delta = 0 always reproduces the null), three entry
//! distributions, and an embarrassingly parallel replication engine. Every
//! replication draws from its own random stream addressed by
//! (master seed, hash(cell)·2³² + rep), so reports are bit-identical
//! regardless of the worker count. The cell hash covers (model, delta, dist,
//! p, n) but not the method or m, so competing methods see identical data.

use std::time::Instant;

use rayon::prelude::*;

use crate::dist::{sample_entry, DataDist, RngStream};
use crate::error::{Error, Result};
use crate::fisher::{run_test, TestOutcome};
use crate::matrix::SampleMatrix;

/// The five population covariance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    /// Single growing spike over a two-level bulk.
    M1,
    /// Fixed spikes, bulk split into halves moving apart.
    M2,
    /// Three growing spikes over a two-level bulk.
    M3,
    /// Three growing spikes plus a fixed one over a linear-profile bulk.
    M4,
    /// One growing spike plus a growing pair of equal spikes.
    M5,
}

impl ModelId {
    pub fn tag(self) -> &'static str {
        match self {
            ModelId::M1 => "m1",
            ModelId::M2 => "m2",
            ModelId::M3 => "m3",
            ModelId::M4 => "m4",
            ModelId::M5 => "m5",
        }
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelId::M1),
            "m2" => Ok(ModelId::M2),
            "m3" => Ok(ModelId::M3),
            "m4" => Ok(ModelId::M4),
            "m5" => Ok(ModelId::M5),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected m1..m5)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which of the two populations a covariance belongs to; only the second
/// one depends on delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSide {
    First,
    Second,
}

/// A fully parameterized population covariance draw request.
#[derive(Debug, Clone)]
pub struct CovModelSpec {
    pub model: ModelId,
    pub delta: f64,
    pub p: usize,
    pub n: usize,
    pub dist: DataDist,
    pub side: SampleSide,
}

/// Diagonal of the population covariance for the given model and side.
pub fn model_sigma(spec: &CovModelSpec) -> Result<Vec<f64>> {
    if !(spec.delta >= 0.0 && spec.delta.is_finite()) {
        return Err(Error::Config(format!(
            "delta must be a nonnegative real, got {}",
            spec.delta
        )));
    }
    let p = spec.p;
    let d = if spec.side == SampleSide::Second {
        spec.delta
    } else {
        0.0
    };
    let need = |min: usize| -> Result<()> {
        if p < min {
            return Err(Error::Config(format!(
                "model {} requires p >= {min}, got {p}",
                spec.model
            )));
        }
        Ok(())
    };

    let mut diag = Vec::with_capacity(p);
    match spec.model {
        ModelId::M1 => {
            need(12)?;
            diag.push(10.0 + d);
            diag.extend(std::iter::repeat_n(7.0, 10));
            diag.extend(std::iter::repeat_n(1.0, p - 11));
        }
        ModelId::M2 => {
            need(6)?;
            if !(p - 4).is_multiple_of(2) {
                return Err(Error::Config(format!(
                    "model m2 splits the bulk in halves and needs p - 4 even, got p = {p}"
                )));
            }
            let shift = d / 20.0;
            if shift > 1.0 {
                return Err(Error::Config(format!(
                    "model m2 needs delta <= 20 to keep the bulk nonnegative, got {d}"
                )));
            }
            diag.push(11.0);
            diag.extend_from_slice(&[7.0, 7.0, 7.0]);
            let half = (p - 4) / 2;
            diag.extend(std::iter::repeat_n(1.0 + shift, half));
            diag.extend(std::iter::repeat_n(1.0 - shift, half));
        }
        ModelId::M3 => {
            need(12)?;
            diag.extend_from_slice(&[10.0 + d, 8.0 + d, 7.0 + d]);
            diag.extend(std::iter::repeat_n(6.0, 8));
            diag.extend(std::iter::repeat_n(1.0, p - 11));
        }
        ModelId::M4 => {
            need(6)?;
            diag.extend_from_slice(&[20.0 + d, 15.0 + d, 13.0 + d, 12.0]);
            for i in 5..=p {
                diag.push(3.0 - 2.5 / (p - 5) as f64 * (i - 5) as f64);
            }
        }
        ModelId::M5 => {
            need(12)?;
            if spec.side == SampleSide::Second {
                diag.extend_from_slice(&[10.0 + d, 7.0 + d, 7.0 + d]);
                diag.extend(std::iter::repeat_n(7.0, 8));
            } else {
                diag.push(10.0);
                diag.extend(std::iter::repeat_n(7.0, 10));
            }
            diag.extend(std::iter::repeat_n(1.0, p - 11));
        }
    }
    debug_assert_eq!(diag.len(), p);
    Ok(diag)
}

/// Draw an n×p sample with independent rows Σ^{1/2} z, where Σ is diagonal
/// and the entries of z are i.i.d. from `dist`.
pub fn generate_sample(
    sigma_diag: &[f64],
    n: usize,
    dist: DataDist,
    rng: &mut RngStream,
) -> Result<SampleMatrix> {
    if sigma_diag.is_empty() || n == 0 {
        return Err(Error::Dimension(
            "generate_sample: need n >= 1 and p >= 1".into(),
        ));
    }
    if let Some(bad) = sigma_diag.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "generate_sample: diagonal entries must be nonnegative, got {bad}"
        )));
    }
    let roots: Vec<f64> = sigma_diag.iter().map(|v| v.sqrt()).collect();
    let p = roots.len();
    let mut entries = Vec::with_capacity(n * p);
    for _ in 0..n {
        for root in &roots {
            entries.push(root * sample_entry(dist, rng));
        }
    }
    SampleMatrix::from_rows(n, p, &entries)
}

/// Decision rules whose rejection rates the harness reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The combined test: reject when the Fisher statistic exceeds the
    /// chi-square(4) critical value.
    FcM,
    /// Frobenius detector alone: reject when p1 < alpha.
    LcOnly,
    /// Leading-eigenvalue detector alone: reject when p2 < alpha.
    EigenOnly,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FcM, Method::LcOnly, Method::EigenOnly];

    pub fn tag(self) -> &'static str {
        match self {
            Method::FcM => "fc_m",
            Method::LcOnly => "lc_only",
            Method::EigenOnly => "eigen_only",
        }
    }

    pub fn rejects(self, outcome: &TestOutcome) -> bool {
        match self {
            Method::FcM => outcome.reject,
            Method::LcOnly => outcome.frob.p1 < outcome.alpha,
            Method::EigenOnly => outcome.eigen.p2 < outcome.alpha,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fc_m" | "fc" => Ok(Method::FcM),
            "lc_only" | "lc" => Ok(Method::LcOnly),
            "eigen_only" | "eigen" => Ok(Method::EigenOnly),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected fc_m, lc_only or eigen_only)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Full configuration of one simulation run; echoed into every report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SimConfig {
    pub model: ModelId,
    pub deltas: Vec<f64>,
    pub dist: DataDist,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub m: usize,
    pub draws: usize,
    pub master_seed: u64,
}

/// Empirical rejection rate of one method in one grid cell.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CellResult {
    pub model: ModelId,
    pub delta: f64,
    pub method: Method,
    pub dist: DataDist,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub rate: f64,
    /// Wall-clock seconds spent on the cell's replications (shared across
    /// the methods reported for the cell).
    pub runtime_secs: f64,
}

/// Grid of empirical rejection probabilities with the full config echo.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub cells: Vec<CellResult>,
}

impl SimReport {
    /// CSV with one row per (delta, method) cell. Floats use the shortest
    /// round-trip formatting, so identical runs serialize identically.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,delta,method,dist,p,n,reps,rate\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.model, c.delta, c.method, c.dist, c.p, c.n, c.reps, c.rate
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325_u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stream id for replication `rep` of the cell: hash(cell)·2³² + rep.
fn replication_stream(config: &SimConfig, delta: f64, rep: usize) -> u64 {
    let key = format!(
        "model={};delta={:016x};dist={};p={};n={}",
        config.model,
        delta.to_bits(),
        config.dist,
        config.p,
        config.n
    );
    (fnv1a64(key.as_bytes()) << 32).wrapping_add(rep as u64)
}

fn run_replication(config: &SimConfig, delta: f64, rep: usize) -> Result<TestOutcome> {
    let mut rng = RngStream::new(config.master_seed, replication_stream(config, delta, rep));
    let base = CovModelSpec {
        model: config.model,
        delta,
        p: config.p,
        n: config.n,
        dist: config.dist,
        side: SampleSide::First,
    };
    let sigma1 = model_sigma(&base)?;
    let sigma2 = model_sigma(&CovModelSpec {
        side: SampleSide::Second,
        ..base
    })?;
    let x1 = generate_sample(&sigma1, config.n, config.dist, &mut rng)?;
    let x2 = generate_sample(&sigma2, config.n, config.dist, &mut rng)?;
    run_test(&x1, &x2, config.m, config.alpha, config.draws, &mut rng)
}

/// Run the replication grid and report rejection rates for every requested
/// method. All methods are evaluated on the same replications.
///
/// Replications fan out across the current rayon pool; aggregation folds the
/// per-replication decisions in replication order, and a failed replication
/// aborts its cell with the cell and replication named in the error.
pub fn run_simulation(config: &SimConfig, methods: &[Method]) -> Result<SimReport> {
    if config.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must be in (0,1), got {}",
            config.alpha
        )));
    }

    let mut cells = Vec::with_capacity(config.deltas.len() * methods.len());
    for &delta in &config.deltas {
        // Validate the model parameters once before fanning out.
        model_sigma(&CovModelSpec {
            model: config.model,
            delta,
            p: config.p,
            n: config.n,
            dist: config.dist,
            side: SampleSide::Second,
        })?;

        let start = Instant::now();
        let outcomes: Vec<Result<TestOutcome>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| run_replication(config, delta, rep))
            .collect();
        let runtime_secs = start.elapsed().as_secs_f64();

        let mut decided: Vec<TestOutcome> = Vec::with_capacity(config.reps);
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(o) => decided.push(o),
                Err(e) => {
                    return Err(Error::Replication {
                        cell: format!(
                            "model={} delta={} dist={} p={} n={}",
                            config.model, delta, config.dist, config.p, config.n
                        ),
                        rep,
                        source: Box::new(e),
                    })
                }
            }
        }

        for &method in methods {
            let hits = decided.iter().filter(|o| method.rejects(o)).count();
            cells.push(CellResult {
                model: config.model,
                delta,
                method,
                dist: config.dist,
                p: config.p,
                n: config.n,
                reps: config.reps,
                rate: hits as f64 / config.reps as f64,
                runtime_secs,
            });
        }
    }

    Ok(SimReport {
        config: config.clone(),
        cells,
    })
}

/// Rejection curve of a single method over the delta grid.
pub fn rejection_curve(config: &SimConfig, method: Method) -> Result<SimReport> {
    run_simulation(config, &[method])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: ModelId, delta: f64, p: usize, side: SampleSide) -> CovModelSpec {
        CovModelSpec {
            model,
            delta,
            p,
            n: 50,
            dist: DataDist::Gaussian,
            side,
        }
    }

    #[test]
    fn model_m1_layout() {
        let d = model_sigma(&spec(ModelId::M1, 0.0, 20, SampleSide::First)).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d[0], 10.0);
        assert!(d[1..11].iter().all(|v| *v == 7.0));
        assert!(d[11..].iter().all(|v| *v == 1.0));

        let d2 = model_sigma(&spec(ModelId::M1, 4.0, 20, SampleSide::Second)).unwrap();
        assert_eq!(d2[0], 14.0);
        assert_eq!(&d2[1..], &d[1..]);
    }

    #[test]
    fn model_m4_bulk_profile_endpoints() {
        let d = model_sigma(&spec(ModelId::M4, 0.0, 10, SampleSide::First)).unwrap();
        assert_eq!(d[..4], [20.0, 15.0, 13.0, 12.0]);
        assert_eq!(d[4], 3.0); // d_5
        assert!((d[9] - 0.5).abs() < 1e-15); // d_10
    }

    #[test]
    fn model_m5_layout() {
        let d = model_sigma(&spec(ModelId::M5, 2.0, 15, SampleSide::Second)).unwrap();
        assert_eq!(d[..3], [12.0, 9.0, 9.0]);
        assert!(d[3..11].iter().all(|v| *v == 7.0));
        assert!(d[11..].iter().all(|v| *v == 1.0));
        assert_eq!(d.len(), 15);
    }

    #[test]
    fn model_m2_parity_guard_and_split() {
        assert!(matches!(
            model_sigma(&spec(ModelId::M2, 1.0, 9, SampleSide::Second)),
            Err(Error::Config(_))
        ));

        let d = model_sigma(&spec(ModelId::M2, 10.0, 12, SampleSide::Second)).unwrap();
        assert_eq!(d[..4], [11.0, 7.0, 7.0, 7.0]);
        assert!(d[4..8].iter().all(|v| (*v - 1.5).abs() < 1e-15));
        assert!(d[8..].iter().all(|v| (*v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn delta_zero_reproduces_the_null_for_every_model() {
        for model in [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M5] {
            let p = 16;
            let a = model_sigma(&spec(model, 0.0, p, SampleSide::First)).unwrap();
            let b = model_sigma(&spec(model, 0.0, p, SampleSide::Second)).unwrap();
            assert_eq!(a, b, "model {model}");
        }
    }

    #[test]
    fn generate_zero_sigma_gives_zero_sample() {
        let mut rng = RngStream::new(1, 0);
        let x = generate_sample(&[0.0, 0.0, 0.0], 5, DataDist::Gaussian, &mut rng).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                assert_eq!(x.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn generate_is_reproducible() {
        let mut a = RngStream::new(9, 4);
        let mut b = RngStream::new(9, 4);
        let xa = generate_sample(&[2.0, 1.0], 6, DataDist::Laplace, &mut a).unwrap();
        let xb = generate_sample(&[2.0, 1.0], 6, DataDist::Laplace, &mut b).unwrap();
        for i in 0..6 {
            for j in 0..2 {
                assert_eq!(xa.get(i, j).to_bits(), xb.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn generate_identity_column_variances() {
        let n = 100_000;
        let mut rng = RngStream::new(33, 0);
        let x = generate_sample(&[1.0; 5], n, DataDist::Gaussian, &mut rng).unwrap();
        for j in 0..5 {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for i in 0..n {
                let v = x.get(i, j);
                sum += v;
                sum2 += v * v;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            assert!((0.97..1.03).contains(&var), "column {j} variance {var}");
        }
    }

    #[test]
    fn generate_rejects_negative_diagonal() {
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            generate_sample(&[1.0, -0.5], 4, DataDist::Gaussian, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simulation_report_shape_and_csv() {
        let config = SimConfig {
            model: ModelId::M1,
            deltas: vec![0.0, 5.0],
            dist: DataDist::Gaussian,
            p: 12,
            n: 16,
            reps: 3,
            alpha: 0.05,
            m: 1,
            draws: 2000,
            master_seed: 11,
        };
        let report = run_simulation(&config, &Method::ALL).unwrap();
        assert_eq!(report.cells.len(), 6);
        for c in &report.cells {
            assert!((0.0..=1.0).contains(&c.rate));
            assert_eq!(c.reps, 3);
        }
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("model,delta,method,dist,p,n,reps,rate\n"));
        assert!(csv.contains("m1,0,fc_m,gaussian,12,16,3,"));

        let again = run_simulation(&config, &Method::ALL).unwrap();
        assert_eq!(csv, again.to_csv());
    }
}
