//! Frobenius-norm detector.
//!
//! U-statistics that estimate tr(Σ₁²), tr(Σ₂²) and tr(Σ₁Σ₂) from two samples
//! without assuming zero means, combined into a standardized statistic whose
//! large values indicate a dense difference between the two covariance
//! matrices. Each statistic has two implementations: a naive enumerator over
//! tuples of distinct observation indices, kept as the permanent oracle, and
//! an O(n²p) evaluation over (cross-)Gram matrices obtained by
//! inclusion-exclusion over coincident indices.

use crate::dist::std_normal_cdf;
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

/// All pieces of the Frobenius-norm test statistic.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FrobeniusStat {
    /// U-statistic estimate of tr(Σ₁²) from the first sample.
    pub b1: f64,
    /// U-statistic estimate of tr(Σ₂²) from the second sample.
    pub b2: f64,
    /// Cross U-statistic estimate of tr(Σ₁Σ₂).
    pub c: f64,
    /// Null standard deviation estimate 2(b1+b2)/n.
    pub sigma1_hat: f64,
    /// Standardized statistic (b1 + b2 - 2c) / sigma1_hat.
    pub t1: f64,
    /// One-sided p-value 1 - Φ(t1).
    pub p1: f64,
}

fn require_n(x: &SampleMatrix, min: usize) -> Result<()> {
    if x.n() < min {
        return Err(Error::InsufficientSample { min, got: x.n() });
    }
    Ok(())
}

fn require_same_shape(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<()> {
    if x1.n() != x2.n() || x1.p() != x2.p() {
        return Err(Error::Dimension(format!(
            "samples must have identical shape, got {}x{} and {}x{}",
            x1.n(),
            x1.p(),
            x2.n(),
            x2.p()
        )));
    }
    Ok(())
}

/// One-sample trace statistic by explicit enumeration over ordered tuples of
/// mutually distinct indices. O(n⁴p); oracle for [`b_stat_fast`].
pub fn b_stat_naive(x: &SampleMatrix) -> Result<f64> {
    require_n(x, 4)?;
    let n = x.n();
    let nf = n as f64;

    let mut term1 = 0.0;
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = x.dot_rows(j, k);
            term1 += d * d;
        }
    }
    term1 /= nf * (nf - 1.0);

    let mut term2 = 0.0;
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            for l in 0..n {
                if l == j || l == k {
                    continue;
                }
                term2 += x.dot_rows(j, k) * x.dot_rows(k, l);
            }
        }
    }
    term2 *= 2.0 / (nf * (nf - 1.0) * (nf - 2.0));

    let mut term3 = 0.0;
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            for l in 0..n {
                if l == j || l == k {
                    continue;
                }
                for m in 0..n {
                    if m == j || m == k || m == l {
                        continue;
                    }
                    term3 += x.dot_rows(j, k) * x.dot_rows(l, m);
                }
            }
        }
    }
    term3 /= nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0);

    Ok(term1 - term2 + term3)
}

/// One-sample trace statistic via the Gram matrix G = XXᵀ.
///
/// The three distinct-index sums reduce to scalar functions of G: with
/// d = diag(G), r the row sums, q = r - d and P = Σr - Σd,
///   Σ*₍j,k₎ G²        = ‖G‖² - Σd²
///   Σ*₍j,k,l₎ G G     = Σr² - 2Σ(d·r) - ‖G‖² + 2Σd²
///   Σ*₍j,k,l,m₎ G G   = P² - 4Σq² + 2(‖G‖² - Σd²).
pub fn b_stat_fast(x: &SampleMatrix) -> Result<f64> {
    require_n(x, 4)?;
    let n = x.n();
    let nf = n as f64;
    let g = x.gram();

    let mut fsq = 0.0;
    let mut d2 = 0.0;
    let mut dr = 0.0;
    let mut r2 = 0.0;
    let mut q2 = 0.0;
    let mut sum_r = 0.0;
    let mut sum_d = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            let v = g.get(j, k);
            fsq += v * v;
            row += v;
        }
        let d = g.get(j, j);
        d2 += d * d;
        dr += d * row;
        r2 += row * row;
        let q = row - d;
        q2 += q * q;
        sum_r += row;
        sum_d += d;
    }

    let f0 = fsq - d2;
    let a1 = f0;
    let a2 = r2 - 2.0 * dr - fsq + 2.0 * d2;
    let p = sum_r - sum_d;
    let a3 = p * p - 4.0 * q2 + 2.0 * f0;

    Ok(a1 / (nf * (nf - 1.0)) - 2.0 * a2 / (nf * (nf - 1.0) * (nf - 2.0))
        + a3 / (nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0)))
}

/// Cross trace statistic by explicit enumeration. Distinctness binds indices
/// within each sample: the middle term sums over distinct pairs from one
/// sample with the other sample's index free, and the last term over distinct
/// pairs in both samples. O(n⁴p); oracle for [`c_stat_fast`].
pub fn c_stat_naive(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<f64> {
    require_same_shape(x1, x2)?;
    require_n(x1, 3)?;
    let n = x1.n();
    let nf = n as f64;

    let dot = |j: usize, k: usize| -> f64 {
        let mut acc = 0.0;
        for c in 0..x1.p() {
            acc += x1.get(j, c) * x2.get(k, c);
        }
        acc
    };

    let mut term1 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let v = dot(j, k);
            term1 += v * v;
        }
    }
    term1 /= nf * nf;

    let mut term2 = 0.0;
    for j in 0..n {
        for l in 0..n {
            if l == j {
                continue;
            }
            for k in 0..n {
                // First product: distinct pair (j,l) from sample 1, k free in sample 2.
                // Second product: the mirrored expression with the samples swapped.
                term2 += dot(j, k) * dot(l, k) + dot(k, j) * dot(k, l);
            }
        }
    }
    term2 /= nf * nf * (nf - 1.0);

    let mut term3 = 0.0;
    for j in 0..n {
        for l in 0..n {
            if l == j {
                continue;
            }
            for k in 0..n {
                for m in 0..n {
                    if m == k {
                        continue;
                    }
                    term3 += dot(j, k) * dot(l, m);
                }
            }
        }
    }
    term3 /= nf * nf * (nf - 1.0) * (nf - 2.0);

    Ok(term1 - term2 + term3)
}

/// Cross trace statistic via the cross-Gram matrix M = X₁X₂ᵀ.
///
/// Scalar reductions are accumulated in an argument-order-independent way
/// (diagonal plus paired off-diagonal entries), so swapping the two samples
/// returns bit-identical results.
pub fn c_stat_fast(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<f64> {
    require_same_shape(x1, x2)?;
    require_n(x1, 3)?;
    let n = x1.n();
    let nf = n as f64;
    let m = x1.cross_gram(x2)?;

    let mut fsq = 0.0;
    let mut tot = 0.0;
    for j in 0..n {
        let v = m.get(j, j);
        fsq += v * v;
        tot += v;
        for k in (j + 1)..n {
            let a = m.get(j, k);
            let b = m.get(k, j);
            fsq += a * a + b * b;
            tot += a + b;
        }
    }

    let mut s = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        let mut col = 0.0;
        for k in 0..n {
            row += m.get(j, k);
            col += m.get(k, j);
        }
        s += row * row + col * col;
    }

    let term1 = fsq / (nf * nf);
    let term2 = (s - 2.0 * fsq) / (nf * nf * (nf - 1.0));
    let term3 = (tot * tot - s + fsq) / (nf * nf * (nf - 1.0) * (nf - 2.0));
    Ok(term1 - term2 + term3)
}

/// Null standard deviation estimate for b1 + b2 - 2c: the positive square
/// root of 4(b1+b2)²/n².
pub fn sigma1_hat(b1: f64, b2: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sigma1_hat: n must be positive".into()));
    }
    let sum = b1 + b2;
    if sum <= 0.0 {
        return Err(Error::DegenerateVariance(format!(
            "b1 + b2 = {sum} is not positive; the Frobenius statistic is undefined"
        )));
    }
    Ok(2.0 / n as f64 * sum)
}

/// Full Frobenius-norm test: statistics, variance estimate, and the
/// one-sided p-value.
pub fn frobenius_test(x1: &SampleMatrix, x2: &SampleMatrix) -> Result<FrobeniusStat> {
    require_same_shape(x1, x2)?;
    require_n(x1, 4)?;
    let b1 = b_stat_fast(x1)?;
    let b2 = b_stat_fast(x2)?;
    let c = c_stat_fast(x1, x2)?;
    let sigma = sigma1_hat(b1, b2, x1.n())?;
    let t1 = (b1 + b2 - 2.0 * c) / sigma;
    // 1 - Φ(t1), evaluated as Φ(-t1) so the upper tail keeps full precision.
    let p1 = std_normal_cdf(-t1);
    Ok(FrobeniusStat {
        b1,
        b2,
        c,
        sigma1_hat: sigma,
        t1,
        p1,
    })
}
