//! Correlation statistics: cosine similarity, Spearman's rho with average
//! ranks for ties, and Williams' t test for two dependent correlations
//! sharing a variable.

use ndarray::ArrayView1;

use crate::error::{Error, Result};

/// Norm threshold below which cosine similarity is defined as zero.
pub const COSINE_NORM_FLOOR: f64 = 1e-12;

/// `u.v / (|u||v|)`, or 0 when either norm is below [`COSINE_NORM_FLOOR`].
pub fn cosine_similarity(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu < COSINE_NORM_FLOOR || nv < COSINE_NORM_FLOOR {
        return Ok(0.0);
    }
    Ok(u.dot(&v) / (nu * nv))
}

/// Ranks with ties given the average of the positions they occupy (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateCorrelation(
            "constant list has no rank variance".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman's rank correlation with average ranks assigned to ties.
/// Errors on length mismatch, fewer than 3 items, or a constant list.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::invalid("need at least 3 items for rank correlation"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in correlation input"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

// Lanczos approximation, g = 7, 9 coefficients.
#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

// Continued fraction for the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Upper-tail probability `P(T >= t)` of Student's t with `dof` degrees of
/// freedom, through the regularized incomplete beta.
pub fn student_t_upper_tail(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    let half = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Williams' t for comparing two dependent correlations `r13` and `r23`
/// that share the third variable, with `r12` the correlation between the
/// two predictors and `n` the sample size. Returns the statistic and the
/// one-tailed p-value for `r13 > r23`.
pub fn steiger_test(r13: f64, r23: f64, r12: f64, n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::invalid("need n >= 4 for the dependent-correlation test"));
    }
    for r in [r13, r23, r12] {
        if !(-1.0..=1.0).contains(&r) || r.abs() >= 1.0 {
            return Err(Error::invalid(format!("correlation {r} outside (-1, 1)")));
        }
    }
    let nf = n as f64;
    let det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
    let rbar = (r13 + r23) / 2.0;
    let denom = 2.0 * ((nf - 1.0) / (nf - 3.0)) * det + rbar * rbar * (1.0 - r12).powi(3);
    if denom <= 1e-12 {
        return Err(Error::DegenerateCorrelation(format!(
            "degenerate correlation matrix (|R| = {det:.3e})"
        )));
    }
    let t = (r13 - r23) * ((nf - 1.0) * (1.0 + r12) / denom).sqrt();
    let p = student_t_upper_tail(t, nf - 3.0);
    Ok((t, p))
}

/// The word-vector tuning criterion: twice the similarity correlation
/// minus the relatedness correlation.
pub fn tuning_criterion(rho_ws_s: f64, rho_ws_r: f64) -> f64 {
    2.0 * rho_ws_s - rho_ws_r
}
