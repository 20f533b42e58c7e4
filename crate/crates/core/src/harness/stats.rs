//! Goodness-of-fit statistics. All functions are pure.
//!
//! Chi-square: adjacent cells are merged left to right until each holds an
//! expected count of at least [`POOL_MIN_EXPECTED`]; a short final group is
//! merged into its predecessor. The statistic is `sum (O - E)^2 / E` and the
//! p-value is the upper tail of a chi-square law with
//! `cells - 1 - fitted` degrees of freedom.
//!
//! Kolmogorov-Smirnov: `D = sup |F_a - F_b|`, `lambda = D sqrt(nm / (n + m))`,
//! `p = Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`, evaluated
//! through the equivalent theta-function series when `lambda < 1.18`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};

pub const POOL_MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pooled chi-square test of `observed` against `expected` (same length,
/// expected totals matching the sample size). `fitted` parameters are
/// subtracted from the degrees of freedom.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], fitted: usize) -> Result<TestStat> {
    if observed.is_empty() || observed.len() != expected.len() {
        return Err(Error::EmptyInput("chi-square cells"));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi as f64;
        e += ei;
        if e >= POOL_MIN_EXPECTED {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    if cells.len() < 2 + fitted {
        return Err(Error::DegeneratePooling { cells: cells.len() });
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1 - fitted) as f64;
    let p_value = ChiSquared::new(df).expect("df >= 1").sf(statistic);
    Ok(TestStat { statistic, p_value })
}

/// Chi-square test of integer counts against Poisson(`rate`); the last cell
/// is the upper tail.
pub fn chi_square_gof_poisson(counts: &[u64], rate: f64) -> Result<TestStat> {
    if counts.is_empty() {
        return Err(Error::EmptyInput("counts"));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Constraint(format!("Poisson rate must be positive, got {rate}")));
    }
    let law = Poisson::new(rate).expect("rate > 0");
    let n = counts.len() as f64;
    let top = (*counts.iter().max().unwrap()).max(rate.ceil() as u64 + 1);
    let mut observed = vec![0u64; top as usize + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }
    let mut expected: Vec<f64> = (0..top).map(|k| n * law.pmf(k)).collect();
    expected.push(n * law.sf(top - 1));
    chi_square_gof(&observed, &expected, 0)
}

/// Chi-square test of positive integers against Geometric(`p`) on
/// `{1, 2, ...}` with `p` estimated as `1 / mean`. Every observation equal
/// to 1 is exact agreement with the fitted Geometric(1) and is reported as
/// statistic 0, p-value 1.
pub fn chi_square_gof_geometric(values: &[u64]) -> Result<(TestStat, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("geometric sample"));
    }
    if values.contains(&0) {
        return Err(Error::Constraint("geometric sample must be positive".into()));
    }
    let n = values.len() as f64;
    let p = n / values.iter().map(|&v| v as f64).sum::<f64>();
    if p == 1.0 {
        return Ok((TestStat { statistic: 0.0, p_value: 1.0 }, p));
    }
    let top = *values.iter().max().unwrap() + 1;
    let mut observed = vec![0u64; top as usize];
    for &v in values {
        observed[v as usize - 1] += 1;
    }
    let mut expected: Vec<f64> = (1..top).map(|k| n * p * (1.0 - p).powi(k as i32 - 1)).collect();
    expected.push(n * (1.0 - p).powi(top as i32 - 1));
    Ok((chi_square_gof(&observed, &expected, 1)?, p))
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestStat> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("KS sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let lambda = d * (n * m / (n + m)).sqrt();
    Ok(TestStat { statistic: d, p_value: kolmogorov_sf(lambda) })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}
