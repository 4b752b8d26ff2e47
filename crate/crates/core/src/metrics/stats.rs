//! Small hypothesis tests used by the statistical checks.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Goodness of fit of `observed` against `expected` proportions.
pub fn chi_square(observed: &[u64], expected_props: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected_props.len());
    let n: u64 = observed.iter().sum();
    let total_p: f64 = expected_props.iter().sum();
    let statistic = observed
        .iter()
        .zip(expected_props)
        .map(|(&o, &p)| {
            let e = n as f64 * p / total_p;
            if e > 0.0 {
                (o as f64 - e).powi(2) / e
            } else {
                0.0
            }
        })
        .sum();
    let dof = observed.len().saturating_sub(1) as u32;
    let p_value = if dof == 0 || n == 0 {
        1.0
    } else {
        ChiSquared::new(f64::from(dof)).expect("positive dof").sf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

pub fn chi_square_uniform(observed: &[u64]) -> ChiSquare {
    chi_square(observed, &vec![1.0; observed.len()])
}

/// One-sided sign test: P(X >= successes) for X ~ Bin(trials, 1/2).
pub fn sign_test_p(successes: u64, trials: u64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, trials).expect("valid binomial");
    1.0 - b.cdf(successes - 1)
}

/// Kolmogorov–Smirnov test of samples against Exp(rate); returns (D, p).
pub fn ks_exponential(samples: &[f64], rate: f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = f64::from(j);
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
