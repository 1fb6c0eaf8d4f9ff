//! Random draws shared by the simulator and estimator tests.

use rand::Rng;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};

/// Regularized incomplete beta `I_x(a, b)`. Within 1e-10 of either end the
/// leading terms of the tail series are used, where the continued fraction
/// underflows to exactly 0 or 1.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    const EDGE: f64 = 1e-10;
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x < EDGE {
        (a * x.ln() - a.ln() - ln_beta(a, b)).exp() * (1.0 + a * (1.0 - b) * x / (a + 1.0))
    } else if 1.0 - x < EDGE {
        let y = 1.0 - x;
        1.0 - (b * y.ln() - b.ln() - ln_beta(a, b)).exp() * (1.0 + b * (1.0 - a) * y / (b + 1.0))
    } else {
        beta_reg(a, b, x)
    }
}

/// Quantile of the Beta(a, b) distribution: the `x` with `I_x(a, b) = p`.
/// Safeguarded Newton iteration on the regularized incomplete beta.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta shape parameters must be positive");
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_b = ln_beta(a, b);
    // Start from the tail expansions I_x ~ x^a / (a B) and
    // 1 - I_x ~ (1 - x)^b / (b B), whichever side p sits on.
    let mean = a / (a + b);
    let mut x = if p < incomplete_beta(a, b, mean) {
        ((p.ln() + a.ln() + ln_b) / a).exp()
    } else {
        1.0 - (((1.0 - p).ln() + b.ln() + ln_b) / b).exp()
    };
    if !(x > 0.0 && x < 1.0) {
        x = mean;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..300 {
        let f = incomplete_beta(a, b, x) - p;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b;
        let mut next = x - f / ln_pdf.exp();
        if !next.is_finite() || next <= lo || next >= hi {
            next = if lo == 0.0 {
                0.1 * hi
            } else if hi == 1.0 {
                1.0 - 0.1 * (1.0 - lo)
            } else if hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Cluster-correlated Bernoulli draws with exact marginal means and an
/// approximately exchangeable within-cluster correlation `rho`.
///
/// Each cluster shares one uniform `w`; a member with mean `mu` succeeds with
/// probability `Q(w)`, the `w`-quantile of Beta(mu*theta, (1-mu)*theta) with
/// `theta = 1/rho - 1`. Members with equal means are exactly correlated at
/// `rho`; differing means lower the correlation slightly.
#[derive(Clone, Copy, Debug)]
pub struct CorrelatedBinary {
    rho: f64,
}

impl CorrelatedBinary {
    pub fn new(rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Config(format!("latent correlation {rho} must lie in [0, 1)")));
        }
        Ok(CorrelatedBinary { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Success probability of a member with mean `mu` given the cluster
    /// uniform `w`.
    pub fn conditional_probability(&self, mu: f64, w: f64) -> f64 {
        if self.rho == 0.0 || mu <= 0.0 || mu >= 1.0 {
            return mu.clamp(0.0, 1.0);
        }
        let theta = 1.0 / self.rho - 1.0;
        beta_quantile(w, mu * theta, (1.0 - mu) * theta)
    }

    /// Outcome given the cluster uniform `w` and a member uniform `u`.
    pub fn outcome(&self, mu: f64, w: f64, u: f64) -> bool {
        u < self.conditional_probability(mu, w)
    }

    /// Draws one cluster of outcomes for the given member means.
    pub fn draw_cluster<R: Rng + ?Sized>(&self, means: &[f64], rng: &mut R) -> Vec<bool> {
        let w: f64 = rng.gen();
        means.iter().map(|&mu| self.outcome(mu, w, rng.gen())).collect()
    }
}
