use crate::error::{MilError, Result};

use super::normal::{self, TAIL_SWITCH};

/// Smallest normalization constant reported for a positive bag.
pub const Z_FLOOR: f64 = 1e-300;

fn check_scale(mu: f64, sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(MilError::input(
            "trunc-gauss",
            format!("standard deviation must be positive, got {sigma}"),
        ));
    }
    if !mu.is_finite() {
        return Err(MilError::input("trunc-gauss", format!("non-finite mean {mu}")));
    }
    Ok(())
}

/// Mean of `N(mu, sigma²)` truncated to `(−∞, 0)`.
///
/// In the upper tail the result is `−sigma · cf(mu/sigma)`, which is
/// strictly negative without cancellation.
pub fn neg_trunc_mean(mu: f64, sigma: f64) -> Result<f64> {
    check_scale(mu, sigma)?;
    Ok(neg_trunc_mean_unchecked(mu, sigma))
}

fn neg_trunc_mean_unchecked(mu: f64, sigma: f64) -> f64 {
    let z = mu / sigma;
    if z > TAIL_SWITCH {
        -sigma * normal::tail_cf(z)
    } else {
        mu - sigma * normal::hazard(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveBagMoments {
    /// Per-instance means under the factorized law conditioned on at least
    /// one instance being positive.
    pub expectations: Vec<f64>,
    /// Per-instance negative-truncation means.
    pub negative_means: Vec<f64>,
    /// Probability of the conditioning event, floored at [`Z_FLOOR`].
    pub z: f64,
    /// Natural log of the unfloored normalization constant.
    pub ln_z: f64,
    pub floored: bool,
}

/// Expectations of independent `N(mu_i, sigma_i²)` variables conditioned on
/// not all of them being negative.
///
/// Uses `E[m_i] = E_i + sigma_i·h(z_i)/Z`, algebraically equal to
/// `(mu_i − (1 − Z) E_i) / Z`, with `Z` handled in log space so no ratio
/// degenerates when the event is very unlikely.
pub fn positive_bag_expectations(mu: &[f64], sigma: &[f64]) -> Result<PositiveBagMoments> {
    if mu.is_empty() || mu.len() != sigma.len() {
        return Err(MilError::input(
            "trunc-gauss",
            format!("need equal non-empty lengths, got {} and {}", mu.len(), sigma.len()),
        ));
    }
    for (&m, &s) in mu.iter().zip(sigma) {
        check_scale(m, s)?;
    }
    let zs: Vec<f64> = mu.iter().zip(sigma).map(|(m, s)| m / s).collect();

    // ln P(all negative) = Σ ln(1 − Φ(z_i))
    let ln_all_neg: f64 = zs.iter().map(|&z| normal::ln_sf(z)).sum();
    let ln_z = if ln_all_neg < -1e-200 {
        (-ln_all_neg.exp_m1()).ln()
    } else {
        // every instance is overwhelmingly negative: Z ≈ Σ Φ(z_i)
        let logs: Vec<f64> = zs.iter().map(|&z| normal::ln_cdf(z)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
    };
    let z_raw = ln_z.exp();
    let floored = !(z_raw >= Z_FLOOR);

    let negative_means: Vec<f64> = mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| neg_trunc_mean_unchecked(m, s))
        .collect();
    let expectations = zs
        .iter()
        .zip(sigma)
        .zip(&negative_means)
        .map(|((&z, &s), &e)| {
            let ln_hazard = normal::ln_pdf(z) - normal::ln_sf(z);
            e + (s.ln() + ln_hazard - ln_z).exp()
        })
        .collect();

    Ok(PositiveBagMoments {
        expectations,
        negative_means,
        z: if floored { Z_FLOOR } else { z_raw },
        ln_z,
        floored,
    })
}
