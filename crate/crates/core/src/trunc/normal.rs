//! Standard normal density, distribution and tail functions, evaluated so
//! that ratios stay finite far into either tail.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// `ln(sqrt(2π))`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this standardized value the upper tail is evaluated through the
/// continued fraction instead of `erfc`.
pub const TAIL_SWITCH: f64 = 5.0;

#[inline]
pub fn ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub fn pdf(z: f64) -> f64 {
    ln_pdf(z).exp()
}

/// `Φ(z)`
#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `1 − Φ(z)`, accurate in the upper tail.
#[inline]
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Continued fraction `1/(z + 2/(z + 3/(z + ...)))` for `z > 0`, evaluated
/// with the modified Lentz method. The upper-tail hazard is `z + tail_cf(z)`.
pub fn tail_cf(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..10_000 {
        let a = k as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    // f holds the value of b0 + K(a_k / b_k) with b0 = TINY
    f
}

/// Hazard `φ(z) / (1 − Φ(z))`.
pub fn hazard(z: f64) -> f64 {
    if z > TAIL_SWITCH {
        z + tail_cf(z)
    } else {
        pdf(z) / sf(z)
    }
}

/// `ln(1 − Φ(z))`
pub fn ln_sf(z: f64) -> f64 {
    if z < 0.0 {
        (-cdf(z)).ln_1p()
    } else if z <= TAIL_SWITCH {
        sf(z).ln()
    } else {
        ln_pdf(z) - (z + tail_cf(z)).ln()
    }
}

/// `ln Φ(z)`
pub fn ln_cdf(z: f64) -> f64 {
    ln_sf(-z)
}

/// `Φ⁻¹(p)`, with `p` clamped into the open unit interval.
pub fn quantile(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step against the more accurate forward function
    let step = if x < 0.0 {
        (cdf(x) - p) / pdf(x)
    } else {
        ((1.0 - p) - sf(x)) / pdf(x)
    };
    if step.is_finite() {
        x - step
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hazard_is_continuous_at_switch() {
        let below = pdf(TAIL_SWITCH) / sf(TAIL_SWITCH);
        let above = TAIL_SWITCH + tail_cf(TAIL_SWITCH);
        assert_relative_eq!(below, above, max_relative = 1e-12);
    }

    #[test]
    fn ln_sf_branches_agree() {
        for z in [-3.0, -0.5, 0.0, 1.0, 4.9, 5.0] {
            assert_relative_eq!(ln_sf(z), sf(z).ln(), max_relative = 1e-13);
        }
        // deep tail: sf underflows, ln_sf does not
        let z = 40.0;
        assert!(sf(z) == 0.0 || sf(z) < 1e-300);
        let approx = -0.5 * z * z - LN_SQRT_2PI - z.ln();
        assert!((ln_sf(z) - approx).abs() < 1e-3);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-10, 0.01, 0.3, 0.5, 0.9, 0.999999] {
            assert_relative_eq!(cdf(quantile(p)), p, max_relative = 1e-12);
        }
        assert_eq!(quantile(0.5), 0.0);
    }

    #[test]
    fn phi_of_four() {
        assert_relative_eq!(cdf(4.0), 0.999_968_328_758_166_9, max_relative = 1e-15);
    }
}
