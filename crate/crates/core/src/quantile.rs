//! Normal and chi-square quantiles.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// `Q(p)` of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_quantile(dof: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("probability {p} outside (0, 1)")));
    }
    let law = ChiSquared::new(dof).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(law.inverse_cdf(p))
}

/// Upper quantile `z` with `P(N(0,1) > z) = alpha`.
pub fn normal_upper_quantile(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(Normal::standard().inverse_cdf(1.0 - alpha))
}

/// `xi` with `P((1/sqrt n) sum (eps_i^2 - sigma^2) > xi) = alpha` for
/// `eps_i ~ N(0, sigma^2)`: `sigma^2 (Q_{chi2_n}(1 - alpha) - n) / sqrt(n)`.
pub fn xi_quantile(alpha: f64, sigma: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok(sigma * sigma * (chi_square_quantile(nf, 1.0 - alpha)? - nf) / nf.sqrt())
}

/// `log(3 / alpha)`.
pub fn z_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((3.0 / alpha).ln())
}
