use rand::Rng;

use crate::error::{Result, SimError};

/// Draws from Poisson(`lambda`) by sequential search over the cumulative
/// distribution. Consumes exactly one uniform per draw.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> Result<u64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "poisson rate must be positive, got {lambda}"
        )));
    }
    let u: f64 = rng.gen();
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let mut x = 0u64;
    while u >= cdf {
        x += 1;
        pmf *= lambda / x as f64;
        if pmf == 0.0 {
            // cdf has converged below u only through rounding
            break;
        }
        cdf += pmf;
    }
    Ok(x)
}
