use libm::erfc;
use statrs::function::erf::erfc_inv;

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(t)` without cancellation for large `t`.
pub fn std_normal_sf(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(u)` for `u ∈ (0, 1)`.
pub fn std_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}
