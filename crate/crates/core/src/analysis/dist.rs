//! Student t tail probabilities.

use statrs::function::beta::beta_reg;

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom, computed as
/// `I_{df/(df+t²)}(df/2, 1/2)` so small tails keep their relative precision.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Student's t CDF.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
