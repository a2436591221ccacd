//! Fixed-precision numeric output.

/// Significant digits kept in every CSV and JSON number.
pub const SIG_DIGITS: usize = 12;

/// Rounds to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal string of `round_sig(x)`.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x))
}
