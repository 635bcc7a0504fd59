//! Fraction comparisons shared by the engines.
//!
//! Quotas are compared as `count / total` against the configured fraction so
//! that a boundary like 32/40 against 0.8 lands exactly on the fraction
//! instead of on a rounded product.

pub(crate) fn check_fraction(name: &'static str, value: f64) -> Result<(), (&'static str, f64)> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err((name, value))
    }
}

/// `count / total >= fraction`.
pub fn meets(count: usize, total: usize, fraction: f64) -> bool {
    total > 0 && count as f64 / total as f64 >= fraction
}

/// `count / total > fraction`.
pub fn exceeds(count: usize, total: usize, fraction: f64) -> bool {
    total > 0 && count as f64 / total as f64 > fraction
}

/// Smallest `c` in `0..=total` with `meets(c, total, fraction)`.
pub fn min_count_meeting(total: usize, fraction: f64) -> usize {
    let mut c = ((fraction * total as f64).ceil() as usize).min(total);
    while c > 0 && meets(c - 1, total, fraction) {
        c -= 1;
    }
    while c < total && !meets(c, total, fraction) {
        c += 1;
    }
    c
}
