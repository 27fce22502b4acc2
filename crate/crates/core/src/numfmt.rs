//! Locale-free number formatting shared by every text format in the crate.

/// Scientific notation with `digits` significant digits and an exponent of at
/// least two digits, e.g. `1.4760000000000000e-02`.
pub fn sci(value: f64, digits: usize) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    let raw = format!("{:.*e}", digits.saturating_sub(1), value);
    let (mantissa, exponent) = raw.split_once('e').expect("`{:e}` always emits an exponent");
    let (sign, magnitude) = match exponent.strip_prefix('-') {
        Some(m) => ('-', m),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{magnitude:0>2}")
}

/// Seventeen significant digits: enough for an exact f64 round trip.
pub fn exact(value: f64) -> String {
    sci(value, 17)
}

/// Shortest digits that round-trip, with the same exponent layout, e.g. `1e-02`.
pub fn compact(value: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    let raw = format!("{value:e}");
    let (mantissa, exponent) = raw.split_once('e').expect("`{:e}` always emits an exponent");
    let (sign, magnitude) = match exponent.strip_prefix('-') {
        Some(m) => ('-', m),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{magnitude:0>2}")
}
