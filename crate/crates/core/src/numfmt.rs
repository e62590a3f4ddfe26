/// Rounds to `digits` significant digits and prints the shortest decimal
/// that reads back as the rounded value. Negative zero prints as `0`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if !(1e-5..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

/// Twelve significant digits, the precision of all tabular output.
pub fn sig12(x: f64) -> String {
    sig(x, 12)
}
