//! Locale-free decimal formatting with 17 significant digits.

/// Formats `x` with 17 significant digits, positional for moderate
/// exponents and scientific otherwise. Round-trips every finite `f64`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        let s = format!("{x:.decimals$}");
        trim_fraction(s)
    } else {
        sci
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
