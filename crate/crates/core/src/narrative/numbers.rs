//! Number formatting for descriptions and number extraction for checking them.

/// Formats a value for prose: integers without decimals, magnitudes of at
/// least 1 with up to two decimals, smaller values with three significant
/// figures.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "n/a".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let s = if x.abs() >= 1.0 {
        format!("{x:.2}")
    } else {
        let digits = (2 - x.abs().log10().floor() as i32).max(0) as usize;
        format!("{x:.digits$}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// A fraction rendered as a percentage, e.g. `0.2` → `20%`.
pub fn format_percent(fraction: f64) -> String {
    format!("{}%", format_number(fraction * 100.0))
}

/// A signed percentage, e.g. `0.2` → `+20%`.
pub fn format_signed_percent(fraction: f64) -> String {
    if fraction > 0.0 {
        format!("+{}", format_percent(fraction))
    } else {
        format_percent(fraction)
    }
}

/// Unsigned numbers written in `text`, with percentages converted to
/// fractions. Accepts comma digit grouping and decimal fractions.
pub fn extract_numbers(text: &str) -> Vec<f64> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if !b[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let mut digits = String::new();
        while i < b.len() {
            if b[i].is_ascii_digit() {
                digits.push(b[i] as char);
                i += 1;
            } else if b[i] == b','
                && b.get(i + 1..i + 4)
                    .is_some_and(|g| g.iter().all(u8::is_ascii_digit))
                && !b.get(i + 4).is_some_and(u8::is_ascii_digit)
            {
                i += 1;
            } else {
                break;
            }
        }
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            digits.push('.');
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                digits.push(b[i] as char);
                i += 1;
            }
        }
        let mut value: f64 = digits.parse().unwrap_or(0.0);
        if i < b.len() && b[i] == b'%' {
            value /= 100.0;
            i += 1;
        }
        out.push(value);
    }
    out
}

/// True when `mentioned` is within 1% (relative) of `|allowed|`.
pub fn matches_within_tolerance(mentioned: f64, allowed: f64) -> bool {
    let a = allowed.abs();
    let d = (mentioned - a).abs();
    d <= 0.01 * a || d < 1e-12
}
