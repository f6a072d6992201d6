//! Number formatting shared by the CSV writers.

/// Formats `x` with 12 significant digits, trailing zeros trimmed. Infinities
/// are written as `inf` / `-inf`.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0 / 3.0 * 1e3), "666.666666667");
        assert_eq!(sig12(339.0), "339");
        assert_eq!(sig12(-0.25), "-0.25");
        assert_eq!(sig12(1.5e-9), "1.5e-9");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig12(f64::INFINITY), "inf");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for x in [std::f64::consts::PI, 8.663711807, 1e-300, 6.02214076e23, -41.5] {
            let y: f64 = sig12(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 5e-12);
        }
    }
}
