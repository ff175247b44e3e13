//! Deterministic number formatting for output files: six significant
//! digits, plain decimal where compact and scientific otherwise, with no
//! trailing zero noise.

pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-4..6).contains(&exp) {
        // Decimal places that leave six significant digits.
        let places = (5 - exp).max(0) as usize;
        format!("{:.*}", places, x)
    } else {
        format!("{:.5e}", x)
    };
    trim_trailing_zeros(s)
}

fn trim_trailing_zeros(s: String) -> String {
    if let Some(epos) = s.find('e') {
        let (mantissa, exp) = s.split_at(epos);
        let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{trimmed}{exp}")
    } else if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn opt_sig6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.425382117), "0.425382");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-1.5), "-1.5");
        assert_eq!(sig6(3600.0), "3600");
        assert_eq!(sig6(0.0001234567), "0.000123457");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1.234567e7), "1.23457e7");
        assert_eq!(sig6(7.5e-7), "7.5e-7");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "nan");
    }

    #[test]
    fn round_half_behaviour_is_stable() {
        assert_eq!(sig6(0.1), "0.1");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
    }
}
