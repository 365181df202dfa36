//! Number formatting shared by the CSV writers.

/// C `printf("%.12e")` formatting: a 12-digit mantissa and a signed exponent
/// of at least two digits, e.g. `-1.096376335077e+00`.
pub fn sci12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        assert_eq!(sci12(0.0), "0.000000000000e+00");
        assert_eq!(sci12(1.0), "1.000000000000e+00");
        assert_eq!(sci12(-0.001234), "-1.234000000000e-03");
        assert_eq!(sci12(6.02214076e23), "6.022140760000e+23");
        assert_eq!(sci12(1e-300), "1.000000000000e-300");
        assert_eq!(sci12(f64::NAN), "nan");
    }
}
