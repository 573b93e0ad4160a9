/// Formats `x` with 12 significant digits, trimming redundant zeros.
///
/// The output parses back to a value that formats identically, so
/// re-serializing is idempotent.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let exp = rounded.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(fmt_float(4.28), "4.28");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(1e-11), "1e-11");
        assert_eq!(fmt_float(123456789012345.0), "123456789012000");
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }

    #[test]
    fn idempotent() {
        for x in [std::f64::consts::PI, 1e-300, 6.02214076e23, -17.5, 0.1 + 0.2, 9.999999999999e-6] {
            let once = fmt_float(x);
            assert_eq!(fmt_float(once.parse().unwrap()), once);
        }
    }
}
