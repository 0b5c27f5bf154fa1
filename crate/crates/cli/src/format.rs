//! Locale-free float formatting for CSV output.

/// `x` with 17 significant digits, so that parsing the text gives back the
/// same `f64`. Plain decimal notation for moderate magnitudes, scientific
/// otherwise.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..16).contains(&exp) {
        let prec = (16 - exp) as usize;
        let s = format!("{x:.prec$}");
        trim_zeros(s)
    } else {
        let (mant, e) = sci.split_at(sci.find('e').unwrap());
        format!("{}{e}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One CSV row from already-formatted cells.
pub fn csv_row<I: IntoIterator<Item = String>>(cells: I) -> String {
    let mut line = cells.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-9, 6.02214076e23, 0.8370043, 1e-5, 123456.789, -0.0] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn readable_forms() {
        assert_eq!(sig17(0.5), "0.5");
        assert_eq!(sig17(10.0), "10");
        assert_eq!(sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(sig17(2f64.powi(-70)), "8.4703294725430034e-22");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert!(!sig17(1234.5).contains('e'));
    }
}
