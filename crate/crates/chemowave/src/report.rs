//! Text output helpers shared by the CLI and the verification suite.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits so independent runs and
/// implementations can be diffed byte for byte.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Renders `key = value` lines in a stable order.
pub fn key_value_block(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(-1.25e-3), "-1.2500000000000000e-3");
    }
}
