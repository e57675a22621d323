//! CSV and JSON writers.

use std::fmt::Write as _;

use linexp3::RegretCurve;

pub const CURVE_HEADER: &str = "t,mean_regret,stderr,mean_learner_loss,mean_comparator_loss";
pub const SWEEP_HEADER: &str = "T,final_regret,stderr";

/// `x` with 12 significant digits, shortest form (like `%.12g`).
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn curve_csv(curve: &RegretCurve) -> String {
    let mut out = String::new();
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for i in 0..curve.grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            curve.grid[i],
            format_g12(curve.mean_regret[i]),
            format_g12(curve.stderr[i]),
            format_g12(curve.mean_learner_loss[i]),
            format_g12(curve.mean_comparator_loss[i]),
        );
    }
    out
}

pub fn sweep_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (t, regret, stderr) in rows {
        let _ = writeln!(out, "{t},{},{}", format_g12(*regret), format_g12(*stderr));
    }
    out
}

/// JSON numbers cannot be NaN or infinite; those become `null`.
pub fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(0.5), "0.5");
        assert_eq!(format_g12(-2.25), "-2.25");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(2.0 / 3.0 * 1000.0), "666.666666667");
        assert_eq!(format_g12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_g12(1.5e-7), "1.5e-07");
        assert_eq!(format_g12(0.0001), "0.0001");
        assert_eq!(format_g12(999999999999.5), "1e+12");
    }

    #[test]
    fn curve_csv_layout() {
        let curve = RegretCurve {
            grid: vec![1, 2],
            mean_regret: vec![0.5, 1.0],
            stderr: vec![0.0, 0.1],
            mean_learner_loss: vec![0.5, 1.0],
            mean_comparator_loss: vec![0.0, 0.0],
            replications: 2,
        };
        assert_eq!(
            curve_csv(&curve),
            "t,mean_regret,stderr,mean_learner_loss,mean_comparator_loss\n1,0.5,0,0.5,0\n2,1,0.1,1,0\n"
        );
    }
}
