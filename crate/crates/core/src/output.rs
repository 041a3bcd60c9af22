//! Text formatting shared by the CSV writers.

/// Nine significant digits in scientific notation.
pub fn sci9(x: f64) -> String {
    // no "-0" in output
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}
