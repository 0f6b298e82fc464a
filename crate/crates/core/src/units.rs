//! Decibel conversions and number formatting shared by file writers.

/// Linear power ratio to dB. Zero maps to `-inf`.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

/// Nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Formats `value` with `digits` significant digits in scientific notation.
///
/// Used by every CSV writer so that re-imported values reproduce objectives
/// to well below 1e-9.
pub fn fmt_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), value);
    // Trim trailing zeros of the mantissa: 5.00000000000e-1 -> 5e-1.
    match s.split_once('e') {
        Some((mantissa, exp)) if mantissa.contains('.') => {
            let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
            if exp == "0" {
                mantissa.to_string()
            } else {
                format!("{mantissa}e{exp}")
            }
        }
        _ => s,
    }
}
