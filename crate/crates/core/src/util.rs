//! Small shared helpers: stable digests and CSV float formatting.

/// One step of the splitmix64 generator; used to derive independent seeds.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministically derive a sub-seed from a base seed and a salt.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}

/// 64-bit FNV-1a over a byte stream. Stable across platforms; used for
/// state digests and manifest file fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Format a float with 12 significant digits, trailing zeros trimmed.
///
/// All floating-point values written to CSV go through this so that replayed
/// runs produce byte-identical files on any platform.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{:.11e}", x);
    // "-1.23400000000e-5" -> mantissa "-1.234", exponent -5
    let (mantissa, exp) = s.split_once('e').expect("exponential format");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        // Expand small exponents to plain decimal notation.
        let value: f64 = format!("{mantissa}e{exp}").parse().expect("rounded float");
        let decimals = (11 - exp).max(0) as usize;
        let plain = format!("{value:.decimals$}");
        let plain = if plain.contains('.') {
            plain.trim_end_matches('0').trim_end_matches('.')
        } else {
            &plain
        };
        plain.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn g12_round_trips_and_trims() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-2.5), "-2.5");
        assert_eq!(fmt_g12(0.45), "0.45");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(1e-7), "1e-7");
        assert_eq!(fmt_g12(1.5e13), "1.5e13");
        assert_eq!(fmt_g12(f64::NAN), "nan");
    }

    #[test]
    fn g12_keeps_twelve_significant_digits() {
        let x = 1.2345678901234567;
        assert_eq!(fmt_g12(x), "1.23456789012");
    }
}
