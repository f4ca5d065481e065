//! Number formatting and file emission shared by all exports.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_bigint::BigUint;

/// `%.17g`-style rendering: 17 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e17)`. Non-finite values render as
/// `nan`, `inf`, `-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    if !(-5..17).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        out.push_str(&digits[..point]);
        out.push('.');
        out.push_str(&digits[point..]);
    }
    trim_fraction(&mut out);
    out
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

/// A JSON number carrying exactly the [`fmt17`] digits; `null` when non-finite.
pub fn num17(x: f64) -> serde_json::Value {
    if !x.is_finite() {
        return serde_json::Value::Null;
    }
    let n: serde_json::Number = fmt17(x).parse().expect("fmt17 yields a JSON number");
    serde_json::Value::Number(n)
}

pub fn big_str(n: &BigUint) -> String {
    n.to_str_radix(10)
}

/// Natural logarithm of a big integer without overflowing `f64`.
pub fn ln_big(n: &BigUint) -> f64 {
    use num_traits::ToPrimitive;
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_cases() {
        assert_eq!(fmt17(3.0), "3");
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(2f64.sqrt()), "1.4142135623730951");
        assert_eq!(fmt17(-2.5), "-2.5");
        assert_eq!(fmt17(1e20), "1e+20");
        assert_eq!(fmt17(1.5e-7), "1.4999999999999999e-07");
        assert_eq!(fmt17(0.0001), "0.0001");
        assert_eq!(fmt17(f64::NAN), "nan");
        assert_eq!(fmt17(123456.0), "123456");
    }

    #[test]
    fn ln_of_huge() {
        let n = BigUint::from(10u32).pow(400);
        assert!((ln_big(&n) - 400.0 * 10f64.ln()).abs() < 1e-9);
        assert_eq!(ln_big(&BigUint::from(1u32)), 0.0);
    }

    proptest! {
        #[test]
        fn fmt17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = fmt17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
            let j = num17(x).to_string();
            prop_assert_eq!(j.parse::<f64>().unwrap(), x);
        }
    }
}
