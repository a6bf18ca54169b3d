//! Serialization helpers: exact hexadecimal floats for orbit data.

pub mod hexfloat {
    /// Formats an f64 as a C99-style hexadecimal float, e.g. `0x1.8p+1`.
    pub fn format(v: f64) -> String {
        if v.is_nan() {
            return "nan".into();
        }
        if v.is_infinite() {
            return if v > 0.0 { "inf".into() } else { "-inf".into() };
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { "-" } else { "" };
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let mant = bits & ((1u64 << 52) - 1);
        if exp_bits == 0 && mant == 0 {
            return format!("{sign}0x0p+0");
        }
        let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
        let mut digits = format!("{mant:013x}");
        while digits.ends_with('0') {
            digits.pop();
        }
        let esign = if exp >= 0 { "+" } else { "-" };
        if digits.is_empty() {
            format!("{sign}0x{lead}p{esign}{}", exp.abs())
        } else {
            format!("{sign}0x{lead}.{digits}p{esign}{}", exp.abs())
        }
    }

    /// Parses the output of [`format`] (and plain decimal floats).
    pub fn parse(s: &str) -> Option<f64> {
        let t = s.trim();
        match t {
            "nan" => return Some(f64::NAN),
            "inf" | "+inf" => return Some(f64::INFINITY),
            "-inf" => return Some(f64::NEG_INFINITY),
            _ => {}
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let body = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
            Some(b) => b,
            None => return t.parse().ok(),
        };
        let (mant_str, exp_str) = body.split_once(['p', 'P'])?;
        let exp: i32 = exp_str.parse().ok()?;
        let (int_part, frac_part) = mant_str.split_once('.').unwrap_or((mant_str, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let mut m: u64 = 0;
        let mut shift: i32 = 0;
        for ch in int_part.chars() {
            let dg = ch.to_digit(16)? as u64;
            if m >> 56 != 0 {
                return None;
            }
            m = m * 16 + dg;
        }
        for ch in frac_part.chars() {
            let dg = ch.to_digit(16)? as u64;
            if m >> 56 != 0 {
                if dg != 0 {
                    return None;
                }
                continue;
            }
            m = m * 16 + dg;
            shift += 4;
        }
        // m < 2^60 is exact in the scaling below only if it fits 53 bits,
        // which holds for anything produced by `format`
        if m >> 53 != 0 {
            return None;
        }
        let v = ldexp(m as f64, exp - shift);
        Some(if neg { -v } else { v })
    }

    fn ldexp(x: f64, e: i32) -> f64 {
        let mut v = x;
        let mut e = e;
        while e > 1000 {
            v *= 2f64.powi(1000);
            e -= 1000;
        }
        while e < -1000 {
            v *= 2f64.powi(-1000);
            e += 1000;
        }
        v * 2f64.powi(e)
    }
}

/// `serde(with = …)` adapters that store floats as hex strings.
pub mod hex {
    use super::hexfloat;
    use num_complex::Complex64 as C64;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn enc(z: C64) -> [String; 2] {
        [hexfloat::format(z.re), hexfloat::format(z.im)]
    }

    fn dec<E: Error>(s: &[String; 2]) -> Result<C64, E> {
        let re = hexfloat::parse(&s[0]).ok_or_else(|| E::custom(format!("bad hex float {}", s[0])))?;
        let im = hexfloat::parse(&s[1]).ok_or_else(|| E::custom(format!("bad hex float {}", s[1])))?;
        Ok(C64::new(re, im))
    }

    pub mod real {
        use super::*;
        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            hexfloat::format(*v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            let t = String::deserialize(d)?;
            hexfloat::parse(&t).ok_or_else(|| D::Error::custom(format!("bad hex float {t}")))
        }
    }

    pub mod complex {
        use super::*;
        pub fn serialize<S: Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
            enc(*v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
            dec(&<[String; 2]>::deserialize(d)?)
        }
    }

    pub mod pair {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[C64; 2], s: S) -> Result<S::Ok, S::Error> {
            [enc(v[0]), enc(v[1])].serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[C64; 2], D::Error> {
            let t = <[[String; 2]; 2]>::deserialize(d)?;
            Ok([dec(&t[0])?, dec(&t[1])?])
        }
    }

    pub mod points {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[[C64; 2]], s: S) -> Result<S::Ok, S::Error> {
            let t: Vec<[[String; 2]; 2]> = v.iter().map(|p| [enc(p[0]), enc(p[1])]).collect();
            t.serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[C64; 2]>, D::Error> {
            let t = Vec::<[[String; 2]; 2]>::deserialize(d)?;
            t.iter().map(|p| Ok([dec(&p[0])?, dec(&p[1])?])).collect()
        }
    }

    pub mod complex_vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            let t: Vec<[String; 2]> = v.iter().map(|z| enc(*z)).collect();
            t.serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            let t = Vec::<[String; 2]>::deserialize(d)?;
            t.iter().map(|z| dec(z)).collect()
        }
    }
}
