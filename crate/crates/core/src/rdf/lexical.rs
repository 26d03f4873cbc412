//! Lexical-form checks and conversions for the XSD datatypes the toolkit uses.

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::vocab::xsd;

/// A point in time as seconds plus nanoseconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instant {
    pub secs: i64,
    pub nanos: u32,
}

impl Instant {
    pub fn from_unix(secs: i64) -> Self {
        Self { secs, nanos: 0 }
    }
}

pub fn is_integer(lex: &str) -> bool {
    let digits = lex.strip_prefix(['+', '-']).unwrap_or(lex);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub fn is_decimal(lex: &str) -> bool {
    let body = lex.strip_prefix(['+', '-']).unwrap_or(lex);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    match frac {
        Some(f) => all_digits(int) && all_digits(f) && !(int.is_empty() && f.is_empty()),
        None => !int.is_empty() && all_digits(int),
    }
}

/// xsd:double / xsd:float lexical space (decimal or scientific, plus INF/-INF/NaN).
pub fn parse_double(lex: &str) -> Option<f64> {
    match lex {
        "INF" | "+INF" => return Some(f64::INFINITY),
        "-INF" => return Some(f64::NEG_INFINITY),
        "NaN" => return Some(f64::NAN),
        _ => {}
    }
    let (mantissa, exponent) = match lex.find(['e', 'E']) {
        Some(i) => (&lex[..i], Some(&lex[i + 1..])),
        None => (lex, None),
    };
    if !is_decimal(mantissa) || exponent.is_some_and(|e| !is_integer(e)) {
        return None;
    }
    lex.parse().ok()
}

/// Canonical-ish double rendering: shortest round-trip digits, XSD spellings for
/// the special values.
pub fn format_double(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "INF" } else { "-INF" }.to_owned()
    } else {
        format!("{v}")
    }
}

pub fn parse_boolean(lex: &str) -> Option<bool> {
    match lex {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Parses an xsd:dateTime lexical form. Values without a zone offset are read as UTC.
pub fn parse_date_time(lex: &str) -> Option<Instant> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(lex) {
        return Some(Instant {
            secs: dt.timestamp(),
            nanos: dt.timestamp_subsec_nanos(),
        });
    }
    let naive = NaiveDateTime::parse_from_str(lex, "%Y-%m-%dT%H:%M:%S%.f").ok()?;
    let utc = naive.and_utc();
    Some(Instant {
        secs: utc.timestamp(),
        nanos: utc.timestamp_subsec_nanos(),
    })
}

/// 25-character ISO 8601 rendering with an explicit `+00:00` offset.
pub fn format_iso8601(secs: i64) -> Option<String> {
    let dt = DateTime::<Utc>::from_timestamp(secs, 0)?;
    Some(dt.format("%Y-%m-%dT%H:%M:%S+00:00").to_string())
}

/// Components of an xsd:duration. Year/month parts are kept apart from the
/// day-time part because they have no fixed length in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationParts {
    pub months: i64,
    pub seconds: f64,
}

pub fn parse_duration(lex: &str) -> Option<DurationParts> {
    let (negative, rest) = match lex.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, lex),
    };
    let rest = rest.strip_prefix('P')?;
    let (date_part, time_part) = match rest.split_once('T') {
        Some((d, t)) => {
            if t.is_empty() {
                return None;
            }
            (d, Some(t))
        }
        None => (rest, None),
    };
    if date_part.is_empty() && time_part.is_none() {
        return None;
    }

    let mut months = 0i64;
    let mut seconds = 0f64;
    let mut remaining = date_part;
    for (designator, factor) in [('Y', 12i64), ('M', 1)] {
        if let Some(idx) = remaining.find(designator) {
            let n: i64 = digits_only(&remaining[..idx])?;
            months = months.checked_add(n.checked_mul(factor)?)?;
            remaining = &remaining[idx + 1..];
        }
    }
    if let Some(idx) = remaining.find('D') {
        let n: i64 = digits_only(&remaining[..idx])?;
        seconds += n as f64 * 86_400.0;
        remaining = &remaining[idx + 1..];
    }
    if !remaining.is_empty() {
        return None;
    }

    if let Some(mut t) = time_part {
        for (designator, factor) in [('H', 3_600.0), ('M', 60.0)] {
            if let Some(idx) = t.find(designator) {
                let n: i64 = digits_only(&t[..idx])?;
                seconds += n as f64 * factor;
                t = &t[idx + 1..];
            }
        }
        if let Some(idx) = t.find('S') {
            let s = &t[..idx];
            if !is_decimal(s) || s.starts_with(['+', '-']) {
                return None;
            }
            seconds += s.parse::<f64>().ok()?;
            t = &t[idx + 1..];
        }
        if !t.is_empty() {
            return None;
        }
    }

    if negative {
        months = -months;
        seconds = -seconds;
    }
    Some(DurationParts { months, seconds })
}

fn digits_only(s: &str) -> Option<i64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Whether `lex` is in the lexical space of `datatype`. Datatypes outside the
/// supported set are accepted as-is.
pub fn is_valid(lex: &str, datatype: &str) -> bool {
    match datatype {
        xsd::INTEGER => is_integer(lex),
        xsd::DECIMAL => is_decimal(lex),
        xsd::DOUBLE | xsd::FLOAT => parse_double(lex).is_some(),
        xsd::BOOLEAN => parse_boolean(lex).is_some(),
        xsd::DATE_TIME => parse_date_time(lex).is_some(),
        xsd::DURATION => parse_duration(lex).is_some(),
        _ => true,
    }
}
