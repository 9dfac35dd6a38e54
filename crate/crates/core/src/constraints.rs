//! Value validation for form controls, shared by the simulator, the filler and the generator.
//!
//! Syntax rules follow the HTML input types: a value that a browser would refuse to hold for a
//! control (for instance `abc` in a `number` input) is a syntax error. Declared constraints
//! (`min`, `max`, `pattern`, `maxlength`, `minlength`) are checked separately and only for
//! non-empty values.

use alloc::string::String;

use regex_automata::meta::Regex;
use regex_syntax::hir::{Class, Hir, HirKind};
use serde::{Deserialize, Serialize};

use crate::dom::{Constraints, ControlType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    #[error("value is not valid for the control type")]
    BadSyntax,
    #[error("value is below the minimum")]
    RangeUnderflow,
    #[error("value is above the maximum")]
    RangeOverflow,
    #[error("value does not match the pattern")]
    PatternMismatch,
    #[error("value is longer than maxlength")]
    TooLong,
    #[error("value is shorter than minlength")]
    TooShort,
    #[error("a required value is missing")]
    ValueMissing,
}

/// Whether a control of type `control` can hold `value`. Empty values are always accepted.
pub fn valid_syntax(control: ControlType, value: &str) -> bool {
    if value.is_empty() {
        return true;
    }
    match control {
        ControlType::Email => valid_email(value),
        ControlType::Url => url::Url::parse(value).is_ok(),
        ControlType::Number | ControlType::Range => parse_number(value).is_some(),
        ControlType::Date => parse_date(value).is_some(),
        ControlType::Month => parse_month(value).is_some(),
        ControlType::Week => parse_week(value).is_some(),
        ControlType::Time => valid_time(value),
        ControlType::Color => {
            value.len() == 7 && value.starts_with('#') && value[1..].chars().all(|c| c.is_ascii_hexdigit())
        }
        ControlType::Text
        | ControlType::Password
        | ControlType::Tel
        | ControlType::Search
        | ControlType::Textarea
        | ControlType::Hidden
        | ControlType::Select
        | ControlType::Radio
        | ControlType::Checkbox
        | ControlType::File => true,
    }
}

/// Check a value against the type syntax and the declared constraints.
pub fn validate(control: ControlType, constraints: &Constraints, value: &str) -> Result<(), Violation> {
    if value.is_empty() {
        return Ok(());
    }
    if !valid_syntax(control, value) {
        return Err(Violation::BadSyntax);
    }
    if let Some(min) = &constraints.min {
        if compare(control, value, min) == Some(core::cmp::Ordering::Less) {
            return Err(Violation::RangeUnderflow);
        }
    }
    if let Some(max) = &constraints.max {
        if compare(control, value, max) == Some(core::cmp::Ordering::Greater) {
            return Err(Violation::RangeOverflow);
        }
    }
    let len = value.chars().count();
    if constraints.maxlength.is_some_and(|m| len > m) {
        return Err(Violation::TooLong);
    }
    if constraints.minlength.is_some_and(|m| len < m) {
        return Err(Violation::TooShort);
    }
    if let Some(pattern) = &constraints.pattern {
        if accepts_pattern(control) && !pattern_matches(pattern, value) {
            return Err(Violation::PatternMismatch);
        }
    }
    Ok(())
}

fn accepts_pattern(control: ControlType) -> bool {
    matches!(
        control,
        ControlType::Text
            | ControlType::Search
            | ControlType::Tel
            | ControlType::Url
            | ControlType::Email
            | ControlType::Password
    )
}

/// Whole-value match of an HTML `pattern`. Patterns that fail to compile are ignored, as in
/// browsers.
pub fn pattern_matches(pattern: &str, value: &str) -> bool {
    match Regex::new(&alloc::format!("^(?:{})$", pattern)) {
        Ok(re) => re.is_match(value),
        Err(_) => true,
    }
}

/// Ordering of two values under the control's value semantics, when both parse.
pub fn compare(control: ControlType, a: &str, b: &str) -> Option<core::cmp::Ordering> {
    match control {
        ControlType::Number | ControlType::Range => parse_number(a)?.partial_cmp(&parse_number(b)?),
        ControlType::Date => Some(parse_date(a)?.cmp(&parse_date(b)?)),
        ControlType::Month => Some(parse_month(a)?.cmp(&parse_month(b)?)),
        ControlType::Week => Some(parse_week(a)?.cmp(&parse_week(b)?)),
        ControlType::Time if valid_time(a) && valid_time(b) => Some(pad_time(a).cmp(&pad_time(b))),
        _ => None,
    }
}

fn pad_time(t: &str) -> String {
    let mut s = String::from(t);
    if s.len() == 5 {
        s.push_str(":00");
    }
    s
}

fn valid_email(value: &str) -> bool {
    let Some((local, domain)) = value.split_once('@') else { return false };
    let local_ok = !local.is_empty()
        && local.chars().all(|c| c.is_ascii_alphanumeric() || ".!#$%&'*+/=?^_`{|}~-".contains(c));
    let domain_ok = !domain.is_empty()
        && domain.split('.').all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        });
    local_ok && domain_ok
}

/// HTML "valid floating-point number".
pub fn parse_number(value: &str) -> Option<f64> {
    let digits = value.strip_prefix('-').unwrap_or(value);
    let (mantissa, exponent) = match digits.find(['e', 'E']) {
        Some(i) => (&digits[..i], Some(&digits[i + 1..])),
        None => (digits, None),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = match frac {
        Some(f) => (int.is_empty() || all_digits(int)) && all_digits(f),
        None => all_digits(int),
    };
    let exponent_ok = exponent.is_none_or(|e| all_digits(e.strip_prefix(['+', '-']).unwrap_or(e)));
    if !mantissa_ok || !exponent_ok {
        return None;
    }
    value.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn fixed_digits(s: &str, n: usize) -> Option<u32> {
    if s.len() == n && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn is_leap(year: u32) -> bool {
    (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400)
}

pub fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

pub fn parse_date(value: &str) -> Option<(u32, u32, u32)> {
    let mut parts = value.split('-');
    let (y, m, d) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let (y, m, d) = (fixed_digits(y, 4)?, fixed_digits(m, 2)?, fixed_digits(d, 2)?);
    (y >= 1 && (1..=12).contains(&m) && d >= 1 && d <= days_in_month(y, m)).then_some((y, m, d))
}

pub fn parse_month(value: &str) -> Option<(u32, u32)> {
    let (y, m) = value.split_once('-')?;
    let (y, m) = (fixed_digits(y, 4)?, fixed_digits(m, 2)?);
    (y >= 1 && (1..=12).contains(&m)).then_some((y, m))
}

pub fn parse_week(value: &str) -> Option<(u32, u32)> {
    let (y, w) = value.split_once("-W")?;
    let (y, w) = (fixed_digits(y, 4)?, fixed_digits(w, 2)?);
    (y >= 1 && (1..=53).contains(&w)).then_some((y, w))
}

fn valid_time(value: &str) -> bool {
    let mut parts = value.split(':');
    let (Some(h), Some(m)) = (parts.next(), parts.next()) else { return false };
    let seconds = parts.next();
    if parts.next().is_some() {
        return false;
    }
    let h_ok = fixed_digits(h, 2).is_some_and(|h| h < 24);
    let m_ok = fixed_digits(m, 2).is_some_and(|m| m < 60);
    let s_ok = seconds.is_none_or(|s| {
        let (whole, frac) = s.split_once('.').unwrap_or((s, "0"));
        fixed_digits(whole, 2).is_some_and(|s| s < 60)
            && !frac.is_empty()
            && frac.len() <= 3
            && frac.bytes().all(|b| b.is_ascii_digit())
    });
    h_ok && m_ok && s_ok
}

/// A short string matched by `pattern`, built by walking its syntax tree and taking the first
/// alternative, the minimum repetition count and the first character of each class. Returns
/// `None` for patterns that do not parse or contain look-around assertions.
pub fn sample_for_pattern(pattern: &str) -> Option<String> {
    let hir = regex_automata::util::syntax::parse(pattern).ok()?;
    let mut out = String::new();
    sample_hir(&hir, &mut out)?;
    pattern_matches(pattern, &out).then_some(out)
}

fn sample_hir(hir: &Hir, out: &mut String) -> Option<()> {
    match hir.kind() {
        HirKind::Empty => Some(()),
        HirKind::Literal(lit) => {
            out.push_str(core::str::from_utf8(&lit.0).ok()?);
            Some(())
        }
        HirKind::Class(Class::Unicode(cls)) => {
            let preferred = cls
                .ranges()
                .iter()
                .find_map(|r| (r.start()..=r.end()).find(|c| c.is_ascii_alphanumeric()));
            out.push(preferred.or_else(|| cls.ranges().first().map(|r| r.start()))?);
            Some(())
        }
        HirKind::Class(Class::Bytes(cls)) => {
            let r = cls.ranges().first()?;
            out.push(char::from(r.start()));
            Some(())
        }
        HirKind::Look(_) => Some(()),
        HirKind::Repetition(rep) => {
            for _ in 0..rep.min {
                sample_hir(&rep.sub, out)?;
            }
            Some(())
        }
        HirKind::Capture(cap) => sample_hir(&cap.sub, out),
        HirKind::Concat(items) => items.iter().try_for_each(|h| sample_hir(h, out)),
        HirKind::Alternation(items) => sample_hir(items.first()?, out),
    }
}

/// First non-empty option, falling back to the first option.
pub fn first_non_empty(options: &[String]) -> Option<&str> {
    options.iter().map(String::as_str).find(|o| !o.is_empty()).or_else(|| options.first().map(String::as_str))
}
