use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{DetailToggles, LintCode, LintFinding, Severity};
use crate::corpus::Clause;
use crate::norm::Norm;
use crate::text::normalize_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetailKind {
    Date,
    Duration,
    Amount,
    Percentage,
}

/// Normalized value of a detail, so "sixty (60) days" and "60 days" compare
/// equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetailKey {
    Date { year: u32, month: u32, day: u32 },
    Duration { value: String, unit: String },
    Amount { currency: String, value: String },
    Percentage { value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detail {
    pub kind: DetailKind,
    /// Matched text as it appears in the source.
    pub surface: String,
    pub key: DetailKey,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

const MONTH_PATTERN: &str = "(January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec)";

const NUMBER_WORDS: [(&str, u32); 28] = [
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
    ("twenty", 20),
    ("thirty", 30),
    ("forty", 40),
    ("fifty", 50),
    ("sixty", 60),
    ("seventy", 70),
    ("eighty", 80),
    ("ninety", 90),
    ("hundred", 100),
];

const NUMBER_WORD_PATTERN: &str = "(?:(?:twenty|thirty|forty|fifty|sixty|seventy|eighty|ninety)(?:-(?:one|two|three|four|five|six|seven|eight|nine))?|one hundred|hundred|nineteen|eighteen|seventeen|sixteen|fifteen|fourteen|thirteen|twelve|eleven|ten|nine|eight|seven|six|five|four|three|two|one)";

static DATE_MDY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"\b{MONTH_PATTERN}\.?\s+(\d{{1,2}})(?:st|nd|rd|th)?[,.]?\s+(\d{{4}})\b"
    ))
    .unwrap()
});
static DATE_DMY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+(?:day\s+of\s+)?{MONTH_PATTERN}\.?,?\s+(\d{{4}})\b"
    ))
    .unwrap()
});
static DATE_SLASH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,2})/(\d{1,2})/(\d{4}|\d{2})\b").unwrap());
static DATE_ISO: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{4})-(\d{2})-(\d{2})\b").unwrap());
static DURATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)(?:\b({NUMBER_WORD_PATTERN})(?:[\s-]+\((\d+)\))?|\((\d+)\)|\b(\d+(?:\.\d+)?))[\s-]*(?:(?:business|calendar|working)\s+)?(day|week|month|year|hour)s?\b"
    ))
    .unwrap()
});
static AMOUNT_SYMBOL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\b(USD|EUR|GBP)\s?|(US\$|\$|£|€)\s?)(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{1,2}))?(?:\s+(thousand|million|billion)\b)?").unwrap()
});
static AMOUNT_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{1,2}))?(?:\s+(thousand|million|billion))?\s+(dollars|euros|pounds)\b").unwrap()
});
static PERCENT_DIGITS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(?:%|percent\b|per\s+cent\b)").unwrap());
static PERCENT_WORDS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b({NUMBER_WORD_PATTERN})\s+(?:percent|per\s+cent)\b"
    ))
    .unwrap()
});

fn month_number(name: &str) -> u32 {
    let lower = name.to_lowercase();
    MONTHS
        .iter()
        .position(|m| m.starts_with(&lower[..3]))
        .map_or(0, |i| i as u32 + 1)
}

fn word_value(words: &str) -> Option<u32> {
    let lower = words.to_lowercase();
    if lower == "one hundred" {
        return Some(100);
    }
    lower.split('-').try_fold(0, |acc, part| {
        NUMBER_WORDS
            .iter()
            .find(|(w, _)| *w == part)
            .map(|(_, v)| acc + v)
    })
}

/// Strips grouping commas and a zero fraction: "1,000.00" -> "1000".
fn normalize_number(int: &str, frac: Option<&str>) -> String {
    let mut s: String = int.chars().filter(|c| *c != ',').collect();
    let s_trim = s.trim_start_matches('0');
    s = if s_trim.is_empty() {
        "0".into()
    } else {
        s_trim.into()
    };
    if let Some(f) = frac
        .map(|f| f.trim_end_matches('0'))
        .filter(|f| !f.is_empty())
    {
        s.push('.');
        s.push_str(f);
    }
    s
}

fn date(year: &str, month: u32, day: &str) -> Option<DetailKey> {
    let mut year: u32 = year.parse().ok()?;
    if year < 100 {
        year += 2000;
    }
    let day: u32 = day.parse().ok()?;
    ((1..=12).contains(&month) && (1..=31).contains(&day)).then_some(DetailKey::Date {
        year,
        month,
        day,
    })
}

fn push(
    out: &mut Vec<Detail>,
    text: &str,
    kind: DetailKind,
    caps: &Captures<'_>,
    key: Option<DetailKey>,
) {
    let m = caps.get(0).unwrap();
    if let Some(key) = key {
        out.push(Detail {
            kind,
            surface: text[m.start()..m.end()].trim_end().to_string(),
            key,
            start: m.start(),
            end: m.start() + text[m.start()..m.end()].trim_end().len(),
        });
    }
}

/// Every date, duration, monetary amount and percentage in `text`, ordered
/// by position. Where two matches overlap the earlier (then longer) wins.
pub fn extract_details(text: &str) -> Vec<Detail> {
    let mut found = Vec::new();
    for c in DATE_MDY.captures_iter(text) {
        let key = date(&c[3], month_number(&c[1]), &c[2]);
        push(&mut found, text, DetailKind::Date, &c, key);
    }
    for c in DATE_DMY.captures_iter(text) {
        let key = date(&c[3], month_number(&c[2]), &c[1]);
        push(&mut found, text, DetailKind::Date, &c, key);
    }
    for c in DATE_SLASH.captures_iter(text) {
        let key = c[1].parse().ok().and_then(|m| date(&c[3], m, &c[2]));
        push(&mut found, text, DetailKind::Date, &c, key);
    }
    for c in DATE_ISO.captures_iter(text) {
        let key = c[2].parse().ok().and_then(|m| date(&c[1], m, &c[3]));
        push(&mut found, text, DetailKind::Date, &c, key);
    }
    for c in DURATION.captures_iter(text) {
        let value = c
            .get(2)
            .or(c.get(3))
            .or(c.get(4))
            .map(|m| normalize_number(m.as_str(), None))
            .or_else(|| {
                c.get(1)
                    .and_then(|w| word_value(w.as_str()))
                    .map(|v| v.to_string())
            });
        let key = value.map(|value| DetailKey::Duration {
            value,
            unit: c[5].to_lowercase(),
        });
        push(&mut found, text, DetailKind::Duration, &c, key);
    }
    for c in AMOUNT_SYMBOL.captures_iter(text) {
        let currency = match c
            .get(1)
            .or(c.get(2))
            .unwrap()
            .as_str()
            .to_uppercase()
            .as_str()
        {
            "$" | "US$" | "USD" => "USD",
            "£" | "GBP" => "GBP",
            _ => "EUR",
        };
        let mut value = normalize_number(&c[3], c.get(4).map(|m| m.as_str()));
        if let Some(mult) = c.get(5) {
            value = format!("{value} {}", mult.as_str().to_lowercase());
        }
        let key = DetailKey::Amount {
            currency: currency.into(),
            value,
        };
        push(&mut found, text, DetailKind::Amount, &c, Some(key));
    }
    for c in AMOUNT_WORD.captures_iter(text) {
        let currency = match c[4].to_lowercase().as_str() {
            "dollars" => "USD",
            "pounds" => "GBP",
            _ => "EUR",
        };
        let mut value = normalize_number(&c[1], c.get(2).map(|m| m.as_str()));
        if let Some(mult) = c.get(3) {
            value = format!("{value} {}", mult.as_str().to_lowercase());
        }
        let key = DetailKey::Amount {
            currency: currency.into(),
            value,
        };
        push(&mut found, text, DetailKind::Amount, &c, Some(key));
    }
    for c in PERCENT_DIGITS.captures_iter(text) {
        let (int, frac) = match c[1].split_once('.') {
            Some((i, f)) => (i.to_string(), Some(f.to_string())),
            None => (c[1].to_string(), None),
        };
        let key = DetailKey::Percentage {
            value: normalize_number(&int, frac.as_deref()),
        };
        push(&mut found, text, DetailKind::Percentage, &c, Some(key));
    }
    for c in PERCENT_WORDS.captures_iter(text) {
        let key = word_value(&c[1]).map(|v| DetailKey::Percentage {
            value: v.to_string(),
        });
        push(&mut found, text, DetailKind::Percentage, &c, key);
    }

    found.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut out: Vec<Detail> = Vec::new();
    for d in found {
        if out.last().is_some_and(|prev| d.start < prev.end) {
            continue;
        }
        out.push(d);
    }
    out
}

/// [`lint_detail_coverage_with`] with every detail class enabled.
pub fn lint_detail_coverage(norms: &[Norm], clause: &Clause) -> Vec<LintFinding> {
    lint_detail_coverage_with(norms, clause, &DetailToggles::default())
}

/// One DETAIL_OMITTED finding per distinct clause detail that no present
/// element of any norm mentions. An element mentions a detail when it holds
/// a detail with the same normalized value or contains its surface text.
pub fn lint_detail_coverage_with(
    norms: &[Norm],
    clause: &Clause,
    toggles: &DetailToggles,
) -> Vec<LintFinding> {
    let elements: Vec<&str> = norms
        .iter()
        .flat_map(|n| n.elements().filter_map(|(_, v)| v.text()))
        .collect();
    let element_keys: Vec<DetailKey> = elements
        .iter()
        .flat_map(|e| extract_details(e))
        .map(|d| d.key)
        .collect();
    let element_texts: Vec<String> = elements
        .iter()
        .map(|e| normalize_whitespace(e).to_lowercase())
        .collect();

    let mut seen: Vec<DetailKey> = Vec::new();
    let mut out = Vec::new();
    for d in extract_details(&clause.text) {
        if !toggles.allows(d.kind) || seen.contains(&d.key) {
            continue;
        }
        seen.push(d.key.clone());
        let surface = normalize_whitespace(&d.surface).to_lowercase();
        let covered =
            element_keys.contains(&d.key) || element_texts.iter().any(|t| t.contains(&surface));
        if !covered {
            let kind = match d.kind {
                DetailKind::Date => "date",
                DetailKind::Duration => "duration",
                DetailKind::Amount => "amount",
                DetailKind::Percentage => "percentage",
            };
            out.push(
                LintFinding::new(
                    LintCode::DetailOmitted,
                    Severity::Warn,
                    format!("{kind} `{}` appears in no extracted norm", d.surface),
                )
                .evidence([d.surface]),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(text: &str) -> Vec<(DetailKind, String)> {
        extract_details(text)
            .into_iter()
            .map(|d| (d.kind, d.surface))
            .collect()
    }

    #[test]
    fn example_four_details() {
        let d = extract_details("This Agreement shall be in effect until March 18. 2021, unless sooner terminated by either party upon (30) days written notice, without cause.");
        assert_eq!(d.len(), 2);
        assert_eq!(
            d[0].key,
            DetailKey::Date {
                year: 2021,
                month: 3,
                day: 18
            }
        );
        assert_eq!(d[0].surface, "March 18. 2021");
        assert_eq!(d[1].surface, "(30) days");
        assert_eq!(
            d[1].key,
            DetailKey::Duration {
                value: "30".into(),
                unit: "day".into()
            }
        );
    }

    #[test]
    fn number_words_and_parenthesized_numerals_agree() {
        let a = extract_details("upon sixty (60) days prior written notice");
        let b = extract_details("Rogers providing sixty (60) days' prior written notice");
        let c = extract_details("within 60 days");
        let d = extract_details("within sixty days");
        assert_eq!(a[0].surface, "sixty (60) days");
        assert!(a[0].key == b[0].key && b[0].key == c[0].key && c[0].key == d[0].key);
        assert_eq!(keys("a thirty-day cure period")[0].1, "thirty-day");
        assert_eq!(
            keys("ten (10) business days")[0].1,
            "ten (10) business days"
        );
    }

    #[test]
    fn no_number_no_duration() {
        assert!(extract_details("at any time during the term of years").is_empty());
        assert!(extract_details("Either party may terminate this Agreement").is_empty());
        // the modal "may" is not a month
        assert!(extract_details("Rogers may 18 2021").is_empty());
    }

    #[test]
    fn dates() {
        let want = DetailKey::Date {
            year: 2020,
            month: 1,
            day: 5,
        };
        for t in [
            "January 5, 2020",
            "Jan. 5th, 2020",
            "5th day of January, 2020",
            "5 January 2020",
            "1/5/2020",
            "2020-01-05",
        ] {
            let d = extract_details(t);
            assert_eq!(d.len(), 1, "{t}");
            assert_eq!(d[0].key, want, "{t}");
        }
        assert!(extract_details("13/45/2020").is_empty());
    }

    #[test]
    fn amounts_and_percentages() {
        let d = extract_details(
            "a fee of $1,000.00 or 1000 dollars, plus fifty percent (50%) and 2.5 per cent",
        );
        let k: Vec<&DetailKey> = d.iter().map(|d| &d.key).collect();
        let usd = DetailKey::Amount {
            currency: "USD".into(),
            value: "1000".into(),
        };
        let fifty = DetailKey::Percentage { value: "50".into() };
        assert_eq!(
            k,
            [
                &usd,
                &usd,
                &fifty,
                &fifty,
                &DetailKey::Percentage {
                    value: "2.5".into()
                }
            ]
        );
        assert_eq!(keys("EUR 5 million")[0].1, "EUR 5 million");
    }

    #[test]
    fn toggles_disable_classes() {
        let clause = Clause::new(
            "c",
            "k",
            crate::corpus::ClauseCategory::parse("Change Of Control").unwrap(),
            "Pay 10% within 30 days.",
        );
        assert_eq!(lint_detail_coverage(&[], &clause).len(), 2);
        let only_dates = DetailToggles {
            dates: true,
            durations: false,
            amounts: false,
            percentages: false,
        };
        assert!(lint_detail_coverage_with(&[], &clause, &only_dates).is_empty());
    }
}
