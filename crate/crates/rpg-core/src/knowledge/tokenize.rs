//! Deterministic whitespace + punctuation tokenizer that keeps numeric
//! literals (currency, thousands separators, decimals, parenthesized
//! negatives, trailing percent) as single tokens, plus the matching
//! string-to-number normalizer.

/// One surface token with byte offsets into the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawToken {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

const CURRENCY: [char; 3] = ['$', '\u{20ac}', '\u{a3}'];

fn is_currency(c: char) -> bool {
    CURRENCY.contains(&c)
}

fn is_minus(c: char) -> bool {
    c == '-' || c == '\u{2212}'
}

/// Split `text` into tokens. Runs of alphanumerics form one token, every
/// other non-space character stands alone, except that numeric literals such
/// as `$1,496.5`, `(1.2)`, `-8.3`, or `0.2%` stay in one piece. `2019-2020`
/// splits into three tokens because the minus sign sits between alphanumerics.
pub fn tokenize(text: &str) -> Vec<RawToken> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let (_, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let boundary = i == 0 || !chars[i - 1].1.is_alphanumeric();
        if let Some(len) = match_numeric(&chars, i, boundary) {
            push(&mut out, text, &chars, i, i + len);
            i += len;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < n && chars[j].1.is_alphanumeric() {
                j += 1;
            }
            push(&mut out, text, &chars, i, j);
            i = j;
            continue;
        }
        push(&mut out, text, &chars, i, i + 1);
        i += 1;
    }
    out
}

fn push(out: &mut Vec<RawToken>, text: &str, chars: &[(usize, char)], from: usize, to: usize) {
    let start = chars[from].0;
    let end = if to < chars.len() { chars[to].0 } else { text.len() };
    out.push(RawToken { surface: text[start..end].to_string(), start, end });
}

/// Try to read a numeric literal starting at char position `i`; returns its
/// length in chars. `boundary` is false when the previous character is
/// alphanumeric, which forbids a leading minus (so ranges like `2019-2020`
/// do not swallow the second year as a negative).
fn match_numeric(chars: &[(usize, char)], i: usize, boundary: bool) -> Option<usize> {
    let n = chars.len();
    let mut j = i;
    let at = |k: usize| chars.get(k).map(|&(_, c)| c);

    if at(j).is_some_and(is_currency) {
        j += 1;
    }
    let mut paren = false;
    if at(j) == Some('(') {
        paren = true;
        j += 1;
        if at(j).is_some_and(is_currency) {
            j += 1;
        }
    }
    if at(j).is_some_and(is_minus) {
        if !boundary && !paren && j == i {
            return None;
        }
        j += 1;
    }

    // Digit body: digits with optional grouping commas and one decimal point.
    let body_start = j;
    let mut saw_digit = false;
    let mut saw_dot = false;
    while j < n {
        let c = chars[j].1;
        if c.is_ascii_digit() {
            saw_digit = true;
            j += 1;
        } else if c == ',' && saw_digit && at(j + 1).is_some_and(|d| d.is_ascii_digit()) {
            j += 1;
        } else if c == '.' && !saw_dot && at(j + 1).is_some_and(|d| d.is_ascii_digit()) {
            saw_dot = true;
            j += 1;
        } else {
            break;
        }
    }
    if !saw_digit || j == body_start {
        return None;
    }
    // A literal must not run straight into a word: "2019ad" is a word token.
    if !paren && at(j).is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }

    if at(j) == Some('%') {
        j += 1;
    }
    if paren {
        if at(j) != Some(')') {
            return None;
        }
        j += 1;
    }
    if at(j) == Some('%') {
        j += 1;
    }
    Some(j - i)
}

/// Normalize one numeric string to a value plus a percent flag.
///
/// Handles currency prefixes, grouping commas, parenthesized negatives, a
/// leading minus, and a trailing percent sign: `"1,496.5"` gives `1496.5`,
/// `"(1.2)"` gives `-1.2`, `"$8,116"` gives `8116.0`, `"0.2%"` gives `0.2`
/// with the percent flag set. Strings that do not normalize to a single
/// number give `None`.
pub fn parse_number(s: &str) -> Option<ParsedNumber> {
    let mut rest = s.trim();
    let mut negate = false;
    let mut percent = false;

    loop {
        let t = rest.trim();
        if let Some(stripped) = t.strip_suffix('%') {
            percent = true;
            rest = stripped;
        } else if t.starts_with('(') && t.ends_with(')') && t.len() >= 2 {
            negate = !negate;
            rest = &t[1..t.len() - 1];
        } else if let Some(stripped) = t.strip_prefix(|c: char| is_currency(c)) {
            rest = stripped;
        } else if let Some(stripped) =
            t.strip_prefix('-').or_else(|| t.strip_prefix('\u{2212}'))
        {
            negate = !negate;
            rest = stripped;
        } else {
            rest = t;
            break;
        }
    }

    let cleaned: String = rest.chars().filter(|&c| c != ',').collect();
    if cleaned.is_empty() {
        return None;
    }
    let value: f64 = cleaned.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    Some(ParsedNumber { value: if negate { -value } else { value }, percent })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedNumber {
    pub value: f64,
    pub percent: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn words_and_punctuation_split() {
        assert_eq!(surfaces("total sales, 2019"), vec!["total", "sales", ",", "2019"]);
        assert_eq!(surfaces("What was the change?"), vec!["What", "was", "the", "change", "?"]);
    }

    #[test]
    fn numeric_literals_stay_whole() {
        assert_eq!(surfaces("0.53"), vec!["0.53"]);
        assert_eq!(surfaces("$1,496.5 million"), vec!["$1,496.5", "million"]);
        assert_eq!(surfaces("(1.2)"), vec!["(1.2)"]);
        assert_eq!(surfaces("-8.3"), vec!["-8.3"]);
        assert_eq!(surfaces("0.2%"), vec!["0.2%"]);
        assert_eq!(surfaces("(0.9%)"), vec!["(0.9%)"]);
    }

    #[test]
    fn year_ranges_do_not_form_negatives() {
        assert_eq!(surfaces("2019-2020"), vec!["2019", "-", "2020"]);
        assert_eq!(surfaces("sales-5.2"), vec!["sales", "-", "5.2"]);
    }

    #[test]
    fn stray_currency_and_parens_fall_back_to_punctuation() {
        assert_eq!(surfaces("$ 1,496.5"), vec!["$", "1,496.5"]);
        assert_eq!(surfaces("(see note 3)"), vec!["(", "see", "note", "3", ")"]);
        assert_eq!(surfaces("(1.2"), vec!["(", "1.2"]);
    }

    #[test]
    fn offsets_recover_surfaces() {
        let text = "Deferred tax: $ (12.4) vs 1,496.5";
        for t in tokenize(text) {
            assert_eq!(&text[t.start..t.end], t.surface);
        }
    }

    #[test]
    fn trailing_dot_is_punctuation() {
        assert_eq!(surfaces("grew 5."), vec!["grew", "5", "."]);
        assert_eq!(surfaces("1,496."), vec!["1,496", "."]);
    }

    #[test]
    fn parse_number_normalizes() {
        assert_eq!(parse_number("1,496.5"), Some(ParsedNumber { value: 1496.5, percent: false }));
        assert_eq!(parse_number("(1.2)"), Some(ParsedNumber { value: -1.2, percent: false }));
        assert_eq!(parse_number("$8,116"), Some(ParsedNumber { value: 8116.0, percent: false }));
        assert_eq!(parse_number("0.2%"), Some(ParsedNumber { value: 0.2, percent: true }));
        assert_eq!(parse_number("(0.9%)"), Some(ParsedNumber { value: -0.9, percent: true }));
        assert_eq!(parse_number("$(3.5)"), Some(ParsedNumber { value: -3.5, percent: false }));
        assert_eq!(parse_number("-8.3"), Some(ParsedNumber { value: -8.3, percent: false }));
        assert_eq!(parse_number("2019"), Some(ParsedNumber { value: 2019.0, percent: false }));
    }

    #[test]
    fn parse_number_rejects_non_numbers() {
        for s in ["", "n/a", "-", "Revenue", "1,496.5 million", "..", "()", "%"] {
            assert_eq!(parse_number(s), None, "{s:?} should not parse");
        }
    }

    #[test]
    fn every_numeric_token_parses() {
        let text = "Revenue was $1,496.5 in 2019, down (0.9%) or -8.3 vs 1,202.9.";
        for t in tokenize(text) {
            if t.surface.chars().any(|c| c.is_ascii_digit()) {
                assert!(parse_number(&t.surface).is_some(), "token {:?}", t.surface);
            }
        }
    }
}
