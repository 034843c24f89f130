//! Answer-string normalization shared by the executor, the supervision
//! search, and the metrics. Follows the usual reading-comprehension recipe:
//! lowercase, drop punctuation, drop articles, collapse whitespace.

/// Lowercase `s`, delete punctuation, remove the articles `a`/`an`/`the`,
/// and collapse runs of whitespace to single spaces.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let depunct: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = depunct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect();
    words.join(" ")
}

/// Token bag used for F1 overlap: the whitespace split of the normalized form.
pub fn token_bag(s: &str) -> Vec<String> {
    normalize_answer(s)
        .split_whitespace()
        .map(|w| w.to_string())
        .collect()
}

/// F1 overlap between the token bags of two strings, counting duplicates.
/// Two empty bags score 1.0; one empty bag scores 0.0.
pub fn bag_f1(a: &str, b: &str) -> f64 {
    let ba = token_bag(a);
    let bb = token_bag(b);
    if ba.is_empty() && bb.is_empty() {
        return 1.0;
    }
    if ba.is_empty() || bb.is_empty() {
        return 0.0;
    }
    let mut counts = std::collections::HashMap::new();
    for w in &ba {
        *counts.entry(w.as_str()).or_insert(0usize) += 1;
    }
    let mut overlap = 0usize;
    for w in &bb {
        if let Some(c) = counts.get_mut(w.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / bb.len() as f64;
    let r = overlap as f64 / ba.len() as f64;
    2.0 * p * r / (p + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_strips_case_punctuation_and_articles() {
        assert_eq!(normalize_answer("The Net Sales,"), "net sales");
        assert_eq!(normalize_answer("  an  answer "), "answer");
        assert_eq!(normalize_answer("state-of-the-art"), "state of art");
        assert_eq!(normalize_answer("$1,496.5"), "1 496 5");
    }

    #[test]
    fn bag_f1_matches_hand_computation() {
        // "net sales" vs "total net sales": overlap 2, p=2/3, r=1 -> 0.8
        let f1 = bag_f1("net sales", "total net sales");
        assert!((f1 - 0.8).abs() < 1e-12);
        assert_eq!(bag_f1("alpha", "beta"), 0.0);
        assert_eq!(bag_f1("same", "same"), 1.0);
        assert_eq!(bag_f1("", ""), 1.0);
        assert_eq!(bag_f1("x", ""), 0.0);
    }

    #[test]
    fn bag_f1_counts_duplicates() {
        // "b b" vs "b": overlap 1, p=1, r=1/2 -> 2/3
        let f1 = bag_f1("b b", "b");
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }
}
