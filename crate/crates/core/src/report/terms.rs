use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

const STOP_WORDS: &str = include_str!("stopwords.txt");

fn stop_words() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOP_WORDS.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

/// Lowercased, punctuation-stripped tokens of an annotation, without the
/// leading "Design Thought" title and without stop words. Punctuation
/// inside a word splits it ("elite-based" gives "elite" and "based").
pub fn tokenize(annotation: &str) -> Vec<String> {
    let lower = annotation.to_lowercase();
    let body = lower.trim_start();
    let body = body.strip_prefix("design thought").unwrap_or(body);
    body.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && !stop_words().contains(w))
        .map(str::to_string)
        .collect()
}

pub fn count_terms<'a>(annotations: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for a in annotations {
        for t in tokenize(a) {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    counts
}

/// Counts ordered by descending frequency, then alphabetically.
pub fn ranked(counts: &BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<_> = counts.iter().map(|(k, &c)| (k.clone(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}
