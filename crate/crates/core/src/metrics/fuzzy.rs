//! Fuzzy substring similarity between two lines.
//!
//! Both strings are whitespace-normalized. The shorter one is slid over every
//! equal-length character window of the longer one and the best
//! `1 - edit_distance / len` is returned. Window distances use Myers'
//! bit-parallel edit distance (Hyyrö's block form), so the cost is
//! `O(windows * ceil(len / 64) * len)`.

use std::collections::HashMap;

/// Trims and collapses internal whitespace runs to a single space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Similarity in `[0, 1]`. Symmetric; `1.0` when the shorter normalized string
/// is a substring of the longer one.
pub fn fuzzy_similarity(a: &str, b: &str) -> f64 {
    best_window_similarity(a, b, None)
}

/// `fuzzy_similarity(a, b) > threshold`, stopping at the first window that
/// clears the threshold.
pub fn similarity_exceeds(a: &str, b: &str, threshold: f64) -> bool {
    best_window_similarity(a, b, Some(threshold)) > threshold
}

fn best_window_similarity(a: &str, b: &str, stop_above: Option<f64>) -> f64 {
    let a = normalize_whitespace(a);
    let b = normalize_whitespace(b);
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };

    if short.is_empty() {
        return if long.is_empty() { 1.0 } else { 0.0 };
    }
    if long.windows(short.len()).any(|w| w == short.as_slice()) {
        return 1.0;
    }

    let pattern = Pattern::new(&short);
    let m = short.len() as f64;
    let mut best = 0.0f64;
    for window in long.windows(short.len()) {
        let dist = pattern.distance(window);
        let sim = 1.0 - dist as f64 / m;
        if sim > best {
            best = sim;
            if stop_above.is_some_and(|t| best > t) {
                break;
            }
        }
    }
    best
}

/// Precomputed match bitmasks for a fixed pattern.
struct Pattern {
    len: usize,
    blocks: usize,
    peq: HashMap<char, Vec<u64>>,
    zero: Vec<u64>,
}

impl Pattern {
    fn new(chars: &[char]) -> Self {
        let blocks = chars.len().div_ceil(64);
        let mut peq: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, &c) in chars.iter().enumerate() {
            peq.entry(c).or_insert_with(|| vec![0; blocks])[i / 64] |= 1u64 << (i % 64);
        }
        Self {
            len: chars.len(),
            blocks,
            peq,
            zero: vec![0; blocks],
        }
    }

    /// Global Levenshtein distance between the pattern and `text`.
    fn distance(&self, text: &[char]) -> usize {
        let mut pv = vec![u64::MAX; self.blocks];
        let mut mv = vec![0u64; self.blocks];
        let last_bit = 1u64 << ((self.len - 1) % 64);
        let mut score = self.len as isize;

        for c in text {
            let eq = self.peq.get(c).unwrap_or(&self.zero);
            // Row 0 of the DP grows by one per column.
            let mut carry: i8 = 1;
            for b in 0..self.blocks {
                let high = if b + 1 == self.blocks { last_bit } else { 1u64 << 63 };
                let (p, m, h) = advance_block(pv[b], mv[b], eq[b], carry, high);
                pv[b] = p;
                mv[b] = m;
                carry = h;
            }
            score += carry as isize;
        }
        score as usize
    }
}

/// One column step for a 64-row block; returns the new vertical deltas and the
/// horizontal delta leaving the block's last row.
fn advance_block(pv: u64, mv: u64, eq: u64, hin: i8, high: u64) -> (u64, u64, i8) {
    let mut eq = eq;
    let xv = eq | mv;
    if hin < 0 {
        eq |= 1;
    }
    let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
    let mut ph = mv | !(xh | pv);
    let mut mh = pv & xh;

    let hout = if ph & high != 0 {
        1
    } else if mh & high != 0 {
        -1
    } else {
        0
    };

    ph <<= 1;
    mh <<= 1;
    if hin < 0 {
        mh |= 1;
    } else if hin > 0 {
        ph |= 1;
    }

    let pv = mh | !(xv | ph);
    let mv = ph & xv;
    (pv, mv, hout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent two-row DP; used only to check the bit-parallel path.
    fn dp_distance(a: &[char], b: &[char]) -> usize {
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for (i, ca) in a.iter().enumerate() {
            let mut cur = vec![i + 1];
            for (j, cb) in b.iter().enumerate() {
                let sub = prev[j] + usize::from(ca != cb);
                cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
            }
            prev = cur;
        }
        prev[b.len()]
    }

    #[test]
    fn identity_and_substring() {
        assert_eq!(fuzzy_similarity("abc", "abc"), 1.0);
        assert_eq!(fuzzy_similarity("abc", "xx abc yy"), 1.0);
        assert_eq!(fuzzy_similarity("", ""), 1.0);
        assert_eq!(fuzzy_similarity("", "x"), 0.0);
        assert_eq!(fuzzy_similarity("  a   b ", "a b"), 1.0);
    }

    #[test]
    fn exit_code_pair_frozen() {
        // Exhaustive window oracle: both 13-char windows need two edits.
        let v = fuzzy_similarity("Exit Code 137", "Exit Code: 137");
        assert!((v - 11.0 / 13.0).abs() < 1e-12, "{v}");
        assert!(similarity_exceeds("Exit Code 137", "Exit Code: 137", 0.5));
    }

    #[test]
    fn long_patterns_cross_block_boundaries() {
        let a: String = (0..150).map(|i| (b'a' + (i % 7) as u8) as char).collect();
        let mut b: Vec<char> = a.chars().collect();
        b[10] = 'z';
        b[100] = 'z';
        b.insert(70, 'q');
        let b: String = b.into_iter().collect();
        let ac: Vec<char> = a.chars().collect();
        let bc: Vec<char> = b.chars().collect();
        assert_eq!(Pattern::new(&ac).distance(&bc), dp_distance(&ac, &bc));
    }

    proptest! {
        #[test]
        fn myers_matches_dp(a in "[abcd]{1,140}", b in "[abcd]{0,140}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            prop_assert_eq!(Pattern::new(&ac).distance(&bc), dp_distance(&ac, &bc));
        }

        #[test]
        fn symmetric_and_bounded(a in "[ab ]{0,20}", b in "[ab ]{0,20}") {
            let x = fuzzy_similarity(&a, &b);
            prop_assert_eq!(x, fuzzy_similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert_eq!(fuzzy_similarity(&a, &a), 1.0);
            prop_assert_eq!(similarity_exceeds(&a, &b, 0.5), x > 0.5);
        }
    }
}
