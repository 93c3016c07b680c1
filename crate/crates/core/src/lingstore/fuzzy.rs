//! Edit-distance scoring and the trigram prefilter.
//!
//! Strings are padded with two start and two end sentinels, giving
//! `len + 2` trigrams. One edit touches at most three trigrams, so two
//! strings within distance `d` share at least `max(la, lb) + 2 - 3d`
//! trigrams (counted as a multiset). Candidates failing that bound, or the
//! length bound `|la - lb| <= d`, cannot reach the threshold.

use std::collections::{BTreeMap, HashMap};

use super::RecordId;

const PAD_START: u64 = 0x11_0000;
const PAD_END: u64 = 0x11_0001;

fn trigrams(chars: &[char]) -> HashMap<u64, u32> {
    let mut padded = Vec::with_capacity(chars.len() + 4);
    padded.extend([PAD_START, PAD_START]);
    padded.extend(chars.iter().map(|c| *c as u64));
    padded.extend([PAD_END, PAD_END]);
    let mut out = HashMap::new();
    for w in padded.windows(3) {
        *out.entry((w[0] << 42) | (w[1] << 21) | w[2]).or_insert(0) += 1;
    }
    out
}

/// Character-level Levenshtein distance, two-row dynamic programme.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.len() < b.len() {
        return levenshtein(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub(crate) fn score(a: &[char], b: &[char]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / m as f64
}

/// Largest distance that still scores at least `threshold` at length `m`.
fn max_distance(threshold: f64, m: usize) -> usize {
    ((1.0 - threshold) * m as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FuzzyIndex {
    postings: HashMap<u64, Vec<(RecordId, u32)>>,
    by_length: BTreeMap<usize, Vec<RecordId>>,
    lengths: HashMap<RecordId, usize>,
}

impl FuzzyIndex {
    pub fn insert(&mut self, id: RecordId, normalized: &str) {
        let chars: Vec<char> = normalized.chars().collect();
        for (gram, n) in trigrams(&chars) {
            self.postings.entry(gram).or_default().push((id, n));
        }
        self.by_length.entry(chars.len()).or_default().push(id);
        self.lengths.insert(id, chars.len());
    }

    /// Superset of the records that can score at least `threshold`.
    pub fn candidates(&self, query: &[char], threshold: f64) -> Vec<RecordId> {
        let lq = query.len();
        let admissible = |ls: usize| {
            let m = lq.max(ls);
            m > 0 && lq.abs_diff(ls) <= max_distance(threshold, m)
        };
        let needed = |ls: usize| {
            let m = lq.max(ls);
            (m + 2) as i64 - 3 * max_distance(threshold, m) as i64
        };

        let mut overlap: HashMap<RecordId, u32> = HashMap::new();
        for (gram, qn) in trigrams(query) {
            if let Some(list) = self.postings.get(&gram) {
                for (id, n) in list {
                    *overlap.entry(*id).or_insert(0) += qn.min(*n);
                }
            }
        }
        let mut out: Vec<RecordId> = overlap
            .into_iter()
            .filter(|(id, shared)| {
                let ls = self.lengths[id];
                admissible(ls) && i64::from(*shared) >= needed(ls)
            })
            .map(|(id, _)| id)
            .collect();

        // Lengths where the bound allows sharing nothing: those records may
        // be missing from the postings walk above.
        let lo = (threshold * lq as f64).floor() as usize;
        let hi = if threshold > 0.0 { (lq as f64 / threshold).ceil() as usize + 1 } else { usize::MAX };
        for (&ls, ids) in self.by_length.range(lo.saturating_sub(1)..=hi) {
            if admissible(ls) && needed(ls) <= 0 {
                out.extend(ids.iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
