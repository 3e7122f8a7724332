//! Lempel-Ziv (1976) phrase count and its Kaspar-Schuster normalization.

use super::RandomnessError;
use crate::series::ThresholdKind;

/// Below this length the normalized complexity is flagged unreliable.
pub const MIN_RELIABLE_LENGTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityResult {
    pub lz_phrase_count: usize,
    /// `c(n) log2(n) / n`, not clamped at 1.
    pub normalized: f64,
    pub threshold_kind: ThresholdKind,
    pub reliable: bool,
}

/// Suffix automaton over a binary string, keeping for every state the end
/// position of the first occurrence of its strings.
struct SuffixAutomaton {
    next: Vec<[u32; 2]>,
    link: Vec<u32>,
    len: Vec<u32>,
    first_end: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl SuffixAutomaton {
    fn build(bits: &[u8]) -> Self {
        let cap = 2 * bits.len() + 1;
        let mut sa = Self {
            next: Vec::with_capacity(cap),
            link: Vec::with_capacity(cap),
            len: Vec::with_capacity(cap),
            first_end: Vec::with_capacity(cap),
        };
        sa.push([NONE; 2], NONE, 0, 0);
        let mut last = 0u32;
        for (pos, &b) in bits.iter().enumerate() {
            let c = b as usize;
            let cur = sa.push([NONE; 2], NONE, sa.len[last as usize] + 1, pos as u32);
            let mut p = last;
            while p != NONE && sa.next[p as usize][c] == NONE {
                sa.next[p as usize][c] = cur;
                p = sa.link[p as usize];
            }
            if p == NONE {
                sa.link[cur as usize] = 0;
            } else {
                let q = sa.next[p as usize][c];
                if sa.len[p as usize] + 1 == sa.len[q as usize] {
                    sa.link[cur as usize] = q;
                } else {
                    let clone = sa.push(
                        sa.next[q as usize],
                        sa.link[q as usize],
                        sa.len[p as usize] + 1,
                        sa.first_end[q as usize],
                    );
                    while p != NONE && sa.next[p as usize][c] == q {
                        sa.next[p as usize][c] = clone;
                        p = sa.link[p as usize];
                    }
                    sa.link[q as usize] = clone;
                    sa.link[cur as usize] = clone;
                }
            }
            last = cur;
        }
        sa
    }

    fn push(&mut self, next: [u32; 2], link: u32, len: u32, first_end: u32) -> u32 {
        self.next.push(next);
        self.link.push(link);
        self.len.push(len);
        self.first_end.push(first_end);
        (self.next.len() - 1) as u32
    }
}

/// Number of phrases in the exhaustive-history LZ76 parsing.
///
/// Each phrase is the longest prefix of the remaining input that already
/// starts somewhere earlier (overlap allowed), extended by one symbol.
/// Runs in linear time.
pub fn lz76_phrase_count(bits: &[u8]) -> Result<usize, RandomnessError> {
    if bits.is_empty() {
        return Err(RandomnessError::TooShort { needed: 1, got: 0 });
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(RandomnessError::NotBinary);
    }
    if bits.len() >= NONE as usize / 2 {
        return Err(RandomnessError::TooLong(bits.len()));
    }
    let sa = SuffixAutomaton::build(bits);
    let n = bits.len();
    let mut phrases = 0;
    let mut l = 0;
    while l < n {
        // extend the match while the earliest occurrence starts before l
        let mut state = 0usize;
        let mut k = 0;
        while l + k < n {
            let s = sa.next[state][bits[l + k] as usize] as usize;
            let start = sa.first_end[s] as usize + 1 - (k + 1);
            if start >= l {
                break;
            }
            state = s;
            k += 1;
        }
        phrases += 1;
        l += (k + 1).min(n - l);
    }
    Ok(phrases)
}

/// Kaspar-Schuster normalized complexity `K = c(n) log2(n) / n`.
pub fn normalized_complexity(bits: &[u8], threshold_kind: ThresholdKind) -> Result<ComplexityResult, RandomnessError> {
    let c = lz76_phrase_count(bits)?;
    let n = bits.len() as f64;
    let normalized = if bits.len() == 1 {
        c as f64
    } else {
        c as f64 * n.log2() / n
    };
    Ok(ComplexityResult {
        lz_phrase_count: c,
        normalized,
        threshold_kind,
        reliable: bits.len() >= MIN_RELIABLE_LENGTH,
    })
}
