//! Return words to the cylinder J = [ab]: enumeration, accident detection,
//! type classification and the block decomposition of u.w_J.
//!
//! All three return-word conditions are evaluated on the finite word u.w_J;
//! occurrences of w_J in u.x before position |u| are determined by u.w_J, so
//! the choice of x in J never matters.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::potential::{delta_profile, PotentialParams};
use crate::sft::{CylinderSpec, SftSpec, Word};

#[derive(Debug, Error, PartialEq)]
pub enum InducedError {
    #[error("enumeration budget of {0} return words exceeded")]
    BudgetExceeded(u64),
    #[error("{0} is not a return word to the cylinder")]
    NotAReturnWord(String),
    #[error("decomposition of {word} does not reproduce u.w_J: {detail}")]
    DecompositionMismatch { word: String, detail: String },
    #[error("enumerated count r_{n}={enumerated} disagrees with transfer-matrix count {transfer}")]
    TransferMismatch {
        n: usize,
        enumerated: u128,
        transfer: u128,
    },
}

/// Default cap on the number of enumerated return words.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Type of a return word by the number of maximal excursion runs of its
/// depth profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordType {
    T1,
    T2,
    T3,
}

/// One block of the decomposition of u.w_J.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    /// A two-letter junction block outside L(X) (the leading pair, an
    /// accident pair, or the closing re-entry pair from w_J).
    Break(Vec<u8>),
    /// A word between junctions; lies in L(X) when its symbols are essential.
    Link(Vec<u8>),
    /// Junction blocks sharing letters (short returns such as u = a for
    /// J = [aa]), merged into one block.
    Overlap(Vec<u8>),
}

impl Segment {
    pub fn letters(&self) -> &[u8] {
        match self {
            Segment::Break(v) | Segment::Link(v) | Segment::Overlap(v) => v,
        }
    }
}

/// A return word with its depth profile along u.w_J, its accident times and
/// the block decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnWord {
    word: Word,
    delta_profile: Vec<usize>,
    accidents: Vec<usize>,
    segments: Vec<Segment>,
}

impl ReturnWord {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn delta_profile(&self) -> &[usize] {
        &self.delta_profile
    }

    pub fn accidents(&self) -> &[usize] {
        &self.accidents
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Count of maximal runs with depth >= threshold: 0 -> T1, 1 -> T2,
    /// more -> T3.
    pub fn word_type(&self, params: &PotentialParams) -> WordType {
        classify_profile(&self.delta_profile, params.threshold())
    }
}

pub fn classify(rw: &ReturnWord, params: &PotentialParams) -> WordType {
    rw.word_type(params)
}

fn classify_profile(profile: &[usize], threshold: usize) -> WordType {
    let mut runs = 0;
    let mut inside = false;
    for &d in profile {
        if d >= threshold {
            if !inside {
                runs += 1;
                inside = true;
            }
        } else {
            inside = false;
        }
    }
    match runs {
        0 => WordType::T1,
        1 => WordType::T2,
        _ => WordType::T3,
    }
}

/// The three return-word conditions, checked on u.w_J: w is a prefix of uw,
/// w is not an inner factor of uw, and the first re-entry happens at |u|.
pub fn is_return_word(spec: &SftSpec, cylinder: &CylinderSpec, u: &[u8]) -> bool {
    let _ = spec;
    if u.is_empty() {
        return false;
    }
    let w = cylinder.word();
    let mut y = Vec::with_capacity(u.len() + 2);
    y.extend_from_slice(u);
    y.extend_from_slice(&w);
    // (1) w is a prefix of uw
    if y[0] != w[0] || y[1] != w[1] {
        return false;
    }
    // (2)+(3): no occurrence of w at positions 1..|u|-1, so the first
    // re-entry is at |u| (the suffix occurrence is there by construction)
    for p in 1..u.len() {
        if y[p] == w[0] && y[p + 1] == w[1] {
            return false;
        }
    }
    true
}

/// Accident times: interior indices where the depth fails to drop by one.
pub fn accidents(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    u: &[u8],
) -> Result<Vec<usize>, InducedError> {
    if !is_return_word(spec, cylinder, u) {
        return Err(InducedError::NotAReturnWord(Word::from(u).to_string()));
    }
    Ok(accidents_of_profile(&delta_profile(spec, cylinder, u)))
}

fn accidents_of_profile(profile: &[usize]) -> Vec<usize> {
    (1..profile.len())
        .filter(|&i| profile[i] + 1 > profile[i - 1])
        .collect()
}

/// Decomposes u.w_J into junction pairs and the free words between them.
///
/// Junction pairs sit at the leading prefix, at each accident time, and at
/// the closing re-entry supplied by w_J. Pairs sharing letters are merged
/// into an overlap block. The concatenated segments reproduce u.w_J exactly.
fn decompose_profile(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    u: &[u8],
    profile: &[usize],
) -> Result<Vec<Segment>, InducedError> {
    let w = cylinder.word();
    let mut y = Vec::with_capacity(u.len() + 2);
    y.extend_from_slice(u);
    y.extend_from_slice(&w);
    let n = u.len();

    // pair start positions: leading (0), accident pairs (i-1), closing (n)
    let mut starts = vec![0usize];
    for &i in &accidents_of_profile(profile) {
        if i >= 1 && !starts.contains(&(i - 1)) {
            starts.push(i - 1);
        }
    }
    if !starts.contains(&n) {
        starts.push(n);
    }
    starts.sort_unstable();

    // merge pairs sharing letters into overlap groups [start, end)
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &s in &starts {
        match groups.last_mut() {
            Some((_, end)) if s < *end => *end = s + 2,
            _ => groups.push((s, s + 2)),
        }
    }

    let mut segments = Vec::new();
    let mut cursor = 0;
    for &(s, e) in &groups {
        if cursor < s {
            segments.push(Segment::Link(y[cursor..s].to_vec()));
        }
        let block = y[s..e].to_vec();
        if e - s == 2 {
            segments.push(Segment::Break(block));
        } else {
            segments.push(Segment::Overlap(block));
        }
        cursor = e;
    }
    debug_assert_eq!(cursor, y.len());

    // internal consistency: concatenation identity and junction properties
    let concat: Vec<u8> = segments.iter().flat_map(|s| s.letters().to_vec()).collect();
    if concat != y {
        return Err(InducedError::DecompositionMismatch {
            word: Word::from(u).to_string(),
            detail: "concatenation does not reproduce u.w_J".into(),
        });
    }
    for seg in &segments {
        if let Segment::Break(p) = seg {
            if spec.is_in_language(p) {
                return Err(InducedError::DecompositionMismatch {
                    word: Word::from(u).to_string(),
                    detail: format!("junction block {:?} lies in L(X)", p),
                });
            }
        }
    }
    // between simple junctions, the bridging word beta w alpha must lie in
    // L(X); only meaningful when every involved symbol is essential
    for g in groups.windows(2) {
        let (s0, e0) = g[0];
        let (s1, _) = g[1];
        if e0 - s0 == 2 && s1 >= e0 {
            let bridge = &y[s0 + 1..=s1];
            if bridge.iter().all(|&c| spec.is_essential(c)) && !spec.is_in_language(bridge) {
                return Err(InducedError::DecompositionMismatch {
                    word: Word::from(u).to_string(),
                    detail: "bridging word between junctions leaves L(X)".into(),
                });
            }
        }
    }
    Ok(segments)
}

pub fn decompose(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    u: &[u8],
) -> Result<Vec<Segment>, InducedError> {
    if !is_return_word(spec, cylinder, u) {
        return Err(InducedError::NotAReturnWord(Word::from(u).to_string()));
    }
    decompose_profile(spec, cylinder, u, &delta_profile(spec, cylinder, u))
}

/// Streaming enumeration of return words in lexicographic order.
///
/// DFS over word extensions; a prefix is pruned as soon as it creates an
/// interior occurrence of w_J, so the walk only visits viable candidates.
/// The callback receives the word and its exact depth profile.
pub(crate) fn for_each_return_word<F: FnMut(&[u8], &[usize])>(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    max_len: usize,
    budget: u64,
    mut f: F,
) -> Result<u64, InducedError> {
    let m = spec.alphabet_size() as u8;
    let (alpha, beta) = (cylinder.alpha(), cylinder.beta());
    let mut emitted: u64 = 0;

    // length-1 candidates first (lexicographically shortest)
    for s in 0..m {
        if is_return_word(spec, cylinder, &[s]) {
            emitted += 1;
            if emitted > budget {
                return Err(InducedError::BudgetExceeded(budget));
            }
            f(&[s], &delta_profile(spec, cylinder, &[s]));
        }
    }
    if max_len < 2 {
        return Ok(emitted);
    }

    // all longer return words start with the cylinder word itself
    let mut u = vec![alpha, beta];
    let mut emit = |u: &[u8], emitted: &mut u64| -> Result<(), InducedError> {
        // boundary occurrence at |u|-1 only matters when alpha == beta
        if !(alpha == beta && *u.last().unwrap() == alpha) {
            *emitted += 1;
            if *emitted > budget {
                return Err(InducedError::BudgetExceeded(budget));
            }
            debug_assert!(is_return_word(spec, cylinder, u));
            f(u, &delta_profile(spec, cylinder, u));
        }
        Ok(())
    };
    emit(&u, &mut emitted)?;

    // iterative DFS: stack of next-symbol candidates per position
    let mut next: Vec<u8> = vec![0];
    while let Some(&s) = next.last() {
        if s >= m {
            next.pop();
            u.pop();
            if let Some(top) = next.last_mut() {
                *top += 1;
            }
            continue;
        }
        // interior occurrence of w_J at position |u|-1 would be an early return
        if u.last() == Some(&alpha) && s == beta {
            *next.last_mut().unwrap() += 1;
            continue;
        }
        u.push(s);
        emit(&u, &mut emitted)?;
        if u.len() < max_len {
            next.push(0);
        } else {
            u.pop();
            *next.last_mut().unwrap() += 1;
        }
    }
    Ok(emitted)
}

/// All return words with |u| <= max_len, fully annotated, in lexicographic
/// order.
pub fn enumerate_return_words(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    max_len: usize,
    budget: u64,
) -> Result<Vec<ReturnWord>, InducedError> {
    let mut out = Vec::new();
    let mut defect = None;
    for_each_return_word(spec, cylinder, max_len, budget, |u, profile| {
        if defect.is_some() {
            return;
        }
        match decompose_profile(spec, cylinder, u, profile) {
            Ok(segments) => out.push(ReturnWord {
                word: Word::from(u),
                delta_profile: profile.to_vec(),
                accidents: accidents_of_profile(profile),
                segments,
            }),
            Err(e) => defect = Some(e),
        }
    })?;
    match defect {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Return-word counts by length: total r_n, type-1 c_n, and d_n for lengths
/// at or above the excursion threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplicities {
    pub r: BTreeMap<usize, u128>,
    pub c: BTreeMap<usize, u128>,
    pub d: BTreeMap<usize, u128>,
    /// Transfer-matrix counts (T^{n-1})_{beta,alpha}, present in the
    /// single-forbidden-block regime where they must equal r_n exactly.
    pub transfer: Option<BTreeMap<usize, u128>>,
}

/// Paths from beta to alpha with n vertices: (T^{n-1})_{beta,alpha} over the
/// essential subgraph.
pub fn transfer_count(spec: &SftSpec, cylinder: &CylinderSpec, n: usize) -> u128 {
    let verts = spec.essential_vertices();
    let d = verts.len();
    let idx = |sym: u8| verts.iter().position(|&v| v == sym as usize);
    let (b, a) = match (idx(cylinder.beta()), idx(cylinder.alpha())) {
        (Some(b), Some(a)) => (b, a),
        _ => return 0,
    };
    let mut v = vec![0u128; d];
    v[a] = 1;
    for _ in 1..n {
        let mut nextv = vec![0u128; d];
        for (i, &vi) in verts.iter().enumerate() {
            for (j, &vj) in verts.iter().enumerate() {
                if spec.transition()[vi][vj] == 1 {
                    nextv[i] += v[j];
                }
            }
        }
        v = nextv;
    }
    v[b]
}

pub fn multiplicities(
    spec: &SftSpec,
    cylinder: &CylinderSpec,
    params: &PotentialParams,
    max_len: usize,
    budget: u64,
) -> Result<Multiplicities, InducedError> {
    let threshold = params.threshold();
    let mut r: BTreeMap<usize, u128> = (1..=max_len).map(|n| (n, 0)).collect();
    let mut c = BTreeMap::new();
    let mut d = BTreeMap::new();
    for_each_return_word(spec, cylinder, max_len, budget, |u, profile| {
        let n = u.len();
        *r.get_mut(&n).unwrap() += 1;
        if classify_profile(profile, threshold) == WordType::T1 {
            *c.entry(n).or_insert(0) += 1;
        }
        if n >= threshold {
            *d.entry(n).or_insert(0) += 1;
        }
    })?;
    let transfer = if spec.forbidden_block_count() == 1 {
        let mut t = BTreeMap::new();
        for n in 1..=max_len {
            let count = transfer_count(spec, cylinder, n);
            if count != r[&n] {
                return Err(InducedError::TransferMismatch {
                    n,
                    enumerated: r[&n],
                    transfer: count,
                });
            }
            t.insert(n, count);
        }
        Some(t)
    } else {
        None
    };
    Ok(Multiplicities { r, c, d, transfer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::SftSpec;

    fn golden() -> (SftSpec, CylinderSpec) {
        let spec = SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap();
        let cyl = CylinderSpec::new(&spec, &Word(vec![1, 1])).unwrap();
        (spec, cyl)
    }

    fn three_symbol() -> (SftSpec, CylinderSpec) {
        let spec =
            SftSpec::from_forbidden_blocks(3, &[Word(vec![1, 1]), Word(vec![2, 2])]).unwrap();
        let cyl = CylinderSpec::new(&spec, &Word(vec![1, 1])).unwrap();
        (spec, cyl)
    }

    #[test]
    fn return_word_conditions() {
        let (spec, cyl) = golden();
        assert!(is_return_word(&spec, &cyl, &[1]));
        assert!(!is_return_word(&spec, &cyl, &[1, 1]));
        assert!(!is_return_word(&spec, &cyl, &[1, 0]));
        assert!(is_return_word(&spec, &cyl, &[1, 1, 0]));
        assert!(!is_return_word(&spec, &cyl, &[]));
    }

    #[test]
    fn enumeration_counts_golden_mean() {
        let (spec, cyl) = golden();
        let words = enumerate_return_words(&spec, &cyl, 5, DEFAULT_BUDGET).unwrap();
        let mut by_len = BTreeMap::new();
        for w in &words {
            *by_len.entry(w.len()).or_insert(0u32) += 1;
        }
        assert_eq!(by_len.get(&1), Some(&1));
        assert_eq!(by_len.get(&2), None);
        assert_eq!(by_len.get(&3), Some(&1));
        assert_eq!(by_len.get(&4), Some(&1));
        assert_eq!(by_len.get(&5), Some(&2));
        let listed: Vec<String> = words.iter().map(|w| w.word().to_string()).collect();
        assert_eq!(listed, vec!["1", "110", "1100", "11000", "11010"]);

        let words6 = enumerate_return_words(&spec, &cyl, 6, DEFAULT_BUDGET).unwrap();
        let r6 = words6.iter().filter(|w| w.len() == 6).count();
        assert_eq!(r6, 3);
    }

    #[test]
    fn enumeration_matches_bruteforce() {
        let (spec, cyl) = golden();
        let words = enumerate_return_words(&spec, &cyl, 8, DEFAULT_BUDGET).unwrap();
        let mut brute = Vec::new();
        for n in 1..=8usize {
            for bits in 0..(1u32 << n) {
                let u: Vec<u8> = (0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as u8).collect();
                if is_return_word(&spec, &cyl, &u) {
                    brute.push(Word(u));
                }
            }
        }
        let mut enumerated: Vec<Word> = words.iter().map(|w| w.word().clone()).collect();
        enumerated.sort();
        brute.sort();
        assert_eq!(enumerated, brute);
    }

    #[test]
    fn budget_is_enforced() {
        let (spec, cyl) = golden();
        assert_eq!(
            enumerate_return_words(&spec, &cyl, 12, 3).unwrap_err(),
            InducedError::BudgetExceeded(3)
        );
    }

    #[test]
    fn accident_times() {
        let (spec, cyl) = golden();
        assert_eq!(accidents(&spec, &cyl, &[1, 1, 0]).unwrap(), vec![1]);
        assert_eq!(accidents(&spec, &cyl, &[1]).unwrap(), Vec::<usize>::new());
        let (spec3, cyl3) = three_symbol();
        let u = [1, 1, 0, 0, 0, 2, 2, 0, 0, 0];
        assert_eq!(
            delta_profile(&spec3, &cyl3, &u),
            vec![1, 5, 4, 3, 2, 1, 5, 4, 3, 2]
        );
        assert_eq!(accidents(&spec3, &cyl3, &u).unwrap(), vec![1, 6]);
    }

    #[test]
    fn classification() {
        let (spec, cyl) = golden();
        let params = PotentialParams::new(&spec, 1.0, 4).unwrap();
        let words = enumerate_return_words(&spec, &cyl, 10, DEFAULT_BUDGET).unwrap();
        for w in &words {
            let expect = if w.len() < 4 { WordType::T1 } else { WordType::T2 };
            assert_eq!(w.word_type(&params), expect, "u={}", w.word());
        }
        let (spec3, cyl3) = three_symbol();
        let params3 = PotentialParams::new(&spec3, 1.0, 3).unwrap();
        let u = [1, 1, 0, 0, 0, 2, 2, 0, 0, 0];
        let profile = delta_profile(&spec3, &cyl3, &u);
        assert_eq!(classify_profile(&profile, params3.threshold()), WordType::T3);
    }

    #[test]
    fn decomposition_examples() {
        let (spec, cyl) = golden();
        let segs = decompose(&spec, &cyl, &[1, 1, 0]).unwrap();
        assert_eq!(
            segs,
            vec![
                Segment::Break(vec![1, 1]),
                Segment::Link(vec![0]),
                Segment::Break(vec![1, 1]),
            ]
        );

        let (spec3, cyl3) = three_symbol();
        let segs3 = decompose(&spec3, &cyl3, &[1, 1, 0, 0, 0, 2, 2, 0, 0, 0]).unwrap();
        assert_eq!(
            segs3,
            vec![
                Segment::Break(vec![1, 1]),
                Segment::Link(vec![0, 0, 0]),
                Segment::Break(vec![2, 2]),
                Segment::Link(vec![0, 0, 0]),
                Segment::Break(vec![1, 1]),
            ]
        );
    }

    #[test]
    fn overlap_segment_for_short_return() {
        let (spec, cyl) = golden();
        let segs = decompose(&spec, &cyl, &[1]).unwrap();
        assert_eq!(segs, vec![Segment::Overlap(vec![1, 1, 1])]);
    }

    #[test]
    fn decompose_concat_identity() {
        let (spec, cyl) = three_symbol();
        let words = enumerate_return_words(&spec, &cyl, 7, DEFAULT_BUDGET).unwrap();
        assert!(!words.is_empty());
        for w in &words {
            let concat: Vec<u8> = w
                .segments()
                .iter()
                .flat_map(|s| s.letters().to_vec())
                .collect();
            let mut y = w.word().symbols().to_vec();
            y.extend_from_slice(&cyl.word());
            assert_eq!(concat, y, "u={}", w.word());
        }
    }

    #[test]
    fn accident_decrement_property() {
        // after an accident with depth m', the depth drops by exactly one
        // for the next m' steps
        for (spec, cyl) in [golden(), three_symbol()] {
            let words = enumerate_return_words(&spec, &cyl, 9, DEFAULT_BUDGET).unwrap();
            for w in &words {
                let p = w.delta_profile();
                for (s, &k) in w.accidents().iter().enumerate() {
                    let stop = w
                        .accidents()
                        .get(s + 1)
                        .copied()
                        .unwrap_or(p.len())
                        .min(k + p[k] + 1)
                        .min(p.len());
                    for i in 1..stop - k {
                        assert_eq!(p[k + i], p[k] - i, "u={} k={}", w.word(), k);
                    }
                }
            }
        }
    }

    #[test]
    fn transfer_counts_match_enumeration() {
        let (spec, cyl) = golden();
        let params = PotentialParams::new(&spec, 1.0, 4).unwrap();
        let m = multiplicities(&spec, &cyl, &params, 15, DEFAULT_BUDGET).unwrap();
        let expect = [1u128, 0, 1, 1, 2, 3, 5];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(m.r[&(n + 1)], e, "n={}", n + 1);
        }
        assert!(m.transfer.is_some());
        assert_eq!(m.c.get(&1), Some(&1));
        assert_eq!(m.c.get(&3), Some(&1));
        assert_eq!(m.c.get(&2), None);
        assert_eq!(m.d.get(&4), Some(&1));
        assert_eq!(m.d.get(&5), Some(&2));
        assert_eq!(m.d.get(&6), Some(&3));
        // type partition: every counted word is T1 or T2/T3 by length split
        for n in 1..=15usize {
            let c_n = m.c.get(&n).copied().unwrap_or(0);
            let d_n = m.d.get(&n).copied().unwrap_or(0);
            assert_eq!(c_n + d_n, m.r[&n], "n={}", n);
        }
    }

    #[test]
    fn degenerate_cylinder_with_inessential_symbol() {
        // X = {0^infinity} inside the binary full shift; J = [01]
        let spec = SftSpec::from_matrix(2, vec![vec![1, 0], vec![0, 0]]).unwrap();
        let cyl = CylinderSpec::new(&spec, &Word(vec![0, 1])).unwrap();
        // return words are 0 1^a 0^b
        assert!(is_return_word(&spec, &cyl, &[0, 1]));
        assert!(is_return_word(&spec, &cyl, &[0, 1, 0]));
        assert!(is_return_word(&spec, &cyl, &[0, 1, 1, 0, 0]));
        assert!(!is_return_word(&spec, &cyl, &[0, 1, 0, 1, 0]));
        let words = enumerate_return_words(&spec, &cyl, 6, DEFAULT_BUDGET).unwrap();
        for w in &words {
            let s = w.word().symbols();
            // shape check: 0, then a block of 1s, then 0s
            assert_eq!(s[0], 0);
            let first1 = 1;
            let mut i = first1;
            while i < s.len() && s[i] == 1 {
                i += 1;
            }
            assert!(i > first1);
            assert!(s[i..].iter().all(|&c| c == 0));
        }
    }
}
