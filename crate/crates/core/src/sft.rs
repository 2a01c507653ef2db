//! Subshifts of finite type over a finite ambient alphabet.
//!
//! The ambient space is the full shift over `{0, .., m-1}`; the subshift is
//! cut out by a 0/1 transition matrix on adjacent pairs. Everything downstream
//! (depth function, return words, induced series) is built on the essential
//! subgraph: the vertices from which an infinite forward path exists.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SftError {
    #[error("transition matrix entry at ({0},{1}) is not 0 or 1")]
    BadEntry(usize, usize),
    #[error("transition matrix is {rows}x{cols}, expected {m}x{m}")]
    BadShape { rows: usize, cols: usize, m: usize },
    #[error("forbidden block {0:?} is not a length-2 word over the alphabet")]
    BadForbiddenBlock(Vec<u8>),
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("symbol {0} out of range for alphabet of size {1}")]
    SymbolOutOfRange(u8, usize),
    #[error("essentialization removed every vertex; the subshift is empty")]
    EmptySubshift,
    #[error("exact word count overflows the supported integer width at n={0}")]
    Overflow(usize),
    #[error("no strictly positive power of the transition matrix up to cap {0}")]
    NotMixing(usize),
}

/// A finite word over the ambient alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Parses a word from a string of decimal digit symbols ("110" -> [1,1,0]).
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<Vec<u8>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", s)?;
        }
        Ok(())
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

/// Depth of a word: length of its longest prefix lying in the language.
///
/// `Exact(k)` means position `k` of the inspected word witnesses the exit from
/// the language. `AtLeast(k)` means the whole word (length `k`) lies in the
/// language, so the depth of an extension may be larger, including infinity
/// for points of the subshift itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaValue {
    Exact(usize),
    AtLeast(usize),
}

impl DeltaValue {
    pub fn value(self) -> usize {
        match self {
            DeltaValue::Exact(k) | DeltaValue::AtLeast(k) => k,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, DeltaValue::Exact(_))
    }
}

/// Exact word count, or a natural-log approximation once the integer width
/// is exhausted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WordCount {
    Exact(u128),
    /// Natural log of the count; flagged fallback for large `n`.
    LogApprox(f64),
}

/// A subshift of finite type: ambient alphabet size, 0/1 transition matrix,
/// and the mask of vertices surviving essentialization.
#[derive(Debug, Clone, PartialEq)]
pub struct SftSpec {
    alphabet_size: usize,
    transition: Vec<Vec<u8>>,
    essential: Vec<bool>,
}

impl SftSpec {
    /// Builds a spec from an explicit transition matrix and essentializes it.
    pub fn from_matrix(alphabet_size: usize, transition: Vec<Vec<u8>>) -> Result<Self, SftError> {
        if alphabet_size < 2 {
            return Err(SftError::AlphabetTooSmall(alphabet_size));
        }
        if transition.len() != alphabet_size
            || transition.iter().any(|row| row.len() != alphabet_size)
        {
            return Err(SftError::BadShape {
                rows: transition.len(),
                cols: transition.first().map_or(0, |r| r.len()),
                m: alphabet_size,
            });
        }
        for (i, row) in transition.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                if e > 1 {
                    return Err(SftError::BadEntry(i, j));
                }
            }
        }
        let essential = essentialize(&transition);
        if essential.iter().all(|&e| !e) {
            return Err(SftError::EmptySubshift);
        }
        Ok(SftSpec {
            alphabet_size,
            transition,
            essential,
        })
    }

    /// Builds a spec from a list of forbidden length-2 blocks: block `ab`
    /// clears entry `T[a][b]` of the all-ones matrix.
    pub fn from_forbidden_blocks(alphabet_size: usize, blocks: &[Word]) -> Result<Self, SftError> {
        if alphabet_size < 2 {
            return Err(SftError::AlphabetTooSmall(alphabet_size));
        }
        let mut transition = vec![vec![1u8; alphabet_size]; alphabet_size];
        for b in blocks {
            let s = b.symbols();
            if s.len() != 2 || s.iter().any(|&c| c as usize >= alphabet_size) {
                return Err(SftError::BadForbiddenBlock(s.to_vec()));
            }
            transition[s[0] as usize][s[1] as usize] = 0;
        }
        Self::from_matrix(alphabet_size, transition)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn transition(&self) -> &[Vec<u8>] {
        &self.transition
    }

    pub fn essential_mask(&self) -> &[bool] {
        &self.essential
    }

    pub fn is_essential(&self, symbol: u8) -> bool {
        (symbol as usize) < self.alphabet_size && self.essential[symbol as usize]
    }

    pub fn essential_count(&self) -> usize {
        self.essential.iter().filter(|&&e| e).count()
    }

    /// Indices of the essential vertices, ascending.
    pub fn essential_vertices(&self) -> Vec<usize> {
        (0..self.alphabet_size)
            .filter(|&i| self.essential[i])
            .collect()
    }

    /// Number of zero entries of the transition matrix: the forbidden
    /// 2-blocks of the subshift.
    pub fn forbidden_block_count(&self) -> usize {
        self.transition
            .iter()
            .flatten()
            .filter(|&&e| e == 0)
            .count()
    }

    /// True iff the adjacent pair `ab` can occur in a point of the subshift.
    pub fn pair_allowed(&self, a: u8, b: u8) -> bool {
        self.is_essential(a) && self.is_essential(b) && self.transition[a as usize][b as usize] == 1
    }

    /// Language membership: a word lies in L(X) iff it is a path among
    /// essential vertices. The empty word is in every language.
    pub fn is_in_language(&self, word: &[u8]) -> bool {
        if word.is_empty() {
            return true;
        }
        if !self.is_essential(word[0]) {
            return false;
        }
        word.windows(2).all(|p| self.pair_allowed(p[0], p[1]))
    }

    /// Depth of a word: longest prefix in L(X), censored when the whole word
    /// lies in the language. Single O(|word|) scan.
    pub fn delta(&self, word: &[u8]) -> DeltaValue {
        for (i, &s) in word.iter().enumerate() {
            let breaks = if i == 0 {
                !self.is_essential(s)
            } else {
                !self.pair_allowed(word[i - 1], s)
            };
            if breaks {
                return DeltaValue::Exact(i);
            }
        }
        DeltaValue::AtLeast(word.len())
    }

    /// Exact count of length-n words in L(X): sum of entries of the
    /// essentialized matrix to the (n-1)th power (paths with n vertices).
    pub fn count_words_exact(&self, n: usize) -> Result<u128, SftError> {
        assert!(n >= 1, "count_words requires n >= 1");
        let verts = self.essential_vertices();
        let d = verts.len();
        let t: Vec<Vec<u128>> = verts
            .iter()
            .map(|&i| {
                verts
                    .iter()
                    .map(|&j| self.transition[i][j] as u128)
                    .collect()
            })
            .collect();
        // power[i][j] = (T^{n-1})_{ij} over essential vertices
        let mut power: Vec<Vec<u128>> = (0..d)
            .map(|i| (0..d).map(|j| u128::from(i == j)).collect())
            .collect();
        for _ in 1..n {
            power = mat_mul_checked(&power, &t).ok_or(SftError::Overflow(n))?;
        }
        let mut total: u128 = 0;
        for row in &power {
            for &e in row {
                total = total.checked_add(e).ok_or(SftError::Overflow(n))?;
            }
        }
        Ok(total)
    }

    /// Word count with a log-space floating fallback once u128 overflows.
    pub fn count_words(&self, n: usize) -> WordCount {
        match self.count_words_exact(n) {
            Ok(c) => WordCount::Exact(c),
            Err(_) => WordCount::LogApprox(self.count_words_log(n)),
        }
    }

    /// Natural log of the length-n word count, via scaled vector iteration.
    fn count_words_log(&self, n: usize) -> f64 {
        let verts = self.essential_vertices();
        let d = verts.len();
        let mut v = vec![1.0f64; d];
        let mut log_scale = 0.0f64;
        for _ in 1..n {
            let mut next = vec![0.0f64; d];
            for (a, &i) in verts.iter().enumerate() {
                for (b, &j) in verts.iter().enumerate() {
                    if self.transition[i][j] == 1 {
                        next[a] += v[b];
                    }
                }
            }
            let norm: f64 = next.iter().sum();
            for x in &mut next {
                *x /= norm;
            }
            log_scale += norm.ln();
            v = next;
        }
        log_scale + v.iter().sum::<f64>().ln()
    }

    /// Smallest n <= cap with (T restricted to essential vertices)^n > 0.
    pub fn mixing_index(&self, cap: usize) -> Result<usize, SftError> {
        assert!(cap >= 1, "mixing_index requires cap >= 1");
        let verts = self.essential_vertices();
        let t: Vec<Vec<bool>> = verts
            .iter()
            .map(|&i| verts.iter().map(|&j| self.transition[i][j] == 1).collect())
            .collect();
        let mut power = t.clone();
        for n in 1..=cap {
            if power.iter().all(|row| row.iter().all(|&e| e)) {
                return Ok(n);
            }
            if n < cap {
                power = bool_mat_mul(&power, &t);
            }
        }
        Err(SftError::NotMixing(cap))
    }

    /// Default cap for `mixing_index`; sufficient for primitive matrices.
    pub fn default_mixing_cap(&self) -> usize {
        self.alphabet_size * self.alphabet_size + 1
    }
}

fn mat_mul_checked(a: &[Vec<u128>], b: &[Vec<u128>]) -> Option<Vec<Vec<u128>>> {
    let d = a.len();
    let mut out = vec![vec![0u128; d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..d {
                let prod = a[i][k].checked_mul(b[k][j])?;
                out[i][j] = out[i][j].checked_add(prod)?;
            }
        }
    }
    Some(out)
}

fn bool_mat_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let d = a.len();
    let mut out = vec![vec![false; d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] {
                for j in 0..d {
                    if b[k][j] {
                        out[i][j] = true;
                    }
                }
            }
        }
    }
    out
}

/// Repeatedly removes vertices with no outgoing edge among survivors.
fn essentialize(transition: &[Vec<u8>]) -> Vec<bool> {
    let m = transition.len();
    let mut alive = vec![true; m];
    loop {
        let mut changed = false;
        for i in 0..m {
            if alive[i] {
                let has_out = (0..m).any(|j| alive[j] && transition[i][j] == 1);
                if !has_out {
                    alive[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return alive;
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CylinderError {
    #[error("cylinder word must have length exactly 2, got {0}")]
    BadLength(usize),
    #[error("cylinder word {0} lies in L(X); it must be outside the language")]
    InLanguage(String),
    #[error("cylinder symbol {0} out of range for alphabet of size {1}")]
    SymbolOutOfRange(u8, usize),
}

/// The cylinder J = [ab] for a length-2 word ab outside L(X).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderSpec {
    word: [u8; 2],
}

impl CylinderSpec {
    pub fn new(spec: &SftSpec, word: &Word) -> Result<Self, CylinderError> {
        let s = word.symbols();
        if s.len() != 2 {
            return Err(CylinderError::BadLength(s.len()));
        }
        for &c in s {
            if c as usize >= spec.alphabet_size() {
                return Err(CylinderError::SymbolOutOfRange(c, spec.alphabet_size()));
            }
        }
        if spec.is_in_language(s) {
            return Err(CylinderError::InLanguage(word.to_string()));
        }
        Ok(CylinderSpec { word: [s[0], s[1]] })
    }

    pub fn alpha(&self) -> u8 {
        self.word[0]
    }

    pub fn beta(&self) -> u8 {
        self.word[1]
    }

    pub fn word(&self) -> [u8; 2] {
        self.word
    }
}

/// The golden-mean shift over {0,1}: forbidden block 11.
#[cfg(test)]
pub fn golden_mean() -> SftSpec {
    SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap()
}
