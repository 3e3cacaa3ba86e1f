//! Combinatorics of cyclic character strings.
//!
//! Positions are 0-based throughout. A neighborhood of radius `m` around
//! position `i` is the linear window `i-m ..= i+m` read through the cyclic
//! seam. Two windows are isomorphic when they are equal or mirror images.
//!
//! Radius 0 (a bare letter) never counts as a distinguishing radius, so
//! strings of length 1 or 2 are never Leibnizian.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used for varieties and actions.
pub type Rational = Ratio<i128>;

/// Index of a letter within its [`Alphabet`].
pub type Symbol = u8;

/// Smallest radius admitted when comparing two positions.
pub const MIN_RADIUS: usize = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StringError {
    #[error("duplicate letter {0:?} in alphabet")]
    DuplicateLetter(char),
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("alphabet has more than 256 letters")]
    AlphabetTooLarge,
    #[error("symbol {ch:?} at position {position} is not in the alphabet")]
    InvalidSymbol { ch: char, position: usize },
    #[error("string is empty")]
    Empty,
    #[error("string of length {len} is too short (need at least {min})")]
    TooShort { len: usize, min: usize },
    #[error("position {position} out of range for length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("radius {radius} exceeds the maximum radius {max} for length {len}")]
    RadiusOutOfRange {
        radius: usize,
        max: usize,
        len: usize,
    },
    #[error("relative indifference needs two distinct positions, got {0} twice")]
    SamePosition(usize),
    #[error("string is not Leibnizian")]
    NotLeibnizian,
}

/// Ordered set of distinct letters. The order fixes every canonical ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self, StringError> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.is_empty() {
            return Err(StringError::EmptyAlphabet);
        }
        if letters.len() > 256 {
            return Err(StringError::AlphabetTooLarge);
        }
        let mut seen = HashSet::new();
        for &c in &letters {
            if !seen.insert(c) {
                return Err(StringError::DuplicateLetter(c));
            }
        }
        Ok(Self { letters })
    }

    /// Sorted union of the letters occurring in `texts`.
    pub fn derive<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, StringError> {
        let mut set: Vec<char> = texts.into_iter().flat_map(str::chars).collect();
        set.sort_unstable();
        set.dedup();
        Self::new(set)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn symbol(&self, ch: char) -> Option<Symbol> {
        self.letters
            .iter()
            .position(|&c| c == ch)
            .map(|p| p as Symbol)
    }

    pub fn letter(&self, sym: Symbol) -> char {
        self.letters[sym as usize]
    }

    pub fn encode(&self, text: &str) -> Result<Vec<Symbol>, StringError> {
        text.chars()
            .enumerate()
            .map(|(position, ch)| {
                self.symbol(ch)
                    .ok_or(StringError::InvalidSymbol { ch, position })
            })
            .collect()
    }

    pub fn render(&self, symbols: &[Symbol]) -> String {
        symbols.iter().map(|&s| self.letter(s)).collect()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.letters {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A non-empty word with cyclic topology.
///
/// Equality, hashing and ordering look at the symbols only; strings compared
/// against each other are expected to share an alphabet.
#[derive(Clone)]
pub struct CyclicString {
    alphabet: Arc<Alphabet>,
    symbols: Vec<Symbol>,
}

impl CyclicString {
    pub fn new(alphabet: Arc<Alphabet>, symbols: Vec<Symbol>) -> Result<Self, StringError> {
        if symbols.is_empty() {
            return Err(StringError::Empty);
        }
        if let Some(position) = symbols.iter().position(|&s| s as usize >= alphabet.len()) {
            return Err(StringError::InvalidSymbol { ch: '?', position });
        }
        Ok(Self { alphabet, symbols })
    }

    pub fn parse(alphabet: Arc<Alphabet>, text: &str) -> Result<Self, StringError> {
        let symbols = alphabet.encode(text)?;
        Self::new(alphabet, symbols)
    }

    /// Parses `text` over the sorted set of its own letters.
    pub fn from_text(text: &str) -> Result<Self, StringError> {
        let alphabet = Arc::new(Alphabet::derive([text])?);
        Self::parse(alphabet, text)
    }

    pub(crate) fn from_parts_unchecked(alphabet: Arc<Alphabet>, symbols: Vec<Symbol>) -> Self {
        debug_assert!(!symbols.is_empty());
        Self { alphabet, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    /// Left rotation by `k`: the result starts at position `k`.
    pub fn rotated(&self, k: usize) -> Self {
        let n = self.len();
        let k = k % n;
        let mut symbols = Vec::with_capacity(n);
        symbols.extend_from_slice(&self.symbols[k..]);
        symbols.extend_from_slice(&self.symbols[..k]);
        Self::from_parts_unchecked(self.alphabet.clone(), symbols)
    }

    pub fn reversed(&self) -> Self {
        let mut symbols = self.symbols.clone();
        symbols.reverse();
        Self::from_parts_unchecked(self.alphabet.clone(), symbols)
    }

    pub fn render(&self) -> String {
        self.alphabet.render(&self.symbols)
    }
}

impl PartialEq for CyclicString {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for CyclicString {}

impl Hash for CyclicString {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.symbols.hash(state);
    }
}

impl PartialOrd for CyclicString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CyclicString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.symbols.cmp(&other.symbols)
    }
}

impl fmt::Display for CyclicString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for CyclicString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CyclicString({:?})", self.render())
    }
}

/// Relative indifference table and per-position absolute indifference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndifferenceProfile {
    /// `a[i]`; 0 marks a position that some other position never separates from.
    pub a: Vec<usize>,
    /// `r[i][j]`, symmetric, `None` on the diagonal and for inseparable pairs.
    pub r: Vec<Vec<Option<usize>>>,
}

impl IndifferenceProfile {
    pub fn is_leibnizian(&self) -> bool {
        !self.a.is_empty() && self.a.iter().all(|&a| a > 0)
    }
}

/// BSD variety, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variety(pub Rational);

impl Variety {
    pub fn zero() -> Self {
        Variety(Rational::zero())
    }

    pub fn value(&self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl fmt::Display for Variety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Largest admissible neighborhood radius for a string of length `n`.
pub fn max_radius(n: usize) -> usize {
    if n == 0 {
        0
    } else if n.is_multiple_of(2) {
        n / 2 - 1
    } else {
        (n - 1) / 2
    }
}

fn window(symbols: &[Symbol], i: usize, m: usize) -> impl Iterator<Item = Symbol> + '_ {
    let n = symbols.len();
    // i + n - m never underflows because m <= n / 2
    (0..=2 * m).map(move |k| symbols[(i + n - m + k) % n])
}

/// Linear window of radius `m` centered on position `i`.
pub fn neighborhood(s: &CyclicString, i: usize, m: usize) -> Result<Vec<Symbol>, StringError> {
    let n = s.len();
    if i >= n {
        return Err(StringError::PositionOutOfRange {
            position: i,
            len: n,
        });
    }
    let max = max_radius(n);
    if m > max {
        return Err(StringError::RadiusOutOfRange {
            radius: m,
            max,
            len: n,
        });
    }
    Ok(window(&s.symbols, i, m).collect())
}

/// Equal or mirror images of each other.
pub fn isomorphic(u: &[Symbol], v: &[Symbol]) -> bool {
    u.len() == v.len() && (u == v || u.iter().eq(v.iter().rev()))
}

fn windows_isomorphic(symbols: &[Symbol], i: usize, j: usize, m: usize) -> bool {
    window(symbols, i, m).eq(window(symbols, j, m))
        || window(symbols, i, m).eq(window(symbols, j, m).collect::<Vec<_>>().into_iter().rev())
}

fn relative_unchecked(symbols: &[Symbol], i: usize, j: usize) -> Option<usize> {
    (MIN_RADIUS..=max_radius(symbols.len())).find(|&m| !windows_isomorphic(symbols, i, j, m))
}

/// Smallest admissible radius at which positions `i` and `j` look different.
pub fn relative_indifference(
    s: &CyclicString,
    i: usize,
    j: usize,
) -> Result<Option<usize>, StringError> {
    let n = s.len();
    if n < 2 {
        return Err(StringError::TooShort { len: n, min: 2 });
    }
    for p in [i, j] {
        if p >= n {
            return Err(StringError::PositionOutOfRange {
                position: p,
                len: n,
            });
        }
    }
    if i == j {
        return Err(StringError::SamePosition(i));
    }
    Ok(relative_unchecked(&s.symbols, i, j))
}

#[allow(clippy::needless_range_loop)]
pub fn indifference_profile(s: &CyclicString) -> Result<IndifferenceProfile, StringError> {
    let n = s.len();
    if n < 2 {
        return Err(StringError::TooShort { len: n, min: 2 });
    }
    let mut r = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let rij = relative_unchecked(&s.symbols, i, j);
            r[i][j] = rij;
            r[j][i] = rij;
        }
    }
    let a = (0..n)
        .map(|i| {
            let mut best = 0;
            for (j, rij) in r[i].iter().enumerate() {
                if j == i {
                    continue;
                }
                match rij {
                    Some(v) => best = best.max(*v),
                    None => return 0,
                }
            }
            best
        })
        .collect();
    Ok(IndifferenceProfile { a, r })
}

/// Orientation-free key of a window: the smaller of it and its mirror.
fn mirror_key(symbols: &[Symbol], i: usize, m: usize) -> Vec<Symbol> {
    let fwd: Vec<Symbol> = window(symbols, i, m).collect();
    let rev: Vec<Symbol> = fwd.iter().rev().copied().collect();
    fwd.min(rev)
}

/// Leibnizian test using only maximum-radius windows.
///
/// Isomorphic windows at radius `m` have isomorphic centers at every smaller
/// radius, so a pair separated anywhere is separated at the maximum radius.
pub fn is_leibnizian(s: &CyclicString) -> bool {
    let n = s.len();
    let m = max_radius(n);
    if m < MIN_RADIUS {
        return false;
    }
    let mut seen = HashSet::with_capacity(n);
    (0..n).all(|i| seen.insert(mirror_key(&s.symbols, i, m)))
}

/// Leibnizian test that scans every admissible radius for every pair.
pub fn is_leibnizian_full_scan(s: &CyclicString) -> bool {
    let n = s.len();
    if max_radius(n) < MIN_RADIUS {
        return false;
    }
    (0..n).all(|i| ((i + 1)..n).all(|j| relative_unchecked(&s.symbols, i, j).is_some()))
}

/// Σ 1/a_i for Leibnizian strings, 0 otherwise.
pub fn variety(s: &CyclicString) -> Variety {
    if s.len() < 2 || !is_leibnizian(s) {
        return Variety::zero();
    }
    let profile = indifference_profile(s).expect("length checked above");
    variety_of_profile(&profile)
}

pub fn variety_of_profile(profile: &IndifferenceProfile) -> Variety {
    if !profile.is_leibnizian() {
        return Variety::zero();
    }
    // group equal radii so the sum stays small
    let mut counts: BTreeMap<usize, i128> = BTreeMap::new();
    for &a in &profile.a {
        *counts.entry(a).or_default() += 1;
    }
    Variety(
        counts
            .into_iter()
            .map(|(a, c)| Rational::new(c, a as i128))
            .fold(Rational::zero(), |acc, x| acc + x),
    )
}

fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    let total = total as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    // -0.0 from a single symbol
    h.max(0.0)
}

/// Shannon entropy of the letter frequencies, in bits.
pub fn shannon_entropy(s: &CyclicString) -> f64 {
    let mut counts = vec![0usize; s.alphabet.len()];
    for &sym in &s.symbols {
        counts[sym as usize] += 1;
    }
    entropy_of_counts(counts, s.len())
}

/// Which consecutive pairs feed the joint entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// N pairs, including the one across the seam.
    #[default]
    Cyclic,
    /// N-1 pairs.
    Linear,
}

/// H(X,Y) - H(X) with H(X,Y) over consecutive letter pairs, in bits.
pub fn conditional_entropy(s: &CyclicString, mode: PairMode) -> Result<f64, StringError> {
    let n = s.len();
    if n < 2 {
        return Err(StringError::TooShort { len: n, min: 2 });
    }
    let pairs = match mode {
        PairMode::Cyclic => n,
        PairMode::Linear => n - 1,
    };
    let mut counts: BTreeMap<(Symbol, Symbol), usize> = BTreeMap::new();
    for i in 0..pairs {
        *counts
            .entry((s.symbols[i], s.symbols[(i + 1) % n]))
            .or_default() += 1;
    }
    let joint = entropy_of_counts(counts.into_values(), pairs);
    Ok(joint - shannon_entropy(s))
}

/// Concatenation over i = 1..=n of each letter repeated i times.
pub fn fractal_word(alphabet: Arc<Alphabet>, n: usize) -> Result<CyclicString, StringError> {
    if n == 0 {
        return Err(StringError::Empty);
    }
    let mut symbols = Vec::with_capacity(alphabet.len() * n * (n + 1) / 2);
    for i in 1..=n {
        for sym in 0..alphabet.len() {
            symbols.extend(std::iter::repeat_n(sym as Symbol, i));
        }
    }
    CyclicString::new(alphabet, symbols)
}

/// How strings are identified with each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonMode {
    /// Exact character sequence.
    #[default]
    Literal,
    /// Lexicographically least rotation.
    Rotation,
    /// Least over rotations of the string and of its mirror.
    RotationMirror,
}

impl CanonMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CanonMode::Literal => "literal",
            CanonMode::Rotation => "rotation",
            CanonMode::RotationMirror => "rotation_mirror",
        }
    }
}

impl fmt::Display for CanonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CanonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(CanonMode::Literal),
            "rotation" => Ok(CanonMode::Rotation),
            "rotation_mirror" | "rotation-mirror" => Ok(CanonMode::RotationMirror),
            other => Err(format!(
                "unknown canon mode {other:?} (literal, rotation, rotation_mirror)"
            )),
        }
    }
}

/// Start index of the lexicographically least rotation.
pub fn least_rotation(symbols: &[Symbol]) -> usize {
    let n = symbols.len();
    if n < 2 {
        return 0;
    }
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = symbols[(i + k) % n];
        let b = symbols[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

pub fn canonicalize(s: &CyclicString, mode: CanonMode) -> CyclicString {
    match mode {
        CanonMode::Literal => s.clone(),
        CanonMode::Rotation => s.rotated(least_rotation(&s.symbols)),
        CanonMode::RotationMirror => {
            let fwd = s.rotated(least_rotation(&s.symbols));
            let rev = s.reversed();
            let rev = rev.rotated(least_rotation(&rev.symbols));
            fwd.min(rev)
        }
    }
}
