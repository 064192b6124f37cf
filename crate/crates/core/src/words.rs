//! Words over the field alphabet, their degrees, iterated brackets `X_w`,
//! bracket determinants `λ_I`, and the integer Jacobi expansion of `[X_w, X_w']`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{determinant_of_fields, VectorField};
use crate::poly::Polynomial;
use crate::scalar::Rational;

/// A nonempty word over the letters `1..=k`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn new(letters: Vec<u16>, k: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        if let Some(&l) = letters.iter().find(|&&l| l == 0 || l as usize > k) {
            return Err(Error::InvalidArgument(format!("letter {l} outside 1..={k}")));
        }
        Ok(Self(letters))
    }

    /// Builds a word without range checks; for literals in code and tests.
    pub fn from_letters(letters: &[u16]) -> Self {
        assert!(!letters.is_empty() && letters.iter().all(|&l| l >= 1));
        Self(letters.to_vec())
    }

    pub fn letter(i: u16) -> Self {
        Self(vec![i])
    }

    pub fn letters(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> u16 {
        *self.0.last().expect("nonempty")
    }

    /// The word `(w, i)`.
    pub fn push(&self, i: u16) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        Self(v)
    }

    /// Drops the last letter; `None` for single letters.
    pub fn parent(&self) -> Option<Self> {
        (self.0.len() > 1).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn degree(&self, k: usize) -> Degree {
        let mut d = vec![0u32; k];
        for &l in &self.0 {
            d[l as usize - 1] += 1;
        }
        Degree(d)
    }

    /// `X_{(i,i,...)} = [[X_i, X_i], ...] = 0` for every system.
    pub fn is_trivially_zero(&self) -> bool {
        self.0.len() >= 2 && self.0[0] == self.0[1]
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Letter counts of a word or tuple; a point of `Z_{≥0}^k`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Degree(pub Vec<u32>);

impl Degree {
    pub fn zero(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn norm1(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Degree) -> Degree {
        Degree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Coordinatewise `self ⪯ other`.
    pub fn preceq(&self, other: &Degree) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self ⪯ other` and `self ≠ other`.
    pub fn precedes(&self, other: &Degree) -> bool {
        self.preceq(other) && self != other
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.0.iter().map(|&a| crate::scalar::int(a as i64)).collect()
    }
}

impl fmt::Debug for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A d-tuple of words `I = (w_1, ..., w_d)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordTuple(pub Vec<Word>);

impl WordTuple {
    pub fn new(words: Vec<Word>) -> Self {
        Self(words)
    }

    pub fn words(&self) -> &[Word] {
        &self.0
    }

    pub fn degree(&self, k: usize) -> Degree {
        self.0.iter().fold(Degree::zero(k), |acc, w| acc.add(&w.degree(k)))
    }

    /// Sorted copy; determinants of reorderings differ only by sign.
    pub fn canonical(&self) -> Self {
        let mut w = self.0.clone();
        w.sort();
        Self(w)
    }
}

impl fmt::Display for WordTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// All words of length at most `max_len` over `1..=k`, in lexicographic order.
pub fn enumerate_words(k: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    fn rec(k: usize, max_len: usize, cur: &mut Vec<u16>, out: &mut Vec<Word>) {
        for l in 1..=k as u16 {
            cur.push(l);
            out.push(Word(cur.clone()));
            if cur.len() < max_len {
                rec(k, max_len, cur, out);
            }
            cur.pop();
        }
    }
    if max_len >= 1 {
        rec(k, max_len, &mut Vec::new(), &mut out);
    }
    out
}

/// Memoized iterated brackets `X_{(i)} = X_i`, `X_{(w,i)} = [X_w, X_i]`.
#[derive(Clone, Debug)]
pub struct BracketTable {
    base: Vec<VectorField<Rational>>,
    memo: BTreeMap<Word, VectorField<Rational>>,
    built_len: usize,
}

impl BracketTable {
    pub fn new(base: Vec<VectorField<Rational>>) -> Result<Self> {
        let d = base.first().map(VectorField::dim).ok_or_else(|| Error::InvalidArgument("no fields".into()))?;
        if let Some(f) = base.iter().find(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
        }
        let memo = base.iter().enumerate().map(|(i, f)| (Word::letter(i as u16 + 1), f.clone())).collect();
        Ok(Self { base, memo, built_len: 1 })
    }

    /// Builds a table holding every word of length at most `max_len`.
    pub fn build(base: Vec<VectorField<Rational>>, max_len: usize) -> Result<Self> {
        let mut t = Self::new(base)?;
        t.ensure_len(max_len);
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.base.len()
    }

    pub fn dim(&self) -> usize {
        self.base[0].dim()
    }

    pub fn base(&self) -> &[VectorField<Rational>] {
        &self.base
    }

    pub fn built_len(&self) -> usize {
        self.built_len
    }

    /// Extends the memo to all words of length at most `max_len`.
    pub fn ensure_len(&mut self, max_len: usize) {
        while self.built_len < max_len {
            let n = self.built_len;
            let parents: Vec<(Word, bool)> =
                self.memo.iter().filter(|(w, _)| w.len() == n).map(|(w, f)| (w.clone(), f.is_zero())).collect();
            for (w, zero) in parents {
                for i in 1..=self.k() as u16 {
                    let child = w.push(i);
                    let f = if zero || child.is_trivially_zero() {
                        VectorField::zero(self.dim())
                    } else {
                        self.memo[&w].lie_bracket(&self.base[i as usize - 1]).expect("equal dimensions")
                    };
                    self.memo.insert(child, f);
                }
            }
            self.built_len += 1;
        }
    }

    pub fn get(&self, w: &Word) -> Option<&VectorField<Rational>> {
        self.memo.get(w)
    }

    /// `X_w`, from the memo when available, else by recursion on the parent.
    pub fn bracket_field(&self, w: &Word) -> VectorField<Rational> {
        if let Some(f) = self.memo.get(w) {
            return f.clone();
        }
        let parent = w.parent().expect("single letters are always memoized");
        let pf = self.bracket_field(&parent);
        if pf.is_zero() || w.is_trivially_zero() {
            return VectorField::zero(self.dim());
        }
        pf.lie_bracket(&self.base[w.last() as usize - 1]).expect("equal dimensions")
    }

    /// Memoized words (at most the built length) with nonzero fields.
    pub fn nonzero_words(&self) -> impl Iterator<Item = (&Word, &VectorField<Rational>)> {
        self.memo.iter().filter(|(_, f)| !f.is_zero())
    }

    /// `λ_I = det(X_{w_1}, ..., X_{w_d})`.
    pub fn lambda(&self, tuple: &WordTuple) -> Result<Polynomial<Rational>> {
        if tuple.0.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: tuple.0.len() });
        }
        let fields: Vec<_> = tuple.0.iter().map(|w| self.bracket_field(w)).collect();
        if fields.iter().any(VectorField::is_zero) {
            return Ok(Polynomial::zero(self.dim()));
        }
        determinant_of_fields(&fields)
    }

    /// True iff `λ_I ≡ 0` for every d-tuple with `deg I ≺ b0`.
    pub fn minimality_check(&mut self, b0: &Degree) -> Result<bool> {
        Ok(self.minimality_witness(b0)?.is_none())
    }

    /// A tuple of degree strictly below `b0` with `λ_I ≢ 0`, if one exists.
    pub fn minimality_witness(&mut self, b0: &Degree) -> Result<Option<WordTuple>> {
        let d = self.dim();
        let k = self.k();
        if b0.k() != k {
            return Err(Error::DimensionMismatch { expected: k, found: b0.k() });
        }
        let n = b0.norm1() as usize;
        if n <= d {
            return Ok(None);
        }
        self.ensure_len(n - d + 1);
        for b in degrees_below(b0) {
            if (b.norm1() as usize) < d {
                continue;
            }
            for t in self.nonzero_tuples(&b) {
                if !self.lambda(&t)?.is_zero() {
                    return Ok(Some(t));
                }
            }
        }
        Ok(None)
    }

    /// Canonical tuples of degree `b` built from distinct words with nonzero
    /// fields. Tuples omitted here have `λ_I ≡ 0`.
    pub fn nonzero_tuples(&mut self, b: &Degree) -> Vec<WordTuple> {
        let d = self.dim();
        let n = b.norm1() as usize;
        if n < d {
            return Vec::new();
        }
        self.ensure_len(n - d + 1);
        let k = self.k();
        let words: Vec<(Word, Degree)> = self
            .nonzero_words()
            .map(|(w, _)| (w.clone(), w.degree(k)))
            .filter(|(_, dw)| dw.preceq(b))
            .collect();
        let mut out = Vec::new();
        select_tuples(&words, b, d, 0, false, &mut Vec::new(), &mut out);
        out
    }
}

/// Multisets (or sets, when `distinct`) of `count` entries of `words`, in
/// nondecreasing index order, whose degrees sum to `remaining`.
fn select_tuples(
    words: &[(Word, Degree)],
    remaining: &Degree,
    count: usize,
    start: usize,
    allow_repeat: bool,
    cur: &mut Vec<Word>,
    out: &mut Vec<WordTuple>,
) {
    if count == 0 {
        if remaining.norm1() == 0 {
            out.push(WordTuple(cur.clone()));
        }
        return;
    }
    if (remaining.norm1() as usize) < count {
        return;
    }
    for idx in start..words.len() {
        let (w, dw) = &words[idx];
        if !dw.preceq(remaining) {
            continue;
        }
        if count == 1 && dw != remaining {
            continue;
        }
        let rest = Degree(remaining.0.iter().zip(&dw.0).map(|(a, b)| a - b).collect());
        cur.push(w.clone());
        let next = if allow_repeat { idx } else { idx + 1 };
        select_tuples(words, &rest, count - 1, next, allow_repeat, cur, out);
        cur.pop();
    }
}

/// Every degree `b` with `b ⪯ b0`, `b ≠ b0`.
pub fn degrees_below(b0: &Degree) -> Vec<Degree> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; b0.k()];
    fn rec(b0: &Degree, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Degree>) {
        if i == b0.k() {
            if cur.as_slice() != b0.0.as_slice() {
                out.push(Degree(cur.clone()));
            }
            return;
        }
        for a in 0..=b0.0[i] {
            cur[i] = a;
            rec(b0, i + 1, cur, out);
        }
    }
    rec(b0, 0, &mut cur, &mut out);
    out
}

/// All d-tuples of words with degree exactly `b`, one sorted representative
/// per multiset (repeated words included).
pub fn enumerate_degree_tuples(k: usize, d: usize, b: &Degree) -> Vec<WordTuple> {
    let n = b.norm1() as usize;
    if n < d || d == 0 {
        return Vec::new();
    }
    let words: Vec<(Word, Degree)> = enumerate_words(k, n - d + 1)
        .into_iter()
        .map(|w| {
            let dw = w.degree(k);
            (w, dw)
        })
        .filter(|(_, dw)| dw.preceq(b))
        .collect();
    let mut out = Vec::new();
    select_tuples(&words, b, d, 0, true, &mut Vec::new(), &mut out);
    out
}

/// Integer coefficients `C` with `[X_w, X_w'] = Σ C^{w̃} X_{w̃}`, valid for every
/// system of fields. Derived from the Jacobi identity
/// `[X_w,[X_u,X_i]] = [[X_w,X_u],X_i] − [X_{(w,i)},X_u]`, inducting on `|w'|`.
/// Words starting with a repeated letter are dropped since their fields vanish.
pub fn jacobi_expand(w: &Word, w2: &Word) -> BTreeMap<Word, i64> {
    let mut out = BTreeMap::new();
    if w == w2 || w.is_trivially_zero() || w2.is_trivially_zero() {
        return out;
    }
    match w2.parent() {
        None => {
            let child = w.push(w2.last());
            if !child.is_trivially_zero() {
                out.insert(child, 1);
            }
        }
        Some(u) => {
            let i = w2.last();
            for (wt, c) in jacobi_expand(w, &u) {
                let child = wt.push(i);
                if !child.is_trivially_zero() {
                    *out.entry(child).or_insert(0) += c;
                }
            }
            for (wt, c) in jacobi_expand(&w.push(i), &u) {
                *out.entry(wt).or_insert(0) -= c;
            }
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::scalar::int;

    type P = Polynomial<Rational>;

    fn w(l: &[u16]) -> Word {
        Word::from_letters(l)
    }

    /// X_1 = ∂t, X_2 = ∂t + (1, 2t)·∇x on (t, x1, x2).
    fn parabola() -> BracketTable {
        let x2 = VectorField::new(vec![P::one(3), P::one(3), P::var(3, 0).scale(&int(2))]).unwrap();
        BracketTable::build(vec![VectorField::coordinate(3, 0), x2], 4).unwrap()
    }

    #[test]
    fn word_counts() {
        assert_eq!(enumerate_words(2, 1), vec![w(&[1]), w(&[2])]);
        assert_eq!(enumerate_words(2, 2).len(), 6);
        assert_eq!(enumerate_words(3, 2).len(), 12);
        let ws = enumerate_words(2, 3);
        let mut sorted = ws.clone();
        sorted.sort();
        assert_eq!(ws, sorted);
    }

    #[test]
    fn word_validation_and_degree() {
        assert!(Word::new(vec![], 2).is_err());
        assert!(Word::new(vec![3], 2).is_err());
        let word = Word::new(vec![1, 2, 2], 2).unwrap();
        assert_eq!(word.degree(2), Degree(vec![1, 2]));
        assert_eq!(word.degree(2).norm1() as usize, word.len());
    }

    #[test]
    fn bracket_fields_of_parabola() {
        let t = parabola();
        assert_eq!(t.bracket_field(&w(&[1])), VectorField::coordinate(3, 0));
        let g2 = VectorField::new(vec![P::zero(3), P::zero(3), P::constant(3, int(2))]).unwrap();
        assert_eq!(t.bracket_field(&w(&[1, 2])), g2);
        assert!(t.bracket_field(&w(&[1, 1])).is_zero());
        // beyond the built length
        assert!(t.bracket_field(&w(&[1, 2, 1, 2, 2, 1])).is_zero());
    }

    #[test]
    fn lambda_of_parabola() {
        let t = parabola();
        let i = WordTuple(vec![w(&[1]), w(&[2]), w(&[1, 2])]);
        assert_eq!(t.lambda(&i).unwrap(), P::constant(3, int(2)));
        let rep = WordTuple(vec![w(&[1]), w(&[1]), w(&[1, 2])]);
        assert!(t.lambda(&rep).unwrap().is_zero());
        let swapped = WordTuple(vec![w(&[2]), w(&[1]), w(&[1, 2])]);
        assert_eq!(t.lambda(&swapped).unwrap(), P::constant(3, int(-2)));
    }

    #[test]
    fn jacobi_examples() {
        let e = jacobi_expand(&w(&[1, 2]), &w(&[1]));
        assert_eq!(e, BTreeMap::from([(w(&[1, 2, 1]), 1)]));
        let e = jacobi_expand(&w(&[1]), &w(&[2, 1]));
        assert_eq!(e, BTreeMap::from([(w(&[1, 2, 1]), 1)]));
        assert!(jacobi_expand(&w(&[1, 2]), &w(&[1, 2])).is_empty());
    }

    #[test]
    fn degree_tuples() {
        let b = Degree(vec![2, 2]);
        let tuples = enumerate_degree_tuples(2, 3, &b);
        assert!(tuples.contains(&WordTuple(vec![w(&[1]), w(&[1, 2]), w(&[2])])));
        assert!(tuples.contains(&WordTuple(vec![w(&[1]), w(&[2]), w(&[2, 1])])));
        assert!(tuples.iter().all(|t| t.degree(2) == b && t.canonical() == *t));
        for t in enumerate_degree_tuples(2, 3, &Degree(vec![2, 1])) {
            assert!(t.words().iter().all(|w| w.len() == 1));
        }
        assert!(enumerate_degree_tuples(2, 3, &Degree(vec![1, 1])).is_empty());
    }

    #[test]
    fn minimality() {
        let mut t = parabola();
        assert!(t.minimality_check(&Degree(vec![2, 2])).unwrap());
        let mut frame =
            BracketTable::build((0..3).map(|i| VectorField::coordinate(3, i)).collect(), 2).unwrap();
        assert!(frame.minimality_check(&Degree(vec![1, 1, 1])).unwrap());
        // (3,2) sits above (2,2), where λ ≢ 0
        assert!(!t.minimality_check(&Degree(vec![3, 2])).unwrap());
        assert!(t.minimality_witness(&Degree(vec![3, 2])).unwrap().is_some());
    }

    #[test]
    fn degrees_below_counts() {
        assert_eq!(degrees_below(&Degree(vec![1, 2])).len(), 5);
    }
}
