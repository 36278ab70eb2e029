//! Bracket words over the alphabet `{0, 1, +, -}`.
//!
//! A word `I = (i_1 ... i_d)` names the right-nested bracket
//! `f_I = [f_{i_1}, [f_{i_2}, ... [f_{i_{d-1}}, f_{i_d}] ...]]`
//! with `f_+ = f0 + f1` and `f_- = f0 - f1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::field::{lie_bracket, PolyVectorField};
use crate::error::{Error, Result};

/// Declaration order is the leaf order used by canonical forms: `0 < 1 < + < -`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Zero,
    One,
    Plus,
    Minus,
}

impl Letter {
    pub fn symbol(self) -> char {
        match self {
            Letter::Zero => '0',
            Letter::One => '1',
            Letter::Plus => '+',
            Letter::Minus => '-',
        }
    }

    fn from_char(c: char) -> Option<Letter> {
        match c {
            '0' => Some(Letter::Zero),
            '1' => Some(Letter::One),
            '+' => Some(Letter::Plus),
            '-' | '\u{2212}' => Some(Letter::Minus),
            _ => None,
        }
    }

    pub fn field(self, f0: &PolyVectorField, f1: &PolyVectorField) -> PolyVectorField {
        match self {
            Letter::Zero => f0.clone(),
            Letter::One => f1.clone(),
            Letter::Plus => f0 + f1,
            Letter::Minus => f0 - f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BracketWord(Vec<Letter>);

impl BracketWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::MalformedWord(String::new()));
        }
        Ok(BracketWord(letters))
    }

    pub fn letter(l: Letter) -> Self {
        BracketWord(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(l I)`.
    pub fn prepend(&self, l: Letter) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(l);
        v.extend_from_slice(&self.0);
        BracketWord(v)
    }

    /// `(I J)`.
    pub fn concat(&self, other: &BracketWord) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BracketWord(v)
    }

    /// The word with its first letter removed, if any letters remain.
    pub fn tail(&self) -> Option<BracketWord> {
        (self.0.len() > 1).then(|| BracketWord(self.0[1..].to_vec()))
    }

    pub fn count(&self, l: Letter) -> usize {
        self.0.iter().filter(|&&x| x == l).count()
    }

    pub fn ends_with_01(&self) -> bool {
        self.0.ends_with(&[Letter::Zero, Letter::One])
    }

    /// Every word of exactly `len` letters drawn from `alphabet`, in lexicographic order.
    pub fn all_of_length(alphabet: &[Letter], len: usize) -> Vec<BracketWord> {
        if len == 0 {
            return Vec::new();
        }
        let mut out: Vec<Vec<Letter>> = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |&l| {
                        let mut w2 = w.clone();
                        w2.push(l);
                        w2
                    })
                })
                .collect();
        }
        out.into_iter().map(BracketWord).collect()
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for BracketWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::MalformedWord(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        BracketWord::new(letters).map_err(|_| Error::MalformedWord(s.to_string()))
    }
}

impl Serialize for BracketWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BracketWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Right-nested evaluation of `f_I`, computed from scratch.
pub fn eval_word_field(
    word: &BracketWord,
    f0: &PolyVectorField,
    f1: &PolyVectorField,
) -> Result<PolyVectorField> {
    if f0.dim() != f1.dim() {
        return Err(Error::DimensionMismatch {
            expected: f0.dim(),
            found: f1.dim(),
        });
    }
    let mut letters = word.letters().iter().rev();
    let last = letters.next().expect("words are nonempty");
    let mut acc = last.field(f0, f1);
    for l in letters {
        acc = lie_bracket(&l.field(f0, f1), &acc)?;
    }
    Ok(acc)
}

/// Multilinear expansion of a word into `{0, 1}` words with signs.
/// Works for any word; terms are returned in lexicographic order.
pub fn expand_word(word: &BracketWord) -> Vec<(BracketWord, i8)> {
    let mut acc: Vec<(Vec<Letter>, i8)> = vec![(vec![], 1)];
    for &l in word.letters() {
        let choices: &[(Letter, i8)] = match l {
            Letter::Zero => &[(Letter::Zero, 1)],
            Letter::One => &[(Letter::One, 1)],
            Letter::Plus => &[(Letter::Zero, 1), (Letter::One, 1)],
            Letter::Minus => &[(Letter::Zero, 1), (Letter::One, -1)],
        };
        acc = acc
            .into_iter()
            .flat_map(|(w, s)| {
                choices.iter().map(move |&(c, cs)| {
                    let mut w2 = w.clone();
                    w2.push(c);
                    (w2, s * cs)
                })
            })
            .collect();
    }
    let mut out: Vec<(BracketWord, i8)> = acc.into_iter().map(|(w, s)| (BracketWord(w), s)).collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordDecomposition {
    pub terms: Vec<(BracketWord, i8)>,
    /// Term with the most zeros (every `+`/`-` replaced by 0).
    pub j1: BracketWord,
    /// Term with the most ones (every `+`/`-` replaced by 1).
    pub j2: BracketWord,
}

/// Expansion of a word ending in `(01)`, together with its two extreme terms.
pub fn decompose_word(word: &BracketWord) -> Result<WordDecomposition> {
    if !word.ends_with_01() {
        return Err(Error::MalformedWord(word.to_string()));
    }
    let terms = expand_word(word);
    let unique_max = |l: Letter| -> Result<BracketWord> {
        let best = terms.iter().map(|(w, _)| w.count(l)).max().unwrap_or(0);
        let mut hits = terms.iter().filter(|(w, _)| w.count(l) == best);
        let first = hits.next().map(|(w, _)| w.clone());
        match (first, hits.next()) {
            (Some(w), None) => Ok(w),
            _ => Err(Error::MalformedWord(word.to_string())),
        }
    };
    let j1 = unique_max(Letter::Zero)?;
    let j2 = unique_max(Letter::One)?;
    Ok(WordDecomposition { terms, j1, j2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> BracketWord {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("+01").to_string(), "+01");
        assert_eq!(w("(\u{2212}01)").to_string(), "-01");
        assert!("".parse::<BracketWord>().is_err());
        assert!("0x1".parse::<BracketWord>().is_err());
    }

    #[test]
    fn leaf_order() {
        let mut v = vec![w("-"), w("+"), w("1"), w("0"), w("01")];
        v.sort();
        let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(s, vec!["0", "01", "1", "+", "-"]);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_word(&w("01")).unwrap();
        assert_eq!(d.terms, vec![(w("01"), 1)]);
        let d = decompose_word(&w("+01")).unwrap();
        assert_eq!(d.terms, vec![(w("001"), 1), (w("101"), 1)]);
        assert_eq!((d.j1, d.j2), (w("001"), w("101")));
        let d = decompose_word(&w("-01")).unwrap();
        assert_eq!(d.terms, vec![(w("001"), 1), (w("101"), -1)]);
        let d = decompose_word(&w("-+01")).unwrap();
        assert_eq!(d.j1, w("0001"));
        assert_eq!(d.j2, w("1101"));
        assert!(d.terms.contains(&(w("1101"), -1)));
        assert!(decompose_word(&w("+10")).is_err());
    }

    #[test]
    fn all_of_length_counts() {
        let a = [Letter::Zero, Letter::One, Letter::Plus, Letter::Minus];
        assert_eq!(BracketWord::all_of_length(&a, 3).len(), 64);
        assert!(BracketWord::all_of_length(&a, 0).is_empty());
    }
}
