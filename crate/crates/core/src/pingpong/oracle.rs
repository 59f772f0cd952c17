//! Exhaustive search for relations among matrices with exact rational entries.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projlin::{inverse, Matrix};
use crate::scalar::{PAdic, Scalar};

/// Longest word the oracle will enumerate.
pub const MAX_ORACLE_LEN: usize = 16;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    /// Position in the enumeration order `a, a⁻¹, b, b⁻¹, …`.
    pub fn index(self) -> usize {
        2 * self.generator + self.inverse as usize
    }

    fn from_index(i: usize) -> Self {
        Letter { generator: i / 2, inverse: i % 2 == 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// No letter is followed by its own inverse.
    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0].generator != w[1].generator || w[0].inverse == w[1].inverse)
    }
}

fn generator_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("g{i}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("·")?;
            }
            f.write_str(&generator_name(l.generator))?;
            if l.inverse {
                f.write_str("⁻¹")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    NoRelationFound { max_len: usize },
    Relation { word: String, length: usize, #[serde(skip)] letters: Word },
}

impl OracleVerdict {
    pub fn relation(&self) -> Option<&Word> {
        match self {
            OracleVerdict::Relation { letters, .. } => Some(letters),
            OracleVerdict::NoRelationFound { .. } => None,
        }
    }
}

/// `N / D` with `N` an integer matrix: the identity test is `N == D·I`.
#[derive(Clone)]
struct IntMatrix {
    d: usize,
    num: Vec<BigInt>,
    den: BigInt,
}

impl IntMatrix {
    fn from_rational(m: &Matrix<BigRational>) -> Self {
        let den = m.data().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let num = m.data().iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect();
        IntMatrix { d: m.rows(), num, den }
    }

    fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.d;
        let mut num = vec![BigInt::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &self.num[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    num[i * d + j] += a * &other.num[k * d + j];
                }
            }
        }
        IntMatrix { d, num, den: &self.den * &other.den }
    }

    fn is_identity(&self) -> bool {
        let d = self.d;
        self.num.iter().enumerate().all(|(k, x)| if k % (d + 1) == 0 { *x == self.den } else { x.is_zero() })
    }
}

struct Search<'a> {
    letters: &'a [IntMatrix],
    bound: usize,
    best: Option<Vec<usize>>,
}

impl Search<'_> {
    fn descend(&mut self, prod: &IntMatrix, word: &mut Vec<usize>) {
        let prev = word.last().copied();
        for (l, m) in self.letters.iter().enumerate() {
            if prev == Some(l ^ 1) {
                continue;
            }
            if word.len() + 1 > self.bound {
                return;
            }
            let next = prod.mul(m);
            word.push(l);
            if next.is_identity() {
                self.best = Some(word.clone());
                self.bound = word.len() - 1;
            } else if word.len() < self.bound {
                self.descend(&next, word);
            }
            word.pop();
        }
    }
}

/// Enumerates reduced words of length `1..=max_len` (by length, then in the
/// letter order `a, a⁻¹, b, b⁻¹, …`) and returns the first one whose exact
/// product is the identity.
pub fn free_word_oracle_exact(gens: &[Matrix<BigRational>], max_len: usize) -> Result<OracleVerdict> {
    if gens.is_empty() {
        return Err(Error::Usage("no generators".into()));
    }
    if max_len > MAX_ORACLE_LEN {
        return Err(Error::Usage(format!("max_len {max_len} exceeds the budget of {MAX_ORACLE_LEN}")));
    }
    let d = gens[0].rows();
    // any prime works: the arithmetic is exact either way
    let q = PAdic::new(2)?;
    let mut letters = Vec::with_capacity(2 * gens.len());
    for g in gens {
        if !g.is_square() || g.rows() != d {
            return Err(Error::Dimension { expected: d, found: g.rows() });
        }
        letters.push(IntMatrix::from_rational(g));
        letters.push(IntMatrix::from_rational(&inverse(&q, g)?));
    }
    // each first letter is searched independently; the shortest hit wins,
    // ties going to the earlier first letter
    let hits: Vec<Option<Vec<usize>>> = (0..letters.len())
        .into_par_iter()
        .map(|first| {
            if max_len == 0 {
                return None;
            }
            let start = &letters[first];
            if start.is_identity() {
                return Some(vec![first]);
            }
            let mut s = Search { letters: &letters, bound: max_len, best: None };
            let mut word = vec![first];
            s.descend(start, &mut word);
            s.best
        })
        .collect();
    let best = hits.into_iter().flatten().min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(match best {
        None => OracleVerdict::NoRelationFound { max_len },
        Some(w) => {
            let letters = Word(w.into_iter().map(Letter::from_index).collect());
            OracleVerdict::Relation { word: letters.to_string(), length: letters.len(), letters }
        }
    })
}

/// As [`free_word_oracle_exact`], on parsed scalars; floating-point entries
/// are rejected because identity tests need exact arithmetic.
pub fn free_word_oracle(gens: &[Vec<Vec<Scalar>>], max_len: usize) -> Result<OracleVerdict> {
    let exact = gens
        .iter()
        .map(|rows| {
            let rows = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| match s {
                            Scalar::Rational(q) => Ok(q.clone()),
                            Scalar::Real(x) => Err(Error::Usage(format!(
                                "the relation oracle needs exact entries, got the float {x}"
                            ))),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Matrix::from_rows(rows))
        })
        .collect::<Result<Vec<_>>>()?;
    free_word_oracle_exact(&exact, max_len)
}

/// Exact product of a word in the generators.
pub fn evaluate_word(gens: &[Matrix<BigRational>], word: &Word) -> Result<Matrix<BigRational>> {
    let d = gens.first().ok_or_else(|| Error::Usage("no generators".into()))?.rows();
    let q = PAdic::new(2)?;
    let mut acc = Matrix::<BigRational>::identity(d);
    for l in &word.0 {
        let g = gens
            .get(l.generator)
            .ok_or_else(|| Error::Usage(format!("word uses generator {} of {}", l.generator, gens.len())))?;
        let m = if l.inverse { inverse(&q, g)? } else { g.clone() };
        acc = &acc * &m;
    }
    Ok(acc)
}
