//! Words over `{1,…,ℓ}` and the inverse branches of `τ(x) = ℓx mod 1`.
//!
//! A word `a = (a₁,…,a_n)` names the partition interval
//! `P(a) = ∩_{i=0}^{n-1} τ^{-i} P(a_{n-i})`: a point `y ∈ P(a)` has
//! `y ∈ P(a_n)`, `τy ∈ P(a_{n-1})`, …, `τ^{n-1}y ∈ P(a₁)`, so the symbols
//! read the itinerary backwards. The prefix `[a]_i = (a₁,…,a_i)` gives the
//! intermediate preimages `[a]_i(x) = τ^{n-i}(a(x))`, which obey
//!
//! ```text
//! [a]_i(x) = branch(a_i, [a]_{i-1}(x)) = (x + J_i(a)) / ℓ^i,
//! J_i(a)   = Σ_{k=1..i} (a_k − 1) ℓ^{k−1}.
//! ```
//!
//! The right-hand formula is affine in `x` on all of `ℝ`, which is what
//! lets branch sums extend continuously past the endpoints of `P(c)`.

use serde::{Deserialize, Serialize};

use super::system::reduce;
use crate::error::{Error, Result};

/// A finite word. Symbols are 1-based; the empty word is allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn new(symbols: Vec<u32>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    /// `[a]_i`.
    pub fn prefix(&self, i: usize) -> Word {
        Word(self.0[..i].to_vec())
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn check(&self, lap: u32) -> Result<()> {
        match self.0.iter().find(|&&k| k < 1 || k > lap) {
            Some(k) => Err(Error::InvalidParam(format!("symbol {k} outside 1..={lap}"))),
            None => Ok(()),
        }
    }

    /// The `index`-th word of `A^n` in lexicographic order with the last
    /// symbol varying fastest.
    pub fn from_index(lap: u32, n: usize, mut index: u64) -> Word {
        let mut v = vec![1u32; n];
        for slot in v.iter_mut().rev() {
            *slot = (index % lap as u64) as u32 + 1;
            index /= lap as u64;
        }
        Word(v)
    }

    /// Every word of length `n`, in [`Word::from_index`] order.
    pub fn all(lap: u32, n: usize) -> impl Iterator<Item = Word> {
        let count = (lap as u64).pow(n as u32);
        (0..count).map(move |i| Word::from_index(lap, n, i))
    }

    /// `J_n(a) / ℓ^n`, the left end of `P(a)` (exact for moderate `n`).
    pub fn left_endpoint(&self, lap: u32) -> f64 {
        word_point_lift(lap, self, 0.0)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// An eventually periodic infinite word `head · cycle · cycle · …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfiniteWord {
    pub head: Word,
    pub cycle: Vec<u32>,
}

impl InfiniteWord {
    /// `a · a_∞` with `a_∞ = (1,1,1,…)`.
    pub fn with_ones_tail(head: Word) -> Self {
        Self { head, cycle: vec![1] }
    }

    pub fn symbol(&self, i: usize) -> u32 {
        if i < self.head.len() {
            self.head.0[i]
        } else {
            self.cycle[(i - self.head.len()) % self.cycle.len()]
        }
    }

    /// `[a]_n`.
    pub fn truncate(&self, n: usize) -> Word {
        Word((0..n).map(|i| self.symbol(i)).collect())
    }
}

/// The branch of `τ^{-1}` landing in `P(k) = [(k−1)/ℓ, k/ℓ)`.
pub fn inverse_branch(lap: u32, k: u32, x: f64) -> f64 {
    debug_assert!((1..=lap).contains(&k));
    let x = reduce(x);
    let l = lap as f64;
    let y = (x + (k - 1) as f64) / l;
    let hi = k as f64 / l;
    if y >= hi {
        // Rounding pushed the point onto the next interval.
        f64::from_bits(hi.to_bits() - 1)
    } else {
        y
    }
}

/// `a(x)`: the unique `y ∈ P(a)` with `τ^{|a|}(y) = x`.
pub fn word_point(lap: u32, a: &Word, x: f64) -> f64 {
    a.0.iter().fold(reduce(x), |y, &k| inverse_branch(lap, k, y))
}

/// The affine branch `x ↦ (x + J_n(a)) / ℓ^n` applied to a lift `x ∈ ℝ`
/// without reduction mod 1.
pub fn word_point_lift(lap: u32, a: &Word, x: f64) -> f64 {
    let l = lap as f64;
    a.0.iter().fold(x, |y, &k| (y + (k - 1) as f64) / l)
}

/// Applies `τ^n`.
pub fn tau_pow(lap: u32, n: usize, x: f64) -> f64 {
    (0..n).fold(x, |y, _| reduce(lap as f64 * y))
}

/// `P(c)` or its three-interval enlargement `P_*(c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionInterval {
    pub word: Word,
    /// `x_c`, the left end of `P(c)`.
    pub left: f64,
    /// `ℓ^{−n}`.
    pub width: f64,
    pub star: bool,
}

impl PartitionInterval {
    pub fn new(lap: u32, word: Word) -> Self {
        let left = word.left_endpoint(lap);
        let width = (lap as f64).powi(-(word.len() as i32));
        Self { word, left, width, star: false }
    }

    pub fn starred(lap: u32, word: Word) -> Self {
        Self { star: true, ..Self::new(lap, word) }
    }

    /// The interval as a lift `[lo, hi]` on the real line. For the starred
    /// interval this is `[x_c − ℓ^{−n}, x_c + 2ℓ^{−n}]`, which may leave `[0,1)`.
    pub fn lift_bounds(&self) -> (f64, f64) {
        if self.star {
            (self.left - self.width, self.left + 2.0 * self.width)
        } else {
            (self.left, self.left + self.width)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = reduce(x);
        x >= self.left && x < self.left + self.width
    }

    /// Maps a circle point (or any lift of it) into the closure of the lift
    /// interval, or fails when no lift lies there.
    pub fn to_lift(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.lift_bounds();
        let tol = 1e-12;
        for shift in [0.0, -1.0, 1.0] {
            let z = x + shift;
            if z >= lo - tol && z <= hi + tol {
                return Ok(z);
            }
        }
        let z = reduce(x);
        for shift in [0.0, -1.0, 1.0] {
            let w = z + shift;
            if w >= lo - tol && w <= hi + tol {
                return Ok(w);
            }
        }
        Err(Error::OutsideStar { x, lo, hi })
    }
}
