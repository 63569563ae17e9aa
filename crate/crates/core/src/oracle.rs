//! Brute-force moments of free variables over non-crossing partitions.
//!
//! This module is the independent checker for everything the S-transform
//! route computes. Moments come from the moment-cumulant formula
//! `mₙ = Σ_{π ∈ NC(n)} Π_{V ∈ π} κ_{|V|}`, and mixed moments of two free
//! variables from the same sum restricted to partitions whose blocks never
//! mix the two variables (mixed free cumulants vanish).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::transforms::CumulantSequence;

/// Largest `n` accepted by the enumeration routines.
pub const MAX_ENUMERATION_ORDER: usize = 16;

/// A partition of `{1, …, n}` into sorted blocks, ordered by first element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonCrossingPartition {
    blocks: Vec<Vec<usize>>,
}

impl NonCrossingPartition {
    /// Wraps blocks without checking them; see [`Self::is_valid`].
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b.first().copied());
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Blocks are nonempty, disjoint and cover `{1..n}`.
    pub fn is_partition(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n + 1];
        for b in &self.blocks {
            if b.is_empty() {
                return false;
            }
            for &e in b {
                if e == 0 || e > n || seen[e] {
                    return false;
                }
                seen[e] = true;
            }
        }
        true
    }

    /// No `a < b < c < d` with `a, c` in one block and `b, d` in another.
    pub fn is_non_crossing(&self) -> bool {
        fn crosses(p: &[usize], q: &[usize]) -> bool {
            p.iter().any(|&a| {
                p.iter().filter(|&&c| c > a).any(|&c| {
                    q.iter().any(|&b| a < b && b < c) && q.iter().any(|&d| d > c)
                })
            })
        }
        self.blocks.iter().enumerate().all(|(i, p)| {
            self.blocks[i + 1..]
                .iter()
                .all(|q| !crosses(p, q) && !crosses(q, p))
        })
    }

    pub fn is_valid(&self) -> bool {
        self.is_partition() && self.is_non_crossing()
    }
}

impl fmt::Display for NonCrossingPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            f.write_str("{")?;
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if n > MAX_ENUMERATION_ORDER {
        return Err(Error::OrderTooLarge(n));
    }
    Ok(())
}

/// Calls `visit` once per non-crossing partition of `{1..n}` (blocks as
/// 1-based sorted lists).
///
/// Elements are placed left to right. Each either opens a new block or joins
/// one of the still-open blocks; joining a block closes every block opened
/// after it, which is exactly what keeps the result non-crossing.
pub fn for_each_nc<F: FnMut(&[Vec<usize>])>(n: usize, mut visit: F) -> Result<()> {
    check_order(n)?;
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut open: Vec<usize> = Vec::with_capacity(n);
    place(1, n, &mut blocks, &mut open, &mut visit);
    Ok(())
}

fn place<F: FnMut(&[Vec<usize>])>(
    next: usize,
    n: usize,
    blocks: &mut Vec<Vec<usize>>,
    open: &mut Vec<usize>,
    visit: &mut F,
) {
    if next > n {
        visit(blocks);
        return;
    }
    // Open a new block.
    blocks.push(vec![next]);
    open.push(blocks.len() - 1);
    place(next + 1, n, blocks, open, visit);
    open.pop();
    blocks.pop();
    // Join an open block, closing everything above it.
    for depth in (0..open.len()).rev() {
        let closed: Vec<usize> = open.drain(depth + 1..).collect();
        let target = open[depth];
        blocks[target].push(next);
        place(next + 1, n, blocks, open, visit);
        blocks[target].pop();
        open.extend(closed);
    }
}

/// All non-crossing partitions of `{1..n}`; there are `Catalan(n)` of them.
pub fn enumerate_nc(n: usize) -> Result<Vec<NonCrossingPartition>> {
    let mut out = Vec::new();
    for_each_nc(n, |blocks| {
        out.push(NonCrossingPartition::from_blocks(blocks.to_vec()))
    })?;
    Ok(out)
}

fn cumulant(k: &CumulantSequence, size: usize) -> Result<f64> {
    k.get(size).ok_or(Error::InsufficientOrder {
        needed: size,
        available: k.order(),
    })
}

/// `mₙ = Σ_{π ∈ NC(n)} Π_{V ∈ π} κ_{|V|}`, by explicit enumeration.
pub fn moment_from_cumulants_nc(k: &CumulantSequence, n: usize) -> Result<f64> {
    check_order(n)?;
    cumulant(k, n)?;
    let mut total = 0.0;
    for_each_nc(n, |blocks| {
        total += blocks
            .iter()
            .map(|b| k.as_slice()[b.len() - 1])
            .product::<f64>();
    })?;
    Ok(total)
}

/// Alternating words in two letters, parameterized by `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Word {
    /// `(xy)ⁿ`
    XyPower,
    /// `(yx)ⁿ`
    YxPower,
    /// `y(xy)ⁿ`
    YThenXyPower,
    /// `x(yx)ⁿ`
    XThenYxPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Letter {
    X,
    Y,
}

impl Word {
    fn letters(self, n: usize) -> Vec<Letter> {
        let (head, pair) = match self {
            Word::XyPower => (None, [Letter::X, Letter::Y]),
            Word::YxPower => (None, [Letter::Y, Letter::X]),
            Word::YThenXyPower => (Some(Letter::Y), [Letter::X, Letter::Y]),
            Word::XThenYxPower => (Some(Letter::X), [Letter::Y, Letter::X]),
        };
        let mut out: Vec<Letter> = head.into_iter().collect();
        for _ in 0..n {
            out.extend_from_slice(&pair);
        }
        out
    }

    /// Number of letters for parameter `n`.
    pub fn letter_count(self, n: usize) -> usize {
        match self {
            Word::XyPower | Word::YxPower => 2 * n,
            Word::YThenXyPower | Word::XThenYxPower => 2 * n + 1,
        }
    }
}

fn check_word(kx: &CumulantSequence, ky: &CumulantSequence, letters: &[Letter]) -> Result<()> {
    if letters.len() > MAX_ENUMERATION_ORDER {
        return Err(Error::OrderTooLarge(letters.len()));
    }
    let xs = letters.iter().filter(|&&l| l == Letter::X).count();
    let ys = letters.len() - xs;
    if xs > 0 {
        cumulant(kx, xs)?;
    }
    if ys > 0 {
        cumulant(ky, ys)?;
    }
    Ok(())
}

/// `φ(word)` for free `x`, `y` given by their cumulants: the sum over
/// non-crossing partitions of the word positions whose blocks are
/// single-coloured, weighted by the cumulants of the matching variable.
///
/// Evaluated by recursion on the block containing the first position of an
/// interval, memoized over intervals, so the cost is polynomial in the word
/// length.
pub fn mixed_moment_xy(
    kx: &CumulantSequence,
    ky: &CumulantSequence,
    word: Word,
    n: usize,
) -> Result<f64> {
    let letters = word.letters(n);
    check_word(kx, ky, &letters)?;
    if letters.is_empty() {
        return Ok(1.0);
    }
    Ok(IntervalSum::new(&letters, kx, ky).full())
}

/// Same quantity as [`mixed_moment_xy`] computed by enumerating every
/// non-crossing partition of the word positions and discarding those with a
/// mixed block. Exponential cost; meant for cross-checking.
pub fn mixed_moment_enumerated(
    kx: &CumulantSequence,
    ky: &CumulantSequence,
    word: Word,
    n: usize,
) -> Result<f64> {
    let letters = word.letters(n);
    check_word(kx, ky, &letters)?;
    if letters.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for_each_nc(letters.len(), |blocks| {
        let mut weight = 1.0;
        for b in blocks {
            let colour = letters[b[0] - 1];
            if b.iter().any(|&e| letters[e - 1] != colour) {
                return;
            }
            let k = match colour {
                Letter::X => kx,
                Letter::Y => ky,
            };
            weight *= k.as_slice()[b.len() - 1];
        }
        total += weight;
    })?;
    Ok(total)
}

/// Memo tables for the interval recursion.
///
/// `f(l, r)`: weighted sum over admissible partitions of positions `l..r`.
/// `b(p, r, k)`: position `p` belongs to the current block, `k` more block
/// elements must be chosen in `p+1..r`, gaps between chosen elements and the
/// tail after the last one are filled by independent partitions.
struct IntervalSum<'a> {
    letters: &'a [Letter],
    kx: &'a CumulantSequence,
    ky: &'a CumulantSequence,
    len: usize,
    f_memo: Vec<Option<f64>>,
    b_memo: Vec<Option<f64>>,
}

impl<'a> IntervalSum<'a> {
    fn new(letters: &'a [Letter], kx: &'a CumulantSequence, ky: &'a CumulantSequence) -> Self {
        let len = letters.len();
        Self {
            letters,
            kx,
            ky,
            len,
            f_memo: vec![None; (len + 1) * (len + 1)],
            b_memo: vec![None; len * (len + 1) * len.max(1)],
        }
    }

    fn full(&mut self) -> f64 {
        self.f(0, self.len)
    }

    fn kappa(&self, colour: Letter, size: usize) -> f64 {
        let k = match colour {
            Letter::X => self.kx,
            Letter::Y => self.ky,
        };
        k.as_slice()[size - 1]
    }

    fn f(&mut self, l: usize, r: usize) -> f64 {
        if l >= r {
            return 1.0;
        }
        let idx = l * (self.len + 1) + r;
        if let Some(v) = self.f_memo[idx] {
            return v;
        }
        let colour = self.letters[l];
        let available = self.letters[l..r].iter().filter(|&&c| c == colour).count();
        let mut total = 0.0;
        for size in 1..=available {
            let kappa = self.kappa(colour, size);
            if kappa != 0.0 {
                total += kappa * self.b(l, r, size - 1);
            }
        }
        self.f_memo[idx] = Some(total);
        total
    }

    fn b(&mut self, p: usize, r: usize, remaining: usize) -> f64 {
        if remaining == 0 {
            return self.f(p + 1, r);
        }
        let idx = (p * (self.len + 1) + r) * self.len + remaining;
        if let Some(v) = self.b_memo[idx] {
            return v;
        }
        let colour = self.letters[p];
        let mut total = 0.0;
        for q in p + 1..r {
            if self.letters[q] == colour {
                let gap = self.f(p + 1, q);
                if gap != 0.0 {
                    total += gap * self.b(q, r, remaining - 1);
                }
            }
        }
        self.b_memo[idx] = Some(total);
        total
    }
}
