//! Truncated formal Laurent series in half-integer powers of `z`.
//!
//! A [`HalfSeries`] indexes coefficients by *grade*: grade `g` stands for the
//! monomial `z^{g/2}`. Ordinary power series in `z` live on the even grades,
//! a `1/√z` pole is grade `-1`. Every series carries a truncation grade, the
//! largest grade whose coefficient is trusted; each operation derives the
//! truncation of its output from those of its inputs, so composition and
//! inversion never report coefficients they could not actually determine.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients smaller than this in absolute value are snapped to zero after
/// every operation, before the leading grade is determined.
pub const ZERO_SNAP: f64 = 1e-12;

/// Truncated formal series `Σ c_g z^{g/2}` for `min_grade ≤ g ≤ trunc_grade`.
///
/// For a nonzero series `coeffs[0]` is nonzero and
/// `coeffs.len() == trunc_grade - min_grade + 1`. The zero series has no
/// stored coefficients and `min_grade == trunc_grade + 1`: it is known to
/// vanish up to its truncation grade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHalfSeries")]
pub struct HalfSeries {
    min_grade: i32,
    coeffs: Vec<f64>,
    trunc_grade: i32,
}

#[derive(Deserialize)]
struct RawHalfSeries {
    min_grade: i32,
    coeffs: Vec<f64>,
    trunc_grade: i32,
}

impl TryFrom<RawHalfSeries> for HalfSeries {
    type Error = Error;

    fn try_from(raw: RawHalfSeries) -> Result<Self> {
        HalfSeries::new(raw.min_grade, raw.coeffs, raw.trunc_grade)
    }
}

impl HalfSeries {
    /// Builds a series from the coefficients of grades
    /// `min_grade..=trunc_grade`. Leading zeros are stripped.
    pub fn new(min_grade: i32, coeffs: Vec<f64>, trunc_grade: i32) -> Result<Self> {
        let expected = i64::from(trunc_grade) - i64::from(min_grade) + 1;
        if expected < 0 || expected as usize != coeffs.len() {
            return Err(Error::InvalidSeries(
                "coefficient count must equal trunc_grade - min_grade + 1",
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSeries("non-finite coefficient"));
        }
        Ok(Self::normalized(min_grade, coeffs, trunc_grade))
    }

    /// Series whose trusted window is exactly the given coefficients.
    pub fn from_coeffs(min_grade: i32, coeffs: Vec<f64>) -> Self {
        let trunc = min_grade + coeffs.len() as i32 - 1;
        Self::normalized(min_grade, coeffs, trunc)
    }

    /// Integer-power series `Σ c_n z^n`, known through `z^{len-1}`.
    pub fn from_power_coeffs(coeffs: &[f64]) -> Self {
        if coeffs.is_empty() {
            return Self::zero(-1);
        }
        let mut graded = vec![0.0; 2 * coeffs.len() - 1];
        for (n, &c) in coeffs.iter().enumerate() {
            graded[2 * n] = c;
        }
        Self::normalized(0, graded, 2 * (coeffs.len() as i32 - 1))
    }

    pub fn zero(trunc_grade: i32) -> Self {
        Self {
            min_grade: trunc_grade + 1,
            coeffs: Vec::new(),
            trunc_grade,
        }
    }

    pub fn one(trunc_grade: i32) -> Self {
        Self::monomial(0, 1.0, trunc_grade)
    }

    /// `coeff · z^{grade/2}`, trusted through `trunc_grade`.
    pub fn monomial(grade: i32, coeff: f64, trunc_grade: i32) -> Self {
        if trunc_grade < grade {
            return Self::zero(trunc_grade);
        }
        let mut coeffs = vec![0.0; (trunc_grade - grade + 1) as usize];
        coeffs[0] = coeff;
        Self::normalized(grade, coeffs, trunc_grade)
    }

    fn normalized(min_grade: i32, mut coeffs: Vec<f64>, trunc_grade: i32) -> Self {
        let len = (i64::from(trunc_grade) - i64::from(min_grade) + 1).max(0) as usize;
        coeffs.resize(len, 0.0);
        for c in coeffs.iter_mut() {
            if c.abs() < ZERO_SNAP {
                *c = 0.0;
            }
        }
        match coeffs.iter().position(|&c| c != 0.0) {
            Some(lead) => {
                coeffs.drain(..lead);
                Self {
                    min_grade: min_grade + lead as i32,
                    coeffs,
                    trunc_grade,
                }
            }
            None => Self::zero(trunc_grade),
        }
    }

    /// Leading grade; `trunc_grade + 1` for the zero series.
    pub fn min_grade(&self) -> i32 {
        self.min_grade
    }

    pub fn trunc_grade(&self) -> i32 {
        self.trunc_grade
    }

    /// Coefficients of grades `min_grade..=trunc_grade`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Leading coefficient, `None` for the zero series.
    pub fn leading(&self) -> Option<f64> {
        self.coeffs.first().copied()
    }

    /// Coefficient at `grade`, or `None` beyond the truncation grade.
    pub fn get(&self, grade: i32) -> Option<f64> {
        (grade <= self.trunc_grade).then(|| self.coeff(grade))
    }

    /// Coefficient at `grade`; zero outside the stored window, including
    /// beyond the truncation grade.
    pub fn coeff(&self, grade: i32) -> f64 {
        if grade < self.min_grade || grade > self.trunc_grade {
            0.0
        } else {
            self.coeffs[(grade - self.min_grade) as usize]
        }
    }

    /// `(grade, coefficient)` pairs over the stored window.
    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.min_grade + i as i32, c))
    }

    /// True when every odd grade vanishes and there is no negative grade,
    /// i.e. the series is an ordinary power series in `z`.
    pub fn is_integer_power(&self) -> bool {
        self.is_zero()
            || (self.min_grade >= 0 && self.terms().all(|(g, c)| g % 2 == 0 || c == 0.0))
    }

    /// True for an admissible moment series `ψ(z) = Σ_{n≥1} m_n z^n`: an
    /// integer-power series without constant term.
    pub fn is_moment_series(&self) -> bool {
        self.is_integer_power() && self.coeff(0) == 0.0
    }

    /// Coefficients `c_0, c_1, …` of `z^n` for `2n ≤ trunc_grade`.
    pub fn power_coeffs(&self) -> Vec<f64> {
        if self.trunc_grade < 0 {
            return Vec::new();
        }
        (0..=self.trunc_grade / 2).map(|n| self.coeff(2 * n)).collect()
    }

    /// Drops everything beyond `trunc_grade`.
    pub fn truncate(&self, trunc_grade: i32) -> Self {
        let t = trunc_grade.min(self.trunc_grade);
        Self::normalized(self.min_grade, self.coeffs.clone(), t)
    }

    /// Multiplication by `z^{grades/2}`.
    pub fn shift(&self, grades: i32) -> Self {
        Self {
            min_grade: self.min_grade + grades,
            coeffs: self.coeffs.clone(),
            trunc_grade: self.trunc_grade + grades,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::normalized(
            self.min_grade,
            self.coeffs.iter().map(|c| c * factor).collect(),
            self.trunc_grade,
        )
    }

    fn combine(&self, rhs: &Self, sign: f64) -> Self {
        let trunc = self.trunc_grade.min(rhs.trunc_grade);
        let min = self.min_grade.min(rhs.min_grade);
        if trunc < min {
            return Self::zero(trunc);
        }
        let out = (min..=trunc)
            .map(|g| self.coeff(g) + sign * rhs.coeff(g))
            .collect();
        Self::normalized(min, out, trunc)
    }

    fn product(&self, rhs: &Self) -> Self {
        let min = self.min_grade + rhs.min_grade;
        let trunc = (self.trunc_grade + rhs.min_grade).min(rhs.trunc_grade + self.min_grade);
        if self.is_zero() || rhs.is_zero() || trunc < min {
            return Self::zero(trunc);
        }
        let len = (trunc - min + 1) as usize;
        let mut out = vec![0.0; len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            for (j, b) in rhs.coeffs.iter().take(len - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::normalized(min, out, trunc)
    }

    /// Multiplicative inverse; the result has leading grade `-min_grade`.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.leading().ok_or(Error::NonInvertible)?;
        let n = self.coeffs.len();
        let mut b = vec![0.0; n];
        b[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * b[k - j]).sum();
            b[k] = -s / a0;
        }
        Ok(Self::normalized(
            -self.min_grade,
            b,
            self.trunc_grade - 2 * self.min_grade,
        ))
    }

    /// Division by `1 + z`, exact on the trusted window:
    /// `c_g = u_g - c_{g-2}`.
    pub fn div_one_plus_z(&self) -> Self {
        let mut out = self.coeffs.clone();
        for i in 2..out.len() {
            out[i] -= out[i - 2];
        }
        Self::normalized(self.min_grade, out, self.trunc_grade)
    }

    /// Multiplication by `(1 + z)/z`: grade `k` of the result is
    /// `c_{k+2} + c_k`.
    pub fn mul_one_plus_z_over_z(&self) -> Self {
        &self.shift(-2) + self
    }

    /// Formal substitution `self(inner(z))`.
    ///
    /// `self` must be an integer-power series with no negative powers and
    /// `inner` must have leading grade at least 1.
    pub fn compose(&self, inner: &HalfSeries) -> Result<Self> {
        if !self.is_zero() && self.min_grade < 0 {
            return Err(Error::UnsupportedLeadingGrade(self.min_grade));
        }
        if !self.is_integer_power() {
            return Err(Error::OuterNotIntegerPower);
        }
        let m = inner.min_grade;
        if m < 1 {
            return Err(Error::DivergentComposition(m));
        }
        let outer_terms = self.trunc_grade.div_euclid(2);
        let mut trunc = (outer_terms + 1) * m - 1;
        if let Some(first) = (1..=outer_terms).find(|&n| self.coeff(2 * n) != 0.0) {
            trunc = trunc.min(inner.trunc_grade + (first - 1) * m);
        }
        if trunc < 0 {
            return Ok(Self::zero(trunc));
        }
        let len = trunc as usize + 1;
        let inner_dense: Vec<f64> = (0..len as i32).map(|g| inner.coeff(g)).collect();
        let mut out = vec![0.0; len];
        out[0] = self.coeff(0);
        let mut power = vec![0.0; len];
        power[0] = 1.0;
        for n in 1..=outer_terms {
            if n * m > trunc {
                break;
            }
            power = truncated_product(&power, &inner_dense, len);
            let c = self.coeff(2 * n);
            if c != 0.0 {
                for (o, p) in out.iter_mut().zip(&power) {
                    *o += c * p;
                }
            }
        }
        Ok(Self::normalized(0, out, trunc))
    }

    /// Compositional inverse of an integer-power series with a nonzero
    /// linear term: the unique `g` with `self(g(z)) = z`.
    pub fn invert_unique(&self) -> Result<Self> {
        if !self.is_integer_power() {
            return Err(Error::NotIntegerPower);
        }
        if self.is_zero() {
            return Err(Error::NoUniqueInverse);
        }
        match self.min_grade {
            2 => {}
            g if g > 2 => return Err(Error::NoUniqueInverse),
            g => return Err(Error::UnsupportedLeadingGrade(g)),
        }
        let alpha = self.power_coeffs();
        let n = alpha.len() - 1;
        let beta = triangular_inverse(&alpha, 1, 1.0 / alpha[1], n);
        Ok(Self::from_power_coeffs(&beta))
    }

    /// The two compositional inverses in `√z` of
    /// `ψ(z) = α₂z² + α₃z³ + …` with `α₂ > 0`.
    ///
    /// The first returned branch has `β₁ = +1/√α₂`, the second `-1/√α₂`.
    /// Each is solved from its own leading coefficient through the triangular
    /// system `0 = 2α₂β₁β_{r-1} + (terms in β₁ … β_{r-2})`; the relation
    /// `β̃ₖ = (-1)ᵏβₖ` between them is a consequence, not an input.
    pub fn invert_two_branch(&self) -> Result<(Self, Self)> {
        if !self.is_integer_power() {
            return Err(Error::NotIntegerPower);
        }
        if self.is_zero() || self.min_grade > 4 {
            return Err(Error::DegenerateSecondMoment);
        }
        if self.min_grade < 4 {
            return Err(Error::UnsupportedLeadingGrade(self.min_grade));
        }
        let alpha = self.power_coeffs();
        let a2 = alpha[2];
        if a2 < 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let n_terms = alpha.len() - 2;
        let beta1 = 1.0 / a2.sqrt();
        let branch = |b1: f64| {
            let beta = triangular_inverse(&alpha, 2, b1, n_terms);
            Self::normalized(0, beta, n_terms as i32)
        };
        Ok((branch(beta1), branch(-beta1)))
    }

    /// The unique integer-power series `ψ` with `ψ(self(z)) = z`, for a
    /// series `self = β₁√z + β₂z + …` with `β₁ ≠ 0`. The result is trusted
    /// through `min(target_trunc, 2 (trunc_grade + 1))`.
    pub fn solve_outer_composition(&self, target_trunc: i32) -> Result<Self> {
        if self.is_zero() || self.min_grade != 1 {
            return Err(Error::UnsupportedLeadingGrade(self.min_grade));
        }
        let n_max = ((self.trunc_grade + 1).max(0) as usize)
            .min(target_trunc.div_euclid(2).max(0) as usize);
        let beta: Vec<f64> = (0..=n_max as i32).map(|k| self.coeff(k)).collect();
        // powers[n][d] = [w^d] χ(w)^n
        let mut powers = vec![vec![0.0; n_max + 1]; n_max + 1];
        powers[0][0] = 1.0;
        for n in 1..=n_max {
            powers[n] = truncated_product(&powers[n - 1], &beta, n_max + 1);
        }
        let mut alpha = vec![0.0; n_max + 1];
        for r in 1..=n_max {
            let known: f64 = (1..r).map(|n| alpha[n] * powers[n][r]).sum();
            let target = if r == 2 { 1.0 } else { 0.0 };
            alpha[r] = (target - known) / powers[r][r];
        }
        Ok(Self::from_power_coeffs(&alpha))
    }

    /// Largest coefficientwise difference over the overlap of the two
    /// trusted windows.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.min_grade.min(other.min_grade);
        let hi = self.trunc_grade.min(other.trunc_grade);
        (lo..=hi)
            .map(|g| (self.coeff(g) - other.coeff(g)).abs())
            .fold(0.0, f64::max)
    }

    /// Coefficientwise comparison over the overlap of the trusted windows,
    /// `|a - b| <= tol * max(1, |a|, |b|)`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let lo = self.min_grade.min(other.min_grade);
        let hi = self.trunc_grade.min(other.trunc_grade);
        (lo..=hi).all(|g| crate::close(self.coeff(g), other.coeff(g), tol))
    }
}

/// Product of two dense series starting at grade 0, truncated to `len` terms.
fn truncated_product(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `[w^d] Σ_n alpha[n] χ(w)^n` with `χ = Σ_k beta[k] w^k`, `beta[0] = 0`.
fn composed_coeff(alpha: &[f64], beta: &[f64], d: usize) -> f64 {
    let mut power = vec![0.0; d + 1];
    power[0] = 1.0;
    let mut acc = 0.0;
    for &a in alpha.iter().take(d + 1).skip(1) {
        power = truncated_product(&power, beta, d + 1);
        acc += a * power[d];
    }
    acc
}

/// Solves `F(χ(w)) = w^p` for `χ = β₁w + β₂w² + …`, where
/// `F(t) = Σ alpha[n] tⁿ` has leading power `p`, given the chosen root
/// `β₁` of `alpha[p] β₁^p = 1`. Returns `β_0 = 0, β_1, …, β_{n_terms}`.
fn triangular_inverse(alpha: &[f64], p: usize, beta1: f64, n_terms: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n_terms + 1];
    if n_terms == 0 {
        return beta;
    }
    beta[1] = beta1;
    let pivot = p as f64 * alpha[p] * beta1.powi(p as i32 - 1);
    for r in 2..=n_terms {
        // beta[r] is still zero here, so this is the part of the w^{r+p-1}
        // coefficient that does not involve the unknown.
        let known = composed_coeff(alpha, &beta[..=r], r + p - 1);
        beta[r] = -known / pivot;
    }
    beta
}

impl Add<&HalfSeries> for &HalfSeries {
    type Output = HalfSeries;

    fn add(self, rhs: &HalfSeries) -> HalfSeries {
        self.combine(rhs, 1.0)
    }
}

impl Sub<&HalfSeries> for &HalfSeries {
    type Output = HalfSeries;

    fn sub(self, rhs: &HalfSeries) -> HalfSeries {
        self.combine(rhs, -1.0)
    }
}

impl Mul<&HalfSeries> for &HalfSeries {
    type Output = HalfSeries;

    fn mul(self, rhs: &HalfSeries) -> HalfSeries {
        self.product(rhs)
    }
}

impl Add for HalfSeries {
    type Output = HalfSeries;

    fn add(self, rhs: HalfSeries) -> HalfSeries {
        &self + &rhs
    }
}

impl Sub for HalfSeries {
    type Output = HalfSeries;

    fn sub(self, rhs: HalfSeries) -> HalfSeries {
        &self - &rhs
    }
}

impl Mul for HalfSeries {
    type Output = HalfSeries;

    fn mul(self, rhs: HalfSeries) -> HalfSeries {
        &self * &rhs
    }
}

impl Neg for &HalfSeries {
    type Output = HalfSeries;

    fn neg(self) -> HalfSeries {
        self.scale(-1.0)
    }
}

impl Neg for HalfSeries {
    type Output = HalfSeries;

    fn neg(self) -> HalfSeries {
        -&self
    }
}

impl fmt::Display for HalfSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (g, c) in self.terms().filter(|&(_, c)| c != 0.0) {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match g {
                0 => write!(f, "{c}")?,
                g if g % 2 == 0 => write!(f, "{c}·z^{}", g / 2)?,
                g => write!(f, "{c}·z^({g}/2)")?,
            }
        }
        if !first {
            f.write_str(" + ")?;
        }
        if (self.trunc_grade + 1) % 2 == 0 {
            write!(f, "O(z^{})", (self.trunc_grade + 1) / 2)
        } else {
            write!(f, "O(z^({}/2))", self.trunc_grade + 1)
        }
    }
}
