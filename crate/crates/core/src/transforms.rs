//! Moment series, free cumulants and S-transforms.
//!
//! For a moment sequence `m₁ … m_N` the moment series is
//! `ψ(z) = Σ mₙ zⁿ`, `M = 1 + ψ`, and the free cumulant series `C` is tied to
//! it by `M(z) = 1 + C[z M(z)]`. The S-transform is `χ(z)(1+z)/z` with `χ` the
//! compositional inverse of `ψ`. When the mean vanishes `ψ` starts at `z²`,
//! `χ` becomes one of two series in `√z`, and so does `S`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{HalfSeries, ZERO_SNAP};
use crate::DEFAULT_TOL;

/// Moments `m₁ … m_N` of a distribution (`m₀ = 1` is implicit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMoments")]
pub struct MomentSequence {
    moments: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMoments {
    moments: Vec<f64>,
}

impl TryFrom<RawMoments> for MomentSequence {
    type Error = Error;

    fn try_from(raw: RawMoments) -> Result<Self> {
        MomentSequence::new(raw.moments)
    }
}

impl MomentSequence {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::ZeroOrder);
        }
        if moments.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidMomentSequence("non-finite moment"));
        }
        Ok(Self { moments })
    }

    /// `N`, the index of the last stored moment.
    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `m₁ … m_N`.
    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }

    /// `mₙ` with `m₀ = 1`; `None` beyond the order.
    pub fn get(&self, n: usize) -> Option<f64> {
        match n {
            0 => Some(1.0),
            n => self.moments.get(n - 1).copied(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments[0]
    }

    /// The first `order` moments. Asking for more than are stored is an
    /// error: missing moments are never filled with zeros.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        if order > self.order() {
            return Err(Error::InsufficientOrder {
                needed: order,
                available: self.order(),
            });
        }
        Ok(Self {
            moments: self.moments[..order].to_vec(),
        })
    }

    /// Positive semidefiniteness of the Hankel matrix `[m_{i+j}]`,
    /// `0 ≤ i, j ≤ depth`, by pivoted-free Cholesky with tolerance `tol`
    /// relative to the diagonal.
    pub fn is_hankel_psd(&self, depth: usize, tol: f64) -> Result<bool> {
        if 2 * depth > self.order() {
            return Err(Error::InsufficientOrder {
                needed: 2 * depth,
                available: self.order(),
            });
        }
        let size = depth + 1;
        let h = |i: usize, j: usize| self.get(i + j).unwrap_or(0.0);
        let mut l = vec![0.0; size * size];
        for j in 0..size {
            let mut d = h(j, j);
            for k in 0..j {
                d -= l[j * size + k] * l[j * size + k];
            }
            let scale = h(j, j).abs().max(1.0);
            if d < -tol * scale {
                return Ok(false);
            }
            if d <= tol * scale {
                // Singular direction: the rest of the column must vanish.
                for i in j + 1..size {
                    let mut s = h(i, j);
                    for k in 0..j {
                        s -= l[i * size + k] * l[j * size + k];
                    }
                    if s.abs() > tol.sqrt() * scale {
                        return Ok(false);
                    }
                }
                continue;
            }
            let d = d.sqrt();
            l[j * size + j] = d;
            for i in j + 1..size {
                let mut s = h(i, j);
                for k in 0..j {
                    s -= l[i * size + k] * l[j * size + k];
                }
                l[i * size + j] = s / d;
            }
        }
        Ok(true)
    }
}

/// Free cumulants `κ₁ … κ_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCumulants")]
pub struct CumulantSequence {
    cumulants: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCumulants {
    cumulants: Vec<f64>,
}

impl TryFrom<RawCumulants> for CumulantSequence {
    type Error = Error;

    fn try_from(raw: RawCumulants) -> Result<Self> {
        CumulantSequence::new(raw.cumulants)
    }
}

impl CumulantSequence {
    pub fn new(cumulants: Vec<f64>) -> Result<Self> {
        if cumulants.is_empty() {
            return Err(Error::ZeroOrder);
        }
        if cumulants.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidMomentSequence("non-finite cumulant"));
        }
        Ok(Self { cumulants })
    }

    pub fn order(&self) -> usize {
        self.cumulants.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.cumulants
    }

    /// `κₙ` for `1 ≤ n ≤ N`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.cumulants.get(i)).copied()
    }

    /// `C(z) = Σ κₙ zⁿ`.
    pub fn series(&self) -> HalfSeries {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.cumulants);
        HalfSeries::from_power_coeffs(&c)
    }

    /// `C(u)/u = Σ κ_{n+1} uⁿ`.
    pub fn series_over_u(&self) -> HalfSeries {
        HalfSeries::from_power_coeffs(&self.cumulants)
    }
}

/// Which S-transform construction applies to a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanClass {
    NonzeroMean,
    ZeroMean,
    DegenerateZero,
}

/// The S-transform of a variable: one power series when the mean is nonzero,
/// the pair `(S, S̃)` of series in `√z` when it vanishes, nothing when mean and
/// variance both vanish.
///
/// In the zero-mean case `primary` is the branch whose `1/√z` coefficient is
/// positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mean_class", rename_all = "snake_case")]
pub enum STransform {
    NonzeroMean {
        primary: HalfSeries,
    },
    ZeroMean {
        primary: HalfSeries,
        secondary: HalfSeries,
    },
    DegenerateZero,
}

impl STransform {
    pub fn mean_class(&self) -> MeanClass {
        match self {
            STransform::NonzeroMean { .. } => MeanClass::NonzeroMean,
            STransform::ZeroMean { .. } => MeanClass::ZeroMean,
            STransform::DegenerateZero => MeanClass::DegenerateZero,
        }
    }

    pub fn primary(&self) -> Option<&HalfSeries> {
        match self {
            STransform::NonzeroMean { primary } | STransform::ZeroMean { primary, .. } => {
                Some(primary)
            }
            STransform::DegenerateZero => None,
        }
    }

    pub fn secondary(&self) -> Option<&HalfSeries> {
        match self {
            STransform::ZeroMean { secondary, .. } => Some(secondary),
            _ => None,
        }
    }

    /// Product with the S-transform of a nonzero-mean variable, branch by
    /// branch.
    pub fn mul_nonzero(&self, other: &HalfSeries) -> STransform {
        match self {
            STransform::NonzeroMean { primary } => STransform::NonzeroMean {
                primary: primary * other,
            },
            STransform::ZeroMean { primary, secondary } => STransform::ZeroMean {
                primary: primary * other,
                secondary: secondary * other,
            },
            STransform::DegenerateZero => STransform::DegenerateZero,
        }
    }
}

/// `ψ(z) = Σ mₙ zⁿ`, trusted through `z^N`.
pub fn psi_from_moments(m: &MomentSequence) -> HalfSeries {
    let mut c = vec![0.0];
    c.extend_from_slice(m.as_slice());
    HalfSeries::from_power_coeffs(&c)
}

/// `M(z) = 1 + ψ(z)`.
pub fn moment_series(m: &MomentSequence) -> HalfSeries {
    let mut c = vec![1.0];
    c.extend_from_slice(m.as_slice());
    HalfSeries::from_power_coeffs(&c)
}

/// `P[s][j] = [z^j] M(z)^s` for `s, j ≤ n`, given `m₀ … m_n`.
fn power_table(m: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    table[0][0] = 1.0;
    for s in 1..=n {
        for j in 0..=n {
            table[s][j] = (0..=j).map(|i| m[i] * table[s - 1][j - i]).sum();
        }
    }
    table
}

/// Free cumulants from moments, by equating coefficients in
/// `M(z) = 1 + C[z M(z)]`:
/// `mₙ = Σ_{s=1}^{n} κ_s [z^{n-s}] M(z)^s`.
pub fn cumulants_from_moments(m: &MomentSequence) -> CumulantSequence {
    let n = m.order();
    let mut full = vec![1.0];
    full.extend_from_slice(m.as_slice());
    let table = power_table(&full, n);
    let mut kappa = vec![0.0; n + 1];
    for k in 1..=n {
        let known: f64 = (1..k).map(|s| kappa[s] * table[s][k - s]).sum();
        kappa[k] = full[k] - known;
    }
    CumulantSequence {
        cumulants: kappa[1..].to_vec(),
    }
}

/// Moments from free cumulants, the inverse of [`cumulants_from_moments`].
pub fn moments_from_cumulants(k: &CumulantSequence) -> MomentSequence {
    let n = k.order();
    let kappa = k.as_slice();
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    // table[s][j] = [z^j] M^s, filled column by column as moments appear.
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    for row in table.iter_mut() {
        row[0] = 1.0;
    }
    for j in 1..=n {
        // [z^{j-s}] M^s with s ≥ 1 only needs moments below j.
        m[j] = (1..=j).map(|s| kappa[s - 1] * table[s][j - s]).sum();
        for s in 1..=n {
            table[s][j] = (0..=j).map(|i| m[i] * table[s - 1][j - i]).sum();
        }
    }
    MomentSequence {
        moments: m[1..].to_vec(),
    }
}

fn chi_to_s(chi: &HalfSeries) -> HalfSeries {
    // γ_k = β_{k+2} + β_k
    chi.mul_one_plus_z_over_z()
}

fn s_to_chi(s: &HalfSeries) -> HalfSeries {
    s.shift(2).div_one_plus_z()
}

/// S-transform of a moment sequence, in whichever mean class applies.
pub fn s_transform(m: &MomentSequence) -> Result<STransform> {
    let psi = psi_from_moments(m);
    if m.mean().abs() >= ZERO_SNAP {
        let chi = psi.invert_unique()?;
        return Ok(STransform::NonzeroMean {
            primary: chi_to_s(&chi),
        });
    }
    let m2 = m.get(2).ok_or(Error::InsufficientOrder {
        needed: 2,
        available: m.order(),
    })?;
    if m2.abs() < ZERO_SNAP {
        return Ok(STransform::DegenerateZero);
    }
    if m2 < 0.0 {
        return Err(Error::NotMomentSequence("negative second moment"));
    }
    let (chi, chi_t) = psi.invert_two_branch()?;
    Ok(STransform::ZeroMean {
        primary: chi_to_s(&chi),
        secondary: chi_to_s(&chi_t),
    })
}

fn psi_from_s_branch(s: &HalfSeries, order: usize, zero_mean: bool) -> Result<HalfSeries> {
    let chi = s_to_chi(s);
    if zero_mean {
        chi.solve_outer_composition(2 * order as i32)
    } else {
        chi.invert_unique()
    }
}

fn read_moments(psi: &HalfSeries, order: usize) -> Result<MomentSequence> {
    let available = (psi.trunc_grade().max(0) / 2) as usize;
    if available < order {
        return Err(Error::InsufficientOrder {
            needed: order,
            available,
        });
    }
    MomentSequence::new((1..=order as i32).map(|n| psi.coeff(2 * n)).collect())
}

/// Moments recovered through each branch separately. For a nonzero-mean
/// transform both entries are the same computation.
pub fn branch_moments(
    s: &STransform,
    order: usize,
) -> Result<(MomentSequence, MomentSequence)> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    match s {
        STransform::NonzeroMean { primary } => {
            let m = read_moments(&psi_from_s_branch(primary, order, false)?, order)?;
            Ok((m.clone(), m))
        }
        STransform::ZeroMean { primary, secondary } => {
            let a = read_moments(&psi_from_s_branch(primary, order, true)?, order)?;
            let b = read_moments(&psi_from_s_branch(secondary, order, true)?, order)?;
            Ok((a, b))
        }
        STransform::DegenerateZero => Err(Error::DegenerateMean),
    }
}

/// Largest coefficientwise difference between two moment sequences over
/// their common order.
pub fn max_moment_diff(a: &MomentSequence, b: &MomentSequence) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Moments `m₁ … m_order` from an S-transform, with the default tolerance
/// for the branch agreement check.
pub fn moments_from_s(s: &STransform, order: usize) -> Result<MomentSequence> {
    moments_from_s_with_tol(s, order, DEFAULT_TOL)
}

/// Moments from an S-transform. In the zero-mean case both branches are
/// inverted and must agree to `tol` (relative to `max(1, |mₙ|)`).
pub fn moments_from_s_with_tol(s: &STransform, order: usize, tol: f64) -> Result<MomentSequence> {
    let (a, b) = branch_moments(s, order)?;
    let consistent = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .all(|(x, y)| crate::close(*x, *y, tol));
    if !consistent {
        return Err(Error::BranchInconsistency(max_moment_diff(&a, &b)));
    }
    Ok(a)
}
