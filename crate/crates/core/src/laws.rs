//! Closed-form laws: semicircle, free Poisson, shifted free Poisson and
//! point masses.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::HalfSeries;
use crate::transforms::{moments_from_cumulants, CumulantSequence, MomentSequence, STransform};

/// A named law with its parameters, serialized as e.g.
/// `{"kind": "Semicircle", "variance": 1.0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LawSpec {
    Semicircle { variance: f64 },
    FreePoisson { rate: f64 },
    /// `FreePoisson(rate) − shift`; mean zero when `shift == rate`.
    ShiftedFreePoisson { rate: f64, shift: f64 },
    PointMass { c: f64 },
}

impl LawSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match *self {
            LawSpec::Semicircle { variance } if !(finite(variance) && variance > 0.0) => {
                Err(Error::InvalidLaw("semicircle variance must be positive"))
            }
            LawSpec::FreePoisson { rate } if !(finite(rate) && rate > 0.0) => {
                Err(Error::InvalidLaw("free Poisson rate must be positive"))
            }
            LawSpec::ShiftedFreePoisson { rate, shift }
                if !(finite(rate) && rate > 0.0 && finite(shift)) =>
            {
                Err(Error::InvalidLaw(
                    "shifted free Poisson needs a positive rate and a finite shift",
                ))
            }
            LawSpec::PointMass { c } if !finite(c) => {
                Err(Error::InvalidLaw("point mass location must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LawSpec::Semicircle { .. } => "Semicircle",
            LawSpec::FreePoisson { .. } => "FreePoisson",
            LawSpec::ShiftedFreePoisson { .. } => "ShiftedFreePoisson",
            LawSpec::PointMass { .. } => "PointMass",
        }
    }
}

/// Free cumulants `κ₁ … κ_order` of a law.
pub fn cumulants_of(law: &LawSpec, order: usize) -> Result<CumulantSequence> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    law.validate()?;
    let mut k = vec![0.0; order];
    match *law {
        LawSpec::Semicircle { variance } => {
            if order >= 2 {
                k[1] = variance;
            }
        }
        LawSpec::FreePoisson { rate } => k.fill(rate),
        LawSpec::ShiftedFreePoisson { rate, shift } => {
            k.fill(rate);
            k[0] = rate - shift;
        }
        LawSpec::PointMass { c } => k[0] = c,
    }
    CumulantSequence::new(k)
}

/// Moments `m₁ … m_order` of a law.
pub fn moments_of(law: &LawSpec, order: usize) -> Result<MomentSequence> {
    Ok(moments_from_cumulants(&cumulants_of(law, order)?))
}

/// `Σ_k binom(1/2, k) t^k` through `t^n`.
fn sqrt_one_plus(n: usize) -> HalfSeries {
    let mut c = Vec::with_capacity(n + 1);
    let mut term = 1.0;
    for k in 0..=n {
        c.push(term);
        term *= (0.5 - k as f64) / (k as f64 + 1.0);
    }
    HalfSeries::from_power_coeffs(&c)
}

/// Series expansion of the closed-form S-transform, trusted through `z^order`.
///
/// * Semicircle(σ²): `1/(σ√z)` on the positive branch, `-1/(σ√z)` on the
///   other.
/// * FreePoisson(λ): `1/(λ + z)`.
/// * ShiftedFreePoisson(λ, α):
///   `(−(z + λ − α) + √((z + λ − α)² + 4αz)) / (2αz)`, the root of
///   `αz S² + (z + λ − α) S − 1 = 0` that is regular at `z = 0` (or has the
///   `1/√z` pole with positive coefficient when `α = λ`). `α = 0` is routed
///   to the free Poisson formula.
pub fn s_closed_form(law: &LawSpec, order: usize) -> Result<STransform> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    law.validate()?;
    let trunc = 2 * order as i32;
    match *law {
        LawSpec::Semicircle { variance } => {
            let g = 1.0 / variance.sqrt();
            Ok(STransform::ZeroMean {
                primary: HalfSeries::monomial(-1, g, trunc),
                secondary: HalfSeries::monomial(-1, -g, trunc),
            })
        }
        LawSpec::FreePoisson { rate } => Ok(STransform::NonzeroMean {
            primary: free_poisson_s(rate, order),
        }),
        LawSpec::ShiftedFreePoisson { rate, shift: 0.0 } => {
            Ok(STransform::NonzeroMean {
                primary: free_poisson_s(rate, order),
            })
        }
        LawSpec::ShiftedFreePoisson { rate, shift } if rate == shift => {
            // −1/(2λ) + (λz)^{-1/2} √(1 + z/(4λ))
            let inner = HalfSeries::monomial(2, 1.0 / (4.0 * rate), 2 * order as i32 + 2);
            let root = sqrt_one_plus(order + 1).compose(&inner)?;
            let pole = root.shift(-1).scale(1.0 / rate.sqrt());
            let constant = HalfSeries::monomial(0, -0.5 / rate, trunc);
            let primary = (&pole + &constant).truncate(trunc);
            let secondary = (&(-&pole) + &constant).truncate(trunc);
            Ok(STransform::ZeroMean { primary, secondary })
        }
        LawSpec::ShiftedFreePoisson { rate, shift } => {
            // With d = λ − α: √((z + d)² + 4αz) = d √(1 + u),
            // u = (z² + 2(λ + α) z) / d².
            let d = rate - shift;
            let n = order as i32 + 1;
            let u = HalfSeries::from_power_coeffs(&[
                0.0,
                2.0 * (rate + shift) / (d * d),
                1.0 / (d * d),
            ]);
            let u = HalfSeries::new(0, extend(u.coeffs(), u.min_grade(), 2 * n), 2 * n)?;
            let root = sqrt_one_plus(n as usize).compose(&u)?.scale(d);
            let linear = HalfSeries::from_power_coeffs(&[d, 1.0]);
            let linear = HalfSeries::new(0, extend(linear.coeffs(), 0, 2 * n), 2 * n)?;
            let numerator = &root - &linear;
            let primary = numerator.shift(-2).scale(1.0 / (2.0 * shift)).truncate(trunc);
            Ok(STransform::NonzeroMean { primary })
        }
        LawSpec::PointMass { .. } => Err(Error::NoClosedForm("PointMass")),
    }
}

/// Dense coefficients of grades `0..=trunc` for a series stored from
/// `min_grade`, padding with exact zeros (the input is a polynomial).
fn extend(coeffs: &[f64], min_grade: i32, trunc: i32) -> Vec<f64> {
    let mut out = vec![0.0; trunc as usize + 1];
    for (i, &c) in coeffs.iter().enumerate() {
        let g = min_grade as usize + i;
        if g < out.len() {
            out[g] = c;
        }
    }
    out
}

fn free_poisson_s(rate: f64, order: usize) -> HalfSeries {
    // 1/(λ + z) = (1/λ) Σ (−z/λ)^k
    let c: Vec<f64> = (0..=order)
        .map(|k| (-1.0f64).powi(k as i32) / rate.powi(k as i32 + 1))
        .collect();
    HalfSeries::from_power_coeffs(&c)
}
