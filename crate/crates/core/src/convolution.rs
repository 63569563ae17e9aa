//! Free multiplicative convolution of moment sequences.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{mixed_moment_xy, Word};
use crate::series::{HalfSeries, ZERO_SNAP};
use crate::transforms::{
    branch_moments, cumulants_from_moments, max_moment_diff, moment_series, s_transform,
    CumulantSequence, MomentSequence, STransform,
};
use crate::DEFAULT_TOL;

/// Which mean configuration the factors were in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    BothNonzero,
    OneZeroMean,
    BothZeroMean,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::BothNonzero => "both_nonzero",
            CaseTag::OneZeroMean => "one_zero_mean",
            CaseTag::BothZeroMean => "both_zero_mean",
        }
    }
}

/// Moments of `xy` together with how they were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionResult {
    #[serde(flatten)]
    pub moments: MomentSequence,
    pub case_tag: CaseTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_product: Option<STransform>,
    /// Largest difference between the moments recovered through the two
    /// branches (one zero-mean factor only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_residual: Option<f64>,
}

fn is_zero_mean(m: &MomentSequence) -> bool {
    m.mean().abs() < ZERO_SNAP
}

/// Validates a zero-mean factor. Returns `true` when it is the zero
/// variable (every moment vanishes).
fn zero_mean_is_null(m: &MomentSequence) -> Result<bool> {
    let m2 = m.get(2).ok_or(Error::InsufficientOrder {
        needed: 2,
        available: m.order(),
    })?;
    if m2 < -ZERO_SNAP {
        return Err(Error::InvalidMomentSequence(
            "zero-mean factor with negative second moment",
        ));
    }
    if m2.abs() >= ZERO_SNAP {
        return Ok(false);
    }
    if m.as_slice().iter().all(|v| v.abs() < ZERO_SNAP) {
        Ok(true)
    } else {
        Err(Error::InvalidMomentSequence(
            "zero-mean factor with vanishing second moment but nonzero higher moments",
        ))
    }
}

fn zeros(order: usize) -> Result<MomentSequence> {
    MomentSequence::new(alloc::vec![0.0; order])
}

/// `m₁ … m_order` of `xy` for free `x`, `y`, with the default branch
/// agreement tolerance.
pub fn free_mult_convolve(
    mx: &MomentSequence,
    my: &MomentSequence,
    order: usize,
) -> Result<ConvolutionResult> {
    free_mult_convolve_with_tol(mx, my, order, DEFAULT_TOL)
}

/// As [`free_mult_convolve`], failing with [`Error::BranchInconsistency`] if
/// the two branches disagree by more than `tol` (relative to
/// `max(1, |mₙ|)`).
pub fn free_mult_convolve_with_tol(
    mx: &MomentSequence,
    my: &MomentSequence,
    order: usize,
    tol: f64,
) -> Result<ConvolutionResult> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    let need = order.max(2);
    for m in [mx, my] {
        if m.order() < need {
            return Err(Error::InsufficientOrder {
                needed: need,
                available: m.order(),
            });
        }
    }
    let mx = mx.truncated(need)?;
    let my = my.truncated(need)?;

    let (x, y) = match (is_zero_mean(&mx), is_zero_mean(&my)) {
        (false, false) => {
            let sx = s_transform(&mx)?;
            let sy = s_transform(&my)?;
            let product = sx.mul_nonzero(sy.primary().ok_or(Error::DegenerateMean)?);
            let (m, _) = branch_moments(&product, order)?;
            return Ok(ConvolutionResult {
                moments: m,
                case_tag: CaseTag::BothNonzero,
                s_product: Some(product),
                branch_residual: None,
            });
        }
        (true, true) => {
            zero_mean_is_null(&mx)?;
            zero_mean_is_null(&my)?;
            return Ok(ConvolutionResult {
                moments: zeros(order)?,
                case_tag: CaseTag::BothZeroMean,
                s_product: None,
                branch_residual: None,
            });
        }
        // xy and yx have the same moments, so put the zero-mean factor first.
        (true, false) => (mx, my),
        (false, true) => (my, mx),
    };

    if zero_mean_is_null(&x)? {
        return Ok(ConvolutionResult {
            moments: zeros(order)?,
            case_tag: CaseTag::OneZeroMean,
            s_product: None,
            branch_residual: None,
        });
    }
    let sx = s_transform(&x)?;
    let sy = s_transform(&y)?;
    let product = sx.mul_nonzero(sy.primary().ok_or(Error::DegenerateMean)?);
    let (a, b) = branch_moments(&product, order)?;
    let residual = max_moment_diff(&a, &b);
    let agree = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .all(|(p, q)| crate::close(*p, *q, tol));
    if !agree {
        return Err(Error::BranchInconsistency(residual));
    }
    Ok(ConvolutionResult {
        moments: a,
        case_tag: CaseTag::OneZeroMean,
        s_product: Some(product),
        branch_residual: Some(residual),
    })
}

/// `φ((xy)²) = φ(x²)φ(y)² + φ(x)²φ(y²) − φ(x)²φ(y)²`.
pub fn second_moment_identity(mx: &MomentSequence, my: &MomentSequence) -> Result<f64> {
    let get = |m: &MomentSequence, n: usize| {
        m.get(n).ok_or(Error::InsufficientOrder {
            needed: n,
            available: m.order(),
        })
    };
    let (x1, x2) = (get(mx, 1)?, get(mx, 2)?);
    let (y1, y2) = (get(my, 1)?, get(my, 2)?);
    Ok(x2 * y1 * y1 + x1 * x1 * y2 - x1 * x1 * y1 * y1)
}

/// Series of mixed moments built from the oracle:
///
/// * `m1 = Σ φ(y(xy)ⁿ) zⁿ` and `m2 = Σ φ(x(yx)ⁿ) zⁿ` for `n < order`,
/// * `m_xy = 1 + Σ φ((xy)ⁿ) zⁿ` and `m_yx` likewise for `n ≤ order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliarySeries {
    pub m1: HalfSeries,
    pub m2: HalfSeries,
    pub m_xy: HalfSeries,
    pub m_yx: HalfSeries,
}

fn oracle_inputs(
    mx: &MomentSequence,
    my: &MomentSequence,
    order: usize,
) -> Result<(CumulantSequence, CumulantSequence)> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    Ok((
        cumulants_from_moments(&mx.truncated(order)?),
        cumulants_from_moments(&my.truncated(order)?),
    ))
}

fn word_series(
    kx: &CumulantSequence,
    ky: &CumulantSequence,
    word: Word,
    range: core::ops::Range<usize>,
    constant: Option<f64>,
) -> Result<HalfSeries> {
    let mut c = Vec::with_capacity(range.end + 1);
    if let Some(c0) = constant {
        c.push(c0);
    }
    for n in range {
        c.push(mixed_moment_xy(kx, ky, word, n)?);
    }
    Ok(HalfSeries::from_power_coeffs(&c))
}

/// Auxiliary series of the pair from `order` moments of each factor.
pub fn auxiliary_series(
    mx: &MomentSequence,
    my: &MomentSequence,
    order: usize,
) -> Result<AuxiliarySeries> {
    let (kx, ky) = oracle_inputs(mx, my, order)?;
    Ok(AuxiliarySeries {
        m1: word_series(&kx, &ky, Word::YThenXyPower, 0..order, None)?,
        m2: word_series(&kx, &ky, Word::XThenYxPower, 0..order, None)?,
        m_xy: word_series(&kx, &ky, Word::XyPower, 1..order + 1, Some(1.0))?,
        m_yx: word_series(&kx, &ky, Word::YxPower, 1..order + 1, Some(1.0))?,
    })
}

/// Largest coefficient difference of one identity and the last grade
/// (in units of `√z`) over which it was compared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    pub through_grade: i32,
}

impl IdentityResidual {
    fn between(a: &HalfSeries, b: &HalfSeries) -> Self {
        IdentityResidual {
            residual: a.max_abs_diff(b),
            through_grade: a.trunc_grade().min(b.trunc_grade()),
        }
    }
}

/// Residuals of the identities tying the auxiliary series together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub order: usize,
    /// `M_xy = C_y[z M₂] + 1`.
    pub mxy_from_cy: IdentityResidual,
    /// `M_xy = M_yx`.
    pub mxy_symmetry: IdentityResidual,
    /// `M₁ = (C_y(u)/u)[z M₂] · M_xy`.
    pub m1_identity: IdentityResidual,
    /// `M₂ = (C_x(u)/u)[z M₁] · M_xy`.
    pub m2_identity: IdentityResidual,
    /// `M = 1 + C[z M]` for each factor separately.
    pub moment_cumulant: IdentityResidual,
}

impl IdentityReport {
    pub fn residuals(&self) -> [(&'static str, IdentityResidual); 5] {
        [
            ("mxy_from_cy", self.mxy_from_cy),
            ("mxy_symmetry", self.mxy_symmetry),
            ("m1_identity", self.m1_identity),
            ("m2_identity", self.m2_identity),
            ("moment_cumulant", self.moment_cumulant),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals()
            .iter()
            .map(|(_, r)| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.residuals().iter().all(|(_, r)| r.residual < tol)
    }
}

/// Computes every auxiliary series from oracle data and reports how far each
/// identity is from holding, coefficientwise.
pub fn verify_proof_identities(
    mx: &MomentSequence,
    my: &MomentSequence,
    order: usize,
) -> Result<IdentityReport> {
    let aux = auxiliary_series(mx, my, order)?;
    let (kx, ky) = oracle_inputs(mx, my, order)?;
    let one = HalfSeries::one(2 * order as i32);

    let z_m1 = aux.m1.shift(2);
    let z_m2 = aux.m2.shift(2);

    let cy_of = ky.series().compose(&z_m2)?;
    let mxy_from_cy = IdentityResidual::between(&aux.m_xy, &(&cy_of + &one));
    let mxy_symmetry = IdentityResidual::between(&aux.m_xy, &aux.m_yx);

    let m1_rhs = &ky.series_over_u().compose(&z_m2)? * &aux.m_xy;
    let m1_identity = IdentityResidual::between(&aux.m1, &m1_rhs);
    let m2_rhs = &kx.series_over_u().compose(&z_m1)? * &aux.m_xy;
    let m2_identity = IdentityResidual::between(&aux.m2, &m2_rhs);

    let mut moment_cumulant = IdentityResidual {
        residual: 0.0,
        through_grade: i32::MAX,
    };
    for (m, k) in [(mx.truncated(order)?, &kx), (my.truncated(order)?, &ky)] {
        let series = moment_series(&m);
        let rhs = &k.series().compose(&series.shift(2))? + &one;
        let r = IdentityResidual::between(&series, &rhs);
        moment_cumulant.residual = moment_cumulant.residual.max(r.residual);
        moment_cumulant.through_grade = moment_cumulant.through_grade.min(r.through_grade);
    }

    Ok(IdentityReport {
        order,
        mxy_from_cy,
        mxy_symmetry,
        m1_identity,
        m2_identity,
        moment_cumulant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{moments_of, LawSpec};
    use alloc::vec;

    const TOL: f64 = 1e-9;

    fn ms(v: &[f64]) -> MomentSequence {
        MomentSequence::new(v.to_vec()).unwrap()
    }

    fn law(l: LawSpec, order: usize) -> MomentSequence {
        moments_of(&l, order).unwrap()
    }

    const SEMI: LawSpec = LawSpec::Semicircle { variance: 1.0 };
    const FP: LawSpec = LawSpec::FreePoisson { rate: 1.0 };
    const UNIT: LawSpec = LawSpec::PointMass { c: 1.0 };

    fn test_laws() -> Vec<LawSpec> {
        vec![
            SEMI,
            FP,
            UNIT,
            LawSpec::Semicircle { variance: 2.0 },
            LawSpec::FreePoisson { rate: 0.5 },
            LawSpec::ShiftedFreePoisson { rate: 1.0, shift: 1.0 },
            LawSpec::ShiftedFreePoisson { rate: 1.0, shift: -1.0 },
            LawSpec::PointMass { c: -1.5 },
        ]
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!(crate::close(*x, *y, tol), "index {i}: {x} vs {y}\n{a:?}\n{b:?}");
        }
    }

    #[test]
    fn semicircle_times_free_poisson() {
        let r = free_mult_convolve(&law(SEMI, 6), &law(FP, 6), 6).unwrap();
        assert_eq!(r.case_tag, CaseTag::OneZeroMean);
        assert_close(r.moments.as_slice(), &[0.0, 1.0, 0.0, 4.0, 0.0, 22.0], TOL);
        assert!(r.branch_residual.unwrap() < TOL);
    }

    #[test]
    fn both_zero_mean_is_zero() {
        let r = free_mult_convolve(&law(SEMI, 6), &law(SEMI, 6), 6).unwrap();
        assert_eq!(r.case_tag, CaseTag::BothZeroMean);
        assert!(r.s_product.is_none());
        assert!(r.moments.as_slice().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn unit_is_identity() {
        let r = free_mult_convolve(&law(UNIT, 4), &law(FP, 4), 4).unwrap();
        assert_eq!(r.case_tag, CaseTag::BothNonzero);
        assert_close(r.moments.as_slice(), &[1.0, 2.0, 5.0, 14.0], TOL);
        for l in test_laws() {
            let m = law(l, 8);
            for (a, b) in [(&law(UNIT, 8), &m), (&m, &law(UNIT, 8))] {
                let r = free_mult_convolve(a, b, 8).unwrap();
                assert_close(r.moments.as_slice(), m.as_slice(), 1e-8);
            }
        }
    }

    #[test]
    fn pathological_product_is_not_moment_series() {
        let s = HalfSeries::monomial(-1, 1.0, 10);
        let product = &s * &s;
        assert_eq!(product.min_grade(), -2);
        assert!(!product.is_moment_series());
    }

    #[test]
    fn matches_oracle_and_is_symmetric() {
        let order = 8;
        for a in test_laws() {
            for b in test_laws() {
                let (ma, mb) = (law(a, order), law(b, order));
                let r = free_mult_convolve(&ma, &mb, order).unwrap();
                let flipped = free_mult_convolve(&mb, &ma, order).unwrap();
                assert_eq!(r.case_tag, flipped.case_tag);
                assert_close(r.moments.as_slice(), flipped.moments.as_slice(), 1e-8);
                let ka = cumulants_from_moments(&ma);
                let kb = cumulants_from_moments(&mb);
                for n in 1..=order {
                    let oracle = mixed_moment_xy(&ka, &kb, Word::XyPower, n).unwrap();
                    let got = r.moments.as_slice()[n - 1];
                    assert!(crate::close(got, oracle, 1e-8), "{a:?} ⊠ {b:?}, n={n}: {got} vs {oracle}");
                }
                if r.case_tag == CaseTag::OneZeroMean {
                    let (x, y) = if is_zero_mean(&ma) { (&ma, &mb) } else { (&mb, &ma) };
                    let expected = x.as_slice()[1] * y.mean() * y.mean();
                    assert!(r.moments.as_slice()[0].abs() < TOL);
                    assert!(crate::close(r.moments.as_slice()[1], expected, TOL));
                }
                let m2 = second_moment_identity(&ma, &mb).unwrap();
                assert!(crate::close(r.moments.as_slice()[1], m2, 1e-9));
            }
        }
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(second_moment_identity(&ms(&[0.0, 1.0]), &ms(&[1.0, 2.0])).unwrap(), 1.0);
        assert_eq!(second_moment_identity(&ms(&[1.0, 1.0]), &ms(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(second_moment_identity(&ms(&[2.0, 5.0]), &ms(&[3.0, 10.0])).unwrap(), 49.0);
        assert!(second_moment_identity(&ms(&[2.0]), &ms(&[3.0, 10.0])).is_err());
    }

    #[test]
    fn errors() {
        let bad = ms(&[0.0, -1.0, 0.0]);
        let fp = law(FP, 3);
        assert!(matches!(
            free_mult_convolve(&bad, &fp, 3),
            Err(Error::InvalidMomentSequence(_))
        ));
        let flat_but_not_null = ms(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            free_mult_convolve(&fp, &flat_but_not_null, 3),
            Err(Error::InvalidMomentSequence(_))
        ));
        assert!(matches!(
            free_mult_convolve(&fp, &law(SEMI, 2), 3),
            Err(Error::InsufficientOrder { .. })
        ));
        assert_eq!(free_mult_convolve(&fp, &fp, 0), Err(Error::ZeroOrder));
    }

    #[test]
    fn zero_variable() {
        let zero = law(LawSpec::PointMass { c: 0.0 }, 6);
        let r = free_mult_convolve(&zero, &law(FP, 6), 6).unwrap();
        assert_eq!(r.case_tag, CaseTag::OneZeroMean);
        assert!(r.moments.as_slice().iter().all(|&m| m == 0.0));
        let r = free_mult_convolve(&zero, &law(SEMI, 6), 6).unwrap();
        assert_eq!(r.case_tag, CaseTag::BothZeroMean);
    }

    #[test]
    fn auxiliary_examples() {
        let aux = auxiliary_series(&law(UNIT, 6), &law(UNIT, 6), 6).unwrap();
        for s in [&aux.m1, &aux.m2] {
            assert_eq!(s.power_coeffs(), vec![1.0; 6]);
        }
        let aux = auxiliary_series(&law(SEMI, 8), &law(FP, 8), 8).unwrap();
        assert!((aux.m1.coeff(0) - 1.0).abs() < TOL);
        assert!(aux.m2.coeff(0).abs() < TOL);
        assert!((aux.m2.coeff(2) - 1.0).abs() < TOL);
        assert_eq!(aux.m_xy.trunc_grade(), 16);
    }

    #[test]
    fn proof_identities_hold() {
        let pairs = [
            (UNIT, UNIT),
            (SEMI, FP),
            (FP, LawSpec::ShiftedFreePoisson { rate: 1.0, shift: -1.0 }),
            (UNIT, FP),
            (FP, LawSpec::ShiftedFreePoisson { rate: 1.0, shift: 1.0 }),
            (LawSpec::Semicircle { variance: 2.0 }, LawSpec::FreePoisson { rate: 0.5 }),
        ];
        for (a, b) in pairs {
            let report = verify_proof_identities(&law(a, 8), &law(b, 8), 8).unwrap();
            assert!(report.passed(TOL), "{a:?}, {b:?}: {report:?}");
            for (name, r) in report.residuals() {
                assert!(r.through_grade >= 14, "{name}: {r:?}");
            }
        }
        let report = verify_proof_identities(&law(UNIT, 8), &law(UNIT, 8), 8).unwrap();
        assert_eq!(report.max_residual(), 0.0);
    }

    #[test]
    fn identities_detect_corruption() {
        // Feeding non-free data through the right-hand sides must break them.
        let mx = law(SEMI, 8);
        let my = law(FP, 8);
        let aux = auxiliary_series(&mx, &my, 8).unwrap();
        let ky = cumulants_from_moments(&my);
        let wrong = &ky.series().compose(&aux.m1.shift(2)).unwrap() + &HalfSeries::one(16);
        assert!(aux.m_xy.max_abs_diff(&wrong) > 1e-3);
    }

    #[test]
    fn json_shape() {
        let r = free_mult_convolve(&law(SEMI, 4), &law(SEMI, 4), 4).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["case_tag"], "both_zero_mean");
        assert_eq!(v["moments"], serde_json::json!([0.0, 0.0, 0.0, 0.0]));
        let back: ConvolutionResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
