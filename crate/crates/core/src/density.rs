//! Spectral densities by Stieltjes inversion.
//!
//! [`solve_density`] follows the physical root of a polynomial equation
//! `P(g, z) = 0` for the Cauchy transform along `x + iε`.
//! [`approx_density_from_moments`] needs only moments: it builds the Jacobi
//! continued fraction of the Cauchy transform and closes it with a constant
//! tail.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::MomentSequence;

/// `P(g, z) = Σ coeffs[i][j] gⁱ zʲ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct AlgebraicCurve {
    coeffs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawCurve {
    coeffs: Vec<Vec<f64>>,
}

impl TryFrom<RawCurve> for AlgebraicCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        AlgebraicCurve::new(raw.coeffs)
    }
}

impl AlgebraicCurve {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coefficient"));
        }
        let curve = AlgebraicCurve { coeffs };
        if curve.degree_g() == 0 {
            return Err(Error::InvalidCurve("curve must have degree at least 1 in g"));
        }
        Ok(curve)
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// `c[i][j]`, zero outside the stored grid.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// Highest power of `g` with a nonzero coefficient.
    pub fn degree_g(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|row| row.iter().any(|&c| c != 0.0))
            .unwrap_or(0)
    }

    /// Coefficients of `P(·, z)` as a polynomial in `g`, constant term first.
    pub fn coefficients_at(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs[..=self.degree_g()]
            .iter()
            .map(|row| horner(row.iter().map(|&c| Complex64::new(c, 0.0)), z))
            .collect()
    }

    pub fn evaluate(&self, g: Complex64, z: Complex64) -> Complex64 {
        horner(self.coefficients_at(z).into_iter(), g)
    }

    /// `(∂P/∂g, ∂P/∂z)` at `(g, z)`.
    pub fn partials(&self, g: Complex64, z: Complex64) -> (Complex64, Complex64) {
        let a = self.coefficients_at(z);
        let p_g = horner(a.iter().enumerate().skip(1).map(|(i, c)| c * i as f64), g);
        let dz: Vec<Complex64> = self.coeffs[..=self.degree_g()]
            .iter()
            .map(|row| {
                horner(
                    row.iter().enumerate().skip(1).map(|(j, &c)| Complex64::new(c * j as f64, 0.0)),
                    z,
                )
            })
            .collect();
        (p_g, horner(dz.into_iter(), g))
    }
}

/// `Σ cₖ xᵏ` for coefficients given constant term first.
fn horner<I>(coeffs: I, x: Complex64) -> Complex64
where
    I: DoubleEndedIterator<Item = Complex64>,
{
    coeffs.rev().fold(Complex64::zero(), |acc, c| acc * x + c)
}

/// The two quartics for which closed forms are available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinCurve {
    /// `g⁴z² − zg + 1 = 0`
    SemicircleXFreepoisson,
    /// `g⁴z² + z²g³ − zg² − gz + 1 = 0`
    FreepoissonXShiftedfreepoisson,
}

impl BuiltinCurve {
    pub const ALL: [BuiltinCurve; 2] = [
        BuiltinCurve::SemicircleXFreepoisson,
        BuiltinCurve::FreepoissonXShiftedfreepoisson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinCurve::SemicircleXFreepoisson => "semicircle_x_freepoisson",
            BuiltinCurve::FreepoissonXShiftedfreepoisson => "freepoisson_x_shiftedfreepoisson",
        }
    }

    pub fn curve(self) -> AlgebraicCurve {
        let mut c = vec![vec![0.0; 3]; 5];
        match self {
            BuiltinCurve::SemicircleXFreepoisson => {
                c[4][2] = 1.0;
                c[1][1] = -1.0;
                c[0][0] = 1.0;
            }
            BuiltinCurve::FreepoissonXShiftedfreepoisson => {
                c[4][2] = 1.0;
                c[3][2] = 1.0;
                c[2][1] = -1.0;
                c[1][1] = -1.0;
                c[0][0] = 1.0;
            }
        }
        AlgebraicCurve { coeffs: c }
    }
}

impl FromStr for BuiltinCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinCurve::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCurve(s.to_string()))
    }
}

/// Looks up a built-in curve by name.
pub fn builtin_curve(name: &str) -> Result<AlgebraicCurve> {
    Ok(name.parse::<BuiltinCurve>()?.curve())
}

const ROOT_MAX_ITER: usize = 500;

/// All complex roots of `Σ aᵢ gⁱ` (Aberth–Ehrlich iteration followed by a
/// Newton polish). Leading zero coefficients are dropped first.
pub fn polynomial_roots(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = match a.iter().rposition(|c| !c.is_zero()) {
        Some(d) => d,
        None => return Err(Error::RootFinding),
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = a[deg];
    let monic: Vec<Complex64> = a[..=deg].iter().map(|c| c / lead).collect();
    if deg == 1 {
        return Ok(vec![-monic[0]]);
    }
    let derivative: Vec<Complex64> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect();
    let eval = |x: Complex64| {
        (
            horner(monic.iter().copied(), x),
            horner(derivative.iter().copied(), x),
        )
    };

    // Fujiwara-type bound on the root moduli.
    let radius = (0..deg)
        .map(|i| monic[i].norm().powf(1.0 / (deg - i) as f64))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE.sqrt());
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / deg as f64 + 0.4))
        .collect();

    let mut converged = false;
    for _ in 0..ROOT_MAX_ITER {
        let mut worst = 0.0f64;
        for j in 0..deg {
            let (p, dp) = eval(z[j]);
            if p.is_zero() {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&k| k != j)
                .map(|k| (z[j] - z[k]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[j] -= step;
                worst = worst.max(step.norm() / (1.0 + z[j].norm()));
            }
        }
        if worst < 1e-15 {
            converged = true;
            break;
        }
    }
    for root in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*root);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *root -= step;
        }
    }
    let scale = monic.iter().fold(1.0f64, |s, c| s.max(c.norm()));
    let accurate = z
        .iter()
        .all(|&r| r.is_finite() && eval(r).0.norm() <= 1e-8 * scale * (1.0 + r.norm()).powi(deg as i32));
    if converged || accurate {
        Ok(z)
    } else {
        Err(Error::RootFinding)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("non-finite abscissa"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing"));
    }
    Ok(())
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(epsilon))
    }
}

/// `lo, lo + step, …` up to `hi` (inclusive when `hi − lo` is a multiple of
/// `step`).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::InvalidGrid("need finite lo <= hi and step > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

const MAX_BISECTIONS: u32 = 30;

/// Largest predicted change of the tracked root, relative to `1 + |g|`,
/// accepted in a single continuation step.
const MAX_RELATIVE_MOVE: f64 = 0.05;

fn nearest_two(roots: &[Complex64], target: Complex64) -> (usize, f64, f64) {
    let mut best = (0, f64::INFINITY, f64::INFINITY);
    for (i, r) in roots.iter().enumerate() {
        let d = (r - target).norm();
        if d < best.1 {
            best = (i, d, best.1);
        } else if d < best.2 {
            best.2 = d;
        }
    }
    best
}

/// Moves the tracked root from `z_from` to `z_to`. An Euler step along
/// `dg/dz = −P_z/P_g` predicts the new root; the step is halved until the
/// predicted move is small and the root nearest the prediction is clearly
/// separated from the others.
fn track(
    curve: &AlgebraicCurve,
    prev: Complex64,
    z_from: Complex64,
    z_to: Complex64,
    depth: u32,
) -> Result<Complex64> {
    let (p_g, p_z) = curve.partials(prev, z_from);
    let predicted = prev - p_z / p_g * (z_to - z_from);
    let small_move =
        predicted.is_finite() && (predicted - prev).norm() <= MAX_RELATIVE_MOVE * (1.0 + prev.norm());
    let target = if predicted.is_finite() { predicted } else { prev };
    let roots = polynomial_roots(&curve.coefficients_at(z_to))?;
    if roots.is_empty() {
        return Err(Error::RootFinding);
    }
    let (i, d1, d2) = nearest_two(&roots, target);
    if (small_move && d1 <= 0.25 * d2) || depth >= MAX_BISECTIONS {
        if (roots[i] - prev).norm() > 1.0 + prev.norm() {
            return Err(Error::RootFinding);
        }
        return Ok(roots[i]);
    }
    let mid = (z_from + z_to) * 0.5;
    let g_mid = track(curve, prev, z_from, mid, depth + 1)?;
    track(curve, g_mid, mid, z_to, depth + 1)
}

/// Physical branch of `P(g, x + iε) = 0` at every grid point.
///
/// Starts at the right end with the root nearest `1/z` and continues
/// leftward, always taking the root nearest the previous one.
pub fn solve_cauchy_transform(
    curve: &AlgebraicCurve,
    grid: &[f64],
    epsilon: f64,
) -> Result<Vec<Complex64>> {
    validate_grid(grid)?;
    validate_epsilon(epsilon)?;
    let z_at = |x: f64| Complex64::new(x, epsilon);
    let mut out = vec![Complex64::zero(); grid.len()];
    let last = grid.len() - 1;
    let z0 = z_at(grid[last]);
    let roots = polynomial_roots(&curve.coefficients_at(z0))
        .map_err(|_| Error::RootTracking(grid[last]))?;
    if roots.is_empty() {
        return Err(Error::RootTracking(grid[last]));
    }
    let (i, _, _) = nearest_two(&roots, z0.inv());
    out[last] = roots[i];
    for k in (0..last).rev() {
        out[k] = track(curve, out[k + 1], z_at(grid[k + 1]), z_at(grid[k]), 0)
            .map_err(|_| Error::RootTracking(grid[k]))?;
    }
    Ok(out)
}

/// A density sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub epsilon: f64,
}

impl DensityCurve {
    /// Trapezoidal `∫ f`.
    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    /// Trapezoidal `∫ xᵏ f(x) dx`.
    pub fn moment(&self, k: u32) -> f64 {
        let h = |i: usize| self.grid[i].powi(k as i32) * self.values[i];
        (1..self.grid.len())
            .map(|i| 0.5 * (self.grid[i] - self.grid[i - 1]) * (h(i) + h(i - 1)))
            .sum()
    }

    /// Smallest and largest abscissae where the density exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v > threshold)?;
        let last = self.values.iter().rposition(|&v| v > threshold)?;
        Some((self.grid[first], self.grid[last]))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 || x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, n.max(2) - 1);
        if n == 1 {
            return self.values[0];
        }
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let t = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

fn stieltjes(g: Complex64) -> f64 {
    (-g.im / PI).max(0.0)
}

/// Density `−Im g(x + iε)/π` (clamped at zero) on the physical branch of a
/// curve.
pub fn solve_density(curve: &AlgebraicCurve, grid: &[f64], epsilon: f64) -> Result<DensityCurve> {
    let g = solve_cauchy_transform(curve, grid, epsilon)?;
    Ok(DensityCurve {
        grid: grid.to_vec(),
        values: g.into_iter().map(stieltjes).collect(),
        epsilon,
    })
}

/// Three-term recurrence `x pₖ = pₖ₊₁ + aₖ pₖ + bₖ pₖ₋₁` of the orthogonal
/// polynomials of a moment sequence; `b[0]` is the total mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Jacobi coefficients `a₀…a_{n−1}`, `b₀…b_{n−1}` from `μ₀ = 1, μ₁ … μ_{2n−1}`
/// by the Chebyshev algorithm. Fails with [`Error::HankelBreakdown`] at the
/// first level whose pivot is not positive.
pub fn jacobi_coefficients(m: &MomentSequence, n: usize) -> Result<JacobiCoefficients> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    let needed = 2 * n - 1;
    if m.order() < needed {
        return Err(Error::InsufficientOrder {
            needed,
            available: m.order(),
        });
    }
    let mu: Vec<f64> = (0..2 * n).map(|l| m.get(l).unwrap_or(0.0)).collect();
    let mut a = vec![mu[1] / mu[0]];
    let mut b = vec![mu[0]];
    let mut sigma_prev = vec![0.0; 2 * n];
    let mut sigma = mu.clone();
    let pivot_floor = 1e-12;
    for k in 1..n {
        let mut next = vec![0.0; 2 * n];
        for l in k..(2 * n - k) {
            next[l] = sigma[l + 1] - a[k - 1] * sigma[l] - b[k - 1] * sigma_prev[l];
        }
        let scale = mu.iter().take(2 * k + 1).fold(1.0f64, |s, v| s.max(v.abs()));
        if next[k].is_nan() || next[k] <= pivot_floor * scale {
            return Err(Error::HankelBreakdown(k));
        }
        a.push(next[k + 1] / next[k] - sigma[k] / sigma[k - 1]);
        b.push(next[k] / sigma[k - 1]);
        sigma_prev = sigma;
        sigma = next;
    }
    Ok(JacobiCoefficients { a, b })
}

impl JacobiCoefficients {
    /// Cauchy transform of the continued fraction at `z` (upper half-plane),
    /// with the last level repeated forever.
    pub fn cauchy_transform(&self, z: Complex64) -> Complex64 {
        let n = self.a.len();
        let (a, b) = (self.a[n - 1], self.b[n - 1]);
        let mut t = if n == 1 || b <= 0.0 {
            (z - a).inv()
        } else {
            // t = 1/(z − a − b t): root of b t² − w t + 1 = 0 with Im t < 0.
            let w = z - a;
            let disc = (w * w - 4.0 * b).sqrt();
            let r1 = (w - disc) / (2.0 * b);
            let r2 = (w + disc) / (2.0 * b);
            if r1.im <= r2.im {
                r1
            } else {
                r2
            }
        };
        for k in (0..n - 1).rev() {
            t = (z - self.a[k] - self.b[k + 1] * t).inv();
        }
        t * self.b[0]
    }
}

/// Approximate density from moments alone: Jacobi continued fraction with a
/// square-root tail, evaluated at `x + iε`.
pub fn approx_density_from_moments(
    m: &MomentSequence,
    grid: &[f64],
    epsilon: f64,
) -> Result<DensityCurve> {
    if m.order() < 4 {
        return Err(Error::InsufficientOrder {
            needed: 4,
            available: m.order(),
        });
    }
    validate_grid(grid)?;
    validate_epsilon(epsilon)?;
    let jacobi = jacobi_coefficients(m, m.order().div_ceil(2))?;
    Ok(DensityCurve {
        grid: grid.to_vec(),
        values: grid
            .iter()
            .map(|&x| stieltjes(jacobi.cauchy_transform(Complex64::new(x, epsilon))))
            .collect(),
        epsilon,
    })
}

/// `Σ_{n=0}^{N} mₙ / z^{n+1}`, the large-`z` expansion of the Cauchy
/// transform.
pub fn cauchy_from_moments(m: &MomentSequence, z: Complex64) -> Complex64 {
    let w = z.inv();
    let mut full = vec![1.0];
    full.extend_from_slice(m.as_slice());
    horner(full.into_iter().map(|c| Complex64::new(c, 0.0)), w) * w
}

/// Name of every built-in curve, for messages.
pub fn builtin_names() -> String {
    let names: Vec<&str> = BuiltinCurve::ALL.iter().map(|c| c.name()).collect();
    names.join(", ")
}
