//! Representable Lévy measures: finite activity (rate times a jump law)
//! and the one-dimensional α-stable subordinator density.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{check_dim, invalid, Result};
use crate::quadrature::{
    integrate, integrate_box, integrate_half_line, require_converged, QuadOptions, QuadResult,
    QuadValue,
};

/// Cutoff `χ(y) = 1` if `0 < |y| < 1`, else `0` (Euclidean norm).
pub fn cutoff(y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 > 0.0 && r2 < 1.0 {
        1.0
    } else {
        0.0
    }
}

/// True when `y` lies outside both closed orthants, i.e. it has a strictly
/// positive and a strictly negative coordinate.
pub fn is_off_orthant(y: &[f64]) -> bool {
    y.iter().any(|v| *v > 0.0) && y.iter().any(|v| *v < 0.0)
}

/// Finite list of jump sizes with probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicLaw {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl AtomicLaw {
    /// Weights must be non-negative and sum to one (within `1e-9`); atoms
    /// must be non-zero.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(invalid("atoms", "points and weights differ in length"));
        }
        if points.is_empty() {
            return Err(invalid("atoms", "jump law needs at least one atom"));
        }
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid("atoms", "non-finite atom coordinate"));
            }
            if p.iter().all(|v| *v == 0.0) {
                return Err(invalid("atoms", "a Lévy measure cannot charge the origin"));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("atoms", "weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "atoms",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            dim,
            points,
            weights,
            cumulative,
        })
    }

    pub fn single(point: Vec<f64>) -> Result<Self> {
        let d = point.len();
        Self::new(d, vec![point], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.points.len() - 1)
    }
}

/// Absolutely continuous jump laws with quadrature access.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityLaw {
    /// Multivariate normal with positive definite covariance.
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<f64>,
        cholesky: Vec<f64>,
    },
    /// Independent exponential coordinates on the positive orthant.
    Exponential { rates: Vec<f64> },
}

// Number of standard deviations kept by the Gaussian quadrature box.
const GAUSS_BOX_SIGMAS: f64 = 9.0;
// Exponential box cut at `EXP_BOX_DECAY / rate`.
const EXP_BOX_DECAY: f64 = 40.0;

impl DensityLaw {
    pub fn gaussian(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        check_dim(d * d, covariance.len())?;
        let cholesky = cholesky(&covariance, d)
            .ok_or_else(|| invalid("covariance", "not positive definite"))?;
        if (0..d).any(|i| cholesky[i * d + i] <= 0.0) {
            return Err(invalid("covariance", "singular covariance"));
        }
        Ok(Self::Gaussian {
            mean,
            covariance,
            cholesky,
        })
    }

    pub fn exponential(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("rates", "exponential rates must be positive"));
        }
        Ok(Self::Exponential { rates })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian { mean, .. } => mean.len(),
            Self::Exponential { rates } => rates.len(),
        }
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        match self {
            Self::Gaussian { mean, cholesky, .. } => {
                let d = mean.len();
                let mut z = vec![0.0; d];
                for i in 0..d {
                    let mut s = y[i] - mean[i];
                    for j in 0..i {
                        s -= cholesky[i * d + j] * z[j];
                    }
                    z[i] = s / cholesky[i * d + i];
                }
                let quad: f64 = z.iter().map(|v| v * v).sum();
                let log_det: f64 = (0..d).map(|i| cholesky[i * d + i].ln()).sum();
                (-0.5 * quad - log_det - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()).exp()
            }
            Self::Exponential { rates } => {
                if y.iter().any(|v| *v < 0.0) {
                    return 0.0;
                }
                rates
                    .iter()
                    .zip(y)
                    .map(|(r, v)| r * (-r * v).exp())
                    .product()
            }
        }
    }

    /// Quadrature box and an upper bound on the probability outside it.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>, f64) {
        match self {
            Self::Gaussian {
                mean, covariance, ..
            } => {
                let d = mean.len();
                let mut lo = Vec::with_capacity(d);
                let mut hi = Vec::with_capacity(d);
                for i in 0..d {
                    let sd = covariance[i * d + i].sqrt();
                    lo.push(mean[i] - GAUSS_BOX_SIGMAS * sd);
                    hi.push(mean[i] + GAUSS_BOX_SIGMAS * sd);
                }
                // P(|Z| > 9) is about 2.3e-19 per coordinate.
                (lo, hi, d as f64 * 2.3e-19)
            }
            Self::Exponential { rates } => {
                let lo = vec![0.0; rates.len()];
                let hi = rates.iter().map(|r| EXP_BOX_DECAY / r).collect();
                (lo, hi, rates.len() as f64 * (-EXP_BOX_DECAY).exp())
            }
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Gaussian { mean, cholesky, .. } => {
                let d = mean.len();
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                for i in 0..d {
                    let mut s = mean[i];
                    for j in 0..=i {
                        s += cholesky[i * d + j] * z[j];
                    }
                    out[i] = s;
                }
            }
            Self::Exponential { rates } => {
                for (o, r) in out.iter_mut().zip(rates) {
                    *o = Exp::new(*r).expect("positive rate").sample(rng);
                }
            }
        }
    }
}

/// Lower-triangular Cholesky factor of a row-major `d x d` matrix, or
/// `None` if a pivot is negative beyond round-off. Zero pivots are allowed
/// so positive semidefinite matrices factor.
pub fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            if (a[i * d + j] - a[j * d + i]).abs() > 1e-12 * scale {
                return None;
            }
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s < -1e-12 * scale {
                    return None;
                }
                l[i * d + i] = s.max(0.0).sqrt();
            } else if l[j * d + j] > 0.0 {
                l[i * d + j] = s / l[j * d + j];
            } else if s.abs() > 1e-12 * scale {
                return None;
            }
        }
    }
    Some(l)
}

/// Probability law of a single jump.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    Atoms(AtomicLaw),
    Density(DensityLaw),
}

impl JumpLaw {
    pub fn dim(&self) -> usize {
        match self {
            Self::Atoms(a) => a.dim(),
            Self::Density(dl) => dl.dim(),
        }
    }

    pub fn atoms(&self) -> Option<&AtomicLaw> {
        match self {
            Self::Atoms(a) => Some(a),
            Self::Density(_) => None,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Atoms(a) => {
                let i = a.sample_index(rng);
                out.copy_from_slice(&a.points[i]);
            }
            Self::Density(dl) => dl.sample_into(rng, out),
        }
    }

    /// `E h(J)`. Exact summation for atoms; box quadrature for densities,
    /// where `h_bound >= sup |h|` turns the mass outside the box into an
    /// error contribution.
    pub fn expect<V, H>(&self, h: H, h_bound: f64, opts: &QuadOptions) -> Result<QuadResult<V>>
    where
        V: QuadValue,
        H: Fn(&[f64]) -> V + Sync,
    {
        match self {
            Self::Atoms(a) => {
                let mut acc = V::zero();
                for (p, w) in a.atoms() {
                    acc = acc + h(p) * w;
                }
                Ok(QuadResult {
                    value: acc,
                    error: 0.0,
                })
            }
            Self::Density(dl) => {
                let (lo, hi, outside) = dl.support_box();
                let integrand = |y: &[f64]| {
                    let rho = dl.density(y);
                    if rho == 0.0 {
                        V::zero()
                    } else {
                        h(y) * rho
                    }
                };
                let mut r = integrate_box(&integrand, &lo, &hi, opts);
                r.error += outside * h_bound;
                require_converged(r, opts)
            }
        }
    }

    /// `E[J χ(J)]`, the compensator direction of the law.
    pub fn truncated_mean(&self, opts: &QuadOptions) -> Result<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                self.expect(|y: &[f64]| y[i] * cutoff(y), 1.0, opts)
                    .map(|r| r.value)
            })
            .collect()
    }
}

/// `ν(dy) = α / Γ(1-α) · y^{-1-α} dy` on `(0, ∞)`.
///
/// Integrals are split at `y_min` and `1`. The piece below `y_min` is
/// replaced by its second-order Taylor term, whose magnitude is reported
/// as `truncation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaStableMeasure {
    pub alpha: f64,
    pub y_min: f64,
}

/// A quadrature result that also reports the contribution attributed to
/// jumps below the truncation threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedIntegral<V> {
    pub value: V,
    pub error: f64,
    pub truncation: f64,
}

impl AlphaStableMeasure {
    pub fn new(alpha: f64, y_min: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if !(y_min > 0.0 && y_min < 1.0) {
            return Err(invalid("y_min", "must lie in (0, 1)"));
        }
        Ok(Self { alpha, y_min })
    }

    pub fn density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.alpha / gamma(1.0 - self.alpha) * y.powf(-1.0 - self.alpha)
        }
    }

    /// `ν((a, b))` for `0 < a < b <= inf`, from the antiderivative.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if b <= a {
            return 0.0;
        }
        let upper = if b.is_finite() {
            b.powf(-self.alpha)
        } else {
            0.0
        };
        let lower = if a == 0.0 {
            f64::INFINITY
        } else {
            a.powf(-self.alpha)
        };
        (lower - upper) / gamma(1.0 - self.alpha)
    }

    /// `∫_0^{y_min} y^2 ν(dy)`.
    pub fn small_jump_second_moment(&self) -> f64 {
        let a = self.alpha;
        a / gamma(1.0 - a) * self.y_min.powf(2.0 - a) / (2.0 - a)
    }

    /// `∫_0^1 y ν(dy)`.
    pub fn truncated_first_moment(&self) -> f64 {
        let a = self.alpha;
        a / (gamma(1.0 - a) * (1.0 - a))
    }

    /// `∫_{y_min}^{1} h dν` via `u = y^{-α}`, under which `ν` becomes
    /// `du / Γ(1-α)`.
    fn integrate_small<V, H>(&self, h: &H, opts: &QuadOptions) -> QuadResult<V>
    where
        V: QuadValue,
        H: Fn(f64) -> V,
    {
        let inv_alpha = 1.0 / self.alpha;
        let g = 1.0 / gamma(1.0 - self.alpha);
        let u_max = self.y_min.powf(-self.alpha);
        // Geometric breakpoints keep the polynomial decay in `u` resolved.
        let mut breaks = Vec::new();
        let mut u = 2.0;
        while u < u_max {
            breaks.push(u);
            u *= 4.0;
        }
        let r = integrate(|u: f64| h(u.powf(-inv_alpha)), 1.0, u_max, &breaks, opts);
        QuadResult {
            value: r.value * g,
            error: r.error * g,
        }
    }

    /// `∫_1^∞ h dν` for non-oscillating `h`, via `u = y^{-α} ∈ (0, 1]`.
    fn integrate_large<V, H>(&self, h: &H, opts: &QuadOptions) -> QuadResult<V>
    where
        V: QuadValue,
        H: Fn(f64) -> V,
    {
        let inv_alpha = 1.0 / self.alpha;
        let g = 1.0 / gamma(1.0 - self.alpha);
        let r = integrate(
            |u: f64| {
                if u <= 0.0 {
                    h(f64::INFINITY)
                } else {
                    h(u.powf(-inv_alpha))
                }
            },
            0.0,
            1.0,
            &[1e-6, 1e-4, 1e-2, 0.1],
            opts,
        );
        QuadResult {
            value: r.value * g,
            error: r.error * g,
        }
    }

    /// `∫ h dν` where `h(y) ≈ curvature · y²` near zero and `h` has a
    /// limit as `y → ∞`. Used for generator-type integrands.
    pub fn integrate_regular<V, H>(
        &self,
        h: H,
        curvature: V,
        opts: &QuadOptions,
    ) -> Result<TruncatedIntegral<V>>
    where
        V: QuadValue,
        H: Fn(f64) -> V,
    {
        let sub = QuadOptions {
            abs_tol: opts.abs_tol * 0.5,
            ..*opts
        };
        let small = self.integrate_small(&h, &sub);
        let large = self.integrate_large(&h, &sub);
        let trunc = curvature * self.small_jump_second_moment();
        let total = QuadResult {
            value: small.value + large.value + trunc,
            error: small.error + large.error,
        };
        let total = require_converged(total, opts)?;
        Ok(TruncatedIntegral {
            value: total.value,
            error: total.error,
            truncation: trunc.norm(),
        })
    }

    /// `∫ (e^{iξy} - 1 - iξyχ(y)) ν(dy)`.
    ///
    /// The oscillatory tail `∫_Y^∞ e^{iξy} y^{-1-α} dy` is evaluated along
    /// the rotated ray `y = Y + i s / ξ`, where the integrand decays like
    /// `e^{-s}`.
    pub fn exponent(&self, xi: f64, opts: &QuadOptions) -> Result<TruncatedIntegral<Complex64>> {
        if xi == 0.0 {
            return Ok(TruncatedIntegral {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                truncation: 0.0,
            });
        }
        let a = self.alpha;
        let c = a / gamma(1.0 - a);
        let sub = QuadOptions {
            abs_tol: opts.abs_tol / 3.0,
            ..*opts
        };
        let i = Complex64::new(0.0, 1.0);

        let compensated = |y: f64| (i * xi * y).exp() - 1.0 - i * xi * y;
        let small = self.integrate_small(&compensated, &sub);

        // ∫_1^∞ (e^{iξy} - 1) ν(dy) = c ∫_1^∞ e^{iξy} y^{-1-α} dy - ν((1, ∞)).
        let k = xi.abs();
        let split = (1.0 / k).max(1.0);
        let direct = integrate(
            |y: f64| (i * k * y).exp() * y.powf(-1.0 - a),
            1.0,
            split,
            &[],
            &QuadOptions {
                abs_tol: sub.abs_tol / c,
                ..sub
            },
        );
        let ray = integrate_half_line(
            |s: f64| Complex64::new(split, s / k).powf(-1.0 - a) * (-s).exp(),
            &QuadOptions {
                abs_tol: sub.abs_tol * k / c,
                ..sub
            },
        );
        let tail_plus = direct.value + i * (i * k * split).exp() / k * ray.value;
        let tail = if xi > 0.0 {
            tail_plus
        } else {
            tail_plus.conj()
        };
        let large = tail * c - Complex64::new(1.0 / gamma(1.0 - a), 0.0);
        let large_error = c * (direct.error + ray.error / k);

        let trunc = Complex64::new(-0.5 * xi * xi * self.small_jump_second_moment(), 0.0);
        let total = QuadResult {
            value: small.value + large + trunc,
            error: small.error + large_error,
        };
        let total = require_converged(total, opts)?;
        Ok(TruncatedIntegral {
            value: total.value,
            error: total.error,
            truncation: trunc.norm(),
        })
    }
}

/// A Lévy measure at a fixed state.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    /// `ν = rate · law`; `law` is `None` only when `rate == 0`.
    FiniteActivity {
        dim: usize,
        rate: f64,
        law: Option<JumpLaw>,
    },
    AlphaStableSubordinator(AlphaStableMeasure),
}

/// Discriminant of [`LevyMeasure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    FiniteActivity,
    AlphaStableSubordinator,
}

impl LevyMeasure {
    pub fn zero(dim: usize) -> Self {
        Self::FiniteActivity {
            dim,
            rate: 0.0,
            law: None,
        }
    }

    pub fn finite(rate: f64, law: JumpLaw) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(invalid("rate", "must be finite and non-negative"));
        }
        Ok(Self::FiniteActivity {
            dim: law.dim(),
            rate,
            law: Some(law),
        })
    }

    pub fn atoms(rate: f64, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(0);
        Self::finite(rate, JumpLaw::Atoms(AtomicLaw::new(d, points, weights)?))
    }

    pub fn alpha_stable(alpha: f64, y_min: f64) -> Result<Self> {
        Ok(Self::AlphaStableSubordinator(AlphaStableMeasure::new(
            alpha, y_min,
        )?))
    }

    pub fn kind(&self) -> MeasureKind {
        match self {
            Self::FiniteActivity { .. } => MeasureKind::FiniteActivity,
            Self::AlphaStableSubordinator(_) => MeasureKind::AlphaStableSubordinator,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FiniteActivity { dim, .. } => *dim,
            Self::AlphaStableSubordinator(_) => 1,
        }
    }

    /// Total mass, infinite for the α-stable density.
    pub fn total_mass(&self) -> f64 {
        match self {
            Self::FiniteActivity { rate, law, .. } => {
                if law.is_some() {
                    *rate
                } else {
                    0.0
                }
            }
            Self::AlphaStableSubordinator(_) => f64::INFINITY,
        }
    }

    /// Rate and law when the measure has finite, non-zero activity.
    pub fn finite_parts(&self) -> Option<(f64, &JumpLaw)> {
        match self {
            Self::FiniteActivity {
                rate,
                law: Some(law),
                ..
            } if *rate > 0.0 => Some((*rate, law)),
            _ => None,
        }
    }

    /// `∫ y χ(y) ν(dy)`.
    pub fn compensator_drift(&self, opts: &QuadOptions) -> Result<Vec<f64>> {
        match self {
            Self::FiniteActivity { dim, .. } => match self.finite_parts() {
                Some((rate, law)) => Ok(law
                    .truncated_mean(opts)?
                    .into_iter()
                    .map(|m| rate * m)
                    .collect()),
                None => Ok(vec![0.0; *dim]),
            },
            Self::AlphaStableSubordinator(m) => Ok(vec![m.truncated_first_moment()]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cutoff_rule() {
        assert_eq!(cutoff(&[0.0, 0.0]), 0.0);
        assert_eq!(cutoff(&[0.5, 0.5]), 1.0);
        assert_eq!(cutoff(&[1.0, 0.0]), 0.0);
        assert_eq!(cutoff(&[0.6, 0.8]), 0.0);
        assert_eq!(cutoff(&[-0.99]), 1.0);
    }

    #[test]
    fn orthant_membership() {
        assert!(!is_off_orthant(&[1.0, 1.0]));
        assert!(!is_off_orthant(&[-1.0, 0.0]));
        assert!(!is_off_orthant(&[1.0, 0.0, 2.0]));
        assert!(is_off_orthant(&[1.0, 0.0, -2.0]));
        assert!(!is_off_orthant(&[-3.0]));
    }

    #[test]
    fn atomic_law_validation() {
        assert!(AtomicLaw::new(2, vec![vec![0.0, 0.0]], vec![1.0]).is_err());
        assert!(AtomicLaw::new(2, vec![vec![1.0, 0.0]], vec![0.5]).is_err());
        assert!(AtomicLaw::new(2, vec![vec![1.0]], vec![1.0]).is_err());
        assert!(AtomicLaw::new(1, vec![vec![1.0], vec![2.0]], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn atomic_sampling_frequencies() {
        let law = AtomicLaw::new(
            1,
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let law = JumpLaw::Atoms(law);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        let mut y = [0.0];
        let n = 200_000;
        for _ in 0..n {
            law.sample_into(&mut rng, &mut y);
            counts[y[0] as usize - 1] += 1;
        }
        for (c, p) in counts.iter().zip([0.2, 0.5, 0.3]) {
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }

    #[test]
    fn cholesky_accepts_semidefinite() {
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2).is_some());
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
        assert!(cholesky(&[1.0, 0.5, 0.4, 1.0], 2).is_none());
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let law = JumpLaw::Density(
            DensityLaw::gaussian(vec![0.3, -0.2], vec![1.0, 0.4, 0.4, 0.5]).unwrap(),
        );
        let r: QuadResult<f64> = law
            .expect(|_| 1.0, 1.0, &QuadOptions::with_abs_tol(1e-9))
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn exponential_truncated_mean() {
        // E[J 1{J<1}] for J ~ Exp(2): (1 - 3 e^{-2}) / 2.
        let law = JumpLaw::Density(DensityLaw::exponential(vec![2.0]).unwrap());
        let m = law
            .truncated_mean(&QuadOptions::with_abs_tol(1e-11))
            .unwrap();
        let exact = (1.0 - 3.0 * (-2.0f64).exp()) / 2.0;
        assert!((m[0] - exact).abs() < 1e-10);
    }

    #[test]
    fn stable_tail_mass() {
        let m = AlphaStableMeasure::new(0.5, 1e-8).unwrap();
        let tail = m.interval_mass(1.0, f64::INFINITY);
        assert!((tail - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn stable_exponent_matches_closed_form() {
        // ∫(e^{iξy}-1-iξyχ) ν(dy) = -(-iξ)^α - iξ α / Γ(2-α).
        for &alpha in &[0.3, 0.5, 0.8] {
            let m = AlphaStableMeasure::new(alpha, 1e-7).unwrap();
            for &xi in &[-3.0, -0.2, 0.01, 0.7, 5.0] {
                let got = m.exponent(xi, &QuadOptions::with_abs_tol(1e-9)).unwrap();
                let minus_i_xi = Complex64::new(0.0, -xi);
                let exact =
                    -minus_i_xi.powf(alpha) - Complex64::new(0.0, xi * alpha / gamma(2.0 - alpha));
                assert!(
                    (got.value - exact).norm() < 1e-8,
                    "alpha={alpha} xi={xi} got={} exact={exact}",
                    got.value
                );
            }
        }
    }
}
