//! Symbol, extended generator, orthant mass and Liggett gap.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, FellerError, Result};
use crate::levy::functions::{Product, SmoothFunction};
use crate::levy::measure::{cutoff, is_off_orthant, JumpLaw, LevyMeasure, TruncatedIntegral};
use crate::levy::triplet::{LocalCharacteristics, StateTriplet};
use crate::quadrature::{QuadOptions, QuadValue};

/// A deterministic evaluation: value, quadrature error estimate, and the
/// magnitude attributed to jumps below the α-stable truncation threshold
/// (zero for finite-activity measures).
pub type Evaluation<V> = TruncatedIntegral<V>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    let d = v.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += v[i] * m[i * d + j] * v[j];
        }
    }
    s
}

/// Integrates `h` against `rate · law` with the density-box truncation
/// bounded by `h_bound`.
fn integrate_finite<V, H>(
    rate: f64,
    law: &JumpLaw,
    h: H,
    h_bound: f64,
    opts: &QuadOptions,
) -> Result<Evaluation<V>>
where
    V: QuadValue,
    H: Fn(&[f64]) -> V + Sync,
{
    let scaled = QuadOptions {
        abs_tol: opts.abs_tol / rate,
        ..*opts
    };
    let r = law.expect(h, h_bound, &scaled)?;
    Ok(Evaluation {
        value: r.value * rate,
        error: r.error * rate,
        truncation: 0.0,
    })
}

/// The characteristic exponent `-p(x, ξ) = i b(x)·ξ - ½ ξ·Σ(x)ξ
/// + ∫ (e^{iξ·y} - 1 - iξ·y χ(y)) ν(x, dy)`.
pub fn symbol_eval(
    triplet: &StateTriplet,
    x: &[f64],
    xi: &[f64],
    opts: &QuadOptions,
) -> Result<Evaluation<Complex64>> {
    check_dim(triplet.dim(), xi.len())?;
    let c = triplet.at(x)?;
    let mut local = Complex64::new(0.0, dot(&c.drift, xi));
    if let Some(s) = &c.diffusion {
        local -= 0.5 * quad_form(s, xi);
    }
    let jumps = jump_exponent(&c.nu, xi, opts)?;
    Ok(Evaluation {
        value: local + jumps.value,
        ..jumps
    })
}

fn jump_exponent(
    nu: &LevyMeasure,
    xi: &[f64],
    opts: &QuadOptions,
) -> Result<Evaluation<Complex64>> {
    match nu {
        LevyMeasure::FiniteActivity { .. } => match nu.finite_parts() {
            Some((rate, law)) => integrate_finite(
                rate,
                law,
                |y: &[f64]| {
                    let phase = dot(xi, y);
                    Complex64::new(phase.cos() - 1.0, phase.sin() - phase * cutoff(y))
                },
                2.0 + norm(xi),
                opts,
            ),
            None => Ok(Evaluation {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                truncation: 0.0,
            }),
        },
        LevyMeasure::AlphaStableSubordinator(m) => m.exponent(xi[0], opts),
    }
}

/// Probes `sup |p(x, ξ)| / (1 + |ξ|²)` over the given grids.
pub fn probe_symbol_bound(
    triplet: &StateTriplet,
    states: &[Vec<f64>],
    frequencies: &[Vec<f64>],
    opts: &QuadOptions,
) -> Result<f64> {
    let mut sup = 0.0f64;
    for x in states {
        for xi in frequencies {
            let v = symbol_eval(triplet, x, xi, opts)?;
            sup = sup.max(v.value.norm() / (1.0 + dot(xi, xi)));
        }
    }
    Ok(sup)
}

/// `I(p) f(x) = b(x)·∇f(x) + ½ Σ_jk Σ_jk(x) ∂_j∂_k f(x)
/// + ∫ (f(x+y) - f(x) - y·∇f(x) χ(y)) ν(x, dy)`.
pub fn generator_apply<F>(
    triplet: &StateTriplet,
    f: &F,
    x: &[f64],
    opts: &QuadOptions,
) -> Result<Evaluation<f64>>
where
    F: SmoothFunction + ?Sized,
{
    let c = triplet.at(x)?;
    generator_at(&c, f, x, opts)
}

pub(crate) fn generator_at<F>(
    c: &LocalCharacteristics,
    f: &F,
    x: &[f64],
    opts: &QuadOptions,
) -> Result<Evaluation<f64>>
where
    F: SmoothFunction + ?Sized,
{
    let d = x.len();
    check_dim(d, f.dim())?;
    let fx = f.eval(x);
    let mut grad = vec![0.0; d];
    f.gradient(x, &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(FellerError::Precondition(
            "generator needs a C² test function".into(),
        ));
    }
    let mut value = dot(&c.drift, &grad);
    let mut hess = vec![0.0; d * d];
    if c.diffusion.is_some() || matches!(*c.nu, LevyMeasure::AlphaStableSubordinator(_)) {
        f.hessian(x, &mut hess);
    }
    if let Some(s) = &c.diffusion {
        value += 0.5 * s.iter().zip(&hess).map(|(a, b)| a * b).sum::<f64>();
    }
    let jumps = match &*c.nu {
        LevyMeasure::FiniteActivity { .. } => match c.nu.finite_parts() {
            Some((rate, law)) => {
                let bound = 2.0 * f.sup_bound().unwrap_or(1.0) + norm(&grad);
                integrate_finite(
                    rate,
                    law,
                    |y: &[f64]| {
                        let z: Vec<f64> = (0..d).map(|i| x[i] + y[i]).collect();
                        f.eval(&z) - fx - dot(y, &grad) * cutoff(y)
                    },
                    bound,
                    opts,
                )?
            }
            None => Evaluation {
                value: 0.0,
                error: 0.0,
                truncation: 0.0,
            },
        },
        LevyMeasure::AlphaStableSubordinator(m) => m.integrate_regular(
            |y: f64| {
                let fy = if y.is_finite() {
                    f.eval(&[x[0] + y])
                } else {
                    f.eval(&[f64::INFINITY])
                };
                fy - fx - if y < 1.0 { y * grad[0] } else { 0.0 }
            },
            0.5 * hess[0],
            opts,
        )?,
    };
    value += jumps.value;
    Ok(Evaluation {
        value,
        error: jumps.error,
        truncation: jumps.truncation,
    })
}

/// Mass of `ν(x, ·)` off the union of the closed positive and negative
/// orthants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantMass {
    pub value: f64,
    pub std_error: f64,
    /// True when computed by exact summation.
    pub exact: bool,
}

/// Monte Carlo settings for jump laws without a finite support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
        }
    }
}

pub fn resnick_offorthant_mass(
    triplet: &StateTriplet,
    x: &[f64],
    sampling: &SamplingOptions,
) -> Result<OrthantMass> {
    let c = triplet.at(x)?;
    offorthant_mass_of(&c.nu, sampling)
}

pub fn offorthant_mass_of(nu: &LevyMeasure, sampling: &SamplingOptions) -> Result<OrthantMass> {
    let exact_zero = OrthantMass {
        value: 0.0,
        std_error: 0.0,
        exact: true,
    };
    if nu.dim() < 2 {
        return Ok(exact_zero);
    }
    let Some((rate, law)) = nu.finite_parts() else {
        return Ok(exact_zero);
    };
    match law {
        JumpLaw::Atoms(a) => Ok(OrthantMass {
            value: rate
                * a.atoms()
                    .filter(|(p, _)| is_off_orthant(p))
                    .map(|(_, w)| w)
                    .sum::<f64>(),
            std_error: 0.0,
            exact: true,
        }),
        JumpLaw::Density(_) => {
            let n = sampling.n_samples.max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
            let mut y = vec![0.0; nu.dim()];
            let mut hits = 0usize;
            for _ in 0..n {
                law.sample_into(&mut rng, &mut y);
                if is_off_orthant(&y) {
                    hits += 1;
                }
            }
            let p = hits as f64 / n as f64;
            Ok(OrthantMass {
                value: rate * p,
                std_error: rate * (p * (1.0 - p) / n as f64).sqrt(),
                exact: false,
            })
        }
    }
}

/// Both routes to the Liggett gap at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiggettGap {
    /// `I(p)(fg) - f I(p)g - g I(p)f`.
    pub direct: f64,
    /// `∫ (f(x+y) - f(x)) (g(x+y) - g(x)) ν(x, dy)`.
    pub reduced: f64,
    pub direct_error: f64,
    pub reduced_error: f64,
}

impl LiggettGap {
    /// `|direct - reduced| <= tol · (1 + |reduced|)`.
    pub fn routes_agree(&self, tol: f64) -> bool {
        (self.direct - self.reduced).abs() <= tol * (1.0 + self.reduced.abs())
    }
}

pub fn liggett_gap<F, G>(
    triplet: &StateTriplet,
    f: &F,
    g: &G,
    x: &[f64],
    opts: &QuadOptions,
) -> Result<LiggettGap>
where
    F: SmoothFunction + ?Sized,
    G: SmoothFunction + ?Sized,
{
    let c = triplet.at(x)?;
    if let Some(s) = &c.diffusion {
        if s.iter().any(|v| *v != 0.0) {
            return Err(FellerError::DiffusionNotSupported);
        }
    }
    let fg = Product { f, g };
    let i_fg = generator_at(&c, &fg, x, opts)?;
    let i_f = generator_at(&c, f, x, opts)?;
    let i_g = generator_at(&c, g, x, opts)?;
    let (fx, gx) = (f.eval(x), g.eval(x));
    let direct = i_fg.value - fx * i_g.value - gx * i_f.value;
    let direct_error = i_fg.error + fx.abs() * i_g.error + gx.abs() * i_f.error;

    let d = x.len();
    let reduced = match &*c.nu {
        LevyMeasure::FiniteActivity { .. } => match c.nu.finite_parts() {
            Some((rate, law)) => {
                let bound = 4.0 * f.sup_bound().unwrap_or(1.0) * g.sup_bound().unwrap_or(1.0);
                integrate_finite(
                    rate,
                    law,
                    |y: &[f64]| {
                        let z: Vec<f64> = (0..d).map(|i| x[i] + y[i]).collect();
                        (f.eval(&z) - fx) * (g.eval(&z) - gx)
                    },
                    bound,
                    opts,
                )?
            }
            None => Evaluation {
                value: 0.0,
                error: 0.0,
                truncation: 0.0,
            },
        },
        LevyMeasure::AlphaStableSubordinator(m) => {
            let mut gf = [0.0];
            let mut gg = [0.0];
            f.gradient(x, &mut gf);
            g.gradient(x, &mut gg);
            m.integrate_regular(
                |y: f64| {
                    let z = [x[0] + y];
                    (f.eval(&z) - fx) * (g.eval(&z) - gx)
                },
                gf[0] * gg[0],
                opts,
            )?
        }
    };
    Ok(LiggettGap {
        direct,
        reduced: reduced.value,
        direct_error,
        reduced_error: reduced.error,
    })
}
