//! The four example process families, their exact simulation and the
//! characteristics they induce.

mod ensemble;
pub mod presets;
mod simulate;

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{check_dim, invalid, FellerError, Result};
use crate::levy::{Diffusion, Drift, JumpKernel, JumpLaw, LevyMeasure, Observable, StateTriplet};
use crate::numeric::{poisson_pmf_table, poisson_upper_tail, NeumaierSum};
use crate::quadrature::QuadOptions;

pub use ensemble::{PathEnsemble, PATH_MAGIC};
pub use simulate::{simulate, simulate_terminal, stable_variate, stream_rng, with_jobs};

/// Lévy process with triplet `(b, 0, ν)`, `ν` of finite activity.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLevy {
    drift: Vec<f64>,
    nu: LevyMeasure,
    /// `b - ∫ y χ(y) ν(dy)`, the velocity between jumps.
    raw_drift: Vec<f64>,
}

impl JumpLevy {
    /// `drift` is the triplet drift `b`.
    pub fn new(drift: Vec<f64>, nu: LevyMeasure) -> Result<Self> {
        check_dim(drift.len(), nu.dim())?;
        if matches!(nu, LevyMeasure::AlphaStableSubordinator(_)) {
            return Err(FellerError::Unsupported(
                "exact simulation needs a finite-activity jump measure".into(),
            ));
        }
        let comp = nu.compensator_drift(&QuadOptions::with_abs_tol(1e-12))?;
        let raw_drift = drift.iter().zip(&comp).map(|(b, c)| b - c).collect();
        Ok(Self {
            drift,
            nu,
            raw_drift,
        })
    }

    /// Deterministic motion `x + b t`.
    pub fn pure_drift(drift: Vec<f64>) -> Self {
        let d = drift.len();
        Self {
            raw_drift: drift.clone(),
            drift,
            nu: LevyMeasure::zero(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn raw_drift(&self) -> &[f64] {
        &self.raw_drift
    }

    pub fn nu(&self) -> &LevyMeasure {
        &self.nu
    }

    pub fn triplet(&self) -> StateTriplet {
        StateTriplet::levy(self.drift.clone(), self.nu.clone())
            .expect("dimensions validated at construction")
            .with_symbol_bounded(true)
    }
}

/// `dX = -λ X dt + dL` driven by a finite-activity Lévy process `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrnsteinUhlenbeck {
    pub lambda: f64,
    pub driver: JumpLevy,
}

impl OrnsteinUhlenbeck {
    pub fn new(lambda: f64, driver: JumpLevy) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", "mean reversion must be positive"));
        }
        Ok(Self { lambda, driver })
    }

    /// Mean of `X_t` started at `x` when the driver has no jumps.
    pub fn deterministic_flow(&self, x: &[f64], t: f64) -> Vec<f64> {
        let decay = (-self.lambda * t).exp();
        x.iter()
            .zip(self.driver.raw_drift())
            .map(|(x, g)| decay * x + g / self.lambda * (1.0 - decay))
            .collect()
    }
}

/// User-supplied kernel sampler: writes a draw from `q(x, ·)` into `out`.
pub type KernelSampler = Arc<dyn Fn(&[f64], &mut dyn RngCore, &mut [f64]) + Send + Sync>;

/// The one-step kernel `q(x, dy)` of a pseudo-Poisson process.
#[derive(Clone)]
pub enum Kernel {
    /// Finite chain; `transition[i][j] = q(states[i], {states[j]})`.
    FiniteChain {
        states: Vec<Vec<f64>>,
        transition: Vec<Vec<f64>>,
    },
    /// `q(x, ·)` is the law of `x + Z` with `Z ≥ 0` drawn from `law`.
    Translation {
        law: JumpLaw,
    },
    /// `q(x, ·) = δ_x`.
    Identity {
        dim: usize,
    },
    Custom {
        dim: usize,
        sampler: KernelSampler,
    },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FiniteChain { states, transition } => f
                .debug_struct("FiniteChain")
                .field("states", states)
                .field("transition", transition)
                .finish(),
            Self::Translation { law } => f.debug_struct("Translation").field("law", law).finish(),
            Self::Identity { dim } => f.debug_struct("Identity").field("dim", dim).finish(),
            Self::Custom { dim, .. } => f
                .debug_struct("Custom")
                .field("dim", dim)
                .finish_non_exhaustive(),
        }
    }
}

impl Kernel {
    pub fn dim(&self) -> usize {
        match self {
            Self::FiniteChain { states, .. } => states[0].len(),
            Self::Translation { law } => law.dim(),
            Self::Identity { dim } | Self::Custom { dim, .. } => *dim,
        }
    }
}

/// `X_t = S(N_t)` for a Markov chain `S` with kernel `q` and an independent
/// Poisson clock `N` of rate `rate`.
#[derive(Debug, Clone)]
pub struct PseudoPoisson {
    rate: f64,
    kernel: Kernel,
}

impl PseudoPoisson {
    pub fn new(rate: f64, kernel: Kernel) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid("rate", "clock rate must be positive and finite"));
        }
        match &kernel {
            Kernel::FiniteChain { states, transition } => {
                if states.is_empty() || transition.len() != states.len() {
                    return Err(invalid("transition", "need one row per state"));
                }
                let d = states[0].len();
                for s in states {
                    check_dim(d, s.len())?;
                }
                for row in transition {
                    check_dim(states.len(), row.len())?;
                    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                        return Err(invalid("transition", "probabilities must be non-negative"));
                    }
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(invalid(
                            "transition",
                            format!("row sums to {total}, expected 1"),
                        ));
                    }
                }
            }
            Kernel::Translation { law } => {
                let nonneg = match law {
                    JumpLaw::Atoms(a) => a.atoms().all(|(p, _)| p.iter().all(|v| *v >= 0.0)),
                    JumpLaw::Density(crate::levy::DensityLaw::Exponential { .. }) => true,
                    JumpLaw::Density(_) => false,
                };
                if !nonneg {
                    return Err(invalid("kernel", "translation steps must be non-negative"));
                }
            }
            Kernel::Identity { .. } | Kernel::Custom { .. } => {}
        }
        Ok(Self { rate, kernel })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Index of `x` in the chain's state list.
    pub fn state_index(&self, x: &[f64]) -> Result<usize> {
        let Kernel::FiniteChain { states, .. } = &self.kernel else {
            return Err(FellerError::Unsupported(
                "kernel has no transition table".into(),
            ));
        };
        states
            .iter()
            .position(|s| s.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-12))
            .ok_or_else(|| FellerError::Precondition(format!("state {x:?} is not in the chain")))
    }

    /// For a chain whose states are totally ordered componentwise, whether
    /// every upper set `{z ≥ s_k}` has non-decreasing kernel mass along the
    /// order. `None` when the states are not totally ordered.
    pub fn chain_is_monotone(&self) -> Option<bool> {
        let Kernel::FiniteChain { states, transition } = &self.kernel else {
            return None;
        };
        let leq = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        let mut order: Vec<usize> = (0..states.len()).collect();
        for i in 0..states.len() {
            for j in 0..states.len() {
                if !leq(&states[i], &states[j]) && !leq(&states[j], &states[i]) {
                    return None;
                }
            }
        }
        order.sort_by(|&i, &j| {
            if leq(&states[i], &states[j]) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        for k in 0..order.len() {
            let tail = |row: usize| -> f64 { order[k..].iter().map(|&j| transition[row][j]).sum() };
            for w in order.windows(2) {
                if tail(w[0]) > tail(w[1]) + 1e-12 {
                    return Some(false);
                }
            }
        }
        Some(true)
    }

    /// `T_t f(x) = e^{-λt} Σ_n (λt)^n / n! · Q^n f(x)` truncated after
    /// `n_terms` terms. With `None` the truncation is chosen so the Poisson
    /// tail is below `1e-13`; an explicit `n_terms` whose tail exceeds
    /// `1e-12` is rejected.
    pub fn semigroup_exact<F: Observable + ?Sized>(
        &self,
        f: &F,
        x: &[f64],
        t: f64,
        n_terms: Option<usize>,
    ) -> Result<f64> {
        let values = self.table_values(f)?;
        self.series(&values, x, t, n_terms)
    }

    /// `d/dt T_t f(x) = T_t [λ (Q - I) f](x)`, by the same series.
    pub fn semigroup_derivative_exact<F: Observable + ?Sized>(
        &self,
        f: &F,
        x: &[f64],
        t: f64,
        n_terms: Option<usize>,
    ) -> Result<f64> {
        let values = self.table_values(f)?;
        let q = self.apply_q(&values);
        let g: Vec<f64> = q
            .iter()
            .zip(&values)
            .map(|(a, b)| self.rate * (a - b))
            .collect();
        self.series(&g, x, t, n_terms)
    }

    fn table_values<F: Observable + ?Sized>(&self, f: &F) -> Result<Vec<f64>> {
        match &self.kernel {
            Kernel::FiniteChain { states, .. } => Ok(states.iter().map(|s| f.eval(s)).collect()),
            _ => Err(FellerError::Unsupported(
                "no finite transition table; estimate the semigroup by simulation instead".into(),
            )),
        }
    }

    fn apply_q(&self, v: &[f64]) -> Vec<f64> {
        let Kernel::FiniteChain { transition, .. } = &self.kernel else {
            unreachable!("checked by table_values");
        };
        transition
            .iter()
            .map(|row| row.iter().zip(v).map(|(p, f)| p * f).sum())
            .collect()
    }

    fn series(&self, values: &[f64], x: &[f64], t: f64, n_terms: Option<usize>) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(FellerError::Grid(format!("time {t} must be non-negative")));
        }
        let i = self.state_index(x)?;
        let mean = self.rate * t;
        let n = match n_terms {
            Some(n) => {
                let tail = poisson_upper_tail(mean, n.saturating_sub(1));
                if n == 0 || tail >= 1e-12 {
                    return Err(invalid(
                        "n_terms",
                        format!("Poisson tail beyond {n} terms is {tail:.2e}, need < 1e-12"),
                    ));
                }
                n
            }
            None => {
                let mut n = 1;
                while poisson_upper_tail(mean, n - 1) >= 1e-13 {
                    n += 1;
                }
                n
            }
        };
        let pmf = poisson_pmf_table(mean, n - 1);
        let mut acc = NeumaierSum::new();
        let mut v = values.to_vec();
        for p in pmf {
            acc.add(p * v[i]);
            v = self.apply_q(&v);
        }
        Ok(acc.total())
    }
}

/// The random clock of a subordinated process.
#[derive(Debug, Clone, PartialEq)]
pub enum SubordinatorJumps {
    None,
    /// Jumps of a compound Poisson subordinator; the law lives on `(0, ∞)`.
    Finite {
        rate: f64,
        law: JumpLaw,
    },
    /// Lévy density `α / Γ(1-α) · y^{-1-α}`.
    AlphaStable {
        alpha: f64,
    },
}

/// A subordinator with Bernstein function `ψ(u) = b_N u + ∫ (1 - e^{-uy}) λ(dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subordinator {
    pub drift: f64,
    pub jumps: SubordinatorJumps,
}

impl Subordinator {
    pub fn new(drift: f64, jumps: SubordinatorJumps) -> Result<Self> {
        if !(drift.is_finite() && drift >= 0.0) {
            return Err(invalid("subordinator.drift", "must be non-negative"));
        }
        match &jumps {
            SubordinatorJumps::None => {
                if drift == 0.0 {
                    return Err(invalid(
                        "subordinator",
                        "a zero subordinator freezes the process",
                    ));
                }
            }
            SubordinatorJumps::Finite { rate, law } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(invalid(
                        "subordinator.rate",
                        "must be finite and non-negative",
                    ));
                }
                check_dim(1, law.dim())?;
                let positive = match law {
                    JumpLaw::Atoms(a) => a.atoms().all(|(p, _)| p[0] > 0.0),
                    JumpLaw::Density(crate::levy::DensityLaw::Exponential { .. }) => true,
                    JumpLaw::Density(_) => false,
                };
                if !positive {
                    return Err(invalid(
                        "subordinator.law",
                        "subordinator jumps must be positive",
                    ));
                }
            }
            SubordinatorJumps::AlphaStable { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(invalid("alpha", "must lie in (0, 1)"));
                }
            }
        }
        Ok(Self { drift, jumps })
    }

    /// The Bernstein function `ψ(u)`, `u ≥ 0`.
    pub fn bernstein(&self, u: f64) -> Result<f64> {
        let jumps = match &self.jumps {
            SubordinatorJumps::None => 0.0,
            SubordinatorJumps::Finite { rate, law } => {
                let r = law.expect(
                    |y: &[f64]| 1.0 - (-u * y[0]).exp(),
                    1.0,
                    &QuadOptions::with_abs_tol(1e-12),
                )?;
                rate * r.value
            }
            SubordinatorJumps::AlphaStable { alpha } => u.powf(*alpha),
        };
        Ok(self.drift * u + jumps)
    }

    /// The Lévy measure of the clock, with `y_min` used only for quadrature
    /// of the α-stable density.
    pub fn measure(&self, y_min: f64) -> Result<LevyMeasure> {
        match &self.jumps {
            SubordinatorJumps::None => Ok(LevyMeasure::zero(1)),
            SubordinatorJumps::Finite { rate, law } => LevyMeasure::finite(*rate, law.clone()),
            SubordinatorJumps::AlphaStable { alpha } => LevyMeasure::alpha_stable(*alpha, y_min),
        }
    }
}

/// `X_t = Y(N_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subordinated {
    pub inner: JumpLevy,
    pub subordinator: Subordinator,
}

/// A process from one of the supported families.
#[derive(Debug, Clone)]
pub enum ProcessSpec {
    JumpLevy(JumpLevy),
    OrnsteinUhlenbeck(OrnsteinUhlenbeck),
    PseudoPoisson(PseudoPoisson),
    Subordinated(Subordinated),
}

/// Discriminant of [`ProcessSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    JumpLevy,
    OrnsteinUhlenbeck,
    PseudoPoisson,
    Subordinated,
}

impl ProcessSpec {
    pub fn kind(&self) -> ProcessKind {
        match self {
            Self::JumpLevy(_) => ProcessKind::JumpLevy,
            Self::OrnsteinUhlenbeck(_) => ProcessKind::OrnsteinUhlenbeck,
            Self::PseudoPoisson(_) => ProcessKind::PseudoPoisson,
            Self::Subordinated(_) => ProcessKind::Subordinated,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::JumpLevy(l) => l.dim(),
            Self::OrnsteinUhlenbeck(o) => o.driver.dim(),
            Self::PseudoPoisson(p) => p.kernel.dim(),
            Self::Subordinated(s) => s.inner.dim(),
        }
    }

    /// The characteristics of the process at `x`.
    ///
    /// Lévy and Ornstein–Uhlenbeck triplets are valid at every state. For a
    /// pseudo-Poisson process the returned triplet holds `ν(x, ·)` frozen at
    /// `x`. Subordinated processes have no closed form and are rejected.
    pub fn effective_triplet(&self, x: &[f64]) -> Result<StateTriplet> {
        check_dim(self.dim(), x.len())?;
        match self {
            Self::JumpLevy(l) => Ok(l.triplet()),
            Self::OrnsteinUhlenbeck(o) => Ok(StateTriplet::new(
                o.driver.dim(),
                Drift::Linear {
                    b0: o.driver.drift.clone(),
                    lambda: o.lambda,
                },
                Diffusion::Zero,
                JumpKernel::Constant(Arc::new(o.driver.nu.clone())),
            )?),
            Self::PseudoPoisson(p) => pseudo_poisson_triplet(p, x),
            Self::Subordinated(_) => Err(FellerError::Unsupported(
                "the symbol of a subordinated process has no closed form".into(),
            )),
        }
    }
}

/// `ν(x, A) = λ q(x, A + x)` without the mass of zero displacements, and
/// `b(x) = ∫ z χ(z) ν(x, dz)`.
fn pseudo_poisson_triplet(p: &PseudoPoisson, x: &[f64]) -> Result<StateTriplet> {
    let d = x.len();
    let nu = match &p.kernel {
        Kernel::FiniteChain { states, transition } => {
            let i = p.state_index(x)?;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (s, q) in states.iter().zip(&transition[i]) {
                let z: Vec<f64> = s.iter().zip(x).map(|(a, b)| a - b).collect();
                if *q > 0.0 && z.iter().any(|v| *v != 0.0) {
                    points.push(z);
                    weights.push(*q);
                }
            }
            let mass: f64 = weights.iter().sum();
            if points.is_empty() {
                LevyMeasure::zero(d)
            } else {
                weights.iter_mut().for_each(|w| *w /= mass);
                LevyMeasure::atoms(p.rate * mass, points, weights)?
            }
        }
        Kernel::Translation { law } => LevyMeasure::finite(p.rate, law.clone())?,
        Kernel::Identity { .. } => LevyMeasure::zero(d),
        Kernel::Custom { .. } => {
            return Err(FellerError::Unsupported(
                "a sampled kernel has no closed-form Lévy measure".into(),
            ))
        }
    };
    let b = nu.compensator_drift(&QuadOptions::with_abs_tol(1e-12))?;
    Ok(StateTriplet::levy(b, nu)?.with_symbol_bounded(true))
}
