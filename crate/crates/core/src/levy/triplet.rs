use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, invalid, FellerError, Result};
use crate::levy::measure::{cholesky, LevyMeasure};

type VecField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MeasureField = Arc<dyn Fn(&[f64]) -> LevyMeasure + Send + Sync>;

/// `x ↦ b(x)`.
#[derive(Clone)]
pub enum Drift {
    Constant(Vec<f64>),
    /// `b(x) = b0 - lambda · x`.
    Linear {
        b0: Vec<f64>,
        lambda: f64,
    },
    Field(VecField),
}

/// `x ↦ Σ(x)`, row-major.
#[derive(Clone)]
pub enum Diffusion {
    Zero,
    Constant(Vec<f64>),
    Field(VecField),
}

/// `x ↦ ν(x, dy)`.
#[derive(Clone)]
pub enum JumpKernel {
    Constant(Arc<LevyMeasure>),
    Field(MeasureField),
}

/// State-dependent characteristics `(b(x), Σ(x), ν(x, dy))` of a rich
/// Feller process.
#[derive(Clone)]
pub struct StateTriplet {
    dim: usize,
    drift: Drift,
    diffusion: Diffusion,
    nu: JumpKernel,
    /// User assertion that the symbol satisfies the growth bound uniformly
    /// in `x`; see [`crate::levy::probe_symbol_bound`].
    pub symbol_bounded: bool,
}

/// The triplet evaluated at one state.
#[derive(Debug, Clone)]
pub struct LocalCharacteristics {
    pub drift: Vec<f64>,
    pub diffusion: Option<Vec<f64>>,
    pub nu: Arc<LevyMeasure>,
}

impl StateTriplet {
    pub fn new(dim: usize, drift: Drift, diffusion: Diffusion, nu: JumpKernel) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "dimension must be positive"));
        }
        match &drift {
            Drift::Constant(b) => check_dim(dim, b.len())?,
            Drift::Linear { b0, lambda } => {
                check_dim(dim, b0.len())?;
                if !lambda.is_finite() {
                    return Err(invalid("lambda", "must be finite"));
                }
            }
            Drift::Field(_) => {}
        }
        if let Diffusion::Constant(s) = &diffusion {
            check_dim(dim * dim, s.len())?;
            if cholesky(s, dim).is_none() {
                return Err(FellerError::NotPositiveSemidefinite);
            }
        }
        if let JumpKernel::Constant(m) = &nu {
            check_dim(dim, m.dim())?;
        }
        Ok(Self {
            dim,
            drift,
            diffusion,
            nu,
            symbol_bounded: false,
        })
    }

    /// Constant-coefficient pure-jump triplet `(b, 0, ν)`.
    pub fn levy(drift: Vec<f64>, nu: LevyMeasure) -> Result<Self> {
        let d = drift.len();
        Self::new(
            d,
            Drift::Constant(drift),
            Diffusion::Zero,
            JumpKernel::Constant(Arc::new(nu)),
        )
    }

    pub fn with_symbol_bounded(mut self, bounded: bool) -> Self {
        self.symbol_bounded = bounded;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn has_diffusion(&self) -> bool {
        !matches!(self.diffusion, Diffusion::Zero)
    }

    /// Evaluates the characteristics at `x`, checking dimensions and that
    /// the diffusion matrix factors.
    pub fn at(&self, x: &[f64]) -> Result<LocalCharacteristics> {
        check_dim(self.dim, x.len())?;
        let drift = match &self.drift {
            Drift::Constant(b) => b.clone(),
            Drift::Linear { b0, lambda } => b0.iter().zip(x).map(|(b, v)| b - lambda * v).collect(),
            Drift::Field(f) => f(x),
        };
        check_dim(self.dim, drift.len())?;
        let diffusion = match &self.diffusion {
            Diffusion::Zero => None,
            Diffusion::Constant(s) => Some(s.clone()),
            Diffusion::Field(f) => {
                let s = f(x);
                check_dim(self.dim * self.dim, s.len())?;
                if cholesky(&s, self.dim).is_none() {
                    return Err(FellerError::NotPositiveSemidefinite);
                }
                Some(s)
            }
        };
        let nu = match &self.nu {
            JumpKernel::Constant(m) => Arc::clone(m),
            JumpKernel::Field(f) => {
                let m = f(x);
                check_dim(self.dim, m.dim())?;
                Arc::new(m)
            }
        };
        Ok(LocalCharacteristics {
            drift,
            diffusion,
            nu,
        })
    }
}

impl fmt::Debug for StateTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let drift = match &self.drift {
            Drift::Constant(b) => format!("constant {b:?}"),
            Drift::Linear { b0, lambda } => format!("{b0:?} - {lambda}·x"),
            Drift::Field(_) => "field".to_string(),
        };
        let nu = match &self.nu {
            JumpKernel::Constant(m) => format!("{m:?}"),
            JumpKernel::Field(_) => "state-dependent".to_string(),
        };
        f.debug_struct("StateTriplet")
            .field("dim", &self.dim)
            .field("drift", &drift)
            .field("diffusion", &self.has_diffusion())
            .field("nu", &nu)
            .finish()
    }
}
