use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::levy::measure::{JumpLaw, LevyMeasure};
use crate::quadrature::{integrate_box, require_converged, QuadOptions, QuadResult};

/// Open axis-aligned box `Π (lower_i, upper_i)`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl OpenBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a < b) || a.is_nan() || b.is_nan())
        {
            return Err(invalid(
                "region",
                "each lower bound must be below its upper bound",
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| v > a && v < b)
    }

    pub fn closure_contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| v >= a && v <= b)
    }

    pub fn on_boundary(&self, y: &[f64]) -> bool {
        self.closure_contains(y) && !self.contains(y)
    }

    /// Euclidean distance from the origin to the closed box.
    pub fn distance_from_origin(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| {
                if *a > 0.0 {
                    *a
                } else if *b < 0.0 {
                    -*b
                } else {
                    0.0
                }
            })
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn disjoint(&self, other: &OpenBox) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .any(|((a1, b1), (a2, b2))| b1 <= a2 || b2 <= a1)
    }
}

impl JumpLaw {
    /// `P(J ∈ box)`.
    pub fn prob_of_box(&self, region: &OpenBox, opts: &QuadOptions) -> Result<QuadResult<f64>> {
        check_dim(self.dim(), region.dim())?;
        match self {
            JumpLaw::Atoms(a) => Ok(QuadResult {
                value: a
                    .atoms()
                    .filter(|(p, _)| region.contains(p))
                    .map(|(_, w)| w)
                    .sum(),
                error: 0.0,
            }),
            JumpLaw::Density(dl) => {
                let (slo, shi, outside) = dl.support_box();
                let lo: Vec<f64> = slo
                    .iter()
                    .zip(&region.lower)
                    .map(|(s, r)| s.max(*r))
                    .collect();
                let hi: Vec<f64> = shi
                    .iter()
                    .zip(&region.upper)
                    .map(|(s, r)| s.min(*r))
                    .collect();
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    return Ok(QuadResult {
                        value: 0.0,
                        error: outside,
                    });
                }
                let mut r = integrate_box(&|y: &[f64]| dl.density(y), &lo, &hi, opts);
                r.error += outside;
                require_converged(r, opts)
            }
        }
    }
}

impl LevyMeasure {
    /// `ν(box)`; the box must stay away from the origin for the α-stable
    /// density.
    pub fn mass_of_box(&self, region: &OpenBox, opts: &QuadOptions) -> Result<QuadResult<f64>> {
        check_dim(self.dim(), region.dim())?;
        match self {
            LevyMeasure::FiniteActivity { .. } => match self.finite_parts() {
                Some((rate, law)) => {
                    let p = law.prob_of_box(region, opts)?;
                    Ok(QuadResult {
                        value: rate * p.value,
                        error: rate * p.error,
                    })
                }
                None => Ok(QuadResult {
                    value: 0.0,
                    error: 0.0,
                }),
            },
            LevyMeasure::AlphaStableSubordinator(m) => {
                let a = region.lower[0].max(0.0);
                let b = region.upper[0];
                if b <= 0.0 {
                    return Ok(QuadResult {
                        value: 0.0,
                        error: 0.0,
                    });
                }
                if a == 0.0 {
                    return Err(invalid(
                        "region",
                        "box touches the origin where the density is not integrable",
                    ));
                }
                Ok(QuadResult {
                    value: m.interval_mass(a, b),
                    error: 0.0,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::measure::DensityLaw;

    #[test]
    fn geometry() {
        let b = OpenBox::new(vec![0.5, f64::NEG_INFINITY], vec![f64::INFINITY, -0.5]).unwrap();
        assert!((b.distance_from_origin() - 0.5f64.hypot(0.5)).abs() < 1e-15);
        assert!(b.contains(&[1.0, -1.0]));
        assert!(b.on_boundary(&[0.5, -1.0]));
        assert!(!b.contains(&[1.0, 1.0]));
        let touching = OpenBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(touching.distance_from_origin(), 0.0);
        assert!(OpenBox::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn exponential_box_probability() {
        let law = JumpLaw::Density(DensityLaw::exponential(vec![1.0, 2.0]).unwrap());
        let region = OpenBox::new(vec![0.5, 0.25], vec![f64::INFINITY, 1.0]).unwrap();
        let p = law
            .prob_of_box(&region, &QuadOptions::with_abs_tol(1e-11))
            .unwrap();
        let exact = (-0.5f64).exp() * ((-0.5f64).exp() - (-2.0f64).exp());
        assert!((p.value - exact).abs() < 1e-10);
    }
}
