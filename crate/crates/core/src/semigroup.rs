//! Monte Carlo semigroup `T_t f(x) = E^x f(X_t)` and the checks tying it to
//! the generator and to the association inequality.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::dependence::csv_field;
use crate::error::{FellerError, Result};
use crate::levy::{generator_apply, Observable, SmoothFunction};
use crate::numeric::{log_log_slope, mean_and_se, pooled_se, Estimate};
use crate::processes::{simulate, simulate_terminal, stream_rng, Kernel, ProcessSpec};
use crate::quadrature::QuadOptions;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupEstimate {
    pub value: f64,
    /// Sample standard deviation over `√n_paths`.
    pub std_error: f64,
    pub n_paths: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub f_id: String,
}

impl SemigroupEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.value, self.std_error)
    }
}

/// Sample mean of `f(X_t)` over `n_paths` paths from `x`.
pub fn semigroup_apply<F: Observable + ?Sized>(
    spec: &ProcessSpec,
    f: &F,
    x: &[f64],
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<SemigroupEstimate> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(FellerError::Grid(format!("time {t} must be non-negative")));
    }
    let (value, std_error) = if t == 0.0 {
        (f.eval(x), 0.0)
    } else {
        let v = simulate_terminal(spec, x, t, n_paths, seed, |y| f.eval(y))?;
        mean_and_se(&v)
    };
    Ok(SemigroupEstimate {
        value,
        std_error,
        n_paths,
        t,
        x: x.to_vec(),
        f_id: f.label(),
    })
}

/// `T_t(fg)(x) - T_t f(x) · T_t g(x)` estimated as the sample covariance of
/// `f(X_t)` and `g(X_t)` on one ensemble, with delta-method standard error.
pub fn association_gap<F, G>(
    spec: &ProcessSpec,
    f: &F,
    g: &G,
    x: &[f64],
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Observable + ?Sized,
    G: Observable + ?Sized,
{
    let e = simulate(spec, x, &[t], n_paths, seed)?;
    let a: Vec<f64> = (0..n_paths).map(|p| f.eval(e.state(p, 0))).collect();
    let b: Vec<f64> = (0..n_paths).map(|p| g.eval(e.state(p, 0))).collect();
    Ok(covariance_delta(&a, &b))
}

fn covariance_delta(a: &[f64], b: &[f64]) -> Estimate {
    let n = a.len();
    if n < 2 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let (ma, _) = mean_and_se(a);
    let (mb, _) = mean_and_se(b);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let (m, se) = mean_and_se(&prods);
    let nf = n as f64;
    Estimate::new(m * nf / (nf - 1.0), se)
}

/// One row of [`generator_limit_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub t: f64,
    /// `(T_t f(x) - f(x)) / t`.
    pub quotient: Estimate,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable {
    pub generator: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `ln discrepancy` against `ln t`.
    pub log_log_slope: Option<f64>,
}

/// `|(T_t f(x) - f(x)) / t - I(p) f(x)|` for decreasing `t`, with common
/// random numbers across `t`.
pub fn generator_limit_check<F: SmoothFunction + ?Sized>(
    spec: &ProcessSpec,
    f: &F,
    x: &[f64],
    t_list: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<LimitTable> {
    if t_list.is_empty()
        || t_list.windows(2).any(|w| w[1] >= w[0])
        || t_list.iter().any(|t| *t <= 0.0)
    {
        return Err(FellerError::Grid(
            "t_list must be positive and strictly decreasing".into(),
        ));
    }
    let triplet = spec.effective_triplet(x)?;
    let generator = generator_apply(&triplet, f, x, &QuadOptions::default())?.value;
    let fx = f.eval(x);
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let v = simulate_terminal(spec, x, t, n_paths, seed, |y| (f.eval(y) - fx) / t)?;
        let (m, se) = mean_and_se(&v);
        rows.push(LimitRow {
            t,
            quotient: Estimate::new(m, se),
            discrepancy: (m - generator).abs(),
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.discrepancy).collect();
    Ok(LimitTable {
        generator,
        log_log_slope: log_log_slope(&ts, &ds),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// `(T_{t+h} f - T_{t-h} f) / 2h`.
    pub central: Estimate,
    /// `(4 D_{h/2} - D_h) / 3`.
    pub richardson: Estimate,
    /// `T_t [I(p) f](x)`.
    pub generator_mean: Estimate,
}

impl DerivativeCheck {
    /// Richardson value and generator mean within `k` pooled standard errors.
    pub fn agrees(&self, k: f64) -> bool {
        self.richardson.agrees_with(&self.generator_mean, k)
    }
}

/// Compares the time derivative of `T_t f(x)` with `T_t[I(p) f](x)` on one
/// ensemble observed at `t ± h`, `t ± h/2` and `t`.
pub fn derivative_commute_check<F: SmoothFunction + ?Sized>(
    spec: &ProcessSpec,
    f: &F,
    x: &[f64],
    t: f64,
    h: f64,
    n_paths: usize,
    seed: u64,
) -> Result<DerivativeCheck> {
    if !(h > 0.0 && t > h) {
        return Err(FellerError::Grid(format!(
            "need 0 < h < t, got h={h}, t={t}"
        )));
    }
    let grid = [t - h, t - h / 2.0, t, t + h / 2.0, t + h];
    let e = simulate(spec, x, &grid, n_paths, seed)?;
    let opts = QuadOptions::default();
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for p in 0..n_paths {
        let key: Vec<u64> = e.state(p, 2).iter().map(|v| v.to_bits()).collect();
        if !cache.contains_key(&key) {
            cache.insert(key, f64::NAN);
            distinct.push(e.state(p, 2).to_vec());
            if distinct.len() > 4096 {
                break;
            }
        }
    }
    let generator_at = |y: &[f64]| -> Result<f64> {
        let triplet = spec.effective_triplet(y)?;
        Ok(generator_apply(&triplet, f, y, &opts)?.value)
    };
    let gens: Vec<f64> = if distinct.len() <= 4096 {
        let vals: Vec<f64> = distinct
            .par_iter()
            .map(|y| generator_at(y))
            .collect::<Result<_>>()?;
        for (y, v) in distinct.iter().zip(vals) {
            cache.insert(y.iter().map(|v| v.to_bits()).collect(), v);
        }
        (0..n_paths)
            .map(|p| {
                cache[&e
                    .state(p, 2)
                    .iter()
                    .map(|v| v.to_bits())
                    .collect::<Vec<u64>>()]
            })
            .collect()
    } else {
        (0..n_paths)
            .into_par_iter()
            .map(|p| generator_at(e.state(p, 2)))
            .collect::<Result<_>>()?
    };
    let mut central = Vec::with_capacity(n_paths);
    let mut rich = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let v: Vec<f64> = (0..5).map(|k| f.eval(e.state(p, k))).collect();
        let d_h = (v[4] - v[0]) / (2.0 * h);
        let d_half = (v[3] - v[1]) / h;
        central.push(d_h);
        rich.push((4.0 * d_half - d_h) / 3.0);
    }
    Ok(DerivativeCheck {
        central: Estimate::from_samples(&central),
        richardson: Estimate::from_samples(&rich),
        generator_mean: Estimate::from_samples(&gens),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    pub starts: Vec<Vec<f64>>,
    pub estimates: Vec<Estimate>,
    /// Smallest `T f(x_{k+1}) - T f(x_k) + 3 · pooled se` along the chain.
    pub worst_margin: f64,
    pub passes: bool,
}

/// Checks `x ↦ T_t f(x)` is non-decreasing along componentwise ordered
/// starts, using common random numbers across starts.
pub fn monotonicity_transfer_check<F: Observable + ?Sized>(
    spec: &ProcessSpec,
    f: &F,
    starts: &[Vec<f64>],
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MonotonicityCheck> {
    for w in starts.windows(2) {
        if w[0].iter().zip(&w[1]).any(|(a, b)| a > b) {
            return Err(FellerError::Precondition(
                "starts must be ordered componentwise".into(),
            ));
        }
    }
    let estimates: Vec<Estimate> = starts
        .iter()
        .map(|x| semigroup_apply(spec, f, x, t, n_paths, seed).map(|s| s.estimate()))
        .collect::<Result<_>>()?;
    let mut worst = f64::INFINITY;
    for w in estimates.windows(2) {
        let margin = w[1].value - w[0].value + 3.0 * pooled_se(w[0].std_error, w[1].std_error);
        worst = worst.min(margin);
    }
    Ok(MonotonicityCheck {
        starts: starts.to_vec(),
        estimates,
        worst_margin: worst,
        passes: worst >= 0.0,
    })
}

/// `n_chains` random componentwise-ordered chains of `len` starts.
///
/// Finite chains draw sorted indices from their state list. Other specs
/// start at `x` and add independent `Exp(1)` steps to every coordinate.
pub fn ordered_chains(
    spec: &ProcessSpec,
    x: &[f64],
    n_chains: usize,
    len: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let finite_states = match spec {
        ProcessSpec::PseudoPoisson(p) => match p.kernel() {
            Kernel::FiniteChain { states, .. } => {
                let mut s = states.clone();
                s.sort_by(|a, b| {
                    a.iter()
                        .zip(b)
                        .map(|(u, v)| u.total_cmp(v))
                        .find(|o| o.is_ne())
                        .unwrap_or(Ordering::Equal)
                });
                Some(s)
            }
            _ => None,
        },
        _ => None,
    };
    let ordered = |c: &[Vec<f64>]| {
        c.windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b))
    };
    (0..n_chains)
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            match &finite_states {
                Some(states) => {
                    for _ in 0..1000 {
                        let mut idx: Vec<usize> = if states.len() >= len {
                            rand::seq::index::sample(&mut rng, states.len(), len).into_vec()
                        } else {
                            (0..len)
                                .map(|_| rng.random_range(0..states.len()))
                                .collect()
                        };
                        idx.sort_unstable();
                        let chain: Vec<Vec<f64>> = idx.iter().map(|i| states[*i].clone()).collect();
                        if ordered(&chain) {
                            return Ok(chain);
                        }
                    }
                    Err(FellerError::Precondition(
                        "chain states admit no ordered sequence".into(),
                    ))
                }
                None => {
                    let mut cur = x.to_vec();
                    let mut chain = vec![cur.clone()];
                    while chain.len() < len {
                        for c in cur.iter_mut() {
                            *c += rng.sample::<f64, _>(Exp1);
                        }
                        chain.push(cur.clone());
                    }
                    Ok(chain)
                }
            }
        })
        .collect()
}

/// A line of the per-check CSV report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub spec_id: String,
    pub x: Vec<f64>,
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub oracle: Option<f64>,
    pub pass: bool,
}

impl CheckRow {
    pub const HEADER: &'static str = "check,spec_id,x,t,estimate,std_error,oracle,verdict";

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let x = self
            .x
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let oracle = self.oracle.map(|o| o.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            csv_field(&self.check),
            csv_field(&self.spec_id),
            x,
            self.t,
            self.estimate,
            self.std_error,
            oracle,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::TestFunction;
    use crate::processes::presets;

    #[test]
    fn time_zero_is_exact() {
        let f = TestFunction::coordinate_logistic(1, 0);
        let s = semigroup_apply(&presets::poisson_1d(), &f, &[0.3], 0.0, 10, 1).unwrap();
        assert_eq!(s.value, f.eval(&[0.3]));
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.f_id, f.id());
    }

    #[test]
    fn constant_function_has_zero_discrepancy_and_gap() {
        let c = TestFunction::constant(1, 2.0);
        let table = generator_limit_check(&presets::poisson_1d(), &c, &[0.0], &[0.4, 0.2], 1000, 3)
            .unwrap();
        assert_eq!(table.generator, 0.0);
        assert!(table
            .rows
            .iter()
            .all(|r| r.quotient.value == 0.0 && r.discrepancy == 0.0));
        let f = TestFunction::coordinate_logistic(1, 0);
        let gap = association_gap(&presets::poisson_1d(), &f, &c, &[0.0], 1.0, 1000, 3).unwrap();
        assert_eq!(gap.value, 0.0);
        let d = derivative_commute_check(&presets::poisson_1d(), &c, &[0.0], 1.0, 0.05, 500, 3)
            .unwrap();
        assert_eq!((d.central.value, d.generator_mean.value), (0.0, 0.0));
    }

    #[test]
    fn t_list_must_decrease() {
        let f = TestFunction::coordinate_logistic(1, 0);
        assert!(
            generator_limit_check(&presets::poisson_1d(), &f, &[0.0], &[0.1, 0.2], 10, 1).is_err()
        );
    }

    #[test]
    fn monotonicity_check_rejects_unordered_starts() {
        let f = TestFunction::coordinate_logistic(1, 0);
        let r = monotonicity_transfer_check(
            &presets::poisson_1d(),
            &f,
            &[vec![1.0], vec![0.0]],
            1.0,
            10,
            1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn chains_are_ordered_and_stay_on_the_state_space() {
        let chains = ordered_chains(&presets::pseudo_poisson_2state(), &[0.0], 5, 3, 9).unwrap();
        assert_eq!(chains.len(), 5);
        for c in &chains {
            assert!(c.windows(2).all(|w| w[0][0] <= w[1][0]));
            assert!(c.iter().all(|s| s[0] == 0.0 || s[0] == 1.0));
        }
        let chains = ordered_chains(&presets::diagonal_levy(), &[0.0, 0.0], 2, 4, 9).unwrap();
        assert!(chains
            .iter()
            .all(|c| c.len() == 4 && c[0] == vec![0.0, 0.0] && c[3][1] > c[2][1]));
    }

    #[test]
    fn check_row_csv() {
        let row = CheckRow {
            check: "series".into(),
            spec_id: "pseudo_poisson_2state".into(),
            x: vec![0.0, 1.5],
            t: 0.5,
            estimate: 0.25,
            std_error: 0.01,
            oracle: None,
            pass: true,
        };
        let mut buf = Vec::new();
        row.write(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "series,pseudo_poisson_2state,0;1.5,0.5,0.25,0.01,,pass\n"
        );
    }
}
