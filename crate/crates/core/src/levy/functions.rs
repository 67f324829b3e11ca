//! Test functions with analytic derivatives and seeded function banks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Anything that can be evaluated at a state.
pub trait Observable: Sync {
    fn eval(&self, x: &[f64]) -> f64;

    /// Identifier used in reports.
    fn label(&self) -> String {
        "f".to_string()
    }
}

impl<F> Observable for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A bounded `C²` function with analytic first and second derivatives.
/// The Hessian is written row-major into a `d * d` buffer.
pub trait SmoothFunction: Observable {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn hessian(&self, x: &[f64], out: &mut [f64]);

    /// Upper bound on `|f|`, when known.
    fn sup_bound(&self) -> Option<f64> {
        None
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `σ(z)`, `σ'(z)`, `σ''(z)`.
fn logistic_derivs(z: f64) -> (f64, f64, f64) {
    let s = logistic(z);
    let d1 = s * (1.0 - s);
    (s, d1, d1 * (1.0 - 2.0 * s))
}

/// Coordinatewise non-decreasing smooth functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Monotone {
    /// `σ(w·x / s - c)` with `w ≥ 0`.
    Logistic {
        weights: Vec<f64>,
        shift: f64,
        scale: f64,
    },
    Constant {
        dim: usize,
        value: f64,
    },
}

/// Supermodular functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Supermodular {
    /// `Π_i σ((x_i - c_i) / s_i)` over the listed coordinates; a product of
    /// non-negative non-decreasing factors, hence also non-decreasing.
    LogisticProduct {
        dim: usize,
        factors: Vec<(usize, f64, f64)>,
    },
    /// `x_i x_j`, `i != j` (unbounded; used for the supermodular-dependence
    /// comparison only).
    Bilinear { dim: usize, i: usize, j: usize },
}

/// Orthant indicators `1{x > t}` (upper) or `1{x <= t}` (lower).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthant {
    pub thresholds: Vec<f64>,
    pub upper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    SmoothMonotone(Monotone),
    Supermodular(Supermodular),
    Indicator(Orthant),
}

impl TestFunction {
    pub fn logistic(weights: Vec<f64>, shift: f64, scale: f64) -> Self {
        Self::SmoothMonotone(Monotone::Logistic {
            weights,
            shift,
            scale,
        })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::SmoothMonotone(Monotone::Constant { dim, value })
    }

    /// `σ(x_i)`.
    pub fn coordinate_logistic(dim: usize, i: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        Self::logistic(w, 0.0, 1.0)
    }

    pub fn bilinear(dim: usize, i: usize, j: usize) -> Self {
        assert!(i != j && i < dim && j < dim);
        Self::Supermodular(Supermodular::Bilinear { dim, i, j })
    }

    pub fn upper_orthant(thresholds: Vec<f64>) -> Self {
        Self::Indicator(Orthant {
            thresholds,
            upper: true,
        })
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Self::Indicator(_))
    }

    /// `sup |f|`, if finite.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            Self::SmoothMonotone(Monotone::Logistic { .. }) => Some(1.0),
            Self::SmoothMonotone(Monotone::Constant { value, .. }) => Some(value.abs()),
            Self::Supermodular(Supermodular::LogisticProduct { .. }) => Some(1.0),
            Self::Supermodular(Supermodular::Bilinear { .. }) => None,
            Self::Indicator(_) => Some(1.0),
        }
    }

    /// Short stable identifier for reports.
    pub fn id(&self) -> String {
        fn fmt(v: &[f64]) -> String {
            v.iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(";")
        }
        match self {
            Self::SmoothMonotone(Monotone::Logistic {
                weights,
                shift,
                scale,
            }) => {
                format!("logistic[w={};c={shift:.3};s={scale:.3}]", fmt(weights))
            }
            Self::SmoothMonotone(Monotone::Constant { value, .. }) => format!("const[{value}]"),
            Self::Supermodular(Supermodular::LogisticProduct { factors, .. }) => {
                let parts: Vec<String> = factors
                    .iter()
                    .map(|(i, c, s)| format!("{i}:{c:.3}/{s:.3}"))
                    .collect();
                format!("logprod[{}]", parts.join(";"))
            }
            Self::Supermodular(Supermodular::Bilinear { i, j, .. }) => format!("x{i}*x{j}"),
            Self::Indicator(o) => format!(
                "{}[{}]",
                if o.upper { "upper" } else { "lower" },
                fmt(&o.thresholds)
            ),
        }
    }
}

impl Observable for TestFunction {
    fn label(&self) -> String {
        self.id()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::SmoothMonotone(Monotone::Logistic {
                weights,
                shift,
                scale,
            }) => {
                let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / scale - shift;
                logistic(z)
            }
            Self::SmoothMonotone(Monotone::Constant { value, .. }) => *value,
            Self::Supermodular(Supermodular::LogisticProduct { factors, .. }) => factors
                .iter()
                .map(|(i, c, s)| logistic((x[*i] - c) / s))
                .product(),
            Self::Supermodular(Supermodular::Bilinear { i, j, .. }) => x[*i] * x[*j],
            Self::Indicator(o) => {
                let inside = if o.upper {
                    x.iter().zip(&o.thresholds).all(|(v, t)| v > t)
                } else {
                    x.iter().zip(&o.thresholds).all(|(v, t)| v <= t)
                };
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl SmoothFunction for TestFunction {
    fn sup_bound(&self) -> Option<f64> {
        self.sup_norm()
    }

    fn dim(&self) -> usize {
        match self {
            Self::SmoothMonotone(Monotone::Logistic { weights, .. }) => weights.len(),
            Self::SmoothMonotone(Monotone::Constant { dim, .. }) => *dim,
            Self::Supermodular(Supermodular::LogisticProduct { dim, .. }) => *dim,
            Self::Supermodular(Supermodular::Bilinear { dim, .. }) => *dim,
            Self::Indicator(o) => o.thresholds.len(),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            Self::SmoothMonotone(Monotone::Logistic {
                weights,
                shift,
                scale,
            }) => {
                let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / scale - shift;
                let (_, d1, _) = logistic_derivs(z);
                for (o, w) in out.iter_mut().zip(weights) {
                    *o = d1 * w / scale;
                }
            }
            Self::SmoothMonotone(Monotone::Constant { .. }) => {}
            Self::Supermodular(Supermodular::LogisticProduct { factors, .. }) => {
                let vals: Vec<(f64, f64, f64)> = factors
                    .iter()
                    .map(|(i, c, s)| logistic_derivs((x[*i] - c) / s))
                    .collect();
                for (k, (i, _, s)) in factors.iter().enumerate() {
                    let others: f64 = vals
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| *m != k)
                        .map(|(_, v)| v.0)
                        .product();
                    out[*i] += vals[k].1 / s * others;
                }
            }
            Self::Supermodular(Supermodular::Bilinear { i, j, .. }) => {
                out[*i] = x[*j];
                out[*j] = x[*i];
            }
            Self::Indicator(_) => {
                out.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            Self::SmoothMonotone(Monotone::Logistic {
                weights,
                shift,
                scale,
            }) => {
                let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / scale - shift;
                let (_, _, d2) = logistic_derivs(z);
                for a in 0..d {
                    for b in 0..d {
                        out[a * d + b] = d2 * weights[a] * weights[b] / (scale * scale);
                    }
                }
            }
            Self::SmoothMonotone(Monotone::Constant { .. }) => {}
            Self::Supermodular(Supermodular::LogisticProduct { factors, .. }) => {
                let vals: Vec<(f64, f64, f64)> = factors
                    .iter()
                    .map(|(i, c, s)| logistic_derivs((x[*i] - c) / s))
                    .collect();
                for (k, (i, _, si)) in factors.iter().enumerate() {
                    for (l, (j, _, sj)) in factors.iter().enumerate() {
                        let rest: f64 = vals
                            .iter()
                            .enumerate()
                            .filter(|(m, _)| *m != k && *m != l)
                            .map(|(_, v)| v.0)
                            .product();
                        let term = if k == l {
                            vals[k].2 / (si * si) * rest
                        } else {
                            vals[k].1 / si * vals[l].1 / sj * rest
                        };
                        out[i * d + j] += term;
                    }
                }
            }
            Self::Supermodular(Supermodular::Bilinear { i, j, .. }) => {
                out[i * d + j] = 1.0;
                out[j * d + i] = 1.0;
            }
            Self::Indicator(_) => {
                out.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }
    }
}

/// Pointwise product `f · g` with product-rule derivatives.
pub struct Product<'a, A: ?Sized, B: ?Sized> {
    pub f: &'a A,
    pub g: &'a B,
}

impl<A: SmoothFunction + ?Sized, B: SmoothFunction + ?Sized> Observable for Product<'_, A, B> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.f.eval(x) * self.g.eval(x)
    }
}

impl<A: SmoothFunction + ?Sized, B: SmoothFunction + ?Sized> SmoothFunction for Product<'_, A, B> {
    fn sup_bound(&self) -> Option<f64> {
        Some(self.f.sup_bound()? * self.g.sup_bound()?)
    }

    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (fv, gv) = (self.f.eval(x), self.g.eval(x));
        let mut gf = vec![0.0; d];
        let mut gg = vec![0.0; d];
        self.f.gradient(x, &mut gf);
        self.g.gradient(x, &mut gg);
        for i in 0..d {
            out[i] = fv * gg[i] + gv * gf[i];
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (fv, gv) = (self.f.eval(x), self.g.eval(x));
        let mut gf = vec![0.0; d];
        let mut gg = vec![0.0; d];
        let mut hf = vec![0.0; d * d];
        let mut hg = vec![0.0; d * d];
        self.f.gradient(x, &mut gf);
        self.g.gradient(x, &mut gg);
        self.f.hessian(x, &mut hf);
        self.g.hessian(x, &mut hg);
        for a in 0..d {
            for b in 0..d {
                out[a * d + b] =
                    fv * hg[a * d + b] + gv * hf[a * d + b] + gf[a] * gg[b] + gg[a] * gf[b];
            }
        }
    }
}

/// Per-coordinate location and scale used to place bank functions where
/// the data live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Calibration {
    pub fn unit(dim: usize) -> Self {
        Self {
            location: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn centered_at(location: Vec<f64>) -> Self {
        let d = location.len();
        Self {
            location,
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }
}

/// Seeded collections of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionBank {
    pub seed: u64,
    pub pairs: Vec<(TestFunction, TestFunction)>,
}

impl FunctionBank {
    pub const DEFAULT_SIZE: usize = 32;

    /// `k` pairs of non-decreasing logistic functions. The first pairs are
    /// the coordinate logistics `(σ(x_i), σ(x_j))`, `i < j`; the rest use
    /// random sparse directions `w ≥ 0`.
    pub fn monotone_pairs(k: usize, seed: u64, cal: &Calibration) -> Self {
        let d = cal.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(k);
        'outer: for i in 0..d {
            for j in (i + 1)..d {
                if pairs.len() == k {
                    break 'outer;
                }
                pairs.push((unit_logistic(cal, i, 0.0), unit_logistic(cal, j, 0.0)));
            }
        }
        while pairs.len() < k {
            let f = random_logistic(&mut rng, cal, None);
            let g = random_logistic(&mut rng, cal, None);
            pairs.push((f, g));
        }
        Self { seed, pairs }
    }

    /// Pairs whose members depend only on the coordinate blocks `left` and
    /// `right` respectively.
    pub fn block_pairs(
        k: usize,
        seed: u64,
        cal: &Calibration,
        left: &[usize],
        right: &[usize],
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..k)
            .map(|_| {
                (
                    random_logistic(&mut rng, cal, Some(left)),
                    random_logistic(&mut rng, cal, Some(right)),
                )
            })
            .collect();
        Self { seed, pairs }
    }

    /// `k` pairs of non-decreasing supermodular logistic products.
    pub fn supermodular_pairs(k: usize, seed: u64, cal: &Calibration) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..k)
            .map(|_| (random_product(&mut rng, cal), random_product(&mut rng, cal)))
            .collect();
        Self { seed, pairs }
    }

    /// `k` supermodular functions for the independent-copy comparison: all
    /// centered bilinear forms first, then logistic products.
    pub fn supermodular_functions(k: usize, seed: u64, cal: &Calibration) -> Vec<TestFunction> {
        let d = cal.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(k);
        'outer: for i in 0..d {
            for j in (i + 1)..d {
                if out.len() == k {
                    break 'outer;
                }
                out.push(TestFunction::bilinear(d, i, j));
            }
        }
        while out.len() < k {
            out.push(random_product(&mut rng, cal));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_logistic(cal: &Calibration, i: usize, c: f64) -> TestFunction {
    let d = cal.dim();
    let mut w = vec![0.0; d];
    w[i] = 1.0 / cal.scale[i];
    TestFunction::logistic(w, c + cal.location[i] / cal.scale[i], 1.0)
}

fn random_logistic<R: Rng>(
    rng: &mut R,
    cal: &Calibration,
    block: Option<&[usize]>,
) -> TestFunction {
    let d = cal.dim();
    let allowed: Vec<usize> = match block {
        Some(b) => b.to_vec(),
        None => (0..d).collect(),
    };
    let mut w = vec![0.0; d];
    loop {
        for &i in &allowed {
            w[i] = if rng.random::<f64>() < 0.5 {
                0.0
            } else {
                Exp1.sample(rng)
            };
        }
        if w.iter().any(|v| *v > 0.0) {
            break;
        }
    }
    let norm: f64 = w.iter().sum();
    let c: f64 = 0.5 * sample_normal(rng);
    // σ(Σ w_i (x_i - loc_i) / scale_i / |w|_1 - c)
    let weights: Vec<f64> = (0..d).map(|i| w[i] / norm / cal.scale[i]).collect();
    let shift = c
        + (0..d)
            .map(|i| w[i] / norm * cal.location[i] / cal.scale[i])
            .sum::<f64>();
    TestFunction::logistic(weights, shift, 1.0)
}

fn random_product<R: Rng>(rng: &mut R, cal: &Calibration) -> TestFunction {
    let d = cal.dim();
    let mut factors = Vec::new();
    while factors.len() < 2.min(d) {
        factors.clear();
        for i in 0..d {
            if d <= 2 || rng.random::<f64>() < 0.6 {
                let c: f64 = 0.5 * sample_normal(rng);
                let s = 0.5 + rng.random::<f64>();
                factors.push((i, cal.location[i] + c * cal.scale[i], s * cal.scale[i]));
            }
        }
    }
    TestFunction::Supermodular(Supermodular::LogisticProduct { dim: d, factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &dyn SmoothFunction, x: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
            })
            .collect()
    }

    fn fd_hessian(f: &dyn SmoothFunction, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let h = 1e-4;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let mut gp = vec![0.0; d];
            let mut gm = vec![0.0; d];
            f.gradient(&xp, &mut gp);
            f.gradient(&xm, &mut gm);
            for j in 0..d {
                out[j * d + i] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        out
    }

    fn sample_functions() -> Vec<TestFunction> {
        let cal = Calibration::unit(3);
        let mut fs: Vec<TestFunction> = FunctionBank::monotone_pairs(6, 1, &cal)
            .pairs
            .into_iter()
            .flat_map(|(f, g)| [f, g])
            .collect();
        fs.extend(FunctionBank::supermodular_functions(6, 2, &cal));
        fs
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in sample_functions() {
            for _ in 0..20 {
                let x: Vec<f64> = (0..3).map(|_| 2.0 * sample_normal(&mut rng)).collect();
                let mut g = vec![0.0; 3];
                f.gradient(&x, &mut g);
                let fd = fd_gradient(&f, &x);
                for (a, b) in g.iter().zip(&fd) {
                    assert!(
                        (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                        "{} {a} {b}",
                        f.id()
                    );
                }
                let mut h = vec![0.0; 9];
                f.hessian(&x, &mut h);
                let fdh = fd_hessian(&f, &x);
                for (a, b) in h.iter().zip(&fdh) {
                    assert!(
                        (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                        "{} {a} {b}",
                        f.id()
                    );
                }
            }
        }
    }

    #[test]
    fn product_rule_derivatives() {
        let f = TestFunction::coordinate_logistic(2, 0);
        let g = TestFunction::logistic(vec![0.3, 1.2], 0.4, 0.7);
        let p = Product { f: &f, g: &g };
        let x = [0.2, -0.5];
        let mut grad = vec![0.0; 2];
        p.gradient(&x, &mut grad);
        let fd = fd_gradient(&p, &x);
        for (a, b) in grad.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut h = vec![0.0; 4];
        p.hessian(&x, &mut h);
        for (a, b) in h.iter().zip(fd_hessian(&p, &x)) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn monotone_bank_is_non_decreasing() {
        let cal = Calibration {
            location: vec![1.0, -2.0, 0.5],
            scale: vec![2.0, 0.5, 1.0],
        };
        let bank = FunctionBank::monotone_pairs(32, 9, &cal);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (f, g) in &bank.pairs {
            for _ in 0..10 {
                let x: Vec<f64> = (0..3).map(|_| 3.0 * sample_normal(&mut rng)).collect();
                for h in [f, g] {
                    let mut grad = vec![0.0; 3];
                    h.gradient(&x, &mut grad);
                    assert!(grad.iter().all(|v| *v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn supermodular_inequality_on_random_pairs() {
        let cal = Calibration::unit(3);
        let fs = FunctionBank::supermodular_functions(10, 4, &cal);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for f in &fs {
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| 2.0 * sample_normal(&mut rng)).collect();
                let y: Vec<f64> = (0..3).map(|_| 2.0 * sample_normal(&mut rng)).collect();
                let meet: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.min(*b)).collect();
                let join: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
                let lhs = f.eval(&meet) + f.eval(&join);
                let rhs = f.eval(&x) + f.eval(&y);
                assert!(lhs >= rhs - 1e-12, "{}", f.id());
            }
        }
    }

    #[test]
    fn indicator_values() {
        let up = TestFunction::upper_orthant(vec![0.0, 1.0]);
        assert_eq!(up.eval(&[0.5, 1.5]), 1.0);
        assert_eq!(up.eval(&[0.5, 1.0]), 0.0);
        assert!(!up.is_smooth());
    }
}
