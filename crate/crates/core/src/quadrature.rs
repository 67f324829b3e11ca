//! Adaptive Gauss–Kronrod (10/21 point) quadrature with error estimates,
//! plus a nested tensor-product driver for low-dimensional boxes.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{FellerError, Result};

/// Values that can be integrated: a small vector space with a norm.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// Tolerances for adaptive quadrature. Convergence means
/// `error <= max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_239_271_391,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod rule with embedded 10-point Gauss rule on `[a, b]`.
pub fn gauss_kronrod_21<V, F>(f: &mut F, a: f64, b: f64) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = V::zero();
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    QuadResult {
        value: kronrod,
        error: (kronrod - gauss).norm(),
    }
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, with the interval
/// pre-split at the given interior `breakpoints`.
///
/// Returns the best estimate even when the tolerance is not met; callers
/// decide whether a large error is fatal (see [`require_converged`]).
pub fn integrate<V, F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if a == b {
        return QuadResult {
            value: V::zero(),
            error: 0.0,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| *p > lo && *p < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut left = lo;
    for right in cuts.into_iter().chain(std::iter::once(hi)) {
        let r = gauss_kronrod_21(&mut f, left, right);
        heap.push(Segment {
            a: left,
            b: right,
            value: r.value,
            error: r.error,
        });
        left = right;
    }

    let totals = |heap: &BinaryHeap<Segment<V>>| {
        heap.iter()
            .fold((V::zero(), 0.0), |(v, e), s| (v + s.value, e + s.error))
    };

    let mut splits = 0;
    loop {
        let (value, error) = totals(&heap);
        if error <= opts.target(value.norm()) || splits >= opts.max_subdivisions {
            return QuadResult {
                value: value * sign,
                error,
            };
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            let (value, error) = totals(&heap);
            return QuadResult {
                value: value * sign,
                error,
            };
        }
        let l = gauss_kronrod_21(&mut f, worst.a, mid);
        let r = gauss_kronrod_21(&mut f, mid, worst.b);
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: l.value,
            error: l.error,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: r.value,
            error: r.error,
        });
        splits += 1;
    }
}

/// Turns an unconverged result into [`FellerError::Quadrature`].
pub fn require_converged<V: QuadValue>(
    r: QuadResult<V>,
    opts: &QuadOptions,
) -> Result<QuadResult<V>> {
    let tol = opts.target(r.value.norm());
    if r.error.is_finite() && r.error <= tol {
        Ok(r)
    } else {
        Err(FellerError::Quadrature {
            error: r.error,
            tolerance: tol,
        })
    }
}

/// Integrates over `[0, inf)` after the map `y = s / (1 - s)`.
pub fn integrate_half_line<V, F>(mut f: F, opts: &QuadOptions) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    integrate(
        |s: f64| {
            if s >= 1.0 {
                return V::zero();
            }
            let one_minus = 1.0 - s;
            let y = s / one_minus;
            f(y) * (1.0 / (one_minus * one_minus))
        },
        0.0,
        1.0,
        &[],
        opts,
    )
}

/// Pair of an integrand value and the inner-integration error carried along
/// by the nested driver.
#[derive(Clone, Copy)]
struct WithError<V> {
    value: V,
    inner_error: f64,
}

impl<V: QuadValue> Add for WithError<V> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            inner_error: self.inner_error + o.inner_error,
        }
    }
}
impl<V: QuadValue> Sub for WithError<V> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            inner_error: self.inner_error - o.inner_error,
        }
    }
}
impl<V: QuadValue> Mul<f64> for WithError<V> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            inner_error: self.inner_error * k,
        }
    }
}
impl<V: QuadValue> QuadValue for WithError<V> {
    fn zero() -> Self {
        Self {
            value: V::zero(),
            inner_error: 0.0,
        }
    }
    // Only the value drives refinement; inner error is accumulated.
    fn norm(&self) -> f64 {
        self.value.norm()
    }
}

/// Tensor-product adaptive integration of `f` over the box
/// `[lower_i, upper_i]`. At each level the interval is split where the
/// Euclidean unit sphere crosses the current slice, so integrands
/// containing the cutoff indicator stay piecewise smooth.
///
/// Inner integrations run at a tighter tolerance and their error estimates
/// are integrated alongside the value.
pub fn integrate_box<V, F>(f: &F, lower: &[f64], upper: &[f64], opts: &QuadOptions) -> QuadResult<V>
where
    V: QuadValue,
    F: Fn(&[f64]) -> V + Sync,
{
    assert_eq!(lower.len(), upper.len());
    let d = lower.len();
    let mut point = vec![0.0; d];
    let r = nested(f, lower, upper, opts, 0, &mut point);
    QuadResult {
        value: r.value.value,
        error: r.error + r.value.inner_error.abs(),
    }
}

fn sphere_breakpoints(prefix: &[f64]) -> Vec<f64> {
    let r2: f64 = prefix.iter().map(|v| v * v).sum();
    if r2 < 1.0 {
        let h = (1.0 - r2).sqrt();
        vec![-h, h]
    } else {
        Vec::new()
    }
}

fn nested<V, F>(
    f: &F,
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
    level: usize,
    point: &mut Vec<f64>,
) -> QuadResult<WithError<V>>
where
    V: QuadValue,
    F: Fn(&[f64]) -> V + Sync,
{
    let d = lower.len();
    let breaks = {
        let mut b = sphere_breakpoints(&point[..level]);
        b.push(0.0);
        b
    };
    if level + 1 == d {
        let r = integrate(
            |y| {
                point[level] = y;
                WithError {
                    value: f(point),
                    inner_error: 0.0,
                }
            },
            lower[level],
            upper[level],
            &breaks,
            opts,
        );
        return r;
    }
    let width = (upper[level] - lower[level]).abs().max(1e-300);
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol / (2.0 * width),
        rel_tol: opts.rel_tol * 0.25,
        max_subdivisions: opts.max_subdivisions,
    };
    let outer_opts = QuadOptions {
        abs_tol: opts.abs_tol * 0.5,
        ..*opts
    };
    let mut scratch = point.clone();
    integrate(
        |y| {
            scratch[level] = y;
            let inner = nested(f, lower, upper, &inner_opts, level + 1, &mut scratch);
            WithError {
                value: inner.value.value,
                inner_error: inner.error + inner.value.inner_error.abs(),
            }
        },
        lower[level],
        upper[level],
        &breaks,
        &outer_opts,
    )
}
