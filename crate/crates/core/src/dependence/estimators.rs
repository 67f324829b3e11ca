use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{DependenceReport, ReportRow, SampleMatrix, TestKind};
use crate::error::{check_dim, invalid, FellerError, Result};
use crate::levy::{FunctionBank, Observable, TestFunction};
use crate::numeric::{derive_seed, mean, NeumaierSum};
use crate::processes::{simulate, ProcessSpec};

/// Below this many samples every row is inconclusive.
pub const MIN_SAMPLES: usize = 100;

/// Orthant rows need `n · max(joint, product) ≥ MIN_CELL_COUNT`.
pub const MIN_CELL_COUNT: f64 = 20.0;

/// Sample covariance `Σ (a - ā)(b - b̄) / (n - 1)` with its delete-one
/// jackknife standard error.
pub fn covariance_with_jackknife(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len();
    assert_eq!(n, b.len());
    if n < 3 {
        return (f64::NAN, f64::NAN);
    }
    let (ma, mb) = (mean(a), mean(b));
    let ca: Vec<f64> = a.iter().map(|v| v - ma).collect();
    let cb: Vec<f64> = b.iter().map(|v| v - mb).collect();
    let mut sa = NeumaierSum::new();
    let mut sb = NeumaierSum::new();
    let mut sab = NeumaierSum::new();
    for (x, y) in ca.iter().zip(&cb) {
        sa.add(*x);
        sb.add(*y);
        sab.add(x * y);
    }
    let (sa, sb, sab) = (sa.total(), sb.total(), sab.total());
    let nf = n as f64;
    let cov = (sab - sa * sb / nf) / (nf - 1.0);
    let loo: Vec<f64> = ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| ((sab - x * y) - (sa - x) * (sb - y) / (nf - 1.0)) / (nf - 2.0))
        .collect();
    let m = mean(&loo);
    let mut ss = NeumaierSum::new();
    for v in &loo {
        ss.add((v - m) * (v - m));
    }
    (cov, ((nf - 1.0) / nf * ss.total()).sqrt())
}

fn covariance_rows(
    samples: &SampleMatrix,
    pairs: &[(TestFunction, TestFunction)],
    prefix: &str,
) -> Vec<ReportRow> {
    let n = samples.n();
    pairs
        .par_iter()
        .map(|(f, g)| {
            let a: Vec<f64> = samples.rows().map(|x| f.eval(x)).collect();
            let b: Vec<f64> = samples.rows().map(|x| g.eval(x)).collect();
            let (cov, se) = covariance_with_jackknife(&a, &b);
            let id = format!("{prefix}{}|{}", f.id(), g.id());
            if n < MIN_SAMPLES {
                ReportRow::inconclusive(id, cov, se)
            } else {
                ReportRow::new(id, cov, se)
            }
        })
        .collect()
}

fn check_bank(samples: &SampleMatrix, pairs: &[(TestFunction, TestFunction)]) -> Result<()> {
    use crate::levy::SmoothFunction;
    for (f, g) in pairs {
        check_dim(samples.dim(), f.dim())?;
        check_dim(samples.dim(), g.dim())?;
    }
    Ok(())
}

/// `Cov(f(X), g(X)) ≥ 0` over monotone pairs.
pub fn assoc_test(samples: &SampleMatrix, bank: &FunctionBank) -> Result<DependenceReport> {
    check_bank(samples, &bank.pairs)?;
    let rows = covariance_rows(samples, &bank.pairs, "");
    Ok(DependenceReport::new(
        TestKind::A,
        rows,
        samples.n(),
        bank.seed,
    ))
}

/// Weak association: covariance of monotone functions of disjoint
/// coordinate blocks `(I, J)`. Each block pair gets `pairs_per_block`
/// functions calibrated to the sample.
pub fn wa_test(
    samples: &SampleMatrix,
    partitions: &[(Vec<usize>, Vec<usize>)],
    pairs_per_block: usize,
    seed: u64,
) -> Result<DependenceReport> {
    let d = samples.dim();
    let cal = samples.calibration();
    let mut rows = Vec::new();
    for (k, (left, right)) in partitions.iter().enumerate() {
        if left.is_empty() || right.is_empty() {
            return Err(invalid("partitions", "blocks must be non-empty"));
        }
        if left.iter().chain(right).any(|i| *i >= d) {
            return Err(invalid(
                "partitions",
                format!("index out of range for dimension {d}"),
            ));
        }
        if left.iter().any(|i| right.contains(i)) {
            return Err(invalid("partitions", "blocks must be disjoint"));
        }
        let bank = FunctionBank::block_pairs(
            pairs_per_block,
            derive_seed(seed, k as u64),
            &cal,
            left,
            right,
        );
        let prefix = format!("I={left:?};J={right:?}:");
        rows.extend(covariance_rows(samples, &bank.pairs, &prefix));
    }
    Ok(DependenceReport::new(TestKind::WA, rows, samples.n(), seed))
}

/// Every pair of singletons, plus a half split when `d ≥ 3`.
pub fn default_partitions(d: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            out.push((vec![i], vec![j]));
        }
    }
    if d >= 3 {
        out.push(((0..d / 2).collect(), (d / 2..d).collect()));
    }
    out
}

/// Positive supermodular association: covariance over pairs of
/// non-decreasing supermodular functions.
pub fn psa_test(samples: &SampleMatrix, bank: &FunctionBank) -> Result<DependenceReport> {
    check_bank(samples, &bank.pairs)?;
    let rows = covariance_rows(samples, &bank.pairs, "");
    Ok(DependenceReport::new(
        TestKind::PSA,
        rows,
        samples.n(),
        bank.seed,
    ))
}

/// The independent-marginals copy: column `j` permuted with stream `j` of
/// the generator seeded by `seed`.
pub fn independent_copy(samples: &SampleMatrix, seed: u64) -> SampleMatrix {
    let (n, d) = (samples.n(), samples.dim());
    let mut data = vec![0.0; n * d];
    for j in 0..d {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = crate::processes::stream_rng(seed, j as u64);
        order.shuffle(&mut rng);
        for (i, src) in order.iter().enumerate() {
            data[i * d + j] = samples.row(*src)[j];
        }
    }
    SampleMatrix::new(data, d).expect("same shape")
}

/// `E f(X) - E f(X̂)` for supermodular `f`, `X̂` the independent-marginals
/// copy.
pub fn psd_test(
    samples: &SampleMatrix,
    functions: &[TestFunction],
    seed: u64,
) -> Result<DependenceReport> {
    use crate::levy::SmoothFunction;
    for f in functions {
        check_dim(samples.dim(), f.dim())?;
    }
    let n = samples.n();
    let copy = independent_copy(samples, seed);
    let rows = functions
        .par_iter()
        .map(|f| {
            let a: Vec<f64> = samples.rows().map(|x| f.eval(x)).collect();
            let b: Vec<f64> = copy.rows().map(|x| f.eval(x)).collect();
            let (ma, sa) = crate::numeric::mean_and_se(&a);
            let (mb, sb) = crate::numeric::mean_and_se(&b);
            let est = ma - mb;
            let se = crate::numeric::pooled_se(sa, sb);
            if n < MIN_SAMPLES {
                ReportRow::inconclusive(f.id(), est, se)
            } else {
                ReportRow::new(f.id(), est, se)
            }
        })
        .collect();
    Ok(DependenceReport::new(TestKind::PSD, rows, n, seed))
}

/// Thresholds at the given per-coordinate empirical quantiles, crossed over
/// coordinates (`|qs|^d` vectors).
pub fn quantile_thresholds(samples: &SampleMatrix, qs: &[f64]) -> Vec<Vec<f64>> {
    let d = samples.dim();
    let per: Vec<Vec<f64>> = (0..d)
        .map(|j| qs.iter().map(|q| samples.quantile(j, *q)).collect())
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for levels in &per {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                levels.iter().map(move |l| {
                    let mut v = prefix.clone();
                    v.push(*l);
                    v
                })
            })
            .collect();
    }
    out
}

fn orthant_row(samples: &SampleMatrix, t: &[f64], upper: bool) -> ReportRow {
    let (n, d) = (samples.n(), samples.dim());
    let hit = |v: f64, s: f64| if upper { v > s } else { v <= s };
    let mut marg = vec![0usize; d];
    let mut joint = 0usize;
    for x in samples.rows() {
        let mut all = true;
        for j in 0..d {
            if hit(x[j], t[j]) {
                marg[j] += 1;
            } else {
                all = false;
            }
        }
        joint += all as usize;
    }
    let nf = n as f64;
    let p: Vec<f64> = marg.iter().map(|c| *c as f64 / nf).collect();
    let pj = joint as f64 / nf;
    let prod: f64 = p.iter().product();
    let gap = pj - prod;
    // Influence function of pJ - Π p_i.
    let partial: Vec<f64> = (0..d)
        .map(|i| (0..d).filter(|j| *j != i).map(|j| p[j]).product())
        .collect();
    let mut ss = NeumaierSum::new();
    for x in samples.rows() {
        let mut all = true;
        let mut infl = 0.0;
        for j in 0..d {
            let a = hit(x[j], t[j]);
            all &= a;
            infl -= partial[j] * (a as u8 as f64 - p[j]);
        }
        infl += all as u8 as f64 - pj;
        ss.add(infl * infl);
    }
    let se = if n > 1 {
        (ss.total() / (nf * (nf - 1.0))).sqrt()
    } else {
        f64::NAN
    };
    let id = format!(
        "t=({})",
        t.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(";")
    );
    if n < MIN_SAMPLES || nf * pj.max(prod) < MIN_CELL_COUNT {
        ReportRow::inconclusive(id, gap, se)
    } else {
        ReportRow::new(id, gap, se)
    }
}

fn orthant_test(
    samples: &SampleMatrix,
    thresholds: &[Vec<f64>],
    upper: bool,
) -> Result<DependenceReport> {
    for t in thresholds {
        check_dim(samples.dim(), t.len())?;
    }
    let rows = thresholds
        .par_iter()
        .map(|t| orthant_row(samples, t, upper))
        .collect();
    let kind = if upper {
        TestKind::PUOD
    } else {
        TestKind::PLOD
    };
    Ok(DependenceReport::new(kind, rows, samples.n(), 0))
}

/// `P(X > t) - Π P(X_i > t_i)` per threshold vector.
pub fn puod_test(samples: &SampleMatrix, thresholds: &[Vec<f64>]) -> Result<DependenceReport> {
    orthant_test(samples, thresholds, true)
}

/// `P(X ≤ t) - Π P(X_i ≤ t_i)` per threshold vector.
pub fn plod_test(samples: &SampleMatrix, thresholds: &[Vec<f64>]) -> Result<DependenceReport> {
    orthant_test(samples, thresholds, false)
}

/// Positive orthant dependence: both orthant reports, verdict their
/// conjunction.
pub fn pod(puod: &DependenceReport, plod: &DependenceReport) -> Result<DependenceReport> {
    if puod.test != TestKind::PUOD || plod.test != TestKind::PLOD {
        return Err(FellerError::Precondition(
            "pod needs a PUOD and a PLOD report".into(),
        ));
    }
    let rows = puod
        .rows
        .iter()
        .map(|r| ReportRow {
            id: format!("upper {}", r.id),
            ..r.clone()
        })
        .chain(plod.rows.iter().map(|r| ReportRow {
            id: format!("lower {}", r.id),
            ..r.clone()
        }))
        .collect();
    let mut report = DependenceReport::new(TestKind::POD, rows, puod.n, puod.seed);
    report.verdict = puod.verdict.and(plod.verdict);
    Ok(report)
}

/// Quantile levels behind the default orthant thresholds.
pub const DEFAULT_QUANTILES: [f64; 3] = [0.25, 0.5, 0.75];

/// One spatial test on `samples` with a seeded bank of `bank_size`
/// members calibrated to the sample. Orthant tests use `thresholds`, or
/// crossed [`DEFAULT_QUANTILES`] when `None`.
pub fn spatial_test(
    kind: TestKind,
    samples: &SampleMatrix,
    bank_size: usize,
    seed: u64,
    thresholds: Option<&[Vec<f64>]>,
) -> Result<DependenceReport> {
    let cal = samples.calibration();
    let default_thresholds;
    let thresholds = match thresholds {
        Some(t) => t,
        None => {
            default_thresholds = quantile_thresholds(samples, &DEFAULT_QUANTILES);
            &default_thresholds
        }
    };
    let mut report = match kind {
        TestKind::A => assoc_test(
            samples,
            &FunctionBank::monotone_pairs(bank_size, derive_seed(seed, 1), &cal),
        )?,
        TestKind::WA => wa_test(
            samples,
            &default_partitions(samples.dim()),
            bank_size,
            derive_seed(seed, 2),
        )?,
        TestKind::PSA => psa_test(
            samples,
            &FunctionBank::supermodular_pairs(bank_size, derive_seed(seed, 3), &cal),
        )?,
        TestKind::PSD => psd_test(
            samples,
            &FunctionBank::supermodular_functions(bank_size, derive_seed(seed, 4), &cal),
            derive_seed(seed, 5),
        )?,
        TestKind::PUOD => puod_test(samples, thresholds)?,
        TestKind::PLOD => plod_test(samples, thresholds)?,
        TestKind::POD => pod(
            &puod_test(samples, thresholds)?,
            &plod_test(samples, thresholds)?,
        )?,
        TestKind::TemporalA => {
            return Err(FellerError::Precondition(
                "temporal association needs a process, not a sample".into(),
            ))
        }
    };
    report.seed = seed;
    Ok(report)
}

/// The seven spatial tests, ordered as [`TestKind::SPATIAL`].
pub fn spatial_suite(
    samples: &SampleMatrix,
    bank_size: usize,
    seed: u64,
) -> Result<Vec<DependenceReport>> {
    TestKind::SPATIAL
        .iter()
        .map(|k| spatial_test(*k, samples, bank_size, seed, None))
        .collect()
}

/// Association of `(X_{t_1}, …, X_{t_m})` in `ℝ^{dm}`.
pub fn temporal_assoc_test(
    spec: &ProcessSpec,
    x: &[f64],
    grid: &[f64],
    n_paths: usize,
    seed: u64,
    bank_size: usize,
) -> Result<DependenceReport> {
    let dm = spec.dim() * grid.len();
    if dm > 6 {
        return Err(FellerError::Precondition(format!(
            "stacked dimension {dm} exceeds 6; use fewer times"
        )));
    }
    let ensemble = simulate(spec, x, grid, n_paths, seed)?;
    let ks: Vec<usize> = (0..grid.len()).collect();
    let stacked = ensemble.stacked(&ks);
    let bank =
        FunctionBank::monotone_pairs(bank_size, derive_seed(seed, 0xBA4C), &stacked.calibration());
    let mut report = assoc_test(&stacked, &bank)?;
    report.test = TestKind::TemporalA;
    report.seed = seed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::Verdict;
    use crate::processes::stream_rng;
    use rand::Rng;

    fn uniform_pairs(n: usize, seed: u64, map: impl Fn(f64, f64) -> (f64, f64)) -> SampleMatrix {
        let mut rng = stream_rng(seed, 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let (a, b) = map(rng.random(), rng.random());
                vec![a, b]
            })
            .collect();
        SampleMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn jackknife_matches_textbook_covariance() {
        let a = [1.0, 2.0, 4.0, 7.0, 11.0];
        let b = [2.0, 1.0, 5.0, 6.0, 13.0];
        let (cov, se) = covariance_with_jackknife(&a, &b);
        let (ma, mb) = (5.0, 5.4);
        let direct: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / 4.0;
        assert!((cov - direct).abs() < 1e-12);
        // Brute-force delete-one recomputation.
        let loo: Vec<f64> = (0..5)
            .map(|i| {
                let aa: Vec<f64> = a
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .collect();
                let bb: Vec<f64> = b
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .collect();
                let (m1, m2) = (mean(&aa), mean(&bb));
                aa.iter()
                    .zip(&bb)
                    .map(|(x, y)| (x - m1) * (y - m2))
                    .sum::<f64>()
                    / 3.0
            })
            .collect();
        let m = mean(&loo);
        let brute = (0.8 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt();
        assert!((se - brute).abs() < 1e-12);
    }

    #[test]
    fn comonotone_uniform_is_associated_and_powered() {
        let s = uniform_pairs(10_000, 1, |u, _| (u, u));
        let bank = FunctionBank::monotone_pairs(FunctionBank::DEFAULT_SIZE, 3, &s.calibration());
        let r = assoc_test(&s, &bank).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        let powered = r.rows.iter().filter(|row| row.is_powered()).count();
        assert!(powered * 2 > r.rows.len(), "{powered}");
    }

    #[test]
    fn small_samples_are_inconclusive() {
        let s = uniform_pairs(50, 1, |u, v| (u, v));
        let bank = FunctionBank::monotone_pairs(4, 3, &s.calibration());
        let r = assoc_test(&s, &bank).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.verdict == Verdict::Inconclusive));
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn supermodular_difference_closed_forms() {
        let f = [TestFunction::bilinear(2, 0, 1)];
        let co = uniform_pairs(100_000, 2, |u, _| (u, u));
        let r = psd_test(&co, &f, 5).unwrap();
        assert!(
            (r.rows[0].estimate - 1.0 / 12.0).abs() < 3.0 * r.rows[0].se + 1e-3,
            "{:?}",
            r.rows[0]
        );
        let anti = uniform_pairs(100_000, 2, |u, _| (u, 1.0 - u));
        let r = psd_test(&anti, &f, 5).unwrap();
        assert!((r.rows[0].estimate + 1.0 / 12.0).abs() < 3.0 * r.rows[0].se + 1e-3);
        assert_eq!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn psd_sign_flips_with_negated_coordinate() {
        let f = [TestFunction::bilinear(2, 0, 1)];
        let co = uniform_pairs(20_000, 4, |u, _| (u, u));
        let neg = co.map_coordinates(|j, v| if j == 1 { -v } else { v });
        let a = psd_test(&co, &f, 9).unwrap().rows[0].estimate;
        let b = psd_test(&neg, &f, 9).unwrap().rows[0].estimate;
        assert!((a + b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn orthant_gap_common_shock_oracle() {
        let rows: Vec<Vec<f64>> = (0..4).map(|k| vec![k as f64, k as f64]).collect();
        let weights = [0.5, 0.25, 0.125, 0.125];
        // Exact data: replicate rows by weight to get a deterministic sample.
        let mut data = Vec::new();
        for (r, w) in rows.iter().zip(weights) {
            for _ in 0..(w * 800.0) as usize {
                data.push(r.clone());
            }
        }
        let s = SampleMatrix::from_rows(&data).unwrap();
        let r = puod_test(&s, &[vec![0.0, 0.0]]).unwrap();
        assert!((r.rows[0].estimate - (0.5 - 0.25)).abs() < 1e-12);
        let l = plod_test(&s, &[vec![0.0, 0.0]]).unwrap();
        assert!((l.rows[0].estimate - 0.25).abs() < 1e-12);
    }

    #[test]
    fn orthant_influence_se_matches_delta_method_by_simulation() {
        // Spread of the gap over replications versus the reported s.e.
        let reps = 200;
        let gaps: Vec<(f64, f64)> = (0..reps)
            .map(|k| {
                let s = uniform_pairs(2_000, 100 + k, |u, v| (u, 0.5 * u + 0.5 * v));
                let row = &puod_test(&s, &[vec![0.5, 0.5]]).unwrap().rows[0];
                (row.estimate, row.se)
            })
            .collect();
        let est: Vec<f64> = gaps.iter().map(|g| g.0).collect();
        let spread = crate::numeric::sample_variance(&est).sqrt();
        let mean_se = mean(&gaps.iter().map(|g| g.1).collect::<Vec<_>>());
        assert!(
            (spread / mean_se - 1.0).abs() < 0.2,
            "{spread} vs {mean_se}"
        );
    }

    #[test]
    fn quantile_grid_is_crossed() {
        let s = uniform_pairs(1_000, 1, |u, v| (u, v));
        let t = quantile_thresholds(&s, &[0.25, 0.5, 0.75]);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0][0], t[1][0]);
        assert!(t[0][1] < t[1][1]);
    }

    #[test]
    fn pod_is_conjunction() {
        let s = uniform_pairs(5_000, 3, |u, _| (u, 1.0 - u));
        let th = quantile_thresholds(&s, &[0.5]);
        let up = puod_test(&s, &th).unwrap();
        let lo = plod_test(&s, &th).unwrap();
        let p = pod(&up, &lo).unwrap();
        assert_eq!(p.verdict, up.verdict.and(lo.verdict));
        assert_eq!(p.verdict, Verdict::Violated);
        assert_eq!(p.rows.len(), up.rows.len() + lo.rows.len());
        assert!(pod(&lo, &up).is_err());
    }

    #[test]
    fn wa_rejects_overlapping_blocks() {
        let s = uniform_pairs(200, 1, |u, v| (u, v));
        assert!(wa_test(&s, &[(vec![0], vec![0])], 2, 1).is_err());
        assert!(wa_test(&s, &[(vec![0], vec![2])], 2, 1).is_err());
        assert_eq!(default_partitions(3).len(), 4);
    }
}
