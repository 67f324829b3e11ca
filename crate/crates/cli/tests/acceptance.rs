//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Exits nonzero when any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fellerdep::dependence::{
    implication_consistency, spatial_suite, spatial_test, temporal_assoc_test, TestKind, Verdict,
};
use fellerdep::levy::Observable;
use fellerdep::levy::{
    liggett_gap, Calibration, FunctionBank, LevyMeasure, OpenBox, StateTriplet, TestFunction,
};
use fellerdep::processes::{presets, simulate, stream_rng, with_jobs, Kernel, ProcessSpec};
use fellerdep::quadrature::QuadOptions;
use fellerdep::semigroup::{
    derivative_commute_check, generator_limit_check, monotonicity_transfer_check, ordered_chains,
    semigroup_apply,
};
use fellerdep::smalltime::{puod_necessity_experiment, smalltime_rate, RegionSpec};
use fellerdep_cli::config::{ExperimentConfig, Overrides};
use fellerdep_cli::run::execute;
use rand::Rng;

const LIGGETT_TOL: f64 = 1e-8;
const SIGN_TOL: f64 = 1e-12;
const SMALL_TIMES: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
const SE_K: f64 = 3.0;

type Outcome = Result<String, String>;

fn preset(name: &str) -> ProcessSpec {
    presets::find(name)
        .unwrap_or_else(|| panic!("preset {name}"))
        .spec()
}

fn sigma(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn poisson_pmf(k: usize, t: f64) -> f64 {
    let mut p = (-t).exp();
    for j in 1..=k {
        p *= t / j as f64;
    }
    p
}

/// `E h(N_t)` for `N_t ~ Poisson(t)`, summed until the tail is negligible.
fn poisson_expect(t: f64, h: impl Fn(f64) -> f64) -> f64 {
    (0..80).map(|k| poisson_pmf(k, t) * h(k as f64)).sum()
}

fn within(est: f64, se: f64, exact: f64) -> bool {
    (est - exact).abs() <= SE_K * se
}

fn random_logistic(rng: &mut impl Rng, d: usize, signed: bool) -> TestFunction {
    let lo = if signed { -1.5 } else { 0.0 };
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(lo..1.5)).collect();
    TestFunction::logistic(w, rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0))
}

fn random_atoms(rng: &mut impl Rng, d: usize, on_orthant: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = rng.random_range(1..=4);
    let mut points = Vec::with_capacity(k);
    for _ in 0..k {
        let p: Vec<f64> = if on_orthant {
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (0..d).map(|_| s * rng.random_range(0.0..2.0)).collect()
        } else {
            (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
        };
        if p.iter().all(|v| *v == 0.0) {
            continue;
        }
        points.push(p);
    }
    if points.is_empty() {
        points.push(vec![0.7; d]);
    }
    let weights = vec![1.0 / points.len() as f64; points.len()];
    (points, weights)
}

fn c01_liggett_identity() -> Outcome {
    let opts = QuadOptions::default();
    let (mut worst, mut worst_oracle) = (0.0f64, 0.0f64);
    for case in 0..100u64 {
        let mut rng = stream_rng(0xC01, case);
        let d = rng.random_range(1..=3);
        let (points, weights) = random_atoms(&mut rng, d, false);
        let rate = rng.random_range(0.2..3.0);
        let drift: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let triplet = StateTriplet::levy(
            drift,
            LevyMeasure::atoms(rate, points.clone(), weights.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let (f, g) = (
            random_logistic(&mut rng, d, true),
            random_logistic(&mut rng, d, true),
        );
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gap = liggett_gap(&triplet, &f, &g, &x, &opts).map_err(|e| e.to_string())?;
        worst = worst.max((gap.direct - gap.reduced).abs() / (1.0 + gap.reduced.abs()));
        let oracle: f64 = points
            .iter()
            .zip(&weights)
            .map(|(y, w)| {
                let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                rate * w * (f.eval(&xy) - f.eval(&x)) * (g.eval(&xy) - g.eval(&x))
            })
            .sum();
        worst_oracle = worst_oracle.max((gap.reduced - oracle).abs());
    }
    let detail = format!(
        "100 cases: max |direct-reduced|/(1+|reduced|) = {worst:.1e} (tol {LIGGETT_TOL:.0e}); reduced vs atom sum {worst_oracle:.1e}"
    );
    if worst <= LIGGETT_TOL && worst_oracle <= LIGGETT_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c02_orthant_nonnegative() -> Outcome {
    let opts = QuadOptions::default();
    let mut min_gap = f64::INFINITY;
    for case in 0..50u64 {
        let mut rng = stream_rng(0xC02, case);
        let d = rng.random_range(2..=3);
        let (points, weights) = random_atoms(&mut rng, d, true);
        let triplet = StateTriplet::levy(
            vec![0.0; d],
            LevyMeasure::atoms(1.0, points, weights).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bank = FunctionBank::monotone_pairs(32, case, &Calibration::centered_at(x.clone()));
        for (f, g) in &bank.pairs {
            min_gap = min_gap.min(
                liggett_gap(&triplet, f, g, &x, &opts)
                    .map_err(|e| e.to_string())?
                    .reduced,
            );
        }
    }
    let detail =
        format!("50 measures x 32 pairs: min reduced gap {min_gap:.3e} (floor -{SIGN_TOL:.0e})");
    if min_gap >= -SIGN_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c03_offorthant_counterexample() -> Outcome {
    let spec = preset("antidiagonal_levy");
    let x = [0.0, 0.0];
    let triplet = spec.effective_triplet(&x).map_err(|e| e.to_string())?;
    let bank = FunctionBank::monotone_pairs(32, 0, &Calibration::centered_at(x.to_vec()));
    let opts = QuadOptions::default();
    let mut negative = 0;
    let mut min_gap = f64::INFINITY;
    for (f, g) in &bank.pairs {
        let r = liggett_gap(&triplet, f, g, &x, &opts)
            .map_err(|e| e.to_string())?
            .reduced;
        min_gap = min_gap.min(r);
        negative += usize::from(r < 0.0);
    }
    let oracle = (sigma(1.0) - 0.5) * (sigma(-1.0) - 0.5);
    let detail = format!(
        "{negative}/32 pairs with negative gap, min {min_gap:.4}; coordinate pair closed form {oracle:.4}"
    );
    if negative > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c04_smalltime_compound_poisson() -> Outcome {
    let spec = preset("diagonal_levy");
    let region = RegionSpec::new(
        "q",
        OpenBox::new(vec![0.5, 0.5], vec![f64::INFINITY; 2]).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let table = smalltime_rate(&spec, &[0.0, 0.0], &[region], &SMALL_TIMES, 54_000.0, 17)
        .map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for r in table.rows_for("q") {
        let exact = (1.0 - (-r.t).exp()) / r.t;
        if !within(r.rate.value, r.rate.std_error, exact) {
            bad.push(format!("t={} {:.4} vs {exact:.4}", r.t, r.rate.value));
        }
    }
    let fit = table
        .fit_for("q")
        .and_then(|f| f.intercept())
        .ok_or("fit failed")?;
    let rel = (fit - 1.0).abs();
    let detail = format!(
        "intercept {fit:.4} (|rel err| {rel:.4} <= 0.03); per-t oracle misses {}; {} paths (<= 1e7)",
        bad.len(),
        table.total_paths
    );
    if rel <= 0.03 && bad.is_empty() && table.total_paths <= 10_000_000 {
        Ok(detail)
    } else {
        Err(format!("{detail} {bad:?}"))
    }
}

fn c05_stable_tail() -> Outcome {
    let spec = preset("alpha_stable_subordinated");
    let region = RegionSpec::new(
        "tail",
        OpenBox::new(vec![1.0], vec![f64::INFINITY]).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let table = smalltime_rate(&spec, &[0.0], &[region], &SMALL_TIMES, 54_000.0, 19)
        .map_err(|e| e.to_string())?;
    // ν(1,∞) = ∫_1^∞ α/Γ(1-α) y^{-1-α} dy = 1/Γ(1/2) at α = 1/2.
    let exact = 1.0 / std::f64::consts::PI.sqrt();
    let fit = table
        .fit_for("tail")
        .and_then(|f| f.intercept())
        .ok_or("fit failed")?;
    let rel = (fit / exact - 1.0).abs();
    let detail =
        format!("intercept {fit:.4} vs 1/sqrt(pi) = {exact:.4}, |rel err| {rel:.4} <= 0.05");
    if rel <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c06_puod_necessity() -> Outcome {
    let spec = preset("antidiagonal_levy");
    let rep = puod_necessity_experiment(&spec, &[0.0, 0.0], &SMALL_TIMES, 54_000.0, 1_000_000, 23)
        .map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for r in &rep.rows {
        let p = 1.0 - (-r.t).exp();
        if !within(r.joint_rate.value, r.joint_rate.std_error, p / r.t) {
            bad.push(format!("joint t={}", r.t));
        }
        if !within(r.product_rate.value, r.product_rate.std_error, p * p / r.t) {
            bad.push(format!("product t={}", r.t));
        }
    }
    let last = rep.rows.last().ok_or("no rows")?;
    let c1 = last.joint_rate.value;
    let c2 = last.product_rate.value;
    let ok = (c1 - 1.0).abs() <= 0.05
        && c2 < 0.05
        && rep.puod.verdict == Verdict::Violated
        && bad.is_empty();
    let detail = format!(
        "t={}: curve 1 {c1:.4} (1 +/- 5%), curve 2 {c2:.4} (< 0.05); PUOD {} at n=1e6; oracle misses {bad:?}",
        last.t,
        rep.puod.verdict.label()
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c07_lattice_positive() -> Outcome {
    let spec = preset("diagonal_levy");
    let samples = simulate(&spec, &[0.0, 0.0], &[1.0], 100_000, 7)
        .map_err(|e| e.to_string())?
        .snapshot(0);
    let reports =
        spatial_suite(&samples, FunctionBank::DEFAULT_SIZE, 0).map_err(|e| e.to_string())?;
    let verdicts: Vec<String> = reports
        .iter()
        .map(|r| format!("{}={}", r.test.label(), r.verdict.label()))
        .collect();
    let contradictions = implication_consistency(&reports);
    let detail = format!(
        "{}; {} contradicted arrows",
        verdicts.join(" "),
        contradictions.len()
    );
    if reports.len() == 7
        && reports.iter().all(|r| r.verdict == Verdict::Consistent)
        && contradictions.is_empty()
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c08_common_shock_gap() -> Outcome {
    let spec = preset("diagonal_levy");
    let samples = simulate(&spec, &[0.0, 0.0], &[1.0], 100_000, 11)
        .map_err(|e| e.to_string())?
        .snapshot(0);
    let rep = spatial_test(
        TestKind::PUOD,
        &samples,
        FunctionBank::DEFAULT_SIZE,
        0,
        Some(&[vec![0.0, 0.0]]),
    )
    .map_err(|e| e.to_string())?;
    let row = rep.rows.first().ok_or("no rows")?;
    let p = 1.0 - (-1.0f64).exp();
    let exact = p - p * p;
    let detail = format!(
        "gap {:.5} +/- {:.5} vs {exact:.5} (3 s.e.)",
        row.estimate, row.se
    );
    if rep.rows.len() == 1 && within(row.estimate, row.se, exact) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c09_temporal_association() -> Outcome {
    let spec = preset("diagonal_levy");
    let rep = temporal_assoc_test(
        &spec,
        &[0.0, 0.0],
        &[0.5, 1.0],
        100_000,
        13,
        FunctionBank::DEFAULT_SIZE,
    )
    .map_err(|e| e.to_string())?;
    let min_lb = rep
        .rows
        .iter()
        .map(|r| r.lower_bound())
        .fold(f64::INFINITY, f64::min);
    let detail = format!(
        "R^4 stacked, {} rows, verdict {}, min est-3se {min_lb:.2e}",
        rep.rows.len(),
        rep.verdict.label()
    );
    if rep.verdict == Verdict::Consistent {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c10_generator_limits() -> Outcome {
    let spec = preset("poisson_1d");
    let f = TestFunction::coordinate_logistic(1, 0);
    let s = |v: f64| sigma(v);
    let ts = [0.4, 0.2, 0.1, 0.05];
    let table =
        generator_limit_check(&spec, &f, &[0.0], &ts, 100_000, 29).map_err(|e| e.to_string())?;
    let mut misses = Vec::new();
    for r in &table.rows {
        let exact = (poisson_expect(r.t, s) - s(0.0)) / r.t;
        if !within(r.quotient.value, r.quotient.std_error, exact) {
            misses.push(r.t);
        }
    }
    let (first, last) = (&table.rows[0], &table.rows[table.rows.len() - 1]);
    let gen_exact = s(1.0) - s(0.0);
    let d = derivative_commute_check(&spec, &f, &[0.0], 1.0, 0.05, 100_000, 31)
        .map_err(|e| e.to_string())?;
    let deriv_exact = poisson_expect(1.0, |k| s(k + 1.0) - s(k));
    let ok = last.discrepancy < first.discrepancy
        && misses.is_empty()
        && (table.generator - gen_exact).abs() < 1e-9
        && d.agrees(SE_K);
    let detail = format!(
        "discrepancy {:.4} at t=0.05 < {:.4} at t=0.4; oracle misses {misses:?}; d/dt {:.4} vs T_t I f {:.4} (exact {deriv_exact:.4})",
        last.discrepancy, first.discrepancy, d.richardson.value, d.generator_mean.value
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c11_series_oracle() -> Outcome {
    let spec = preset("pseudo_poisson_2state");
    let ProcessSpec::PseudoPoisson(p) = &spec else {
        return Err("preset is not pseudo-Poisson".into());
    };
    if !matches!(p.kernel(), Kernel::FiniteChain { .. }) {
        return Err("preset kernel is not a finite chain".into());
    }
    let f = TestFunction::upper_orthant(vec![0.5]);
    let series = p
        .semigroup_exact(&f, &[0.0], 1.0, None)
        .map_err(|e| e.to_string())?;
    let exact = 1.0 - (-1.0f64).exp();
    let mut parts = vec![format!(
        "series {series:.15} vs 1-e^-1 (|diff| {:.1e} <= 1e-12)",
        (series - exact).abs()
    )];
    let mut ok = (series - exact).abs() <= 1e-12;
    for t in [0.5, 1.0] {
        let mc = semigroup_apply(&spec, &f, &[0.0], t, 100_000, 37).map_err(|e| e.to_string())?;
        let s = p
            .semigroup_exact(&f, &[0.0], t, None)
            .map_err(|e| e.to_string())?;
        ok &= within(mc.value, mc.std_error, s);
        parts.push(format!(
            "t={t}: MC {:.4} +/- {:.4} vs {s:.4}",
            mc.value, mc.std_error
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c12_monotonicity() -> Outcome {
    let names = [
        "diagonal_levy",
        "ou_poisson_driver",
        "pseudo_poisson_birth_death",
        "alpha_stable_subordinated",
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, name) in names.iter().enumerate() {
        let spec = preset(name);
        let d = spec.dim();
        let f = TestFunction::logistic(vec![1.0; d], 0.0, 1.0);
        let chains =
            ordered_chains(&spec, &vec![0.0; d], 5, 3, k as u64).map_err(|e| e.to_string())?;
        let mut worst = f64::INFINITY;
        for chain in &chains {
            let m = monotonicity_transfer_check(&spec, &f, chain, 1.0, 100_000, 41 + k as u64)
                .map_err(|e| e.to_string())?;
            ok &= m.passes;
            worst = worst.min(m.worst_margin);
        }
        parts.push(format!("{name} worst margin {worst:.3}"));
    }
    let detail = format!("5 chains x 3 starts each, n=1e5: {}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c13_reproducibility() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut differing = Vec::new();
    let mut files = 0;
    for p in &paths {
        let cfg = ExperimentConfig::load(p)
            .and_then(|c| c.resolve(&Overrides::default()))
            .map_err(|e| e.to_string())?;
        let a = with_jobs(Some(1), || execute(&cfg))
            .and_then(|r| r)
            .map_err(|e| e.to_string())?;
        let b = with_jobs(Some(4), || execute(&cfg))
            .and_then(|r| r)
            .map_err(|e| e.to_string())?;
        files += a.artifacts.len();
        if a.artifacts != b.artifacts {
            differing.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let detail = format!(
        "{} configs, {files} output files byte-identical at --jobs 1 vs 4; differing: {differing:?}",
        paths.len()
    );
    if differing.is_empty() && !paths.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 13] = [
        (
            "01",
            "Liggett identity",
            Duration::from_secs(10),
            c01_liggett_identity,
        ),
        (
            "02",
            "orthant gives nonnegative gap",
            Duration::from_secs(10),
            c02_orthant_nonnegative,
        ),
        (
            "03",
            "off-orthant counterexample",
            Duration::from_secs(1),
            c03_offorthant_counterexample,
        ),
        (
            "04",
            "small-time rate, compound Poisson",
            Duration::from_secs(120),
            c04_smalltime_compound_poisson,
        ),
        (
            "05",
            "small-time rate, 1/2-stable tail",
            Duration::from_secs(120),
            c05_stable_tail,
        ),
        (
            "06",
            "PUOD necessity curves",
            Duration::from_secs(120),
            c06_puod_necessity,
        ),
        (
            "07",
            "dependence lattice, diagonal jumps",
            Duration::from_secs(60),
            c07_lattice_positive,
        ),
        (
            "08",
            "common-shock PUOD gap",
            Duration::from_secs(10),
            c08_common_shock_gap,
        ),
        (
            "09",
            "temporal association",
            Duration::from_secs(60),
            c09_temporal_association,
        ),
        (
            "10",
            "generator and derivative limits",
            Duration::from_secs(60),
            c10_generator_limits,
        ),
        (
            "11",
            "pseudo-Poisson series",
            Duration::from_secs(30),
            c11_series_oracle,
        ),
        (
            "12",
            "stochastic monotonicity",
            Duration::from_secs(180),
            c12_monotonicity,
        ),
        (
            "13",
            "reproducibility across workers",
            Duration::from_secs(300),
            c13_reproducibility,
        ),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let (pass, detail) = match res {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {id} {name}: {detail} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
