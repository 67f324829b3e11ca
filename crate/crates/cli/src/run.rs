//! Executes one resolved configuration and writes its artifacts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use fellerdep::dependence::{
    implication_consistency, spatial_test, temporal_assoc_test, DependenceReport, TestKind, Verdict,
};
use fellerdep::levy::{
    liggett_gap, resnick_offorthant_mass, Calibration, FunctionBank, SamplingOptions,
    SmoothFunction, TestFunction,
};
use fellerdep::numeric::{derive_seed, pooled_se};
use fellerdep::processes::{simulate, with_jobs, Kernel, ProcessSpec};
use fellerdep::quadrature::QuadOptions;
use fellerdep::semigroup::{
    derivative_commute_check, generator_limit_check, monotonicity_transfer_check, ordered_chains,
    semigroup_apply, CheckRow,
};
use fellerdep::smalltime::{puod_necessity_experiment, smalltime_rate};
use fellerdep::FellerError;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Expectation, ExperimentConfig, ExperimentKind, Overrides, PathFormat};
use crate::CliError;

/// A data file produced by a run, kept in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// An invariant evaluated by the run; any failure gives exit code 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.artifacts.push(Artifact {
            name: name.into(),
            bytes,
        });
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), FellerError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub manifest: serde_json::Value,
}

/// Loads, resolves, executes and writes. Configuration problems are
/// returned as errors; failed checks give `exit_code` 1.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let cfg = ExperimentConfig::load(config_path).map_err(CliError::Config)?;
    let resolved = cfg
        .resolve(&Overrides {
            seed: opts.seed,
            n_paths: opts.n_paths,
        })
        .map_err(CliError::Config)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| resolved.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| {
            let stem = config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            PathBuf::from("out").join(stem)
        });
    let outcome = with_jobs(opts.jobs, || execute(&resolved))
        .map_err(CliError::Run)?
        .map_err(CliError::Run)?;
    let manifest = manifest(&resolved, &outcome).map_err(CliError::Run)?;
    write_all(&out_dir, &outcome, &manifest)?;
    Ok(RunSummary {
        exit_code: if outcome.passed() { 0 } else { 1 },
        checks: outcome.checks,
        manifest,
        out_dir,
    })
}

fn write_all(dir: &Path, outcome: &Outcome, manifest: &serde_json::Value) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Output { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for a in &outcome.artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, &a.bytes).map_err(io(&p))?;
    }
    let p = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&p, text).map_err(io(&p))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The resolved config without `out`, its hash, per-file hashes and the
/// checks. Contains nothing that depends on the machine or the worker
/// count.
pub fn manifest(
    resolved: &ExperimentConfig,
    outcome: &Outcome,
) -> Result<serde_json::Value, FellerError> {
    let mut cfg = resolved.clone();
    cfg.out = None;
    let config = serde_json::to_value(&cfg)?;
    let outputs: Vec<serde_json::Value> = outcome
        .artifacts
        .iter()
        .map(|a| serde_json::json!({"file": a.name, "bytes": a.bytes.len(), "sha256": sha256_hex(&a.bytes)}))
        .collect();
    Ok(serde_json::json!({
        "tool": "feller-dep",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": resolved.experiment.name(),
        "config": config,
        "config_sha256": sha256_hex(&serde_json::to_vec(&cfg)?),
        "outputs": outputs,
        "checks": outcome.checks,
        "passed": outcome.passed(),
    }))
}

/// Runs a resolved configuration in the current thread pool.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    match cfg.experiment {
        ExperimentKind::Simulate => run_simulate(cfg),
        ExperimentKind::CheckResnick => run_resnick(cfg),
        ExperimentKind::Liggett => run_liggett(cfg),
        ExperimentKind::Dependence => run_dependence(cfg),
        ExperimentKind::Smalltime => run_smalltime(cfg),
        ExperimentKind::PuodNecessity => run_necessity(cfg),
        ExperimentKind::GeneratorChecks => run_generator_checks(cfg),
    }
}

fn field<T: Clone>(v: &Option<T>, key: &str) -> Result<T, FellerError> {
    v.clone().ok_or_else(|| FellerError::Schema {
        path: key.into(),
        line: None,
        message: "missing after resolution".into(),
    })
}

fn tsv(header: (&str, &str), rows: impl IntoIterator<Item = (f64, f64)>) -> Vec<u8> {
    let mut s = format!("{}\t{}\n", header.0, header.1);
    for (a, b) in rows {
        let _ = writeln!(s, "{a}\t{b}");
    }
    s.into_bytes()
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let spec = cfg.spec.process()?;
    let (x, grid, n, seed) = (
        field(&cfg.start, "start")?,
        field(&cfg.grid, "grid")?,
        field(&cfg.n_paths, "n_paths")?,
        field(&cfg.seed, "seed")?,
    );
    let e = simulate(&spec, &x, &grid, n, seed)?;
    let mut out = Outcome::default();
    let mut buf = Vec::new();
    match cfg.format.unwrap_or_default() {
        PathFormat::Csv => {
            e.write_csv(&mut buf)?;
            out.add("paths.csv", buf);
        }
        PathFormat::Binary => {
            e.write_binary(&mut buf)?;
            out.add("paths.bin", buf);
        }
    }
    for i in 0..e.dim() {
        let rows = (0..grid.len()).map(|k| {
            let m = (0..n).map(|p| e.state(p, k)[i]).sum::<f64>() / n as f64;
            (grid[k], m)
        });
        out.add(
            format!("mean_x{}.tsv", i + 1),
            tsv(("t", &format!("mean_x{}", i + 1)), rows),
        );
    }
    Ok(out)
}

fn run_resnick(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let states = field(&cfg.states, "states")?;
    let seed = field(&cfg.seed, "seed")?;
    let mut csv = String::from("state,offorthant_mass,se,exact\n");
    let mut any_positive = false;
    let mut all_zero = true;
    for (k, s) in states.iter().enumerate() {
        let triplet = cfg.spec.triplet_at(s)?;
        let sampling = SamplingOptions {
            n_samples: 100_000,
            seed: derive_seed(seed, k as u64),
        };
        let m = resnick_offorthant_mass(&triplet, s, &sampling)?;
        let _ = writeln!(csv, "{},{},{},{}", join(s), m.value, m.std_error, m.exact);
        let positive = m.value > 3.0 * m.std_error;
        any_positive |= positive;
        all_zero &= !positive;
    }
    let mut out = Outcome::default();
    out.add("resnick.csv", csv.into_bytes());
    let pass = match cfg.expect {
        Expectation::Consistent => all_zero,
        Expectation::Violated => any_positive,
    };
    out.checks.push(Check::new(
        "orthant-condition",
        pass,
        format!(
            "expected {:?}; off-orthant mass positive at some state: {any_positive}",
            cfg.expect
        ),
    ));
    Ok(out)
}

fn run_liggett(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let states = field(&cfg.states, "states")?;
    let bank_cfg = field(&cfg.bank, "bank")?;
    let opts = QuadOptions::default();
    let mut csv = String::from("state,pair,direct,reduced,direct_error,reduced_error\n");
    let (mut agree, mut min_reduced) = (true, f64::INFINITY);
    for s in &states {
        let triplet = cfg.spec.triplet_at(s)?;
        let bank = FunctionBank::monotone_pairs(
            bank_cfg.size,
            bank_cfg.seed,
            &Calibration::centered_at(s.clone()),
        );
        for (f, g) in &bank.pairs {
            let gap = liggett_gap(&triplet, f, g, s, &opts)?;
            agree &= gap.routes_agree(1e-8);
            min_reduced = min_reduced.min(gap.reduced);
            let _ = writeln!(
                csv,
                "{},{}|{},{},{},{},{}",
                join(s),
                f.id(),
                g.id(),
                gap.direct,
                gap.reduced,
                gap.direct_error,
                gap.reduced_error
            );
        }
    }
    let mut out = Outcome::default();
    out.add("liggett.csv", csv.into_bytes());
    out.checks.push(Check::new(
        "liggett-identity",
        agree,
        "direct and reduced gaps agree to 1e-8",
    ));
    let sign_ok = match cfg.expect {
        Expectation::Consistent => min_reduced >= -1e-12,
        Expectation::Violated => min_reduced < -1e-12,
    };
    out.checks.push(Check::new(
        "liggett-sign",
        sign_ok,
        format!(
            "expected {:?}; smallest reduced gap {min_reduced:e}",
            cfg.expect
        ),
    ));
    Ok(out)
}

fn run_dependence(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let spec = cfg.spec.process()?;
    let (x, t, n, seed) = (
        field(&cfg.start, "start")?,
        field(&cfg.t, "t")?,
        field(&cfg.n_paths, "n_paths")?,
        field(&cfg.seed, "seed")?,
    );
    let bank = field(&cfg.bank, "bank")?;
    let tests = field(&cfg.tests, "tests")?;
    let spatial: Vec<TestKind> = tests
        .iter()
        .copied()
        .filter(|k| *k != TestKind::TemporalA)
        .collect();
    let mut reports: Vec<DependenceReport> = Vec::new();
    if !spatial.is_empty() {
        let samples = simulate(&spec, &x, &[t], n, seed)?.snapshot(0);
        for k in &spatial {
            reports.push(spatial_test(
                *k,
                &samples,
                bank.size,
                bank.seed,
                cfg.thresholds.as_deref(),
            )?);
        }
    }
    if tests.contains(&TestKind::TemporalA) {
        let grid = field(&cfg.grid, "grid")?;
        reports.push(temporal_assoc_test(
            &spec,
            &x,
            &grid,
            n,
            derive_seed(seed, 0x7E),
            bank.size,
        )?);
    }
    let mut out = Outcome::default();
    let mut csv = Vec::new();
    writeln!(csv, "{}", DependenceReport::csv_header())?;
    for r in &reports {
        r.write_csv_rows(&mut csv)?;
        out.add_json(&format!("dependence_{}.json", r.test.label()), &r.to_json())?;
    }
    out.add("dependence.csv", csv);
    let implications = implication_consistency(&reports);
    out.add_json("implication.json", &implications)?;
    match cfg.expect {
        Expectation::Consistent => {
            for r in &reports {
                out.checks.push(Check::new(
                    format!("dependence:{}", r.test.label()),
                    r.verdict != Verdict::Violated,
                    format!(
                        "verdict {}; {} violated rows",
                        r.verdict.label(),
                        r.violations().count()
                    ),
                ));
            }
        }
        Expectation::Violated => {
            let violated: Vec<&str> = reports
                .iter()
                .filter(|r| r.verdict == Verdict::Violated)
                .map(|r| r.test.label())
                .collect();
            out.checks.push(Check::new(
                "dependence:some-violation",
                !violated.is_empty(),
                format!("violated: {}", violated.join(" ")),
            ));
        }
    }
    out.checks.push(Check::new(
        "implication-map",
        implications.is_empty(),
        format!("{} contradicted arrows", implications.len()),
    ));
    Ok(out)
}

fn run_smalltime(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let spec = cfg.spec.process()?;
    let regions = cfg.regions()?;
    let (x, t_list, c, seed) = (
        field(&cfg.start, "start")?,
        field(&cfg.t_list, "t_list")?,
        field(&cfg.path_scale, "path_scale")?,
        field(&cfg.seed, "seed")?,
    );
    let rel_tol = field(&cfg.rel_tol, "rel_tol")?;
    let table = smalltime_rate(&spec, &x, &regions, &t_list, c, seed)?;
    let mut out = Outcome::default();
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    out.add("smalltime.csv", csv);
    for r in &regions {
        let rows = table.rows_for(&r.id).map(|row| (row.t, row.rate.value));
        out.add(format!("rate_{}.tsv", r.id), tsv(("t", "rate"), rows));
    }
    out.add_json("smalltime_fit.json", &table.fits)?;
    for f in &table.fits {
        let (pass, detail) = match f.fit {
            Some(fit) => {
                let allowed = rel_tol * f.nu_value.abs() + 3.0 * fit.intercept_se;
                (
                    (fit.intercept - f.nu_value).abs() <= allowed,
                    format!(
                        "intercept {} vs nu {} (allowed {allowed})",
                        fit.intercept, f.nu_value
                    ),
                )
            }
            None => (false, "fit failed".to_string()),
        };
        out.checks.push(Check::new(
            format!("smalltime:{}", f.region_id),
            pass,
            detail,
        ));
    }
    Ok(out)
}

fn run_necessity(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let spec = cfg.spec.process()?;
    let (x, t_list, c, seed) = (
        field(&cfg.start, "start")?,
        field(&cfg.t_list, "t_list")?,
        field(&cfg.path_scale, "path_scale")?,
        field(&cfg.seed, "seed")?,
    );
    let n_puod = field(&cfg.puod_paths, "puod_paths")?;
    let report = puod_necessity_experiment(&spec, &x, &t_list, c, n_puod, seed)?;
    let mut out = Outcome::default();
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.add("necessity.csv", csv);
    out.add(
        "curve_joint.tsv",
        tsv(
            ("t", "joint_rate"),
            report.rows.iter().map(|r| (r.t, r.joint_rate.value)),
        ),
    );
    out.add(
        "curve_product.tsv",
        tsv(
            ("t", "product_rate"),
            report.rows.iter().map(|r| (r.t, r.product_rate.value)),
        ),
    );
    out.add_json("necessity.json", &report)?;
    let last = report.rows.last().expect("non-empty t_list");
    let gap = last.joint_rate.value - last.product_rate.value;
    let se = pooled_se(last.joint_rate.std_error, last.product_rate.std_error);
    out.checks.push(Check::new(
        "curve-separation",
        gap > 3.0 * se,
        format!(
            "at t={}: joint {} vs product {}",
            last.t, last.joint_rate.value, last.product_rate.value
        ),
    ));
    out.checks.push(Check::new(
        "puod-violated",
        report.puod.verdict == Verdict::Violated,
        format!("verdict {}", report.puod.verdict.label()),
    ));
    Ok(out)
}

fn run_generator_checks(cfg: &ExperimentConfig) -> Result<Outcome, FellerError> {
    let spec = cfg.spec.process()?;
    let (x, t, n, seed) = (
        field(&cfg.start, "start")?,
        field(&cfg.t, "t")?,
        field(&cfg.n_paths, "n_paths")?,
        field(&cfg.seed, "seed")?,
    );
    let (t_list, h, n_chains) = (
        field(&cfg.t_list, "t_list")?,
        field(&cfg.h, "h")?,
        field(&cfg.chains, "chains")?,
    );
    let f: TestFunction = field(&cfg.function, "function")?;
    if f.dim() != spec.dim() {
        return Err(FellerError::Schema {
            path: "function".into(),
            line: None,
            message: format!("function has dimension {}, process {}", f.dim(), spec.dim()),
        });
    }
    let spec_id = cfg.spec.id();
    let row = |check: &str,
               x: &[f64],
               t: f64,
               estimate: f64,
               std_error: f64,
               oracle: Option<f64>,
               pass: bool| CheckRow {
        check: check.into(),
        spec_id: spec_id.clone(),
        x: x.to_vec(),
        t,
        estimate,
        std_error,
        oracle,
        pass,
    };
    let mut rows = Vec::new();
    let mut out = Outcome::default();
    let limit_checks = !matches!(spec, ProcessSpec::Subordinated(_)) && f.is_smooth();
    if limit_checks && t_list.len() > 1 {
        let table = generator_limit_check(&spec, &f, &x, &t_list, n, seed)?;
        for r in &table.rows {
            rows.push(row(
                "generator-limit",
                &x,
                r.t,
                r.quotient.value,
                r.quotient.std_error,
                Some(table.generator),
                true,
            ));
        }
        out.add(
            "limit.tsv",
            tsv(
                ("t", "discrepancy"),
                table.rows.iter().map(|r| (r.t, r.discrepancy)),
            ),
        );
        let (first, last) = (&table.rows[0], table.rows.last().expect("non-empty"));
        let trend = last.discrepancy < first.discrepancy
            || last.discrepancy <= 3.0 * last.quotient.std_error;
        rows.push(row(
            "generator-limit-trend",
            &x,
            last.t,
            last.discrepancy,
            last.quotient.std_error,
            Some(first.discrepancy),
            trend,
        ));
        if t > h {
            let d = derivative_commute_check(&spec, &f, &x, t, h, n, derive_seed(seed, 1))?;
            let se = pooled_se(d.richardson.std_error, d.generator_mean.std_error);
            rows.push(row(
                "derivative-commute",
                &x,
                t,
                d.richardson.value,
                se,
                Some(d.generator_mean.value),
                d.agrees(3.0),
            ));
        }
    }
    if matches!(f, TestFunction::SmoothMonotone(_)) {
        for chain in ordered_chains(&spec, &x, n_chains, 3, derive_seed(seed, 2))? {
            let m = monotonicity_transfer_check(&spec, &f, &chain, t, n, derive_seed(seed, 3))?;
            let first = m.estimates[0];
            rows.push(row(
                "monotonicity-transfer",
                &chain[0],
                t,
                m.worst_margin,
                first.std_error,
                None,
                m.passes,
            ));
        }
    }
    if let ProcessSpec::PseudoPoisson(p) = &spec {
        if matches!(p.kernel(), Kernel::FiniteChain { .. }) {
            let mut times = vec![t];
            times.extend(t_list.iter().copied().filter(|s| *s != t));
            for s in times {
                let mc = semigroup_apply(&spec, &f, &x, s, n, derive_seed(seed, 4))?;
                let exact = p.semigroup_exact(&f, &x, s, None)?;
                let pass = (mc.value - exact).abs() <= 3.0 * mc.std_error;
                rows.push(row(
                    "series-oracle",
                    &x,
                    s,
                    mc.value,
                    mc.std_error,
                    Some(exact),
                    pass,
                ));
            }
        }
    }
    let mut csv = Vec::new();
    writeln!(csv, "{}", CheckRow::HEADER)?;
    for r in &rows {
        r.write(&mut csv)?;
        if r.check != "generator-limit" {
            out.checks.push(Check::new(
                r.check.clone(),
                r.pass,
                format!(
                    "x={} t={} estimate={} oracle={:?}",
                    join(&r.x),
                    r.t,
                    r.estimate,
                    r.oracle
                ),
            ));
        }
    }
    out.add("checks.csv", csv);
    Ok(out)
}

/// Runs a config file, returning only the exit code and printing a
/// summary; used by the binary.
pub fn run_and_report(config_path: &Path, opts: &RunOptions) -> i32 {
    match run(config_path, opts) {
        Ok(summary) => {
            let mut stdout = std::io::stdout().lock();
            for c in &summary.checks {
                let _ = writeln!(
                    stdout,
                    "{} {}: {}",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let _ = writeln!(stdout, "wrote {}", summary.out_dir.display());
            summary.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
