use fellerdep::levy::{symbol_eval, DensityLaw, JumpLaw, LevyMeasure};
use fellerdep::numeric::{mean_and_se, poisson_pmf_table};
use fellerdep::processes::{presets, simulate, simulate_terminal, JumpLevy, ProcessSpec};
use fellerdep::quadrature::QuadOptions;
use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

fn column(spec: &ProcessSpec, x: &[f64], t: f64, n: usize, seed: u64, i: usize) -> Vec<f64> {
    simulate_terminal(spec, x, t, n, seed, |y| y[i]).unwrap()
}

#[test]
fn poisson_counts_pass_chi_square() {
    let t = 2.0;
    let n = 20_000;
    let v = column(&presets::poisson_1d(), &[0.0], t, n, 1, 0);
    let pmf = poisson_pmf_table(t, 7);
    let mut observed = [0usize; 8];
    for x in &v {
        assert_eq!(x.fract(), 0.0);
        observed[(*x as usize).min(7)] += 1;
    }
    let mut expected: Vec<f64> = pmf[..7].iter().map(|p| p * n as f64).collect();
    expected.push(n as f64 - expected.iter().sum::<f64>());
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (*o as f64 - e).powi(2) / e)
        .sum();
    let p_value = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
    assert!(p_value > 1e-3, "chi-square {stat}, p {p_value}");
}

#[test]
fn half_stable_clock_passes_kolmogorov_smirnov() {
    // S_t has Laplace transform exp(-t sqrt(u)), so P(S_t <= s) = erfc(t / (2 sqrt(s))).
    let t = 0.7;
    let mut v = column(
        &presets::alpha_stable_subordinated(),
        &[0.0],
        t,
        20_000,
        2,
        0,
    );
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let f = erfc(t / (2.0 * s.sqrt()));
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d * n.sqrt() < 1.95, "KS statistic {}", d * n.sqrt());
}

#[test]
fn ou_mean_relaxes_towards_the_driver_rate() {
    for t in [0.5, 2.0] {
        let v = column(&presets::ou_poisson_driver(), &[3.0], t, 50_000, 3, 0);
        let (m, se) = mean_and_se(&v);
        let exact = 3.0 * (-t).exp() + 1.0 - (-t).exp();
        assert!((m - exact).abs() < 4.0 * se, "t={t}: {m} vs {exact}");
    }
}

#[test]
fn subordinated_paths_never_decrease() {
    let e = simulate(
        &presets::alpha_stable_subordinated(),
        &[0.0],
        &[0.1, 0.2, 0.5, 1.0, 2.0],
        2_000,
        4,
    )
    .unwrap();
    for p in 0..e.n_paths() {
        for k in 1..e.grid().len() {
            assert!(e.state(p, k)[0] >= e.state(p, k - 1)[0]);
        }
    }
}

#[test]
fn diagonal_coordinates_move_together() {
    let e = simulate(
        &presets::diagonal_levy(),
        &[0.0, 1.0],
        &[0.5, 1.5],
        1_000,
        5,
    )
    .unwrap();
    for p in 0..e.n_paths() {
        for k in 0..2 {
            let s = e.state(p, k);
            assert_eq!(s[0] + 1.0, s[1]);
        }
    }
}

#[test]
fn seeds_determine_paths() {
    let spec = presets::pseudo_poisson_translation();
    let a = simulate(&spec, &[0.0], &[0.5, 1.0], 500, 9).unwrap();
    let b = simulate(&spec, &[0.0], &[0.5, 1.0], 500, 9).unwrap();
    let c = simulate(&spec, &[0.0], &[0.5, 1.0], 500, 10).unwrap();
    let (mut ab, mut ac) = (Vec::new(), Vec::new());
    a.write_csv(&mut ab).unwrap();
    b.write_csv(&mut ac).unwrap();
    assert_eq!(ab, ac);
    assert!((0..500).any(|p| a.state(p, 1) != c.state(p, 1)));
}

#[test]
fn empirical_characteristic_function_matches_symbol() {
    let law = JumpLaw::Density(DensityLaw::exponential(vec![1.5, 0.5]).unwrap());
    let spec = ProcessSpec::JumpLevy(
        JumpLevy::new(vec![0.3, -0.2], LevyMeasure::finite(2.0, law).unwrap()).unwrap(),
    );
    let ProcessSpec::JumpLevy(levy) = &spec else {
        unreachable!()
    };
    let triplet = levy.triplet();
    let t = 0.8;
    let n = 40_000;
    let e = simulate(&spec, &[0.0, 0.0], &[t], n, 6).unwrap();
    for xi in [[0.4, 0.0], [0.0, -1.1], [0.7, 0.9]] {
        let eta = symbol_eval(&triplet, &[0.0, 0.0], &xi, &QuadOptions::default())
            .unwrap()
            .value;
        let exact = (eta * t).exp();
        let emp = (0..n)
            .map(|p| {
                let s = e.state(p, 0);
                Complex64::new(0.0, xi[0] * s[0] + xi[1] * s[1]).exp()
            })
            .sum::<Complex64>()
            / n as f64;
        assert!(
            (emp - exact).norm() < 4.0 / (n as f64).sqrt(),
            "xi={xi:?}: {emp} vs {exact}"
        );
    }
}
