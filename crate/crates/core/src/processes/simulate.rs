use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use super::{Kernel, PathEnsemble, ProcessSpec, SubordinatorJumps};
use crate::error::{check_dim, FellerError, Result};

/// Runs `f` on a dedicated pool of `jobs` threads, or on the global pool.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| FellerError::Unsupported(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Stream `k` of the generator seeded by `master_seed`; path `k` of an
/// ensemble uses stream `k`.
pub fn stream_rng(master_seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(k);
    rng
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(FellerError::Grid("empty".into()));
    }
    if !(grid[0].is_finite() && grid[0] > 0.0) {
        return Err(FellerError::Grid(format!(
            "first time {} must be positive",
            grid[0]
        )));
    }
    for w in grid.windows(2) {
        if !(w[1].is_finite() && w[1] > w[0]) {
            return Err(FellerError::Grid(format!(
                "times must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 12.0 {
        let u: f64 = rng.random();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean)
            .expect("positive finite mean")
            .sample(rng) as u64
    }
}

/// Positive α-stable variate with `E e^{-uS} = e^{-u^α}` (Kanter's
/// representation).
pub fn stable_variate<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let u = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break PI * v;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let head = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    head * (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha)
}

/// Per-path working state.
struct Walker {
    x: Vec<f64>,
    clock: f64,
    chain_state: usize,
    jump: Vec<f64>,
    next: Vec<f64>,
}

struct Prepared<'a> {
    spec: &'a ProcessSpec,
    start: Vec<f64>,
    start_index: usize,
    steps: Vec<f64>,
    chain_cdf: Vec<Vec<f64>>,
}

impl<'a> Prepared<'a> {
    fn new(spec: &'a ProcessSpec, x: &[f64], grid: &[f64]) -> Result<Self> {
        check_dim(spec.dim(), x.len())?;
        check_grid(grid)?;
        let mut steps = Vec::with_capacity(grid.len());
        let mut prev = 0.0;
        for t in grid {
            steps.push(t - prev);
            prev = *t;
        }
        let (start_index, chain_cdf) = match spec {
            ProcessSpec::PseudoPoisson(p) => match p.kernel() {
                Kernel::FiniteChain { transition, .. } => {
                    let cdf = transition
                        .iter()
                        .map(|row| {
                            let mut acc = 0.0;
                            row.iter()
                                .map(|q| {
                                    acc += q;
                                    acc
                                })
                                .collect()
                        })
                        .collect();
                    (p.state_index(x)?, cdf)
                }
                _ => (0, Vec::new()),
            },
            _ => (0, Vec::new()),
        };
        Ok(Self {
            spec,
            start: x.to_vec(),
            start_index,
            steps,
            chain_cdf,
        })
    }

    fn walker(&self) -> Walker {
        let d = self.start.len();
        Walker {
            x: self.start.clone(),
            clock: 0.0,
            chain_state: self.start_index,
            jump: vec![0.0; d],
            next: vec![0.0; d],
        }
    }

    /// Advances `w` by one grid cell of length `dt`.
    fn advance<R: Rng>(&self, w: &mut Walker, dt: f64, rng: &mut R) {
        match self.spec {
            ProcessSpec::JumpLevy(l) => {
                levy_increment(l, dt, rng, &mut w.x, &mut w.jump);
            }
            ProcessSpec::OrnsteinUhlenbeck(o) => {
                let decay = (-o.lambda * dt).exp();
                for (x, g) in w.x.iter_mut().zip(o.driver.raw_drift()) {
                    *x = decay * *x + g / o.lambda * (1.0 - decay);
                }
                if let Some((rate, law)) = o.driver.nu().finite_parts() {
                    let n = poisson(rng, rate * dt);
                    for _ in 0..n {
                        let tau = dt * rng.random::<f64>();
                        law.sample_into(rng, &mut w.jump);
                        let weight = (-o.lambda * (dt - tau)).exp();
                        for (x, z) in w.x.iter_mut().zip(&w.jump) {
                            *x += weight * z;
                        }
                    }
                }
            }
            ProcessSpec::PseudoPoisson(p) => {
                let n = poisson(rng, p.rate() * dt);
                for _ in 0..n {
                    match p.kernel() {
                        Kernel::FiniteChain { states, .. } => {
                            let cdf = &self.chain_cdf[w.chain_state];
                            let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                            w.chain_state = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
                            w.x.copy_from_slice(&states[w.chain_state]);
                        }
                        Kernel::Translation { law } => {
                            law.sample_into(rng, &mut w.jump);
                            for (x, z) in w.x.iter_mut().zip(&w.jump) {
                                *x += z;
                            }
                        }
                        Kernel::Identity { .. } => {}
                        Kernel::Custom { sampler, .. } => {
                            sampler(&w.x, rng as &mut dyn rand::RngCore, &mut w.next);
                            std::mem::swap(&mut w.x, &mut w.next);
                        }
                    }
                }
            }
            ProcessSpec::Subordinated(s) => {
                let sub = &s.subordinator;
                let mut ds = sub.drift * dt;
                match &sub.jumps {
                    SubordinatorJumps::None => {}
                    SubordinatorJumps::Finite { rate, law } => {
                        let n = poisson(rng, rate * dt);
                        let mut y = [0.0];
                        for _ in 0..n {
                            law.sample_into(rng, &mut y);
                            ds += y[0];
                        }
                    }
                    SubordinatorJumps::AlphaStable { alpha } => {
                        ds += dt.powf(1.0 / alpha) * stable_variate(rng, *alpha);
                    }
                }
                w.clock += ds;
                levy_increment(&s.inner, ds, rng, &mut w.x, &mut w.jump);
            }
        }
    }

    fn run<R: Rng>(&self, rng: &mut R, states: &mut [f64], mut clock: Option<&mut [f64]>) {
        let d = self.start.len();
        let mut w = self.walker();
        for (k, dt) in self.steps.iter().enumerate() {
            self.advance(&mut w, *dt, rng);
            states[k * d..(k + 1) * d].copy_from_slice(&w.x);
            if let Some(c) = clock.as_deref_mut() {
                c[k] = w.clock;
            }
        }
    }
}

fn levy_increment<R: Rng>(
    l: &super::JumpLevy,
    dt: f64,
    rng: &mut R,
    x: &mut [f64],
    jump: &mut [f64],
) {
    for (x, g) in x.iter_mut().zip(l.raw_drift()) {
        *x += g * dt;
    }
    if let Some((rate, law)) = l.nu().finite_parts() {
        let n = poisson(rng, rate * dt);
        for _ in 0..n {
            law.sample_into(rng, jump);
            for (x, z) in x.iter_mut().zip(jump.iter()) {
                *x += z;
            }
        }
    }
}

/// Simulates `n_paths` exact skeletons at the grid times.
///
/// Parallel over paths on the current rayon pool; the output depends only on
/// the arguments, never on the number of threads.
pub fn simulate(
    spec: &ProcessSpec,
    x: &[f64],
    grid: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<PathEnsemble> {
    let prep = Prepared::new(spec, x, grid)?;
    let d = x.len();
    let m = grid.len();
    let mut states = vec![0.0; n_paths * m * d];
    let clock = if matches!(spec, ProcessSpec::Subordinated(_)) {
        let mut c = vec![0.0; n_paths * m];
        states
            .par_chunks_mut(m * d)
            .zip(c.par_chunks_mut(m))
            .enumerate()
            .for_each(|(k, (s, c))| prep.run(&mut stream_rng(master_seed, k as u64), s, Some(c)));
        Some(c)
    } else {
        states
            .par_chunks_mut(m * d)
            .enumerate()
            .for_each(|(k, s)| prep.run(&mut stream_rng(master_seed, k as u64), s, None));
        None
    };
    Ok(PathEnsemble::from_parts(
        master_seed,
        x.to_vec(),
        grid.to_vec(),
        n_paths,
        states,
        clock,
    ))
}

/// `f(X_t)` for each of `n_paths` paths, without storing the paths. Path `k`
/// coincides with path `k` of `simulate(spec, x, &[t], n_paths, master_seed)`.
pub fn simulate_terminal<F>(
    spec: &ProcessSpec,
    x: &[f64],
    t: f64,
    n_paths: usize,
    master_seed: u64,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let prep = Prepared::new(spec, x, &[t])?;
    let d = x.len();
    Ok((0..n_paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, k| {
                prep.run(&mut stream_rng(master_seed, k as u64), buf, None);
                f(buf)
            },
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyMeasure;
    use crate::processes::{JumpLevy, OrnsteinUhlenbeck};

    #[test]
    fn grid_validation() {
        assert!(check_grid(&[0.5, 1.0]).is_ok());
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[0.0, 1.0]).is_err());
        assert!(check_grid(&[1.0, 1.0]).is_err());
        assert!(check_grid(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn small_mean_poisson_sampler_moments() {
        let mut rng = stream_rng(7, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| poisson(&mut rng, 2.5) as f64).collect();
        let (m, se) = crate::numeric::mean_and_se(&draws);
        assert!((m - 2.5).abs() < 4.0 * se, "{m}");
        let var = crate::numeric::sample_variance(&draws);
        assert!((var - 2.5).abs() < 0.05, "{var}");
    }

    #[test]
    fn stable_variate_laplace_transform() {
        let mut rng = stream_rng(11, 0);
        let n = 200_000;
        for alpha in [0.3, 0.5, 0.8] {
            let s: Vec<f64> = (0..n).map(|_| stable_variate(&mut rng, alpha)).collect();
            assert!(s.iter().all(|v| *v > 0.0));
            for u in [0.5, 1.0, 2.0] {
                let lt: Vec<f64> = s.iter().map(|v| (-u * v).exp()).collect();
                let (m, se) = crate::numeric::mean_and_se(&lt);
                let exact = (-f64::powf(u, alpha)).exp();
                assert!(
                    (m - exact).abs() < 4.0 * se,
                    "alpha {alpha} u {u}: {m} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn ou_without_jumps_is_deterministic() {
        let driver = JumpLevy::new(vec![0.7], LevyMeasure::zero(1)).unwrap();
        let ou = OrnsteinUhlenbeck::new(1.5, driver).unwrap();
        let spec = ProcessSpec::OrnsteinUhlenbeck(ou.clone());
        let grid = [0.1, 0.4, 1.0];
        let e = simulate(&spec, &[2.0], &grid, 5, 3).unwrap();
        for p in 0..5 {
            for (k, t) in grid.iter().enumerate() {
                let exact = ou.deterministic_flow(&[2.0], *t)[0];
                assert!((e.state(p, k)[0] - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn terminal_map_matches_full_simulation() {
        let spec = crate::processes::presets::diagonal_levy();
        let e = simulate(&spec, &[0.0, 0.0], &[0.7], 64, 42).unwrap();
        let v = simulate_terminal(&spec, &[0.0, 0.0], 0.7, 64, 42, |x| x[0] + 10.0 * x[1]).unwrap();
        for (p, val) in v.iter().enumerate() {
            let s = e.state(p, 0);
            assert_eq!(*val, s[0] + 10.0 * s[1]);
        }
    }

    #[test]
    fn thread_count_does_not_change_paths() {
        let spec = crate::processes::presets::ou_poisson_driver();
        let a = with_jobs(Some(1), || simulate(&spec, &[0.0], &[0.5, 1.0], 500, 9))
            .unwrap()
            .unwrap();
        let b = with_jobs(Some(4), || simulate(&spec, &[0.0], &[0.5, 1.0], 500, 9))
            .unwrap()
            .unwrap();
        assert_eq!(a, b);
    }
}
