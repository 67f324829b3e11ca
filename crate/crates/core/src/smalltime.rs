//! Small-time hitting rates `(1/t) P^x(X_t - x ∈ A)` and their limit
//! `ν(x, A)`, plus the orthant-necessity experiment.

use std::io::Write;

use serde::Serialize;

use crate::dependence::{csv_field, puod_test, DependenceReport};
use crate::error::{check_dim, invalid, FellerError, Result};
use crate::levy::{
    is_off_orthant, offorthant_mass_of, JumpLaw, LevyMeasure, OpenBox, SamplingOptions,
};
use crate::numeric::{mean_and_se, weighted_line_fit, Estimate, LineFit};
use crate::processes::{simulate, simulate_terminal, ProcessSpec, SubordinatorJumps};
use crate::quadrature::QuadOptions;

/// Regions are encoded as bits of one `f64` per path.
pub const MAX_REGIONS: usize = 52;

/// Default decreasing time list.
pub const DEFAULT_TIMES: &[f64] = &[0.2, 0.1, 0.05, 0.02, 0.01];

/// Named open rectangle in jump space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpec {
    pub id: String,
    pub region: OpenBox,
}

impl RegionSpec {
    /// Fails when the closure of `region` contains the origin.
    pub fn new(id: impl Into<String>, region: OpenBox) -> Result<Self> {
        if region.distance_from_origin() <= 0.0 {
            return Err(FellerError::Precondition(
                "region closure touches the origin".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            region,
        })
    }

    /// `ν(∂A) = 0`, checked exactly for atomic jump laws. Density laws and
    /// the α-stable density put no mass on a box boundary.
    pub fn boundary_is_null(&self, nu: &LevyMeasure) -> bool {
        match nu.finite_parts() {
            Some((rate, JumpLaw::Atoms(a))) if rate > 0.0 => !a
                .atoms()
                .any(|(p, w)| w > 0.0 && self.region.on_boundary(p)),
            _ => true,
        }
    }
}

/// `ν(x, A)` for the spec at state `x`.
///
/// Subordinated processes are supported when the inner process is a pure
/// drift `v`, whose jumps are `s·v` for clock jumps `s`.
pub fn jump_mass(spec: &ProcessSpec, x: &[f64], region: &OpenBox) -> Result<f64> {
    let opts = QuadOptions::default();
    match spec {
        ProcessSpec::Subordinated(s) => {
            if s.inner.nu().total_mass() > 0.0 {
                return Err(FellerError::Unsupported(
                    "jump measure of a subordinated process with a jumping inner process".into(),
                ));
            }
            let Some((lo, hi)) = preimage_interval(s.inner.raw_drift(), region) else {
                return Ok(0.0);
            };
            match &s.subordinator.jumps {
                SubordinatorJumps::None => Ok(0.0),
                SubordinatorJumps::AlphaStable { .. } => match s.subordinator.measure(1e-6)? {
                    LevyMeasure::AlphaStableSubordinator(m) => Ok(m.interval_mass(lo, hi)),
                    _ => unreachable!("α-stable clock"),
                },
                SubordinatorJumps::Finite { rate, law } => {
                    let b = OpenBox::new(vec![lo], vec![hi])?;
                    Ok(rate * law.prob_of_box(&b, &opts)?.value)
                }
            }
        }
        _ => {
            let c = spec.effective_triplet(x)?.at(x)?;
            Ok(c.nu.mass_of_box(region, &opts)?.value)
        }
    }
}

/// `{s > 0 : s·v ∈ A}` as an open interval, `None` when empty.
fn preimage_interval(v: &[f64], region: &OpenBox) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for (vi, (a, b)) in v.iter().zip(region.lower.iter().zip(&region.upper)) {
        if *vi > 0.0 {
            lo = lo.max(a / vi);
            hi = hi.min(b / vi);
        } else if *vi < 0.0 {
            lo = lo.max(b / vi);
            hi = hi.min(a / vi);
        } else if !(*a < 0.0 && *b > 0.0) {
            return None;
        }
    }
    (lo < hi).then_some((lo, hi))
}

fn measure_at(spec: &ProcessSpec, x: &[f64]) -> Result<Option<LevyMeasure>> {
    match spec {
        ProcessSpec::Subordinated(_) => Ok(None),
        _ => Ok(Some((*spec.effective_triplet(x)?.at(x)?.nu).clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub t: f64,
    pub region_id: String,
    pub rate: Estimate,
    pub nu_value: f64,
    pub n_paths: usize,
}

/// Weighted fit of rate against `t` for one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub region_id: String,
    pub nu_value: f64,
    pub fit: Option<LineFit>,
}

impl RateFit {
    pub fn intercept(&self) -> Option<f64> {
        self.fit.map(|f| f.intercept)
    }

    /// `|intercept / ν(A) - 1|`.
    pub fn relative_error(&self) -> Option<f64> {
        self.intercept().map(|i| (i / self.nu_value - 1.0).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub fits: Vec<RateFit>,
    pub total_paths: usize,
}

impl RateTable {
    pub const CSV_HEADER: &'static str = "t,region_id,rate_estimate,se,nu_value,n_paths";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t,
                csv_field(&r.region_id),
                r.rate.value,
                r.rate.std_error,
                r.nu_value,
                r.n_paths
            )?;
        }
        Ok(())
    }

    pub fn rows_for<'a>(&'a self, region_id: &'a str) -> impl Iterator<Item = &'a RateRow> + 'a {
        self.rows.iter().filter(move |r| r.region_id == region_id)
    }

    pub fn fit_for(&self, region_id: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.region_id == region_id)
    }
}

/// Paths used at time `t`: `⌈c / t⌉`.
pub fn paths_for(c: f64, t: f64) -> usize {
    (c / t).ceil() as usize
}

/// Estimates `(1/t) P^x(X_t - x ∈ A)` for every region and every `t`,
/// with `⌈c/t⌉` paths at time `t`. All regions share one ensemble per `t`.
pub fn smalltime_rate(
    spec: &ProcessSpec,
    x: &[f64],
    regions: &[RegionSpec],
    t_list: &[f64],
    c: f64,
    seed: u64,
) -> Result<RateTable> {
    if regions.is_empty() || regions.len() > MAX_REGIONS {
        return Err(FellerError::Precondition(format!(
            "between 1 and {MAX_REGIONS} regions required"
        )));
    }
    if t_list.is_empty()
        || t_list.windows(2).any(|w| w[1] >= w[0])
        || t_list.iter().any(|t| *t <= 0.0)
    {
        return Err(FellerError::Grid(
            "t_list must be positive and strictly decreasing".into(),
        ));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("c", "path scale must be positive"));
    }
    let nu = measure_at(spec, x)?;
    let mut nu_values = Vec::with_capacity(regions.len());
    for r in regions {
        check_dim(spec.dim(), r.region.dim())?;
        if let Some(nu) = &nu {
            if !r.boundary_is_null(nu) {
                return Err(FellerError::Precondition(format!(
                    "region {} has an atom on its boundary",
                    r.id
                )));
            }
        }
        nu_values.push(jump_mass(spec, x, &r.region)?);
    }
    let mut rows = Vec::new();
    let mut total = 0;
    for &t in t_list {
        let n = paths_for(c, t);
        total += n;
        let codes = simulate_terminal(spec, x, t, n, seed, |state| {
            let y: Vec<f64> = state.iter().zip(x).map(|(s, x0)| s - x0).collect();
            regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.region.contains(&y))
                .fold(0u64, |acc, (k, _)| acc | (1 << k)) as f64
        })?;
        for (k, r) in regions.iter().enumerate() {
            let hits: Vec<f64> = codes
                .iter()
                .map(|c| {
                    if (*c as u64) >> k & 1 == 1 {
                        1.0 / t
                    } else {
                        0.0
                    }
                })
                .collect();
            let (m, se) = mean_and_se(&hits);
            rows.push(RateRow {
                t,
                region_id: r.id.clone(),
                rate: Estimate::new(m, se),
                nu_value: nu_values[k],
                n_paths: n,
            });
        }
    }
    let fits = regions
        .iter()
        .zip(&nu_values)
        .map(|(r, nu_value)| {
            let mine: Vec<&RateRow> = rows.iter().filter(|row| row.region_id == r.id).collect();
            let ts: Vec<f64> = mine.iter().map(|row| row.t).collect();
            let ys: Vec<f64> = mine.iter().map(|row| row.rate.value).collect();
            let ws = inverse_variance_weights(&mine, c);
            RateFit {
                region_id: r.id.clone(),
                nu_value: *nu_value,
                fit: weighted_line_fit(&ts, &ys, &ws),
            }
        })
        .collect();
    Ok(RateTable {
        rows,
        fits,
        total_paths: total,
    })
}

/// Zero-hit rows get the weight implied by one hit.
fn inverse_variance_weights(rows: &[&RateRow], c: f64) -> Vec<f64> {
    rows.iter()
        .map(|r| {
            let floor = 1.0 / (r.t * r.n_paths.max(1) as f64);
            let se = r.rate.std_error.max(floor.min(1.0 / c.sqrt()));
            1.0 / (se * se)
        })
        .collect()
}

/// Both bounding curves at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityRow {
    pub t: f64,
    pub n_paths: usize,
    /// `(1/t) P(X_t - x ∈ A)`.
    pub joint_rate: Estimate,
    /// `(1/t) P(X_t^p - x_p > a) P(X_t^q - x_q ≤ -a)`.
    pub product_rate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    pub region: OpenBox,
    pub a: f64,
    /// Coordinate with a positive jump component.
    pub positive_coordinate: usize,
    /// Coordinate with a negative jump component.
    pub negative_coordinate: usize,
    pub nu_value: f64,
    pub offorthant_mass: f64,
    pub rows: Vec<NecessityRow>,
    /// Orthant test on `X_{t_min}` at thresholds `x_p + a`, `x_q - a`.
    pub puod: DependenceReport,
}

impl NecessityReport {
    pub const CSV_HEADER: &'static str =
        "t,n_paths,joint_rate,joint_se,product_rate,product_se,nu_value";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                r.n_paths,
                r.joint_rate.value,
                r.joint_rate.std_error,
                r.product_rate.value,
                r.product_rate.std_error,
                self.nu_value
            )?;
        }
        Ok(())
    }
}

/// Off-orthant rectangle built from the heaviest off-orthant atom `y`:
/// `(a, ∞)` where `y_i > 0`, `(-∞, -a)` where `y_i < 0`, unrestricted
/// where `y_i = 0`. `a` starts at half the smallest non-zero `|y_i|` and is
/// halved until no atom sits on the boundary.
pub fn offorthant_rectangle(nu: &LevyMeasure) -> Result<(OpenBox, f64, usize, usize)> {
    let none = || FellerError::Precondition("no off-orthant atom to build a rectangle from".into());
    let Some((_, JumpLaw::Atoms(law))) = nu.finite_parts() else {
        return Err(none());
    };
    let (y, _) = law
        .atoms()
        .filter(|(p, w)| *w > 0.0 && is_off_orthant(p))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(none)?;
    let p = y.iter().position(|v| *v > 0.0).ok_or_else(none)?;
    let q = y.iter().position(|v| *v < 0.0).ok_or_else(none)?;
    let mut a = y
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    for _ in 0..60 {
        let lower = y
            .iter()
            .map(|v| if *v > 0.0 { a } else { f64::NEG_INFINITY })
            .collect();
        let upper = y
            .iter()
            .map(|v| if *v < 0.0 { -a } else { f64::INFINITY })
            .collect();
        let region = OpenBox::new(lower, upper)?;
        if !law.atoms().any(|(pt, w)| w > 0.0 && region.on_boundary(pt)) {
            return Ok((region, a, p, q));
        }
        a /= 2.0;
    }
    Err(none())
}

/// Runs both bounding curves over `t_list` (with `⌈c/t⌉` paths each) and
/// an orthant test with `puod_paths` paths at the smallest `t`.
pub fn puod_necessity_experiment(
    spec: &ProcessSpec,
    x: &[f64],
    t_list: &[f64],
    c: f64,
    puod_paths: usize,
    seed: u64,
) -> Result<NecessityReport> {
    let nu = measure_at(spec, x)?.ok_or_else(|| {
        FellerError::Unsupported("orthant experiment needs a finite-activity jump measure".into())
    })?;
    let mass = offorthant_mass_of(&nu, &SamplingOptions::default())?;
    if mass.value <= 0.0 {
        return Err(FellerError::Precondition(
            "jump measure has no off-orthant mass".into(),
        ));
    }
    let (region, a, p, q) = offorthant_rectangle(&nu)?;
    let nu_value = nu.mass_of_box(&region, &QuadOptions::default())?.value;
    if t_list.is_empty()
        || t_list.windows(2).any(|w| w[1] >= w[0])
        || t_list.iter().any(|t| *t <= 0.0)
    {
        return Err(FellerError::Grid(
            "t_list must be positive and strictly decreasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let n = paths_for(c, t);
        let codes = simulate_terminal(spec, x, t, n, seed, |s| {
            let y: Vec<f64> = s.iter().zip(x).map(|(si, xi)| si - xi).collect();
            let joint = region.contains(&y) as u8;
            let up = (y[p] > a) as u8;
            let down = (y[q] <= -a) as u8;
            f64::from(joint | up << 1 | down << 2)
        })?;
        let bit =
            |k: u8| -> Vec<f64> { codes.iter().map(|c| ((*c as u8 >> k) & 1) as f64).collect() };
        let (joint, up, down) = (bit(0), bit(1), bit(2));
        let (pj, se_j) = mean_and_se(&joint);
        let (pu, _) = mean_and_se(&up);
        let (pd, _) = mean_and_se(&down);
        let influence: Vec<f64> = up
            .iter()
            .zip(&down)
            .map(|(u, d)| pd * (u - pu) + pu * (d - pd))
            .collect();
        let (_, se_prod) = mean_and_se(&influence);
        rows.push(NecessityRow {
            t,
            n_paths: n,
            joint_rate: Estimate::new(pj / t, se_j / t),
            product_rate: Estimate::new(pu * pd / t, se_prod / t),
        });
    }
    let t_min = *t_list.last().expect("non-empty");
    let samples = simulate(spec, x, &[t_min], puod_paths, seed ^ 0x005E_ED0D)?.snapshot(0);
    let thresholds: Vec<f64> = (0..x.len())
        .map(|i| {
            if i == p {
                x[i] + a
            } else if i == q {
                x[i] - a
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut puod = puod_test(&samples, &[thresholds])?;
    puod.seed = seed;
    Ok(NecessityReport {
        region,
        a,
        positive_coordinate: p,
        negative_coordinate: q,
        nu_value,
        offorthant_mass: mass.value,
        rows,
        puod,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::presets;

    fn quadrant(a: f64) -> OpenBox {
        OpenBox::new(vec![a, a], vec![f64::INFINITY, f64::INFINITY]).unwrap()
    }

    #[test]
    fn region_must_avoid_origin() {
        assert!(RegionSpec::new("q", quadrant(0.0)).is_err());
        assert!(RegionSpec::new("q", quadrant(0.5)).is_ok());
    }

    #[test]
    fn atom_on_boundary_is_rejected() {
        let r = RegionSpec::new("q", quadrant(1.0)).unwrap();
        let err = smalltime_rate(
            &presets::diagonal_levy(),
            &[0.0, 0.0],
            &[r],
            &[0.1],
            100.0,
            1,
        );
        assert!(matches!(err, Err(FellerError::Precondition(_))));
    }

    #[test]
    fn stable_tail_mass_through_the_drift_preimage() {
        let a = OpenBox::new(vec![1.0], vec![f64::INFINITY]).unwrap();
        let m = jump_mass(&presets::alpha_stable_subordinated(), &[0.0], &a).unwrap();
        assert!((m - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        let neg = OpenBox::new(vec![f64::NEG_INFINITY], vec![-1.0]).unwrap();
        assert_eq!(
            jump_mass(&presets::alpha_stable_subordinated(), &[0.0], &neg).unwrap(),
            0.0
        );
    }

    #[test]
    fn preimage_of_a_box_under_a_ray() {
        let b = OpenBox::new(vec![1.0, -4.0], vec![3.0, -1.0]).unwrap();
        assert_eq!(preimage_interval(&[1.0, -1.0], &b), Some((1.0, 3.0)));
        assert_eq!(preimage_interval(&[1.0, 1.0], &b), None);
        assert_eq!(preimage_interval(&[0.0, -2.0], &b), None);
    }

    #[test]
    fn rectangle_selection_in_three_dimensions() {
        let nu = LevyMeasure::atoms(1.0, vec![vec![1.0, 1.0, -1.0]], vec![1.0]).unwrap();
        let (r, a, p, q) = offorthant_rectangle(&nu).unwrap();
        assert_eq!(a, 0.5);
        assert_eq!((p, q), (0, 2));
        assert_eq!(r.lower, vec![0.5, 0.5, f64::NEG_INFINITY]);
        assert_eq!(r.upper, vec![f64::INFINITY, f64::INFINITY, -0.5]);
    }

    #[test]
    fn necessity_needs_offorthant_mass() {
        let r = puod_necessity_experiment(
            &presets::diagonal_levy(),
            &[0.0, 0.0],
            &[0.1],
            100.0,
            1000,
            1,
        );
        assert!(matches!(r, Err(FellerError::Precondition(_))));
    }

    #[test]
    fn csv_layout() {
        let r = RegionSpec::new("q", quadrant(0.5)).unwrap();
        let table = smalltime_rate(
            &presets::diagonal_levy(),
            &[0.0, 0.0],
            &[r],
            &[0.2, 0.1],
            50.0,
            3,
        )
        .unwrap();
        assert_eq!(table.total_paths, 250 + 500);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(RateTable::CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("0.2,q,"));
        assert_eq!(text.lines().count(), 3);
    }
}
