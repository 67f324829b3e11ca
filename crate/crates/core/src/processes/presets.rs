//! Shipped example processes, one or more per family.

use super::{
    JumpLevy, Kernel, OrnsteinUhlenbeck, ProcessSpec, PseudoPoisson, Subordinated, Subordinator,
    SubordinatorJumps,
};
use crate::levy::{DensityLaw, JumpLaw, LevyMeasure};

/// Catalogue entry.
#[derive(Debug, Clone, Copy)]
pub struct PresetInfo {
    pub name: &'static str,
    pub family: &'static str,
    pub summary: &'static str,
    pub build: fn() -> ProcessSpec,
}

impl PresetInfo {
    pub fn spec(&self) -> ProcessSpec {
        (self.build)()
    }

    /// Default starting state: the origin (a state of every shipped chain).
    pub fn start(&self) -> Vec<f64> {
        vec![0.0; self.spec().dim()]
    }
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "poisson_1d",
        family: "Lévy process",
        summary: "d=1, b=0, rate 1, unit jumps",
        build: poisson_1d,
    },
    PresetInfo {
        name: "diagonal_levy",
        family: "Lévy process",
        summary: "d=2, b=0, rate 1, jumps (1,1); common-shock Poisson pair",
        build: diagonal_levy,
    },
    PresetInfo {
        name: "antidiagonal_levy",
        family: "Lévy process",
        summary: "d=2, b=0, rate 1, jumps (1,-1); violates the orthant condition",
        build: antidiagonal_levy,
    },
    PresetInfo {
        name: "ou_poisson_driver",
        family: "Ornstein-Uhlenbeck (Langevin) process",
        summary: "d=1, mean reversion 1, driven by a rate-1 unit-jump Poisson process",
        build: ou_poisson_driver,
    },
    PresetInfo {
        name: "pseudo_poisson_2state",
        family: "Feller pseudo-Poisson process",
        summary: "chain on {0,1} with q(0,.)=q(1,.)=delta_1, clock rate 1",
        build: pseudo_poisson_2state,
    },
    PresetInfo {
        name: "pseudo_poisson_birth_death",
        family: "Feller pseudo-Poisson process",
        summary: "monotone birth-death chain on {0,...,4}, up 0.4, down 0.3, clock rate 1",
        build: pseudo_poisson_birth_death,
    },
    PresetInfo {
        name: "pseudo_poisson_translation",
        family: "Feller pseudo-Poisson process",
        summary: "translation kernel x + Z, Z ~ Exp(1), clock rate 2",
        build: pseudo_poisson_translation,
    },
    PresetInfo {
        name: "alpha_stable_subordinated",
        family: "Bochner subordination",
        summary: "unit drift time-changed by a 1/2-stable subordinator",
        build: alpha_stable_subordinated,
    },
];

pub fn find(name: &str) -> Option<&'static PresetInfo> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn poisson_1d() -> ProcessSpec {
    let nu = LevyMeasure::atoms(1.0, vec![vec![1.0]], vec![1.0]).expect("valid atom");
    ProcessSpec::JumpLevy(JumpLevy::new(vec![0.0], nu).expect("valid preset"))
}

pub fn diagonal_levy() -> ProcessSpec {
    let nu = LevyMeasure::atoms(1.0, vec![vec![1.0, 1.0]], vec![1.0]).expect("valid atom");
    ProcessSpec::JumpLevy(JumpLevy::new(vec![0.0, 0.0], nu).expect("valid preset"))
}

pub fn antidiagonal_levy() -> ProcessSpec {
    let nu = LevyMeasure::atoms(1.0, vec![vec![1.0, -1.0]], vec![1.0]).expect("valid atom");
    ProcessSpec::JumpLevy(JumpLevy::new(vec![0.0, 0.0], nu).expect("valid preset"))
}

pub fn ou_poisson_driver() -> ProcessSpec {
    let nu = LevyMeasure::atoms(1.0, vec![vec![1.0]], vec![1.0]).expect("valid atom");
    let driver = JumpLevy::new(vec![0.0], nu).expect("valid driver");
    ProcessSpec::OrnsteinUhlenbeck(OrnsteinUhlenbeck::new(1.0, driver).expect("valid preset"))
}

pub fn pseudo_poisson_2state() -> ProcessSpec {
    let kernel = Kernel::FiniteChain {
        states: vec![vec![0.0], vec![1.0]],
        transition: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
    };
    ProcessSpec::PseudoPoisson(PseudoPoisson::new(1.0, kernel).expect("valid preset"))
}

pub fn pseudo_poisson_birth_death() -> ProcessSpec {
    let n = 5;
    let states = (0..n).map(|i| vec![i as f64]).collect();
    let transition = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            let up = if i + 1 < n { 0.4 } else { 0.0 };
            let down = if i > 0 { 0.3 } else { 0.0 };
            if i + 1 < n {
                row[i + 1] = up;
            }
            if i > 0 {
                row[i - 1] = down;
            }
            row[i] = 1.0 - up - down;
            row
        })
        .collect();
    let kernel = Kernel::FiniteChain { states, transition };
    ProcessSpec::PseudoPoisson(PseudoPoisson::new(1.0, kernel).expect("valid preset"))
}

pub fn pseudo_poisson_translation() -> ProcessSpec {
    let law = JumpLaw::Density(DensityLaw::exponential(vec![1.0]).expect("positive rate"));
    ProcessSpec::PseudoPoisson(
        PseudoPoisson::new(2.0, Kernel::Translation { law }).expect("valid preset"),
    )
}

pub fn alpha_stable_subordinated() -> ProcessSpec {
    ProcessSpec::Subordinated(Subordinated {
        inner: JumpLevy::pure_drift(vec![1.0]),
        subordinator: Subordinator::new(0.0, SubordinatorJumps::AlphaStable { alpha: 0.5 })
            .expect("valid clock"),
    })
}
