//! State-dependent Lévy characteristics and the deterministic operations on
//! them: symbol, extended generator, orthant mass and Liggett gap.

pub mod functions;
pub mod measure;
mod ops;
pub mod region;
pub mod triplet;

pub use functions::{
    Calibration, FunctionBank, Monotone, Observable, Orthant, Product, SmoothFunction,
    Supermodular, TestFunction,
};
pub use measure::{
    cutoff, is_off_orthant, AlphaStableMeasure, AtomicLaw, DensityLaw, JumpLaw, LevyMeasure,
    MeasureKind, TruncatedIntegral,
};
pub use ops::{
    generator_apply, liggett_gap, offorthant_mass_of, probe_symbol_bound, resnick_offorthant_mass,
    symbol_eval, Evaluation, LiggettGap, OrthantMass, SamplingOptions,
};
pub use region::OpenBox;
pub use triplet::{Diffusion, Drift, JumpKernel, LocalCharacteristics, StateTriplet};
