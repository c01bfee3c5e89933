//! Planning and simulation for ghost projection with translated structured masks.
//!
//! Ghost projection builds a desired 2D distribution of radiant exposure by
//! summing many exposures of a single mask, each at a different transverse
//! offset and with its own exposure time. The toolkit covers the full loop:
//!
//! 1. [`mask`] — procedural generation of binary mask patterns (random binary,
//!    Gaussian/Lorentzian-smoothed, random fractal, Legendre).
//! 2. [`ensemble`] — capture of translated window views into the mean-corrected
//!    pattern matrix used for planning.
//! 3. [`planner`] — nonnegative least-squares selection of offsets and weights,
//!    conversion to exposure times, pedestal prediction, and travel ordering.
//! 4. [`simulator`] — frame-by-frame execution of a plan under photon-counting
//!    and hardware noise models.
//! 5. [`metrics`] — fidelity scoring of an accumulated exposure against the
//!    target.
//!
//! All randomness is drawn from a counter-based generator seeded explicitly;
//! identical inputs give bit-identical outputs on every run.

pub mod ensemble;
pub mod error;
pub mod grid;
pub mod mask;
pub mod matrix;
pub mod metrics;
pub mod nnls;
pub mod planner;
pub mod rng;
pub mod simulator;
pub mod spectral;

pub use ensemble::{capture_ensemble, flux_correct, BeamModel, BeamProfile, IlluminationEnsemble, WindowGeometry};
pub use error::{Error, Result};
pub use grid::Grid;
pub use mask::{binarize, fractal_kernel, generate_mask, MaskClass, MaskField, MaskSpec};
pub use matrix::ColMatrix;
pub use metrics::{measure_pedestal, score_projection, QualityReport, Snr};
pub use nnls::{kkt_report, solve_nnls, KktReport, NnlsSolution};
pub use planner::{
    enforce_pedestal, make_plan, order_exposures, ExposurePlan, PlanEntry, ScalingMode, TargetPattern,
};
pub use simulator::{accumulate_sequence, simulate_exposure, NoiseConfig, ProjectionResult};
