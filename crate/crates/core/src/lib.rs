//! Synthetic tactile-sensing toolkit for grip-stability data generation.
//!
//! The crate models a parallel gripper with optical tactile sensors pressing
//! analytic object shapes into an elastic gel, and provides everything needed
//! to label the resulting grips with a maximum pull force:
//!
//! * [`geometry`] — analytic shapes, rasterization to contact height fields,
//!   and penetration-depth solving for a prescribed intersection volume.
//! * [`render`] — depth image synthesis, Gaussian blur cascade, gradient
//!   computation, and lookup-table shading into sensor RGB images.
//! * [`optical`] — lookup-table calibration from sphere presses and
//!   penetration-constant fitting by imprint-size matching.
//! * [`pull`] — the step-force pull experiment as a stick-slip state machine
//!   with actuator lag, plus slip-label extraction and sensor-gain fitting.
//! * [`friction`] — linear and `a + b/F_G` ratio fits with covariance-based
//!   uncertainty propagation, reconciling Coulomb simulation with affine
//!   experimental friction.
//! * [`metrics`] — MSE / PSNR / SSIM image comparison.
//!
//! Everything here is deterministic: identical inputs (including seeds)
//! produce bit-identical outputs. The crate is `no_std`-compatible with
//! `alloc`; file formats and orchestration live in the companion `tacsim`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod friction;
pub mod geometry;
mod math;
pub mod metrics;
pub mod optical;
pub mod pull;
pub mod render;
pub mod seed;

pub use friction::{LinearFit, MaxPullPoint, PointSource, RatioFit};
pub use geometry::{GridSpec, HeightField, PenetrationModel, Pose2D, Shape};
pub use metrics::MetricReport;
pub use optical::{GradientLut, GroundTruthShader};
pub use pull::{ActuatorModel, ForceProfile, GripConfig, LabelParams, PullTrace, SlipLabel};
pub use render::{BlurCascade, DepthImage, GradientImage, RgbImage};
