//! Analytic contact geometry.
//!
//! Objects are described by closed-form primitives instead of meshes, so
//! every derived quantity (gap maps, intersection volumes, penetration
//! depths) has an exact oracle. A [`Shape`] is rasterized against the sensor
//! grid into a [`HeightField`] holding, per pixel, the distance from the
//! undeformed gel plane up to the object's lowest surface point — `0.0`
//! means touching, [`NO_CONTACT`] means the object does not cover the pixel.
//!
//! Pressing the object a depth `d` into the gel displaces the intersection
//! volume `V(d) = Σ max(0, d − gap) · pitch²`, which is monotone in `d`;
//! [`solve_penetration_depth`] inverts it by bisection. The contact force
//! model `V = c · F_G` lives in [`PenetrationModel`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// Gap value marking pixels with no object surface above them.
///
/// Uses infinity rather than a large depth so such pixels contribute exactly
/// zero to volume sums for any finite penetration.
pub const NO_CONTACT: f64 = f64::INFINITY;

/// Bisection bracket for penetration depth, in mm. Physical penetration is
/// bounded by the gel thickness, which is well under this.
pub const MAX_PENETRATION_MM: f64 = 10.0;

/// Shape parameters larger than this (mm) are rejected as outside the
/// supported numeric range.
const MAX_DIMENSION_MM: f64 = 1.0e6;

const BISECT_ITERS: usize = 60;

/// Errors from shape validation and penetration solving.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    /// Shape or pose parameters violate their invariants.
    #[error("invalid geometry input: {0}")]
    InvalidInput(String),
    /// The height field has no pixel covered by the object.
    #[error("height field has no contact surface")]
    NoContactSurface,
    /// The requested intersection volume cannot be reached with any
    /// penetration depth in `[0, MAX_PENETRATION_MM]`.
    #[error("target volume {target:.6} mm^3 unreachable (max {max:.6} mm^3); non-physical force for this geometry")]
    VolumeUnreachable { target: f64, max: f64 },
}

/// An analytic object surface approaching the gel along -z.
///
/// All lengths in mm. Flat-faced variants (annulus, gear face, plate) touch
/// the gel at gap 0 over their whole footprint; curved variants (sphere,
/// cylinder) touch at their apex line/point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Shape {
    /// Ball touching the gel at its apex.
    Sphere { radius: f64 },
    /// Infinite shaft gripped on its lateral surface; `axis` is the in-plane
    /// direction of the shaft axis (normalized internally).
    Cylinder { radius: f64, axis: [f64; 2] },
    /// Flat ring face, e.g. a bearing side.
    Annulus { r_inner: f64, r_outer: f64 },
    /// Flat face with a radial tooth profile: solid disc up to `r_root`,
    /// teeth reaching `r_tip` over alternating angular sectors.
    GearFace {
        r_root: f64,
        r_tip: f64,
        tooth_count: u32,
    },
    /// Axis-aligned flat rectangle (before pose rotation).
    FlatPlate { width: f64, height: f64 },
}

impl Shape {
    /// Checks the shape invariants. Called by [`rasterize`]; exposed so
    /// config loaders can reject bad inputs early.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidInput(String::from(msg)));
        let dim_ok = |v: f64| v.is_finite() && v > 0.0 && v < MAX_DIMENSION_MM;
        match *self {
            Shape::Sphere { radius } => {
                if !dim_ok(radius) {
                    return bad("sphere radius must be positive and finite");
                }
            }
            Shape::Cylinder { radius, axis } => {
                if !dim_ok(radius) {
                    return bad("cylinder radius must be positive and finite");
                }
                let norm = math::sqrt(axis[0] * axis[0] + axis[1] * axis[1]);
                if !norm.is_finite() || norm < 1.0e-9 {
                    return bad("cylinder axis must be a nonzero in-plane vector");
                }
            }
            Shape::Annulus { r_inner, r_outer } => {
                if !dim_ok(r_inner) || !dim_ok(r_outer) {
                    return bad("annulus radii must be positive and finite");
                }
                if r_inner >= r_outer {
                    return bad("annulus requires r_inner < r_outer");
                }
            }
            Shape::GearFace {
                r_root,
                r_tip,
                tooth_count,
            } => {
                if !dim_ok(r_root) || !dim_ok(r_tip) {
                    return bad("gear radii must be positive and finite");
                }
                if r_tip <= r_root {
                    return bad("gear requires r_tip > r_root");
                }
                if tooth_count < 3 {
                    return bad("gear requires tooth_count >= 3");
                }
            }
            Shape::FlatPlate { width, height } => {
                if !dim_ok(width) || !dim_ok(height) {
                    return bad("plate dimensions must be positive and finite");
                }
            }
        }
        Ok(())
    }

    /// Gap above a point given in the shape's own frame, or [`NO_CONTACT`].
    fn gap_at(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Sphere { radius } => {
                let rho2 = x * x + y * y;
                if rho2 < radius * radius {
                    radius - math::sqrt(radius * radius - rho2)
                } else {
                    NO_CONTACT
                }
            }
            Shape::Cylinder { radius, axis } => {
                let norm = math::sqrt(axis[0] * axis[0] + axis[1] * axis[1]);
                let (ux, uy) = (axis[0] / norm, axis[1] / norm);
                // Perpendicular distance from the axis line through the origin.
                let t = x * (-uy) + y * ux;
                if t.abs() < radius {
                    radius - math::sqrt(radius * radius - t * t)
                } else {
                    NO_CONTACT
                }
            }
            Shape::Annulus { r_inner, r_outer } => {
                let rho = math::sqrt(x * x + y * y);
                if rho >= r_inner && rho <= r_outer {
                    0.0
                } else {
                    NO_CONTACT
                }
            }
            Shape::GearFace {
                r_root,
                r_tip,
                tooth_count,
            } => {
                let rho = math::sqrt(x * x + y * y);
                if rho <= r_root {
                    return 0.0;
                }
                if rho > r_tip {
                    return NO_CONTACT;
                }
                // Tooth sectors occupy the first half of each angular period,
                // starting at angle 0 in the shape frame.
                let period = core::f64::consts::TAU / f64::from(tooth_count);
                let mut phi = math::atan2(y, x);
                if phi < 0.0 {
                    phi += core::f64::consts::TAU;
                }
                let frac = (phi / period) - math::floor(phi / period);
                if frac < 0.5 {
                    0.0
                } else {
                    NO_CONTACT
                }
            }
            Shape::FlatPlate { width, height } => {
                if x.abs() <= width * 0.5 && y.abs() <= height * 0.5 {
                    0.0
                } else {
                    NO_CONTACT
                }
            }
        }
    }
}

/// In-plane placement of a shape on the gel: offset in mm, rotation in
/// radians about the grid center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose2D {
    pub offset_x: f64,
    pub offset_y: f64,
    pub rotation: f64,
}

impl Pose2D {
    pub fn identity() -> Self {
        Pose2D {
            offset_x: 0.0,
            offset_y: 0.0,
            rotation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.offset_x.is_finite() && self.offset_y.is_finite() && self.rotation.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::InvalidInput(String::from(
                "pose values must be finite",
            )))
        }
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Self::identity()
    }
}

/// Sensor pixel grid: dimensions in pixels plus the physical pitch in mm/px.
/// The grid is centered on the physical origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub width_px: usize,
    pub height_px: usize,
    pub pixel_pitch: f64,
}

impl GridSpec {
    pub fn new(width_px: usize, height_px: usize, pixel_pitch: f64) -> Self {
        GridSpec {
            width_px,
            height_px,
            pixel_pitch,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(GeometryError::InvalidInput(String::from(
                "grid dimensions must be positive",
            )));
        }
        if !self.pixel_pitch.is_finite() || self.pixel_pitch <= 0.0 {
            return Err(GeometryError::InvalidInput(String::from(
                "pixel pitch must be positive and finite",
            )));
        }
        Ok(())
    }

    /// Physical coordinates (mm) of the center of pixel `(x, y)`.
    #[inline]
    pub fn pixel_center(&self, x: usize, y: usize) -> (f64, f64) {
        let px = (x as f64 + 0.5 - self.width_px as f64 * 0.5) * self.pixel_pitch;
        let py = (y as f64 + 0.5 - self.height_px as f64 * 0.5) * self.pixel_pitch;
        (px, py)
    }
}

/// Rasterized object-to-gel gap map. Row-major, `gap[y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub width_px: usize,
    pub height_px: usize,
    pub pixel_pitch: f64,
    pub gap: Vec<f64>,
}

impl HeightField {
    #[inline]
    pub fn gap_at(&self, x: usize, y: usize) -> f64 {
        self.gap[y * self.width_px + x]
    }

    /// True if at least one pixel is covered by the object.
    pub fn has_contact(&self) -> bool {
        self.gap.iter().any(|g| g.is_finite())
    }

    /// Smallest gap over the field, if any pixel is covered.
    pub fn min_gap(&self) -> Option<f64> {
        self.gap
            .iter()
            .copied()
            .filter(|g| g.is_finite())
            .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.min(g))))
    }

    /// Mirror the field left-right. Used to render the opposing gripper jaw,
    /// which sees the same contact flipped.
    pub fn mirrored_x(&self) -> HeightField {
        let mut gap = Vec::with_capacity(self.gap.len());
        for y in 0..self.height_px {
            let row = &self.gap[y * self.width_px..(y + 1) * self.width_px];
            gap.extend(row.iter().rev().copied());
        }
        HeightField {
            width_px: self.width_px,
            height_px: self.height_px,
            pixel_pitch: self.pixel_pitch,
            gap,
        }
    }
}

/// Volume-per-force constant `c` in `V = c * F_G` (mm^3 per N).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PenetrationModel {
    pub c: f64,
}

impl PenetrationModel {
    pub fn new(c: f64) -> Self {
        PenetrationModel { c }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.c.is_finite() && self.c > 0.0 {
            Ok(())
        } else {
            Err(GeometryError::InvalidInput(String::from(
                "penetration constant c must be positive and finite",
            )))
        }
    }

    /// Intersection volume prescribed for a grip force (mm^3).
    #[inline]
    pub fn volume_for(&self, grip_force: f64) -> f64 {
        self.c * grip_force
    }
}

/// Rasterizes a shape under a pose onto the sensor grid.
///
/// Deterministic: identical inputs produce bit-identical fields. Pixel
/// centers are transformed into the shape frame (inverse pose) and the
/// analytic gap is evaluated pointwise.
pub fn rasterize(shape: &Shape, pose: &Pose2D, grid: &GridSpec) -> Result<HeightField, GeometryError> {
    shape.validate()?;
    pose.validate()?;
    grid.validate()?;

    let (c, s) = (math::cos(pose.rotation), math::sin(pose.rotation));
    let mut gap = Vec::with_capacity(grid.width_px * grid.height_px);
    for y in 0..grid.height_px {
        for x in 0..grid.width_px {
            let (px, py) = grid.pixel_center(x, y);
            let dx = px - pose.offset_x;
            let dy = py - pose.offset_y;
            // Inverse rotation into the shape frame.
            let sx = c * dx + s * dy;
            let sy = -s * dx + c * dy;
            gap.push(shape.gap_at(sx, sy));
        }
    }
    Ok(HeightField {
        width_px: grid.width_px,
        height_px: grid.height_px,
        pixel_pitch: grid.pixel_pitch,
        gap,
    })
}

/// Intersection volume (mm^3) between gel plane pressed to depth `d` and the
/// object: `Σ max(0, d − gap) · pitch²`. Zero when nothing is in contact.
pub fn intersection_volume(hf: &HeightField, d: f64) -> f64 {
    let px_area = hf.pixel_pitch * hf.pixel_pitch;
    let mut sum = 0.0;
    for &g in &hf.gap {
        let pen = d - g;
        if pen > 0.0 {
            sum += pen;
        }
    }
    sum * px_area
}

/// Finds the penetration depth `d` whose intersection volume matches
/// `target_volume` to a relative tolerance of 1e-6, by bisection on the
/// monotone map `d -> V(d)` over `[0, MAX_PENETRATION_MM]`.
pub fn solve_penetration_depth(hf: &HeightField, target_volume: f64) -> Result<f64, GeometryError> {
    if !target_volume.is_finite() || target_volume < 0.0 {
        return Err(GeometryError::InvalidInput(String::from(
            "target volume must be non-negative and finite",
        )));
    }
    if target_volume == 0.0 {
        return Ok(0.0);
    }
    if !hf.has_contact() {
        return Err(GeometryError::NoContactSurface);
    }

    let max_volume = intersection_volume(hf, MAX_PENETRATION_MM);
    if target_volume > max_volume {
        return Err(GeometryError::VolumeUnreachable {
            target: target_volume,
            max: max_volume,
        });
    }

    let tol = 1.0e-6 * target_volume;
    let (mut lo, mut hi) = (0.0_f64, MAX_PENETRATION_MM);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECT_ITERS {
        mid = 0.5 * (lo + hi);
        let v = intersection_volume(hf, mid);
        if (v - target_volume).abs() <= tol {
            return Ok(mid);
        }
        if v < target_volume {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}
