//! Optical calibration: gradient lookup tables and the penetration constant.
//!
//! A real sensor's lookup table is built by pressing a calibration ball into
//! the gel at many positions and binning every pixel's (gradient, RGB) pair.
//! This module implements that procedure, plus a parametric three-light
//! Lambertian shader ([`GroundTruthShader`]) standing in for the physical
//! sensor so the whole calibration loop can be exercised and tested without
//! hardware data.
//!
//! The second calibration concern is the volume-per-force constant `c`:
//! [`fit_penetration_constant`] adjusts `c` until the rendered imprint area
//! matches a reference imprint area measured in an experiment.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use alloc::collections::VecDeque;

use crate::geometry::{self, GeometryError, GridSpec, Pose2D, PenetrationModel, Shape};
use crate::math;
use crate::render::{self, BlurCascade, GradientImage, RenderError, RgbImage};

/// Depth threshold (mm) above which a blurred pixel counts as part of the
/// imprint when matching imprint areas.
pub const IMPRINT_DEPTH_THRESHOLD_MM: f64 = 1.0e-3;

/// Relative tolerance for imprint-area matching in
/// [`fit_penetration_constant`].
pub const IMPRINT_AREA_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibError {
    #[error("calibration failure: {0}")]
    Failure(String),
    #[error("invalid calibration input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Calibrated map from depth-gradient bins to per-channel pixel intensity.
///
/// The gradient plane `[-g_max, g_max]²` is divided into `n_bins × n_bins`
/// square bins (row-major, `gy` selecting the row). Each bin stores the mean
/// RGB of every calibration pixel that fell into it; bins nobody hit are
/// filled from their nearest populated neighbor before use. Lookups
/// interpolate bilinearly between bin centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientLut {
    pub n_bins: usize,
    pub g_max: f64,
    /// Sample count per bin (pre-fill; filled bins keep count 0).
    pub counts: Vec<u64>,
    /// Mean RGB per bin, row-major `[gy_bin * n_bins + gx_bin]`.
    pub values: Vec<[f64; 3]>,
    /// RGB of the bin containing gradient (0, 0).
    pub flat_response: [f64; 3],
}

impl GradientLut {
    fn bin_width(&self) -> f64 {
        2.0 * self.g_max / self.n_bins as f64
    }

    /// Bin index holding gradient value `g` along one axis.
    fn bin_index(&self, g: f64) -> usize {
        let u = (g + self.g_max) / self.bin_width();
        let i = math::floor(u) as isize;
        i.clamp(0, self.n_bins as isize - 1) as usize
    }

    /// Bilinear lookup between bin centers. The boolean is true when the
    /// gradient lies outside the calibrated range and was clamped to the
    /// outermost bin.
    pub fn lookup(&self, gx: f64, gy: f64) -> ([f64; 3], bool) {
        let saturated = gx.abs() > self.g_max || gy.abs() > self.g_max;
        let bw = self.bin_width();
        let n = self.n_bins;
        // Continuous coordinates in units of bins, relative to bin centers.
        let coord = |g: f64| -> (usize, f64) {
            if n == 1 {
                return (0, 0.0);
            }
            let u = (g + self.g_max) / bw - 0.5;
            let i0 = math::floor(u) as isize;
            let i0c = i0.clamp(0, n as isize - 2) as usize;
            let t = (u - i0c as f64).clamp(0.0, 1.0);
            (i0c, t)
        };
        let (ix, tx) = coord(gx);
        let (iy, ty) = coord(gy);
        let at = |x: usize, y: usize| self.values[y * n + x];
        let (v00, v10) = (at(ix, iy), at(ix + 1, iy));
        let (v01, v11) = (at(ix, iy + 1), at(ix + 1, iy + 1));
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let top = v00[ch] * (1.0 - tx) + v10[ch] * tx;
            let bot = v01[ch] * (1.0 - tx) + v11[ch] * tx;
            out[ch] = top * (1.0 - ty) + bot * ty;
        }
        (out, saturated)
    }
}

/// Three directional colored lights plus ambient, shading a surface described
/// by its depth gradients. Serves as the ground-truth image source for
/// calibration tests and synthetic datasets.
///
/// Lights sit at azimuths 0°, 120°, 240° and the given elevation; each feeds
/// exactly one channel (R, G, B), the way the physical sensor separates its
/// illumination directions by color.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruthShader {
    pub elevation_deg: f64,
    pub ambient: f64,
    pub gain: f64,
}

impl Default for GroundTruthShader {
    fn default() -> Self {
        GroundTruthShader {
            elevation_deg: 45.0,
            ambient: 30.0,
            gain: 140.0,
        }
    }
}

impl GroundTruthShader {
    /// Unit light direction for the channel (0 = R at azimuth 0°, 1 = G at
    /// 120°, 2 = B at 240°).
    fn light(&self, channel: usize) -> [f64; 3] {
        let az = f64::from(channel as u32) * 120.0_f64.to_radians();
        let el = self.elevation_deg.to_radians();
        [
            math::cos(el) * math::cos(az),
            math::cos(el) * math::sin(az),
            math::sin(el),
        ]
    }
}

/// Renders the ground-truth RGB image for a gradient field: per pixel the
/// surface normal is `(-gx, -gy, 1)` normalized and each channel gets
/// `clamp(ambient + gain * max(0, n·l))`.
pub fn synth_ground_truth(g: &GradientImage, shader: &GroundTruthShader) -> RgbImage {
    let mut img = RgbImage::filled(g.width_px, g.height_px, [0, 0, 0]);
    let lights = [shader.light(0), shader.light(1), shader.light(2)];
    for y in 0..g.height_px {
        for x in 0..g.width_px {
            let (gx, gy) = g.at(x, y);
            let norm = math::sqrt(gx * gx + gy * gy + 1.0);
            let n = [-gx / norm, -gy / norm, 1.0 / norm];
            let mut rgb = [0u8; 3];
            for ch in 0..3 {
                let l = lights[ch];
                let ndotl = (n[0] * l[0] + n[1] * l[1] + n[2] * l[2]).max(0.0);
                let v = shader.ambient + shader.gain * ndotl;
                rgb[ch] = math::round(v.clamp(0.0, 255.0)) as u8;
            }
            img.set_pixel(x, y, rgb);
        }
    }
    img
}

/// One synthetic calibration press: rasterize a ball at `pose`, press it to
/// `depth` mm, blur, differentiate, and shade with the ground-truth shader.
/// Returns the gradient field together with its ground-truth image.
pub fn sphere_press(
    radius: f64,
    pose: &Pose2D,
    depth: f64,
    grid: &GridSpec,
    cascade: &BlurCascade,
    shader: &GroundTruthShader,
) -> Result<(GradientImage, RgbImage), CalibError> {
    if !depth.is_finite() || depth <= 0.0 || depth >= radius {
        return Err(CalibError::InvalidInput(String::from(
            "press depth must lie in (0, radius)",
        )));
    }
    let hf = geometry::rasterize(&Shape::Sphere { radius }, pose, grid)?;
    let mut img = render::DepthImage::zeros(grid.width_px, grid.height_px);
    for (v, &gap) in img.values.iter_mut().zip(&hf.gap) {
        let pen = depth - gap;
        if pen > 0.0 {
            *v = pen;
        }
    }
    let smoothed = render::blur(&img, cascade);
    let grads = render::gradients(&smoothed, grid.pixel_pitch)?;
    let truth = synth_ground_truth(&grads, shader);
    Ok((grads, truth))
}

/// Builds a [`GradientLut`] from calibration presses.
///
/// Every pixel of every press contributes its (gx, gy, RGB) sample to its
/// bin; bin values are sample means. Empty bins are filled from the nearest
/// populated bin (breadth-first, deterministic tie-breaking), and the flat
/// response is read from the bin containing gradient (0, 0).
pub fn calibrate_lut(
    presses: &[(GradientImage, RgbImage)],
    n_bins: usize,
    g_max: f64,
) -> Result<GradientLut, CalibError> {
    if presses.is_empty() {
        return Err(CalibError::InvalidInput(String::from(
            "at least one calibration press is required",
        )));
    }
    if n_bins == 0 || !g_max.is_finite() || g_max <= 0.0 {
        return Err(CalibError::InvalidInput(String::from(
            "n_bins and g_max must be positive",
        )));
    }
    let mut lut = GradientLut {
        n_bins,
        g_max,
        counts: vec![0; n_bins * n_bins],
        values: vec![[0.0; 3]; n_bins * n_bins],
        flat_response: [0.0; 3],
    };
    let mut sums = vec![[0.0_f64; 3]; n_bins * n_bins];
    for (grads, img) in presses {
        if grads.width_px != img.width_px || grads.height_px != img.height_px {
            return Err(CalibError::InvalidInput(String::from(
                "press gradient and image sizes differ",
            )));
        }
        for y in 0..grads.height_px {
            for x in 0..grads.width_px {
                let (gx, gy) = grads.at(x, y);
                let bin = lut.bin_index(gy) * n_bins + lut.bin_index(gx);
                let rgb = img.pixel(x, y);
                for ch in 0..3 {
                    sums[bin][ch] += f64::from(rgb[ch]);
                }
                lut.counts[bin] += 1;
            }
        }
    }
    if lut.counts.iter().all(|&c| c == 0) {
        return Err(CalibError::Failure(String::from(
            "no populated bins after calibration",
        )));
    }
    for (i, &count) in lut.counts.iter().enumerate() {
        if count > 0 {
            for ch in 0..3 {
                lut.values[i][ch] = sums[i][ch] / count as f64;
            }
        }
    }
    fill_empty_bins(&mut lut);
    let flat_bin = lut.bin_index(0.0) * n_bins + lut.bin_index(0.0);
    lut.flat_response = lut.values[flat_bin];
    Ok(lut)
}

/// Multi-source BFS from all populated bins; each empty bin inherits the
/// value of its nearest populated neighbor (first visitor wins, scan order
/// row-major so the result is deterministic).
fn fill_empty_bins(lut: &mut GradientLut) {
    let n = lut.n_bins;
    let mut queue = VecDeque::new();
    let mut source: Vec<Option<usize>> = vec![None; n * n];
    for i in 0..n * n {
        if lut.counts[i] > 0 {
            source[i] = Some(i);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % n, i / n);
        let src = source[i].unwrap();
        let push = |nx: usize, ny: usize, queue: &mut VecDeque<usize>, source: &mut Vec<Option<usize>>| {
            let j = ny * n + nx;
            if source[j].is_none() {
                source[j] = Some(src);
                queue.push_back(j);
            }
        };
        if x > 0 {
            push(x - 1, y, &mut queue, &mut source);
        }
        if x + 1 < n {
            push(x + 1, y, &mut queue, &mut source);
        }
        if y > 0 {
            push(x, y - 1, &mut queue, &mut source);
        }
        if y + 1 < n {
            push(x, y + 1, &mut queue, &mut source);
        }
    }
    for i in 0..n * n {
        if lut.counts[i] == 0 {
            if let Some(src) = source[i] {
                lut.values[i] = lut.values[src];
            }
        }
    }
}

/// Bounding box `(x0, y0, w, h)` of pixels whose gradient magnitude exceeds
/// `threshold`. `None` when nothing does.
pub fn contact_bbox(g: &GradientImage, threshold: f64) -> Option<(usize, usize, usize, usize)> {
    let (mut x0, mut y0) = (usize::MAX, usize::MAX);
    let (mut x1, mut y1) = (0usize, 0usize);
    let mut any = false;
    for y in 0..g.height_px {
        for x in 0..g.width_px {
            let (gx, gy) = g.at(x, y);
            if gx.abs() > threshold || gy.abs() > threshold {
                any = true;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if any {
        Some((x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    } else {
        None
    }
}

/// Result of fitting the penetration constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenetrationFit {
    pub model: PenetrationModel,
    /// Imprint area (mm²) the fitted constant actually produces.
    pub achieved_area: f64,
    /// Set when the imprint area does not depend on the constant (flat
    /// contact); the bracket midpoint is returned in that case.
    pub degenerate: bool,
}

/// Rendered imprint area for a candidate constant: pixels whose blurred
/// depth exceeds [`IMPRINT_DEPTH_THRESHOLD_MM`], times the pixel area.
fn imprint_area(
    hf: &geometry::HeightField,
    cascade: &BlurCascade,
    f_ref: f64,
    c: f64,
) -> Result<f64, CalibError> {
    let depth = render::depth_from_contact(hf, f_ref, &PenetrationModel::new(c))?;
    let smoothed = render::blur(&depth, cascade);
    let count = smoothed
        .values
        .iter()
        .filter(|&&v| v > IMPRINT_DEPTH_THRESHOLD_MM)
        .count();
    Ok(count as f64 * hf.pixel_pitch * hf.pixel_pitch)
}

/// Determines the volume-per-force constant by matching the rendered imprint
/// area against a measured reference area, bisecting `c` over `bracket`.
///
/// The imprint area is monotone in `c` for convex shapes, so bisection
/// converges; the match tolerance is [`IMPRINT_AREA_TOLERANCE`] relative.
/// Flat-faced shapes whose footprint does not change with depth are reported
/// as degenerate with the bracket midpoint.
pub fn fit_penetration_constant(
    shape: &Shape,
    pose: &Pose2D,
    grid: &GridSpec,
    cascade: &BlurCascade,
    f_ref: f64,
    area_ref: f64,
    bracket: (f64, f64),
) -> Result<PenetrationFit, CalibError> {
    if !f_ref.is_finite() || f_ref <= 0.0 {
        return Err(CalibError::InvalidInput(String::from(
            "reference force must be positive",
        )));
    }
    if !area_ref.is_finite() || area_ref <= 0.0 {
        return Err(CalibError::InvalidInput(String::from(
            "reference imprint area must be positive",
        )));
    }
    let (c_lo, c_hi) = bracket;
    if !(c_lo.is_finite() && c_hi.is_finite()) || c_lo <= 0.0 || c_lo >= c_hi {
        return Err(CalibError::InvalidInput(String::from(
            "bracket must satisfy 0 < c_lo < c_hi",
        )));
    }

    let hf = geometry::rasterize(shape, pose, grid)?;
    let tol = IMPRINT_AREA_TOLERANCE * area_ref;
    let area_lo = imprint_area(&hf, cascade, f_ref, c_lo)?;
    let area_hi = imprint_area(&hf, cascade, f_ref, c_hi)?;

    // Footprint independent of c: flat contact. Match or fail outright.
    if (area_hi - area_lo).abs() <= f64::EPSILON * area_hi.max(1.0) {
        if (area_lo - area_ref).abs() <= tol {
            return Ok(PenetrationFit {
                model: PenetrationModel::new(0.5 * (c_lo + c_hi)),
                achieved_area: area_lo,
                degenerate: true,
            });
        }
        return Err(CalibError::Failure(String::from(
            "imprint area is independent of c and does not match the reference",
        )));
    }

    if area_ref < area_lo - tol || area_ref > area_hi + tol {
        return Err(CalibError::Failure(String::from(
            "reference imprint area unreachable within the bracket",
        )));
    }

    let (mut lo, mut hi) = (c_lo, c_hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let area = imprint_area(&hf, cascade, f_ref, mid)?;
        if (area - area_ref).abs() <= tol {
            return Ok(PenetrationFit {
                model: PenetrationModel::new(mid),
                achieved_area: area,
                degenerate: false,
            });
        }
        if area < area_ref {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let area = imprint_area(&hf, cascade, f_ref, mid)?;
    if (area - area_ref).abs() <= tol {
        return Ok(PenetrationFit {
            model: PenetrationModel::new(mid),
            achieved_area: area,
            degenerate: false,
        });
    }
    Err(CalibError::Failure(String::from(
        "imprint-area bisection did not reach the requested tolerance",
    )))
}
