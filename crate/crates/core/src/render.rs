//! Tactile image rendering: contact depth, gel smoothing, gradients, and
//! lookup-table shading.
//!
//! The pipeline mirrors how an optical tactile sensor forms its image. A
//! rigid imprint is derived from the contact height field at the penetration
//! depth prescribed by the grip force, a cascade of Gaussian blurs models the
//! elastic gel spreading that imprint, the smoothed depth is converted into
//! surface gradients, and a calibrated [`GradientLut`](crate::optical::GradientLut)
//! maps gradients into RGB intensities which are composited onto the sensor's
//! background image.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{self, GeometryError, GridSpec, HeightField, PenetrationModel, Pose2D, Shape};
use crate::math;
use crate::optical::GradientLut;

/// Errors from the rendering pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid render input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Local gel indentation depth per pixel, in mm. Row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width_px: usize,
    pub height_px: usize,
    pub values: Vec<f64>,
}

impl DepthImage {
    pub fn zeros(width_px: usize, height_px: usize) -> Self {
        DepthImage {
            width_px,
            height_px,
            values: vec![0.0; width_px * height_px],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width_px + x]
    }
}

/// Surface slope per pixel (mm per mm, dimensionless), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientImage {
    pub width_px: usize,
    pub height_px: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientImage {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width_px + x;
        (self.gx[i], self.gy[i])
    }
}

/// 8-bit RGB sensor image, interleaved row-major (`r g b r g b ...`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width_px: usize,
    pub height_px: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width_px: usize, height_px: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width_px * height_px * 3);
        for _ in 0..width_px * height_px {
            data.extend_from_slice(&rgb);
        }
        RgbImage {
            width_px,
            height_px,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width_px + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width_px + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy of the axis-aligned subwindow. Panics if out of bounds.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> RgbImage {
        assert!(x0 + w <= self.width_px && y0 + h <= self.height_px);
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let start = (y * self.width_px + x0) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        RgbImage {
            width_px: w,
            height_px: h,
            data,
        }
    }
}

/// Ordered Gaussian smoothing cascade modeling gel deformation.
///
/// Each kernel is a unit-sum separable Gaussian of the given odd size with
/// `sigma = size / 6`, applied with replicate border handling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlurCascade {
    pub kernel_sizes: Vec<usize>,
}

impl BlurCascade {
    pub fn new(kernel_sizes: Vec<usize>) -> Result<Self, RenderError> {
        for &k in &kernel_sizes {
            if k < 3 || k % 2 == 0 {
                return Err(RenderError::InvalidInput(String::from(
                    "blur kernel sizes must be odd and >= 3",
                )));
            }
        }
        Ok(BlurCascade { kernel_sizes })
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        Self::new(self.kernel_sizes.clone()).map(|_| ())
    }
}

impl Default for BlurCascade {
    fn default() -> Self {
        BlurCascade {
            kernel_sizes: vec![71, 51, 21, 11, 5],
        }
    }
}

/// Shading output: the image plus how many pixels had gradients outside the
/// calibrated lookup range (clamped to the outermost bin).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shaded {
    pub image: RgbImage,
    pub saturated_px: usize,
}

/// Depth image of a contact pressed with grip force `grip_force`:
/// the penetration depth is solved so the intersection volume equals
/// `pm.c * grip_force`, then `depth = max(0, d - gap)` per pixel.
pub fn depth_from_contact(
    hf: &HeightField,
    grip_force: f64,
    pm: &PenetrationModel,
) -> Result<DepthImage, RenderError> {
    if !grip_force.is_finite() || grip_force < 0.0 {
        return Err(RenderError::InvalidInput(String::from(
            "grip force must be non-negative and finite",
        )));
    }
    pm.validate()?;
    let mut img = DepthImage::zeros(hf.width_px, hf.height_px);
    if grip_force == 0.0 {
        return Ok(img);
    }
    let d = geometry::solve_penetration_depth(hf, pm.volume_for(grip_force))?;
    for (out, &g) in img.values.iter_mut().zip(&hf.gap) {
        let pen = d - g;
        if pen > 0.0 {
            *out = pen;
        }
    }
    Ok(img)
}

fn gaussian_kernel(size: usize) -> Vec<f64> {
    let sigma = size as f64 / 6.0;
    let half = (size / 2) as isize;
    let mut w: Vec<f64> = (-half..=half)
        .map(|i| math::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// One separable pass (horizontal then vertical) with replicate borders.
fn blur_once(values: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..h {
        let row = &values[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                let xi = (x as isize + k as isize - half).clamp(0, w as isize - 1) as usize;
                acc += kw * row[xi];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                let yi = (y as isize + k as isize - half).clamp(0, h as isize - 1) as usize;
                acc += kw * tmp[yi * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Applies the cascade's Gaussians in listed order.
pub fn blur(d: &DepthImage, cascade: &BlurCascade) -> DepthImage {
    let mut values = d.values.clone();
    for &size in &cascade.kernel_sizes {
        let kernel = gaussian_kernel(size);
        values = blur_once(&values, d.width_px, d.height_px, &kernel);
    }
    DepthImage {
        width_px: d.width_px,
        height_px: d.height_px,
        values,
    }
}

/// Depth gradients: central differences in the interior, one-sided at the
/// borders, scaled by the pixel pitch.
pub fn gradients(d: &DepthImage, pixel_pitch: f64) -> Result<GradientImage, RenderError> {
    if !pixel_pitch.is_finite() || pixel_pitch <= 0.0 {
        return Err(RenderError::InvalidInput(String::from(
            "pixel pitch must be positive and finite",
        )));
    }
    let (w, h) = (d.width_px, d.height_px);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if w == 1 {
                0.0
            } else if x == 0 {
                (d.at(1, y) - d.at(0, y)) / pixel_pitch
            } else if x == w - 1 {
                (d.at(w - 1, y) - d.at(w - 2, y)) / pixel_pitch
            } else {
                (d.at(x + 1, y) - d.at(x - 1, y)) / (2.0 * pixel_pitch)
            };
            gy[i] = if h == 1 {
                0.0
            } else if y == 0 {
                (d.at(x, 1) - d.at(x, 0)) / pixel_pitch
            } else if y == h - 1 {
                (d.at(x, h - 1) - d.at(x, h - 2)) / pixel_pitch
            } else {
                (d.at(x, y + 1) - d.at(x, y - 1)) / (2.0 * pixel_pitch)
            };
        }
    }
    Ok(GradientImage {
        width_px: w,
        height_px: h,
        gx,
        gy,
    })
}

/// Shades a gradient image with a calibrated lookup table on top of the
/// sensor background.
///
/// Per pixel and channel: `out = clamp(background + lut(gx, gy) - lut(0, 0))`.
/// Compositing the *difference* from the flat response makes the zero-contact
/// image reproduce the background bit-exactly. Gradients outside the lookup
/// range are clamped to the outermost bin and counted in
/// [`Shaded::saturated_px`].
pub fn shade(
    g: &GradientImage,
    lut: &GradientLut,
    background: &RgbImage,
) -> Result<Shaded, RenderError> {
    if g.width_px != background.width_px || g.height_px != background.height_px {
        return Err(RenderError::DimensionMismatch(String::from(
            "gradient image and background differ in size",
        )));
    }
    let (flat, _) = lut.lookup(0.0, 0.0);
    let mut image = background.clone();
    let mut saturated_px = 0usize;
    for y in 0..g.height_px {
        for x in 0..g.width_px {
            let (gx, gy) = g.at(x, y);
            let (rgb, saturated) = lut.lookup(gx, gy);
            if saturated {
                saturated_px += 1;
            }
            let bg = background.pixel(x, y);
            let mut out = [0u8; 3];
            for ch in 0..3 {
                let v = f64::from(bg[ch]) + (rgb[ch] - flat[ch]);
                out[ch] = math::round(v.clamp(0.0, 255.0)) as u8;
            }
            image.set_pixel(x, y, out);
        }
    }
    Ok(Shaded {
        image,
        saturated_px,
    })
}

/// Synthetic sensor background: the lookup table's flat response, optionally
/// perturbed by seeded integer noise of the given amplitude to mimic
/// fabrication artefacts of an individual gel.
pub fn synthetic_background(
    lut: &GradientLut,
    grid: &GridSpec,
    noise_amplitude: u8,
    seed: u64,
) -> RgbImage {
    let (flat, _) = lut.lookup(0.0, 0.0);
    let base = [
        math::round(flat[0].clamp(0.0, 255.0)) as u8,
        math::round(flat[1].clamp(0.0, 255.0)) as u8,
        math::round(flat[2].clamp(0.0, 255.0)) as u8,
    ];
    let mut img = RgbImage::filled(grid.width_px, grid.height_px, base);
    if noise_amplitude > 0 {
        let amp = i32::from(noise_amplitude);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut img.data {
            let n: i32 = rng.random_range(-amp..=amp);
            *v = (i32::from(*v) + n).clamp(0, 255) as u8;
        }
    }
    img
}

/// Full render of one contact: depth from grip force, blur cascade,
/// gradients, lookup shading over the background.
#[allow(clippy::too_many_arguments)]
pub fn render_tactile(
    shape: &Shape,
    pose: &Pose2D,
    grid: &GridSpec,
    grip_force: f64,
    pm: &PenetrationModel,
    cascade: &BlurCascade,
    lut: &GradientLut,
    background: &RgbImage,
) -> Result<Shaded, RenderError> {
    let hf = geometry::rasterize(shape, pose, grid)?;
    render_tactile_from_field(&hf, grip_force, pm, cascade, lut, background)
}

/// Same as [`render_tactile`] but starting from an already rasterized field
/// (used to render the mirrored second jaw without re-rasterizing).
pub fn render_tactile_from_field(
    hf: &HeightField,
    grip_force: f64,
    pm: &PenetrationModel,
    cascade: &BlurCascade,
    lut: &GradientLut,
    background: &RgbImage,
) -> Result<Shaded, RenderError> {
    if hf.width_px != background.width_px || hf.height_px != background.height_px {
        return Err(RenderError::DimensionMismatch(String::from(
            "height field and background differ in size",
        )));
    }
    let depth = depth_from_contact(hf, grip_force, pm)?;
    let smoothed = blur(&depth, cascade);
    let grads = gradients(&smoothed, hf.pixel_pitch)?;
    shade(&grads, lut, background)
}
