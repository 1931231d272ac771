//! Image comparison metrics: MSE, PSNR, and SSIM over 8-bit RGB images.
//!
//! Conventions: MSE is taken jointly over all pixels and all three channels
//! (range [0, 65025] for 8-bit data); PSNR is `10·log10(255²/MSE)` with a
//! `+∞` sentinel for identical images; SSIM uses the canonical 11×11
//! Gaussian window (σ = 1.5, K1 = 0.01, K2 = 0.03, L = 255) per channel over
//! all fully-interior window positions, averaged across the three channels.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::render::RgbImage;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("image dimensions differ: {0}")]
    DimensionMismatch(String),
    #[error("images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM")]
    TooSmall,
}

/// Comparison summary. `ssim` is clamped to [0, 1]; `psnr` is `+∞` for
/// identical images (serialized as the string "inf" by the CLI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

fn check_dims(a: &RgbImage, b: &RgbImage) -> Result<(), MetricsError> {
    if a.width_px != b.width_px || a.height_px != b.height_px {
        return Err(MetricsError::DimensionMismatch(alloc::format!(
            "{}x{} vs {}x{}",
            a.width_px,
            a.height_px,
            b.width_px,
            b.height_px
        )));
    }
    Ok(())
}

/// Mean squared error over all pixels and channels, accumulated in exact
/// integer arithmetic and divided once.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let mut acc: u64 = 0;
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let d = i64::from(x) - i64::from(y);
        acc += (d * d) as u64;
    }
    Ok(acc as f64 / a.data.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `+∞` when the images are identical.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricsError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR corresponding to a given MSE.
pub fn psnr_from_mse(mse_value: f64) -> f64 {
    if mse_value <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * math::log10(L * L / mse_value)
    }
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut w: Vec<f64> = (-half..=half)
        .map(|i| math::exp(-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)))
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid-mode separable weighted filtering: horizontal then vertical.
/// Output is (w - win + 1) x (h - win + 1).
fn filter_valid(plane: &[f64], w: usize, h: usize, window: &[f64]) -> Vec<f64> {
    let win = window.len();
    let ow = w - win + 1;
    let oh = h - win + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kw) in window.iter().enumerate() {
                acc += kw * plane[y * w + x + k];
            }
            tmp[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kw) in window.iter().enumerate() {
                acc += kw * tmp[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Structural similarity in [-1, 1] (not clamped here; [`compare`] clamps
/// for reporting). Mean of the three per-channel scores.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let (w, h) = (a.width_px, a.height_px);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmall);
    }
    let window = gaussian_window();
    let c1 = (K1 * L) * (K1 * L);
    let c2 = (K2 * L) * (K2 * L);

    let mut channel_scores = [0.0; 3];
    for ch in 0..3 {
        let pa: Vec<f64> = a.data.iter().skip(ch).step_by(3).map(|&v| f64::from(v)).collect();
        let pb: Vec<f64> = b.data.iter().skip(ch).step_by(3).map(|&v| f64::from(v)).collect();
        let paa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let pbb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();

        let mu_a = filter_valid(&pa, w, h, &window);
        let mu_b = filter_valid(&pb, w, h, &window);
        let e_aa = filter_valid(&paa, w, h, &window);
        let e_bb = filter_valid(&pbb, w, h, &window);
        let e_ab = filter_valid(&pab, w, h, &window);

        let mut acc = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            acc += num / den;
        }
        channel_scores[ch] = acc / mu_a.len() as f64;
    }
    Ok((channel_scores[0] + channel_scores[1] + channel_scores[2]) / 3.0)
}

/// All three metrics at once, with SSIM clamped to [0, 1] for reporting.
pub fn compare(a: &RgbImage, b: &RgbImage) -> Result<MetricReport, MetricsError> {
    let mse_value = mse(a, b)?;
    let ssim_value = ssim(a, b)?;
    Ok(MetricReport {
        mse: mse_value,
        psnr: psnr_from_mse(mse_value),
        ssim: ssim_value.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
        RgbImage {
            width_px: w,
            height_px: h,
            data,
        }
    }

    #[test]
    fn identical_images_hit_metric_fixed_points() {
        let img = random_image(32, 24, 1);
        assert_eq!(mse(&img, &img).unwrap(), 0.0);
        assert_eq!(psnr(&img, &img).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(ssim(&img, &img).unwrap(), 1.0, epsilon = 1e-9);
        let report = compare(&img, &img).unwrap();
        assert_eq!(report.mse, 0.0);
        assert!(report.psnr.is_infinite());
        assert_abs_diff_eq!(report.ssim, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mse_range_endpoint() {
        let black = RgbImage::filled(16, 16, [0, 0, 0]);
        let white = RgbImage::filled(16, 16, [255, 255, 255]);
        assert_eq!(mse(&black, &white).unwrap(), 65025.0);
        assert_eq!(psnr(&black, &white).unwrap(), 0.0);
    }

    #[test]
    fn mse_uniform_difference() {
        let a = RgbImage::filled(8, 8, [100, 100, 100]);
        let b = RgbImage::filled(8, 8, [110, 110, 110]);
        assert_eq!(mse(&a, &b).unwrap(), 100.0);
    }

    #[test]
    fn mse_rejects_dimension_mismatch() {
        let a = RgbImage::filled(8, 8, [0, 0, 0]);
        let b = RgbImage::filled(8, 9, [0, 0, 0]);
        assert!(mse(&a, &b).is_err());
    }

    #[test]
    fn psnr_reproduces_published_pairs() {
        // (MSE, PSNR) pairs as printed for six image comparisons.
        let pairs = [
            (262.95, 23.93),
            (399.47, 22.12),
            (238.76, 24.35),
            (387.21, 22.25),
            (256.81, 24.03),
            (278.60, 23.68),
        ];
        for &(mse_value, expected) in &pairs {
            assert_abs_diff_eq!(psnr_from_mse(mse_value), expected, epsilon = 0.01);
        }
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let black = RgbImage::filled(16, 16, [0, 0, 0]);
        let white = RgbImage::filled(16, 16, [255, 255, 255]);
        // Zero variance everywhere: ((C1)(C2)) / ((65025 + C1)(C2)).
        let c1 = 6.5025;
        let expected = c1 / (65025.0 + c1);
        assert_relative_eq!(ssim(&black, &white).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn ssim_constant_shift_closed_form() {
        let a = RgbImage::filled(16, 16, [100, 100, 100]);
        let b = RgbImage::filled(16, 16, [101, 101, 101]);
        let c1 = 6.5025;
        let expected = (2.0 * 100.0 * 101.0 + c1) / (100.0_f64.powi(2) + 101.0_f64.powi(2) + c1);
        assert_relative_eq!(ssim(&a, &b).unwrap(), expected, max_relative = 1e-9);
        assert_relative_eq!(expected, 0.99995, max_relative = 1e-4);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = RgbImage::filled(10, 16, [0, 0, 0]);
        assert_eq!(ssim(&a, &a).unwrap_err(), MetricsError::TooSmall);
    }

    #[test]
    fn translation_strictly_decreases_ssim() {
        // Smooth non-constant image; shift by 5 px.
        let (w, h) = (48, 48);
        let mut a = RgbImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                let v = (128.0
                    + 90.0 * ((x as f64) * 0.25).sin() * ((y as f64) * 0.2).cos())
                .clamp(0.0, 255.0) as u8;
                a.set_pixel(x, y, [v, v, v]);
            }
        }
        let mut b = RgbImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                b.set_pixel(x, y, a.pixel((x + 5) % w, y));
            }
        }
        let shifted = ssim(&a, &b).unwrap();
        let same = ssim(&a, &a).unwrap();
        assert!(shifted < same, "shifted {shifted} not below {same}");
        assert!(shifted < 0.99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn metrics_are_symmetric(seed1 in 0u64..500, seed2 in 500u64..1000) {
            let a = random_image(16, 16, seed1);
            let b = random_image(16, 16, seed2);
            prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
            let s_ab = ssim(&a, &b).unwrap();
            let s_ba = ssim(&b, &a).unwrap();
            prop_assert!((s_ab - s_ba).abs() < 1e-12);
        }

        #[test]
        fn ssim_bounded_above_by_one(seed1 in 0u64..500, seed2 in 0u64..500) {
            let a = random_image(16, 16, seed1);
            let b = random_image(16, 16, seed2);
            let s = ssim(&a, &b).unwrap();
            prop_assert!(s <= 1.0 + 1e-12);
            if a != b {
                prop_assert!(s < 1.0);
            }
        }

        #[test]
        fn psnr_is_consistent_with_mse(seed1 in 0u64..500, seed2 in 500u64..1000) {
            let a = random_image(12, 12, seed1);
            let b = random_image(12, 12, seed2);
            let m = mse(&a, &b).unwrap();
            let p = psnr(&a, &b).unwrap();
            prop_assert_eq!(p, 10.0 * (65025.0 / m).log10());
        }
    }
}
