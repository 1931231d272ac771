//! Friction-correction fitting.
//!
//! A Coulomb simulator predicts max pull forces proportional to the grip
//! force, but measured friction follows an affine law `F_F = μ'·F_G + F_off`.
//! The reconciliation is a grip-force-dependent correction of the simulated
//! friction coefficient,
//!
//! ```text
//! μ_corr / μ_sim = a + b / F_G,
//! ```
//!
//! fitted from the ratio between the experiment's linear fit and the
//! simulated max pull forces. Covariances of the fits propagate into a
//! relative uncertainty of the corrected coefficient, which is what decides
//! how few experimental points suffice for calibration.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("singular fit: {0}")]
    Singular(String),
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
    #[error("corrected friction coefficient is non-positive at F_G = {f_g} N")]
    NonPositiveCorrection { f_g: f64 },
    #[error("internal error: propagated variance is negative")]
    NegativeVariance,
}

/// Origin of a max-pull-force data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PointSource {
    Experiment,
    Simulation,
}

/// A (grip force, max pull force) observation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaxPullPoint {
    pub f_g: f64,
    pub f_pull_max: f64,
    pub source: PointSource,
}

/// Ordinary least squares fit `y = slope · x + intercept`.
///
/// `covariance` is for `(slope, intercept)` in that order, scaled by the
/// unbiased residual variance (n − 2 degrees of freedom; the zero matrix for
/// n = 2).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub covariance: [[f64; 2]; 2],
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Fit of the correction ratio `r(F_G) = a + b / F_G`.
///
/// `covariance` is for `(a, b)` in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioFit {
    pub a: f64,
    pub b: f64,
    pub covariance: [[f64; 2]; 2],
}

impl RatioFit {
    /// Correction-free fit (identity ratio, zero covariance).
    pub fn identity() -> Self {
        RatioFit {
            a: 1.0,
            b: 0.0,
            covariance: [[0.0; 2]; 2],
        }
    }

    pub fn ratio(&self, f_g: f64) -> f64 {
        self.a + self.b / f_g
    }
}

/// Two-parameter OLS on basis `{1, u}`: `y = p0 + p1 · u`.
/// Covariance order is `(p0, p1)`.
struct Ols2 {
    p0: f64,
    p1: f64,
    cov: [[f64; 2]; 2],
}

fn ols2(points: &[(f64, f64)]) -> Result<Ols2, FitError> {
    let n = points.len();
    if n < 2 {
        return Err(FitError::InvalidInput(String::from(
            "need at least two points",
        )));
    }
    for &(u, y) in points {
        if !u.is_finite() || !y.is_finite() {
            return Err(FitError::InvalidInput(String::from(
                "points must be finite",
            )));
        }
    }
    let nf = n as f64;
    let su: f64 = points.iter().map(|p| p.0).sum();
    let suu: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let suy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let det = nf * suu - su * su;
    // Scale-aware singularity guard: det of [[n, su], [su, suu]].
    if det.abs() <= 1.0e-12 * nf * suu.max(1.0e-300) {
        return Err(FitError::Singular(String::from(
            "design matrix is singular (all abscissae equal)",
        )));
    }
    let p1 = (nf * suy - su * sy) / det;
    let p0 = (sy * suu - su * suy) / det;

    let mut cov = [[0.0; 2]; 2];
    if n > 2 {
        let ssr: f64 = points
            .iter()
            .map(|&(u, y)| {
                let r = y - (p0 + p1 * u);
                r * r
            })
            .sum();
        let sigma2 = ssr / (nf - 2.0);
        // (X^T X)^{-1} = 1/det * [[suu, -su], [-su, n]] in (p0, p1) order.
        cov[0][0] = sigma2 * suu / det;
        cov[0][1] = -sigma2 * su / det;
        cov[1][0] = cov[0][1];
        cov[1][1] = sigma2 * nf / det;
    }
    Ok(Ols2 { p0, p1, cov })
}

/// Least-squares line through `(x, y)` points.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit, FitError> {
    let fit = ols2(points)?;
    Ok(LinearFit {
        slope: fit.p1,
        intercept: fit.p0,
        covariance: [
            [fit.cov[1][1], fit.cov[0][1]],
            [fit.cov[0][1], fit.cov[0][0]],
        ],
    })
}

/// Least-squares fit of `r = a + b / F_G` to `(F_G, r)` points.
pub fn fit_ratio(points: &[(f64, f64)]) -> Result<RatioFit, FitError> {
    for &(f_g, _) in points {
        if f_g <= 0.0 {
            return Err(FitError::InvalidInput(String::from(
                "grip forces must be positive",
            )));
        }
    }
    let transformed: Vec<(f64, f64)> = points.iter().map(|&(f_g, r)| (1.0 / f_g, r)).collect();
    let fit = ols2(&transformed)?;
    Ok(RatioFit {
        a: fit.p0,
        b: fit.p1,
        covariance: fit.cov,
    })
}

/// Grip-force-dependent corrected friction coefficient
/// `μ_corr = μ_sim · (a + b / F_G)`.
pub fn corrected_mu(mu_sim: f64, fit: &RatioFit, f_g: f64) -> Result<f64, FitError> {
    if !f_g.is_finite() || f_g <= 0.0 {
        return Err(FitError::InvalidInput(String::from(
            "grip force must be positive",
        )));
    }
    let mu = mu_sim * fit.ratio(f_g);
    if mu <= 0.0 {
        return Err(FitError::NonPositiveCorrection { f_g });
    }
    Ok(mu)
}

/// Relative uncertainty of the corrected coefficient at one grip force.
///
/// `Var(r) = Var(a) + Var(b)/F_G² + 2·Cov(a,b)/F_G`; the result is
/// `sqrt(Var(r)) / r`. Since `μ_sim` is a constant factor, this equals the
/// relative uncertainty of `μ_corr` itself.
pub fn relative_uncertainty(fit: &RatioFit, f_g: f64) -> Result<f64, FitError> {
    let r = fit.ratio(f_g);
    if !f_g.is_finite() || f_g <= 0.0 || r <= 0.0 {
        return Err(FitError::InvalidInput(String::from(
            "grip force and fitted ratio must be positive",
        )));
    }
    let var = fit.covariance[0][0]
        + fit.covariance[1][1] / (f_g * f_g)
        + 2.0 * fit.covariance[0][1] / f_g;
    if var < 0.0 {
        // PSD covariance cannot produce this beyond rounding dust.
        let scale = fit.covariance[0][0].abs() + fit.covariance[1][1].abs() + 1.0e-300;
        if var < -1.0e-9 * scale {
            return Err(FitError::NegativeVariance);
        }
        return Ok(0.0);
    }
    Ok(math::sqrt(var) / r)
}

/// Predicts corrected simulated max pull forces at arbitrary grip force.
///
/// The Coulomb simulator's labels are summarized by their through-origin
/// slope, and the correction ratio rescales them:
/// `F̂(F_G) = (a + b/F_G) · slope_sim · F_G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedPredictor {
    pub fit: RatioFit,
    pub sim_slope: f64,
}

impl CorrectedPredictor {
    pub fn predict(&self, f_g: f64) -> f64 {
        self.fit.ratio(f_g) * self.sim_slope * f_g
    }
}

/// Outcome of the end-to-end friction calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub mu_sim: f64,
    pub exp_fit: LinearFit,
    pub ratio_fit: RatioFit,
    pub predictor: CorrectedPredictor,
}

/// End-to-end calibration: fit a line to the experimental `(F_G, F_pull)`
/// points, form the ratio of that line to the simulated value at each
/// simulated grip force, fit `a + b/F_G`, and return the fit plus a
/// predictor of corrected simulated labels.
pub fn calibration_pipeline(
    exp_points: &[(f64, f64)],
    sim_points: &[(f64, f64)],
    mu_sim: f64,
) -> Result<CalibrationResult, FitError> {
    if sim_points.len() < 2 {
        return Err(FitError::InvalidInput(String::from(
            "need at least two simulated points",
        )));
    }
    let exp_fit = fit_linear(exp_points)?;
    let mut ratios = Vec::with_capacity(sim_points.len());
    for &(f_g, f_sim) in sim_points {
        if f_sim <= 0.0 {
            return Err(FitError::InvalidInput(String::from(
                "simulated max pull forces must be positive",
            )));
        }
        ratios.push((f_g, exp_fit.eval(f_g) / f_sim));
    }
    let ratio_fit = fit_ratio(&ratios)?;
    let num: f64 = sim_points.iter().map(|&(f, l)| f * l).sum();
    let den: f64 = sim_points.iter().map(|&(f, _)| f * f).sum();
    let sim_slope = num / den;
    Ok(CalibrationResult {
        mu_sim,
        exp_fit,
        ratio_fit,
        predictor: CorrectedPredictor {
            fit: ratio_fit,
            sim_slope,
        },
    })
}
