//! Central finite-difference verification of analytic gradients.
//!
//! Relative error per coordinate is `|a − n| / max(|a|, |n|, floor)`. The
//! floor keeps coordinates whose true gradient is (close to) zero from
//! turning round-off noise into huge ratios.

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    pub denominator_floor: f64,
}

impl GradCheckConfig {
    pub fn new(tolerance: f64) -> Self {
        GradCheckConfig {
            step: 1e-4,
            tolerance,
            denominator_floor: 1e-6,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.denominator_floor = floor;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// Coordinate with the largest relative error.
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `gradient(point)` against central differences of `f` around
/// `point`. `f` may return a wider scalar than the point so that an f32
/// function can be reduced in f64.
pub fn grad_check<T, R, F, G>(f: F, gradient: G, point: &Tensor<T>, cfg: GradCheckConfig) -> Result<GradCheckReport>
where
    T: Scalar,
    R: Scalar,
    F: Fn(&Tensor<T>) -> Result<R>,
    G: Fn(&Tensor<T>) -> Result<Tensor<T>>,
{
    let analytic = gradient(point)?;
    if analytic.shape() != point.shape() {
        return Err(Error::dim("grad_check", analytic.shape(), point.shape()));
    }
    if !analytic.is_finite() {
        return Err(Error::Numerical {
            term: "grad_check",
            detail: "analytic gradient contains non-finite entries".into(),
        });
    }
    let h = T::of(cfg.step);
    let mut probe = point.clone();
    let mut numeric = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let orig = point.data()[i];
        let (hi, lo) = (orig + h, orig - h);
        probe.data_mut()[i] = hi;
        let up = f(&probe)?;
        probe.data_mut()[i] = lo;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numerical {
                term: "grad_check",
                detail: format!("function is non-finite when perturbing coordinate {i}"),
            });
        }
        // Divide by the step actually taken: `orig ± h` rounds in f32.
        numeric.push((up.as_f64() - down.as_f64()) / (hi.as_f64() - lo.as_f64()));
    }
    let analytic: Vec<f64> = analytic.data().iter().map(|v| v.as_f64()).collect();
    let mut worst = (0, 0.0f64);
    let mut max_abs = 0.0f64;
    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = relative_error(a, n, cfg.denominator_floor);
        if rel > worst.1 {
            worst = (i, rel);
        }
        max_abs = max_abs.max((a - n).abs());
    }
    Ok(GradCheckReport {
        max_relative_error: worst.1,
        max_absolute_error: max_abs,
        worst_index: worst.0,
        passed: worst.1 < cfg.tolerance,
        analytic,
        numeric,
    })
}
