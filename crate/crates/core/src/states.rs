//! Initial wavefunctions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// Edge density allowed relative to the peak before a packet counts as
/// touching the periodic seam.
pub const CLEARANCE_RATIO: f64 = 1e-10;

/// Parameters of a (possibly chirped) Gaussian packet.
///
/// `psi(x) ~ exp(-(x-x0)^2 / (4 sigma^2)) * exp(i [k0 u + chirp u^2 + cubic u^3])`
/// with `u = x - x0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub chirp: f64,
    pub cubic: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, sigma: f64) -> Self {
        Self {
            x0,
            sigma,
            k0: 0.0,
            chirp: 0.0,
            cubic: 0.0,
        }
    }

    pub fn with_k0(mut self, k0: f64) -> Self {
        self.k0 = k0;
        self
    }

    pub fn with_chirp(mut self, chirp: f64) -> Self {
        self.chirp = chirp;
        self
    }

    pub fn with_cubic(mut self, cubic: f64) -> Self {
        self.cubic = cubic;
        self
    }

    pub fn build(&self, grid: &Grid) -> Result<ComplexField> {
        gaussian_packet(grid, self)
    }
}

pub fn gaussian_packet(grid: &Grid, p: &GaussianPacket) -> Result<ComplexField> {
    if !(p.sigma.is_finite() && p.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {}",
            p.sigma
        )));
    }
    if !(p.x0 > 0.0 && p.x0 < grid.length()) {
        return Err(Error::InvalidParameter(format!(
            "packet center {} lies outside (0, {})",
            p.x0,
            grid.length()
        )));
    }
    if ![p.k0, p.chirp, p.cubic].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(
            "packet phase parameters must be finite".into(),
        ));
    }
    let psi = ComplexField::from_fn(grid, |x| {
        let u = x - p.x0;
        let amplitude = (-u * u / (4.0 * p.sigma * p.sigma)).exp();
        let phase = p.k0 * u + p.chirp * u * u + p.cubic * u * u * u;
        Complex64::from_polar(amplitude, phase)
    })?;
    let psi = normalize(&psi)?;
    check_clearance(&psi)?;
    Ok(psi)
}

/// `exp(i k x) / sqrt(L)` with `k = 2 pi mode / L`.
pub fn plane_wave(grid: &Grid, mode: i64) -> Result<ComplexField> {
    if mode.unsigned_abs() >= (grid.n() / 2) as u64 {
        return Err(Error::AliasedMode { mode, n: grid.n() });
    }
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
    let amp = 1.0 / grid.length().sqrt();
    ComplexField::from_fn(grid, |x| Complex64::from_polar(amp, k * x))
}

/// Rescales `psi` to unit norm.
pub fn normalize(psi: &ComplexField) -> Result<ComplexField> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(psi.scale(Complex64::new(1.0 / norm.sqrt(), 0.0)))
}

/// Fails if the density on either side of the periodic seam exceeds
/// [`CLEARANCE_RATIO`] times the peak density.
pub fn check_clearance(psi: &ComplexField) -> Result<()> {
    let values = psi.values();
    let peak = values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let edge = values[0]
        .norm_sqr()
        .max(values[values.len() - 1].norm_sqr());
    let limit = CLEARANCE_RATIO * peak;
    if edge > limit {
        return Err(Error::BoundaryClearance { edge, limit });
    }
    Ok(())
}
