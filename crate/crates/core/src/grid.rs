//! Periodic 1-D grid, sampled fields, quadrature and spectral differentiation.
//!
//! Every field is bound to a [`Grid`]. The grid owns the FFT plans, so fields
//! can be differentiated without a separate planner. Units are natural
//! (hbar = 1); the particle mass is carried by the model, not the grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

/// Uniform periodic grid with `n` points on `[0, length)`.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    transforms: Arc<Transforms>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLength(length));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wavenumbers = (0..n)
            .map(|i| {
                let mode = if i < n / 2 {
                    i as f64
                } else {
                    i as f64 - n as f64
                };
                2.0 * PI * mode / length
            })
            .collect();
        Ok(Self {
            n,
            length,
            dx: length / n as f64,
            transforms: Arc::new(Transforms {
                forward,
                inverse,
                wavenumbers,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of grid point `i`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Largest resolved wavenumber magnitude, `pi / dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Wavenumbers in discrete-Fourier ordering.
    pub fn wavenumbers(&self) -> RealField {
        RealField {
            grid: self.clone(),
            values: self.transforms.wavenumbers.clone(),
        }
    }

    pub(crate) fn k(&self) -> &[f64] {
        &self.transforms.wavenumbers
    }

    /// Signed distance `x - center` folded into `[-L/2, L/2)`.
    pub fn minimum_image(&self, x: f64, center: f64) -> f64 {
        let d = x - center;
        d - self.length * (d / self.length + 0.5).floor()
    }

    /// In-place unnormalized forward DFT.
    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transforms.forward.process(data);
    }

    /// In-place inverse DFT including the `1/n` normalization.
    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transforms.inverse.process(data);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Applies the Fourier multiplier `symbol(k)` to `data`.
    pub(crate) fn apply_multiplier(
        &self,
        data: &[Complex64],
        symbol: impl Fn(f64) -> Complex64,
    ) -> Vec<Complex64> {
        let mut buf = data.to_vec();
        self.forward_in_place(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.k()) {
            *v *= symbol(k);
        }
        self.inverse_in_place(&mut buf);
        buf
    }

    /// Spectral derivative symbol `(ik)^order`. The Nyquist mode of odd
    /// derivatives is zeroed so that real input stays real.
    pub(crate) fn derivative_symbol(&self, order: Derivative) -> Vec<Complex64> {
        let nyquist = self.n / 2;
        self.k()
            .iter()
            .enumerate()
            .map(|(i, &k)| match order {
                Derivative::First if i == nyquist => Complex64::new(0.0, 0.0),
                Derivative::First => Complex64::new(0.0, k),
                Derivative::Second => Complex64::new(-k * k, 0.0),
            })
            .collect()
    }

    pub(crate) fn differentiate(&self, data: &[Complex64], order: Derivative) -> Vec<Complex64> {
        let symbol = self.derivative_symbol(order);
        let mut buf = data.to_vec();
        self.forward_in_place(&mut buf);
        for (v, s) in buf.iter_mut().zip(&symbol) {
            *v *= s;
        }
        self.inverse_in_place(&mut buf);
        buf
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dx", &self.dx)
            .finish()
    }
}

/// Order of a spectral derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    First,
    Second,
}

impl TryFrom<u8> for Derivative {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Derivative::First),
            2 => Ok(Derivative::Second),
            other => Err(Error::InvalidParameter(format!(
                "derivative order must be 1 or 2, got {other}"
            ))),
        }
    }
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            found: len,
        });
    }
    Ok(())
}

/// Complex samples of a wavefunction on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid, values.len())?;
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("complex field"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, (0..grid.n).map(|i| f(grid.x(i))).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); grid.n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `|psi|^2` sampled on the grid.
    pub fn density(&self) -> RealField {
        RealField::from_raw(
            &self.grid,
            self.values.iter().map(|v| v.norm_sqr()).collect(),
        )
    }

    /// `integral |psi|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.grid.dx * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `integral conj(self) * other dx`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.dx)
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        Self::from_raw(&self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    /// Spectral derivative: multiply each Fourier mode by `(ik)^order`.
    pub fn derivative(&self, order: Derivative) -> ComplexField {
        Self::from_raw(&self.grid, self.grid.differentiate(&self.values, order))
    }
}

/// Real samples (densities, currents, potentials) on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, values.len())?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.n).map(|i| f(grid.x(i))).collect())
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.n])
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Periodic trapezoid rule, `dx * sum(values)`.
    pub fn integrate(&self) -> f64 {
        self.grid.dx * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Spectral first derivative of a real field.
    pub fn derivative(&self) -> RealField {
        let data: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let d = self.grid.differentiate(&data, Derivative::First);
        Self::from_raw(&self.grid, d.into_iter().map(|v| v.re).collect())
    }
}
