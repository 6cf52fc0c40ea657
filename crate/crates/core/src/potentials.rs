//! External potentials `U(x)` and the density-coupled form `U(rho, x)`.

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// `1/2 m omega^2 d^2` with `d` the minimum-image distance to `center`.
    Harmonic {
        omega: f64,
        center: f64,
    },
    /// `-f0 x`, a constant force `f0`.
    Uniform {
        f0: f64,
    },
    /// `height * exp(-d^2 / (2 width^2))`.
    GaussianBarrier {
        height: f64,
        width: f64,
        center: f64,
    },
    /// `U_base(x) (1 + eta rho(x))`.
    DensityCoupled {
        base: Box<Potential>,
        eta: f64,
    },
}

/// Which spatial gradient of a density-coupled potential to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Total derivative `d/dx [U(rho(x), x)]`, including the `rho'` term.
    Full,
    /// `dU/dx` at fixed `rho`.
    Partial,
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Potential::Zero => Ok(()),
            Potential::Harmonic { omega, center } => {
                if !(omega.is_finite() && *omega > 0.0) {
                    return bad(format!("harmonic omega must be positive, got {omega}"));
                }
                if !center.is_finite() {
                    return bad("harmonic center must be finite".into());
                }
                Ok(())
            }
            Potential::Uniform { f0 } => {
                if !f0.is_finite() {
                    return bad("uniform force f0 must be finite".into());
                }
                Ok(())
            }
            Potential::GaussianBarrier {
                height,
                width,
                center,
            } => {
                if !(width.is_finite() && *width > 0.0) {
                    return bad(format!("barrier width must be positive, got {width}"));
                }
                if !(height.is_finite() && center.is_finite()) {
                    return bad("barrier parameters must be finite".into());
                }
                Ok(())
            }
            Potential::DensityCoupled { base, eta } => {
                if !eta.is_finite() {
                    return bad("density coupling eta must be finite".into());
                }
                if matches!(**base, Potential::DensityCoupled { .. }) {
                    return bad("density-coupled potentials cannot be nested".into());
                }
                base.validate()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    pub fn is_density_coupled(&self) -> bool {
        matches!(self, Potential::DensityCoupled { .. })
    }

    fn value_at(&self, grid: &Grid, mass: f64, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic { omega, center } => {
                let d = grid.minimum_image(x, *center);
                0.5 * mass * omega * omega * d * d
            }
            Potential::Uniform { f0 } => -f0 * x,
            Potential::GaussianBarrier {
                height,
                width,
                center,
            } => {
                let d = grid.minimum_image(x, *center);
                height * (-d * d / (2.0 * width * width)).exp()
            }
            Potential::DensityCoupled { base, .. } => base.value_at(grid, mass, x),
        }
    }

    fn slope_at(&self, grid: &Grid, mass: f64, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic { omega, center } => {
                mass * omega * omega * grid.minimum_image(x, *center)
            }
            Potential::Uniform { f0 } => -f0,
            Potential::GaussianBarrier {
                height,
                width,
                center,
            } => {
                let d = grid.minimum_image(x, *center);
                let w2 = width * width;
                -height * d / w2 * (-d * d / (2.0 * w2)).exp()
            }
            Potential::DensityCoupled { base, .. } => base.slope_at(grid, mass, x),
        }
    }

    /// Samples of `U` on the grid. `rho` is only read by `DensityCoupled`.
    pub fn evaluate(&self, grid: &Grid, mass: f64, rho: &RealField) -> RealField {
        let base: Vec<f64> = (0..grid.n())
            .map(|i| self.value_at(grid, mass, grid.x(i)))
            .collect();
        match self {
            Potential::DensityCoupled { eta, .. } => RealField::from_raw(
                grid,
                base.iter()
                    .zip(rho.values())
                    .map(|(u, r)| u * (1.0 + eta * r))
                    .collect(),
            ),
            _ => RealField::from_raw(grid, base),
        }
    }

    /// Analytic spatial gradient of `U`. For `DensityCoupled` the `mode`
    /// selects between the total and the fixed-density derivative; the
    /// total derivative takes `rho'` spectrally.
    pub fn gradient(
        &self,
        grid: &Grid,
        mass: f64,
        rho: &RealField,
        mode: GradientMode,
    ) -> RealField {
        let slope: Vec<f64> = (0..grid.n())
            .map(|i| self.slope_at(grid, mass, grid.x(i)))
            .collect();
        let Potential::DensityCoupled { eta, .. } = self else {
            return RealField::from_raw(grid, slope);
        };
        let partial = slope
            .iter()
            .zip(rho.values())
            .map(|(s, r)| s * (1.0 + eta * r));
        match mode {
            GradientMode::Partial => RealField::from_raw(grid, partial.collect()),
            GradientMode::Full => {
                let drho = rho.derivative();
                let values = partial
                    .zip(drho.values())
                    .enumerate()
                    .map(|(i, (p, dr))| p + self.value_at(grid, mass, grid.x(i)) * eta * dr)
                    .collect();
                RealField::from_raw(grid, values)
            }
        }
    }

    /// Potential-energy density whose variation with respect to `rho` gives
    /// `U(rho, x)`: `U rho` for plain potentials and
    /// `U_base (rho + eta rho^2 / 2)` for the density-coupled one.
    pub fn energy_density(&self, grid: &Grid, mass: f64, rho: &RealField) -> RealField {
        let eta = match self {
            Potential::DensityCoupled { eta, .. } => *eta,
            _ => 0.0,
        };
        RealField::from_raw(
            grid,
            rho.values()
                .iter()
                .enumerate()
                .map(|(i, r)| self.value_at(grid, mass, grid.x(i)) * (r + 0.5 * eta * r * r))
                .collect(),
        )
    }

    /// Bound on `max |U|` over the grid for densities up to `rho_max`.
    pub fn max_abs(&self, grid: &Grid, mass: f64, rho_max: f64) -> f64 {
        let base = (0..grid.n())
            .map(|i| self.value_at(grid, mass, grid.x(i)).abs())
            .fold(0.0, f64::max);
        match self {
            Potential::DensityCoupled { eta, .. } => base * (1.0 + eta.abs() * rho_max),
            _ => base,
        }
    }
}
