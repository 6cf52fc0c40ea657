//! Galilean boosts of wavefunctions and the covariance test.
//!
//! The boost to a frame moving with velocity `-dv` maps a solution `psi` to
//!
//! ```text
//! psi'(x, t) = exp(i [-m dv x - m dv^2 t / 2]) psi(x + dv t, t)
//! ```
//!
//! which is again a solution of the free equation. The shift is applied as a
//! Fourier phase, so it is exact for band-limited states and unitary.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::integrators::{evolve, StepperConfig};
use crate::models::Model;
use crate::potentials::Potential;
use crate::states::check_clearance;

/// `psi(x + s)` by multiplying Fourier mode `k` with `exp(i k s)`.
pub fn spectral_shift(psi: &ComplexField, shift: f64) -> ComplexField {
    let grid = psi.grid();
    let values = grid.apply_multiplier(psi.values(), |k| Complex64::from_polar(1.0, k * shift));
    ComplexField::from_raw(grid, values)
}

/// Galilean boost of the state `psi` taken at time `t`.
pub fn boost(psi: &ComplexField, mass: f64, dv: f64, t: f64) -> Result<ComplexField> {
    let grid = psi.grid();
    let shift = dv * t;
    if shift.abs() >= grid.length() / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "boost displacement |dv t| = {} must stay below L/4 = {}",
            shift.abs(),
            grid.length() / 4.0
        )));
    }
    let shifted = if shift == 0.0 {
        psi.clone()
    } else {
        spectral_shift(psi, shift)
    };
    let time_phase = -0.5 * mass * dv * dv * t;
    let values = shifted
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -mass * dv * grid.x(i) + time_phase))
        .collect();
    let out = ComplexField::from_raw(grid, values);
    check_clearance(&out)?;
    Ok(out)
}

/// Phase-aligned relative distance `min_a |A - e^{ia} B| / |A|`.
pub fn aligned_distance(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    let overlap = a.inner(b)?;
    let phase = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let dist: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y * phase).norm_sqr())
        .sum::<f64>()
        * a.grid().dx();
    Ok((dist / a.norm()).sqrt())
}

/// Distance between "evolve for `horizon`, then boost" and "boost, then
/// evolve for `horizon`", normalized by the state norm after optimal global
/// phase alignment. The two propagations run on separate threads.
pub fn covariance_error(
    model: &Model,
    potential: &Potential,
    initial: &ComplexField,
    dv: f64,
    horizon: f64,
    stepper: &StepperConfig,
) -> Result<f64> {
    if !potential.is_zero() {
        return Err(Error::BoostWithPotential);
    }
    let config = StepperConfig {
        t_final: horizon,
        ..*stepper
    };
    let boosted_initial = boost(initial, model.mass, dv, 0.0)?;
    let (evolved, boosted_evolved) = std::thread::scope(|s| {
        let a = s.spawn(|| evolve(model, potential, initial, &config));
        let b = s.spawn(|| evolve(model, potential, &boosted_initial, &config));
        (
            a.join().expect("propagation thread panicked"),
            b.join().expect("propagation thread panicked"),
        )
    });
    let evolve_then_boost = boost(&evolved?, model.mass, dv, horizon)?;
    aligned_distance(&evolve_then_boost, &boosted_evolved?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::models::phase_velocity_field;
    use crate::observables::mean_velocity;
    use crate::states::{normalize, GaussianPacket};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1024, 40.0).unwrap()
    }

    /// Closed-form free Gaussian at time `t`.
    fn free_gaussian(g: &Grid, x0: f64, sigma: f64, k0: f64, m: f64, t: f64) -> ComplexField {
        let s = Complex64::new(sigma * sigma, t / (2.0 * m));
        ComplexField::from_fn(g, |x| {
            let u = x - x0 - k0 * t / m;
            let amp = (2.0 * PI * sigma * sigma).powf(-0.25) * (sigma * sigma / s).sqrt();
            amp * (-u * u / (4.0 * s)
                + Complex64::new(0.0, k0 * (x - x0) - k0 * k0 * t / (2.0 * m)))
            .exp()
        })
        .unwrap()
    }

    #[test]
    fn zero_boost_is_identity() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_cubic(0.05)
            .build(&g)
            .unwrap();
        assert_eq!(boost(&psi, 1.0, 0.0, 0.7).unwrap(), psi);
    }

    #[test]
    fn boost_shifts_wavenumber() {
        let g = grid();
        let m = 2.0;
        let dk = 2.0 * PI * 3.0 / g.length();
        let dv = dk / m;
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_k0(1.0)
            .build(&g)
            .unwrap();
        let boosted = boost(&psi, m, dv, 0.0).unwrap();
        let expected = GaussianPacket::new(20.0, 1.0)
            .with_k0(1.0 - dk)
            .build(&g)
            .unwrap();
        // Differs only by the global phase exp(-i m dv x0).
        assert!(aligned_distance(&boosted, &expected).unwrap() <= 1e-12);
        assert!((mean_velocity(&boosted, m) - (mean_velocity(&psi, m) - dv)).abs() <= 1e-8);
    }

    #[test]
    fn boosted_free_solution_is_a_free_solution() {
        // Pins the sign of the m dv^2 t / 2 phase: no phase alignment here.
        let g = grid();
        let (x0, sigma, k0, m, dv) = (20.0, 1.0, 0.4, 1.3, 0.5);
        for t in [0.0, 0.7, 1.9] {
            let boosted = boost(&free_gaussian(&g, x0, sigma, k0, m, t), m, dv, t).unwrap();
            let target = free_gaussian(&g, x0, sigma, k0 - m * dv, m, t)
                .scale(Complex64::from_polar(1.0, -m * dv * x0));
            for (a, b) in boosted.values().iter().zip(target.values()) {
                assert!((a - b).norm() <= 1e-12, "t = {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn boost_inverse_and_norm() {
        let g = grid();
        let psi = GaussianPacket::new(19.0, 1.0)
            .with_k0(0.3)
            .with_cubic(0.05)
            .build(&g)
            .unwrap();
        let (m, dv, t) = (1.0, 0.5, 1.7);
        let there = boost(&psi, m, dv, t).unwrap();
        assert!((there.norm() - 1.0).abs() <= 1e-13);
        let back = boost(&there, m, -dv, t).unwrap();
        let overlap = psi.inner(&back).unwrap().norm();
        assert!((overlap - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn velocity_field_shifts_by_boost() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_chirp(0.1)
            .with_cubic(0.05)
            .build(&g)
            .unwrap();
        let (m, dv) = (1.0, 0.5);
        let before = phase_velocity_field(&psi, m, 1e-12).field;
        let after = phase_velocity_field(&boost(&psi, m, dv, 0.0).unwrap(), m, 1e-12).field;
        let rho = psi.density();
        let peak = rho.max();
        for i in 0..g.n() {
            // The regularizer biases v by a relative eps max(rho) / rho.
            if rho.values()[i] > 1e-3 * peak {
                let diff = after.values()[i] - before.values()[i];
                assert!((diff + dv).abs() <= 1e-8, "i = {i}: {diff}");
            }
        }
    }

    #[test]
    fn boost_rejects_large_displacement() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        assert!(boost(&psi, 1.0, 5.0, 3.0).is_err());
    }

    #[test]
    fn covariance_rejects_potentials() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        let err = covariance_error(
            &Model::linear(1.0),
            &Potential::Uniform { f0: 0.1 },
            &psi,
            0.5,
            0.1,
            &StepperConfig::rk4(5e-4, 0.1, 10),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BoostWithPotential));
    }

    #[test]
    fn aligned_distance_ignores_global_phase() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_k0(1.0)
            .build(&g)
            .unwrap();
        let rotated = psi.scale(Complex64::from_polar(1.0, 2.1));
        assert!(aligned_distance(&psi, &rotated).unwrap() <= 1e-14);
        let other = normalize(&GaussianPacket::new(21.0, 1.0).build(&g).unwrap()).unwrap();
        assert!(aligned_distance(&psi, &other).unwrap() > 0.1);
    }
}
