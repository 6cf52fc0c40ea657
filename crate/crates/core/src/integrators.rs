//! Fixed-step time propagation.
//!
//! RK4 handles every model. Strang split-step handles the families whose
//! nonlinearity is a pure density multiplier and serves as an independent
//! check of the RK4 results.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::models::{local_potential, rhs, Model};
use crate::observables::{record, TimeSeries};
use crate::potentials::Potential;
use crate::scenario::Scenario;

/// `dt * |lambda_max|` allowed for RK4; its imaginary-axis stability reach
/// is `2 sqrt(2) ~ 2.83`.
pub const RK4_STABILITY_REACH: f64 = 2.8;

/// Amplitude growth (relative to the initial maximum) treated as a blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    SplitStep,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rk4 => "rk4",
            Scheme::SplitStep => "split-step",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
}

/// Step count and effective time step actually integrated.
///
/// The step count is rounded up to a whole number of sampling intervals so
/// that `t_final` is always a sample; the effective step never exceeds the
/// requested one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    pub dt: f64,
    pub sample_every: usize,
}

impl Schedule {
    pub fn samples(&self) -> usize {
        self.steps / self.sample_every + 1
    }

    /// Time between consecutive samples.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_every as f64
    }
}

impl StepperConfig {
    pub fn rk4(dt: f64, t_final: f64, sample_every: usize) -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt,
            t_final,
            sample_every,
        }
    }

    pub fn split_step(dt: f64, t_final: f64, sample_every: usize) -> Self {
        Self {
            scheme: Scheme::SplitStep,
            ..Self::rk4(dt, t_final, sample_every)
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Schedule {
        let block = self.dt * self.sample_every as f64;
        let blocks = (self.t_final / block * (1.0 - 1e-12)).ceil() as usize;
        let steps = blocks * self.sample_every;
        let dt = if steps == 0 {
            self.dt
        } else {
            self.t_final / steps as f64
        };
        Schedule {
            steps,
            dt,
            sample_every: self.sample_every,
        }
    }
}

/// Largest RK4 step for which the spectrum of the linearized operator stays
/// inside the stability region: `2.8 / (k_max^2 / 2m + max|U|)`.
pub fn stability_limit(model: &Model, potential: &Potential, initial: &ComplexField) -> f64 {
    let grid = initial.grid();
    let rho_max = initial.density().max();
    let kinetic = grid.k_max().powi(2) / (2.0 * model.mass);
    let u = potential.max_abs(grid, model.mass, rho_max);
    RK4_STABILITY_REACH / (kinetic + u)
}

pub fn check_stability(
    model: &Model,
    potential: &Potential,
    initial: &ComplexField,
    dt: f64,
) -> Result<()> {
    let limit = stability_limit(model, potential, initial);
    if dt > limit {
        return Err(Error::StabilityGuard { dt, limit });
    }
    Ok(())
}

fn axpy(base: &ComplexField, slope: &ComplexField, h: f64) -> ComplexField {
    ComplexField::from_raw(
        base.grid(),
        base.values()
            .iter()
            .zip(slope.values())
            .map(|(b, s)| b + s * h)
            .collect(),
    )
}

/// One classical fourth-order Runge-Kutta step over [`rhs`].
pub fn step_rk4(
    model: &Model,
    psi: &ComplexField,
    potential: &Potential,
    t: f64,
    dt: f64,
) -> Result<ComplexField> {
    let k1 = rhs(model, psi, potential, t)?;
    let k2 = rhs(model, &axpy(psi, &k1, 0.5 * dt), potential, t + 0.5 * dt)?;
    let k3 = rhs(model, &axpy(psi, &k2, 0.5 * dt), potential, t + 0.5 * dt)?;
    let k4 = rhs(model, &axpy(psi, &k3, dt), potential, t + dt)?;
    let w = dt / 6.0;
    let values = psi
        .values()
        .iter()
        .zip(k1.values())
        .zip(k2.values())
        .zip(k3.values())
        .zip(k4.values())
        .map(|((((p, a), b), c), d)| p + (a + b * 2.0 + c * 2.0 + d) * w)
        .collect();
    Ok(ComplexField::from_raw(psi.grid(), values))
}

/// Strang splitting: half potential kick, full kinetic drift in Fourier
/// space, half potential kick. Every factor is a pure phase.
pub struct SplitStepper {
    model: Model,
    potential: Potential,
    dt: f64,
    kinetic: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(model: &Model, potential: &Potential, grid: &Grid, dt: f64) -> Result<Self> {
        if model.is_doebner_goldin() {
            return Err(Error::SplitStepUnsupported);
        }
        let kinetic = grid
            .k()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -k * k / (2.0 * model.mass) * dt))
            .collect();
        Ok(Self {
            model: model.clone(),
            potential: potential.clone(),
            dt,
            kinetic,
        })
    }

    fn kick(&self, values: &mut [Complex64], grid: &Grid) {
        let rho = ComplexField::from_raw(grid, values.to_vec()).density();
        let v = local_potential(&self.model, &self.potential, &rho);
        for (p, u) in values.iter_mut().zip(v.values()) {
            *p *= Complex64::from_polar(1.0, -u * 0.5 * self.dt);
        }
    }

    pub fn step(&self, psi: &ComplexField) -> ComplexField {
        let grid = psi.grid();
        let mut values = psi.values().to_vec();
        self.kick(&mut values, grid);
        grid.forward_in_place(&mut values);
        for (v, phase) in values.iter_mut().zip(&self.kinetic) {
            *v *= phase;
        }
        grid.inverse_in_place(&mut values);
        self.kick(&mut values, grid);
        ComplexField::from_raw(grid, values)
    }
}

pub fn step_split_fourier(
    model: &Model,
    psi: &ComplexField,
    potential: &Potential,
    dt: f64,
) -> Result<ComplexField> {
    let stepper = SplitStepper::new(model, potential, psi.grid(), dt)?;
    let out = stepper.step(psi);
    if !out.is_finite() {
        return Err(Error::NonFinite("split step"));
    }
    Ok(out)
}

/// Propagates `initial` according to `config`, calling `observe(t, psi)` at
/// step 0 and every `sample_every` steps thereafter. Returns the final state.
pub fn propagate(
    model: &Model,
    potential: &Potential,
    initial: &ComplexField,
    config: &StepperConfig,
    mut observe: impl FnMut(f64, &ComplexField) -> Result<()>,
) -> Result<ComplexField> {
    config.validate()?;
    model.validate()?;
    potential.validate()?;
    let schedule = config.schedule();
    let dt = schedule.dt;
    let split = match config.scheme {
        Scheme::Rk4 => {
            check_stability(model, potential, initial, config.dt)?;
            None
        }
        Scheme::SplitStep => Some(SplitStepper::new(model, potential, initial.grid(), dt)?),
    };
    let limit = BLOW_UP_FACTOR * initial.max_abs();

    let mut psi = initial.clone();
    observe(0.0, &psi).map_err(|e| e.at_step(0, 0.0))?;
    for step in 1..=schedule.steps {
        let t_prev = (step - 1) as f64 * dt;
        let t = step as f64 * dt;
        psi = match &split {
            None => step_rk4(model, &psi, potential, t_prev, dt),
            Some(stepper) => {
                let next = stepper.step(&psi);
                if next.is_finite() {
                    Ok(next)
                } else {
                    Err(Error::NonFinite("split step"))
                }
            }
        }
        .map_err(|e| e.at_step(step, t))?;
        let amplitude = psi.max_abs();
        if amplitude > limit {
            return Err(Error::BlowUp { amplitude, limit }.at_step(step, t));
        }
        if step % schedule.sample_every == 0 {
            observe(t, &psi).map_err(|e| e.at_step(step, t))?;
        }
    }
    Ok(psi)
}

/// Final state after `config.t_final`, without recording observables.
pub fn evolve(
    model: &Model,
    potential: &Potential,
    initial: &ComplexField,
    config: &StepperConfig,
) -> Result<ComplexField> {
    propagate(model, potential, initial, config, |_, _| Ok(()))
}

/// Runs a scenario and records observables at every sample.
pub fn run(scenario: &Scenario) -> Result<TimeSeries> {
    run_with(scenario, |_, _| Ok(()))
}

/// As [`run`], additionally handing each sampled state to `extra`.
pub fn run_with(
    scenario: &Scenario,
    mut extra: impl FnMut(f64, &ComplexField) -> Result<()>,
) -> Result<TimeSeries> {
    let initial = scenario.initial_state()?;
    let mut series = TimeSeries::new(scenario.hash());
    propagate(
        &scenario.model,
        &scenario.potential,
        &initial,
        &scenario.stepper,
        |t, psi| {
            let (rec, node) = record(t, &scenario.model, &scenario.potential, psi)?;
            if node {
                series.flag_node();
            }
            series.push(rec)?;
            extra(t, psi)
        },
    )?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::centroid;
    use crate::states::{plane_wave, GaussianPacket};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1024, 40.0).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_k0(1.0)
            .build(&g)
            .unwrap();
        let model = Model::doebner_goldin(1.0, 0.3);
        let out = step_rk4(&model, &psi, &Potential::Zero, 0.0, 0.0).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn rk4_plane_wave_phase() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let psi = plane_wave(&g, 1).unwrap();
        let dt = 1e-3;
        let out = step_rk4(&Model::linear(1.0), &psi, &Potential::Zero, 0.0, dt).unwrap();
        let phase = Complex64::from_polar(1.0, -0.5 * dt);
        for (a, b) in out.values().iter().zip(psi.values()) {
            assert!((a - b * phase).norm() <= 1e-10);
        }
    }

    #[test]
    fn split_step_is_exact_for_free_evolution() {
        // Free Gaussian spreading has a closed form; one large split step must
        // reproduce it to roundoff since the potential factor is the identity.
        let g = grid();
        let (x0, sigma, k0, m, t) = (20.0, 1.0, 0.5, 1.0, 0.7);
        let psi = GaussianPacket::new(x0, sigma)
            .with_k0(k0)
            .build(&g)
            .unwrap();
        let out = step_split_fourier(&Model::linear(m), &psi, &Potential::Zero, t).unwrap();
        let s = Complex64::new(sigma * sigma, t / (2.0 * m));
        let exact = ComplexField::from_fn(&g, |x| {
            let u = x - x0 - k0 * t / m;
            let amp = (2.0 * PI * sigma * sigma).powf(-0.25) * (sigma * sigma / s).sqrt();
            let arg =
                -u * u / (4.0 * s) + Complex64::new(0.0, k0 * (x - x0) - k0 * k0 * t / (2.0 * m));
            amp * arg.exp()
        })
        .unwrap();
        for (a, b) in out.values().iter().zip(exact.values()) {
            assert!((a - b).norm() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn split_step_rejects_doebner_goldin() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        assert!(matches!(
            step_split_fourier(
                &Model::doebner_goldin(1.0, 0.3),
                &psi,
                &Potential::Zero,
                1e-3
            ),
            Err(Error::SplitStepUnsupported)
        ));
    }

    #[test]
    fn split_step_norm_is_preserved() {
        let g = Grid::new(256, 40.0).unwrap();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_k0(0.5)
            .build(&g)
            .unwrap();
        let model = Model::gross_pitaevskii(1.0, 1.0);
        let potential = Potential::Harmonic {
            omega: 1.0,
            center: 20.0,
        };
        let stepper = SplitStepper::new(&model, &potential, &g, 1e-3).unwrap();
        let mut state = psi;
        for _ in 0..2_000 {
            state = stepper.step(&state);
        }
        let drift = (state.norm() - 1.0).abs();
        assert!(drift <= 1e-12, "{drift:e}");
    }

    #[test]
    fn schedule_lands_on_t_final() {
        let cfg = StepperConfig::rk4(2.5e-4, 2.0 * PI, 100);
        let s = cfg.schedule();
        assert_eq!(s.steps % 100, 0);
        assert!(s.dt <= 2.5e-4);
        assert!((s.dt * s.steps as f64 - 2.0 * PI).abs() <= 1e-12);

        let exact = StepperConfig::rk4(5e-4, 2.0, 20).schedule();
        assert_eq!(exact.steps, 4000);
        assert_eq!(exact.dt, 5e-4);

        let zero = StepperConfig::rk4(1e-3, 0.0, 10).schedule();
        assert_eq!(zero.steps, 0);
        assert_eq!(zero.samples(), 1);
    }

    #[test]
    fn zero_horizon_yields_one_sample() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        let mut times = Vec::new();
        propagate(
            &Model::linear(1.0),
            &Potential::Zero,
            &psi,
            &StepperConfig::rk4(1e-4, 0.0, 10),
            |t, _| {
                times.push(t);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(times, vec![0.0]);
    }

    #[test]
    fn stability_guard_rejects_large_steps() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        let model = Model::linear(1.0);
        let limit = stability_limit(&model, &Potential::Zero, &psi);
        let expected = 2.8 * 2.0 / g.k_max().powi(2);
        assert!((limit - expected).abs() <= 1e-15);
        let err = evolve(
            &model,
            &Potential::Zero,
            &psi,
            &StepperConfig::rk4(2.0 * limit, 1.0, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StabilityGuard { .. }));
        assert!(err.to_string().contains("2.8"));
        // The split-step scheme has no such restriction.
        evolve(
            &model,
            &Potential::Zero,
            &psi,
            &StepperConfig::split_step(2.0 * limit, 0.01, 1),
        )
        .unwrap();
    }

    #[test]
    fn free_packet_drift() {
        let g = grid();
        let psi = GaussianPacket::new(20.0, 1.0)
            .with_k0(1.0)
            .build(&g)
            .unwrap();
        let out = evolve(
            &Model::linear(1.0),
            &Potential::Zero,
            &psi,
            &StepperConfig::rk4(5e-4, 2.0, 100),
        )
        .unwrap();
        assert!((centroid(&out).unwrap() - 22.0).abs() <= 1e-6);
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        // The guard only sees the linear spectrum; a huge nonlinearity puts
        // RK4 far outside its stability region.
        let g = Grid::new(64, 40.0).unwrap();
        let psi = GaussianPacket::new(20.0, 1.0).build(&g).unwrap();
        let model = Model::density_functional(1.0, -1e6, 3.0);
        let err = evolve(
            &model,
            &Potential::Zero,
            &psi,
            &StepperConfig::rk4(0.1, 50.0, 1),
        )
        .unwrap_err();
        match err {
            Error::AtStep { step, source, .. } => {
                assert!(step >= 1);
                assert!(matches!(
                    *source,
                    Error::BlowUp { .. } | Error::NonFinite(_)
                ));
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
