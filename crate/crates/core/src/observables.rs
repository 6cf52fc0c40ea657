//! Integral diagnostics: Born centroid, mean velocity, field momentum,
//! candidate forces, energy, and the Ehrenfest residual.
//!
//! Time derivatives of sampled scalars are centered differences. Their
//! truncation error is `h^2 f'''/6`, which [`fd_tolerance`] bounds from the
//! sampled data itself so that residual checks never rely on a hand-tuned
//! constant.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Derivative};
use crate::models::{current, density_functional_term, phase_velocity_field, Family, Model};
use crate::potentials::{GradientMode, Potential};
use crate::states::check_clearance;

/// Safety factor applied to the estimated finite-difference truncation error.
pub const FD_SAFETY: f64 = 2.0;

/// Absolute floor of the finite-difference tolerance (roundoff and
/// integration noise amplified by `1/h`).
pub const FD_FLOOR: f64 = 1e-9;

/// All scalar observables at one sampled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub norm: f64,
    pub x_mean: f64,
    pub v_mean: f64,
    pub p_total: f64,
    pub force_full: f64,
    pub force_partial: f64,
    pub dg_violation: f64,
    /// Absent for dynamics without a Lagrangian (Doebner-Goldin).
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    records: Vec<ObservableRecord>,
    scenario_hash: String,
    node_flagged: bool,
}

impl TimeSeries {
    pub fn new(scenario_hash: impl Into<String>) -> Self {
        Self {
            records: Vec::new(),
            scenario_hash: scenario_hash.into(),
            node_flagged: false,
        }
    }

    pub fn push(&mut self, record: ObservableRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::InvalidParameter(format!(
                    "sample time {} does not follow {}",
                    record.t, last.t
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub(crate) fn flag_node(&mut self) {
        self.node_flagged = true;
    }

    pub fn records(&self) -> &[ObservableRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scenario_hash(&self) -> &str {
        &self.scenario_hash
    }

    /// Whether the node regularizer was active on the packet support at any
    /// sample.
    pub fn node_flagged(&self) -> bool {
        self.node_flagged
    }

    pub fn first(&self) -> Option<&ObservableRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(|r| r.t)
    }

    pub fn column(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// Largest `|f(record) - f(first)|` over the series.
    pub fn max_drift(&self, f: impl Fn(&ObservableRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let f0 = f(first);
        self.records
            .iter()
            .map(|r| (f(r) - f0).abs())
            .fold(0.0, f64::max)
    }

    /// Uniform spacing between samples; errors if the spacing varies.
    pub fn sample_interval(&self) -> Result<f64> {
        if self.records.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: self.records.len(),
            });
        }
        let t = self.times();
        let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        for w in t.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::NonUniformSampling);
            }
        }
        Ok(h)
    }

    /// Every `factor`-th record, starting with the first.
    pub fn decimate(&self, factor: usize) -> TimeSeries {
        TimeSeries {
            records: self
                .records
                .iter()
                .step_by(factor.max(1))
                .copied()
                .collect(),
            scenario_hash: self.scenario_hash.clone(),
            node_flagged: self.node_flagged,
        }
    }
}

/// Values at a subset of sample times.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RealSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl RealSeries {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `<x> = integral rho x / integral rho`. Requires boundary clearance.
pub fn centroid(psi: &ComplexField) -> Result<f64> {
    check_clearance(psi)?;
    Ok(centroid_unchecked(psi))
}

/// Centroid without the clearance check; meaningless for states that wrap
/// around the seam.
pub fn centroid_unchecked(psi: &ComplexField) -> f64 {
    let grid = psi.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in psi.values().iter().enumerate() {
        let r = v.norm_sqr();
        num += r * grid.x(i);
        den += r;
    }
    num / den
}

/// `<v> = integral j`.
pub fn mean_velocity(psi: &ComplexField, mass: f64) -> f64 {
    current(psi, mass).integrate()
}

/// Total field momentum `m integral j`.
pub fn total_momentum(psi: &ComplexField, mass: f64) -> f64 {
    mass * mean_velocity(psi, mass)
}

/// `-integral rho dU/dx` for the selected gradient mode.
pub fn force(psi: &ComplexField, potential: &Potential, mass: f64, mode: GradientMode) -> f64 {
    let rho = psi.density();
    let grad = potential.gradient(psi.grid(), mass, &rho, mode);
    -rho.values()
        .iter()
        .zip(grad.values())
        .map(|(r, g)| r * g)
        .sum::<f64>()
        * psi.grid().dx()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DgViolation {
    pub value: f64,
    pub node_flag: bool,
}

/// `lambda integral rho' d/dx(j/rho)`: the extra force produced by the
/// Doebner-Goldin term.
pub fn dg_violation_term(psi: &ComplexField, mass: f64, lambda: f64, epsilon: f64) -> DgViolation {
    let rho = psi.density();
    let velocity = phase_velocity_field(psi, mass, epsilon);
    let dv = velocity.field.derivative();
    let drho = rho.derivative();
    let value = lambda
        * drho
            .values()
            .iter()
            .zip(dv.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
        * psi.grid().dx();
    DgViolation {
        value,
        node_flag: velocity.node_flag,
    }
}

/// Conserved energy of the Lagrangian families:
/// `integral |psi'|^2/2m + U-energy + G(rho)` with `G = g rho^(a+1)/(a+1)`
/// (local) or `g/2 rho (K * rho)` (nonlocal). `None` for Doebner-Goldin.
pub fn energy(model: &Model, psi: &ComplexField, potential: &Potential) -> Option<f64> {
    let grid = psi.grid();
    let self_energy = match &model.family {
        Family::DoebnerGoldin { .. } => return None,
        Family::Linear => 0.0,
        Family::DensityFunctional(df) => {
            let rho = psi.density();
            match &df.kernel {
                Some(_) => {
                    let o = density_functional_term(df, &rho);
                    0.5 * rho.zip_with(&o, |r, v| r * v).ok()?.integrate()
                }
                None => {
                    let a = df.exponent;
                    df.g / (a + 1.0) * rho.map(|r| r.powf(a + 1.0)).integrate()
                }
            }
        }
    };
    let dpsi = psi.derivative(Derivative::First);
    let kinetic =
        dpsi.values().iter().map(Complex64::norm_sqr).sum::<f64>() * grid.dx() / (2.0 * model.mass);
    let rho = psi.density();
    let potential_energy = potential.energy_density(grid, model.mass, &rho).integrate();
    Some(kinetic + potential_energy + self_energy)
}

/// All observables of `psi` at time `t`, plus the node flag of the
/// Doebner-Goldin velocity field (always `false` for other families).
pub fn record(
    t: f64,
    model: &Model,
    potential: &Potential,
    psi: &ComplexField,
) -> Result<(ObservableRecord, bool)> {
    let m = model.mass;
    let v_mean = mean_velocity(psi, m);
    let (dg_violation, node_flag) = match model.family {
        Family::DoebnerGoldin { lambda, epsilon } => {
            let d = dg_violation_term(psi, m, lambda, epsilon);
            (d.value, d.node_flag)
        }
        _ => (0.0, false),
    };
    let rec = ObservableRecord {
        t,
        norm: psi.norm(),
        x_mean: centroid(psi)?,
        v_mean,
        p_total: m * v_mean,
        force_full: force(psi, potential, m, GradientMode::Full),
        force_partial: force(psi, potential, m, GradientMode::Partial),
        dg_violation,
        energy: energy(model, psi, potential),
    };
    let finite = [
        rec.norm,
        rec.x_mean,
        rec.v_mean,
        rec.force_full,
        rec.force_partial,
        rec.dg_violation,
        rec.energy.unwrap_or(0.0),
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("observables"));
    }
    Ok((rec, node_flag))
}

/// Centered difference of `f` at interior samples minus `g` there.
fn centered_defect(
    series: &TimeSeries,
    f: impl Fn(&ObservableRecord) -> f64,
    g: impl Fn(&ObservableRecord) -> f64,
) -> Result<RealSeries> {
    let n = series.len();
    if n < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: n,
        });
    }
    let h = series.sample_interval()?;
    let r = series.records();
    let mut out = RealSeries::default();
    for i in 1..n - 1 {
        out.t.push(r[i].t);
        out.values
            .push((f(&r[i + 1]) - f(&r[i - 1])) / (2.0 * h) - g(&r[i]));
    }
    Ok(out)
}

/// `m d<v>/dt - F_full(t)` at interior samples.
pub fn ehrenfest_residual(series: &TimeSeries, mass: f64) -> Result<RealSeries> {
    residual_against(series, mass, |r| r.force_full)
}

/// Ehrenfest residual against an arbitrary force column.
pub fn residual_against(
    series: &TimeSeries,
    mass: f64,
    force: impl Fn(&ObservableRecord) -> f64,
) -> Result<RealSeries> {
    centered_defect(series, |r| mass * r.v_mean, force)
}

/// `dP/dt - F_full(t)` with `P = m integral j` taken from the recorded
/// momentum column.
pub fn momentum_law_defect(series: &TimeSeries, _mass: f64) -> Result<RealSeries> {
    centered_defect(series, |r| r.p_total, |r| r.force_full)
}

/// `d<x>/dt - <v>` at interior samples.
pub fn velocity_defect(series: &TimeSeries) -> Result<RealSeries> {
    centered_defect(series, |r| r.x_mean, |r| r.v_mean)
}

/// Bound on the centered-difference truncation error of `scale * f'`:
/// `FD_SAFETY * scale * max|f'''| h^2 / 6 + FD_FLOOR`, with `f'''` estimated
/// from the samples by the five-point third-difference stencil.
pub fn fd_tolerance(values: &[f64], h: f64, scale: f64) -> Result<f64> {
    if values.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            found: values.len(),
        });
    }
    let third = values
        .windows(5)
        .map(|w| ((w[4] - 2.0 * w[3] + 2.0 * w[1] - w[0]) / (2.0 * h.powi(3))).abs())
        .fold(0.0, f64::max);
    Ok(FD_SAFETY * scale.abs() * third * h * h / 6.0 + FD_FLOOR)
}

/// Tolerance for residuals built from `m <v>`.
pub fn residual_tolerance(series: &TimeSeries, mass: f64) -> Result<f64> {
    fd_tolerance(
        &series.column(|r| r.v_mean),
        series.sample_interval()?,
        mass,
    )
}
