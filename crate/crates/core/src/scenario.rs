//! Scenario documents.
//!
//! A scenario is one TOML file with the sections `grid`, `state`, `model`,
//! `potential`, `stepper` and `output`. Unknown keys are errors, and parsing
//! reports every problem it finds rather than stopping at the first. A
//! top-level `preset = "<name>"` starts from that preset's fixture document;
//! sections given in the file override the preset key by key, except that a
//! section which sets `kind` replaces the preset's section entirely.
//!
//! [`SCHEMA`] is an annotated example document covering every key.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::experiments::preset_document;
use crate::grid::{ComplexField, Grid};
use crate::integrators::{check_stability, Scheme, StepperConfig};
use crate::models::{Family, Kernel, Model, DEFAULT_EPSILON};
use crate::potentials::Potential;
use crate::states::{gaussian_packet, plane_wave, GaussianPacket};

/// Annotated scenario document listing every section and key.
pub const SCHEMA: &str = include_str!("../schema.toml");

const SECTIONS: [&str; 6] = ["grid", "state", "model", "potential", "stepper", "output"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec {
    Gaussian(GaussianPacket),
    PlaneWave { mode: i64 },
}

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: Grid,
    pub state: StateSpec,
    pub model: Model,
    pub potential: Potential,
    pub stepper: StepperConfig,
    /// Width of the Gaussian kernel when the model is nonlocal.
    pub kernel_width: Option<f64>,
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        Self::from_table(table)
    }

    pub fn from_table(mut table: Table) -> Result<Self> {
        if let Some(preset) = table.remove("preset") {
            let Value::String(name) = preset else {
                return Err(Error::Config(vec!["`preset` must be a string".into()]));
            };
            let base: Table = preset_document(&name)?
                .parse()
                .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
            table = merge(base, table);
        }
        let mut errors = Vec::new();
        for key in table.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                errors.push(format!("unknown top-level key `{key}`"));
            }
        }
        let section = |name: &str, errors: &mut Vec<String>| -> Table {
            match table.get(name) {
                Some(Value::Table(t)) => t.clone(),
                Some(_) => {
                    errors.push(format!("`{name}` must be a table"));
                    Table::new()
                }
                None if name == "output" => Table::new(),
                None => {
                    errors.push(format!("missing required section [{name}]"));
                    Table::new()
                }
            }
        };
        let grid_t = section("grid", &mut errors);
        let state_t = section("state", &mut errors);
        let model_t = section("model", &mut errors);
        let potential_t = section("potential", &mut errors);
        let stepper_t = section("stepper", &mut errors);
        let output_t = section("output", &mut errors);

        let grid = parse_grid(&grid_t, &mut errors);
        let state = parse_state(&state_t, &mut errors);
        let (model, kernel_width) = parse_model(&model_t, grid.as_ref(), &mut errors);
        let potential = parse_potential(&potential_t, "potential", &mut errors);
        let stepper = parse_stepper(&stepper_t, &mut errors);
        let name = {
            let mut f = Fields::new("output", &output_t, &mut errors);
            let name = f.string_or("name", "series");
            f.finish();
            name
        };

        let (Some(grid), Some(state), Some(model), Some(potential), Some(stepper)) =
            (grid, state, model, potential, stepper)
        else {
            return Err(Error::Config(errors));
        };
        let scenario = Scenario {
            name,
            grid,
            state,
            model,
            potential,
            stepper,
            kernel_width,
        };
        if let Err(e) = scenario.validate() {
            match e {
                Error::Config(more) => errors.extend(more),
                other => errors.push(other.to_string()),
            }
        }
        if errors.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Cross-section consistency: the state fits the grid, Doebner-Goldin is
    /// never paired with split-step, and RK4 respects the stability guard.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let push = |errors: &mut Vec<String>, e: Error| errors.push(e.to_string());
        if let Err(e) = self.model.validate() {
            push(&mut errors, e);
        }
        if let Err(e) = self.potential.validate() {
            push(&mut errors, e);
        }
        if let Err(e) = self.stepper.validate() {
            push(&mut errors, e);
        }
        if self.model.is_doebner_goldin() && self.stepper.scheme == Scheme::SplitStep {
            errors.push(
                "the doebner-goldin model cannot be integrated with split-step; use rk4".into(),
            );
        }
        match self.initial_state() {
            Ok(psi) => {
                if self.stepper.scheme == Scheme::Rk4 && self.stepper.dt > 0.0 {
                    if let Err(e) =
                        check_stability(&self.model, &self.potential, &psi, self.stepper.dt)
                    {
                        push(&mut errors, e);
                    }
                }
            }
            Err(e) => push(&mut errors, e),
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn initial_state(&self) -> Result<ComplexField> {
        match &self.state {
            StateSpec::Gaussian(p) => gaussian_packet(&self.grid, p),
            StateSpec::PlaneWave { mode } => plane_wave(&self.grid, *mode),
        }
    }

    /// Canonical document describing this scenario; parsing it yields an
    /// equal scenario.
    pub fn to_document(&self) -> Table {
        let mut doc = Table::new();
        let mut grid = Table::new();
        grid.insert("n".into(), Value::Integer(self.grid.n() as i64));
        grid.insert("length".into(), Value::Float(self.grid.length()));
        doc.insert("grid".into(), Value::Table(grid));

        let mut state = Table::new();
        match &self.state {
            StateSpec::Gaussian(p) => {
                state.insert("kind".into(), "gaussian".into());
                state.insert("x0".into(), p.x0.into());
                state.insert("sigma".into(), p.sigma.into());
                state.insert("k0".into(), p.k0.into());
                state.insert("chirp".into(), p.chirp.into());
                state.insert("cubic".into(), p.cubic.into());
            }
            StateSpec::PlaneWave { mode } => {
                state.insert("kind".into(), "plane-wave".into());
                state.insert("mode".into(), Value::Integer(*mode));
            }
        }
        doc.insert("state".into(), Value::Table(state));

        let mut model = Table::new();
        model.insert("kind".into(), self.model.tag().into());
        model.insert("mass".into(), self.model.mass.into());
        match &self.model.family {
            Family::Linear => {}
            Family::DensityFunctional(df) => {
                model.insert("g".into(), df.g.into());
                model.insert("exponent".into(), df.exponent.into());
                if let Some(w) = self.kernel_width {
                    model.insert("kernel_width".into(), w.into());
                }
            }
            Family::DoebnerGoldin { lambda, epsilon } => {
                model.insert("lambda".into(), (*lambda).into());
                model.insert("epsilon".into(), (*epsilon).into());
            }
        }
        doc.insert("model".into(), Value::Table(model));
        doc.insert(
            "potential".into(),
            Value::Table(potential_document(&self.potential)),
        );

        let mut stepper = Table::new();
        stepper.insert("scheme".into(), self.stepper.scheme.name().into());
        stepper.insert("dt".into(), self.stepper.dt.into());
        stepper.insert("t_final".into(), self.stepper.t_final.into());
        stepper.insert(
            "sample_every".into(),
            Value::Integer(self.stepper.sample_every as i64),
        );
        doc.insert("stepper".into(), Value::Table(stepper));

        let mut output = Table::new();
        output.insert("name".into(), self.name.clone().into());
        doc.insert("output".into(), Value::Table(output));
        doc
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn hash(&self) -> String {
        let text = toml::to_string(&self.to_document()).unwrap_or_default();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn with_model(mut self, model: Model) -> Self {
        if !matches!(model.family, Family::DensityFunctional(_)) {
            self.kernel_width = None;
        }
        self.model = model;
        self
    }

    pub fn with_stepper(mut self, stepper: StepperConfig) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_state(mut self, state: StateSpec) -> Self {
        self.state = state;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Switches to the nonlocal Gaussian-kernel functional with the current
    /// coupling.
    pub fn with_gaussian_kernel(mut self, width: f64) -> Result<Self> {
        let g = match &self.model.family {
            Family::DensityFunctional(df) => df.g,
            _ => {
                return Err(Error::InvalidParameter(
                    "a kernel needs a density-functional model".into(),
                ))
            }
        };
        self.model = Model::nonlocal(self.model.mass, g, Kernel::gaussian(&self.grid, width)?);
        self.kernel_width = Some(width);
        Ok(self)
    }
}

fn potential_document(p: &Potential) -> Table {
    let mut t = Table::new();
    match p {
        Potential::Zero => {
            t.insert("kind".into(), "zero".into());
        }
        Potential::Harmonic { omega, center } => {
            t.insert("kind".into(), "harmonic".into());
            t.insert("omega".into(), (*omega).into());
            t.insert("center".into(), (*center).into());
        }
        Potential::Uniform { f0 } => {
            t.insert("kind".into(), "uniform".into());
            t.insert("f0".into(), (*f0).into());
        }
        Potential::GaussianBarrier {
            height,
            width,
            center,
        } => {
            t.insert("kind".into(), "gaussian-barrier".into());
            t.insert("height".into(), (*height).into());
            t.insert("width".into(), (*width).into());
            t.insert("center".into(), (*center).into());
        }
        Potential::DensityCoupled { base, eta } => {
            t.insert("kind".into(), "density-coupled".into());
            t.insert("eta".into(), (*eta).into());
            t.insert("base".into(), Value::Table(potential_document(base)));
        }
    }
    t
}

/// Overlays `over` on `base`. Sections that set `kind` replace the base
/// section; other sections merge key by key.
fn merge(mut base: Table, over: Table) -> Table {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) if !o.contains_key("kind") => {
                for (k, v) in o {
                    b.insert(k, v);
                }
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    base
}

/// Typed key access over one section that records every problem and tracks
/// which keys were consumed.
struct Fields<'a> {
    section: String,
    table: &'a Table,
    used: BTreeSet<String>,
    errors: &'a mut Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(section: &str, table: &'a Table, errors: &'a mut Vec<String>) -> Self {
        Self {
            section: section.to_string(),
            table,
            used: BTreeSet::new(),
            errors,
        }
    }

    fn error(&mut self, msg: String) {
        self.errors.push(format!("[{}] {msg}", self.section));
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn float_opt(&mut self, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            other => {
                self.error(format!(
                    "`{key}` must be a number, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        if !self.table.contains_key(key) {
            self.used.insert(key.to_string());
            self.error(format!("missing required key `{key}`"));
            return None;
        }
        self.float_opt(key)
    }

    fn float_or(&mut self, key: &str, default: f64) -> Option<f64> {
        if self.table.contains_key(key) {
            self.float_opt(key)
        } else {
            self.used.insert(key.to_string());
            Some(default)
        }
    }

    fn integer(&mut self, key: &str) -> Option<i64> {
        match self.raw(key) {
            None => {
                self.error(format!("missing required key `{key}`"));
                None
            }
            Some(Value::Integer(v)) => Some(*v),
            Some(other) => {
                self.error(format!(
                    "`{key}` must be an integer, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn integer_or(&mut self, key: &str, default: i64) -> Option<i64> {
        if self.table.contains_key(key) {
            self.integer(key)
        } else {
            self.used.insert(key.to_string());
            Some(default)
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.raw(key) {
            None => {
                self.error(format!("missing required key `{key}`"));
                None
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.error(format!(
                    "`{key}` must be a string, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn string_or(&mut self, key: &str, default: &str) -> String {
        if self.table.contains_key(key) {
            self.string(key).unwrap_or_else(|| default.to_string())
        } else {
            self.used.insert(key.to_string());
            default.to_string()
        }
    }

    fn table(&mut self, key: &str) -> Option<&'a Table> {
        match self.raw(key) {
            None => {
                self.error(format!("missing required table `{key}`"));
                None
            }
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                self.error(format!("`{key}` must be a table, got {}", other.type_str()));
                None
            }
        }
    }

    /// Reports keys that were present but never read.
    fn finish(self) {
        let unknown: Vec<String> = self
            .table
            .keys()
            .filter(|k| !self.used.contains(*k))
            .cloned()
            .collect();
        for key in unknown {
            self.errors
                .push(format!("[{}] unknown key `{key}`", self.section));
        }
    }
}

fn parse_grid(t: &Table, errors: &mut Vec<String>) -> Option<Grid> {
    let mut f = Fields::new("grid", t, errors);
    let n = f.integer("n");
    let length = f.float("length");
    let grid = match (n, length) {
        (Some(n), Some(length)) if n > 0 => match Grid::new(n as usize, length) {
            Ok(g) => Some(g),
            Err(e) => {
                f.error(e.to_string());
                None
            }
        },
        (Some(n), Some(_)) => {
            f.error(format!("n must be positive, got {n}"));
            None
        }
        _ => None,
    };
    f.finish();
    grid
}

fn parse_state(t: &Table, errors: &mut Vec<String>) -> Option<StateSpec> {
    let mut f = Fields::new("state", t, errors);
    let kind = f.string("kind");
    let spec = match kind.as_deref() {
        Some("gaussian") => {
            let x0 = f.float("x0");
            let sigma = f.float("sigma");
            let k0 = f.float_or("k0", 0.0);
            let chirp = f.float_or("chirp", 0.0);
            let cubic = f.float_or("cubic", 0.0);
            match (x0, sigma, k0, chirp, cubic) {
                (Some(x0), Some(sigma), Some(k0), Some(chirp), Some(cubic)) => {
                    Some(StateSpec::Gaussian(GaussianPacket {
                        x0,
                        sigma,
                        k0,
                        chirp,
                        cubic,
                    }))
                }
                _ => None,
            }
        }
        Some("plane-wave") => f.integer("mode").map(|mode| StateSpec::PlaneWave { mode }),
        Some(other) => {
            f.error(format!(
                "unknown state kind `{other}` (expected gaussian or plane-wave)"
            ));
            None
        }
        None => None,
    };
    f.finish();
    spec
}

fn parse_model(
    t: &Table,
    grid: Option<&Grid>,
    errors: &mut Vec<String>,
) -> (Option<Model>, Option<f64>) {
    let mut f = Fields::new("model", t, errors);
    let kind = f.string("kind");
    let mass = f.float_or("mass", 1.0);
    let mut kernel_width = None;
    let family = match kind.as_deref() {
        Some("linear") => Some(Family::Linear),
        Some("density-functional") => {
            let g = f.float("g");
            let exponent = f.float_or("exponent", 1.0);
            let width = f.float_opt("kernel_width");
            match (g, exponent) {
                (Some(g), Some(exponent)) => match (width, grid) {
                    (Some(w), Some(grid)) => match Kernel::gaussian(grid, w) {
                        Ok(kernel) => {
                            kernel_width = Some(w);
                            Some(Model::nonlocal(1.0, g, kernel).family)
                        }
                        Err(e) => {
                            f.error(e.to_string());
                            None
                        }
                    },
                    (Some(_), None) => None,
                    (None, _) => Some(Model::density_functional(1.0, g, exponent).family),
                },
                _ => None,
            }
        }
        Some("doebner-goldin") => {
            let lambda = f.float("lambda");
            let epsilon = f.float_or("epsilon", DEFAULT_EPSILON);
            match (lambda, epsilon) {
                (Some(lambda), Some(epsilon)) => Some(Family::DoebnerGoldin { lambda, epsilon }),
                _ => None,
            }
        }
        Some(other) => {
            f.error(format!(
                "unknown model kind `{other}` (expected linear, density-functional or doebner-goldin)"
            ));
            None
        }
        None => None,
    };
    let model = match (mass, family) {
        (Some(mass), Some(family)) => {
            let model = Model { mass, family };
            match model.validate() {
                Ok(()) => Some(model),
                Err(e) => {
                    f.error(e.to_string());
                    None
                }
            }
        }
        _ => None,
    };
    f.finish();
    (model, kernel_width)
}

fn parse_potential(t: &Table, section: &str, errors: &mut Vec<String>) -> Option<Potential> {
    let mut f = Fields::new(section, t, errors);
    let kind = f.string("kind");
    let potential = match kind.as_deref() {
        Some("zero") => Some(Potential::Zero),
        Some("harmonic") => match (f.float("omega"), f.float("center")) {
            (Some(omega), Some(center)) => Some(Potential::Harmonic { omega, center }),
            _ => None,
        },
        Some("uniform") => f.float("f0").map(|f0| Potential::Uniform { f0 }),
        Some("gaussian-barrier") => {
            match (f.float("height"), f.float("width"), f.float("center")) {
                (Some(height), Some(width), Some(center)) => Some(Potential::GaussianBarrier {
                    height,
                    width,
                    center,
                }),
                _ => None,
            }
        }
        Some("density-coupled") => {
            let eta = f.float("eta");
            let base = f.table("base");
            let base_section = format!("{section}.base");
            let base = base.and_then(|b| parse_potential(b, &base_section, f.errors));
            match (eta, base) {
                (Some(eta), Some(base)) => Some(Potential::DensityCoupled {
                    base: Box::new(base),
                    eta,
                }),
                _ => None,
            }
        }
        Some(other) => {
            f.error(format!(
                "unknown potential kind `{other}` (expected zero, harmonic, uniform, \
                 gaussian-barrier or density-coupled)"
            ));
            None
        }
        None => None,
    };
    let potential = potential.and_then(|p| match p.validate() {
        Ok(()) => Some(p),
        Err(e) => {
            f.error(e.to_string());
            None
        }
    });
    f.finish();
    potential
}

fn parse_stepper(t: &Table, errors: &mut Vec<String>) -> Option<StepperConfig> {
    let mut f = Fields::new("stepper", t, errors);
    let scheme = match f.string_or("scheme", "rk4").as_str() {
        "rk4" => Some(Scheme::Rk4),
        "split-step" => Some(Scheme::SplitStep),
        other => {
            f.error(format!(
                "unknown scheme `{other}` (expected rk4 or split-step)"
            ));
            None
        }
    };
    let dt = f.float("dt");
    let t_final = f.float("t_final");
    let sample_every = f.integer_or("sample_every", 1);
    let config = match (scheme, dt, t_final, sample_every) {
        (Some(scheme), Some(dt), Some(t_final), Some(every)) => {
            if every < 1 {
                f.error(format!("sample_every must be >= 1, got {every}"));
                None
            } else {
                let cfg = StepperConfig {
                    scheme,
                    dt,
                    t_final,
                    sample_every: every as usize,
                };
                match cfg.validate() {
                    Ok(()) => Some(cfg),
                    Err(e) => {
                        f.error(e.to_string());
                        None
                    }
                }
            }
        }
        _ => None,
    };
    f.finish();
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n = 256
length = 40

[state]
kind = "gaussian"
x0 = 20.0
sigma = 1.0

[model]
kind = "linear"

[potential]
kind = "zero"

[stepper]
dt = 1e-3
t_final = 0.5
"#;

    fn config_errors(text: &str) -> Vec<String> {
        match Scenario::parse(text) {
            Err(Error::Config(errors)) => errors,
            Err(other) => panic!("expected config errors, got {other}"),
            Ok(_) => panic!("expected config errors, got a scenario"),
        }
    }

    #[test]
    fn schema_example_is_valid() {
        let s = Scenario::parse(SCHEMA).unwrap();
        assert_eq!(s.name, "free-packet");
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.grid.n(), 256);
        assert_eq!(s.model, Model::linear(1.0));
        assert_eq!(s.stepper.scheme, Scheme::Rk4);
        assert_eq!(s.stepper.sample_every, 1);
        assert_eq!(s.name, "series");
        match s.state {
            StateSpec::Gaussian(p) => {
                assert_eq!((p.k0, p.chirp, p.cubic), (0.0, 0.0, 0.0));
            }
            _ => panic!("wrong state"),
        }
    }

    #[test]
    fn preset_document_is_a_valid_base() {
        let s = Scenario::parse("preset = \"free-packet\"\n").unwrap();
        assert_eq!(s.grid.n(), 1024);
        assert_eq!(s.grid.length(), 40.0);
        assert_eq!(s.name, "free-packet");
        let over = Scenario::parse("preset = \"free-packet\"\n[stepper]\nt_final = 1.0\n").unwrap();
        assert_eq!(over.stepper.t_final, 1.0);
        assert_eq!(over.stepper.dt, s.stepper.dt);
        let swapped = Scenario::parse(
            "preset = \"free-packet\"\n[potential]\nkind = \"uniform\"\nf0 = 0.1\n",
        )
        .unwrap();
        assert_eq!(swapped.potential, Potential::Uniform { f0: 0.1 });
    }

    #[test]
    fn unknown_preset_lists_available() {
        let err = Scenario::parse("preset = \"nope\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("free-packet") && msg.contains("dg-violation"),
            "{msg}"
        );
    }

    #[test]
    fn doebner_goldin_with_split_step_is_rejected() {
        let text = MINIMAL
            .replace(
                "kind = \"linear\"",
                "kind = \"doebner-goldin\"\nlambda = 0.3",
            )
            .replace("dt = 1e-3", "scheme = \"split-step\"\ndt = 1e-3");
        let errors = config_errors(&text);
        assert!(errors
            .iter()
            .any(|e| e.contains("split-step") && e.contains("doebner-goldin")));
    }

    #[test]
    fn stability_guard_error_quotes_formula_and_limit() {
        let text = MINIMAL.replace("dt = 1e-3", "dt = 0.05");
        let errors = config_errors(&text);
        let msg = errors
            .iter()
            .find(|e| e.contains("stability"))
            .expect("guard error");
        assert!(msg.contains("k_max^2 / (2 m) + max|U|"), "{msg}");
        // 2.8 / (k_max^2 / 2) for n = 256, L = 40.
        let limit = 2.8 / ((std::f64::consts::PI * 256.0 / 40.0).powi(2) / 2.0);
        assert!(msg.contains(&format!("{limit:.6e}")), "{msg}");
    }

    #[test]
    fn all_errors_are_reported() {
        let text = r#"
[grid]
n = 100
lenght = 40

[state]
kind = "gaussian"
sigma = -1.0
x0 = 20.0

[model]
kind = "linear"
mas = 2.0

[potential]
kind = "harmonic"
omega = 1.0

[stepper]
dt = 1e-3
"#;
        let errors = config_errors(text);
        let joined = errors.join("\n");
        for needle in [
            "missing required key `length`",
            "unknown key `lenght`",
            "unknown key `mas`",
            "missing required key `center`",
            "missing required key `t_final`",
        ] {
            assert!(joined.contains(needle), "missing `{needle}` in\n{joined}");
        }
        assert!(errors.len() >= 5);
    }

    #[test]
    fn unknown_sections_and_kinds() {
        let errors = config_errors(&format!("{MINIMAL}\n[extra]\na = 1\n"));
        assert!(errors
            .iter()
            .any(|e| e.contains("unknown top-level key `extra`")));
        let errors = config_errors(&MINIMAL.replace("kind = \"zero\"", "kind = \"square\""));
        assert!(errors
            .iter()
            .any(|e| e.contains("unknown potential kind `square`")));
    }

    #[test]
    fn nested_density_coupled_potential() {
        let text = MINIMAL.replace(
            "[potential]\nkind = \"zero\"",
            "[potential]\nkind = \"density-coupled\"\neta = 0.5\n\n[potential.base]\nkind = \"harmonic\"\nomega = 1.0\ncenter = 20.0",
        );
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(
            s.potential,
            Potential::DensityCoupled {
                base: Box::new(Potential::Harmonic {
                    omega: 1.0,
                    center: 20.0
                }),
                eta: 0.5
            }
        );
        let bad = text.replace("omega = 1.0\n", "omegaa = 1.0\n");
        let errors = config_errors(&bad);
        assert!(errors
            .iter()
            .any(|e| e.contains("[potential.base] unknown key `omegaa`")));
    }

    #[test]
    fn canonical_document_round_trips() {
        let text = MINIMAL
            .replace(
                "kind = \"linear\"",
                "kind = \"density-functional\"\ng = 1.0\nkernel_width = 0.7",
            )
            .replace("x0 = 20.0", "x0 = 20.0\ncubic = 0.05\nk0 = -0.5");
        let s = Scenario::parse(&text).unwrap();
        let doc = toml::to_string(&s.to_document()).unwrap();
        let again = Scenario::parse(&doc).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.hash(), s.hash());
        assert_eq!(s.hash().len(), 64);
        let other = s.clone().named("other");
        assert_ne!(other.hash(), s.hash());
    }
}
