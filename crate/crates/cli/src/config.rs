//! TOML experiment configuration.
//!
//! Every numeric field takes either a number or a string expression (see
//! [`crate::calc`]). Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use synctrl_core::averaging::{AveragedState, PhaseConvention};
use synctrl_core::continuation::{Component, SeedStrategy};
use synctrl_core::dynsys::Tolerances;
use synctrl_core::expr::{Op, PrimitiveSet};

use crate::error::CliError;

/// A config scalar: a number or an arithmetic expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an arithmetic expression string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                crate::calc::eval(v).map(Num).map_err(|e| E::custom(format!("in \"{v}\": {e}")))
            }
        }
        d.deserialize_any(V)
    }
}

fn num(v: f64) -> Num {
    Num(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub primitives: PrimitivesConfig,
    pub gp: Option<GpSection>,
    pub sweep: Option<SweepSection>,
    pub simulate: Option<SimulateSection>,
    pub continuation: Option<ContinuationSection>,
}

/// The oscillator pair, its initial state and the integration window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub omega0: Num,
    pub omega1: Num,
    pub alpha: Num,
    pub beta: Num,
    pub c: Num,
    /// Initial positions.
    pub x: [Num; 2],
    /// Initial velocities.
    pub v: [Num; 2],
    pub t0: Num,
    /// End time; alternatively `periods` of `2π/ω0`.
    pub tn: Option<Num>,
    pub periods: Option<Num>,
    /// Number of sampling intervals (`n + 1` samples).
    pub n: usize,
    pub abs_tol: Num,
    pub rel_tol: Num,
    /// Integrator step budget before a run counts as diverged. Defaults to
    /// 500 steps per period of oscillator 0, at least 100000.
    pub max_steps: Option<usize>,
    pub max_state: Num,
    /// Leading fraction of samples ignored when counting crossings.
    pub transient: Num,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let w0 = 4f64.ln();
        let tol = Tolerances::default();
        Self {
            omega0: num(w0),
            omega1: num(w0 + 0.04),
            alpha: num(0.1),
            beta: num(1.0),
            c: num(0.022),
            x: [num(1.0), num(1.0)],
            v: [num(0.0), num(0.0)],
            t0: num(0.0),
            tn: None,
            periods: None,
            n: 40_000,
            abs_tol: num(tol.abs),
            rel_tol: num(tol.rel),
            max_steps: None,
            max_state: num(tol.max_state),
            transient: num(synctrl_core::analysis::DEFAULT_TRANSIENT),
        }
    }
}

impl SystemConfig {
    pub fn tn(&self) -> f64 {
        match (self.tn, self.periods) {
            (Some(tn), _) => tn.get(),
            (None, Some(p)) => self.t0.get() + p.get() * 2.0 * std::f64::consts::PI / self.omega0.get(),
            (None, None) => self.t0.get() + 2000.0 * 2.0 * std::f64::consts::PI / self.omega0.get(),
        }
    }

    /// Initial state in integrator order `(x0, ẋ0, x1, ẋ1)`.
    pub fn init(&self) -> [f64; 4] {
        [self.x[0].get(), self.v[0].get(), self.x[1].get(), self.v[1].get()]
    }

    pub fn periods(&self) -> f64 {
        (self.tn() - self.t0.get()) * self.omega0.get() / (2.0 * std::f64::consts::PI)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            abs: self.abs_tol.get(),
            rel: self.rel_tol.get(),
            max_steps: self.max_steps.unwrap_or_else(|| ((500.0 * self.periods()).ceil() as usize).max(100_000)),
            max_state: self.max_state.get(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.tn.is_some() && self.periods.is_some() {
            return Err(CliError::Config("system: give either tn or periods, not both".into()));
        }
        if !(self.alpha.get() > 0.0 && self.beta.get() > 0.0) {
            return Err(CliError::Config("system: alpha and beta must be positive".into()));
        }
        if !(self.omega0.get() > 0.0 && self.omega1.get() > 0.0) {
            return Err(CliError::Config("system: frequencies must be positive".into()));
        }
        if !(self.tn() > self.t0.get()) {
            return Err(CliError::Config("system: end time must exceed t0".into()));
        }
        if self.n < 2 {
            return Err(CliError::Config("system: n must be at least 2".into()));
        }
        if !(self.abs_tol.get() > 0.0 && self.rel_tol.get() > 0.0) {
            return Err(CliError::Config("system: tolerances must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.transient.get()) {
            return Err(CliError::Config("system: transient must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Function, argument and constant sets of control expressions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrimitivesConfig {
    /// Any of add, sub, mul, neg, sin, cos, exp.
    pub functions: Vec<String>,
    /// Velocities `x<i>d` fed to the control law.
    pub arguments: Vec<String>,
    pub constants: Vec<String>,
}

impl Default for PrimitivesConfig {
    fn default() -> Self {
        let ps = PrimitiveSet::two_oscillator_default();
        Self {
            functions: ps.functions().iter().map(|op| op.symbol().to_owned()).collect(),
            arguments: ps.terminals().to_vec(),
            constants: ps.constants().to_vec(),
        }
    }
}

impl PrimitivesConfig {
    pub fn primitive_set(&self) -> Result<PrimitiveSet, CliError> {
        let functions = self
            .functions
            .iter()
            .map(|s| Op::from_symbol(s).ok_or_else(|| CliError::Config(format!("primitives: unknown function '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        PrimitiveSet::new(functions, self.arguments.clone(), self.constants.clone())
            .map_err(|e| CliError::Config(format!("primitives: {e}")))
    }

    /// Oscillator index of every argument, from its `x<i>d` name.
    pub fn inputs(&self) -> Result<Vec<usize>, CliError> {
        self.arguments
            .iter()
            .map(|a| {
                a.strip_prefix('x')
                    .and_then(|r| r.strip_suffix('d'))
                    .and_then(|i| i.parse().ok())
                    .filter(|&i: &usize| i < 2)
                    .ok_or_else(|| CliError::Config(format!("primitives: argument '{a}' is not x0d or x1d")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Sync,
    Desync,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpSection {
    pub cost: CostKind,
    #[serde(default = "d_population")]
    pub population: usize,
    /// Offspring per generation; defaults to the population size.
    pub offspring: Option<usize>,
    #[serde(default = "d_generations")]
    pub generations: usize,
    #[serde(default = "d_cx")]
    pub crossover_prob: Num,
    #[serde(default = "d_mut")]
    pub mutation_prob: Num,
    #[serde(default = "d_tournament")]
    pub tournament_size: usize,
    #[serde(default = "d_min_h")]
    pub init_min_height: usize,
    #[serde(default = "d_max_h")]
    pub init_max_height: usize,
    #[serde(default = "d_breed_h")]
    pub max_height: usize,
    #[serde(default)]
    pub seed: u64,
    /// Early stop once Γ1 ≤ this. Defaults to 1e-3 for `sync`, none for
    /// `desync`; a negative value disables it.
    pub stop_threshold: Option<Num>,
    #[serde(default = "d_lm_iter")]
    pub lm_max_iter: usize,
    #[serde(default = "d_lm_evals")]
    pub lm_max_evals: usize,
}

fn d_population() -> usize {
    500
}
fn d_generations() -> usize {
    20
}
fn d_cx() -> Num {
    num(0.5)
}
fn d_mut() -> Num {
    num(0.2)
}
fn d_tournament() -> usize {
    2
}
fn d_min_h() -> usize {
    1
}
fn d_max_h() -> usize {
    4
}
fn d_breed_h() -> usize {
    20
}
fn d_lm_iter() -> usize {
    20
}
fn d_lm_evals() -> usize {
    60
}

impl GpSection {
    pub fn stop_threshold(&self) -> Option<f64> {
        match (self.stop_threshold, self.cost) {
            (Some(t), _) if t.get() < 0.0 => None,
            (Some(t), _) => Some(t.get()),
            (None, CostKind::Sync) => Some(1e-3),
            (None, CostKind::Desync) => None,
        }
    }
}

/// Either an explicit list or an inclusive `start..=stop` range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<Num>),
    Range { start: Num, stop: Num, step: Num },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::List(v) => Ok(v.iter().map(|x| x.get()).collect()),
            Grid::Range { start, stop, step } => {
                let (a, b, h) = (start.get(), stop.get(), step.get());
                if !(h > 0.0) || b < a {
                    return Err(CliError::Config("range needs step > 0 and stop ≥ start".into()));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                // snap to 12 decimals so 0.015 prints as 0.015
                Ok((0..=n).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Detunings `ω1 − ω0`.
    pub delta_omega: Grid,
    pub c: Grid,
    #[serde(default = "d_threshold")]
    pub threshold: Num,
    /// Shorter window for coarse grids; overrides the system window.
    pub periods: Option<Num>,
    /// Sampling intervals to go with `periods`.
    pub n: Option<usize>,
}

fn d_threshold() -> Num {
    num(1e-3)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Control law; `--expr` overrides it.
    pub expression: Option<String>,
    /// Values of the constants, in `primitives.constants` order.
    #[serde(default)]
    pub constants: Vec<Num>,
    /// Write every `stride`-th sample to the trajectory file.
    #[serde(default = "d_stride")]
    pub stride: usize,
}

fn d_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Printed,
    Derived,
}

impl From<Convention> for PhaseConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Printed => PhaseConvention::Printed,
            Convention::Derived => PhaseConvention::Derived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    C,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directions {
    Both,
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedName {
    Multistart,
    InPhase,
    AntiPhase,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seed {
    Named(SeedName),
    Guess { r0: Num, r1: Num, dtheta: Num },
}

impl Seed {
    pub fn strategy(self) -> SeedStrategy {
        match self {
            Seed::Named(SeedName::Multistart) => SeedStrategy::Multistart,
            Seed::Named(SeedName::InPhase) => SeedStrategy::InPhase,
            Seed::Named(SeedName::AntiPhase) => SeedStrategy::AntiPhase,
            Seed::Guess { r0, r1, dtheta } => SeedStrategy::Guess(AveragedState::new(r0.get(), r1.get(), dtheta.get())),
        }
    }
}

fn d_seed() -> Seed {
    Seed::Named(SeedName::Multistart)
}

fn d_both() -> Directions {
    Directions::Both
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    #[serde(default = "d_convention")]
    pub convention: Convention,
    /// Defaults to `omega1 − omega0` of the system.
    pub delta_omega: Option<Num>,
    pub ds_init: Option<Num>,
    pub ds_max: Option<Num>,
    pub ds_min: Option<Num>,
    pub max_points: Option<usize>,
    #[serde(default)]
    pub branch: Vec<BranchTask>,
    #[serde(default)]
    pub contour: Vec<ContourTask>,
}

fn d_convention() -> Convention {
    Convention::Printed
}

/// Branches in `active`, one family member per value in `fixed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchTask {
    pub active: Which,
    pub fixed: Vec<Num>,
    pub range: [Num; 2],
    /// Active-parameter value of the seed; defaults to the range start.
    pub start: Option<Num>,
    #[serde(default = "d_seed")]
    pub seed: Seed,
    /// Trace from every stationary state at the seed, not just the one
    /// with the largest `R1`.
    #[serde(default)]
    pub all_roots: bool,
    #[serde(default = "d_both")]
    pub direction: Directions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentName {
    R0,
    R1,
    DTheta,
}

impl From<ComponentName> for Component {
    fn from(c: ComponentName) -> Self {
        match c {
            ComponentName::R0 => Component::R0,
            ComponentName::R1 => Component::R1,
            ComponentName::DTheta => Component::DTheta,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourTask {
    pub component: ComponentName,
    pub levels: Vec<Num>,
    /// Seed point in the `(c, k)` plane.
    pub c: Num,
    pub k: Num,
    pub c_range: [Num; 2],
    pub k_range: [Num; 2],
    #[serde(default = "d_seed")]
    pub seed: Seed,
    #[serde(default = "d_both")]
    pub direction: Directions,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.system.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).expect("config serialises");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setup_values_as_expressions() {
        let cfg = ExperimentConfig::parse(
            r#"
            [system]
            omega0 = "ln(4)"
            omega1 = "ln(4) + 0.015"
            periods = 2000
            "#,
        )
        .unwrap();
        assert_eq!(cfg.system.omega1.get(), 4f64.ln() + 0.015);
        assert!((cfg.system.tn() - 2000.0 * 2.0 * std::f64::consts::PI / 4f64.ln()).abs() < 1e-9);
        assert_eq!(cfg.system.init(), [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::parse("[system]\nomega = 1").is_err());
        assert!(ExperimentConfig::parse("[sweep]\nc = [0]\ndelta_omega = [0]\nextra = 1").is_err());
        assert!(ExperimentConfig::parse("[system]\nalpha = \"ln(\"").is_err());
        assert!(ExperimentConfig::parse("[system]\ntn = 10\nperiods = 3").is_err());
        assert!(ExperimentConfig::parse("[system]\nalpha = -1").is_err());
    }

    #[test]
    fn grids() {
        let g = Grid::Range { start: num(-0.06), stop: num(0.06), step: num(0.005) };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 25);
        assert_eq!(v[15], 0.015);
        assert_eq!(v[12], 0.0);
        assert_eq!(v[24], 0.06);
    }

    #[test]
    fn argument_inputs() {
        let p = PrimitivesConfig::default();
        assert_eq!(p.inputs().unwrap(), vec![0, 1]);
        let bad = PrimitivesConfig { arguments: vec!["x2d".into()], ..p };
        assert!(bad.inputs().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse("[system]\nc = 0.022").unwrap();
        let b = ExperimentConfig::parse("[system]\nc = \"0.022\"").unwrap();
        let c = ExperimentConfig::parse("[system]\nc = 0.03").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
