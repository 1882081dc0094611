//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use g2flow_core::flow::{FlowConfig, FlowKind, GridSpec, Integrator, Perturbation, StepParams};
use g2flow_core::lattice::DerivativeScheme;
use g2flow_core::verify::moser::{InitialProfile, MoserConfig};
use g2flow_core::verify::IdentityConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl Default for Grid {
    fn default() -> Self {
        let g = GridSpec::default();
        Grid {
            m: g.m,
            n: g.n,
            length: g.length,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scheme {
    pub derivative: DerivativeScheme,
    pub integrator: Integrator,
    pub cfl: f64,
    pub dt: Option<f64>,
}

impl Default for Scheme {
    fn default() -> Self {
        let s = StepParams::default();
        Scheme {
            derivative: DerivativeScheme::Spectral,
            integrator: s.integrator,
            cfl: s.cfl,
            dt: s.dt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Drives every random quantity of the run.
    pub seed: u64,
    pub amplitude: f64,
    /// Wave-vector band of the random potential.
    pub modes: usize,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        let p = Perturbation::default();
        PerturbationSpec {
            seed: p.seed,
            amplitude: p.amplitude,
            modes: p.band,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub gauge: FlowKind,
    pub t_end: f64,
    pub floor: f64,
    pub record_interval: f64,
    pub max_steps: Option<usize>,
    pub bound_start: f64,
    pub volume_tolerance: f64,
    /// Initial structure read from a snapshot instead of the perturbation.
    pub initial: Option<PathBuf>,
}

impl Default for FlowSpec {
    fn default() -> Self {
        let f = FlowConfig::default();
        FlowSpec {
            gauge: f.step.kind,
            t_end: f.t_end,
            floor: f.floor,
            record_interval: f.record_interval,
            max_steps: f.max_steps,
            bound_start: f.bound_start,
            volume_tolerance: f.volume_tolerance,
            initial: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitySpec {
    /// Size of the background perturbation; 0 is the flat background.
    pub amplitude: f64,
    pub band: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        let c = IdentityConfig::default();
        IdentitySpec {
            amplitude: c.amplitude,
            band: c.band,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoserSpec {
    pub b: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub c_s: Option<f64>,
    pub cs_safety: f64,
    pub profile: InitialProfile,
    pub band: usize,
    pub time_steps: usize,
    pub seeds: usize,
}

impl Default for MoserSpec {
    fn default() -> Self {
        let c = MoserConfig::default();
        MoserSpec {
            b: c.b,
            horizon: c.horizon,
            c_s: c.c_s,
            cs_safety: c.cs_safety,
            profile: c.profile,
            band: c.band,
            time_steps: c.time_steps,
            seeds: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpec {
    pub steps: usize,
    pub dt: f64,
    /// `‖Φ0‖_{C0}` and `‖Φ1‖_{C0}` of the random coupling.
    pub phi0: f64,
    pub phi1: f64,
    /// Ellipticity margin for `‖Φ1‖_{C0}`.
    pub margin: f64,
    /// C⁰ size of the exact source term.
    pub source: f64,
}

impl Default for HeatSpec {
    fn default() -> Self {
        HeatSpec {
            steps: 200,
            dt: 0.01,
            phi0: 0.5,
            phi1: 0.1,
            margin: 0.2,
            source: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identities: f64,
    pub closedness: f64,
    pub zero_mode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identities: IdentityConfig::default().tolerance,
            closedness: 1e-10,
            zero_mode: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory for all output files; `--out` overrides.
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from(".") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// If present, must name the subcommand being run.
    pub command: Option<String>,
    pub grid: Grid,
    pub scheme: Scheme,
    pub perturbation: PerturbationSpec,
    /// Perturbation amplitudes must stay below this cap.
    pub amplitude_cap: f64,
    pub flow: FlowSpec,
    pub identities: IdentitySpec,
    pub moser: MoserSpec,
    pub heat: HeatSpec,
    pub tolerance: Tolerances,
    pub output: Output,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))
    }

    pub fn validate(&self, command: &str) -> Result<(), String> {
        if let Some(c) = &self.command {
            if c != command {
                return Err(format!("config is for command {c:?}, not {command:?}"));
            }
        }
        let g = &self.grid;
        if !(1..=7).contains(&g.m) {
            return Err(format!("grid.m must be in 1..=7, got {}", g.m));
        }
        if g.n < 2 || !(g.length > 0.0) {
            return Err("grid.n must be at least 2 and grid.L positive".into());
        }
        if !(self.scheme.cfl > 0.0) {
            return Err("scheme.cfl must be positive".into());
        }
        if self.scheme.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err("scheme.dt must be positive".into());
        }
        let p = &self.perturbation;
        if !(p.amplitude >= 0.0) || p.modes == 0 {
            return Err("perturbation.amplitude must be non-negative and modes positive".into());
        }
        let cap = self.amplitude_cap;
        if !(p.amplitude < cap) || !(self.identities.amplitude < cap) {
            return Err(format!("perturbation amplitude must stay below amplitude_cap = {cap}"));
        }
        let f = &self.flow;
        if !(f.t_end >= 0.0) || !(f.floor >= 0.0) || !(f.record_interval > 0.0) {
            return Err("flow.t_end and flow.floor must be non-negative, record_interval positive".into());
        }
        let t = &self.tolerance;
        if !(t.identities > 0.0) || !(t.closedness > 0.0) || !(t.zero_mode > 0.0) {
            return Err("tolerances must be positive".into());
        }
        let h = &self.heat;
        if !(h.dt > 0.0) || !(h.phi0 >= 0.0) || !(h.phi1 >= 0.0) || !(h.margin > 0.0) || !(h.source >= 0.0) {
            return Err("heat.dt and heat.margin must be positive, phi0, phi1, source non-negative".into());
        }
        if self.moser.seeds == 0 {
            return Err("moser.seeds must be positive".into());
        }
        Ok(())
    }

    /// Every default filled in, as embedded in each report.
    pub fn resolved(&self, command: &str) -> Self {
        RunConfig {
            command: Some(command.to_string()),
            ..self.clone()
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            m: self.grid.m,
            n: self.grid.n,
            length: self.grid.length,
            scheme: self.scheme.derivative,
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        Perturbation {
            seed: self.perturbation.seed,
            amplitude: self.perturbation.amplitude,
            band: self.perturbation.modes,
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            grid: self.grid_spec(),
            perturbation: self.perturbation(),
            step: StepParams {
                kind: self.flow.gauge,
                integrator: self.scheme.integrator,
                cfl: self.scheme.cfl,
                dt: self.scheme.dt,
            },
            t_end: self.flow.t_end,
            floor: self.flow.floor,
            record_interval: self.flow.record_interval,
            max_steps: self.flow.max_steps,
            bound_start: self.flow.bound_start,
            volume_tolerance: self.flow.volume_tolerance,
        }
    }

    pub fn identity_config(&self) -> IdentityConfig {
        IdentityConfig {
            m: self.grid.m,
            n: self.grid.n,
            length: self.grid.length,
            amplitude: self.identities.amplitude,
            seed: self.perturbation.seed,
            band: self.identities.band,
            tolerance: self.tolerance.identities,
        }
    }

    pub fn moser_config(&self) -> MoserConfig {
        let s = &self.moser;
        MoserConfig {
            m: self.grid.m,
            n: self.grid.n,
            length: self.grid.length,
            b: s.b,
            horizon: s.horizon,
            c_s: s.c_s,
            cs_safety: s.cs_safety,
            profile: s.profile,
            seed: self.perturbation.seed,
            band: s.band,
            time_steps: s.time_steps,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            grid: Grid::default(),
            scheme: Scheme::default(),
            perturbation: PerturbationSpec::default(),
            amplitude_cap: 0.1,
            flow: FlowSpec::default(),
            identities: IdentitySpec::default(),
            moser: MoserSpec::default(),
            heat: HeatSpec::default(),
            tolerance: Tolerances::default(),
            output: Output::default(),
        }
    }
}
