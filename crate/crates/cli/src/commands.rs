//! One function per subcommand. Each writes its outputs into the output
//! directory and returns whether the run passed.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use g2flow_core::exterior7::sigma_std;
use g2flow_core::flow::linear::{run_linear, Coupling};
use g2flow_core::flow::{run_flow, run_from, FlowState, Perturbation};
use g2flow_core::lattice::{snapshot, spectrum_lambda0, Field};
use g2flow_core::verify::moser::moser_suite;
use g2flow_core::verify::run_battery;
use g2flow_core::Error;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CmdError {
    /// Exit code 2.
    Invalid(String),
    /// Exit code 1.
    Failed(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Invalid(_) => 2,
            CmdError::Failed(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Invalid(m) | CmdError::Failed(m) => m,
        }
    }
}

/// Errors that point at the configuration rather than the run.
fn classify(e: Error) -> CmdError {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::NotPositive { .. }
        | Error::DegreeMismatch { .. }
        | Error::GridMismatch
        | Error::Format(_) => CmdError::Invalid(e.to_string()),
        _ => CmdError::Failed(e.to_string()),
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub command: &'static str,
    pub out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes `{config, ...report}` to `name` and echoes it on stdout.
    fn report<T: Serialize>(&self, name: &str, report: &T) -> Result<(), CmdError> {
        let mut v = serde_json::to_value(report).map_err(|e| CmdError::Failed(e.to_string()))?;
        if let Value::Object(map) = &mut v {
            let cfg = serde_json::to_value(self.cfg.resolved(self.command)).expect("config serializes");
            map.insert("config".into(), cfg);
        }
        let text = serde_json::to_string_pretty(&v).expect("json value serializes");
        write_file(&self.path(name), text.as_bytes())?;
        println!("{text}");
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    std::fs::write(path, bytes).map_err(|e| CmdError::Failed(format!("cannot write {}: {e}", path.display())))
}

pub fn check_identities(ctx: &Ctx) -> Result<bool, CmdError> {
    let reports = run_battery(&ctx.cfg.identity_config()).map_err(classify)?;
    let pass = reports.iter().all(|r| r.pass);
    ctx.report("identities.json", &json!({ "identities": reports, "pass": pass }))?;
    Ok(pass)
}

pub fn flow(ctx: &Ctx) -> Result<bool, CmdError> {
    let fc = ctx.cfg.flow_config();
    let run = match &ctx.cfg.flow.initial {
        None => run_flow(&fc).map_err(classify)?,
        Some(p) => {
            let sigma = snapshot::load(p).map_err(|e| CmdError::Invalid(format!("{}: {e}", p.display())))?;
            let grid = fc.grid.build().map_err(classify)?;
            let g = sigma.grid();
            if (g.m(), g.n(), g.length()) != (grid.m(), grid.n(), grid.length()) || sigma.degree() != 3 {
                return Err(CmdError::Invalid(format!(
                    "{} is not a 3-form on the configured grid",
                    p.display()
                )));
            }
            let sigma = Field::from_data(grid, 3, sigma.into_data()).map_err(classify)?;
            let sigma0 = Field::constant(grid, &sigma_std());
            run_from(FlowState::new(sigma, sigma0).map_err(classify)?, &fc).map_err(classify)?
        }
    };
    let csv = ctx.path("series.csv");
    let file = File::create(&csv).map_err(|e| CmdError::Failed(format!("cannot write {}: {e}", csv.display())))?;
    run.series.write_csv(BufWriter::new(file)).map_err(classify)?;
    ctx.report("summary.json", &run.summary)?;
    if let Some(e) = run.failure {
        let snap = ctx.path("last_good.snap");
        snapshot::save(&snap, run.state.sigma()).map_err(classify)?;
        return Err(CmdError::Failed(format!(
            "flow stopped at t = {}: {e}; last accepted state written to {}",
            run.state.t,
            snap.display()
        )));
    }
    Ok(true)
}

pub fn spectrum(ctx: &Ctx) -> Result<bool, CmdError> {
    let grid = ctx.cfg.grid_spec().build().map_err(classify)?;
    ctx.report("spectrum.json", &json!({ "lambda0": spectrum_lambda0(&grid) }))?;
    Ok(true)
}

pub fn moser(ctx: &Ctx) -> Result<bool, CmdError> {
    let r = moser_suite(&ctx.cfg.moser_config(), ctx.cfg.moser.seeds).map_err(classify)?;
    ctx.report("moser.json", &r)?;
    Ok(r.pass)
}

pub fn heat(ctx: &Ctx) -> Result<bool, CmdError> {
    let cfg = &ctx.cfg;
    let h = &cfg.heat;
    let grid = cfg.grid_spec().build().map_err(classify)?;
    let seed = cfg.perturbation.seed;
    let band = cfg.perturbation.modes;
    let gamma = Perturbation { seed, amplitude: 1.0, band }.exact_form(grid).map_err(classify)?;
    let alpha = Perturbation {
        seed: seed.wrapping_add(1),
        amplitude: h.source,
        band,
    }
    .exact_form(grid)
    .map_err(classify)?;
    let coupling = if h.phi0 == 0.0 && h.phi1 == 0.0 {
        Coupling::zero(grid)
    } else {
        Coupling::random(grid, h.phi0, h.phi1, seed)
    };
    let (_, rep) = run_linear(&gamma, &coupling, &alpha, h.dt, h.steps, h.margin).map_err(classify)?;
    let pass = !rep.margin_violated
        && rep.max_closedness_residual <= cfg.tolerance.closedness
        && rep.max_zero_mode_drift <= cfg.tolerance.zero_mode;
    ctx.report("heat.json", &json!({ "report": rep, "pass": pass }))?;
    Ok(pass)
}
