//! Campaign runner for replacement tests: reads a TOML campaign, wires the
//! named components together, runs every configured tuple and writes the
//! results as JSON, a per-case CSV table and plot data.

pub mod campaign;
pub mod config;
pub mod error;
pub mod registry;
pub mod report;

use std::path::Path;

use serde::{Deserialize, Serialize};
use standin::contexts::tabulate_system;
use standin::{run_experiment, seed, Run, TestCase, Verdict};
use standin_traffic::{DrivingScenario, TrafficRun};

pub use campaign::{exit_status, run_campaign, run_wired, Mode, Seeds};
pub use config::{CampaignConfig, Format};
pub use error::{CampaignError, Result};
pub use report::{emit_report, CampaignReport, Status};

use registry::{resolve_system, Setup};

/// One traffic scenario driven by one tuple, with its judgement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tuple: String,
    pub scenario: standin::Value,
    pub verdict: Verdict,
    pub collision: Option<String>,
    pub arrivals: Vec<Option<u64>>,
    pub run: Run,
}

/// Runs `scenario` on the named tuple (the first one by default) of a
/// traffic campaign.
pub fn simulate(config: &CampaignConfig, base: &Path, scenario: &str, tuple: Option<&str>) -> Result<Trajectory> {
    let wiring = campaign::prepare(config, base, Mode::Run)?;
    let Setup::Traffic { context, .. } = &wiring.setup else {
        return Err(CampaignError::config("simulate needs a traffic context"));
    };
    let (name, systems) = match tuple {
        Some(t) => wiring.tuples.iter().find(|(n, _)| n == t),
        None => wiring.tuples.first(),
    }
    .ok_or_else(|| CampaignError::config("no such tuple"))?;
    let scenario = DrivingScenario::parse(scenario).map_err(|e| CampaignError::config(format!("scenario: {e}")))?;
    let case = TestCase::new("simulate", scenario.to_value());
    let run_seed = seed::for_case(Seeds::from_root(config.seed).experiments, &case.id);
    let run = run_experiment(context, systems, &case, run_seed)?;
    let verdict = wiring.property.judge(&case, &run)?;
    let traffic = TrafficRun::from_run(&run)?;
    Ok(Trajectory {
        tuple: name.clone(),
        scenario: case.payload,
        verdict,
        collision: traffic.first_collision(),
        arrivals: (0..traffic.vehicle_count()).map(|i| traffic.arrival(i)).collect(),
        run,
    })
}

/// The lookup table of a function or dialogue system, in table file form.
/// `system` defaults to the first system of the first tuple.
pub fn tabulate(config: &CampaignConfig, base: &Path, system: Option<&str>) -> Result<String> {
    let wiring = campaign::prepare(config, base, Mode::Run)?;
    if matches!(wiring.setup, Setup::Traffic { .. }) {
        return Err(CampaignError::config("traffic runs cannot be tabulated"));
    }
    let reference = match system {
        Some(spec) => resolve_system(&wiring.setup, spec, base)?,
        None => wiring
            .tuples
            .first()
            .map(|(_, s)| s[0].clone())
            .ok_or_else(|| CampaignError::config("no system to tabulate"))?,
    };
    let table = tabulate_system(wiring.setup.context(), &reference)?;
    table
        .table()
        .to_text()
        .ok_or_else(|| CampaignError::Encode("table values cannot be written as text".into()))
}
