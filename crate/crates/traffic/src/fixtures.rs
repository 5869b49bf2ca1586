//! Ready-made networks and scenario families.

use std::sync::Arc;

use crate::classify::Bands;
use crate::network::{build_network, Dynamics, NetworkFile, Pos, RoadNetwork};
use crate::scenario::{DrivingScenario, ScenarioSpace, VehicleSpec};

/// Two one-way roads in each direction crossing in a 2×2 unsignaled box.
pub const CROSSING: &str = "\
version 1
v_max 2
a_max 1
radius 7
od 3 0 3 7
od 3 0 0 3
od 3 0 7 4
od 4 7 4 0
od 4 7 7 4
od 4 7 0 3
od 7 3 0 3
od 7 3 4 0
od 7 3 3 7
od 0 4 7 4
od 0 4 3 7
od 0 4 4 0
---
###v^###
###v^###
###v^###
<<<++<<<
>>>++>>>
###v^###
###v^###
###v^###
";

/// Horizon used for the crossing scenarios.
pub const CROSSING_HORIZON: u64 = 30;

/// A single signaled junction: southbound and eastbound one-way roads.
pub const SIGNAL: &str = "\
version 1
v_max 1
a_max 1
radius 4
signal 2 2 period=3 phases=E,S
od 2 0 2 4
od 0 2 4 2
---
##v##
##v##
>>+>>
##v##
##v##
";

/// A straight one-way road of ten cells.
pub const STRAIGHT: &str = "\
version 1
v_max 1
a_max 1
radius 4
od 0 0 9 0
---
>>>>>>>>>>
";

fn load(text: &str) -> NetworkFile {
    build_network(text).expect("built-in network is well formed")
}

pub fn crossing() -> (Arc<RoadNetwork>, Dynamics) {
    let f = load(CROSSING);
    (Arc::new(f.network), f.dynamics)
}

pub fn signal_junction() -> (Arc<RoadNetwork>, Dynamics) {
    let f = load(SIGNAL);
    (Arc::new(f.network), f.dynamics)
}

pub fn straight_road() -> (Arc<RoadNetwork>, Dynamics) {
    let f = load(STRAIGHT);
    (Arc::new(f.network), f.dynamics)
}

/// Up to three vehicles at distinct crossing entries, speeds `0..=2`, each
/// bound for one of the three exits that do not turn back.
pub fn crossing_space() -> ScenarioSpace {
    let (net, dynamics) = crossing();
    ScenarioSpace::from_od_pairs(&net, 3, dynamics.v_max, CROSSING_HORIZON)
}

pub fn crossing_scenarios() -> Vec<DrivingScenario> {
    crossing_space().scenarios()
}

/// Density bands by vehicle count on the 28 crossing road cells
/// (1, 2, 3 vehicles) and length bands splitting right turns from the rest.
pub fn crossing_bands() -> Bands {
    Bands::new((&[0.05, 0.09], &["low", "mid", "high"]), (&[7.0], &["short", "long"])).unwrap()
}

pub fn straight_scenario(speed: i64, horizon: u64) -> DrivingScenario {
    DrivingScenario {
        horizon,
        vehicles: vec![VehicleSpec {
            origin: (0, 0),
            speed,
            destination: (9, 0),
        }],
    }
}

/// Entry cells of the crossing, in the order used by [`crossing_space`].
pub const CROSSING_ENTRIES: [Pos; 4] = [(3, 0), (4, 7), (7, 3), (0, 4)];
