//! Grid traffic for the replacement harness: road networks, driving
//! scenarios, a synchronous engine exposed as a context, two reference
//! driver policies and the safety properties to judge them by.

pub mod classify;
pub mod error;
pub mod fixtures;
pub mod network;
pub mod observe;
pub mod policy;
pub mod properties;
pub mod scenario;
pub mod sim;

pub use classify::{scenario_classifier, Bands};
pub use error::{Result, TrafficError};
pub use network::{build_network, Dynamics, Heading, NetworkFile, Pos, RoadNetwork};
pub use observe::{traffic_signature, Action, Observation};
pub use policy::{cautious, fleet, greedy, Cautious, DriverPolicy, Greedy, PolicySystem};
pub use properties::{CollisionFree, NoCongestion, TrafficRun};
pub use scenario::{DrivingScenario, ScenarioSpace, VehicleSpec};
pub use sim::{make_traffic_context, TrafficContext};
