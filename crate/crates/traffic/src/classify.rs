//! Scenario classes by vehicle density and route length.

use std::sync::Arc;

use standin::EquivalenceClassifier;

use crate::network::{RoadNetwork, UNREACHABLE};
use crate::scenario::DrivingScenario;

/// Band cut points and labels; `labels` has one more entry than `cuts`.
/// A value belongs to band `i`, where `i` counts the cuts `c` with `c <= v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bands {
    pub density_cuts: Vec<f64>,
    pub density_labels: Vec<String>,
    pub length_cuts: Vec<f64>,
    pub length_labels: Vec<String>,
}

impl Bands {
    pub fn new(
        density: (&[f64], &[&str]),
        length: (&[f64], &[&str]),
    ) -> Option<Self> {
        let ok = |cuts: &[f64], labels: &[&str]| {
            labels.len() == cuts.len() + 1 && cuts.windows(2).all(|w| w[0] < w[1])
        };
        (ok(density.0, density.1) && ok(length.0, length.1)).then(|| Bands {
            density_cuts: density.0.to_vec(),
            density_labels: density.1.iter().map(|s| s.to_string()).collect(),
            length_cuts: length.0.to_vec(),
            length_labels: length.1.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn band<'a>(cuts: &[f64], labels: &'a [String], v: f64) -> &'a str {
        &labels[cuts.iter().filter(|c| **c <= v).count()]
    }

    pub fn keys(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in &self.density_labels {
            for l in &self.length_labels {
                out.push(format!("{d}/{l}"));
            }
        }
        out
    }
}

/// Vehicles per passable cell.
pub fn density(net: &RoadNetwork, s: &DrivingScenario) -> f64 {
    let cells = net.passable_cells().count().max(1);
    s.vehicles.len() as f64 / cells as f64
}

/// Mean shortest-route length over vehicles; 0 for an empty scenario.
pub fn mean_route_length(net: &RoadNetwork, s: &DrivingScenario) -> Option<f64> {
    if s.vehicles.is_empty() {
        return Some(0.0);
    }
    let mut total = 0.0;
    for v in &s.vehicles {
        let d = net.distance(v.origin, v.destination);
        if d == UNREACHABLE {
            return None;
        }
        total += f64::from(d);
    }
    Some(total / s.vehicles.len() as f64)
}

/// Classifies scenarios as `"<density band>/<length band>"`, with the full
/// product of bands as universe. Non-scenarios have no class.
pub fn scenario_classifier(net: Arc<RoadNetwork>, bands: Bands) -> EquivalenceClassifier {
    let keys = bands.keys();
    EquivalenceClassifier::new("density-length", move |v| {
        let s = DrivingScenario::from_value(v).ok()?;
        let d = Bands::band(&bands.density_cuts, &bands.density_labels, density(&net, &s));
        let l = Bands::band(&bands.length_cuts, &bands.length_labels, mean_route_length(&net, &s)?);
        Some(format!("{d}/{l}"))
    })
    .with_universe(keys)
}
