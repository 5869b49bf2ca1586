//! The synchronous grid engine, exposed as a [`Context`].
//!
//! Each tick every vehicle on the road receives an [`Observation`] of the
//! state left by the previous tick and answers an [`Action`]. The requested
//! speed is clamped to `[s - a_max, s + a_max] ∩ [0, v_max]`, then the tick
//! is split into `v_max` sub-steps: a vehicle with speed `k` advances one
//! cell along its path in each of sub-steps `1..=k`. When several vehicles
//! target the same cell in one sub-step the lowest index moves and the rest
//! stop for the remainder of the tick. A stopped vehicle, including one
//! whose path is too short or illegal, reports speed `max(moved, s - a_max)`.
//! Entering an occupied cell is not prevented; that is what the safety
//! properties look for.
//!
//! A vehicle that reaches its destination leaves the road at that sub-step.
//! Signals are published to drivers but not enforced.
//!
//! The run records tick 0 (the initial state) and then one step per tick
//! until every vehicle has arrived or the horizon is reached.

use std::collections::HashMap;
use std::sync::Arc;

use standin::experiment::{Run, Step};
use standin::seed;
use standin::{Context, DomainDescriptor, Error, Signature, SystemRef, TestCase, Value};

use crate::network::{Cell, Dynamics, Heading, Pos, RoadNetwork};
use crate::observe::{traffic_signature, Action, LocalCell, Observation, VehicleView};
use crate::scenario::{pos_value, DrivingScenario};

/// Upper bound accepted for scenario horizons.
pub const MAX_HORIZON: i64 = 100_000;

#[derive(Clone, Debug)]
pub struct TrafficContext {
    name: String,
    network: Arc<RoadNetwork>,
    arity: usize,
    dynamics: Dynamics,
    signature: Signature,
    input: DomainDescriptor,
    output: DomainDescriptor,
}

/// A context for `n` driver systems on `network`. Scenarios may place up to
/// `n` vehicles; vehicle `i` is driven by system `i`.
pub fn make_traffic_context(network: Arc<RoadNetwork>, n: usize, dynamics: Dynamics) -> TrafficContext {
    TrafficContext {
        name: "traffic".into(),
        network,
        arity: n,
        dynamics,
        signature: traffic_signature(),
        input: DomainDescriptor::structured("traffic-scenario")
            .with_range("speed", 0, dynamics.v_max)
            .with_range("horizon", 0, MAX_HORIZON),
        output: DomainDescriptor::structured("traffic-step"),
    }
}

impl TrafficContext {
    /// Restricts the input domain to an explicit scenario list.
    pub fn with_scenarios(mut self, scenarios: &[DrivingScenario]) -> Self {
        self.input = DomainDescriptor::finite(scenarios.iter().map(DrivingScenario::to_value));
        self
    }

    pub fn network(&self) -> &Arc<RoadNetwork> {
        &self.network
    }

    pub fn dynamics(&self) -> Dynamics {
        self.dynamics
    }

    fn route_len(&self) -> usize {
        (2 * self.dynamics.v_max + 1) as usize
    }
}

#[derive(Clone, Copy, Debug)]
struct Vehicle {
    pos: Pos,
    speed: i64,
    heading: Heading,
    destination: Pos,
    arrived: Option<u64>,
}

impl Vehicle {
    fn view(&self) -> VehicleView {
        VehicleView {
            pos: self.pos,
            speed: self.speed,
            heading: self.heading,
        }
    }
}

fn manhattan(a: Pos, b: Pos) -> i64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

impl TrafficContext {
    fn observe(&self, vehicles: &[Vehicle], i: usize, tick: u64) -> Observation {
        let me = &vehicles[i];
        let r = self.dynamics.radius;
        let mut others: Vec<VehicleView> = vehicles
            .iter()
            .enumerate()
            .filter(|(j, v)| *j != i && v.arrived.is_none() && manhattan(v.pos, me.pos) <= r)
            .map(|(_, v)| v.view())
            .collect();
        others.sort_by_key(|v| v.pos);
        let net = &self.network;
        let mut cells = Vec::new();
        for y in me.pos.1 - r..=me.pos.1 + r {
            for x in me.pos.0 - r..=me.pos.0 + r {
                let p = (x, y);
                if manhattan(p, me.pos) > r || !net.passable(p) {
                    continue;
                }
                let sig = net.signal(p);
                cells.push(LocalCell {
                    pos: p,
                    cell: net.cell(p).unwrap(),
                    signal_now: sig.map(|s| s.phase(tick)),
                    signal_next: sig.map(|s| s.phase(tick + 1)),
                });
            }
        }
        Observation {
            tick,
            dynamics: self.dynamics,
            me: me.view(),
            destination: me.destination,
            route: net.route_avoiding(me.pos, me.destination, self.route_len(), |q| {
                vehicles.iter().any(|v| v.arrived.is_none() && v.pos == q)
            }),
            others,
            cells,
        }
    }

    fn snapshot(&self, tick: u64, horizon: u64, vehicles: &[Vehicle], traces: &[Vec<Pos>], blocks: usize) -> Value {
        let list = vehicles
            .iter()
            .zip(traces)
            .map(|(v, trace)| {
                let mut rec: std::collections::BTreeMap<String, Value> = [
                    ("x".to_string(), Value::Int(v.pos.0)),
                    ("y".to_string(), Value::Int(v.pos.1)),
                    ("speed".to_string(), Value::Int(v.speed)),
                    ("heading".to_string(), Value::sym(v.heading.letter().to_string())),
                    ("trace".to_string(), Value::List(trace.iter().map(|p| pos_value(*p)).collect())),
                ]
                .into();
                if let Some(t) = v.arrived {
                    rec.insert("arrived".into(), Value::Int(t as i64));
                }
                Value::Record(rec)
            })
            .collect();
        Value::Record(
            [
                ("tick".to_string(), Value::Int(tick as i64)),
                ("horizon".to_string(), Value::Int(horizon as i64)),
                ("priority_blocks".to_string(), Value::Int(blocks as i64)),
                ("vehicles".to_string(), Value::List(list)),
            ]
            .into(),
        )
    }
}

fn initial_heading(net: &RoadNetwork, pos: Pos, dest: Pos) -> Heading {
    if let Some(Cell::Road(hs)) = net.cell(pos) {
        let mut it = hs.iter();
        if let (Some(h), None) = (it.next(), it.next()) {
            return h;
        }
    }
    net.route(pos, dest, 1).first().copied().unwrap_or(Heading::N)
}

impl Context for TrafficContext {
    fn name(&self) -> &str {
        &self.name
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn input_domain(&self) -> &DomainDescriptor {
        &self.input
    }

    fn output_domain(&self) -> &DomainDescriptor {
        &self.output
    }

    fn memoryless(&self) -> bool {
        false
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn apply(&self, systems: &[SystemRef], case: &TestCase, run_seed: u64) -> standin::Result<Run> {
        let scenario = DrivingScenario::from_value(&case.payload)?;
        scenario.validate(&self.network, self.dynamics.v_max)?;
        if scenario.vehicles.len() > self.arity {
            return Err(Error::DomainViolation(format!(
                "scenario has {} vehicles but the context drives {}",
                scenario.vehicles.len(),
                self.arity
            )));
        }
        let net = &self.network;
        let Dynamics { v_max, a_max, .. } = self.dynamics;
        let mut vehicles: Vec<Vehicle> = scenario
            .vehicles
            .iter()
            .map(|v| Vehicle {
                pos: v.origin,
                speed: v.speed,
                heading: initial_heading(net, v.origin, v.destination),
                destination: v.destination,
                arrived: (v.origin == v.destination).then_some(0),
            })
            .collect();
        let k = vehicles.len();
        let mut sessions: Vec<_> = (0..k)
            .map(|i| systems[i].reset(seed::derive(run_seed, "vehicle", i as u64)))
            .collect();
        let traces: Vec<Vec<Pos>> = vehicles.iter().map(|v| vec![v.pos]).collect();
        let mut steps = vec![Step {
            tick: 0,
            observation: self.snapshot(0, scenario.horizon, &vehicles, &traces, 0),
        }];
        let mut tick = 0;
        while tick < scenario.horizon && vehicles.iter().any(|v| v.arrived.is_none()) {
            tick += 1;
            let present: Vec<bool> = vehicles.iter().map(|v| v.arrived.is_none()).collect();
            let mut planned = vec![0i64; k];
            let mut paths = vec![Vec::new(); k];
            for i in (0..k).filter(|&i| present[i]) {
                let obs = self.observe(&vehicles, i, tick);
                let action = Action::from_value(&sessions[i].react(&obs.to_value()))?;
                let s = vehicles[i].speed;
                planned[i] = (s + action.throttle).clamp((s - a_max).max(0), (s + a_max).min(v_max));
                paths[i] = action.path;
            }
            let mut traces: Vec<Vec<Pos>> = (0..k)
                .map(|i| if present[i] { vec![vehicles[i].pos] } else { Vec::new() })
                .collect();
            let mut moving: Vec<bool> = (0..k).map(|i| present[i] && planned[i] > 0).collect();
            let mut moved = vec![0i64; k];
            let mut blocks = 0;
            for _ in 0..v_max {
                let mut claimed: HashMap<Pos, usize> = HashMap::new();
                let mut targets: Vec<Option<(Pos, Heading)>> = vec![None; k];
                for i in 0..k {
                    if !moving[i] || moved[i] >= planned[i] {
                        continue;
                    }
                    let next = paths[i]
                        .get(moved[i] as usize)
                        .and_then(|&h| net.step(vehicles[i].pos, h).map(|q| (q, h)));
                    match next {
                        Some((q, h)) if !claimed.contains_key(&q) => {
                            claimed.insert(q, i);
                            targets[i] = Some((q, h));
                        }
                        Some(_) => {
                            blocks += 1;
                            moving[i] = false;
                        }
                        None => moving[i] = false,
                    }
                }
                for i in 0..k {
                    if let Some((q, h)) = targets[i] {
                        let v = &mut vehicles[i];
                        v.pos = q;
                        v.heading = h;
                        moved[i] += 1;
                        if q == v.destination {
                            v.arrived = Some(tick);
                            moving[i] = false;
                            traces[i].push(q);
                        }
                    }
                    if present[i] && vehicles[i].arrived.is_none() {
                        traces[i].push(vehicles[i].pos);
                    }
                }
            }
            for i in (0..k).filter(|&i| present[i]) {
                let v = &mut vehicles[i];
                v.speed = if v.arrived.is_some() || moved[i] == planned[i] {
                    moved[i]
                } else {
                    moved[i].max((v.speed - a_max).max(0))
                };
            }
            for (i, v) in vehicles.iter_mut().enumerate() {
                if !present[i] {
                    v.speed = 0;
                }
            }
            steps.push(Step {
                tick,
                observation: self.snapshot(tick, scenario.horizon, &vehicles, &traces, blocks),
            });
        }
        Ok(Run {
            terminated: vehicles.iter().all(|v| v.arrived.is_some()),
            steps,
            seed: run_seed,
        })
    }
}
