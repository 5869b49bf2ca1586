//! Safety and progress properties over traffic runs.

use standin::experiment::Run;
use standin::{Property, TestCase, Value, Verdict};

use crate::error::{Result, TrafficError};
use crate::network::{Heading, Pos};
use crate::scenario::value_pos;

/// One vehicle's state at the end of a tick, with the cells it held at each
/// sub-step of that tick (empty once it has left the road).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickState {
    pub pos: Pos,
    pub speed: i64,
    pub heading: Heading,
    pub arrived: Option<u64>,
    pub trace: Vec<Pos>,
}

/// Per-tick observations of a traffic run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrafficRun {
    pub horizon: u64,
    pub ticks: Vec<u64>,
    /// `states[t][i]`: vehicle `i` at the `t`-th recorded tick.
    pub states: Vec<Vec<TickState>>,
    pub priority_blocks: Vec<i64>,
}

fn not_traffic(msg: impl Into<String>) -> TrafficError {
    TrafficError::NotATrafficRun(msg.into())
}

fn tick_state(v: &Value) -> Option<TickState> {
    let h = v.field("heading")?.as_sym()?;
    Some(TickState {
        pos: (v.field("x")?.as_int()?, v.field("y")?.as_int()?),
        speed: v.field("speed")?.as_int()?,
        heading: Heading::from_letter(h.chars().next()?)?,
        arrived: match v.field("arrived") {
            Some(a) => Some(a.as_int()? as u64),
            None => None,
        },
        trace: v.field("trace")?.as_list()?.iter().map(value_pos).collect::<Option<_>>()?,
    })
}

impl TrafficRun {
    pub fn from_run(run: &Run) -> Result<Self> {
        let first = run.steps.first().ok_or_else(|| not_traffic("run has no steps"))?;
        let horizon = first
            .observation
            .field("horizon")
            .and_then(Value::as_int)
            .ok_or_else(|| not_traffic("missing horizon"))? as u64;
        let mut out = TrafficRun {
            horizon,
            ticks: Vec::new(),
            states: Vec::new(),
            priority_blocks: Vec::new(),
        };
        for step in &run.steps {
            let list = step
                .observation
                .field("vehicles")
                .and_then(Value::as_list)
                .ok_or_else(|| not_traffic(format!("tick {} has no vehicle list", step.tick)))?;
            let states: Vec<TickState> = list
                .iter()
                .map(tick_state)
                .collect::<Option<_>>()
                .ok_or_else(|| not_traffic(format!("tick {} has a malformed vehicle", step.tick)))?;
            if out.states.first().is_some_and(|s| s.len() != states.len()) {
                return Err(not_traffic(format!("vehicle count changes at tick {}", step.tick)));
            }
            out.ticks.push(step.tick);
            out.states.push(states);
            out.priority_blocks.push(step.observation.field("priority_blocks").and_then(Value::as_int).unwrap_or(0));
        }
        Ok(out)
    }

    pub fn vehicle_count(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn arrival(&self, i: usize) -> Option<u64> {
        self.states.last().and_then(|s| s[i].arrived)
    }

    /// First collision: two vehicles in one cell at one sub-step, or two
    /// vehicles swapping cells between consecutive sub-steps.
    pub fn first_collision(&self) -> Option<String> {
        for (t, states) in self.ticks.iter().zip(&self.states) {
            let depth = states.iter().map(|s| s.trace.len()).max().unwrap_or(0);
            for sub in 0..depth {
                for a in 0..states.len() {
                    for b in a + 1..states.len() {
                        let (ta, tb) = (&states[a].trace, &states[b].trace);
                        let (Some(pa), Some(pb)) = (ta.get(sub), tb.get(sub)) else {
                            continue;
                        };
                        if pa == pb {
                            return Some(format!(
                                "vehicles {a} and {b} share cell ({}, {}) at tick {t}, sub-step {sub}",
                                pa.0, pa.1
                            ));
                        }
                        if sub > 0 && ta[sub - 1] == *pb && tb[sub - 1] == *pa {
                            return Some(format!(
                                "vehicles {a} and {b} swap cells ({}, {}) and ({}, {}) at tick {t}, sub-step {sub}",
                                pb.0, pb.1, pa.0, pa.1
                            ));
                        }
                    }
                }
            }
        }
        None
    }
}

/// No two vehicles ever collide.
#[derive(Clone, Copy, Debug, Default)]
pub struct CollisionFree;

impl Property for CollisionFree {
    fn name(&self) -> &str {
        "collision_free"
    }

    fn judge(&self, _case: &TestCase, run: &Run) -> standin::Result<Verdict> {
        let tr = TrafficRun::from_run(run)?;
        Ok(match tr.first_collision() {
            Some(evidence) => Verdict::fail(evidence),
            None => Verdict::pass(),
        })
    }
}

/// Every vehicle arrives by tick `deadline`.
#[derive(Clone, Copy, Debug)]
pub struct NoCongestion {
    pub deadline: u64,
}

impl Property for NoCongestion {
    fn name(&self) -> &str {
        "no_congestion"
    }

    fn judge(&self, _case: &TestCase, run: &Run) -> standin::Result<Verdict> {
        let tr = TrafficRun::from_run(run)?;
        if self.deadline > tr.horizon {
            return Err(standin::Error::InvalidBound(format!(
                "deadline {} exceeds the horizon {}",
                self.deadline, tr.horizon
            )));
        }
        let late = (0..tr.vehicle_count()).find(|&i| tr.arrival(i).is_none_or(|t| t > self.deadline));
        Ok(match late {
            Some(i) => Verdict::fail(match tr.arrival(i) {
                Some(t) => format!("vehicle {i} arrives at tick {t}, after {}", self.deadline),
                None => format!("vehicle {i} never arrives"),
            }),
            None => Verdict::pass(),
        })
    }
}
