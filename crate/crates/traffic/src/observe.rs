//! What a driver sees each tick and what it answers.

use std::collections::BTreeMap;

use standin::{DomainDescriptor, Signature, Value};

use crate::error::{Result, TrafficError};
use crate::network::{Cell, Dynamics, Heading, Headings, Pos};
use crate::scenario::{pos_value, value_pos};

/// Alphabets shared by the traffic context and every driver policy.
pub fn traffic_signature() -> Signature {
    Signature::new(
        DomainDescriptor::structured("traffic-observation"),
        DomainDescriptor::structured("traffic-action"),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleView {
    pub pos: Pos,
    pub speed: i64,
    pub heading: Heading,
}

/// A passable cell within the observation radius. Signal fields hold the
/// headings allowed to enter this tick and next tick; `None` where the cell
/// has no signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalCell {
    pub pos: Pos,
    pub cell: Cell,
    pub signal_now: Option<Headings>,
    pub signal_next: Option<Headings>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    /// The tick about to be executed.
    pub tick: u64,
    pub dynamics: Dynamics,
    pub me: VehicleView,
    pub destination: Pos,
    /// Leading headings of a shortest route to the destination.
    pub route: Vec<Heading>,
    /// Other vehicles on the road within the radius, sorted by position.
    pub others: Vec<VehicleView>,
    pub cells: Vec<LocalCell>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    /// Requested speed change; the engine clamps it to the dynamics.
    pub throttle: i64,
    pub path: Vec<Heading>,
}

fn rec(fields: impl IntoIterator<Item = (&'static str, Value)>) -> Value {
    Value::Record(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn heading_value(h: Heading) -> Value {
    Value::sym(h.letter().to_string())
}

fn value_heading(v: &Value) -> Option<Heading> {
    let s = v.as_sym()?;
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Heading::from_letter(c),
        _ => None,
    }
}

fn signal_value(s: Option<Headings>) -> Value {
    match s {
        None => Value::sym("*"),
        Some(h) if h.is_empty() => Value::sym("-"),
        Some(h) => Value::sym(h.letters()),
    }
}

fn value_signal(v: &Value) -> Option<Option<Headings>> {
    match v.as_sym()? {
        "*" => Some(None),
        "-" => Some(Some(Headings::default())),
        s => Headings::parse(s).map(Some),
    }
}

impl VehicleView {
    pub(crate) fn to_value(self) -> Value {
        rec([
            ("x", Value::Int(self.pos.0)),
            ("y", Value::Int(self.pos.1)),
            ("speed", Value::Int(self.speed)),
            ("heading", heading_value(self.heading)),
        ])
    }

    pub(crate) fn from_value(v: &Value) -> Option<Self> {
        Some(VehicleView {
            pos: (v.field("x")?.as_int()?, v.field("y")?.as_int()?),
            speed: v.field("speed")?.as_int()?,
            heading: value_heading(v.field("heading")?)?,
        })
    }
}

fn bad_obs() -> TrafficError {
    TrafficError::MalformedAction("stimulus is not a traffic observation".into())
}

impl Observation {
    pub fn to_value(&self) -> Value {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                Value::List(vec![
                    Value::Int(c.pos.0),
                    Value::Int(c.pos.1),
                    Value::sym(c.cell.to_char().to_string()),
                    signal_value(c.signal_now),
                    signal_value(c.signal_next),
                ])
            })
            .collect();
        rec([
            ("tick", Value::Int(self.tick as i64)),
            ("v_max", Value::Int(self.dynamics.v_max)),
            ("a_max", Value::Int(self.dynamics.a_max)),
            ("radius", Value::Int(self.dynamics.radius)),
            ("me", self.me.to_value()),
            ("destination", pos_value(self.destination)),
            ("route", Value::List(self.route.iter().map(|h| heading_value(*h)).collect())),
            ("others", Value::List(self.others.iter().map(|o| o.to_value()).collect())),
            ("cells", Value::List(cells)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let int = |k: &str| v.field(k).and_then(Value::as_int).ok_or_else(bad_obs);
        let list = |k: &str| v.field(k).and_then(Value::as_list).ok_or_else(bad_obs);
        let cells = list("cells")?
            .iter()
            .map(|c| match c.as_list() {
                Some([x, y, kind, now, next]) => Some(LocalCell {
                    pos: (x.as_int()?, y.as_int()?),
                    cell: Cell::from_char(kind.as_sym()?.chars().next()?)?,
                    signal_now: value_signal(now)?,
                    signal_next: value_signal(next)?,
                }),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad_obs)?;
        Ok(Observation {
            tick: int("tick")? as u64,
            dynamics: Dynamics {
                v_max: int("v_max")?,
                a_max: int("a_max")?,
                radius: int("radius")?,
            },
            me: v.field("me").and_then(VehicleView::from_value).ok_or_else(bad_obs)?,
            destination: v.field("destination").and_then(value_pos).ok_or_else(bad_obs)?,
            route: list("route")?.iter().map(value_heading).collect::<Option<_>>().ok_or_else(bad_obs)?,
            others: list("others")?
                .iter()
                .map(VehicleView::from_value)
                .collect::<Option<_>>()
                .ok_or_else(bad_obs)?,
            cells,
        })
    }

    /// The observed cells keyed by position.
    pub fn cell_map(&self) -> BTreeMap<Pos, LocalCell> {
        self.cells.iter().map(|c| (c.pos, *c)).collect()
    }
}

impl Action {
    pub fn to_value(&self) -> Value {
        rec([
            ("throttle", Value::Int(self.throttle)),
            ("path", Value::List(self.path.iter().map(|h| heading_value(*h)).collect())),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let bad = || TrafficError::MalformedAction(format!("{v} is not {{throttle, path}}"));
        Ok(Action {
            throttle: v.field("throttle").and_then(Value::as_int).ok_or_else(bad)?,
            path: v
                .field("path")
                .and_then(Value::as_list)
                .and_then(|l| l.iter().map(value_heading).collect::<Option<_>>())
                .ok_or_else(bad)?,
        })
    }
}
