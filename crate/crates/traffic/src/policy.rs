//! Driver policies and their wrapping as systems under test.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use standin::{Session, Signature, SystemRef, SystemUnderTest, Value};

use crate::network::{Cell, Heading, Pos};
use crate::observe::{traffic_signature, Action, LocalCell, Observation, VehicleView};

/// A memoryless driver: one action per observation.
pub trait DriverPolicy: Send + Sync {
    fn name(&self) -> &str;
    fn act(&self, obs: &Observation) -> Action;
}

/// Wraps a policy so it can be embedded in the traffic context.
pub struct PolicySystem<P> {
    policy: P,
    signature: Signature,
}

impl<P: DriverPolicy + 'static> PolicySystem<P> {
    pub fn new(policy: P) -> Self {
        PolicySystem {
            policy,
            signature: traffic_signature(),
        }
    }

    pub fn into_ref(self) -> SystemRef {
        Arc::new(self)
    }
}

struct PolicySession<'a, P>(&'a P);

impl<P: DriverPolicy> Session for PolicySession<'_, P> {
    fn react(&mut self, stimulus: &Value) -> Value {
        match Observation::from_value(stimulus) {
            Ok(obs) => self.0.act(&obs).to_value(),
            Err(e) => Value::sym(e.to_string()),
        }
    }
}

impl<P: DriverPolicy> SystemUnderTest for PolicySystem<P> {
    fn name(&self) -> &str {
        self.policy.name()
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn reset(&self, _seed: u64) -> Box<dyn Session + '_> {
        Box::new(PolicySession(&self.policy))
    }
}

pub fn greedy() -> SystemRef {
    PolicySystem::new(Greedy).into_ref()
}

pub fn cautious() -> SystemRef {
    PolicySystem::new(Cautious).into_ref()
}

/// `n` copies of one policy.
pub fn fleet(system: &SystemRef, n: usize) -> Vec<SystemRef> {
    vec![system.clone(); n]
}

fn speed_bounds(obs: &Observation) -> (i64, i64) {
    let d = obs.dynamics;
    let s = obs.me.speed;
    ((s - d.a_max).max(0), (s + d.a_max).min(d.v_max))
}

/// Cells visited by following the route from the current position.
fn route_cells(obs: &Observation) -> Vec<Pos> {
    let mut p = obs.me.pos;
    obs.route
        .iter()
        .map(|h| {
            p = h.step(p);
            p
        })
        .collect()
}

fn runs_red(obs: &Observation, cells: &BTreeMap<Pos, LocalCell>, route: &[Pos], j: usize, next_tick: bool) -> bool {
    let from = if j == 0 { obs.me.pos } else { route[j - 1] };
    let from_road = matches!(cells.get(&from).map(|c| c.cell), Some(Cell::Road(_)));
    let Some(target) = cells.get(&route[j]) else {
        return false;
    };
    let phase = if next_tick { target.signal_next } else { target.signal_now };
    from_road && phase.is_some_and(|p| !p.contains(obs.route[j]))
}

/// Full speed ahead, stopping short of cells that are occupied right now.
/// Signals are ignored unless cross traffic is in view.
pub struct Greedy;

impl DriverPolicy for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn act(&self, obs: &Observation) -> Action {
        let (lo, hi) = speed_bounds(obs);
        let route = route_cells(obs);
        let occupied: BTreeSet<Pos> = obs.others.iter().map(|o| o.pos).collect();
        let cross_traffic = obs
            .others
            .iter()
            .any(|o| o.heading == obs.me.heading.cw() || o.heading == obs.me.heading.cw().opposite());
        let cells = obs.cell_map();
        let mut free = 0;
        while free < route.len()
            && !occupied.contains(&route[free])
            && !(cross_traffic && runs_red(obs, &cells, &route, free, false))
        {
            free += 1;
        }
        let s = (free as i64).min(hi).max(lo);
        Action {
            throttle: s - obs.me.speed,
            path: obs.route.iter().take(s as usize).copied().collect(),
        }
    }
}

/// Yields to vehicles on its right and keeps a braking margin.
///
/// A visible vehicle `B` is *ceded to* when it may move before us. Vehicles
/// inside an intersection go before those outside; otherwise `B` is not on
/// our left (heading clockwise of ours), not oncoming while we head N
/// or E, and, when it shares our heading, neither behind us in our lane nor
/// in a lane to our left. For every pair of vehicles
/// at least one cedes to the other. The chosen speed is the largest whose
/// path avoids the current cells of all visible vehicles and every cell a
/// ceded-to vehicle can reach this tick, stays off red signals, and leaves
/// the cells traversed while braking hard afterwards clear of everything
/// any visible vehicle can reach within two ticks.
///
/// It also keeps junctions clear: it enters a block of intersection cells
/// from the road only when the block is empty and no visible vehicle closer
/// to the block (ties by position) could enter it within two ticks.
pub struct Cautious;

/// With equal headings: `other` is directly behind `me`, or level with or
/// behind it in a lane to the left.
fn trails(me: &VehicleView, other: &VehicleView) -> bool {
    if me.heading != other.heading {
        return false;
    }
    let (fx, fy) = me.heading.delta();
    let (rx, ry) = me.heading.cw().delta();
    let (ox, oy) = (other.pos.0 - me.pos.0, other.pos.1 - me.pos.1);
    let lateral = ox * rx + oy * ry;
    lateral < 0 || (lateral == 0 && ox * fx + oy * fy < 0)
}

fn cedes_to(me: &VehicleView, other: &VehicleView, in_junction: impl Fn(Pos) -> bool) -> bool {
    match (in_junction(me.pos), in_junction(other.pos)) {
        (true, false) => return false,
        (false, true) => return true,
        _ => {}
    }
    let on_left = other.heading == me.heading.cw();
    let oncoming_yield = other.heading == me.heading.opposite() && matches!(me.heading, Heading::N | Heading::E);
    !(on_left || oncoming_yield || trails(me, other))
}

/// Cells on legal paths of at most `len` moves from `from`, start included.
fn reach(cells: &BTreeMap<Pos, LocalCell>, from: Pos, len: i64) -> BTreeSet<Pos> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([(from, 0)]);
    while let Some((p, d)) = queue.pop_front() {
        if d == len {
            continue;
        }
        for h in Heading::ALL {
            let q = h.step(p);
            let legal = cells.get(&p).is_some_and(|c| c.cell.allows(h))
                && cells.get(&q).is_some_and(|c| c.cell.allows(h));
            if legal && seen.insert(q) {
                queue.push_back((q, d + 1));
            }
        }
    }
    seen
}

/// Intersection cells connected to `start` through intersection cells.
fn junction(cells: &BTreeMap<Pos, LocalCell>, start: Pos) -> BTreeSet<Pos> {
    let is_box = |p: &Pos| cells.get(p).is_some_and(|c| c.cell == Cell::Intersection);
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        for h in Heading::ALL {
            let q = h.step(p);
            if is_box(&q) && seen.insert(q) {
                stack.push(q);
            }
        }
    }
    seen
}

fn box_distance(cells: &BTreeSet<Pos>, p: Pos) -> i64 {
    cells
        .iter()
        .map(|c| (c.0 - p.0).abs() + (c.1 - p.1).abs())
        .min()
        .unwrap_or(i64::MAX)
}

impl DriverPolicy for Cautious {
    fn name(&self) -> &str {
        "cautious"
    }

    fn act(&self, obs: &Observation) -> Action {
        let d = obs.dynamics;
        let (lo, hi) = speed_bounds(obs);
        let route = route_cells(obs);
        let cells = obs.cell_map();
        let in_junction = |p: Pos| cells.get(&p).is_some_and(|c| c.cell == Cell::Intersection);
        let mut now: BTreeSet<Pos> = obs.others.iter().map(|o| o.pos).collect();
        let mut later = now.clone();
        for o in &obs.others {
            let one = (o.speed + d.a_max).min(d.v_max);
            if cedes_to(&obs.me, o, in_junction) {
                now.extend(reach(&cells, o.pos, one));
            }
            later.extend(reach(&cells, o.pos, one + d.v_max));
        }
        // first junction the route enters from a road cell, if any
        let entry = (0..route.len()).find(|&j| {
            let from = if j == 0 { obs.me.pos } else { route[j - 1] };
            let kind = |p: &Pos| cells.get(p).map(|c| c.cell);
            matches!(kind(&from), Some(Cell::Road(_))) && kind(&route[j]) == Some(Cell::Intersection)
        });
        let junction_clear = entry.is_none_or(|j| {
            let jn = junction(&cells, route[j]);
            let mine = (box_distance(&jn, obs.me.pos), obs.me.pos);
            obs.others.iter().all(|o| {
                let theirs = (box_distance(&jn, o.pos), o.pos);
                let two = (o.speed + d.a_max).min(d.v_max) + d.v_max;
                !jn.contains(&o.pos) && (theirs > mine || reach(&cells, o.pos, two).is_disjoint(&jn))
            })
        });
        let safe = |s: i64| {
            let s = s as usize;
            if s > route.len() {
                return false;
            }
            let braking = s + ((s as i64 - d.a_max).max(0) as usize);
            if !junction_clear && entry.is_some_and(|j| j < braking) {
                return false;
            }
            if (0..s).any(|j| now.contains(&route[j]) || runs_red(obs, &cells, &route, j, false)) {
                return false;
            }
            let mut end = s;
            let mut v = s as i64;
            let mut first = true;
            while v > 0 && end < route.len() {
                v = (v - d.a_max).max(0);
                let stop = (end + v as usize).min(route.len());
                if (end..stop).any(|j| later.contains(&route[j]) || (first && runs_red(obs, &cells, &route, j, true))) {
                    return false;
                }
                first = false;
                end = stop;
            }
            true
        };
        let s = (lo..=hi).rev().find(|&s| safe(s)).unwrap_or(lo);
        Action {
            throttle: s - obs.me.speed,
            path: obs.route.iter().take(s as usize).copied().collect(),
        }
    }
}
