//! Driving scenarios: who starts where, how fast, and where they go.
//!
//! A scenario's payload form is
//! `{horizon: H, vehicles: [{origin: [x, y], speed: s, destination: [x, y]}, ...]}`.
//! The text form is a `horizon H` line followed by one `x y speed x y` line
//! per vehicle; `#` starts a comment.

use rand::seq::index;
use rand::Rng as _;
use standin::seed::Rng;
use standin::{Value, ValueSource};

use crate::error::{Result, TrafficError};
use crate::network::{Pos, RoadNetwork, UNREACHABLE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleSpec {
    pub origin: Pos,
    pub speed: i64,
    pub destination: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrivingScenario {
    pub horizon: u64,
    pub vehicles: Vec<VehicleSpec>,
}

fn bad(msg: impl Into<String>) -> TrafficError {
    TrafficError::MalformedScenario(msg.into())
}

pub(crate) fn pos_value((x, y): Pos) -> Value {
    Value::ints([x, y])
}

pub(crate) fn value_pos(v: &Value) -> Option<Pos> {
    match v.as_list()? {
        [x, y] => Some((x.as_int()?, y.as_int()?)),
        _ => None,
    }
}

impl DrivingScenario {
    pub fn to_value(&self) -> Value {
        let vehicles = self
            .vehicles
            .iter()
            .map(|v| {
                Value::Record(
                    [
                        ("origin".to_string(), pos_value(v.origin)),
                        ("speed".to_string(), Value::Int(v.speed)),
                        ("destination".to_string(), pos_value(v.destination)),
                    ]
                    .into(),
                )
            })
            .collect();
        Value::Record(
            [
                ("horizon".to_string(), Value::Int(self.horizon as i64)),
                ("vehicles".to_string(), Value::List(vehicles)),
            ]
            .into(),
        )
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let horizon = v
            .field("horizon")
            .and_then(Value::as_int)
            .filter(|h| *h >= 0)
            .ok_or_else(|| bad("missing non-negative `horizon`"))?;
        let list = v
            .field("vehicles")
            .and_then(Value::as_list)
            .ok_or_else(|| bad("missing `vehicles` list"))?;
        let vehicles = list
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let get = |k: &str| rec.field(k).ok_or_else(|| bad(format!("vehicle {i} lacks `{k}`")));
                Ok(VehicleSpec {
                    origin: value_pos(get("origin")?).ok_or_else(|| bad(format!("vehicle {i}: bad origin")))?,
                    speed: get("speed")?.as_int().ok_or_else(|| bad(format!("vehicle {i}: bad speed")))?,
                    destination: value_pos(get("destination")?)
                        .ok_or_else(|| bad(format!("vehicle {i}: bad destination")))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DrivingScenario {
            horizon: horizon as u64,
            vehicles,
        })
    }

    /// Checks a scenario against a network: distinct road-cell origins,
    /// reachable destinations and speeds in `0..=v_max`.
    pub fn validate(&self, net: &RoadNetwork, v_max: i64) -> Result<()> {
        for (i, v) in self.vehicles.iter().enumerate() {
            if !net.passable(v.origin) {
                return Err(bad(format!("vehicle {i} starts off-road")));
            }
            if !(0..=v_max).contains(&v.speed) {
                return Err(bad(format!("vehicle {i} has speed {} outside 0..={v_max}", v.speed)));
            }
            if net.distance(v.origin, v.destination) == UNREACHABLE {
                return Err(TrafficError::UnreachablePair {
                    from: v.origin,
                    to: v.destination,
                });
            }
            if self.vehicles[..i].iter().any(|w| w.origin == v.origin) {
                return Err(bad(format!("vehicle {i} shares its origin with an earlier vehicle")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut horizon = None;
        let mut vehicles = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix("horizon") {
                horizon = Some(h.trim().parse().map_err(|_| bad(format!("line {}: bad horizon", n + 1)))?);
                continue;
            }
            let nums: Vec<i64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("line {}: expected integers", n + 1)))?;
            let [ox, oy, speed, dx, dy] = nums[..] else {
                return Err(bad(format!("line {}: expected `x y speed x y`", n + 1)));
            };
            vehicles.push(VehicleSpec {
                origin: (ox, oy),
                speed,
                destination: (dx, dy),
            });
        }
        Ok(DrivingScenario {
            horizon: horizon.ok_or_else(|| bad("missing `horizon` line"))?,
            vehicles,
        })
    }

    pub fn render(&self) -> String {
        let mut s = format!("horizon {}\n", self.horizon);
        for v in &self.vehicles {
            s.push_str(&format!(
                "{} {} {} {} {}\n",
                v.origin.0, v.origin.1, v.speed, v.destination.0, v.destination.1
            ));
        }
        s
    }
}

/// A family of scenarios: entry cells, each with its allowed destinations,
/// up to `max_vehicles` vehicles at distinct entries and initial speeds
/// `0..=max_speed`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioSpace {
    pub entries: Vec<(Pos, Vec<Pos>)>,
    pub max_vehicles: usize,
    pub max_speed: i64,
    pub horizon: u64,
}

impl ScenarioSpace {
    /// Entries and destinations taken from a network's declared od pairs.
    pub fn from_od_pairs(net: &RoadNetwork, max_vehicles: usize, max_speed: i64, horizon: u64) -> Self {
        let mut entries: Vec<(Pos, Vec<Pos>)> = Vec::new();
        for &(o, d) in net.od_pairs() {
            match entries.iter_mut().find(|(p, _)| *p == o) {
                Some((_, ds)) => ds.push(d),
                None => entries.push((o, vec![d])),
            }
        }
        ScenarioSpace {
            entries,
            max_vehicles,
            max_speed,
            horizon,
        }
    }

    /// Number of scenarios with at least one vehicle.
    pub fn size(&self) -> u128 {
        let choices: Vec<u128> = self
            .entries
            .iter()
            .map(|(_, ds)| ds.len() as u128 * (self.max_speed as u128 + 1))
            .collect();
        // elementary symmetric sums of the per-entry choice counts
        let mut e = vec![0u128; self.max_vehicles + 1];
        e[0] = 1;
        for c in choices {
            for k in (1..=self.max_vehicles).rev() {
                e[k] = e[k].saturating_add(e[k - 1].saturating_mul(c));
            }
        }
        e[1..].iter().fold(0u128, |a, b| a.saturating_add(*b))
    }

    /// Every scenario: by vehicle count, then entry subset in lexicographic
    /// order of entry indices, then per vehicle (destination, speed) with
    /// the last vehicle turning fastest.
    pub fn scenarios(&self) -> Vec<DrivingScenario> {
        let mut out = Vec::new();
        let k_max = self.max_vehicles.min(self.entries.len());
        for k in 1..=k_max {
            let mut subset: Vec<usize> = (0..k).collect();
            loop {
                self.expand(&subset, &mut out);
                if !next_combination(&mut subset, self.entries.len()) {
                    break;
                }
            }
        }
        out
    }

    fn expand(&self, subset: &[usize], out: &mut Vec<DrivingScenario>) {
        let speeds = self.max_speed as usize + 1;
        let radices: Vec<usize> = subset.iter().map(|&e| self.entries[e].1.len() * speeds).collect();
        let mut digits = vec![0usize; subset.len()];
        loop {
            let vehicles = subset
                .iter()
                .zip(&digits)
                .map(|(&e, &d)| VehicleSpec {
                    origin: self.entries[e].0,
                    speed: (d % speeds) as i64,
                    destination: self.entries[e].1[d / speeds],
                })
                .collect();
            out.push(DrivingScenario {
                horizon: self.horizon,
                vehicles,
            });
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < radices[pos] {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl ValueSource for ScenarioSpace {
    /// Uniform vehicle count, then uniform entries, speeds and destinations.
    fn draw(&self, rng: &mut Rng) -> standin::Result<Value> {
        let k_max = self.max_vehicles.min(self.entries.len());
        if k_max == 0 {
            return Err(standin::Error::Unsampleable("scenario space has no entries".into()));
        }
        let k = rng.random_range(1..=k_max);
        let mut chosen: Vec<usize> = index::sample(rng, self.entries.len(), k).into_vec();
        chosen.sort_unstable();
        let vehicles = chosen
            .into_iter()
            .map(|e| {
                let (origin, dests) = &self.entries[e];
                VehicleSpec {
                    origin: *origin,
                    speed: rng.random_range(0..=self.max_speed),
                    destination: dests[rng.random_range(0..dests.len())],
                }
            })
            .collect();
        Ok(DrivingScenario {
            horizon: self.horizon,
            vehicles,
        }
        .to_value())
    }

    fn enumerate(&self, limit: usize) -> standin::Result<Vec<Value>> {
        let size = self.size();
        if size > limit as u128 {
            return Err(standin::Error::ExplosionGuard { size, limit });
        }
        Ok(self.scenarios().iter().map(DrivingScenario::to_value).collect())
    }
}
