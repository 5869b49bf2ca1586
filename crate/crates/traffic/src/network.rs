//! Grid road networks.
//!
//! A network file has a header, a `---` separator and the grid, one
//! character per cell:
//!
//! | char | cell |
//! |------|------|
//! | `.`  | road, every heading |
//! | `>` `<` `^` `v` | one-way road heading E, W, N, S |
//! | `+`  | intersection, every heading |
//! | `#`  | blocked |
//!
//! Header lines are `key value` pairs: `version 1`, `v_max <n>`,
//! `a_max <n>`, `radius <n>`, any number of `od x1 y1 x2 y2` (declared
//! origin/destination pairs, checked for reachability) and
//! `signal x y period=<p> phases=<p1>,<p2>,...` where each phase lists the
//! headings allowed to enter (`NS`, `E`, ...). Each phase lasts `p` ticks.
//! Coordinates are `(x, y)` with `y` growing downwards; `#` starts a comment.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Result, TrafficError};

pub type Pos = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (0, -1),
            Heading::E => (1, 0),
            Heading::S => (0, 1),
            Heading::W => (-1, 0),
        }
    }

    pub fn step(self, (x, y): Pos) -> Pos {
        let (dx, dy) = self.delta();
        (x + dx, y + dy)
    }

    /// Clockwise neighbour: N→E→S→W→N.
    pub fn cw(self) -> Heading {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    pub fn opposite(self) -> Heading {
        self.cw().cw()
    }

    pub fn letter(self) -> char {
        match self {
            Heading::N => 'N',
            Heading::E => 'E',
            Heading::S => 'S',
            Heading::W => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.letter() == c)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A set of headings as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Headings(u8);

impl Headings {
    pub const ALL: Headings = Headings(0b1111);

    pub fn only(h: Heading) -> Self {
        Headings(h.bit())
    }

    pub fn contains(self, h: Heading) -> bool {
        self.0 & h.bit() != 0
    }

    pub fn insert(&mut self, h: Heading) {
        self.0 |= h.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Heading> {
        Heading::ALL.into_iter().filter(move |h| self.contains(*h))
    }

    /// Letters in N, E, S, W order, e.g. `"NS"`.
    pub fn letters(self) -> String {
        self.iter().map(Heading::letter).collect()
    }

    pub fn parse(s: &str) -> Option<Headings> {
        let mut out = Headings::default();
        for c in s.chars() {
            out.insert(Heading::from_letter(c)?);
        }
        (!out.is_empty()).then_some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Blocked,
    Road(Headings),
    Intersection,
}

impl Cell {
    pub fn from_char(c: char) -> Option<Cell> {
        Some(match c {
            '#' => Cell::Blocked,
            '.' => Cell::Road(Headings::ALL),
            '+' => Cell::Intersection,
            '>' => Cell::Road(Headings::only(Heading::E)),
            '<' => Cell::Road(Headings::only(Heading::W)),
            '^' => Cell::Road(Headings::only(Heading::N)),
            'v' => Cell::Road(Headings::only(Heading::S)),
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Blocked => '#',
            Cell::Intersection => '+',
            Cell::Road(h) if h == Headings::ALL => '.',
            Cell::Road(h) => match h.iter().next() {
                Some(Heading::E) => '>',
                Some(Heading::W) => '<',
                Some(Heading::N) => '^',
                _ => 'v',
            },
        }
    }

    pub fn passable(self) -> bool {
        self != Cell::Blocked
    }

    /// Whether a vehicle may travel through this cell with heading `h`.
    pub fn allows(self, h: Heading) -> bool {
        match self {
            Cell::Blocked => false,
            Cell::Intersection => true,
            Cell::Road(hs) => hs.contains(h),
        }
    }
}

/// Periodic entry permissions for one intersection cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signal {
    pub period: u64,
    pub phases: Vec<Headings>,
}

impl Signal {
    pub fn phase(&self, tick: u64) -> Headings {
        self.phases[((tick / self.period) % self.phases.len() as u64) as usize]
    }

    fn render(&self) -> String {
        let phases: Vec<String> = self.phases.iter().map(|p| p.letters()).collect();
        format!("period={} phases={}", self.period, phases.join(","))
    }
}

/// Per-run vehicle dynamics and observation radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dynamics {
    pub v_max: i64,
    pub a_max: i64,
    pub radius: i64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics {
            v_max: 1,
            a_max: 1,
            radius: 4,
        }
    }
}

#[derive(Debug)]
pub struct RoadNetwork {
    width: i64,
    height: i64,
    cells: Vec<Cell>,
    signals: BTreeMap<Pos, Signal>,
    od_pairs: Vec<(Pos, Pos)>,
    distances: Vec<OnceLock<Vec<u32>>>,
}

impl Clone for RoadNetwork {
    fn clone(&self) -> Self {
        RoadNetwork {
            width: self.width,
            height: self.height,
            cells: self.cells.clone(),
            signals: self.signals.clone(),
            od_pairs: self.od_pairs.clone(),
            distances: (0..self.cells.len()).map(|_| OnceLock::new()).collect(),
        }
    }
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.cells == other.cells
            && self.signals == other.signals
            && self.od_pairs == other.od_pairs
    }
}

pub const UNREACHABLE: u32 = u32::MAX;

fn malformed(line: usize, reason: impl Into<String>) -> TrafficError {
    TrafficError::MalformedSpec {
        line,
        reason: reason.into(),
    }
}

impl RoadNetwork {
    /// Validates a grid, its signals and declared origin/destination pairs.
    pub fn build(rows: &[&str], signals: BTreeMap<Pos, Signal>, od_pairs: Vec<(Pos, Pos)>) -> Result<Self> {
        Self::build_at(rows, signals, od_pairs, 0)
    }

    fn build_at(
        rows: &[&str],
        signals: BTreeMap<Pos, Signal>,
        od_pairs: Vec<(Pos, Pos)>,
        first_line: usize,
    ) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if width == 0 || height == 0 {
            return Err(malformed(first_line, "empty grid"));
        }
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(malformed(first_line + y, format!("row has {} cells, expected {width}", row.chars().count())));
            }
            for c in row.chars() {
                cells.push(Cell::from_char(c).ok_or_else(|| malformed(first_line + y, format!("unknown cell `{c}`")))?);
            }
        }
        let net = RoadNetwork {
            width: width as i64,
            height: height as i64,
            distances: (0..cells.len()).map(|_| OnceLock::new()).collect(),
            cells,
            signals,
            od_pairs,
        };
        for (pos, sig) in &net.signals {
            if net.cell(*pos) != Some(Cell::Intersection) {
                return Err(malformed(0, format!("signal at ({}, {}) is not on an intersection", pos.0, pos.1)));
            }
            if sig.period == 0 || sig.phases.is_empty() {
                return Err(malformed(0, "signal needs a positive period and at least one phase"));
            }
        }
        for &(from, to) in &net.od_pairs {
            for p in [from, to] {
                if !net.passable(p) {
                    return Err(malformed(0, format!("od endpoint ({}, {}) is not a road cell", p.0, p.1)));
                }
            }
            if net.distance(from, to) == UNREACHABLE {
                return Err(TrafficError::UnreachablePair { from, to });
            }
        }
        Ok(net)
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    fn index(&self, (x, y): Pos) -> Option<usize> {
        ((0..self.width).contains(&x) && (0..self.height).contains(&y)).then(|| (y * self.width + x) as usize)
    }

    pub fn cell(&self, p: Pos) -> Option<Cell> {
        self.index(p).map(|i| self.cells[i])
    }

    pub fn passable(&self, p: Pos) -> bool {
        self.cell(p).is_some_and(Cell::passable)
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(|p| self.passable(*p))
    }

    pub fn signals(&self) -> &BTreeMap<Pos, Signal> {
        &self.signals
    }

    pub fn signal(&self, p: Pos) -> Option<&Signal> {
        self.signals.get(&p)
    }

    pub fn od_pairs(&self) -> &[(Pos, Pos)] {
        &self.od_pairs
    }

    /// The cell reached by one move from `from` with heading `h`, if legal:
    /// both cells must allow `h`.
    pub fn step(&self, from: Pos, h: Heading) -> Option<Pos> {
        let to = h.step(from);
        (self.cell(from)?.allows(h) && self.cell(to)?.allows(h)).then_some(to)
    }

    /// Whether moving into `to` with heading `h` at `tick` runs a red light.
    pub fn red_light(&self, from: Pos, to: Pos, h: Heading, tick: u64) -> bool {
        match (self.cell(from), self.signal(to)) {
            (Some(Cell::Road(_)), Some(sig)) => !sig.phase(tick).contains(h),
            _ => false,
        }
    }

    fn distances_to(&self, dest: Pos) -> &[u32] {
        let i = self.index(dest).expect("destination inside grid");
        self.distances[i].get_or_init(|| {
            let mut dist = vec![UNREACHABLE; self.cells.len()];
            if !self.passable(dest) {
                return dist;
            }
            dist[i] = 0;
            let mut queue = VecDeque::from([dest]);
            while let Some(p) = queue.pop_front() {
                let d = dist[self.index(p).unwrap()];
                for h in Heading::ALL {
                    let q = h.opposite().step(p);
                    if self.step(q, h) == Some(p) {
                        let j = self.index(q).unwrap();
                        if dist[j] == UNREACHABLE {
                            dist[j] = d + 1;
                            queue.push_back(q);
                        }
                    }
                }
            }
            dist
        })
    }

    /// Length of the shortest legal path, or [`UNREACHABLE`].
    pub fn distance(&self, from: Pos, to: Pos) -> u32 {
        match (self.index(from), self.index(to)) {
            (Some(i), Some(_)) => self.distances_to(to)[i],
            _ => UNREACHABLE,
        }
    }

    /// Up to `max_len` headings of a shortest path; ties go N, E, S, W.
    pub fn route(&self, from: Pos, to: Pos, max_len: usize) -> Vec<Heading> {
        self.route_avoiding(from, to, max_len, |_| false)
    }

    /// A shortest path that, among equally short next hops, prefers cells
    /// for which `occupied` is false; remaining ties go N, E, S, W.
    pub fn route_avoiding(&self, from: Pos, to: Pos, max_len: usize, occupied: impl Fn(Pos) -> bool) -> Vec<Heading> {
        let mut out = Vec::new();
        let mut p = from;
        let mut d = self.distance(p, to);
        while d != 0 && d != UNREACHABLE && out.len() < max_len {
            let hops: Vec<(Heading, Pos)> = Heading::ALL
                .into_iter()
                .filter_map(|h| self.step(p, h).filter(|q| self.distance(*q, to) == d - 1).map(|q| (h, q)))
                .collect();
            let next = hops.iter().find(|(_, q)| !occupied(*q)).or(hops.first()).copied();
            let Some((h, q)) = next else { break };
            out.push(h);
            p = q;
            d -= 1;
        }
        out
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|y| (0..self.width).map(|x| self.cell((x, y)).unwrap().to_char()).collect())
            .collect()
    }
}

/// A parsed network file: the network plus the dynamics in its header.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkFile {
    pub network: RoadNetwork,
    pub dynamics: Dynamics,
}

fn parse_int(line: usize, key: &str, s: Option<&str>) -> Result<i64> {
    s.and_then(|v| v.parse().ok())
        .ok_or_else(|| malformed(line, format!("`{key}` needs an integer")))
}

pub fn build_network(text: &str) -> Result<NetworkFile> {
    let mut dynamics = Dynamics::default();
    let mut signals = BTreeMap::new();
    let mut od_pairs = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut grid_start = None;
    for (n, raw) in lines.by_ref() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if raw.trim() == "---" {
            grid_start = Some(n + 1);
            break;
        }
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let key = words.next().unwrap();
        match key {
            "version" => {
                if parse_int(n, key, words.next())? != 1 {
                    return Err(malformed(n, "unsupported version"));
                }
            }
            "v_max" => dynamics.v_max = parse_int(n, key, words.next())?,
            "a_max" => dynamics.a_max = parse_int(n, key, words.next())?,
            "radius" => dynamics.radius = parse_int(n, key, words.next())?,
            "od" => {
                let v: Vec<i64> = (0..4).map(|_| parse_int(n, key, words.next())).collect::<Result<_>>()?;
                od_pairs.push(((v[0], v[1]), (v[2], v[3])));
            }
            "signal" => {
                let x = parse_int(n, key, words.next())?;
                let y = parse_int(n, key, words.next())?;
                let (mut period, mut phases) = (None, None);
                for w in words.by_ref() {
                    if let Some(p) = w.strip_prefix("period=") {
                        period = p.parse::<u64>().ok();
                    } else if let Some(p) = w.strip_prefix("phases=") {
                        phases = p.split(',').map(Headings::parse).collect::<Option<Vec<_>>>();
                    } else {
                        return Err(malformed(n, format!("unexpected `{w}`")));
                    }
                }
                let (Some(period), Some(phases)) = (period, phases) else {
                    return Err(malformed(n, "signal needs period=<ticks> and phases=<headings>,..."));
                };
                signals.insert((x, y), Signal { period, phases });
            }
            other => return Err(malformed(n, format!("unknown key `{other}`"))),
        }
        if let Some(extra) = words.next() {
            return Err(malformed(n, format!("unexpected `{extra}`")));
        }
    }
    let Some(start) = grid_start else {
        return Err(malformed(0, "missing `---` before the grid"));
    };
    let rows: Vec<&str> = lines.map(|(_, l)| l.trim_end()).filter(|l| !l.is_empty()).collect();
    if dynamics.v_max < 1 || dynamics.a_max < 1 || dynamics.radius < 0 {
        return Err(malformed(0, "v_max and a_max must be ≥ 1, radius ≥ 0"));
    }
    Ok(NetworkFile {
        network: RoadNetwork::build_at(&rows, signals, od_pairs, start)?,
        dynamics,
    })
}

/// Renders a network file that [`build_network`] reads back.
pub fn render_network(net: &RoadNetwork, dynamics: &Dynamics) -> String {
    let mut s = format!(
        "version 1\nv_max {}\na_max {}\nradius {}\n",
        dynamics.v_max, dynamics.a_max, dynamics.radius
    );
    for ((x, y), sig) in net.signals() {
        s.push_str(&format!("signal {x} {y} {}\n", sig.render()));
    }
    for ((a, b), (c, d)) in net.od_pairs() {
        s.push_str(&format!("od {a} {b} {c} {d}\n"));
    }
    s.push_str("---\n");
    for row in net.rows() {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_road() {
        let f = build_network("v_max 1\nod 0 0 9 0\n---\n>>>>>>>>>>\n").unwrap();
        assert_eq!(f.network.width(), 10);
        assert_eq!(f.network.distance((0, 0), (9, 0)), 9);
        assert_eq!(f.network.distance((9, 0), (0, 0)), UNREACHABLE);
        assert_eq!(f.network.route((0, 0), (9, 0), 3), [Heading::E; 3]);
    }

    #[test]
    fn signal_grid() {
        let text = "signal 2 2 period=3 phases=E,S\n---\n##v##\n##v##\n>>+>>\n##v##\n##v##\n";
        let f = build_network(text).unwrap();
        let sig = f.network.signal((2, 2)).unwrap();
        assert!(sig.phase(0).contains(Heading::E));
        assert!(sig.phase(3).contains(Heading::S));
        assert!(f.network.red_light((2, 1), (2, 2), Heading::S, 0));
        assert!(!f.network.red_light((1, 2), (2, 2), Heading::E, 0));
        assert_eq!(build_network(&render_network(&f.network, &f.dynamics)).unwrap(), f);
    }

    #[test]
    fn bad_specs() {
        assert!(matches!(
            build_network("od 0 0 1 0\n---\n>#\n"),
            Err(TrafficError::MalformedSpec { .. })
        ));
        assert!(matches!(
            build_network("od 1 0 0 0\n---\n>>\n"),
            Err(TrafficError::UnreachablePair { .. })
        ));
        assert!(build_network("---\n>x\n").is_err());
        assert!(build_network(">>\n").is_err());
        assert!(build_network("signal 0 0 period=0 phases=E\n---\n+>\n").is_err());
    }

    #[test]
    fn one_way_cells_refuse_wrong_heading() {
        let f = build_network("---\n.<\n").unwrap();
        assert_eq!(f.network.step((0, 0), Heading::E), None);
        assert_eq!(f.network.step((1, 0), Heading::W), Some((0, 0)));
    }
}
