//! Seeded instance generation and the text file formats for instances and
//! solutions. Field names and section order are documented in
//! `docs/format.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    Assignment, CostBreakdown, Instance, InvalidInstance, Poi, PoiId, Point, Route, RoutePlan, Solution, Weights,
};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;
const INSTANCE_MAGIC: &str = "mvrp-instance";
const SOLUTION_MAGIC: &str = "mvrp-solution";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceClass {
    Small,
    Medium,
    Large,
    Custom,
}

impl InstanceClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
            Self::Custom => "custom",
        }
    }
}

impl FromStr for InstanceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(Self::Small),
            "medium" => Ok(Self::Medium),
            "large" => Ok(Self::Large),
            "custom" => Ok(Self::Custom),
            other => Err(format!("unknown instance class '{other}'")),
        }
    }
}

/// Piecewise linear HRI table with one upward jump: `10 n` up to four UGVs,
/// `10 n + 50` from five on.
pub fn default_hri_table(capacity: u32) -> Vec<f64> {
    (0..=capacity).map(|n| if n <= 4 { 10.0 * n as f64 } else { 10.0 * n as f64 + 50.0 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub class: InstanceClass,
    pub num_pois: usize,
    pub num_vehicles: usize,
    pub coord_range: (f64, f64),
    pub demand_range: (u32, u32),
    pub capacity: u32,
    pub hri_table: Vec<f64>,
    pub team_cost: f64,
    pub weights: Weights<f64>,
    pub seed: u64,
}

pub const DEFAULT_CAPACITY: u32 = 12;
pub const DEFAULT_TEAM_COST: f64 = 50.0;

impl GeneratorSpec {
    /// Preset for a class: small 5 POIs / 2 vehicles, medium 20 / 3,
    /// large 40 / 6. Custom starts from the small sizes.
    pub fn preset(class: InstanceClass, seed: u64) -> Self {
        let (num_pois, num_vehicles) = match class {
            InstanceClass::Small | InstanceClass::Custom => (5, 2),
            InstanceClass::Medium => (20, 3),
            InstanceClass::Large => (40, 6),
        };
        Self {
            class,
            num_pois,
            num_vehicles,
            coord_range: (0.0, 100.0),
            demand_range: (1, DEFAULT_CAPACITY),
            capacity: DEFAULT_CAPACITY,
            hri_table: default_hri_table(DEFAULT_CAPACITY),
            team_cost: DEFAULT_TEAM_COST,
            weights: Weights::default(),
            seed,
        }
    }

    pub fn small(seed: u64) -> Self {
        Self::preset(InstanceClass::Small, seed)
    }

    pub fn medium(seed: u64) -> Self {
        Self::preset(InstanceClass::Medium, seed)
    }

    pub fn large(seed: u64) -> Self {
        Self::preset(InstanceClass::Large, seed)
    }

    fn validate(&self) -> Result<(), GenerateError> {
        let fail = |msg: String| Err(GenerateError::InvalidSpec(msg));
        let (lo, hi) = self.coord_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return fail(format!("coord_range ({lo}, {hi}) must be finite with low < high"));
        }
        let (dlo, dhi) = self.demand_range;
        if dlo < 1 || dlo > dhi || dhi > self.capacity {
            return fail(format!("demand_range ({dlo}, {dhi}) must satisfy 1 <= low <= high <= capacity"));
        }
        if self.num_vehicles == 0 {
            return fail("num_vehicles must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Instance(#[from] InvalidInstance),
}

/// Draws the depot, then each POI's coordinates and demand, from a ChaCha8
/// stream seeded with `spec.seed`.
pub fn generate<S: Scalar>(spec: &GeneratorSpec) -> Result<Instance<S>, GenerateError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.coord_range;
    let point = |rng: &mut ChaCha8Rng| Point::new(S::of(rng.gen_range(lo..hi)), S::of(rng.gen_range(lo..hi)));
    let depot = point(&mut rng);
    let pois = (0..spec.num_pois)
        .map(|i| {
            let location = point(&mut rng);
            let ugv_demand = rng.gen_range(spec.demand_range.0..=spec.demand_range.1);
            Poi { id: PoiId(i as u32 + 1), location, ugv_demand }
        })
        .collect();
    let w = spec.weights;
    Ok(Instance::new(
        depot,
        pois,
        spec.num_vehicles,
        spec.capacity,
        spec.hri_table.iter().map(|&h| S::of(h)).collect(),
        S::of(spec.team_cost),
        Weights::new(S::of(w.alpha), S::of(w.beta), S::of(w.gamma)),
    )?)
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: field '{field}': {message}")]
    Parse { line: usize, field: String, message: String },
    #[error(transparent)]
    Validation(#[from] InvalidInstance),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 17 significant digits, so every `f64` survives a round trip.
fn real<S: Scalar>(value: S) -> String {
    format!("{:.16e}", value.as_f64())
}

/// Tokenized non-blank, non-comment lines with their 1-based numbers.
struct Lines<'a> {
    rows: Vec<(usize, Vec<&'a str>)>,
    at: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let rows: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.trim();
                (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
            })
            .collect();
        let last_line = text.lines().count().max(1);
        Self { rows, at: 0, last_line }
    }

    fn err(line: usize, field: &str, message: impl Into<String>) -> FormatError {
        FormatError::Parse { line, field: field.to_string(), message: message.into() }
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.rows.get(self.at).map(|(_, t)| t[0])
    }

    /// Next line, which must start with `key`; returns its line number and
    /// remaining tokens.
    fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        match self.rows.get(self.at) {
            None => Err(Self::err(self.last_line, key, "missing (unexpected end of file)")),
            Some((line, tokens)) if tokens[0] == key => {
                self.at += 1;
                Ok((*line, tokens[1..].to_vec()))
            }
            Some((line, tokens)) => Err(Self::err(*line, key, format!("expected '{key}', found '{}'", tokens[0]))),
        }
    }

    fn done(&self) -> Result<(), FormatError> {
        match self.rows.get(self.at) {
            None => Ok(()),
            Some((line, tokens)) => Err(Self::err(*line, tokens[0], "unexpected trailing content")),
        }
    }
}

fn parse_token<T: FromStr>(line: usize, field: &str, token: Option<&&str>) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| Lines::err(line, field, "missing value"))?;
    token.parse().map_err(|_| Lines::err(line, field, format!("cannot parse '{token}'")))
}

fn parse_exact<T: FromStr>(line: usize, field: &str, tokens: &[&str], count: usize) -> Result<Vec<T>, FormatError> {
    if tokens.len() != count {
        return Err(Lines::err(line, field, format!("expected {count} values, found {}", tokens.len())));
    }
    tokens.iter().map(|t| parse_token(line, field, Some(t))).collect()
}

fn single<T: FromStr>(lines: &mut Lines<'_>, key: &str) -> Result<T, FormatError> {
    let (line, tokens) = lines.expect(key)?;
    Ok(parse_exact::<T>(line, key, &tokens, 1)?.remove(0))
}

fn header(lines: &mut Lines<'_>, magic: &str) -> Result<(), FormatError> {
    lines.expect(magic)?;
    let (line, tokens) = lines.expect("format_version")?;
    let version: u32 = parse_exact(line, "format_version", &tokens, 1)?[0];
    if version != FORMAT_VERSION {
        return Err(Lines::err(line, "format_version", format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn instance_to_string<S: Scalar>(instance: &Instance<S>) -> String {
    let mut out = String::new();
    let w = instance.weights();
    let d = instance.depot();
    writeln!(out, "{INSTANCE_MAGIC}").unwrap();
    writeln!(out, "format_version {FORMAT_VERSION}").unwrap();
    writeln!(out, "capacity {}", instance.ugv_capacity()).unwrap();
    writeln!(out, "team_cost {}", real(instance.team_cost())).unwrap();
    writeln!(out, "num_vehicles {}", instance.num_vehicles()).unwrap();
    writeln!(out, "weights {} {} {}", real(w.alpha), real(w.beta), real(w.gamma)).unwrap();
    let hri: Vec<String> = instance.hri_table().iter().map(|&h| real(h)).collect();
    writeln!(out, "hri_table {}", hri.join(" ")).unwrap();
    writeln!(out, "depot {} {}", real(d.x), real(d.y)).unwrap();
    for p in instance.pois() {
        writeln!(out, "poi {} {} {} {}", p.id, real(p.location.x), real(p.location.y), p.ugv_demand).unwrap();
    }
    out
}

pub fn parse_instance<S: Scalar>(text: &str) -> Result<Instance<S>, FormatError> {
    let mut lines = Lines::new(text);
    header(&mut lines, INSTANCE_MAGIC)?;
    let capacity: u32 = single(&mut lines, "capacity")?;
    let team_cost: f64 = single(&mut lines, "team_cost")?;
    let num_vehicles: usize = single(&mut lines, "num_vehicles")?;
    let (line, tokens) = lines.expect("weights")?;
    let w: Vec<f64> = parse_exact(line, "weights", &tokens, 3)?;
    let (line, tokens) = lines.expect("hri_table")?;
    let hri: Vec<f64> = parse_exact(line, "hri_table", &tokens, capacity as usize + 1)?;
    let (line, tokens) = lines.expect("depot")?;
    let depot: Vec<f64> = parse_exact(line, "depot", &tokens, 2)?;
    let mut pois = Vec::new();
    while lines.peek_key() == Some("poi") {
        let (line, tokens) = lines.expect("poi")?;
        if tokens.len() != 4 {
            return Err(Lines::err(line, "poi", format!("expected 'id x y demand', found {} values", tokens.len())));
        }
        let id: u32 = parse_token(line, "poi.id", tokens.first())?;
        let x: f64 = parse_token(line, "poi.x", tokens.get(1))?;
        let y: f64 = parse_token(line, "poi.y", tokens.get(2))?;
        let demand: u32 = parse_token(line, "poi.demand", tokens.get(3))?;
        pois.push(Poi { id: PoiId(id), location: Point::new(S::of(x), S::of(y)), ugv_demand: demand });
    }
    lines.done()?;
    Ok(Instance::new(
        Point::new(S::of(depot[0]), S::of(depot[1])),
        pois,
        num_vehicles,
        capacity,
        hri.into_iter().map(S::of).collect(),
        S::of(team_cost),
        Weights::new(S::of(w[0]), S::of(w[1]), S::of(w[2])),
    )?)
}

pub fn write_instance<S: Scalar>(instance: &Instance<S>, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, instance_to_string(instance))?;
    Ok(())
}

pub fn read_instance<S: Scalar>(path: impl AsRef<Path>) -> Result<Instance<S>, FormatError> {
    parse_instance(&fs::read_to_string(path)?)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

/// Solution file text; `cost` is echoed as the final line when given.
pub fn solution_to_string<S: Scalar>(solution: &Solution, cost: Option<&CostBreakdown<S>>) -> String {
    let mut out = String::new();
    writeln!(out, "{SOLUTION_MAGIC}").unwrap();
    writeln!(out, "format_version {FORMAT_VERSION}").unwrap();
    writeln!(out, "num_routes {}", solution.routes.len()).unwrap();
    for (i, plan) in solution.routes.iter().enumerate() {
        let pois = join(plan.route.pois());
        let repl = join(&plan.assignment.replenishments);
        let mut line = format!("route {i} pois");
        if !pois.is_empty() {
            line.push(' ');
            line.push_str(&pois);
        }
        line.push_str(&format!(" dispatch {} replenish", plan.assignment.initial_dispatch));
        if !repl.is_empty() {
            line.push(' ');
            line.push_str(&repl);
        }
        writeln!(out, "{line}").unwrap();
    }
    if let Some(c) = cost {
        writeln!(
            out,
            "cost path {} replenishment {} hri {} team {} total {}",
            real(c.path_cost),
            real(c.replenishment_cost),
            real(c.hri_cost),
            real(c.team_cost_total),
            real(c.total)
        )
        .unwrap();
    }
    out
}

pub fn parse_solution<S: Scalar>(text: &str) -> Result<(Solution, Option<CostBreakdown<S>>), FormatError> {
    let mut lines = Lines::new(text);
    header(&mut lines, SOLUTION_MAGIC)?;
    let num_routes: usize = single(&mut lines, "num_routes")?;
    let mut routes = Vec::with_capacity(num_routes);
    for expected in 0..num_routes {
        let (line, tokens) = lines.expect("route")?;
        let index: usize = parse_token(line, "route", tokens.first())?;
        if index != expected {
            return Err(Lines::err(line, "route", format!("expected route index {expected}, found {index}")));
        }
        let keyword = |k: &str| tokens.iter().position(|&t| t == k);
        let (Some(p), Some(d), Some(r)) = (keyword("pois"), keyword("dispatch"), keyword("replenish")) else {
            return Err(Lines::err(line, "route", "expected 'pois ... dispatch N replenish ...'"));
        };
        if !(p == 1 && p < d && d + 2 == r) {
            return Err(Lines::err(line, "route", "fields out of order"));
        }
        let ids: Vec<u32> =
            tokens[p + 1..d].iter().map(|t| parse_token(line, "route.pois", Some(t))).collect::<Result<_, _>>()?;
        let dispatch: u32 = parse_token(line, "route.dispatch", tokens.get(d + 1))?;
        let repl: Vec<u32> =
            tokens[r + 1..].iter().map(|t| parse_token(line, "route.replenish", Some(t))).collect::<Result<_, _>>()?;
        routes.push(RoutePlan::new(Route::from_ids(&ids), Assignment::new(dispatch, repl)));
    }
    let cost = if lines.peek_key() == Some("cost") {
        let (line, tokens) = lines.expect("cost")?;
        let names = ["path", "replenishment", "hri", "team", "total"];
        if tokens.len() != 2 * names.len() || tokens.iter().step_by(2).zip(names).any(|(t, n)| *t != n) {
            return Err(Lines::err(line, "cost", "expected 'path R1 replenishment R2 hri H team T total F'"));
        }
        let values: Vec<f64> = tokens
            .iter()
            .skip(1)
            .step_by(2)
            .zip(names)
            .map(|(t, n)| parse_token(line, &format!("cost.{n}"), Some(t)))
            .collect::<Result<_, _>>()?;
        Some(CostBreakdown {
            path_cost: S::of(values[0]),
            replenishment_cost: S::of(values[1]),
            hri_cost: S::of(values[2]),
            team_cost_total: S::of(values[3]),
            total: S::of(values[4]),
        })
    } else {
        None
    };
    lines.done()?;
    Ok((Solution::new(routes), cost))
}

pub fn write_solution<S: Scalar>(
    solution: &Solution,
    cost: Option<&CostBreakdown<S>>,
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    fs::write(path, solution_to_string(solution, cost))?;
    Ok(())
}

pub fn read_solution<S: Scalar>(path: impl AsRef<Path>) -> Result<(Solution, Option<CostBreakdown<S>>), FormatError> {
    parse_solution(&fs::read_to_string(path)?)
}
