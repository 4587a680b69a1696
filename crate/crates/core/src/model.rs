//! Domain types, cost matrix, solution evaluation and feasibility checking.
//!
//! A team is one MGV leader with a number of follower UGVs. Each route slot of
//! a [`Solution`] is served by at most one team; the team leaves the depot
//! with `initial_dispatch` UGVs and may receive replenishment UGVs, sent
//! directly from the depot, at any POI it visits. The team size never shrinks
//! along a route.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> S {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Identifier of a point of interest. Ids are positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoiId(pub u32);

impl fmt::Display for PoiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poi<S> {
    pub id: PoiId,
    pub location: Point<S>,
    /// Number of UGVs the visiting team must hold at this POI.
    pub ugv_demand: u32,
}

/// Objective weights: `alpha` prices travel (path + replenishment), `beta`
/// prices HRI cost and `gamma` prices deployed teams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights<S> {
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
}

impl<S: Scalar> Weights<S> {
    pub fn new(alpha: S, beta: S, gamma: S) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |w: S| w.is_finite() && w >= S::zero();
        ok(self.alpha) && ok(self.beta) && ok(self.gamma) && self.alpha + self.beta + self.gamma > S::zero()
    }
}

impl<S: Scalar> Default for Weights<S> {
    fn default() -> Self {
        Self::new(S::one(), S::one(), S::one())
    }
}

/// A violated [`Instance`] invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceViolation {
    #[error("duplicate POI id {0}")]
    DuplicatePoiId(PoiId),
    #[error("POI id must be >= 1")]
    ZeroPoiId,
    #[error("POI {id}: demand {demand} outside [1, capacity {capacity}]")]
    DemandOutOfRange { id: PoiId, demand: u32, capacity: u32 },
    #[error("POI {0}: non-finite coordinate")]
    NonFinitePoi(PoiId),
    #[error("depot has a non-finite coordinate")]
    NonFiniteDepot,
    #[error("ugv capacity must be >= 1")]
    ZeroCapacity,
    #[error("num_vehicles must be >= 1")]
    NoVehicles,
    #[error("hri table has {found} entries, expected capacity + 1 = {expected}")]
    HriTableLength { found: usize, expected: usize },
    #[error("hri table entry {index} is negative or not finite")]
    HriTableEntry { index: usize },
    #[error("hri table entry 0 must be 0")]
    HriTableNonZeroAtZero,
    #[error("team cost must be finite and >= 0")]
    TeamCost,
    #[error("weights must be finite, >= 0 and not all zero")]
    Weights,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidInstance(pub Vec<InstanceViolation>);

/// A routing instance. Construct with [`Instance::new`], which validates every
/// invariant; fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    depot: Point<S>,
    pois: Vec<Poi<S>>,
    num_vehicles: usize,
    ugv_capacity: u32,
    hri_table: Vec<S>,
    team_cost: S,
    weights: Weights<S>,
    node_of: HashMap<PoiId, usize>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(
        depot: Point<S>,
        pois: Vec<Poi<S>>,
        num_vehicles: usize,
        ugv_capacity: u32,
        hri_table: Vec<S>,
        team_cost: S,
        weights: Weights<S>,
    ) -> Result<Self, InvalidInstance> {
        let mut violations = Vec::new();
        if !(depot.x.is_finite() && depot.y.is_finite()) {
            violations.push(InstanceViolation::NonFiniteDepot);
        }
        if ugv_capacity == 0 {
            violations.push(InstanceViolation::ZeroCapacity);
        }
        if num_vehicles == 0 {
            violations.push(InstanceViolation::NoVehicles);
        }
        let mut node_of = HashMap::with_capacity(pois.len());
        for (index, poi) in pois.iter().enumerate() {
            if poi.id.0 == 0 {
                violations.push(InstanceViolation::ZeroPoiId);
            }
            if node_of.insert(poi.id, index + 1).is_some() {
                violations.push(InstanceViolation::DuplicatePoiId(poi.id));
            }
            if poi.ugv_demand == 0 || poi.ugv_demand > ugv_capacity {
                violations.push(InstanceViolation::DemandOutOfRange {
                    id: poi.id,
                    demand: poi.ugv_demand,
                    capacity: ugv_capacity,
                });
            }
            if !(poi.location.x.is_finite() && poi.location.y.is_finite()) {
                violations.push(InstanceViolation::NonFinitePoi(poi.id));
            }
        }
        let expected = ugv_capacity as usize + 1;
        if hri_table.len() != expected {
            violations.push(InstanceViolation::HriTableLength { found: hri_table.len(), expected });
        }
        for (index, &h) in hri_table.iter().enumerate() {
            if !h.is_finite() || h < S::zero() {
                violations.push(InstanceViolation::HriTableEntry { index });
            }
        }
        if hri_table.first().is_some_and(|&h| h != S::zero()) {
            violations.push(InstanceViolation::HriTableNonZeroAtZero);
        }
        if !team_cost.is_finite() || team_cost < S::zero() {
            violations.push(InstanceViolation::TeamCost);
        }
        if !weights.is_valid() {
            violations.push(InstanceViolation::Weights);
        }
        if !violations.is_empty() {
            return Err(InvalidInstance(violations));
        }
        Ok(Self { depot, pois, num_vehicles, ugv_capacity, hri_table, team_cost, weights, node_of })
    }

    pub fn depot(&self) -> Point<S> {
        self.depot
    }

    pub fn pois(&self) -> &[Poi<S>] {
        &self.pois
    }

    pub fn num_vehicles(&self) -> usize {
        self.num_vehicles
    }

    pub fn ugv_capacity(&self) -> u32 {
        self.ugv_capacity
    }

    pub fn hri_table(&self) -> &[S] {
        &self.hri_table
    }

    pub fn team_cost(&self) -> S {
        self.team_cost
    }

    pub fn weights(&self) -> Weights<S> {
        self.weights
    }

    /// Same instance with different objective weights.
    pub fn with_weights(&self, weights: Weights<S>) -> Result<Self, InvalidInstance> {
        if !weights.is_valid() {
            return Err(InvalidInstance(vec![InstanceViolation::Weights]));
        }
        Ok(Self { weights, ..self.clone() })
    }

    /// Cost-matrix index of a POI (the depot is node 0).
    pub fn node(&self, id: PoiId) -> Option<usize> {
        self.node_of.get(&id).copied()
    }

    pub fn poi(&self, id: PoiId) -> Option<&Poi<S>> {
        self.node(id).map(|n| &self.pois[n - 1])
    }

    /// Demand of a POI known to belong to this instance.
    pub fn demand(&self, id: PoiId) -> u32 {
        self.poi(id).map_or_else(|| panic!("unknown POI {id}"), |p| p.ugv_demand)
    }

    pub fn poi_ids(&self) -> impl Iterator<Item = PoiId> + '_ {
        self.pois.iter().map(|p| p.id)
    }
}

/// Dense symmetric matrix of Euclidean distances; node 0 is the depot and
/// node `i` is the `i`-th POI in instance order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<S> {
    size: usize,
    data: Vec<S>,
}

impl<S: Scalar> CostMatrix<S> {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.size + j]
    }
}

pub fn build_cost_matrix<S: Scalar>(instance: &Instance<S>) -> CostMatrix<S> {
    let points: Vec<Point<S>> =
        std::iter::once(instance.depot()).chain(instance.pois().iter().map(|p| p.location)).collect();
    let size = points.len();
    let mut data = vec![S::zero(); size * size];
    for i in 0..size {
        for j in (i + 1)..size {
            let d = points[i].distance(&points[j]);
            data[i * size + j] = d;
            data[j * size + i] = d;
        }
    }
    CostMatrix { size, data }
}

/// Ordered POI visits of one team; the depot is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Route(pub Vec<PoiId>);

impl Route {
    pub fn new(pois: Vec<PoiId>) -> Self {
        Self(pois)
    }

    pub fn from_ids(ids: &[u32]) -> Self {
        Self(ids.iter().map(|&i| PoiId(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pois(&self) -> &[PoiId] {
        &self.0
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = self.0.clone();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }

    /// Closed tour length depot -> pois -> depot.
    pub fn length<S: Scalar>(&self, instance: &Instance<S>, matrix: &CostMatrix<S>) -> S {
        let mut total = S::zero();
        let mut prev = 0;
        for &id in &self.0 {
            let node = instance.node(id).expect("route POI belongs to instance");
            total = total + matrix.get(prev, node);
            prev = node;
        }
        if prev != 0 {
            total = total + matrix.get(prev, 0);
        }
        total
    }
}

/// UGV plan for one route: the initial dispatch and one replenishment count
/// per route position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment {
    pub initial_dispatch: u32,
    pub replenishments: Vec<u32>,
}

impl Assignment {
    pub fn new(initial_dispatch: u32, replenishments: Vec<u32>) -> Self {
        Self { initial_dispatch, replenishments }
    }

    /// Builds the assignment realizing a non-decreasing team-size profile.
    pub fn from_team_sizes(sizes: &[u32]) -> Self {
        let Some(&first) = sizes.first() else {
            return Self::default();
        };
        let mut replenishments = Vec::with_capacity(sizes.len());
        replenishments.push(0);
        replenishments.extend(sizes.windows(2).map(|w| {
            debug_assert!(w[1] >= w[0], "team sizes must be non-decreasing");
            w[1] - w[0]
        }));
        Self { initial_dispatch: first, replenishments }
    }

    /// Team size `y_t` after any replenishment at each position.
    pub fn team_sizes(&self) -> Vec<u32> {
        self.replenishments
            .iter()
            .scan(self.initial_dispatch, |y, &z| {
                *y += z;
                Some(*y)
            })
            .collect()
    }

    pub fn replenishment_events(&self) -> usize {
        self.replenishments.iter().filter(|&&z| z > 0).count()
    }
}

/// A route served by one team together with its UGV plan.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RoutePlan {
    pub route: Route,
    pub assignment: Assignment,
}

impl RoutePlan {
    pub fn new(route: Route, assignment: Assignment) -> Self {
        Self { route, assignment }
    }
}

/// One [`RoutePlan`] per vehicle slot; empty routes mean the slot's team is
/// not deployed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Solution {
    pub routes: Vec<RoutePlan>,
}

impl Solution {
    pub fn new(routes: Vec<RoutePlan>) -> Self {
        Self { routes }
    }

    pub fn empty(num_vehicles: usize) -> Self {
        Self { routes: vec![RoutePlan::default(); num_vehicles] }
    }

    pub fn deployed_teams(&self) -> usize {
        self.routes.iter().filter(|p| !p.route.is_empty()).count()
    }

    pub fn route_set(&self) -> Vec<Route> {
        self.routes.iter().map(|p| p.route.clone()).collect()
    }

    pub fn poi_count(&self) -> usize {
        self.routes.iter().map(|p| p.route.len()).sum()
    }
}

/// Objective components and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown<S> {
    pub path_cost: S,
    pub replenishment_cost: S,
    pub hri_cost: S,
    pub team_cost_total: S,
    pub total: S,
}

impl<S: Scalar> CostBreakdown<S> {
    /// Builds a breakdown from raw components, computing the weighted total.
    pub fn from_components(path: S, replenishment: S, hri: S, team: S, weights: &Weights<S>) -> Self {
        let total = weights.alpha * (path + replenishment) + weights.beta * hri + weights.gamma * team;
        Self { path_cost: path, replenishment_cost: replenishment, hri_cost: hri, team_cost_total: team, total }
    }

    /// Travel cost: path plus replenishment.
    pub fn travel_cost(&self) -> S {
        self.path_cost + self.replenishment_cost
    }
}

/// A single violated feasibility constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PoiMissing(PoiId),
    PoiDuplicated(PoiId),
    UnknownPoi { route: usize, pos: usize, id: PoiId },
    DemandUnmet { route: usize, pos: usize },
    CapacityExceeded { route: usize, pos: usize },
    AssignmentLengthMismatch { route: usize },
    RouteCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PoiMissing(id) => write!(f, "poi-missing({id})"),
            Violation::PoiDuplicated(id) => write!(f, "poi-duplicated({id})"),
            Violation::UnknownPoi { route, pos, id } => write!(f, "unknown-poi({id}) at (route {route}, pos {pos})"),
            Violation::DemandUnmet { route, pos } => write!(f, "demand-unmet at (route {route}, pos {pos})"),
            Violation::CapacityExceeded { route, pos } => {
                write!(f, "capacity-exceeded at (route {route}, pos {pos})")
            }
            Violation::AssignmentLengthMismatch { route } => write!(f, "assignment-length-mismatch (route {route})"),
            Violation::RouteCount { expected, found } => {
                write!(f, "route-count: expected {expected} slots, found {found}")
            }
        }
    }
}

/// Outcome of [`check_feasibility`]; an empty violation list means feasible.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

pub fn check_feasibility<S: Scalar>(solution: &Solution, instance: &Instance<S>) -> FeasibilityReport {
    let mut violations = Vec::new();
    if solution.routes.len() != instance.num_vehicles() {
        violations.push(Violation::RouteCount { expected: instance.num_vehicles(), found: solution.routes.len() });
    }
    let mut seen: HashMap<PoiId, usize> = HashMap::new();
    for (r, plan) in solution.routes.iter().enumerate() {
        let route = &plan.route;
        for (pos, &id) in route.pois().iter().enumerate() {
            if instance.node(id).is_none() {
                violations.push(Violation::UnknownPoi { route: r, pos, id });
            }
            *seen.entry(id).or_default() += 1;
        }
        if plan.assignment.replenishments.len() != route.len() {
            violations.push(Violation::AssignmentLengthMismatch { route: r });
            continue;
        }
        for (pos, (&id, y)) in route.pois().iter().zip(plan.assignment.team_sizes()).enumerate() {
            if let Some(poi) = instance.poi(id) {
                if y < poi.ugv_demand {
                    violations.push(Violation::DemandUnmet { route: r, pos });
                }
            }
            if y > instance.ugv_capacity() {
                violations.push(Violation::CapacityExceeded { route: r, pos });
            }
        }
    }
    for id in instance.poi_ids() {
        match seen.get(&id).copied().unwrap_or(0) {
            0 => violations.push(Violation::PoiMissing(id)),
            1 => {}
            _ => violations.push(Violation::PoiDuplicated(id)),
        }
    }
    FeasibilityReport { violations }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("infeasible solution: {0}")]
pub struct Infeasible(pub FeasibilityReport);

/// Per-route cost components; summing them over routes gives the solution's
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RouteCost<S> {
    pub path: S,
    pub replenishment: S,
    pub hri: S,
    pub team: S,
}

impl<S: Scalar> RouteCost<S> {
    pub fn weighted(&self, weights: &Weights<S>) -> S {
        weights.alpha * (self.path + self.replenishment) + weights.beta * self.hri + weights.gamma * self.team
    }
}

/// Replenishment and HRI cost of an assignment on a route, summed position by
/// position. No feasibility checks.
pub fn assignment_components<S: Scalar>(
    route: &Route,
    assignment: &Assignment,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
) -> (S, S) {
    let hri = instance.hri_table();
    let mut replenishment = S::zero();
    let mut hri_cost = S::zero();
    let mut y = assignment.initial_dispatch;
    for (&id, &z) in route.pois().iter().zip(&assignment.replenishments) {
        y += z;
        if z > 0 {
            replenishment = replenishment + matrix.get(0, instance.node(id).expect("route POI belongs to instance"));
        }
        hri_cost = hri_cost + hri[y as usize];
    }
    (replenishment, hri_cost)
}

/// Cost components of a single route plan. Empty routes cost nothing.
pub fn route_cost<S: Scalar>(plan: &RoutePlan, instance: &Instance<S>, matrix: &CostMatrix<S>) -> RouteCost<S> {
    if plan.route.is_empty() {
        return RouteCost::default();
    }
    let (replenishment, hri) = assignment_components(&plan.route, &plan.assignment, instance, matrix);
    RouteCost { path: plan.route.length(instance, matrix), replenishment, hri, team: instance.team_cost() }
}

/// Evaluates a solution under the instance's weights.
pub fn evaluate<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
) -> Result<CostBreakdown<S>, Infeasible> {
    evaluate_with(solution, instance, matrix, &instance.weights())
}

/// Evaluates a solution under explicit weights.
pub fn evaluate_with<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Result<CostBreakdown<S>, Infeasible> {
    let report = check_feasibility(solution, instance);
    if !report.is_ok() {
        return Err(Infeasible(report));
    }
    Ok(evaluate_unchecked(solution, instance, matrix, weights))
}

/// Evaluation switches that deviate from the default objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Also charge `hri_table[initial_dispatch]` for each deployed team at the
    /// depot. Off by default.
    pub include_depot_hri: bool,
}

pub fn evaluate_with_options<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
    options: EvalOptions,
) -> Result<CostBreakdown<S>, Infeasible> {
    let report = check_feasibility(solution, instance);
    if !report.is_ok() {
        return Err(Infeasible(report));
    }
    let mut b = evaluate_unchecked(solution, instance, matrix, weights);
    if options.include_depot_hri {
        let depot_hri = solution
            .routes
            .iter()
            .filter(|p| !p.route.is_empty())
            .map(|p| instance.hri_table()[p.assignment.initial_dispatch as usize])
            .fold(S::zero(), |a, h| a + h);
        b = CostBreakdown::from_components(
            b.path_cost,
            b.replenishment_cost,
            b.hri_cost + depot_hri,
            b.team_cost_total,
            weights,
        );
    }
    Ok(b)
}

/// Evaluation without the feasibility check, for solutions known to be valid.
pub(crate) fn evaluate_unchecked<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> CostBreakdown<S> {
    let mut sum = RouteCost::default();
    for plan in &solution.routes {
        let c = route_cost(plan, instance, matrix);
        sum.path = sum.path + c.path;
        sum.replenishment = sum.replenishment + c.replenishment;
        sum.hri = sum.hri + c.hri;
        sum.team = sum.team + c.team;
    }
    CostBreakdown::from_components(sum.path, sum.replenishment, sum.hri, sum.team, weights)
}
