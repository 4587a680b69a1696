//! UGV dispatch and replenishment plans for a fixed route.
//!
//! `rule1` carries the route maximum from the depot and never replenishes,
//! `rule2` tops up deficits whenever a POI asks for more than the team holds,
//! and `rule3` picks the replenishment POIs and amounts optimally for the
//! `alpha * replenishment + beta * hri` objective with a dynamic program over
//! (position, team size). [`assign_oracle`] enumerates every plan and exists
//! to check `rule3`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::model::{route_cost, Assignment, CostMatrix, Instance, PoiId, Route, RouteCost, RoutePlan, Weights};
use crate::scalar::Scalar;

/// Longest route [`assign_oracle`] accepts.
pub const ORACLE_MAX_ROUTE_LEN: usize = 6;
/// Largest UGV capacity [`assign_oracle`] accepts.
pub const ORACLE_MAX_CAPACITY: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("POI {id} demands {demand} UGVs but capacity is {capacity}")]
    InfeasibleRoute { id: PoiId, demand: u32, capacity: u32 },
    #[error("POI {0} is not part of the instance")]
    UnknownPoi(PoiId),
    #[error("assignment oracle refuses route length {len} / capacity {capacity} (limits {max_len} / {max_capacity})")]
    InstanceTooLarge { len: usize, capacity: u32, max_len: usize, max_capacity: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignmentScheme {
    Rule1,
    Rule2,
    Rule3,
}

impl AssignmentScheme {
    pub const ALL: [AssignmentScheme; 3] = [Self::Rule1, Self::Rule2, Self::Rule3];

    pub fn assign<S: Scalar>(
        self,
        route: &Route,
        instance: &Instance<S>,
        matrix: &CostMatrix<S>,
        weights: &Weights<S>,
    ) -> Result<Assignment, AssignmentError> {
        match self {
            Self::Rule1 => assign_rule1(route, instance),
            Self::Rule2 => assign_rule2(route, instance),
            Self::Rule3 => assign_rule3(route, instance, matrix, weights),
        }
    }
}

impl fmt::Display for AssignmentScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rule1 => "rule1",
            Self::Rule2 => "rule2",
            Self::Rule3 => "rule3",
        })
    }
}

fn route_demands<S: Scalar>(route: &Route, instance: &Instance<S>) -> Result<Vec<u32>, AssignmentError> {
    route
        .pois()
        .iter()
        .map(|&id| {
            let poi = instance.poi(id).ok_or(AssignmentError::UnknownPoi(id))?;
            if poi.ugv_demand > instance.ugv_capacity() {
                return Err(AssignmentError::InfeasibleRoute {
                    id,
                    demand: poi.ugv_demand,
                    capacity: instance.ugv_capacity(),
                });
            }
            Ok(poi.ugv_demand)
        })
        .collect()
}

/// Route maximum dispatched from the depot, no replenishment.
pub fn assign_rule1<S: Scalar>(route: &Route, instance: &Instance<S>) -> Result<Assignment, AssignmentError> {
    let demands = route_demands(route, instance)?;
    let max = demands.iter().copied().max().unwrap_or(0);
    Ok(Assignment::new(max, vec![0; demands.len()]))
}

/// Start with the first POI's demand and top up each deficit on arrival.
pub fn assign_rule2<S: Scalar>(route: &Route, instance: &Instance<S>) -> Result<Assignment, AssignmentError> {
    let demands = route_demands(route, instance)?;
    let mut running = 0;
    let sizes: Vec<u32> = demands
        .iter()
        .map(|&d| {
            running = running.max(d);
            running
        })
        .collect();
    Ok(Assignment::from_team_sizes(&sizes))
}

#[inline]
fn position_term<S: Scalar>(weights: &Weights<S>, hri: S, event_cost: S, replenished: bool) -> S {
    let term = weights.beta * hri;
    if replenished {
        term + weights.alpha * event_cost
    } else {
        term
    }
}

/// `alpha * R2 + beta * H` of an assignment on a route, accumulated position
/// by position. This is the quantity `rule3` and the oracle minimize.
pub fn assignment_objective<S: Scalar>(
    route: &Route,
    assignment: &Assignment,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> S {
    let hri = instance.hri_table();
    let mut total = S::zero();
    let mut y = assignment.initial_dispatch;
    for (&id, &z) in route.pois().iter().zip(&assignment.replenishments) {
        y += z;
        let node = instance.node(id).expect("route POI belongs to instance");
        total = total + position_term(weights, hri[y as usize], matrix.get(0, node), z > 0);
    }
    total
}

#[derive(Clone)]
struct DpState<S> {
    cost: S,
    events: usize,
    sizes: Vec<u32>,
}

impl<S: Scalar> DpState<S> {
    /// Cost, then fewer events, then lexicographically smaller profile.
    fn better_than(&self, other: &Self) -> bool {
        if self.cost < other.cost {
            return true;
        }
        if self.cost > other.cost {
            return false;
        }
        match self.events.cmp(&other.events) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.sizes < other.sizes,
        }
    }
}

/// Optimal replenishment plan for a fixed route.
///
/// Dynamic program over (position, team size): at each POI the team either
/// keeps its size or jumps to any larger feasible size, paying one event at
/// the depot-to-POI distance. O(len * capacity^2).
pub fn assign_rule3<S: Scalar>(
    route: &Route,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Result<Assignment, AssignmentError> {
    let demands = route_demands(route, instance)?;
    if demands.is_empty() {
        return Ok(Assignment::default());
    }
    let capacity = instance.ugv_capacity() as usize;
    let hri = instance.hri_table();
    let nodes: Vec<usize> = route.pois().iter().map(|&id| instance.node(id).expect("checked above")).collect();

    let mut layer: Vec<Option<DpState<S>>> = vec![None; capacity + 1];
    for (y, slot) in layer.iter_mut().enumerate().skip(demands[0] as usize) {
        *slot = Some(DpState {
            cost: S::zero() + position_term(weights, hri[y], S::zero(), false),
            events: 0,
            sizes: vec![y as u32],
        });
    }

    for t in 1..demands.len() {
        let event_cost = matrix.get(0, nodes[t]);
        let mut next: Vec<Option<DpState<S>>> = vec![None; capacity + 1];
        for (y, slot) in next.iter_mut().enumerate().skip(demands[t] as usize) {
            let mut best: Option<DpState<S>> = None;
            for (prev_y, prev) in layer.iter().enumerate().take(y + 1) {
                let Some(prev) = prev else { continue };
                let replenished = prev_y < y;
                let candidate = DpState {
                    cost: prev.cost + position_term(weights, hri[y], event_cost, replenished),
                    events: prev.events + usize::from(replenished),
                    sizes: Vec::new(),
                };
                let wins = match &best {
                    None => true,
                    Some(b) => {
                        candidate.cost < b.cost
                            || (candidate.cost == b.cost
                                && (candidate.events < b.events
                                    || (candidate.events == b.events && prev.sizes[..] < b.sizes[..t])))
                    }
                };
                if wins {
                    let mut sizes = Vec::with_capacity(t + 1);
                    sizes.extend_from_slice(&prev.sizes);
                    sizes.push(y as u32);
                    best = Some(DpState { sizes, ..candidate });
                }
            }
            *slot = best;
        }
        layer = next;
    }

    let best = layer
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
        .expect("capacity covers every demand");
    Ok(Assignment::from_team_sizes(&best.sizes))
}

/// Exhaustive search over every non-decreasing team-size profile. Guarded to
/// short routes and small capacities.
pub fn assign_oracle<S: Scalar>(
    route: &Route,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Result<Assignment, AssignmentError> {
    if route.len() > ORACLE_MAX_ROUTE_LEN || instance.ugv_capacity() > ORACLE_MAX_CAPACITY {
        return Err(AssignmentError::InstanceTooLarge {
            len: route.len(),
            capacity: instance.ugv_capacity(),
            max_len: ORACLE_MAX_ROUTE_LEN,
            max_capacity: ORACLE_MAX_CAPACITY,
        });
    }
    let demands = route_demands(route, instance)?;
    if demands.is_empty() {
        return Ok(Assignment::default());
    }
    let capacity = instance.ugv_capacity();
    let mut best: Option<(S, usize, Vec<u32>)> = None;
    let mut sizes = Vec::with_capacity(demands.len());

    fn walk<S: Scalar>(
        t: usize,
        floor: u32,
        capacity: u32,
        demands: &[u32],
        sizes: &mut Vec<u32>,
        visit: &mut dyn FnMut(&[u32]),
    ) {
        if t == demands.len() {
            visit(sizes);
            return;
        }
        for y in floor.max(demands[t])..=capacity {
            sizes.push(y);
            walk::<S>(t + 1, y, capacity, demands, sizes, visit);
            sizes.pop();
        }
    }

    walk::<S>(0, 0, capacity, &demands, &mut sizes, &mut |profile| {
        let assignment = Assignment::from_team_sizes(profile);
        let cost = assignment_objective(route, &assignment, instance, matrix, weights);
        let events = assignment.replenishment_events();
        let better = match &best {
            None => true,
            Some((c, e, s)) => cost < *c || (cost == *c && (events < *e || (events == *e && profile < s.as_slice()))),
        };
        if better {
            best = Some((cost, events, profile.to_vec()));
        }
    });
    let (_, _, sizes) = best.expect("at least one profile exists");
    Ok(Assignment::from_team_sizes(&sizes))
}

/// Better of rule1 and rule2 for one route by weighted route cost; ties keep
/// rule1. Empty routes get an empty assignment.
pub fn best_construction_plan<S: Scalar>(
    route: Route,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Result<(RoutePlan, RouteCost<S>), AssignmentError> {
    let assignment = assign_rule1(&route, instance)?;
    let first = RoutePlan::new(route, assignment);
    if first.route.is_empty() {
        return Ok((first, RouteCost::default()));
    }
    let first_cost = route_cost(&first, instance, matrix);
    let second = RoutePlan::new(first.route.clone(), assign_rule2(&first.route, instance)?);
    let second_cost = route_cost(&second, instance, matrix);
    if second_cost.weighted(weights) < first_cost.weighted(weights) {
        Ok((second, second_cost))
    } else {
        Ok((first, first_cost))
    }
}
