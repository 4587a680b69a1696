//! Initial solution: sweep-based mTSP routes, tried forward and reversed,
//! each with rule1 and rule2 assignments.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{assign_rule1, assign_rule2, AssignmentScheme};
use crate::model::{evaluate_unchecked, CostBreakdown, CostMatrix, Instance, PoiId, Route, RoutePlan, Solution};
use crate::neighborhoods::reverse;
use crate::scalar::Scalar;

/// Routes for every vehicle slot.
///
/// POIs are sorted by polar angle around the depot, the circular order is
/// rotated by a seeded offset and cut into `min(num_vehicles, |P|)` arcs of
/// near-equal POI count. Each arc is sequenced by nearest neighbor from the
/// depot and polished with 2-opt until no move shortens it. The arcs are then
/// refined by [`inter_route_descent`]. Surplus slots stay empty.
pub fn build_initial_routes<S: Scalar>(instance: &Instance<S>, matrix: &CostMatrix<S>, seed: u64) -> Vec<Route> {
    let slots = instance.num_vehicles();
    let n = instance.pois().len();
    let mut routes = vec![Route::default(); slots];
    if n == 0 {
        return routes;
    }

    let depot = instance.depot();
    let mut order: Vec<(S, PoiId)> =
        instance.pois().iter().map(|p| ((p.location.y - depot.y).atan2(p.location.x - depot.x), p.id)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0..n);
    order.rotate_left(offset);

    let arcs = slots.min(n);
    let (base, extra) = (n / arcs, n % arcs);
    let mut cursor = 0;
    for (a, slot) in routes.iter_mut().take(arcs).enumerate() {
        let size = base + usize::from(a < extra);
        let members: Vec<PoiId> = order[cursor..cursor + size].iter().map(|&(_, id)| id).collect();
        cursor += size;
        let tour = nearest_neighbor(&members, instance, matrix);
        *slot = two_opt(tour, instance, matrix);
    }
    inter_route_descent(&mut routes[..arcs], instance, matrix);
    routes
}

fn nearest_neighbor<S: Scalar>(members: &[PoiId], instance: &Instance<S>, matrix: &CostMatrix<S>) -> Route {
    let mut left: Vec<(usize, PoiId)> =
        members.iter().map(|&id| (instance.node(id).expect("instance POI"), id)).collect();
    let mut tour = Vec::with_capacity(left.len());
    let mut at = 0;
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if matrix.get(at, left[k].0) < matrix.get(at, left[best].0) {
                best = k;
            }
        }
        let (node, id) = left.remove(best);
        tour.push(id);
        at = node;
    }
    Route(tour)
}

/// Best-improvement 2-opt on a depot-anchored tour. A move is taken only if
/// the recomputed tour length strictly drops, so the loop terminates.
pub(crate) fn two_opt<S: Scalar>(mut route: Route, instance: &Instance<S>, matrix: &CostMatrix<S>) -> Route {
    let n = route.len();
    let mut length = route.length(instance, matrix);
    loop {
        let mut best: Option<(S, usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                route.0[i..=j].reverse();
                let candidate = route.length(instance, matrix);
                route.0[i..=j].reverse();
                if candidate < best.map_or(length, |b| b.0) {
                    best = Some((candidate, i, j));
                }
            }
        }
        match best {
            Some((candidate, i, j)) => {
                route.0[i..=j].reverse();
                length = candidate;
            }
            None => return route,
        }
    }
}

/// Best-improvement descent on total tour length over moves between two
/// routes: relocating a segment of up to three POIs (either orientation),
/// swapping two POIs, and exchanging route tails. Changed routes are
/// re-polished with 2-opt. No route is emptied. Stops when no move strictly
/// shortens the total.
pub fn inter_route_descent<S: Scalar>(routes: &mut [Route], instance: &Instance<S>, matrix: &CostMatrix<S>) {
    let mut lengths: Vec<S> = routes.iter().map(|r| r.length(instance, matrix)).collect();
    loop {
        let mut best: Option<(S, usize, Route, usize, Route)> = None;
        for a in 0..routes.len() {
            for b in 0..routes.len() {
                if a == b {
                    continue;
                }
                for (ra, rb) in pair_moves(&routes[a], &routes[b], a < b) {
                    if ra.is_empty() || rb.is_empty() {
                        continue;
                    }
                    let before = lengths[a] + lengths[b];
                    let delta = ra.length(instance, matrix) + rb.length(instance, matrix) - before;
                    // ignore rounding-level gains so the descent cannot cycle
                    let floor = -S::epsilon() * S::of(64.0) * before;
                    if delta < best.as_ref().map_or(floor, |x| x.0.min(floor)) {
                        best = Some((delta, a, ra, b, rb));
                    }
                }
            }
        }
        let Some((_, a, ra, b, rb)) = best else { return };
        for (i, r) in [(a, ra), (b, rb)] {
            routes[i] = two_opt(r, instance, matrix);
            lengths[i] = routes[i].length(instance, matrix);
        }
    }
}

/// Candidate contents of routes `a` and `b`. Symmetric moves are generated
/// only when `ordered` so each is tried once.
fn pair_moves(a: &Route, b: &Route, ordered: bool) -> Vec<(Route, Route)> {
    let (x, y) = (&a.0, &b.0);
    let mut out = Vec::new();
    for len in 1..=3.min(x.len()) {
        for start in 0..=x.len() - len {
            let seg = &x[start..start + len];
            let rest: Vec<_> = [&x[..start], &x[start + len..]].concat();
            for at in 0..=y.len() {
                for reversed in [false, true] {
                    if reversed && len == 1 {
                        continue;
                    }
                    let mut moved = y[..at].to_vec();
                    if reversed {
                        moved.extend(seg.iter().rev());
                    } else {
                        moved.extend_from_slice(seg);
                    }
                    moved.extend_from_slice(&y[at..]);
                    out.push((Route(rest.clone()), Route(moved)));
                }
            }
        }
    }
    if ordered {
        for p in 0..x.len() {
            for q in 0..y.len() {
                let (mut u, mut v) = (x.clone(), y.clone());
                std::mem::swap(&mut u[p], &mut v[q]);
                out.push((Route(u), Route(v)));
            }
        }
        for i in 0..=x.len() {
            for j in 0..=y.len() {
                // (0, 0) swaps the routes whole; (len, len) changes nothing
                if (i, j) == (0, 0) || (i, j) == (x.len(), y.len()) {
                    continue;
                }
                out.push((Route([&x[..i], &y[j..]].concat()), Route([&y[..j], &x[i..]].concat())));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

/// One of the four construction candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<S> {
    pub orientation: Orientation,
    pub scheme: AssignmentScheme,
    pub solution: Solution,
    pub cost: CostBreakdown<S>,
}

/// The four candidates {forward, reversed} x {rule1, rule2}, in that order.
pub fn construction_candidates<S: Scalar>(
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    seed: u64,
) -> Vec<Candidate<S>> {
    let forward = build_initial_routes(instance, matrix, seed);
    let reversed: Vec<Route> = forward.iter().map(reverse).collect();
    let weights = instance.weights();
    let mut out = Vec::with_capacity(4);
    for (orientation, routes) in [(Orientation::Forward, &forward), (Orientation::Reversed, &reversed)] {
        for scheme in [AssignmentScheme::Rule1, AssignmentScheme::Rule2] {
            let plans = routes
                .iter()
                .map(|route| {
                    let assignment = match scheme {
                        AssignmentScheme::Rule1 => assign_rule1(route, instance),
                        _ => assign_rule2(route, instance),
                    }
                    .expect("valid instances admit rule1 and rule2");
                    RoutePlan::new(route.clone(), assignment)
                })
                .collect();
            let solution = Solution::new(plans);
            let cost = evaluate_unchecked(&solution, instance, matrix, &weights);
            out.push(Candidate { orientation, scheme, solution, cost });
        }
    }
    out
}

/// Cheapest construction candidate; ties keep the earlier one.
pub fn construct<S: Scalar>(instance: &Instance<S>, matrix: &CostMatrix<S>, seed: u64) -> Solution {
    construction_candidates(instance, matrix, seed)
        .into_iter()
        .reduce(|best, c| if c.cost.total < best.cost.total { c } else { best })
        .map(|c| c.solution)
        .expect("four candidates")
}
