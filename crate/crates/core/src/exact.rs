//! Exhaustive optimum for small instances.
//!
//! The objective separates over routes once the partition of POIs into routes
//! is fixed, and for a fixed route order the assignment DP is exact. So the
//! enumeration first finds, for every POI subset, its best visiting order over
//! all permutations (both orientations included), then scans every set
//! partition into at most `num_vehicles` blocks. Nothing is pruned.

use thiserror::Error;

use crate::assignment::assign_rule3;
use crate::model::{
    build_cost_matrix, evaluate_with, route_cost, CostBreakdown, Instance, PoiId, Route, RoutePlan, Solution, Weights,
};
use crate::scalar::Scalar;

pub const EXACT_MAX_POIS: usize = 8;
pub const EXACT_MAX_VEHICLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error(
        "instance too large for exhaustive search: {pois} POIs / {vehicles} vehicles (limits {max_pois} / {max_vehicles})"
    )]
    InstanceTooLarge { pois: usize, vehicles: usize, max_pois: usize, max_vehicles: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult<S> {
    pub solution: Solution,
    pub cost: CostBreakdown<S>,
    /// Route orders evaluated across all subsets.
    pub routes_examined: u64,
    /// Set partitions scanned.
    pub partitions_examined: u64,
}

/// Steps `ids` to the next lexicographic permutation; false after the last.
fn next_permutation(ids: &mut [PoiId]) -> bool {
    let Some(i) = ids.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = ids.iter().rposition(|&x| x > ids[i]).expect("pivot has a successor");
    ids.swap(i, j);
    ids[i + 1..].reverse();
    true
}

pub fn solve_exact<S: Scalar>(instance: &Instance<S>, weights: &Weights<S>) -> Result<ExactResult<S>, ExactError> {
    let n = instance.pois().len();
    let vehicles = instance.num_vehicles();
    if n > EXACT_MAX_POIS || vehicles > EXACT_MAX_VEHICLES {
        return Err(ExactError::InstanceTooLarge {
            pois: n,
            vehicles,
            max_pois: EXACT_MAX_POIS,
            max_vehicles: EXACT_MAX_VEHICLES,
        });
    }
    let matrix = build_cost_matrix(instance);
    let mut ids: Vec<PoiId> = instance.poi_ids().collect();
    ids.sort();

    let full = (1usize << n) - 1;
    let mut best_route: Vec<Option<(S, RoutePlan)>> = vec![None; full + 1];
    let mut routes_examined = 0u64;
    for (mask, slot) in best_route.iter_mut().enumerate().skip(1) {
        if vehicles == 1 && mask != full {
            continue;
        }
        let mut members: Vec<PoiId> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ids[b]).collect();
        let mut best: Option<(S, RoutePlan)> = None;
        loop {
            routes_examined += 1;
            let route = Route(members.clone());
            let assignment = assign_rule3(&route, instance, &matrix, weights).expect("valid instance");
            let plan = RoutePlan::new(route, assignment);
            let cost = route_cost(&plan, instance, &matrix).weighted(weights);
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, plan));
            }
            if !next_permutation(&mut members) {
                break;
            }
        }
        *slot = best;
    }

    // Restricted growth strings: element b goes to an existing block or opens
    // the next one; blocks are thereby ordered by their smallest POI.
    let mut best: Option<(S, Vec<usize>)> = None;
    let mut partitions_examined = 0u64;
    let mut blocks: Vec<usize> = Vec::with_capacity(vehicles);
    fn walk<S: Scalar>(
        b: usize,
        n: usize,
        vehicles: usize,
        blocks: &mut Vec<usize>,
        best_route: &[Option<(S, RoutePlan)>],
        best: &mut Option<(S, Vec<usize>)>,
        count: &mut u64,
    ) {
        if b == n {
            *count += 1;
            let total = blocks
                .iter()
                .map(|&m| best_route[m].as_ref().expect("subset evaluated").0)
                .fold(S::zero(), |a, c| a + c);
            if best.as_ref().is_none_or(|(c, _)| total < *c) {
                *best = Some((total, blocks.clone()));
            }
            return;
        }
        for k in 0..blocks.len() {
            blocks[k] |= 1 << b;
            walk(b + 1, n, vehicles, blocks, best_route, best, count);
            blocks[k] &= !(1 << b);
        }
        if blocks.len() < vehicles {
            blocks.push(1 << b);
            walk(b + 1, n, vehicles, blocks, best_route, best, count);
            blocks.pop();
        }
    }
    walk(0, n, vehicles, &mut blocks, &best_route, &mut best, &mut partitions_examined);

    let mut solution = Solution::empty(vehicles);
    if let Some((_, chosen)) = best {
        for (slot, mask) in chosen.into_iter().enumerate() {
            solution.routes[slot] = best_route[mask].as_ref().expect("subset evaluated").1.clone();
        }
    }
    let cost = evaluate_with(&solution, instance, &matrix, weights).expect("enumerated solutions are feasible");
    Ok(ExactResult { solution, cost, routes_examined, partitions_examined })
}
