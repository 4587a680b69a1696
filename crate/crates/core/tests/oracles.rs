//! Heuristics checked against independent brute-force oracles written here.

use mvrp::construction::{build_initial_routes, construct, construction_candidates};
use mvrp::exact::solve_exact;
use mvrp::instances::{generate, GeneratorSpec};
use mvrp::model::{build_cost_matrix, check_feasibility, evaluate, PoiId, Route};
use mvrp::svns::{local_search, solve, SvnsParams};
use mvrp::{Instance, Weights};

fn small(seed: u64) -> Instance {
    generate(&GeneratorSpec::small(seed)).unwrap()
}

fn permutations(items: &[PoiId]) -> Vec<Vec<PoiId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn tour_length(instance: &Instance, ids: &[PoiId]) -> f64 {
    let depot = instance.depot();
    let mut at = depot;
    let mut len = 0.0;
    for &id in ids {
        let p = instance.poi(id).unwrap().location;
        len += at.distance(&p);
        at = p;
    }
    len + at.distance(&depot)
}

fn shortest_tour(instance: &Instance, ids: &[PoiId]) -> f64 {
    permutations(ids).iter().map(|p| tour_length(instance, p)).fold(f64::INFINITY, f64::min)
}

/// Shortest total length over every split of the POIs into exactly two
/// non-empty tours.
fn two_tour_optimum(instance: &Instance) -> f64 {
    let ids: Vec<PoiId> = instance.poi_ids().collect();
    let n = ids.len();
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let (a, b): (Vec<PoiId>, Vec<PoiId>) =
            ids.iter().enumerate().fold((vec![], vec![]), |(mut a, mut b), (i, &id)| {
                if mask >> i & 1 == 1 {
                    a.push(id)
                } else {
                    b.push(id)
                }
                (a, b)
            });
        best = best.min(shortest_tour(instance, &a) + shortest_tour(instance, &b));
    }
    best
}

#[test]
fn construction_routes_within_five_percent_of_two_tour_optimum() {
    let mut worst: f64 = 0.0;
    for seed in 1..=30 {
        let inst = small(seed);
        let m = build_cost_matrix(&inst);
        let routes = build_initial_routes(&inst, &m, seed);
        let length: f64 = routes.iter().map(|r| r.length(&inst, &m)).sum();
        let opt = two_tour_optimum(&inst);
        assert!(length >= opt - 1e-9);
        worst = worst.max(length / opt - 1.0);
    }
    assert!(worst <= 0.05, "worst construction excess {:.2}%", 100.0 * worst);
}

#[test]
fn travel_heavy_weights_mostly_pick_zero_replenishment() {
    // With alpha well above beta rule1 usually wins, but not always: one
    // replenishment near the depot can still save more HRI than it costs.
    let w = Weights::new(0.6, 0.1, 0.3);
    let mut zero = 0;
    for seed in 1..=30 {
        let inst = small(seed).with_weights(w).unwrap();
        let m = build_cost_matrix(&inst);
        let chosen = evaluate(&construct(&inst, &m, 0), &inst, &m).unwrap();
        if chosen.replenishment_cost == 0.0 {
            zero += 1;
        } else {
            let rule1_best = construction_candidates(&inst, &m, 0)
                .into_iter()
                .filter(|c| c.cost.replenishment_cost == 0.0)
                .map(|c| c.cost.total)
                .fold(f64::INFINITY, f64::min);
            assert!(chosen.total < rule1_best, "seed {seed}");
        }
    }
    assert!(zero >= 24, "{zero}/30 constructions without replenishment");
}

#[test]
fn travel_heavy_weights_skip_replenishment_on_flat_hri() {
    let pois = [(30.0, 40.0, 2), (60.0, 80.0, 9), (90.0, 40.0, 3), (20.0, 70.0, 12)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y, d))| mvrp::Poi { id: PoiId(i as u32 + 1), location: mvrp::Point::new(x, y), ugv_demand: d })
        .collect();
    let hri = (0..=12).map(|n| 10.0 * n as f64).collect();
    let w = Weights::new(0.6, 0.1, 0.3);
    let inst = Instance::new(mvrp::Point::new(0.0, 0.0), pois, 2, 12, hri, 50.0, w).unwrap();
    let m = build_cost_matrix(&inst);
    assert_eq!(evaluate(&construct(&inst, &m, 0), &inst, &m).unwrap().replenishment_cost, 0.0);
}

#[test]
fn construction_candidates_cover_both_rules_and_orientations() {
    let inst = small(3);
    let m = build_cost_matrix(&inst);
    let c = construction_candidates(&inst, &m, 0);
    assert_eq!(c.len(), 4);
    for cand in &c {
        assert!(check_feasibility(&cand.solution, &inst).is_ok());
    }
}

#[test]
fn local_search_from_construction_often_optimal() {
    let mut hits = 0;
    for seed in 1..=30 {
        let inst = small(seed);
        let m = build_cost_matrix(&inst);
        let w = inst.weights();
        let start = construct(&inst, &m, 0);
        let out = local_search(&start, &inst, &m, &w, &SvnsParams::default());
        let total = evaluate(&out, &inst, &m).unwrap().total;
        let opt = solve_exact(&inst, &w).unwrap().cost.total;
        assert!(total >= opt - 1e-9 * opt);
        if (total - opt).abs() <= 1e-9 * opt {
            hits += 1;
        }
    }
    assert!(hits >= 18, "{hits}/30 local optima are global");
}

/// Every non-decreasing team-size profile of one route, costed from first
/// principles.
fn best_assignment_cost(inst: &Instance, ids: &[PoiId], w: &Weights) -> f64 {
    let depot = inst.depot();
    fn walk(t: usize, prev: u32, ids: &[PoiId], inst: &Instance, w: &Weights, depot: mvrp::Point, acc: f64) -> f64 {
        if t == ids.len() {
            return acc;
        }
        let poi = inst.poi(ids[t]).unwrap();
        (prev.max(poi.ugv_demand)..=inst.ugv_capacity())
            .map(|y| {
                let event = if t > 0 && y > prev { w.alpha * depot.distance(&poi.location) } else { 0.0 };
                walk(t + 1, y, ids, inst, w, depot, acc + event + w.beta * inst.hri_table()[y as usize])
            })
            .fold(f64::INFINITY, f64::min)
    }
    walk(0, 0, ids, inst, w, depot, 0.0)
}

/// Every POI-to-vehicle map and every order of every route.
fn brute_force_optimum(inst: &Instance) -> f64 {
    let ids: Vec<PoiId> = inst.poi_ids().collect();
    let w = inst.weights();
    let m = inst.num_vehicles();
    let route_best = |members: &[PoiId]| -> f64 {
        if members.is_empty() {
            return 0.0;
        }
        permutations(members)
            .iter()
            .map(|p| w.alpha * tour_length(inst, p) + best_assignment_cost(inst, p, &w) + w.gamma * inst.team_cost())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = f64::INFINITY;
    for code in 0..m.pow(ids.len() as u32) {
        let mut routes = vec![Vec::new(); m];
        let mut c = code;
        for &id in &ids {
            routes[c % m].push(id);
            c /= m;
        }
        best = best.min(routes.iter().map(|r| route_best(r)).sum());
    }
    best
}

#[test]
fn exact_matches_independent_brute_force() {
    for seed in [2, 9, 17] {
        let inst = small(seed);
        let exact = solve_exact(&inst, &inst.weights()).unwrap();
        let brute = brute_force_optimum(&inst);
        assert!((exact.cost.total - brute).abs() <= 1e-9 * brute, "seed {seed}: {} vs {brute}", exact.cost.total);
    }
}

#[test]
fn exact_never_above_svns_or_construction() {
    for seed in 31..=40 {
        let inst = small(seed);
        let exact = solve_exact(&inst, &inst.weights()).unwrap();
        let svns = solve(&inst, &SvnsParams::with_seed(seed));
        assert!(exact.cost.total <= svns.cost.total + 1e-9);
        assert!(svns.cost.total <= svns.construct_cost.total);
    }
}

#[test]
fn generated_demands_stay_in_range() {
    let mut count = 0;
    for seed in 0..50 {
        let inst = generate::<f64>(&GeneratorSpec::medium(seed)).unwrap();
        for p in inst.pois() {
            assert!((1..=12).contains(&p.ugv_demand));
            count += 1;
        }
    }
    assert_eq!(count, 1000);
    let s = small(7);
    assert_eq!((s.pois().len(), s.num_vehicles()), (5, 2));
}

#[test]
fn route_helper_sanity() {
    let inst = small(1);
    let m = build_cost_matrix(&inst);
    let ids: Vec<PoiId> = inst.poi_ids().collect();
    assert!((Route(ids.clone()).length(&inst, &m) - tour_length(&inst, &ids)).abs() < 1e-9);
}
