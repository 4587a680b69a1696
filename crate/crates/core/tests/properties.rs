use proptest::prelude::*;

use mvrp::assignment::{assign_rule1, assign_rule2, assign_rule3, AssignmentScheme};
use mvrp::instances::{instance_to_string, parse_instance, parse_solution, solution_to_string};
use mvrp::model::{build_cost_matrix, check_feasibility, evaluate, route_cost, PoiId, Route, RoutePlan, Solution};
use mvrp::neighborhoods::{enumerate_neighbors, NeighborhoodKind, NeighborhoodLimits};
use mvrp::svns::{local_search, shake, SvnsParams};
use mvrp::{Instance, Poi, Point, Weights};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

prop_compose! {
    fn arb_instance()(
        pois in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64, 1u32..=8), 0..7),
        vehicles in 1usize..=3,
        steps in prop::collection::vec(0.0..30.0f64, 8),
        team_cost in 0.0..100.0f64,
        w in (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64),
        depot in (-10.0..10.0f64, -10.0..10.0f64),
    ) -> Instance {
        let pois = pois
            .into_iter()
            .enumerate()
            .map(|(i, (x, y, d))| Poi { id: PoiId(i as u32 + 1), location: Point::new(x, y), ugv_demand: d })
            .collect();
        let hri = std::iter::once(0.0).chain(steps.iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) })).collect();
        Instance::new(Point::new(depot.0, depot.1), pois, vehicles, 8, hri, team_cost, Weights::new(w.0, w.1, w.2))
            .unwrap()
    }
}

/// Instance plus a random split of its POIs over the vehicle slots.
fn arb_routed() -> impl Strategy<Value = (Instance, Vec<Route>)> {
    arb_instance().prop_flat_map(|inst| {
        let n = inst.pois().len();
        let m = inst.num_vehicles();
        (Just(inst), Just((1..=n as u32).collect::<Vec<u32>>()).prop_shuffle(), prop::collection::vec(0..m, n))
            .prop_map(move |(inst, ids, slots)| {
                let mut routes = vec![Route::default(); m];
                for (id, slot) in ids.into_iter().zip(slots) {
                    routes[slot].0.push(PoiId(id));
                }
                (inst, routes)
            })
    })
}

fn with_rule(inst: &Instance, routes: &[Route], scheme: AssignmentScheme) -> Solution {
    let m = build_cost_matrix(inst);
    let w = inst.weights();
    Solution::new(routes.iter().map(|r| RoutePlan::new(r.clone(), scheme.assign(r, inst, &m, &w).unwrap())).collect())
}

fn sorted_ids(routes: &[Route]) -> Vec<PoiId> {
    let mut v: Vec<PoiId> = routes.iter().flat_map(|r| r.0.iter().copied()).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn instance_text_round_trip(inst in arb_instance()) {
        let text = instance_to_string(&inst);
        let back: Instance = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_string(&back), text);
    }

    #[test]
    fn solution_text_round_trip((inst, routes) in arb_routed()) {
        let sol = with_rule(&inst, &routes, AssignmentScheme::Rule2);
        let cost = evaluate(&sol, &inst, &build_cost_matrix(&inst)).unwrap();
        let text = solution_to_string(&sol, Some(&cost));
        let (back, back_cost) = parse_solution::<f64>(&text).unwrap();
        prop_assert_eq!(back, sol);
        prop_assert_eq!(back_cost, Some(cost));
    }

    #[test]
    fn every_rule_is_feasible_and_rule3_dominates((inst, routes) in arb_routed()) {
        let m = build_cost_matrix(&inst);
        let w = inst.weights();
        for scheme in AssignmentScheme::ALL {
            prop_assert!(check_feasibility(&with_rule(&inst, &routes, scheme), &inst).is_ok());
        }
        for r in routes.iter().filter(|r| !r.is_empty()) {
            let cost = |a| route_cost(&RoutePlan::new(r.clone(), a), &inst, &m).weighted(&w);
            let r3 = cost(assign_rule3(r, &inst, &m, &w).unwrap());
            prop_assert!(r3 <= cost(assign_rule1(r, &inst).unwrap()));
            prop_assert!(r3 <= cost(assign_rule2(r, &inst).unwrap()));
        }
    }

    #[test]
    fn neighbors_keep_coverage((inst, routes) in arb_routed()) {
        let before = sorted_ids(&routes);
        for kind in NeighborhoodKind::ALL {
            for (_, next) in enumerate_neighbors(&routes, kind, NeighborhoodLimits::default()).take(200) {
                prop_assert_eq!(next.len(), inst.num_vehicles());
                prop_assert_eq!(sorted_ids(&next), before.clone());
                prop_assert!(next.iter().all(|r| !r.has_duplicates()));
            }
        }
    }

    #[test]
    fn shake_and_local_search_stay_feasible((inst, routes) in arb_routed(), k in 0usize..6, seed in any::<u64>()) {
        let m = build_cost_matrix(&inst);
        let w = inst.weights();
        let sol = with_rule(&inst, &routes, AssignmentScheme::Rule1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shaken = shake(&sol, k, &mut rng, &inst, &m, &w);
        prop_assert!(check_feasibility(&shaken, &inst).is_ok());
        let improved = local_search(&shaken, &inst, &m, &w, &SvnsParams::default());
        prop_assert!(check_feasibility(&improved, &inst).is_ok());
        let t0 = evaluate(&shaken, &inst, &m).unwrap().total;
        let t1 = evaluate(&improved, &inst, &m).unwrap().total;
        prop_assert!(t1 <= t0);
    }
}
