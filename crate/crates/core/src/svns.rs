//! Skewed variable neighborhood search.
//!
//! Starting from the construction heuristic, each iteration shakes the
//! current center with `k` random intra-route swaps, descends with
//! best-improvement local search over five neighborhoods, and then either
//! recenters on an improvement, recenters on a worse solution whose relative
//! gap falls inside `[recenter_gap_low, recenter_gap_high]` percent, or
//! escalates `k`. The best solution ever seen is returned.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{assign_rule3, best_construction_plan};
use crate::construction::construct;
use crate::model::{
    build_cost_matrix, evaluate_unchecked, route_cost, CostBreakdown, CostMatrix, Instance, Route, RoutePlan, Solution,
    Weights,
};
use crate::neighborhoods::{enumerate_moves, swap_intra, NeighborhoodKind, NeighborhoodLimits, DEFAULT_MAX_SEG_LEN};
use crate::scalar::Scalar;

/// A local-search neighborhood: a route neighborhood (changed routes get
/// assignments per [`CandidateAssignment`]) or rule3 reassignment of fixed
/// routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalSearchNeighborhood {
    Route(NeighborhoodKind),
    AssignRule3,
}

impl LocalSearchNeighborhood {
    /// Local-search order: 2-opt-intra, remove-insert, swap-inter,
    /// seq-exchange, rule3.
    pub const ALL: [LocalSearchNeighborhood; 5] = [
        Self::Route(NeighborhoodKind::TwoOptIntra),
        Self::Route(NeighborhoodKind::RemoveInsert),
        Self::Route(NeighborhoodKind::SwapInter),
        Self::Route(NeighborhoodKind::SeqExchange),
        Self::AssignRule3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Route(kind) => kind.name(),
            Self::AssignRule3 => "asgn-rule3",
        }
    }
}

impl fmt::Display for LocalSearchNeighborhood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LocalSearchNeighborhood {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|n| n.name() == s).ok_or_else(|| format!("unknown neighborhood '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvnsParams {
    pub k_max: usize,
    pub unimproved_max: usize,
    /// Lower bound of the recentering window, percent.
    pub recenter_gap_low: f64,
    /// Upper bound of the recentering window, percent.
    pub recenter_gap_high: f64,
    pub max_seg_len: usize,
    /// Sequence exchange may relocate a segment into an insertion slot.
    pub relocate_segments: bool,
    pub seed: u64,
    /// Local-search neighborhoods, visited in this order.
    pub neighborhoods: Vec<LocalSearchNeighborhood>,
    /// How route-neighborhood candidates are assigned before comparison.
    pub candidate_assignment: CandidateAssignment,
    /// Hard stop on shake + local-search rounds.
    pub max_rounds: usize,
}

impl Default for SvnsParams {
    fn default() -> Self {
        Self {
            k_max: 30,
            unimproved_max: 40,
            recenter_gap_low: 20.0,
            recenter_gap_high: 50.0,
            max_seg_len: DEFAULT_MAX_SEG_LEN,
            relocate_segments: true,
            seed: 0,
            neighborhoods: LocalSearchNeighborhood::ALL.to_vec(),
            candidate_assignment: CandidateAssignment::Optimal,
            max_rounds: 100_000,
        }
    }
}

impl SvnsParams {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn limits(&self) -> NeighborhoodLimits {
        NeighborhoodLimits { max_seg_len: self.max_seg_len, relocate_segments: self.relocate_segments }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k_max == 0 {
            return Err("k_max must be >= 1".into());
        }
        if self.unimproved_max == 0 {
            return Err("unimproved_max must be >= 1".into());
        }
        if !(0.0 <= self.recenter_gap_low && self.recenter_gap_low <= self.recenter_gap_high) {
            return Err("recentering window needs 0 <= low <= high".into());
        }
        if self.max_seg_len == 0 {
            return Err("max_seg_len must be >= 1".into());
        }
        Ok(())
    }
}

/// Outcome of one shake + local-search round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Construct,
    Improved,
    Recentered,
    Rejected,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Self::Construct => "construct",
            Self::Improved => "improved",
            Self::Recentered => "recentered",
            Self::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S> {
    pub iteration: usize,
    pub phase: Phase,
    /// Shake intensity used this round.
    pub k: usize,
    pub unimproved: usize,
    /// Local-search result of this round.
    pub candidate_total: S,
    /// Center after the round's decision.
    pub current_total: S,
    pub incumbent_total: S,
    /// `100 * (candidate - center) / center`, against the center before the
    /// decision.
    pub gap_pct: S,
    /// Last neighborhood that improved during local search.
    pub neighborhood: Option<LocalSearchNeighborhood>,
    pub recentered: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTrace<S> {
    pub records: Vec<TraceRecord<S>>,
}

pub const TRACE_CSV_HEADER: [&str; 10] = [
    "iteration",
    "phase",
    "k",
    "unimproved",
    "candidate_total",
    "current_total",
    "incumbent_total",
    "gap_pct",
    "neighborhood",
    "recentered",
];

impl<S: Scalar> SearchTrace<S> {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRACE_CSV_HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.phase.name().to_string(),
                r.k.to_string(),
                r.unimproved.to_string(),
                format!("{:.6}", r.candidate_total),
                format!("{:.6}", r.current_total),
                format!("{:.6}", r.incumbent_total),
                format!("{:.6}", r.gap_pct),
                r.neighborhood.map_or(String::new(), |n| n.name().to_string()),
                r.recentered.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Applies `max(1, k)` random intra-route swaps, each on a uniformly chosen
/// route with at least two POIs, then recomputes every route's assignment as
/// the better of rule1/rule2. Returns the input unchanged when no route can
/// be swapped.
pub fn shake<S: Scalar, R: Rng>(
    solution: &Solution,
    k: usize,
    rng: &mut R,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Solution {
    let eligible: Vec<usize> =
        solution.routes.iter().enumerate().filter(|(_, p)| p.route.len() >= 2).map(|(i, _)| i).collect();
    if eligible.is_empty() {
        return solution.clone();
    }
    let mut routes = solution.route_set();
    for _ in 0..k.max(1) {
        let r = eligible[rng.gen_range(0..eligible.len())];
        let n = routes[r].len();
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        routes[r] = swap_intra(&routes[r], i, j).expect("distinct in-range positions");
    }
    complete_with_construction_rules(routes, instance, matrix, weights)
}

fn complete_with_construction_rules<S: Scalar>(
    routes: Vec<Route>,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> Solution {
    Solution::new(
        routes
            .into_iter()
            .map(|r| best_construction_plan(r, instance, matrix, weights).expect("valid instance").0)
            .collect(),
    )
}

/// Assignment given to routes changed by a route-neighborhood move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateAssignment {
    /// Better of rule1 and rule2.
    ConstructionRules,
    /// Rule3 dynamic program.
    Optimal,
}

fn complete_route<S: Scalar>(
    route: Route,
    mode: CandidateAssignment,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
) -> RoutePlan {
    match mode {
        CandidateAssignment::ConstructionRules => {
            best_construction_plan(route, instance, matrix, weights).expect("valid instance").0
        }
        CandidateAssignment::Optimal => {
            let assignment = assign_rule3(&route, instance, matrix, weights).expect("valid instance");
            RoutePlan::new(route, assignment)
        }
    }
}

struct Current<S> {
    solution: Solution,
    route_costs: Vec<S>,
    total: S,
}

impl<S: Scalar> Current<S> {
    fn new(solution: Solution, instance: &Instance<S>, matrix: &CostMatrix<S>, weights: &Weights<S>) -> Self {
        let route_costs = solution.routes.iter().map(|p| route_cost(p, instance, matrix).weighted(weights)).collect();
        let total = evaluate_unchecked(&solution, instance, matrix, weights).total;
        Self { solution, route_costs, total }
    }
}

/// Best neighbor of `current` in one neighborhood, or `None` if the
/// neighborhood is empty. Candidates are ranked by the sum of per-route
/// weighted costs; ties keep the earliest in enumeration order.
fn best_neighbor<S: Scalar>(
    neighborhood: LocalSearchNeighborhood,
    current: &Current<S>,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
    limits: NeighborhoodLimits,
    candidate_assignment: CandidateAssignment,
) -> Option<Solution> {
    let kind = match neighborhood {
        LocalSearchNeighborhood::AssignRule3 => {
            let plans = current
                .solution
                .routes
                .iter()
                .map(|p| {
                    let assignment = assign_rule3(&p.route, instance, matrix, weights).expect("valid instance");
                    RoutePlan::new(p.route.clone(), assignment)
                })
                .collect();
            return Some(Solution::new(plans));
        }
        LocalSearchNeighborhood::Route(kind) => kind,
    };
    let routes = current.solution.route_set();
    let mut best: Option<(S, Vec<(usize, RoutePlan)>)> = None;
    let mut changed: Vec<(usize, RoutePlan, S)> = Vec::with_capacity(2);
    for mv in enumerate_moves(&routes, kind, limits) {
        let touched = mv.touched(&routes, limits.max_seg_len).expect("enumerated moves are in range");
        changed.clear();
        for (index, route) in touched.iter() {
            let plan = complete_route(route.clone(), candidate_assignment, instance, matrix, weights);
            let cost = route_cost(&plan, instance, matrix).weighted(weights);
            changed.push((index, plan, cost));
        }
        let mut sum = S::zero();
        for (index, &old) in current.route_costs.iter().enumerate() {
            let cost = changed.iter().find(|c| c.0 == index).map_or(old, |c| c.2);
            sum = sum + cost;
        }
        if best.as_ref().is_none_or(|(b, _)| sum < *b) {
            best = Some((sum, changed.iter().map(|(i, p, _)| (*i, p.clone())).collect()));
        }
    }
    best.map(|(_, plans)| {
        let mut solution = current.solution.clone();
        for (index, plan) in plans {
            solution.routes[index] = plan;
        }
        solution
    })
}

/// Local search result together with the last neighborhood that improved.
pub struct LocalSearchOutcome<S> {
    pub solution: Solution,
    pub total: S,
    pub last_improving: Option<LocalSearchNeighborhood>,
}

/// Sequential best-improvement descent over `params.neighborhoods`.
///
/// The first neighborhood is searched until it fails to improve, then the
/// next; any improvement restarts from the first. Stops when every
/// neighborhood fails.
pub fn local_search<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
    params: &SvnsParams,
) -> Solution {
    local_search_outcome(solution, instance, matrix, weights, params).solution
}

pub fn local_search_outcome<S: Scalar>(
    solution: &Solution,
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    weights: &Weights<S>,
    params: &SvnsParams,
) -> LocalSearchOutcome<S> {
    let mut current = Current::new(solution.clone(), instance, matrix, weights);
    let mut last_improving = None;
    let mut j = 0;
    while j < params.neighborhoods.len() {
        let neighborhood = params.neighborhoods[j];
        let candidate = best_neighbor(
            neighborhood,
            &current,
            instance,
            matrix,
            weights,
            params.limits(),
            params.candidate_assignment,
        );
        if let Some(candidate) = candidate {
            let next = Current::new(candidate, instance, matrix, weights);
            if next.total < current.total {
                current = next;
                last_improving = Some(neighborhood);
                j = 0;
                continue;
            }
        }
        j += 1;
    }
    LocalSearchOutcome { solution: current.solution, total: current.total, last_improving }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub solution: Solution,
    pub cost: CostBreakdown<S>,
    pub construct_solution: Solution,
    pub construct_cost: CostBreakdown<S>,
    pub trace: SearchTrace<S>,
}

impl<S: Scalar> SolveResult<S> {
    /// Percentage decrease of the total from construction to the result.
    pub fn improvement_pct(&self) -> S {
        if self.construct_cost.total > S::zero() {
            S::of(100.0) * (self.construct_cost.total - self.cost.total) / self.construct_cost.total
        } else {
            S::zero()
        }
    }
}

/// Runs the full search on an instance with its own weights.
pub fn solve<S: Scalar>(instance: &Instance<S>, params: &SvnsParams) -> SolveResult<S> {
    let matrix = build_cost_matrix(instance);
    solve_with_matrix(instance, &matrix, params)
}

pub fn solve_with_matrix<S: Scalar>(
    instance: &Instance<S>,
    matrix: &CostMatrix<S>,
    params: &SvnsParams,
) -> SolveResult<S> {
    let weights = instance.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let gap_low = S::of(params.recenter_gap_low);
    let gap_high = S::of(params.recenter_gap_high);
    let hundred = S::of(100.0);

    let construct_solution = construct(instance, matrix, params.seed);
    let construct_cost = evaluate_unchecked(&construct_solution, instance, matrix, &weights);
    let mut center = construct_solution.clone();
    let mut center_total = construct_cost.total;
    let mut incumbent = center.clone();
    let mut incumbent_total = center_total;

    let mut trace = SearchTrace::default();
    trace.records.push(TraceRecord {
        iteration: 0,
        phase: Phase::Construct,
        k: 0,
        unimproved: 0,
        candidate_total: center_total,
        current_total: center_total,
        incumbent_total,
        gap_pct: S::zero(),
        neighborhood: None,
        recentered: false,
    });

    let mut unimproved = 0;
    let mut rounds = 0;
    'outer: while unimproved < params.unimproved_max {
        let mut k = 0;
        while k < params.k_max {
            if rounds >= params.max_rounds {
                break 'outer;
            }
            rounds += 1;
            let shaken = shake(&center, k, &mut rng, instance, matrix, &weights);
            let outcome = local_search_outcome(&shaken, instance, matrix, &weights, params);
            let candidate_total = outcome.total;
            let gap = if center_total > S::zero() {
                hundred * (candidate_total - center_total) / center_total
            } else {
                S::zero()
            };
            let used_k = k;
            let phase;
            if candidate_total < center_total {
                center = outcome.solution;
                center_total = candidate_total;
                k = 0;
                unimproved = 0;
                if center_total < incumbent_total {
                    incumbent = center.clone();
                    incumbent_total = center_total;
                }
                phase = Phase::Improved;
            } else {
                unimproved += 1;
                if candidate_total > center_total && gap >= gap_low && gap <= gap_high {
                    center = outcome.solution;
                    center_total = candidate_total;
                    k = 0;
                    phase = Phase::Recentered;
                } else {
                    k += 1;
                    phase = Phase::Rejected;
                }
            }
            trace.records.push(TraceRecord {
                iteration: rounds,
                phase,
                k: used_k,
                unimproved,
                candidate_total,
                current_total: center_total,
                incumbent_total,
                gap_pct: gap,
                neighborhood: outcome.last_improving,
                recentered: phase != Phase::Rejected,
            });
        }
    }

    let cost = evaluate_unchecked(&incumbent, instance, matrix, &weights);
    SolveResult { solution: incumbent, cost, construct_solution, construct_cost, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, GeneratorSpec};
    use crate::model::{check_feasibility, evaluate, Assignment, Poi, PoiId, Point};

    fn small(seed: u64) -> Instance<f64> {
        generate(&GeneratorSpec::small(seed)).unwrap()
    }

    #[test]
    fn shake_k_zero_swaps_once() {
        let inst = small(3);
        let m = build_cost_matrix(&inst);
        let sol = construct(&inst, &m, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shaken = shake(&sol, 0, &mut rng, &inst, &m, &inst.weights());
        let diffs: usize = sol
            .routes
            .iter()
            .zip(&shaken.routes)
            .map(|(a, b)| a.route.0.iter().zip(&b.route.0).filter(|(x, y)| x != y).count())
            .sum();
        assert_eq!(diffs, 2);
        assert!(check_feasibility(&shaken, &inst).is_ok());
    }

    #[test]
    fn shake_leaves_singletons_alone() {
        let pois = (1..=2).map(|i| Poi { id: PoiId(i), location: Point::new(i as f64, 1.0), ugv_demand: 1 }).collect();
        let inst: Instance<f64> =
            Instance::new(Point::new(0.0, 0.0), pois, 2, 2, vec![0.0, 1.0, 2.0], 5.0, Weights::default()).unwrap();
        let m = build_cost_matrix(&inst);
        let sol = Solution::new(vec![
            RoutePlan::new(Route::from_ids(&[1]), Assignment::new(2, vec![0])),
            RoutePlan::new(Route::from_ids(&[2]), Assignment::new(1, vec![0])),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(shake(&sol, 5, &mut rng, &inst, &m, &inst.weights()), sol);
    }

    #[test]
    fn shake_is_seed_deterministic() {
        let inst = generate::<f64>(&GeneratorSpec::medium(1)).unwrap();
        let m = build_cost_matrix(&inst);
        let sol = construct(&inst, &m, 0);
        let run = |seed| shake(&sol, 7, &mut ChaCha8Rng::seed_from_u64(seed), &inst, &m, &inst.weights());
        assert_eq!(run(4), run(4));
    }

    #[test]
    fn two_opt_uncrosses_a_single_route() {
        // Square visited in crossing order.
        let coords = [(0.0, 10.0), (10.0, 0.0), (10.0, 10.0)];
        let pois = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Poi { id: PoiId(i as u32 + 1), location: Point::new(x, y), ugv_demand: 1 })
            .collect();
        let inst: Instance<f64> =
            Instance::new(Point::new(0.0, 0.0), pois, 1, 1, vec![0.0, 1.0], 0.0, Weights::new(1.0, 0.0, 0.0)).unwrap();
        let m = build_cost_matrix(&inst);
        let crossing =
            Solution::new(vec![RoutePlan::new(Route::from_ids(&[1, 2, 3]), Assignment::new(1, vec![0, 0, 0]))]);
        let before = evaluate(&crossing, &inst, &m).unwrap().path_cost;
        let after = local_search(&crossing, &inst, &m, &inst.weights(), &SvnsParams::default());
        let after_cost = evaluate(&after, &inst, &m).unwrap().path_cost;
        assert!(after_cost < before);
        assert!((after_cost - 40.0).abs() < 1e-9);
    }

    #[test]
    fn local_search_output_is_a_fixpoint() {
        for seed in 0..5 {
            let inst = small(seed);
            let m = build_cost_matrix(&inst);
            let w = inst.weights();
            let params = SvnsParams::default();
            let start = construct(&inst, &m, seed);
            let once = local_search(&start, &inst, &m, &w, &params);
            assert!(evaluate(&once, &inst, &m).unwrap().total <= evaluate(&start, &inst, &m).unwrap().total);
            assert_eq!(local_search(&once, &inst, &m, &w, &params), once);
        }
    }

    #[test]
    fn solve_never_worse_than_construction() {
        for seed in 0..4 {
            let inst = small(seed);
            let r = solve(&inst, &SvnsParams::with_seed(seed));
            assert!(r.cost.total <= r.construct_cost.total);
            assert!(check_feasibility(&r.solution, &inst).is_ok());
            assert!(r.improvement_pct() >= 0.0);
        }
    }

    #[test]
    fn trace_invariants() {
        let inst = small(11);
        let r = solve(&inst, &SvnsParams::with_seed(2));
        let recs = &r.trace.records;
        assert_eq!(recs[0].phase, Phase::Construct);
        for w in recs.windows(2) {
            assert!(w[1].incumbent_total <= w[0].incumbent_total);
        }
        for rec in recs.iter().filter(|r| r.phase == Phase::Recentered) {
            assert!(rec.gap_pct >= 20.0 && rec.gap_pct <= 50.0);
        }
        assert_eq!(recs.last().unwrap().incumbent_total, r.cost.total);
        let csv = r.trace.to_csv();
        assert!(csv.starts_with("iteration,phase,k,"));
        assert_eq!(csv.lines().count(), recs.len() + 1);
    }

    #[test]
    fn wide_window_recenters_to_worse_solutions() {
        // The default window rarely fires on small instances; widen it so
        // the branch runs and check the center follows the worse candidate
        // while the incumbent does not.
        let inst = small(11);
        let params = SvnsParams {
            recenter_gap_low: 0.0,
            recenter_gap_high: 1000.0,
            k_max: 5,
            unimproved_max: 10,
            ..SvnsParams::with_seed(2)
        };
        let r = solve(&inst, &params);
        let recs = &r.trace.records;
        let mut events = 0;
        for w in recs.windows(2) {
            assert!(w[1].incumbent_total <= w[0].incumbent_total);
            if w[1].phase == Phase::Recentered {
                events += 1;
                assert!(w[1].candidate_total > w[0].current_total);
                assert_eq!(w[1].current_total, w[1].candidate_total);
                assert_eq!(w[1].incumbent_total, w[0].incumbent_total);
            }
        }
        assert!(events > 0);
        assert!(r.cost.total <= r.construct_cost.total);
    }

    #[test]
    fn params_validation_and_names() {
        assert!(SvnsParams::default().validate().is_ok());
        assert!(SvnsParams { k_max: 0, ..Default::default() }.validate().is_err());
        assert!(SvnsParams { recenter_gap_low: 60.0, ..Default::default() }.validate().is_err());
        for n in LocalSearchNeighborhood::ALL {
            assert_eq!(n.name().parse::<LocalSearchNeighborhood>().unwrap(), n);
        }
    }
}
