//! Route-modifying moves and exhaustive neighborhood enumeration.
//!
//! Intra-route moves act on one [`Route`]; inter-route moves act on a route
//! set (one route per vehicle slot). Every move keeps the multiset of POIs
//! and never duplicates a POI within a route.

use std::fmt;

use thiserror::Error;

use crate::model::Route;

/// Default cap on segment length for sequence exchange.
pub const DEFAULT_MAX_SEG_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("positions must differ")]
    SamePosition,
    #[error("expected i < j, got i = {i}, j = {j}")]
    BadRange { i: usize, j: usize },
    #[error("both operands are route {0}")]
    SameRoute(usize),
    #[error("segment length {len} not in [1, {max}]")]
    SegmentLength { len: usize, max: usize },
}

fn check(index: usize, len: usize) -> Result<(), MoveError> {
    if index < len {
        Ok(())
    } else {
        Err(MoveError::IndexOutOfRange { index, len })
    }
}

pub fn reverse(route: &Route) -> Route {
    Route(route.0.iter().rev().copied().collect())
}

pub fn swap_intra(route: &Route, i: usize, j: usize) -> Result<Route, MoveError> {
    check(i, route.len())?;
    check(j, route.len())?;
    if i == j {
        return Err(MoveError::SamePosition);
    }
    let mut out = route.clone();
    out.0.swap(i, j);
    Ok(out)
}

/// Reverses the segment `i..=j` in place.
pub fn two_opt_intra(route: &Route, i: usize, j: usize) -> Result<Route, MoveError> {
    check(i, route.len())?;
    check(j, route.len())?;
    if i >= j {
        return Err(MoveError::BadRange { i, j });
    }
    let mut out = route.clone();
    out.0[i..=j].reverse();
    Ok(out)
}

fn distinct_routes(routes: &[Route], r1: usize, r2: usize) -> Result<(), MoveError> {
    check(r1, routes.len())?;
    check(r2, routes.len())?;
    if r1 == r2 {
        Err(MoveError::SameRoute(r1))
    } else {
        Ok(())
    }
}

/// New contents of the two routes touched by a remove-insert.
fn remove_insert_pair(from: &Route, pos: usize, to: &Route, at: usize) -> Result<(Route, Route), MoveError> {
    check(pos, from.len())?;
    check(at, to.len() + 1)?;
    let mut from = from.clone();
    let mut to = to.clone();
    let poi = from.0.remove(pos);
    to.0.insert(at, poi);
    Ok((from, to))
}

/// Moves the POI at `pos1` of route `r1` to position `pos2` of route `r2`.
pub fn remove_insert(
    routes: &[Route],
    r1: usize,
    pos1: usize,
    r2: usize,
    pos2: usize,
) -> Result<Vec<Route>, MoveError> {
    distinct_routes(routes, r1, r2)?;
    let (a, b) = remove_insert_pair(&routes[r1], pos1, &routes[r2], pos2)?;
    Ok(replace_two(routes, r1, a, r2, b))
}

fn swap_inter_pair(a: &Route, p1: usize, b: &Route, p2: usize) -> Result<(Route, Route), MoveError> {
    check(p1, a.len())?;
    check(p2, b.len())?;
    let mut a = a.clone();
    let mut b = b.clone();
    std::mem::swap(&mut a.0[p1], &mut b.0[p2]);
    Ok((a, b))
}

pub fn swap_inter(routes: &[Route], r1: usize, pos1: usize, r2: usize, pos2: usize) -> Result<Vec<Route>, MoveError> {
    distinct_routes(routes, r1, r2)?;
    let (a, b) = swap_inter_pair(&routes[r1], pos1, &routes[r2], pos2)?;
    Ok(replace_two(routes, r1, a, r2, b))
}

/// A contiguous `(start, len)` slice of a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }
}

fn check_segment(seg: Segment, route_len: usize, max_len: usize) -> Result<(), MoveError> {
    if seg.len > max_len {
        return Err(MoveError::SegmentLength { len: seg.len, max: max_len });
    }
    if seg.start + seg.len > route_len {
        return Err(MoveError::IndexOutOfRange { index: seg.start + seg.len.max(1) - 1, len: route_len });
    }
    Ok(())
}

fn seq_exchange_pair(
    a: &Route,
    seg1: Segment,
    b: &Route,
    seg2: Segment,
    max_len: usize,
) -> Result<(Route, Route), MoveError> {
    check_segment(seg1, a.len(), max_len)?;
    check_segment(seg2, b.len(), max_len)?;
    if seg1.len == 0 && seg2.len == 0 {
        return Err(MoveError::SegmentLength { len: 0, max: max_len });
    }
    let splice = |base: &Route, cut: Segment, insert: &[_]| {
        let mut out = Vec::with_capacity(base.len() - cut.len + insert.len());
        out.extend_from_slice(&base.0[..cut.start]);
        out.extend_from_slice(insert);
        out.extend_from_slice(&base.0[cut.start + cut.len..]);
        Route(out)
    };
    let part1 = &a.0[seg1.start..seg1.start + seg1.len];
    let part2 = &b.0[seg2.start..seg2.start + seg2.len];
    Ok((splice(a, seg1, part2), splice(b, seg2, part1)))
}

/// Exchanges a segment of route `r1` with a segment of route `r2`, keeping
/// each segment's internal order. One of the two segments may have length
/// zero, in which case the other segment is relocated to that insertion
/// slot.
pub fn seq_exchange_inter(
    routes: &[Route],
    r1: usize,
    seg1: Segment,
    r2: usize,
    seg2: Segment,
    max_seg_len: usize,
) -> Result<Vec<Route>, MoveError> {
    distinct_routes(routes, r1, r2)?;
    let (a, b) = seq_exchange_pair(&routes[r1], seg1, &routes[r2], seg2, max_seg_len)?;
    Ok(replace_two(routes, r1, a, r2, b))
}

fn replace_two(routes: &[Route], r1: usize, a: Route, r2: usize, b: Route) -> Vec<Route> {
    let mut out = routes.to_vec();
    out[r1] = a;
    out[r2] = b;
    out
}

/// A fully parameterized move on a route set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Reverse { route: usize },
    SwapIntra { route: usize, i: usize, j: usize },
    TwoOptIntra { route: usize, i: usize, j: usize },
    RemoveInsert { from: usize, pos: usize, to: usize, at: usize },
    SwapInter { r1: usize, pos1: usize, r2: usize, pos2: usize },
    SeqExchange { r1: usize, seg1: Segment, r2: usize, seg2: Segment },
}

/// Routes changed by a move, with their new contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Touched {
    One(usize, Route),
    Two(usize, Route, usize, Route),
}

impl Touched {
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Route)> {
        let (first, second) = match self {
            Touched::One(i, r) => ((*i, r), None),
            Touched::Two(i, a, j, b) => ((*i, a), Some((*j, b))),
        };
        std::iter::once(first).chain(second)
    }
}

impl Move {
    /// New contents of the routes this move changes.
    pub fn touched(&self, routes: &[Route], max_seg_len: usize) -> Result<Touched, MoveError> {
        match *self {
            Move::Reverse { route } => {
                check(route, routes.len())?;
                Ok(Touched::One(route, reverse(&routes[route])))
            }
            Move::SwapIntra { route, i, j } => {
                check(route, routes.len())?;
                Ok(Touched::One(route, swap_intra(&routes[route], i, j)?))
            }
            Move::TwoOptIntra { route, i, j } => {
                check(route, routes.len())?;
                Ok(Touched::One(route, two_opt_intra(&routes[route], i, j)?))
            }
            Move::RemoveInsert { from, pos, to, at } => {
                distinct_routes(routes, from, to)?;
                let (a, b) = remove_insert_pair(&routes[from], pos, &routes[to], at)?;
                Ok(Touched::Two(from, a, to, b))
            }
            Move::SwapInter { r1, pos1, r2, pos2 } => {
                distinct_routes(routes, r1, r2)?;
                let (a, b) = swap_inter_pair(&routes[r1], pos1, &routes[r2], pos2)?;
                Ok(Touched::Two(r1, a, r2, b))
            }
            Move::SeqExchange { r1, seg1, r2, seg2 } => {
                distinct_routes(routes, r1, r2)?;
                let (a, b) = seq_exchange_pair(&routes[r1], seg1, &routes[r2], seg2, max_seg_len)?;
                Ok(Touched::Two(r1, a, r2, b))
            }
        }
    }

    /// Applies the move, returning the whole new route set.
    pub fn apply(&self, routes: &[Route], max_seg_len: usize) -> Result<Vec<Route>, MoveError> {
        let touched = self.touched(routes, max_seg_len)?;
        let mut out = routes.to_vec();
        for (i, r) in touched.iter() {
            out[i] = r.clone();
        }
        Ok(out)
    }
}

/// Neighborhoods that local search enumerates exhaustively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborhoodKind {
    TwoOptIntra,
    RemoveInsert,
    SwapInter,
    SeqExchange,
}

impl NeighborhoodKind {
    pub const ALL: [NeighborhoodKind; 4] = [Self::TwoOptIntra, Self::RemoveInsert, Self::SwapInter, Self::SeqExchange];

    pub fn name(self) -> &'static str {
        match self {
            Self::TwoOptIntra => "two-opt-intra",
            Self::RemoveInsert => "remove-insert",
            Self::SwapInter => "swap-inter",
            Self::SeqExchange => "seq-exchange",
        }
    }
}

impl fmt::Display for NeighborhoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborhoodLimits {
    pub max_seg_len: usize,
    /// Let sequence exchange pair a segment with a zero-length segment at any
    /// insertion slot (segment relocation). When false, only an empty route
    /// contributes a zero-length segment.
    pub relocate_segments: bool,
}

impl Default for NeighborhoodLimits {
    fn default() -> Self {
        Self { max_seg_len: DEFAULT_MAX_SEG_LEN, relocate_segments: true }
    }
}

impl NeighborhoodLimits {
    pub fn strict(max_seg_len: usize) -> Self {
        Self { max_seg_len, relocate_segments: false }
    }
}

/// Segments of a route in (start, len) order. Zero-length segments mark
/// insertion slots.
fn segments(route_len: usize, max_len: usize, zero_len: bool) -> impl Iterator<Item = Segment> + Clone {
    (0..=route_len).flat_map(move |start| {
        let first = if zero_len || route_len == 0 { 0 } else { 1 };
        let last = max_len.min(route_len - start);
        (first..=last).map(move |len| Segment { start, len })
    })
}

/// Every move of `kind` on `routes`, in lexicographic order of the move
/// parameters.
pub fn enumerate_moves(
    routes: &[Route],
    kind: NeighborhoodKind,
    limits: NeighborhoodLimits,
) -> Box<dyn Iterator<Item = Move> + Send> {
    let lens: Vec<usize> = routes.iter().map(Route::len).collect();
    let m = lens.len();
    match kind {
        NeighborhoodKind::TwoOptIntra => Box::new((0..m).flat_map(move |route| {
            let n = lens[route];
            (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| Move::TwoOptIntra { route, i, j }))
        })),
        NeighborhoodKind::RemoveInsert => Box::new((0..m).flat_map(move |from| {
            let lens = lens.clone();
            (0..lens[from]).flat_map(move |pos| {
                let lens = lens.clone();
                (0..m)
                    .filter(move |&to| to != from)
                    .flat_map(move |to| (0..=lens[to]).map(move |at| Move::RemoveInsert { from, pos, to, at }))
            })
        })),
        NeighborhoodKind::SwapInter => Box::new((0..m).flat_map(move |r1| {
            let lens = lens.clone();
            ((r1 + 1)..m).flat_map(move |r2| {
                let n2 = lens[r2];
                (0..lens[r1]).flat_map(move |pos1| (0..n2).map(move |pos2| Move::SwapInter { r1, pos1, r2, pos2 }))
            })
        })),
        NeighborhoodKind::SeqExchange => {
            let max = limits.max_seg_len;
            let zero = limits.relocate_segments;
            Box::new((0..m).flat_map(move |r1| {
                let lens = lens.clone();
                ((r1 + 1)..m).flat_map(move |r2| {
                    let second = segments(lens[r2], max, zero);
                    segments(lens[r1], max, zero).flat_map(move |seg1| {
                        second.clone().filter(move |seg2| seg1.len + seg2.len > 0).map(move |seg2| Move::SeqExchange {
                            r1,
                            seg1,
                            r2,
                            seg2,
                        })
                    })
                })
            }))
        }
    }
}

/// Every neighbor of `routes` in `kind`, paired with the move producing it.
pub fn enumerate_neighbors<'a>(
    routes: &'a [Route],
    kind: NeighborhoodKind,
    limits: NeighborhoodLimits,
) -> impl Iterator<Item = (Move, Vec<Route>)> + 'a {
    enumerate_moves(routes, kind, limits).map(move |mv| {
        let next = mv.apply(routes, limits.max_seg_len).expect("enumerated moves are in range");
        (mv, next)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(ids: &[u32]) -> Route {
        Route::from_ids(ids)
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(reverse(&r(&[1, 2, 3])), r(&[3, 2, 1]));
        assert_eq!(reverse(&r(&[])), r(&[]));
        assert_eq!(reverse(&reverse(&r(&[4, 1, 9]))), r(&[4, 1, 9]));
    }

    #[test]
    fn swap_intra_examples() {
        assert_eq!(swap_intra(&r(&[1, 2, 3]), 0, 2).unwrap(), r(&[3, 2, 1]));
        assert_eq!(swap_intra(&r(&[1, 2, 3, 4]), 1, 2).unwrap(), r(&[1, 3, 2, 4]));
        assert_eq!(swap_intra(&r(&[1, 2]), 0, 2), Err(MoveError::IndexOutOfRange { index: 2, len: 2 }));
        assert_eq!(swap_intra(&r(&[1, 2]), 1, 1), Err(MoveError::SamePosition));
    }

    #[test]
    fn two_opt_examples() {
        let base = r(&[1, 2, 3, 4, 5]);
        assert_eq!(two_opt_intra(&base, 1, 3).unwrap(), r(&[1, 4, 3, 2, 5]));
        assert_eq!(two_opt_intra(&base, 0, 4).unwrap(), reverse(&base));
        assert_eq!(two_opt_intra(&base, 2, 3).unwrap(), swap_intra(&base, 2, 3).unwrap());
        assert_eq!(two_opt_intra(&base, 3, 1), Err(MoveError::BadRange { i: 3, j: 1 }));
    }

    #[test]
    fn remove_insert_examples() {
        let routes = vec![r(&[1, 2]), r(&[3])];
        assert_eq!(remove_insert(&routes, 0, 0, 1, 1).unwrap(), vec![r(&[2]), r(&[3, 1])]);
        let routes = vec![r(&[5]), r(&[])];
        assert_eq!(remove_insert(&routes, 0, 0, 1, 0).unwrap(), vec![r(&[]), r(&[5])]);
        assert_eq!(remove_insert(&routes, 0, 0, 0, 0), Err(MoveError::SameRoute(0)));
        assert!(remove_insert(&routes, 1, 0, 0, 0).is_err());
    }

    #[test]
    fn swap_inter_examples() {
        let routes = vec![r(&[1, 2]), r(&[3, 4])];
        let once = swap_inter(&routes, 0, 0, 1, 1).unwrap();
        assert_eq!(once, vec![r(&[4, 2]), r(&[3, 1])]);
        assert_eq!(swap_inter(&once, 0, 0, 1, 1).unwrap(), routes);
    }

    #[test]
    fn seq_exchange_examples() {
        let routes = vec![r(&[1, 2, 3]), r(&[4, 5])];
        let out = seq_exchange_inter(&routes, 0, Segment::new(0, 2), 1, Segment::new(1, 1), 3).unwrap();
        assert_eq!(out, vec![r(&[5, 3]), r(&[4, 1, 2])]);
        assert_eq!(
            seq_exchange_inter(&routes, 0, Segment::new(1, 1), 1, Segment::new(0, 1), 3).unwrap(),
            swap_inter(&routes, 0, 1, 1, 0).unwrap()
        );
        assert_eq!(
            seq_exchange_inter(&routes, 0, Segment::new(0, 3), 1, Segment::new(0, 1), 2),
            Err(MoveError::SegmentLength { len: 3, max: 2 })
        );
        assert!(seq_exchange_inter(&routes, 0, Segment::new(0, 0), 1, Segment::new(0, 0), 3).is_err());
        assert!(seq_exchange_inter(&routes, 0, Segment::new(2, 2), 1, Segment::new(0, 1), 3).is_err());
        // zero-length segment: relocation into the slot before position 1
        assert_eq!(
            seq_exchange_inter(&routes, 0, Segment::new(1, 2), 1, Segment::new(1, 0), 3).unwrap(),
            vec![r(&[1]), r(&[4, 2, 3, 5])]
        );
        let with_empty = vec![r(&[1, 2]), r(&[])];
        assert_eq!(
            seq_exchange_inter(&with_empty, 0, Segment::new(0, 2), 1, Segment::new(0, 0), 3).unwrap(),
            vec![r(&[]), r(&[1, 2])]
        );
    }

    #[test]
    fn closed_form_counts() {
        let single = vec![r(&[1, 2, 3, 4])];
        let lim = NeighborhoodLimits::default();
        assert_eq!(enumerate_moves(&single, NeighborhoodKind::TwoOptIntra, lim).count(), 6);

        let two = vec![r(&[1, 2]), r(&[3, 4, 5])];
        assert_eq!(enumerate_moves(&two, NeighborhoodKind::SwapInter, lim).count(), 6);
        // 2 * (3 + 1) + 3 * (2 + 1)
        assert_eq!(enumerate_moves(&two, NeighborhoodKind::RemoveInsert, lim).count(), 17);
        // non-empty segments: len 2 -> 2 + 1 = 3, len 3 -> 3 + 2 + 1 = 6
        let strict = NeighborhoodLimits::strict(3);
        assert_eq!(enumerate_moves(&two, NeighborhoodKind::SeqExchange, strict).count(), 18);
        // plus insertion slots 3 and 4, minus the empty-empty pairs
        assert_eq!(enumerate_moves(&two, NeighborhoodKind::SeqExchange, lim).count(), 6 * 10 - 3 * 4);

        let with_empty = vec![r(&[1]), r(&[])];
        assert_eq!(enumerate_moves(&with_empty, NeighborhoodKind::RemoveInsert, lim).count(), 1);
        assert_eq!(enumerate_moves(&with_empty, NeighborhoodKind::SeqExchange, strict).count(), 1);
        let both_empty = vec![r(&[]), r(&[])];
        assert_eq!(enumerate_moves(&both_empty, NeighborhoodKind::SeqExchange, lim).count(), 0);
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let routes = vec![r(&[1, 2, 3]), r(&[4, 5])];
        let moves: Vec<Move> = enumerate_moves(&routes, NeighborhoodKind::TwoOptIntra, Default::default()).collect();
        assert_eq!(
            moves,
            vec![
                Move::TwoOptIntra { route: 0, i: 0, j: 1 },
                Move::TwoOptIntra { route: 0, i: 0, j: 2 },
                Move::TwoOptIntra { route: 0, i: 1, j: 2 },
                Move::TwoOptIntra { route: 1, i: 0, j: 1 },
            ]
        );
        let neighbors: Vec<_> =
            enumerate_neighbors(&routes, NeighborhoodKind::TwoOptIntra, Default::default()).collect();
        assert_eq!(neighbors[0].1, vec![r(&[2, 1, 3]), r(&[4, 5])]);
    }
}
