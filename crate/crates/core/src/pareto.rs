//! Dominance, non-dominated sorting, crowding distance and 2-D hypervolume.

use std::cmp::Ordering;

use thiserror::Error;

use crate::num::Real;
use crate::space::Direction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("point {index} has {found} objectives, expected {expected}")]
pub struct ArityError {
    pub index: usize,
    pub found: usize,
    pub expected: usize,
}

fn oriented<T: Real>(value: T, direction: Direction) -> T {
    match direction {
        Direction::Minimize => value,
        Direction::Maximize => -value,
    }
}

/// `true` if `a` is no worse than `b` in every objective and strictly better
/// in at least one.
pub fn dominates<T: Real>(a: &[T], b: &[T], directions: &[Direction]) -> bool {
    let mut strictly = false;
    for ((&x, &y), &d) in a.iter().zip(b).zip(directions) {
        let (x, y) = (oriented(x, d), oriented(y, d));
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort. Front 0 is the non-dominated set; each front lists
/// its indices in ascending order.
pub fn non_dominated_sort<T: Real>(
    points: &[Vec<T>],
    directions: &[Direction],
) -> Result<Vec<Vec<usize>>, ArityError> {
    if let Some((index, p)) = points
        .iter()
        .enumerate()
        .find(|(_, p)| p.len() != directions.len())
    {
        return Err(ArityError {
            index,
            found: p.len(),
            expected: directions.len(),
        });
    }
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j], directions) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i], directions) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Crowding distance of each point of one front.
///
/// Boundary points of every objective get `+inf`; interior points accumulate
/// neighbour gaps normalized by the objective's range. Objectives with zero
/// range contribute nothing to interior points.
pub fn crowding_distance<T: Real>(front: &[Vec<T>]) -> Vec<T> {
    let n = front.len();
    let mut distance = vec![T::zero(); n];
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| {
            front[a][k]
                .partial_cmp(&front[b][k])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        distance[order[0]] = T::infinity();
        distance[order[n - 1]] = T::infinity();
        let range = hi - lo;
        if range <= T::zero() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]][k] - front[order[w - 1]][k];
            distance[order[w]] = distance[order[w]] + gap / range;
        }
    }
    distance
}

/// Hypervolume dominated by a set of 2-objective minimization points, bounded
/// by `reference`. Points not strictly better than the reference in both
/// objectives contribute nothing.
pub fn hypervolume_2d<T: Real>(points: &[[T; 2]], reference: [T; 2]) -> T {
    let mut inside: Vec<[T; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    inside.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap_or(Ordering::Equal)
            .then(a[1].partial_cmp(&b[1]).unwrap_or(Ordering::Equal))
    });
    let mut volume = T::zero();
    let mut ceiling = reference[1];
    for p in inside {
        if p[1] < ceiling {
            volume = volume + (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    volume
}
