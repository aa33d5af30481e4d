//! Wasserstein-1 distance between equal-size uniform empirical measures on the
//! quarter plane `(age, activity)` with the taxicab ground metric.
//!
//! A matching cost is the correctly rounded value of the exact sum of the
//! coordinate differences. Matchings with equal true cost therefore get equal
//! floating-point cost, whatever the point order.

use crate::error::{Error, Result};

pub const DEFAULT_ASSIGNMENT_CAP: usize = 4096;
pub const BRUTEFORCE_MAX: usize = 7;

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("empirical measure needs at least one point".into()));
        }
        if let Some(p) = points
            .iter()
            .find(|(x, m)| !(x.is_finite() && m.is_finite() && *x >= 0.0 && *m >= 0.0))
        {
            return Err(Error::Domain(format!("point {p:?} is outside the quarter plane")));
        }
        Ok(EmpiricalMeasure { points })
    }

    /// Network snapshot: every age paired with the common activity.
    pub fn from_ages(ages: &[f64], activity: f64) -> Result<Self> {
        Self::new(ages.iter().map(|x| (*x, activity)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn constant_activity(&self) -> Option<f64> {
        let m = self.points[0].1;
        self.points.iter().all(|p| p.1 == m).then_some(m)
    }

    pub fn ages(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }
}

#[inline]
pub fn taxicab(a: Point, b: Point) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// Correctly rounded sum, by exact accumulation of non-overlapping partials
/// (Shewchuk's algorithm with the round-half-even fix-up of Python's `fsum`).
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for k in 0..partials.len() {
            let mut y = partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// `|a - b|` as an exact two-term expansion.
#[inline]
fn abs_diff_parts(a: f64, b: f64) -> [f64; 2] {
    let s = a - b;
    let bb = s - a;
    let err = (a - (s - bb)) + (-b - bb);
    if s < 0.0 {
        [-s, -err]
    } else {
        [s, err]
    }
}

fn same_size(n: usize, m: usize) -> Result<()> {
    if n != m {
        return Err(Error::Domain(format!("measures have different sizes ({n} vs {m})")));
    }
    if n == 0 {
        return Err(Error::Domain("empty measures".into()));
    }
    Ok(())
}

/// Exact W1 of two equal-size samples on the line.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    same_size(a.len(), b.len())?;
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total = exact_sum(a.iter().zip(&b).flat_map(|(x, y)| abs_diff_parts(*x, *y)));
    Ok(total / a.len() as f64)
}

/// Mean cost of matching `a[i]` with `b[perm[i]]`.
pub fn matching_cost(a: &[Point], b: &[Point], perm: &[usize]) -> f64 {
    let terms = perm.iter().enumerate().flat_map(|(i, &j)| {
        let [x0, x1] = abs_diff_parts(a[i].0, b[j].0);
        let [m0, m1] = abs_diff_parts(a[i].1, b[j].1);
        [x0, x1, m0, m1]
    });
    exact_sum(terms) / a.len() as f64
}

pub fn w1_assignment(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    w1_assignment_capped(a, b, DEFAULT_ASSIGNMENT_CAP)
}

pub fn w1_assignment_capped(a: &EmpiricalMeasure, b: &EmpiricalMeasure, cap: usize) -> Result<f64> {
    same_size(a.len(), b.len())?;
    if a.len() > cap {
        return Err(Error::Domain(format!(
            "{} points exceed the assignment cap of {cap}; subsample the measures",
            a.len()
        )));
    }
    let perm = hungarian(a.points(), b.points());
    Ok(matching_cost(a.points(), b.points(), &perm))
}

/// Exhaustive minimum over all matchings, for at most seven points.
pub fn w1_bruteforce(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    same_size(a.len(), b.len())?;
    let n = a.len();
    if n > BRUTEFORCE_MAX {
        return Err(Error::Domain(format!("brute force refused for n = {n} > {BRUTEFORCE_MAX}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = matching_cost(a.points(), b.points(), &perm);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(matching_cost(a.points(), b.points(), &perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// W1 by sorted matching of the ages when both measures have a constant activity,
/// by the assignment solver otherwise.
pub fn w1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    same_size(a.len(), b.len())?;
    match (a.constant_activity(), b.constant_activity()) {
        (Some(_), Some(_)) => {
            let order = |m: &EmpiricalMeasure| {
                let mut idx: Vec<usize> = (0..m.len()).collect();
                idx.sort_by(|i, j| m.points[*i].0.total_cmp(&m.points[*j].0));
                idx
            };
            let (oa, ob) = (order(a), order(b));
            let mut perm = vec![0; a.len()];
            for (i, j) in oa.into_iter().zip(ob) {
                perm[i] = j;
            }
            Ok(matching_cost(a.points(), b.points(), &perm))
        }
        _ => w1_assignment(a, b),
    }
}

/// Shortest-augmenting-path Hungarian method with potentials, O(n^3).
/// Returns `perm` with row `i` matched to column `perm[i]`.
fn hungarian(a: &[Point], b: &[Point]) -> Vec<usize> {
    let n = a.len();
    let cost = |i: usize, j: usize| taxicab(a[i - 1], b[j - 1]);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|u| *u = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}
