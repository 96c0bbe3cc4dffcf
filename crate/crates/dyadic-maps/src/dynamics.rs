//! Orbits, Markov partitions, periodic points, J-collections, mixing and entropy.

use std::collections::{BTreeMap, BinaryHeap, HashMap};

use num::{Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};
use crate::map_core::{
    is_lambda_preserving, iterate, preimage_interval, preimage_point, Interval, PAMap, Preimage,
    DEFAULT_SEGMENT_BUDGET,
};
use crate::numeric::{log2_exact, pow2, qi, sort_dedup, Q};

pub const DEFAULT_ORBIT_BUDGET: usize = 1_000_000;
pub const DEFAULT_NMAX: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitResult {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Q>,
}

/// Forward orbit of `c` until the first repeated value.
pub fn orbit_budget(g: &PAMap, c: &Q, budget: usize) -> Result<OrbitResult> {
    if c < &qi(0) || c > &qi(1) {
        return domain("orbit start outside [0,1]");
    }
    let mut seen: HashMap<Q, usize> = HashMap::new();
    let mut orbit = Vec::new();
    let mut x = c.clone();
    loop {
        if let Some(&m) = seen.get(&x) {
            let period = orbit.len() - m;
            return Ok(OrbitResult { preperiod: m, period, orbit });
        }
        if orbit.len() >= budget {
            return Err(Error::Budget { budget });
        }
        seen.insert(x.clone(), orbit.len());
        orbit.push(x.clone());
        x = g.at(&x);
    }
}

pub fn orbit(g: &PAMap, c: &Q) -> Result<OrbitResult> {
    orbit_budget(g, c, DEFAULT_ORBIT_BUDGET)
}

/// Union of the forward orbits of all breakpoint abscissae, sorted.
pub fn markov_partition(g: &PAMap) -> Result<Vec<Q>> {
    let mut all: Vec<Q> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for x in g.xs() {
        let mut y = x;
        while seen.insert(y.clone()) {
            if seen.len() > DEFAULT_ORBIT_BUDGET {
                return Err(Error::Budget { budget: DEFAULT_ORBIT_BUDGET });
            }
            all.push(y.clone());
            y = g.at(&y);
        }
    }
    all.sort();
    Ok(all)
}

/// Fixed points of `h` as isolated points and maximal fixed intervals.
pub fn fixed_set(h: &PAMap) -> (Vec<Q>, Vec<Interval>) {
    let mut pts: Vec<Q> = Vec::new();
    let mut ivs: Vec<Interval> = Vec::new();
    for i in 0..h.num_segments() {
        let (x0, y0, x1, y1) = h.segment(i);
        let d0 = y0 - x0;
        let d1 = y1 - x1;
        if d0.is_zero() && d1.is_zero() {
            match ivs.last_mut() {
                Some(iv) if &iv.hi == x0 => iv.hi = x1.clone(),
                _ => ivs.push(Interval::new(x0.clone(), x1.clone())),
            }
            continue;
        }
        if d0.is_zero() {
            pts.push(x0.clone());
        } else if d1.is_zero() {
            pts.push(x1.clone());
        } else if d0.is_positive() != d1.is_positive() {
            let t = &d0 / (&d0 - &d1);
            pts.push(x0 + t * (x1 - x0));
        }
    }
    pts.sort();
    pts.dedup();
    pts.retain(|p| !ivs.iter().any(|iv| iv.contains(p)));
    (pts, ivs)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PeriodEntry {
    pub points: Vec<Q>,
    pub intervals: Vec<Interval>,
}

impl PeriodEntry {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }
}

/// Periodic points of each minimal period `1..=n_max`.
///
/// Intervals are maximal intervals fixed by `g^n` after removing sub-intervals
/// fixed by a lower iterate; isolated lower-period points inside them are
/// not carved out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodReport {
    pub by_period: BTreeMap<usize, PeriodEntry>,
}

fn minimal_period(g: &PAMap, x: &Q, n: usize) -> usize {
    let mut y = g.at(x);
    let mut k = 1;
    while &y != x && k < n {
        y = g.at(&y);
        k += 1;
    }
    k
}

fn subtract(iv: &Interval, cut: &[Interval]) -> Vec<Interval> {
    let mut parts = vec![iv.clone()];
    for c in cut {
        let mut next = Vec::new();
        for p in parts {
            if !p.overlaps(c) {
                next.push(p);
                continue;
            }
            if p.lo < c.lo {
                next.push(Interval::new(p.lo.clone(), c.lo.clone()));
            }
            if c.hi < p.hi {
                next.push(Interval::new(c.hi.clone(), p.hi.clone()));
            }
        }
        parts = next;
    }
    parts
}

pub fn periodic_points(g: &PAMap, n_max: usize, budget: usize) -> Result<PeriodReport> {
    if n_max < 1 {
        return domain("n_max must be at least 1");
    }
    let mut by_period = BTreeMap::new();
    let mut fixed_ivs: Vec<Vec<Interval>> = vec![Vec::new()];
    let mut h = PAMap::identity();
    for n in 1..=n_max {
        h = crate::map_core::compose_budget(g, &h, budget)?;
        let (pts, ivs) = fixed_set(&h);
        let points: Vec<Q> = pts.into_iter().filter(|x| minimal_period(g, x, n) == n).collect();
        let lower: Vec<Interval> = (1..n)
            .filter(|d| n % d == 0)
            .flat_map(|d| fixed_ivs[d].clone())
            .collect();
        let intervals: Vec<Interval> = ivs.iter().flat_map(|iv| subtract(iv, &lower)).collect();
        fixed_ivs.push(ivs);
        by_period.insert(n, PeriodEntry { points, intervals });
    }
    Ok(PeriodReport { by_period })
}

/// Intervals `I1, I2 ⊂ I0` with disjoint interiors, each mapped onto `I0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period3Certificate {
    pub i0: Interval,
    pub i1: Interval,
    pub i2: Interval,
}

pub fn has_period3_certificate(g: &PAMap) -> Option<Period3Certificate> {
    let p = markov_partition(g).ok()?;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let i0 = Interval::new(p[i].clone(), p[j].clone());
            let legs: Vec<Interval> = preimage_interval(g, &i0)
                .into_iter()
                .filter(|l| l.onto && i0.contains_interval(&l.domain))
                .map(|l| l.domain)
                .collect();
            if legs.len() >= 2 {
                return Some(Period3Certificate { i0, i1: legs[0].clone(), i2: legs[1].clone() });
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplementMode {
    Identity,
    Reflection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JCollection {
    pub intervals: Vec<Interval>,
    pub mode: ComplementMode,
}

/// Part of segment `i` mapped into `c`, when it has positive length.
fn segment_piece(g: &PAMap, i: usize, c: &Interval) -> Option<(Q, Q)> {
    let (x0, y0, x1, y1) = g.segment(i);
    if y0 == y1 {
        return c.contains(y0).then(|| (x0.clone(), x1.clone()));
    }
    let (ylo, yhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
    let a = if &c.lo > ylo { &c.lo } else { ylo };
    let b = if &c.hi < yhi { &c.hi } else { yhi };
    if a >= b {
        return None;
    }
    let at = |y: &Q| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
    let (xa, xb) = (at(a), at(b));
    Some(if xa <= xb { (xa, xb) } else { (xb, xa) })
}

/// Hull of `g⁻¹(c)`, scanning inwards from both ends.
fn preimage_hull(g: &PAMap, c: &Interval) -> Option<Interval> {
    if c.is_degenerate() {
        let legs = preimage_interval(g, c);
        let lo = legs.iter().map(|l| l.domain.lo.clone()).min()?;
        let hi = legs.iter().map(|l| l.domain.hi.clone()).max()?;
        return Some(Interval::new(lo, hi));
    }
    let n = g.num_segments();
    let lo = (0..n).find_map(|i| segment_piece(g, i, c))?.0;
    let hi = (0..n).rev().find_map(|i| segment_piece(g, i, c))?.1;
    Some(Interval::new(lo, hi))
}

/// Intervals with pairwise disjoint interiors, keyed by left end.
#[derive(Default)]
struct Family(BTreeMap<Q, Q>);

impl Family {
    fn has(&self, c: &Interval) -> bool {
        self.0.get(&c.lo) == Some(&c.hi)
    }

    /// Adds `c`, merging overlapping members; returns the new member if any.
    fn insert(&mut self, c: Interval) -> Option<Interval> {
        if c.is_degenerate() {
            return None;
        }
        if let Some((_, hi)) = self.0.range(..=&c.lo).next_back() {
            if hi >= &c.hi {
                return None;
            }
        }
        let start = match self.0.range(..&c.lo).next_back() {
            Some((lo, hi)) if hi > &c.lo => lo.clone(),
            _ => c.lo.clone(),
        };
        let hit: Vec<Q> = self.0.range(&start..&c.hi).map(|(lo, _)| lo.clone()).collect();
        let (mut lo, mut hi) = (c.lo, c.hi);
        for k in hit {
            let h = self.0.remove(&k).unwrap();
            if k < lo {
                lo = k;
            }
            if h > hi {
                hi = h;
            }
        }
        self.0.insert(lo.clone(), hi.clone());
        Some(Interval::new(lo, hi))
    }
}

const BLOCK: usize = 32;

/// Interval images through per-block extrema of the breakpoint values.
struct Images<'a> {
    g: &'a PAMap,
    mins: Vec<usize>,
    maxs: Vec<usize>,
}

impl<'a> Images<'a> {
    fn new(g: &'a PAMap) -> Images<'a> {
        let pts = g.points();
        let (mut mins, mut maxs) = (Vec::new(), Vec::new());
        for start in (0..pts.len()).step_by(BLOCK) {
            let idx = start..(start + BLOCK).min(pts.len());
            mins.push(idx.clone().min_by(|&i, &j| pts[i].1.cmp(&pts[j].1)).unwrap());
            maxs.push(idx.max_by(|&i, &j| pts[i].1.cmp(&pts[j].1)).unwrap());
        }
        Images { g, mins, maxs }
    }

    fn image(&self, iv: &Interval) -> Interval {
        let pts = self.g.points();
        let (ya, yb) = (self.g.at(&iv.lo), self.g.at(&iv.hi));
        let (mut lo, mut hi) = if ya <= yb { (&ya, &yb) } else { (&yb, &ya) };
        let a = pts.partition_point(|p| p.0 <= iv.lo);
        let b = pts.partition_point(|p| p.0 < iv.hi).max(a);
        let mut take = |i: usize, j: usize| {
            if pts[i].1 < *lo {
                lo = &pts[i].1;
            }
            if pts[j].1 > *hi {
                hi = &pts[j].1;
            }
        };
        let mut i = a;
        while i < b {
            if i % BLOCK == 0 && i + BLOCK <= b {
                take(self.mins[i / BLOCK], self.maxs[i / BLOCK]);
                i += BLOCK;
            } else {
                take(i, i);
                i += 1;
            }
        }
        Interval::new(lo.clone(), hi.clone())
    }
}

/// Closes `fam` under images, `g²`-hulls and preimage hulls.
///
/// Every step is monotone in the interval, so each member is processed once
/// per step kind; merged hulls re-enter both queues. Image steps run first,
/// longest member first, since they are cheap.
fn close(g: &PAMap, images_of: &Images, mut fam: Family) -> Family {
    let unit = Interval::unit();
    let mut images: BinaryHeap<(Q, Interval)> =
        fam.0.iter().map(|(a, b)| (b - a, Interval::new(a.clone(), b.clone()))).collect();
    let mut preimages: Vec<Interval> = images.iter().map(|e| e.1.clone()).collect();
    while !fam.has(&unit) {
        let new = if let Some((_, c)) = images.pop() {
            if !fam.has(&c) {
                continue;
            }
            let gc = images_of.image(&c);
            let ggc = images_of.image(&gc).hull(&c);
            vec![gc, ggc]
        } else if let Some(c) = preimages.pop() {
            if !fam.has(&c) {
                continue;
            }
            let gc = images_of.image(&c);
            preimage_hull(g, &c).into_iter().chain(preimage_hull(g, &gc)).collect()
        } else {
            break;
        };
        for n in new {
            if let Some(m) = fam.insert(n) {
                images.push((m.len(), m.clone()));
                preimages.push(m);
            }
        }
    }
    fam
}

/// An interval free of interior fixed points of `g²`, found on a single
/// lap of `g` without building `g²`.
fn gap_seed(g: &PAMap) -> Option<Interval> {
    let pts = g.points();
    for i in 0..g.num_segments() {
        let (x0, y0, x1, y1) = g.segment(i);
        if y0 == y1 {
            continue;
        }
        let (ylo, yhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        let a = pts.partition_point(|p| &p.0 <= ylo);
        let b = pts.partition_point(|p| &p.0 < yhi).max(a);
        let back = |y: &Q| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
        let mut xs: Vec<Q> = pts[a..b].iter().map(|p| back(&p.0)).collect();
        xs.push(x0.clone());
        xs.push(x1.clone());
        xs.sort();
        let d = |x: &Q| g.at(&g.at(x)) - x;
        for w in xs.windows(2) {
            let (u, v) = (&w[0], &w[1]);
            let (du, dv) = (d(u), d(v));
            if du.is_zero() && dv.is_zero() {
                continue;
            }
            if du.signum() * dv.signum() < qi(0) {
                let r = u + (v - u) * &du / (&du - &dv);
                return Some(Interval::new(u.clone(), r));
            }
            return Some(Interval::new(u.clone(), v.clone()));
        }
    }
    None
}

/// Breakpoints of `g²` inside `[r0, r1]`, with both ends, sorted.
fn square_points(g: &PAMap, r0: &Q, r1: &Q) -> Vec<Q> {
    let pts = g.points();
    let mut xs = vec![r0.clone(), r1.clone()];
    for i in g.segment_index(r0)..g.num_segments() {
        let (x0, y0, x1, y1) = g.segment(i);
        if x0 >= r1 {
            break;
        }
        if y0 != y1 {
            let (ylo, yhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            let a = pts.partition_point(|p| &p.0 <= ylo);
            let b = pts.partition_point(|p| &p.0 < yhi).max(a);
            for p in &pts[a..b] {
                let x = x0 + (&p.0 - y0) * (x1 - x0) / (y1 - y0);
                if &x > r0 && &x < r1 {
                    xs.push(x);
                }
            }
        }
        if x1 > r0 && x1 < r1 {
            xs.push(x1.clone());
        }
    }
    sort_dedup(&mut xs);
    xs
}

/// Closures of the components of `[r0, r1] \ Fix(g²)`.
fn gaps_in(g: &PAMap, r0: &Q, r1: &Q) -> Vec<Interval> {
    let xs = square_points(g, r0, r1);
    let ds: Vec<Q> = xs.iter().map(|x| g.at(&g.at(x)) - x).collect();
    let mut out = Vec::new();
    let mut start: Option<Q> = None;
    for k in 0..xs.len() - 1 {
        let (u, v, du, dv) = (&xs[k], &xs[k + 1], &ds[k], &ds[k + 1]);
        if du.is_zero() && dv.is_zero() {
            out.extend(start.take().map(|s| Interval::new(s, u.clone())));
            continue;
        }
        let s = start.take().unwrap_or_else(|| u.clone());
        if du.signum() * dv.signum() < qi(0) {
            let r = u + (v - u) * du / (du - dv);
            out.push(Interval::new(s, r.clone()));
            start = Some(r);
        } else if dv.is_zero() {
            out.push(Interval::new(s, v.clone()));
        } else {
            start = Some(s);
        }
    }
    out.extend(start.map(|s| Interval::new(s, r1.clone())));
    out.retain(|iv| !iv.is_degenerate());
    out
}

/// Minimal Barge–Martin family, computed as a merge fixed point.
///
/// The family is the closure of the components of `[0,1] \ Fix(g²)` under
/// images, preimage hulls and `g²`-hulls; every candidate lies inside a
/// member of any admissible family, so the fixed point is the unique
/// minimal one. Gaps are fed in lazily: one seed first, then only the gaps
/// of `g²` found in the part of `[0,1]` not yet covered. A gap crossing a
/// member's end (or two members meeting at a non-fixed point) is merged
/// with that member.
///
/// Maps outside `PA(λ)` are rejected: without dense periodic points the
/// closure can climb forever towards an attracting point.
pub fn j_collection(g: &PAMap) -> Result<JCollection> {
    if !is_lambda_preserving(g)? {
        return domain("J-collection needs a λ-preserving map");
    }
    let intervals = minimal_family(g);
    let mode = complement_mode(g, &intervals);
    Ok(JCollection { intervals, mode })
}

/// Members of the J-collection of a map already known to be λ-preserving.
pub(crate) fn minimal_family(g: &PAMap) -> Vec<Interval> {
    let unit = Interval::unit();
    let images_of = Images::new(g);
    let mut fam = Family::default();
    if let Some(seed) = gap_seed(g) {
        fam.insert(seed);
        fam = close(g, &images_of, fam);
    }
    let fixed = |x: &Q| &g.at(&g.at(x)) == x;
    while !fam.has(&unit) {
        let members: Vec<Interval> = fam.0.iter().map(|(a, b)| Interval::new(a.clone(), b.clone())).collect();
        let mut added = false;
        for w in members.windows(2) {
            if w[0].hi == w[1].lo && !fixed(&w[0].hi) {
                added |= fam.insert(w[0].hull(&w[1])).is_some();
            }
        }
        let mut left: Option<&Interval> = None;
        let mut cursor = qi(0);
        for right in members.iter().map(Some).chain(std::iter::once(None)) {
            let end = right.map_or(qi(1), |m| m.lo.clone());
            if end > cursor {
                for mut c in gaps_in(g, &cursor, &end) {
                    if let Some(m) = left.filter(|m| m.hi == c.lo && !fixed(&c.lo)) {
                        c = c.hull(m);
                    }
                    if let Some(m) = right.filter(|m| m.lo == c.hi && !fixed(&c.hi)) {
                        c = c.hull(m);
                    }
                    added |= fam.insert(c).is_some();
                }
            }
            if let Some(m) = right {
                if m.hi > cursor {
                    cursor = m.hi.clone();
                }
                left = Some(m);
            }
        }
        if !added {
            break;
        }
        fam = close(g, &images_of, fam);
    }
    fam.0.into_iter().map(|(a, b)| Interval::new(a, b)).collect()
}

fn complement_mode(g: &PAMap, fam: &[Interval]) -> ComplementMode {
    let mut reflect = false;
    for i in 0..g.num_segments() {
        let (x0, y0, x1, y1) = g.segment(i);
        let mid = (x0 + x1) / qi(2);
        if fam.iter().any(|j| j.contains(&mid)) {
            continue;
        }
        if y0 + x0 == qi(1) && y1 + x1 == qi(1) {
            reflect = true;
        }
    }
    if reflect {
        ComplementMode::Reflection
    } else {
        ComplementMode::Identity
    }
}

pub fn is_tm(g: &PAMap) -> Result<bool> {
    let j = j_collection(g)?;
    Ok(j.intervals == vec![Interval::unit()])
}

fn hits_interior(g2: &PAMap, y: &Q) -> bool {
    let zero = qi(0);
    let one = qi(1);
    preimage_point(g2, y).iter().any(|p| match p {
        Preimage::Point(x) => x > &zero && x < &one,
        Preimage::Plateau(iv) => iv.hi > zero && iv.lo < one,
    })
}

pub fn is_leo(g: &PAMap) -> Result<bool> {
    Ok(is_tm(g)? && ends_reached_from_interior(g)?)
}

/// Whether `0` and `1` both have `g²`-preimages in `(0,1)`; with TM this is LEO.
pub(crate) fn ends_reached_from_interior(g: &PAMap) -> Result<bool> {
    for y in [qi(0), qi(1)] {
        let mid = preimage_point(g, &y);
        let hit = if mid.iter().any(|p| matches!(p, Preimage::Plateau(_))) {
            hits_interior(&iterate(g, 2, DEFAULT_SEGMENT_BUDGET)?, &y)
        } else {
            mid.iter().any(|p| matches!(p, Preimage::Point(z) if hits_interior(g, z)))
        };
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Entropy `Σ |segment| log2 |slope|`.
#[derive(Debug, Clone, PartialEq)]
pub enum Entropy {
    Exact(Q),
    Approx(f64),
}

impl Entropy {
    pub fn to_f64(&self) -> f64 {
        match self {
            Entropy::Exact(v) => v.to_f64().unwrap_or(f64::NAN),
            Entropy::Approx(v) => *v,
        }
    }
}

impl std::fmt::Display for Entropy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Entropy::Exact(v) => f.write_str(&crate::numeric::fmt_q(v)),
            Entropy::Approx(v) => write!(f, "≈{v:.9}"),
        }
    }
}

fn log2_f64(a: &Q) -> f64 {
    let shift = |n: &num::BigInt| -> f64 {
        let bits = n.bits() as i64;
        let keep = 60i64.min(bits);
        let top = (n >> (bits - keep) as usize).to_f64().unwrap();
        top.log2() + (bits - keep) as f64
    };
    shift(a.numer()) - shift(a.denom())
}

pub fn entropy(g: &PAMap) -> Result<Entropy> {
    let slopes = g.slopes();
    if slopes.iter().any(|s| s.is_zero()) {
        return domain("entropy undefined on a plateau");
    }
    let xs = g.xs();
    let mut exact = qi(0);
    let mut approx = 0f64;
    let mut all_exact = true;
    for (i, s) in slopes.iter().enumerate() {
        let w = &xs[i + 1] - &xs[i];
        let a = s.abs();
        match log2_exact(&a)? {
            Some(k) if all_exact => exact += &w * qi(k),
            _ => {
                all_exact = false;
            }
        }
        approx += w.to_f64().unwrap() * log2_f64(&a);
    }
    Ok(if all_exact { Entropy::Exact(exact) } else { Entropy::Approx(approx) })
}

/// Minimum-entropy exponents for `m` legs: `1, 2, …, m−1, m−1` (`0` for one leg).
pub fn min_entropy_exponents(m: usize) -> Vec<i64> {
    if m == 1 {
        return vec![0];
    }
    let mut k: Vec<i64> = (1..m as i64).collect();
    k.push(m as i64 - 1);
    k
}

pub fn c_min(m: usize) -> Result<Q> {
    if m < 1 {
        return domain("c_min needs m >= 1");
    }
    Ok(min_entropy_exponents(m).iter().map(|&k| qi(k) * pow2(-k)).sum())
}
