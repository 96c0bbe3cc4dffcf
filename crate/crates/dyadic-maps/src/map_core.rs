//! Canonical continuous piecewise-affine maps of `[0,1]` and their exact algebra.

use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{domain, Error, Result};
use crate::numeric::{fmt_q, is_dyadic, log2_exact, parse_q, q, qi, sort_dedup, Q};

pub const DEFAULT_SEGMENT_BUDGET: usize = 1_000_000;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Interval {
        assert!(lo <= hi, "interval with lo > hi");
        Interval { lo, hi }
    }

    pub fn unit() -> Interval {
        Interval::new(qi(0), qi(1))
    }

    pub fn len(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    /// True when the interiors meet.
    pub fn overlaps(&self, o: &Interval) -> bool {
        self.lo < o.hi && o.lo < self.hi
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval::new(self.lo.clone().min(o.lo.clone()), self.hi.clone().max(o.hi.clone()))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_q(&self.lo), fmt_q(&self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BreakpointKind {
    Endpoint,
    TypeI,
    TypeII,
}

/// One element of a point preimage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preimage {
    Point(Q),
    Plateau(Interval),
}

/// A maximal monotone branch of `g` over a band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leg {
    pub domain: Interval,
    pub onto: bool,
    pub increasing: bool,
}

/// Continuous piecewise-affine map given by its breakpoints.
///
/// Always canonical: `x` strictly increasing from 0 to 1 and no interior
/// breakpoint collinear with its neighbours, so equality of maps is
/// equality of breakpoint lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PAMap {
    pts: Vec<(Q, Q)>,
}

fn collinear(a: &(Q, Q), b: &(Q, Q), c: &(Q, Q)) -> bool {
    (&b.1 - &a.1) * (&c.0 - &b.0) == (&c.1 - &b.1) * (&b.0 - &a.0)
}

fn canonical(pts: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    let mut out: Vec<(Q, Q)> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(last) = out.last() {
            if last.0 == p.0 {
                continue;
            }
        }
        while out.len() >= 2 && collinear(&out[out.len() - 2], &out[out.len() - 1], &p) {
            out.pop();
        }
        out.push(p);
    }
    out
}

impl PAMap {
    /// Validates and canonicalizes a breakpoint list.
    pub fn new(pts: Vec<(Q, Q)>) -> Result<PAMap> {
        if pts.len() < 2 {
            return domain("a map needs at least two breakpoints");
        }
        if !pts[0].0.is_zero() || !pts[pts.len() - 1].0.is_one() {
            return domain("breakpoints must start at x=0 and end at x=1");
        }
        for w in pts.windows(2) {
            if w[0].0 >= w[1].0 {
                return domain(format!("x not strictly increasing at {}", fmt_q(&w[1].0)));
            }
        }
        let zero = qi(0);
        let one = qi(1);
        for p in &pts {
            if p.1 < zero || p.1 > one {
                return domain(format!("value {} outside [0,1]", fmt_q(&p.1)));
            }
        }
        Ok(PAMap { pts: canonical(pts) })
    }

    pub(crate) fn from_sorted(pts: Vec<(Q, Q)>) -> PAMap {
        debug_assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
        PAMap { pts: canonical(pts) }
    }

    /// Builds from `(x, y)` pairs of small integer fractions `(xn, xd, yn, yd)`.
    pub fn from_fracs(v: &[(i64, i64, i64, i64)]) -> PAMap {
        PAMap::new(v.iter().map(|&(a, b, c, d)| (q(a, b), q(c, d))).collect())
            .expect("valid literal map")
    }

    pub fn identity() -> PAMap {
        PAMap::from_fracs(&[(0, 1, 0, 1), (1, 1, 1, 1)])
    }

    /// `g0-(x) = 1 - x`.
    pub fn reflection() -> PAMap {
        PAMap::from_fracs(&[(0, 1, 1, 1), (1, 1, 0, 1)])
    }

    /// The full tent `w2,[0,1]`.
    pub fn tent() -> PAMap {
        PAMap::from_fracs(&[(0, 1, 0, 1), (1, 2, 1, 1), (1, 1, 0, 1)])
    }

    /// Thompson generator `f_A`.
    pub fn f_a() -> PAMap {
        PAMap::from_fracs(&[(0, 1, 0, 1), (1, 2, 1, 4), (3, 4, 1, 2), (1, 1, 1, 1)])
    }

    /// Thompson generator `f_B`.
    pub fn f_b() -> PAMap {
        PAMap::from_fracs(&[
            (0, 1, 0, 1),
            (1, 2, 1, 2),
            (3, 4, 5, 8),
            (7, 8, 3, 4),
            (1, 1, 1, 1),
        ])
    }

    /// The five-piece family with parameter `delta` in `(0, 1/2)`.
    pub fn period_family(delta: &Q) -> Result<PAMap> {
        let half = q(1, 2);
        if !(delta > &qi(0) && delta < &half) {
            return domain("delta must lie in (0, 1/2)");
        }
        PAMap::new(vec![
            (qi(0), &half - delta),
            (delta / qi(2), &half + delta),
            (q(1, 4), qi(1)),
            (q(3, 4), qi(0)),
            (qi(1) - delta / qi(2), &half - delta),
            (qi(1), &half + delta),
        ])
    }

    pub fn points(&self) -> &[(Q, Q)] {
        &self.pts
    }

    pub fn xs(&self) -> Vec<Q> {
        self.pts.iter().map(|p| p.0.clone()).collect()
    }

    pub fn num_segments(&self) -> usize {
        self.pts.len() - 1
    }

    pub fn slope(&self, i: usize) -> Q {
        let (a, b) = (&self.pts[i], &self.pts[i + 1]);
        (&b.1 - &a.1) / (&b.0 - &a.0)
    }

    pub fn slopes(&self) -> Vec<Q> {
        (0..self.num_segments()).map(|i| self.slope(i)).collect()
    }

    /// Segment `i` as `(x0, y0, x1, y1)`.
    pub fn segment(&self, i: usize) -> (&Q, &Q, &Q, &Q) {
        let (a, b) = (&self.pts[i], &self.pts[i + 1]);
        (&a.0, &a.1, &b.0, &b.1)
    }

    /// Index of the segment containing `x` (left-closed, last one closed).
    pub fn segment_index(&self, x: &Q) -> usize {
        let n = self.num_segments();
        match self.pts.binary_search_by(|p| p.0.cmp(x)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, x: &Q) -> Result<Q> {
        if x < &qi(0) || x > &qi(1) {
            return domain(format!("x = {} outside [0,1]", fmt_q(x)));
        }
        Ok(self.at(x))
    }

    /// Evaluation without the range check.
    pub fn at(&self, x: &Q) -> Q {
        match self.pts.binary_search_by(|p| p.0.cmp(x)) {
            Ok(i) => self.pts[i].1.clone(),
            Err(i) => {
                let (a, b) = (&self.pts[i - 1], &self.pts[i]);
                &a.1 + (&b.1 - &a.1) * (x - &a.0) / (&b.0 - &a.0)
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pts.len() == 2 && self.pts[0].1.is_zero() && self.pts[1].1.is_one()
    }

    pub fn is_onto(&self) -> bool {
        let zero = qi(0);
        let one = qi(1);
        self.pts.iter().any(|p| p.1 == zero) && self.pts.iter().any(|p| p.1 == one)
    }

    pub fn min_value(&self) -> Q {
        self.pts.iter().map(|p| p.1.clone()).min().unwrap()
    }

    pub fn max_value(&self) -> Q {
        self.pts.iter().map(|p| p.1.clone()).max().unwrap()
    }

    /// Sorted distinct breakpoint values together with 0 and 1.
    pub fn band_levels(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self.pts.iter().map(|p| p.1.clone()).collect();
        v.push(qi(0));
        v.push(qi(1));
        sort_dedup(&mut v);
        v
    }

    pub fn to_pamap_string(&self) -> String {
        let mut s = String::from("pamap/1\n");
        for (x, y) in &self.pts {
            s.push_str(&fmt_q(x));
            s.push(' ');
            s.push_str(&fmt_q(y));
            s.push('\n');
        }
        s
    }

    /// Strictly increasing onto map's inverse (swap coordinates).
    pub fn inverse(&self) -> Result<PAMap> {
        if !self.slopes().iter().all(|s| s.is_positive()) || !self.pts[0].1.is_zero() {
            return domain("inverse needs a strictly increasing map fixing 0 and 1");
        }
        PAMap::new(self.pts.iter().map(|(x, y)| (y.clone(), x.clone())).collect())
    }
}

impl fmt::Display for PAMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pts
            .iter()
            .map(|(x, y)| format!("({}, {})", fmt_q(x), fmt_q(y)))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Parses the `pamap/1` format. Blank lines and `#` comments are skipped.
pub fn parse_pamap(text: &str) -> Result<PAMap> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, "pamap/1")) => {}
        Some((n, l)) => {
            return Err(Error::Parse { line: n, msg: format!("expected header pamap/1, got {:?}", l) })
        }
        None => return Err(Error::Parse { line: 1, msg: "empty input".into() }),
    }
    let mut pts = Vec::new();
    let mut last_line = 1;
    for (n, l) in lines {
        last_line = n;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::Parse { line: n, msg: format!("expected `x y`, got {:?}", l) });
        }
        let x = parse_q(f[0]).map_err(|e| Error::Parse { line: n, msg: e.to_string() })?;
        let y = parse_q(f[1]).map_err(|e| Error::Parse { line: n, msg: e.to_string() })?;
        pts.push((x, y));
    }
    PAMap::new(pts).map_err(|e| Error::Parse { line: last_line, msg: e.to_string() })
}

pub fn eval(g: &PAMap, x: &Q) -> Result<Q> {
    g.eval(x)
}

/// `g1 ∘ g2` with a segment budget.
pub fn compose_budget(g1: &PAMap, g2: &PAMap, budget: usize) -> Result<PAMap> {
    let mut out: Vec<(Q, Q)> = Vec::with_capacity(g2.pts.len() + g1.pts.len());
    for i in 0..g2.num_segments() {
        let (x0, y0, x1, y1) = g2.segment(i);
        out.push((x0.clone(), g1.at(y0)));
        if y0 != y1 {
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            let a = g1.pts.partition_point(|p| &p.0 <= lo);
            let b = g1.pts.partition_point(|p| &p.0 < hi);
            let inner = &g1.pts[a..b];
            let dx = x1 - x0;
            let dy = y1 - y0;
            let mut push = |p: &(Q, Q)| {
                let x = x0 + (&p.0 - y0) * &dx / &dy;
                out.push((x, p.1.clone()));
            };
            if y0 < y1 {
                inner.iter().for_each(&mut push);
            } else {
                inner.iter().rev().for_each(&mut push);
            }
        }
        if out.len() > budget + 1 {
            return Err(Error::Budget { budget });
        }
    }
    let last = g2.pts.last().unwrap();
    out.push((last.0.clone(), g1.at(&last.1)));
    Ok(PAMap::from_sorted(out))
}

pub fn compose(g1: &PAMap, g2: &PAMap) -> PAMap {
    compose_budget(g1, g2, usize::MAX - 1).expect("unbounded compose")
}

/// Composes a right-to-left list: `maps[0] ∘ maps[1] ∘ …`.
pub fn compose_all(maps: &[PAMap]) -> PAMap {
    maps.iter().rev().fold(PAMap::identity(), |acc, m| compose(m, &acc))
}

pub fn iterate(g: &PAMap, n: usize, budget: usize) -> Result<PAMap> {
    let mut acc = PAMap::identity();
    for _ in 0..n {
        acc = compose_budget(g, &acc, budget)?;
    }
    Ok(acc)
}

pub fn preimage_point(g: &PAMap, y: &Q) -> Vec<Preimage> {
    let mut out: Vec<Preimage> = Vec::new();
    let push_point = |out: &mut Vec<Preimage>, x: Q| {
        match out.last() {
            Some(Preimage::Point(p)) if *p == x => {}
            Some(Preimage::Plateau(iv)) if iv.hi == x => {}
            _ => out.push(Preimage::Point(x)),
        }
    };
    for i in 0..g.num_segments() {
        let (x0, y0, x1, y1) = g.segment(i);
        if y0 == y1 {
            if y0 == y {
                if let Some(Preimage::Point(p)) = out.last() {
                    if p == x0 {
                        out.pop();
                    }
                }
                if let Some(Preimage::Plateau(iv)) = out.last_mut() {
                    if &iv.hi == x0 {
                        iv.hi = x1.clone();
                        continue;
                    }
                }
                out.push(Preimage::Plateau(Interval::new(x0.clone(), x1.clone())));
            }
            continue;
        }
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        if lo <= y && y <= hi {
            let x = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
            push_point(&mut out, x);
        }
    }
    out
}

/// Legs of `g` over `band`: maximal monotone pieces of `g^{-1}(band)`.
pub fn preimage_interval(g: &PAMap, band: &Interval) -> Vec<Leg> {
    let degenerate = band.is_degenerate();
    // (lo, hi, direction) pieces, direction 0 for plateaus.
    let mut pieces: Vec<(Q, Q, i8)> = Vec::new();
    for i in 0..g.num_segments() {
        let (x0, y0, x1, y1) = g.segment(i);
        let dir: i8 = if y1 > y0 { 1 } else if y1 < y0 { -1 } else { 0 };
        let piece = if dir == 0 {
            if band.contains(y0) {
                Some((x0.clone(), x1.clone()))
            } else {
                None
            }
        } else {
            let at = |y: &Q| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
            let (ylo, yhi) = if dir > 0 { (y0, y1) } else { (y1, y0) };
            let a = if &band.lo > ylo { band.lo.clone() } else { ylo.clone() };
            let b = if &band.hi < yhi { band.hi.clone() } else { yhi.clone() };
            if a > b {
                None
            } else {
                let (xa, xb) = (at(&a), at(&b));
                Some(if xa <= xb { (xa, xb) } else { (xb, xa) })
            }
        };
        if let Some((lo, hi)) = piece {
            if lo == hi && !degenerate {
                continue;
            }
            if let Some(last) = pieces.last_mut() {
                let same = last.2 == 0 || dir == 0 || last.2 == dir;
                if last.1 == lo && same {
                    last.1 = hi;
                    if last.2 == 0 {
                        last.2 = dir;
                    }
                    continue;
                }
                if degenerate && last.1 == lo && lo == hi {
                    continue;
                }
            }
            pieces.push((lo, hi, dir));
        }
    }
    pieces
        .into_iter()
        .map(|(lo, hi, dir)| {
            let (a, b) = (g.at(&lo), g.at(&hi));
            let (mn, mx) = if a <= b { (a, b) } else { (b, a) };
            Leg {
                onto: mn == band.lo && mx == band.hi,
                increasing: dir >= 0,
                domain: Interval::new(lo, hi),
            }
        })
        .collect()
}

fn sign(v: &Q) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

pub fn classify_breakpoints(g: &PAMap) -> Vec<(Q, BreakpointKind)> {
    let s = g.slopes();
    let n = g.pts.len();
    g.pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let kind = if i == 0 || i == n - 1 {
                BreakpointKind::Endpoint
            } else if sign(&s[i - 1]) * sign(&s[i]) < 0 {
                BreakpointKind::TypeII
            } else {
                BreakpointKind::TypeI
            };
            (p.0.clone(), kind)
        })
        .collect()
}

pub fn count_type2(g: &PAMap) -> usize {
    let s = g.slopes();
    s.windows(2).filter(|w| sign(&w[0]) * sign(&w[1]) < 0).count()
}

/// Turning points: `0`, every type-II breakpoint, and `1`.
pub fn turning_points(g: &PAMap) -> Vec<(Q, Q)> {
    let s = g.slopes();
    let mut out = vec![g.pts[0].clone()];
    for i in 1..g.pts.len() - 1 {
        if sign(&s[i - 1]) * sign(&s[i]) < 0 {
            out.push(g.pts[i].clone());
        }
    }
    out.push(g.pts.last().unwrap().clone());
    out
}

/// Sum of `1/|slope|` over legs, one entry per open band between `levels`.
pub fn band_weights(g: &PAMap, levels: &[Q]) -> Vec<Q> {
    let nb = levels.len() - 1;
    let mut diff = vec![qi(0); nb + 1];
    let index: std::collections::HashMap<&Q, usize> = levels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let locate = |y: &Q| index.get(y).copied().unwrap_or_else(|| levels.partition_point(|l| l < y));
    for i in 0..g.num_segments() {
        let (_, y0, _, y1) = g.segment(i);
        if y0 == y1 {
            continue;
        }
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        let (a, b) = (locate(lo), locate(hi));
        let w = (g.pts[i + 1].0.clone() - &g.pts[i].0) / (hi - lo);
        diff[a] += &w;
        diff[b] -= &w;
    }
    let mut acc = qi(0);
    diff.truncate(nb);
    diff.into_iter()
        .map(|d| {
            acc += d;
            acc.clone()
        })
        .collect()
}

/// Band-wise check that every open band receives total weight 1.
pub fn is_lambda_preserving(g: &PAMap) -> Result<bool> {
    if !g.is_onto() {
        return domain("λ-preservation needs a surjective map");
    }
    if g.slopes().iter().any(|s| s.is_zero()) {
        return Ok(false);
    }
    let levels = g.band_levels();
    Ok(band_weights(g, &levels).iter().all(|w| w.is_one()))
}

fn slope_is_pow2(s: &Q) -> bool {
    !s.is_zero() && matches!(log2_exact(&s.abs()), Ok(Some(_)))
}

pub fn is_in_f(g: &PAMap) -> bool {
    g.pts[0].1.is_zero()
        && g.pts.last().unwrap().1.is_one()
        && g.slopes().iter().all(|s| s.is_positive() && slope_is_pow2(s))
        && g.pts.iter().all(|(x, y)| is_dyadic(x) && is_dyadic(y))
}

pub fn is_in_g(g: &PAMap) -> bool {
    g.is_onto()
        && g.slopes().iter().all(slope_is_pow2)
        && g.pts.iter().all(|(x, y)| is_dyadic(x) && is_dyadic(y))
        && is_lambda_preserving(g).unwrap_or(false)
}

/// Exact `sup |h1 - h2|`.
pub fn sup_distance(h1: &PAMap, h2: &PAMap) -> Q {
    let mut best = qi(0);
    for x in h1.pts.iter().map(|p| &p.0).chain(h2.pts.iter().map(|p| &p.0)) {
        let d = (h1.at(x) - h2.at(x)).abs();
        if d > best {
            best = d;
        }
    }
    best
}

/// Image of an interval under `g`.
pub fn image(g: &PAMap, iv: &Interval) -> Interval {
    let ends = [g.at(&iv.lo), g.at(&iv.hi)];
    let a = g.pts.partition_point(|p| p.0 <= iv.lo);
    let b = g.pts.partition_point(|p| p.0 < iv.hi).max(a);
    let inner = g.pts[a..b].iter().map(|p| &p.1);
    let lo = inner.clone().chain(ends.iter()).min().unwrap().clone();
    let hi = inner.chain(ends.iter()).max().unwrap().clone();
    Interval::new(lo, hi)
}
