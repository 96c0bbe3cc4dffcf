//! Constructions on `G`: dyadic approximation of λ-preserving maps, window
//! perturbations, LEO-ization, minimum-entropy slope rewriting and entropy
//! targeting.

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{ends_reached_from_interior, entropy, is_leo, minimal_family, min_entropy_exponents, Entropy};
use crate::error::{domain, Error, Result};
use crate::map_core::{
    compose, is_in_f, is_in_g, is_lambda_preserving, preimage_interval, sup_distance, Interval,
    PAMap,
};
use crate::numeric::{
    ceil_log2, floor_log2, floor_to_grid, is_dyadic, log2_exact, pow2, q, qi, round_to_grid, sort_dedup, Q,
};

// ---------------------------------------------------------------------------
// Shared helpers

fn push_pt(out: &mut Vec<(Q, Q)>, p: (Q, Q)) {
    if out.last().map_or(false, |l| l.0 == p.0) {
        return;
    }
    out.push(p);
}

/// Replacement of a map on `[lo, hi]` by a path. `path[0]` is `(0, g(lo))`
/// and the last offset is the new width; everything right of `hi` shifts.
struct Patch {
    lo: Q,
    hi: Q,
    path: Vec<(Q, Q)>,
}

fn splice(g: &PAMap, mut patches: Vec<Patch>) -> Result<PAMap> {
    patches.sort_by(|a, b| a.lo.cmp(&b.lo));
    let pts = g.points();
    let mut out: Vec<(Q, Q)> = Vec::with_capacity(pts.len());
    let mut shift = qi(0);
    let mut k = 0;
    for p in patches {
        while k < pts.len() && pts[k].0 < p.lo {
            push_pt(&mut out, (&pts[k].0 + &shift, pts[k].1.clone()));
            k += 1;
        }
        let base = &p.lo + &shift;
        for (dx, y) in &p.path {
            push_pt(&mut out, (&base + dx, y.clone()));
        }
        shift += &p.path.last().unwrap().0 - (&p.hi - &p.lo);
        while k < pts.len() && pts[k].0 <= p.hi {
            k += 1;
        }
    }
    while k < pts.len() {
        push_pt(&mut out, (&pts[k].0 + &shift, pts[k].1.clone()));
        k += 1;
    }
    PAMap::new(out)
}

/// Breakpoint list with a vertex added wherever a segment crosses a level.
pub(crate) fn insert_crossings(pts: &[(Q, Q)], levels: &[Q]) -> Vec<(Q, Q)> {
    let mut out = vec![pts[0].clone()];
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
        if y0 != y1 {
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            let a = levels.partition_point(|l| l <= lo);
            let b = levels.partition_point(|l| l < hi);
            let mut inner: Vec<&Q> = levels[a..b].iter().collect();
            if y0 > y1 {
                inner.reverse();
            }
            for l in inner {
                let x = x0 + (l - y0) * (x1 - x0) / (y1 - y0);
                out.push((x, l.clone()));
            }
        }
        out.push(w[1].clone());
    }
    out
}

/// Dyadic breakpoints and power-of-two slopes; with λ-preservation this is `G`.
fn dyadic_pow2(g: &PAMap) -> bool {
    g.points().iter().all(|(x, y)| is_dyadic(x) && is_dyadic(y)) && g.slopes().iter().all(|s| is_pow2(&s.abs()))
}

fn is_pow2(a: &Q) -> bool {
    a.is_positive() && matches!(log2_exact(a), Ok(Some(_)))
}

fn exp2_of(a: &Q) -> Result<i64> {
    log2_exact(&a.abs())?.ok_or_else(|| Error::Domain(format!("{} is not a power of two", a)))
}

/// Largest power of two `<= a`.
fn pow2_floor(a: &Q) -> Q {
    pow2(floor_log2(a))
}

/// Coarsest dyadic within distance `< tau` of `x`.
///
/// Finer grids contain coarser ones, so a hit at `k` implies one at `k + 1`
/// and the first hit can be found by bisection.
fn coarsest_dyadic_near(x: &Q, tau: &Q) -> Q {
    let hit = |k: u64| {
        let c = round_to_grid(x, k);
        ((&c - x).abs() < *tau).then_some(c)
    };
    let (mut lo, mut hi) = (0u64, (-floor_log2(tau)).max(0) as u64);
    if let Some(c) = hit(0) {
        return c;
    }
    let mut best = hit(hi).expect("grid finer than tau");
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        match hit(mid) {
            Some(c) => {
                hi = mid;
                best = c;
            }
            None => lo = mid,
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Partition points and F-approximation

/// Dyadic point between `p1` and `p2` joining them with slopes `2^(k+1)` then `2^k`.
pub fn partition_point(p1: &(Q, Q), p2: &(Q, Q)) -> Result<(Q, Q)> {
    if ![&p1.0, &p1.1, &p2.0, &p2.1].iter().all(|v| is_dyadic(v)) {
        return domain("partition point needs dyadic endpoints");
    }
    if p1.0 >= p2.0 || p1.1 >= p2.1 {
        return domain("partition point needs x1 < x2 and y1 < y2");
    }
    let dx = &p2.0 - &p1.0;
    let dy = &p2.1 - &p1.1;
    let s = &dy / &dx;
    if is_pow2(&s) {
        return domain("slope is already a power of two");
    }
    let k2 = floor_log2(&s);
    let x3 = &p1.0 + pow2(-k2) * &dy - &dx;
    let y3 = &p1.1 + pow2(k2 + 1) * (&x3 - &p1.0);
    Ok((x3, y3))
}

/// Path from `p1` (excluded) to `p2` with power-of-two slopes.
pub(crate) fn connect(p1: &(Q, Q), p2: &(Q, Q)) -> Result<Vec<(Q, Q)>> {
    let s = (&p2.1 - &p1.1) / (&p2.0 - &p1.0);
    if is_pow2(&s.abs()) {
        return Ok(vec![p2.clone()]);
    }
    let mid = if s.is_positive() {
        partition_point(p1, p2)?
    } else {
        let (x, y) = partition_point(&(p1.0.clone(), -&p1.1), &(p2.0.clone(), -&p2.1))?;
        (x, -y)
    };
    Ok(vec![mid, p2.clone()])
}

/// Element of `F` within `eps` of an increasing homeomorphism `a`.
pub fn approximate_increasing_in_f(a: &PAMap, eps: &Q) -> Result<PAMap> {
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    let p = a.points();
    if !p[0].1.is_zero() || !p.last().unwrap().1.is_one() || a.slopes().iter().any(|s| !s.is_positive()) {
        return domain("expected an increasing map fixing 0 and 1");
    }
    if is_in_f(a) {
        return Ok(a.clone());
    }
    let third = eps / qi(3);
    let mut n: i64 = 1;
    loop {
        let cells = 1i64 << n;
        let ys: Vec<Q> = (0..=cells).map(|i| a.at(&q(i, cells))).collect();
        let gaps: Vec<Q> = ys.windows(2).map(|w| &w[1] - &w[0]).collect();
        if gaps.iter().any(|g| g >= &third) {
            n += 1;
            continue;
        }
        let min_gap = gaps.iter().min().unwrap().clone();
        let mut pk: u64 = 1;
        while pow2(-(pk as i64)) * qi(2) >= min_gap || pow2(-(pk as i64)) >= third {
            pk += 1;
        }
        let mut pts = vec![(qi(0), qi(0))];
        for i in 1..=cells {
            let y = round_to_grid(&ys[i as usize], pk);
            let next = (q(i, cells), y);
            let prev = pts.last().unwrap().clone();
            pts.extend(connect(&prev, &next)?);
        }
        let f = PAMap::new(pts)?;
        if is_in_f(&f) && sup_distance(a, &f) < *eps {
            return Ok(f);
        }
        n += 1;
    }
}

// ---------------------------------------------------------------------------
// G-approximation

/// Intermediate maps of [`approximate_in_g`]: dyadic levels, dyadic
/// abscissae, then power-of-two slopes. Each is λ-preserving.
#[derive(Debug, Clone)]
pub struct GApproximation {
    pub step1: PAMap,
    pub step2: PAMap,
    pub step3: PAMap,
}

/// Moves every non-dyadic level `v` to a nearby dyadic `v'`.
///
/// Inside a thin dyadic strip around `v` all vertices at `v` move vertically;
/// the left-most crossing vertex also shifts horizontally by `±(v'−v)` so the
/// two half-bands keep total preimage width equal to their heights.
fn dyadic_levels(h: &PAMap, budget: &Q) -> Result<PAMap> {
    let bad: Vec<Q> = h.band_levels().into_iter().filter(|v| !is_dyadic(v)).collect();
    let mut pts: Vec<(Q, Q)> = h.points().to_vec();
    for v in bad {
        let mut levels: Vec<Q> = pts.iter().map(|p| p.1.clone()).collect();
        sort_dedup(&mut levels);
        let mut k = (ceil_log2(&(qi(1) / budget)) + 1).max(1) as u64;
        let (a, b) = loop {
            let a = floor_to_grid(&v, k);
            let b = &a + pow2(-(k as i64));
            if levels.iter().all(|l| *l == v || *l < a || *l > b) {
                break (a, b);
            }
            k += 1;
        };
        let mut cut = vec![a.clone(), v.clone(), b.clone()];
        cut.sort();
        pts = insert_crossings(&pts, &cut);
        let inside = |y: &Q| &a <= y && y <= &b;
        // Left-most crossing component: runs from one strip edge to the other.
        let mut z: Option<(usize, bool)> = None;
        let mut i = 0;
        while i < pts.len() && z.is_none() {
            if !inside(&pts[i].1) {
                i += 1;
                continue;
            }
            let s = i;
            while i + 1 < pts.len() && inside(&pts[i + 1].1) {
                i += 1;
            }
            let e = i;
            i += 1;
            let (ys, ye) = (&pts[s].1, &pts[e].1);
            if (*ys == a && *ye == b) || (*ys == b && *ye == a) {
                let vi = (s + 1..e).find(|&j| pts[j].1 == v).expect("crossing passes v");
                z = Some((vi, *ys == a));
            }
        }
        let (zi, up) = z.ok_or_else(|| Error::Domain("no crossing of a non-dyadic level".into()))?;
        let (p, qw) = {
            let (xl, xz, xr) = (&pts[zi - 1].0, &pts[zi].0, &pts[zi + 1].0);
            if up {
                (xz - xl, xr - xz)
            } else {
                (xr - xz, xz - xl)
            }
        };
        let lim = if p < qw { p } else { qw };
        let mut kk = k + 1;
        let v2 = loop {
            let c = round_to_grid(&v, kk);
            if c > a && c < b && (&c - &v).abs() < lim {
                break c;
            }
            kk += 1;
        };
        let d = &v2 - &v;
        for pt in pts.iter_mut() {
            if pt.1 == v {
                pt.1 = v2.clone();
            }
        }
        if up {
            pts[zi].0 += &d;
        } else {
            pts[zi].0 -= &d;
        }
    }
    PAMap::new(pts)
}

/// Dyadic decomposition of `[u, w]` into intervals of power-of-two length.
fn power_decomposition(u: &Q, w: &Q) -> Vec<Q> {
    let mut out = Vec::new();
    let mut cur = u.clone();
    while &cur < w {
        let mut step = pow2_floor(&(w - &cur));
        while !(&cur / &step).is_integer() {
            step /= qi(2);
        }
        cur += &step;
        out.push(cur.clone());
    }
    out.pop();
    out
}

/// Lines for Step 2: levels, a `2^-m0` grid and power-of-two refinements.
fn step2_lines(h: &PAMap, grid: i64) -> Vec<Q> {
    let mut base = h.band_levels();
    let n = 1i64 << grid;
    base.extend((1..n).map(|i| q(i, n)));
    sort_dedup(&mut base);
    let mut lines = base.clone();
    for w in base.windows(2) {
        lines.extend(power_decomposition(&w[0], &w[1]));
    }
    sort_dedup(&mut lines);
    lines
}

/// Rounds vertex abscissae to dyadics while every band keeps its total width.
fn dyadic_abscissae(h: &PAMap, budget: &Q) -> Result<(PAMap, Vec<Q>)> {
    let mut grid = 1i64;
    while pow2(-grid) * qi(2) >= *budget {
        grid += 1;
    }
    let lines = step2_lines(h, grid);
    let pts = insert_crossings(h.points(), &lines);
    let line_of: Vec<usize> = pts
        .iter()
        .map(|p| lines.binary_search(&p.1).expect("vertex on a line"))
        .collect();
    let n = pts.len();
    let mut by_line: Vec<Vec<usize>> = vec![Vec::new(); lines.len()];
    for j in 1..n - 1 {
        by_line[line_of[j]].push(j);
    }
    let smax = h.slopes().iter().map(|s| s.abs()).max().unwrap();
    let minw = pts.windows(2).map(|w| &w[1].0 - &w[0].0).min().unwrap();
    let crowd = by_line.iter().map(|v| v.len()).max().unwrap_or(0) as i64 + 1;
    let mut tau = {
        let a = budget / (qi(4) * &smax * qi(crowd));
        let b = &minw / qi(4 * crowd);
        if a < b {
            a
        } else {
            b
        }
    };
    for _ in 0..64 {
        let mut xs: Vec<Q> = pts.iter().map(|p| p.0.clone()).collect();
        for verts in &by_line {
            let mut acc = qi(0);
            let crossings: Vec<(usize, i64)> = verts
                .iter()
                .filter_map(|&j| {
                    let (l, c, r) = (line_of[j - 1], line_of[j], line_of[j + 1]);
                    if (l < c) == (r < c) {
                        None
                    } else {
                        Some((j, if l < c { 1 } else { -1 }))
                    }
                })
                .collect();
            for &j in verts {
                if !crossings.iter().any(|c| c.0 == j) {
                    xs[j] = coarsest_dyadic_near(&pts[j].0, &tau);
                }
            }
            for (idx, &(j, sg)) in crossings.iter().enumerate() {
                if idx + 1 < crossings.len() {
                    let nx = coarsest_dyadic_near(&pts[j].0, &tau);
                    acc += qi(sg) * (&nx - &pts[j].0);
                    xs[j] = nx;
                } else {
                    xs[j] = &pts[j].0 - qi(sg) * &acc;
                }
            }
        }
        if xs.windows(2).all(|w| w[0] < w[1]) {
            let out: Vec<(Q, Q)> = xs.into_iter().zip(pts.iter().map(|p| p.1.clone())).collect();
            let g = PAMap::new(out)?;
            if g.points().iter().all(|p| is_dyadic(&p.0)) && sup_distance(h, &g) < *budget {
                return Ok((g, lines));
            }
        }
        tau /= qi(2);
    }
    Err(Error::Domain("dyadic abscissa rounding did not converge".into()))
}

/// Replaces each non-power-of-two segment by an odd window of power-of-two legs.
fn power_slopes(h: &PAMap, lines: &[Q]) -> Result<PAMap> {
    let pts = insert_crossings(h.points(), lines);
    let mut out = vec![pts[0].clone()];
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
        let height = (y1 - y0).abs();
        let width = x1 - x0;
        let r = &width / &height;
        if is_pow2(&r) {
            out.push(w[1].clone());
            continue;
        }
        if !is_pow2(&height) || !is_dyadic(&r) {
            return domain("segment does not span a power-of-two band");
        }
        // Binary digits of r, made odd in number by halving the smallest.
        let mut parts: Vec<Q> = Vec::new();
        let mut rest = r.clone();
        while !rest.is_zero() {
            let p = pow2_floor(&rest);
            rest -= &p;
            parts.push(p);
        }
        if parts.len() % 2 == 0 {
            let last = parts.pop().unwrap() / qi(2);
            parts.push(last.clone());
            parts.push(last);
        }
        let mut x = x0.clone();
        for (i, p) in parts.iter().enumerate() {
            x += p * &height;
            let y = if i % 2 == 0 { y1.clone() } else { y0.clone() };
            out.push((x.clone(), y));
        }
    }
    PAMap::new(out)
}

/// Runs the three dyadic repair steps, each within `eps/6`.
pub fn approximate_in_g_stages(h: &PAMap, eps: &Q) -> Result<GApproximation> {
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    if !is_lambda_preserving(h)? {
        return domain("input map is not λ-preserving");
    }
    if is_in_g(h) {
        return Ok(GApproximation { step1: h.clone(), step2: h.clone(), step3: h.clone() });
    }
    let budget = eps / qi(6);
    let step1 = dyadic_levels(h, &budget)?;
    let (step2, lines) = dyadic_abscissae(&step1, &budget)?;
    let step3 = power_slopes(&step2, &lines)?;
    for s in [&step1, &step2, &step3] {
        if !is_lambda_preserving(s)? {
            return Err(Error::Domain("intermediate map lost λ-preservation".into()));
        }
    }
    Ok(GApproximation { step1, step2, step3 })
}

/// Element of `G` within `eps` of a λ-preserving map.
pub fn approximate_in_g(h: &PAMap, eps: &Q) -> Result<PAMap> {
    let st = approximate_in_g_stages(h, eps)?;
    debug_assert!(dyadic_pow2(&st.step3));
    Ok(st.step3)
}

// ---------------------------------------------------------------------------
// Window perturbations

/// Behaviour of a window map outside its interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outside {
    Identity,
    Reflection,
}

/// An m-fold window: `exponents.len()` alternating legs on `j` with
/// `|slope| = 2^k`, starting at the bottom of the image when `rising`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub j: Interval,
    pub exponents: Vec<i64>,
    pub rising: bool,
    pub outside: Outside,
}

impl WindowSpec {
    pub fn new(j: Interval, exponents: Vec<i64>, rising: bool) -> WindowSpec {
        WindowSpec { j, exponents, rising, outside: Outside::Identity }
    }

    pub fn reflected(mut self) -> WindowSpec {
        self.outside = Outside::Reflection;
        self
    }

    pub fn folds(&self) -> usize {
        self.exponents.len()
    }
}

pub fn make_window(spec: &WindowSpec) -> Result<PAMap> {
    let j = &spec.j;
    if spec.exponents.is_empty() || j.is_degenerate() || j.lo < qi(0) || j.hi > qi(1) {
        return domain("window needs legs and a nondegenerate interval in [0,1]");
    }
    let total: Q = spec.exponents.iter().map(|&k| pow2(-k)).sum();
    if !total.is_one() {
        return domain("window leg exponents must satisfy Σ 2^-k = 1");
    }
    let outside = |x: &Q| match spec.outside {
        Outside::Identity => x.clone(),
        Outside::Reflection => qi(1) - x,
    };
    let (ilo, ihi) = match spec.outside {
        Outside::Identity => (j.lo.clone(), j.hi.clone()),
        Outside::Reflection => (qi(1) - &j.hi, qi(1) - &j.lo),
    };
    let mut up = spec.rising;
    let mut y = if up { ilo.clone() } else { ihi.clone() };
    let mut pts = Vec::new();
    if j.lo > qi(0) {
        pts.push((qi(0), outside(&qi(0))));
        if outside(&j.lo) != y {
            return domain("window start does not meet the outside map");
        }
    }
    pts.push((j.lo.clone(), y.clone()));
    let len = j.len();
    let mut x = j.lo.clone();
    for &k in &spec.exponents {
        x += &len * pow2(-k);
        y = if up { ihi.clone() } else { ilo.clone() };
        up = !up;
        pts.push((x.clone(), y.clone()));
    }
    if j.hi < qi(1) {
        if outside(&j.hi) != y {
            return domain("window end does not meet the outside map");
        }
        pts.push((qi(1), outside(&qi(1))));
    }
    PAMap::new(pts)
}

/// `w̄3,[1/4,1/2]` with slopes 2, 4, 4.
pub fn basic_w3() -> PAMap {
    make_window(&WindowSpec::new(Interval::new(q(1, 4), q(1, 2)), vec![1, 2, 2], true)).unwrap()
}

/// `w2,[3/4,1]`.
pub fn w2_right_quarter() -> PAMap {
    make_window(&WindowSpec::new(Interval::new(q(3, 4), qi(1)), vec![1, 1], true)).unwrap()
}

/// The five basic maps: `w̄3`, `g0+`, `g0−`, `w2,[3/4,1]`, `w2,[0,1]`.
pub fn basic_maps() -> [PAMap; 5] {
    [basic_w3(), PAMap::identity(), PAMap::reflection(), w2_right_quarter(), PAMap::tent()]
}

// ---------------------------------------------------------------------------
// LEO construction

fn seg_left_of(g: &PAMap, b: &Q) -> usize {
    g.points().partition_point(|p| &p.0 < b) - 1
}

fn seg_right_of(g: &PAMap, b: &Q) -> usize {
    g.points().partition_point(|p| &p.0 <= b) - 1
}

fn leo_round(g: &PAMap, members: &[Interval], b: &Q) -> Result<PAMap> {
    let mut gaps: Vec<Interval> = Vec::new();
    let mut cursor = qi(0);
    for m in members {
        if m.lo > cursor {
            gaps.push(Interval::new(cursor.clone(), m.lo.clone()));
        }
        if m.hi > cursor {
            cursor = m.hi.clone();
        }
    }
    if cursor < qi(1) {
        gaps.push(Interval::new(cursor, qi(1)));
    }
    // Step 1: 3-fold windows on short dyadic pieces of the complement.
    let l = ceil_log2(&(qi(2) / b));
    let cell = pow2(-l);
    let mut pieces: Vec<Interval> = Vec::new();
    for gp in &gaps {
        let mut cuts = vec![gp.lo.clone()];
        let mut t = floor_to_grid(&gp.lo, l as u64) + &cell;
        while t < gp.hi {
            cuts.push(t.clone());
            t += &cell;
        }
        cuts.push(gp.hi.clone());
        for w in cuts.windows(2) {
            pieces.push(Interval::new(w[0].clone(), w[1].clone()));
        }
    }
    let mut patches = Vec::new();
    for k in &pieces {
        let i = g.segment_index(&k.lo);
        let s = g.slope(i);
        let (_, _, x1, _) = g.segment(i);
        if x1 < &k.hi || s.abs() != qi(1) {
            return Err(Error::Unsupported("complement of the J-collection is not ±1-affine".into()));
        }
        let y0 = g.at(&k.lo);
        let len = k.len();
        let top = &y0 + &s * &len;
        patches.push(Patch {
            lo: k.lo.clone(),
            hi: k.hi.clone(),
            path: vec![
                (qi(0), y0.clone()),
                (&len / qi(2), top.clone()),
                (&len * q(3, 4), y0),
                (len, top),
            ],
        });
    }
    let g1 = splice(g, patches)?;
    // Step 2: six-segment merges at every interior tile boundary.
    let mut tiles: Vec<Interval> = members.iter().cloned().chain(pieces).collect();
    tiles.sort();
    let mut patches = Vec::new();
    for w in tiles.windows(2) {
        let (ti, tj) = (&w[0], &w[1]);
        if ti.hi != tj.lo {
            return Err(Error::Unsupported("tiles do not abut".into()));
        }
        let bx = ti.hi.clone();
        let by = g1.at(&bx);
        let (il, ir) = (seg_left_of(&g1, &bx), seg_right_of(&g1, &bx));
        let (sl, sr) = (g1.slope(il), g1.slope(ir));
        if sl.is_positive() != sr.is_positive() {
            return Err(Error::Unsupported("turning point at a tile boundary".into()));
        }
        let (k1, k2) = (exp2_of(&sl)?, exp2_of(&sr)?);
        let left_room = &bx - g1.segment(il).0;
        let right_room = g1.segment(ir).2 - &bx;
        let mut m = 1i64;
        loop {
            let h = pow2(-m);
            if &h * qi(4) < *b
                && &h * qi(2) < ti.len()
                && &h * qi(2) < tj.len()
                && pow2(-m - k1) <= left_room
                && pow2(-m - k2) <= right_room
            {
                break;
            }
            m += 1;
        }
        let h = pow2(-m);
        let sg = if sl.is_positive() { qi(1) } else { qi(-1) };
        let ax = &bx - pow2(-m - k1);
        let cx = &bx + pow2(-m - k2);
        let (ya, yc) = (&by - &sg * &h, &by + &sg * &h);
        let dxs = [
            pow2(-m - k1 - 1),
            pow2(-m - k2 - 1),
            pow2(-m - k2 - 2),
            pow2(-m - k1 - 2),
            pow2(-m - k1 - 2),
            pow2(-m - k2 - 2),
        ];
        let ys = [by.clone(), yc.clone(), by.clone(), ya.clone(), by.clone(), yc];
        let mut path = vec![(qi(0), ya)];
        let mut acc = qi(0);
        for (d, y) in dxs.iter().zip(ys) {
            acc += d;
            path.push((acc.clone(), y));
        }
        patches.push(Patch { lo: ax, hi: cx, path });
    }
    splice(&g1, patches)
}

/// LEO element of `G` within `eps` of `g`.
pub fn make_leo(g: &PAMap, eps: &Q) -> Result<PAMap> {
    if !is_in_g(g) {
        return domain("make_leo needs a map in G");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    let mut members = minimal_family(g);
    if members == [Interval::unit()] && ends_reached_from_interior(g)? {
        return Ok(g.clone());
    }
    let mut cur = g.clone();
    let mut budget = eps / qi(2);
    for _ in 0..6 {
        let next = leo_round(&cur, &members, &budget)?;
        debug_assert!(dyadic_pow2(&next));
        if !is_lambda_preserving(&next)? {
            return Err(Error::Domain("LEO round lost λ-preservation".into()));
        }
        members = minimal_family(&next);
        if members == [Interval::unit()] && ends_reached_from_interior(&next)? {
            return Ok(next);
        }
        cur = next;
        budget /= qi(2);
    }
    Err(Error::Unsupported("LEO construction did not converge".into()))
}

// ---------------------------------------------------------------------------
// Dynamic matching

/// Piecewise-constant matching: `(duration, perm)` with `perm[bucket] = pump`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingSchedule {
    pub entries: Vec<(Q, Vec<usize>)>,
}

impl MatchingSchedule {
    /// Amount delivered to each bucket.
    pub fn delivered(&self, alpha: &[Q]) -> Vec<Q> {
        let m = alpha.len();
        let mut out = vec![qi(0); m];
        for (d, p) in &self.entries {
            for i in 0..m {
                out[i] += d * &alpha[p[i]];
            }
        }
        out
    }
}

impl std::fmt::Display for MatchingSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (d, p) in &self.entries {
            let perm: Vec<String> = p.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(f, "{} {}", d, perm.join(" "))?;
        }
        Ok(())
    }
}

/// Greedy excess-capacity schedule; infeasible iff a prefix of `α−β` goes negative.
pub fn solve_dynamic_matching(alpha: &[Q], beta: &[Q]) -> Result<MatchingSchedule> {
    let m = alpha.len();
    if m == 0 || beta.len() != m {
        return domain("alpha and beta must be nonempty and of equal length");
    }
    if alpha.iter().chain(beta).any(|v| !v.is_positive()) {
        return domain("rates and targets must be positive");
    }
    if alpha.windows(2).any(|w| w[0] < w[1]) || beta.windows(2).any(|w| w[0] < w[1]) {
        return domain("alpha and beta must be sorted in descending order");
    }
    if alpha.iter().sum::<Q>() != beta.iter().sum::<Q>() {
        return domain("Σα must equal Σβ");
    }
    let mut prefix = qi(0);
    for i in 0..m {
        prefix += &alpha[i] - &beta[i];
        if prefix.is_negative() {
            return Err(Error::Infeasible { index: i + 1 });
        }
    }
    let mut entries: Vec<(Q, Vec<usize>)> = vec![(qi(1), (0..m).collect())];
    let mut a: Vec<Q> = alpha.to_vec();
    for i in 1..m {
        while a[i] < beta[i] {
            let j = (0..i).find(|&j| a[j] > beta[j]).expect("prefix criterion guarantees excess");
            let excess = &a[j] - &beta[j];
            let short = &beta[i] - &a[i];
            let x = if excess < short { excess } else { short };
            let z = &x / (&a[j] - &a[i]);
            let mut next: Vec<(Q, Vec<usize>)> = Vec::with_capacity(entries.len() * 2);
            for (d, p) in entries {
                let mut sw = p.clone();
                sw.swap(i, j);
                let keep = &d * (qi(1) - &z);
                let moved = &d * &z;
                for (dd, pp) in [(keep, p), (moved, sw)] {
                    if dd.is_zero() {
                        continue;
                    }
                    match next.iter_mut().find(|e| e.1 == pp) {
                        Some(e) => e.0 += dd,
                        None => next.push((dd, pp)),
                    }
                }
            }
            entries = next;
            let (ai, aj) = (a[i].clone(), a[j].clone());
            a[i] = &ai + &z * (&aj - &ai);
            a[j] = &aj - &z * (&aj - &ai);
        }
    }
    Ok(MatchingSchedule { entries })
}

/// Groups of consecutive `l` exponents (sorted ascending) whose weights sum to
/// each `2^-k_j`, closing with a run of `k` exponents covering the last `l`.
pub fn kl_grouping(k: &[i64], l: &[i64]) -> Option<Vec<Vec<usize>>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut li = 0;
    for (kj, &kv) in k.iter().enumerate() {
        if li + 1 == l.len() {
            let rest: Q = k[kj..].iter().map(|&e| pow2(-e)).sum();
            return if rest == pow2(-l[li]) {
                groups.push(vec![li]);
                Some(groups)
            } else {
                None
            };
        }
        let target = pow2(-kv);
        let mut acc = qi(0);
        let mut g = Vec::new();
        while acc < target && li < l.len() {
            acc += pow2(-l[li]);
            g.push(li);
            li += 1;
        }
        if acc != target {
            return None;
        }
        groups.push(g);
    }
    if li == l.len() {
        Some(groups)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Minimum-entropy slope rewriting

struct BandPlan {
    band: Interval,
    legs: Vec<(Interval, bool)>,
    bucket: Vec<usize>,
    k: Vec<i64>,
    schedule: MatchingSchedule,
}

fn plan_band(g: &PAMap, y: &Interval) -> Result<Option<BandPlan>> {
    if y.is_degenerate() || !is_dyadic(&y.lo) || !is_dyadic(&y.hi) {
        return domain("band must be a nondegenerate dyadic interval");
    }
    let legs = preimage_interval(g, y);
    let mut ls = Vec::new();
    for leg in &legs {
        let d = &leg.domain;
        if !leg.onto || g.points().iter().any(|p| p.0 > d.lo && p.0 < d.hi) {
            return domain("legs over the band are not affine");
        }
        ls.push(exp2_of(&(y.len() / d.len()))?);
    }
    let m = legs.len();
    let k = min_entropy_exponents(m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| ls[i]);
    let sorted_l: Vec<i64> = order.iter().map(|&i| ls[i]).collect();
    if sorted_l == k {
        return Ok(None);
    }
    let mut bucket = vec![0; m];
    for (b, &i) in order.iter().enumerate() {
        bucket[i] = b;
    }
    let alpha: Vec<Q> = k.iter().map(|&e| pow2(-e)).collect();
    let beta: Vec<Q> = sorted_l.iter().map(|&e| pow2(-e)).collect();
    let schedule = solve_dynamic_matching(&alpha, &beta)?;
    Ok(Some(BandPlan {
        band: y.clone(),
        legs: legs.into_iter().map(|l| (l.domain, l.increasing)).collect(),
        bucket,
        k,
        schedule,
    }))
}

fn realize(plan: &BandPlan, sub: i64, grid: u64) -> Vec<Patch> {
    let y = &plan.band;
    let h = y.len() * pow2(-sub);
    // Cumulative dyadic rounding of the schedule durations.
    let mut fracs: Vec<(Q, &Vec<usize>)> = Vec::new();
    let mut cum = qi(0);
    let mut prev = qi(0);
    for (d, p) in &plan.schedule.entries {
        cum += d;
        let r = round_to_grid(&cum, grid);
        if r > prev {
            fracs.push((&r - &prev, p));
            prev = r;
        }
    }
    let nsub = 1i64 << sub;
    plan.legs
        .iter()
        .enumerate()
        .map(|(li, (dom, inc))| {
            let b = plan.bucket[li];
            // Pieces bottom to top as (height, exponent).
            let mut pieces: Vec<(Q, i64)> = Vec::new();
            for _ in 0..nsub {
                for (f, p) in &fracs {
                    pieces.push((f * &h, plan.k[p[b]]));
                }
            }
            if !inc {
                pieces.reverse();
            }
            let mut yv = if *inc { y.lo.clone() } else { y.hi.clone() };
            let mut x = qi(0);
            let mut path = vec![(qi(0), yv.clone())];
            for (ht, e) in pieces {
                x += &ht * pow2(-e);
                if *inc {
                    yv += &ht;
                } else {
                    yv -= &ht;
                }
                path.push((x.clone(), yv.clone()));
            }
            Patch { lo: dom.lo.clone(), hi: dom.hi.clone(), path }
        })
        .collect()
}

fn rewrite_bands(g: &PAMap, bands: &[Interval], eps: &Q) -> Result<PAMap> {
    let mut plans = Vec::new();
    for y in bands {
        if let Some(p) = plan_band(g, y)? {
            plans.push(p);
        }
    }
    if plans.is_empty() {
        return Ok(g.clone());
    }
    let mut sub = 0i64;
    let ymax = plans.iter().map(|p| p.band.len()).max().unwrap();
    while &ymax * pow2(-sub) * qi(2) >= *eps {
        sub += 1;
    }
    let mut grid = 8u64;
    for _ in 0..40 {
        let patches: Vec<Patch> = plans.iter().flat_map(|p| realize(p, sub, grid)).collect();
        let g1 = splice(g, patches)?;
        if sup_distance(g, &g1) < *eps {
            return Ok(g1);
        }
        sub += 1;
        grid += 2;
    }
    Err(Error::Domain("slope rewriting did not reach the requested precision".into()))
}

/// Rewrites the legs over `y` so every fiber sees slopes `2^1, …, 2^(m−1), 2^(m−1)`.
pub fn rewrite_slopes_min_entropy(g: &PAMap, y: &Interval, eps: &Q) -> Result<PAMap> {
    if !is_in_g(g) {
        return domain("slope rewriting needs a map in G");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    rewrite_bands(g, std::slice::from_ref(y), eps)
}

// ---------------------------------------------------------------------------
// Entropy targeting

fn exact_entropy(g: &PAMap) -> Result<Q> {
    match entropy(g)? {
        Entropy::Exact(v) => Ok(v),
        Entropy::Approx(_) => domain("map has non-power-of-two slopes"),
    }
}

/// Adds `(2^l−1)`-leg windows on dyadic pieces of segments, left to right,
/// until the entropy gain is within `eps/2` of `d`.
fn add_entropy_windows(g: &PAMap, d: &Q, eps: &Q) -> Result<PAMap> {
    if d * qi(2) < *eps {
        return Ok(g.clone());
    }
    let mut l = 2i64;
    let gain = |l: i64| qi(l) - pow2(1 - l);
    while gain(l) * qi(3) < d * qi(4) {
        l += 1;
    }
    let rl = gain(l);
    let target = d / &rl;
    let tol = eps / (qi(2) * &rl);
    let third = eps / qi(3);
    let legs = (1i64 << l) - 1;
    let mut taken = qi(0);
    let mut patches = Vec::new();
    'segs: for i in 0..g.num_segments() {
        let (x0, y0, x1, _) = g.segment(i);
        let s = g.slope(i);
        let k = exp2_of(&s)?;
        let mut cap = pow2(-k);
        while &cap * pow2(k) >= third {
            cap /= qi(2);
        }
        let sg = if s.is_positive() { qi(1) } else { qi(-1) };
        let mut cur = x0.clone();
        let mut ycur = y0.clone();
        while &cur < x1 {
            let rem = &target - &taken;
            if rem < tol {
                break 'segs;
            }
            let mut size = pow2_floor(&(x1 - &cur));
            for lim in [&cap, &pow2_floor(&rem)] {
                if &size > lim {
                    size = lim.clone();
                }
            }
            let height = &sg * pow2(k) * &size;
            let mut path = vec![(qi(0), ycur.clone())];
            let mut x = qi(0);
            for j in 0..legs {
                x += if j + 1 < legs { pow2(-l) * &size } else { pow2(1 - l) * &size };
                let yv = if j % 2 == 0 { &ycur + &height } else { ycur.clone() };
                path.push((x.clone(), yv));
            }
            patches.push(Patch { lo: cur.clone(), hi: &cur + &size, path });
            taken += &size;
            cur += &size;
            ycur += &height;
        }
    }
    if &target - &taken >= tol {
        return Err(Error::Domain("not enough room for entropy windows".into()));
    }
    splice(g, patches)
}

/// Markov LEO map in `G` within `eps` of `h` whose entropy is within `eps` of `c`.
pub fn target_entropy(h: &PAMap, c: &Q, eps: &Q) -> Result<PAMap> {
    if *c < qi(2) {
        return domain("target entropy must be at least 2");
    }
    if !eps.is_positive() {
        return domain("eps must be positive");
    }
    let ninth = eps / qi(9);
    let g0 = approximate_in_g(h, &ninth)?;
    let g0 = make_leo(&g0, &ninth)?;
    let g1 = if exact_entropy(&g0)? > *c {
        let levels = g0.band_levels();
        let bands: Vec<Interval> =
            levels.windows(2).map(|w| Interval::new(w[0].clone(), w[1].clone())).collect();
        rewrite_bands(&g0, &bands, &ninth)?
    } else {
        g0
    };
    let d = c - exact_entropy(&g1)?;
    if d.is_negative() {
        return Err(Error::Domain("minimum-entropy rewrite stayed above the target".into()));
    }
    let g2 = add_entropy_windows(&g1, &d, eps)?;
    let e = exact_entropy(&g2)?;
    if !is_in_g(&g2) || (&e - c).abs() >= *eps || sup_distance(h, &g2) >= *eps {
        return Err(Error::Domain("entropy target construction failed verification".into()));
    }
    let g2 = if is_leo(&g2)? { g2 } else { make_leo(&g2, &(eps - sup_distance(h, &g2)))? };
    Ok(g2)
}

// ---------------------------------------------------------------------------
// Random elements of G

fn random_window(rng: &mut ChaCha8Rng) -> Option<PAMap> {
    let depth = rng.gen_range(0..=3u32);
    let cells = 1i64 << depth;
    let a = rng.gen_range(0..cells);
    let b = rng.gen_range(a + 1..=cells);
    let j = Interval::new(q(a, cells), q(b, cells));
    let mut exps = vec![0i64];
    let splits = rng.gen_range(1..=4);
    for _ in 0..splits {
        let i = rng.gen_range(0..exps.len());
        if exps[i] >= 4 {
            continue;
        }
        let k = exps.remove(i) + 1;
        exps.push(k);
        exps.push(k);
    }
    for i in (1..exps.len()).rev() {
        let jx = rng.gen_range(0..=i);
        exps.swap(i, jx);
    }
    let mut spec = WindowSpec::new(j, exps, rng.gen_bool(0.5));
    if rng.gen_bool(0.25) {
        spec = spec.reflected();
    }
    make_window(&spec).ok()
}

fn max_slope_exp(g: &PAMap) -> i64 {
    g.slopes().iter().map(|s| exp2_of(s).unwrap_or(i64::MAX)).max().unwrap()
}

/// Seeded random element of `G`: a composition of `complexity` basic maps
/// and random windows, slope exponents at most 6.
pub fn random_g(seed: u64, complexity: usize) -> Result<PAMap> {
    if complexity < 1 {
        return domain("complexity must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basics = basic_maps();
    if complexity == 1 {
        return Ok(basics[rng.gen_range(0..5)].clone());
    }
    let mut acc = PAMap::identity();
    let mut placed = 0;
    let mut attempts = 0;
    while placed < complexity && attempts < 50 * complexity {
        attempts += 1;
        let f = if rng.gen_bool(0.5) {
            basics[rng.gen_range(0..5)].clone()
        } else {
            match random_window(&mut rng) {
                Some(w) => w,
                None => continue,
            }
        };
        let next = compose(&f, &acc);
        if max_slope_exp(&next) <= 6 && next.num_segments() <= 400 {
            acc = next;
            placed += 1;
        }
    }
    Ok(acc)
}
