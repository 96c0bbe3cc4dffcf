//! Structure of `G` up to `F`: slope-rebalancing factorizations, window
//! factoring, decomposition into the five basic maps, generator words for
//! `F`, and equivalence classes via characteristic sequences.

use std::fmt;
use std::sync::OnceLock;

use num::{One, Signed, Zero};

use crate::construct::{basic_w3, connect, insert_crossings, make_window, w2_right_quarter, WindowSpec};
use crate::error::{domain, Error, Result};
use crate::map_core::{
    compose, compose_all, is_in_f, is_in_g, preimage_interval, turning_points, Interval, PAMap,
};
use crate::numeric::{fmt_q, log2_exact, parse_q, pow2, qi, Q};

// ---------------------------------------------------------------------------
// Factors and words

/// A generator of `F` or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FLetter {
    A,
    AInv,
    B,
    BInv,
}

impl FLetter {
    pub fn inverse(self) -> FLetter {
        match self {
            FLetter::A => FLetter::AInv,
            FLetter::AInv => FLetter::A,
            FLetter::B => FLetter::BInv,
            FLetter::BInv => FLetter::B,
        }
    }

    pub fn to_map(self) -> PAMap {
        match self {
            FLetter::A => PAMap::f_a(),
            FLetter::AInv => PAMap::f_a().inverse().unwrap(),
            FLetter::B => PAMap::f_b(),
            FLetter::BInv => PAMap::f_b().inverse().unwrap(),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            FLetter::A => "a",
            FLetter::AInv => "a^-1",
            FLetter::B => "b",
            FLetter::BInv => "b^-1",
        }
    }

    pub fn parse(tok: &str) -> Option<FLetter> {
        match tok {
            "a" => Some(FLetter::A),
            "a^-1" | "A" => Some(FLetter::AInv),
            "b" => Some(FLetter::B),
            "b^-1" | "B" => Some(FLetter::BInv),
            _ => None,
        }
    }
}

/// Composition of a right-to-left letter word.
pub fn compose_letters(word: &[FLetter]) -> PAMap {
    let maps: Vec<PAMap> = word.iter().map(|l| l.to_map()).collect();
    compose_all(&maps)
}

fn letters_text(word: &[FLetter]) -> String {
    word.iter().map(|l| l.token()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    G0Plus,
    G0Minus,
    /// `w̄3,[1/4,1/2]`
    BasicW3,
    /// `w2,[3/4,1]`
    W2RightQuarter,
    /// `w2,[0,1]`, the tent.
    W2Full,
    FMap(PAMap),
    FWord(Vec<FLetter>),
}

impl Factor {
    pub fn to_map(&self) -> PAMap {
        match self {
            Factor::G0Plus => PAMap::identity(),
            Factor::G0Minus => PAMap::reflection(),
            Factor::BasicW3 => basic_w3(),
            Factor::W2RightQuarter => w2_right_quarter(),
            Factor::W2Full => PAMap::tent(),
            Factor::FMap(f) => f.clone(),
            Factor::FWord(w) => compose_letters(w),
        }
    }

    pub fn is_basic(&self) -> bool {
        !matches!(self, Factor::FMap(_) | Factor::FWord(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Factor::G0Plus => "g0+",
            Factor::G0Minus => "g0-",
            Factor::BasicW3 => "w3bar",
            Factor::W2RightQuarter => "w2q",
            Factor::W2Full => "w2",
            Factor::FMap(_) => "fmap",
            Factor::FWord(_) => "fword",
        }
    }
}

/// Factors applied right to left: `factors[0] ∘ factors[1] ∘ …`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecompositionWord {
    pub factors: Vec<Factor>,
}

impl DecompositionWord {
    pub fn compose(&self) -> PAMap {
        self.factors
            .iter()
            .rev()
            .fold(PAMap::identity(), |acc, f| compose(&f.to_map(), &acc))
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Replaces every `FMap` factor by its generator word.
    pub fn expand_f(&self) -> Result<DecompositionWord> {
        let factors = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::FMap(m) => f_to_generator_word(m).map(Factor::FWord),
                other => Ok(other.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecompositionWord { factors })
    }

    /// `word/1` header, then one line per factor; `FMap` factors are inline
    /// `pamap/1` blocks.
    pub fn to_text(&self) -> String {
        let mut s = String::from("word/1\n");
        for f in &self.factors {
            match f {
                Factor::FMap(m) => s.push_str(&m.to_pamap_string()),
                Factor::FWord(w) if w.is_empty() => s.push_str("fword\n"),
                Factor::FWord(w) => {
                    s.push_str("fword ");
                    s.push_str(&letters_text(w));
                    s.push('\n');
                }
                basic => {
                    s.push_str(basic.name());
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<DecompositionWord> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        match lines.first() {
            Some((_, "word/1")) => {}
            Some((n, l)) => {
                return Err(Error::Parse { line: *n, msg: format!("expected header word/1, got {:?}", l) })
            }
            None => return Err(Error::Parse { line: 1, msg: "empty input".into() }),
        }
        let mut factors = Vec::new();
        let mut i = 1;
        while i < lines.len() {
            let (n, l) = lines[i];
            let mut toks = l.split_whitespace();
            let head = toks.next().unwrap_or("");
            let f = match head {
                "g0+" => Factor::G0Plus,
                "g0-" => Factor::G0Minus,
                "w3bar" => Factor::BasicW3,
                "w2q" => Factor::W2RightQuarter,
                "w2" => Factor::W2Full,
                "fword" => {
                    let w = toks
                        .map(|t| {
                            FLetter::parse(t)
                                .ok_or_else(|| Error::Parse { line: n, msg: format!("unknown letter {:?}", t) })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Factor::FWord(w)
                }
                "pamap/1" => {
                    let mut block = String::from("pamap/1\n");
                    let mut j = i + 1;
                    while j < lines.len() {
                        let f: Vec<&str> = lines[j].1.split_whitespace().collect();
                        if f.len() != 2 || parse_q(f[0]).is_err() {
                            break;
                        }
                        block.push_str(lines[j].1);
                        block.push('\n');
                        j += 1;
                    }
                    let m = crate::map_core::parse_pamap(&block).map_err(|e| Error::Parse {
                        line: lines[j - 1].0,
                        msg: e.to_string(),
                    })?;
                    i = j;
                    factors.push(Factor::FMap(m));
                    continue;
                }
                other => {
                    return Err(Error::Parse { line: n, msg: format!("unknown factor {:?}", other) })
                }
            };
            factors.push(f);
            i += 1;
        }
        Ok(DecompositionWord { factors })
    }
}

impl fmt::Display for DecompositionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| match x {
                Factor::FMap(m) => format!("F[{} pts]", m.points().len()),
                Factor::FWord(w) => format!("[{}]", letters_text(w)),
                b => b.name().to_string(),
            })
            .collect();
        write!(f, "{}", parts.join(" ∘ "))
    }
}

// ---------------------------------------------------------------------------
// Reslope: same vertical structure, new piece widths

/// A monotone piece of a map with the breakpoints strictly inside it.
struct Piece {
    x0: Q,
    x1: Q,
    y0: Q,
    y1: Q,
    inner: Vec<(Q, Q)>,
}

/// Splits `g` into its affine segments after adding vertices at `xcuts`.
fn segments_cut_at(g: &PAMap, xcuts: &[Q]) -> Vec<Piece> {
    let mut pts: Vec<(Q, Q)> = g.points().to_vec();
    for c in xcuts {
        if !pts.iter().any(|p| &p.0 == c) {
            pts.push((c.clone(), g.at(c)));
        }
    }
    pts.sort();
    pieces_from_points(&pts)
}

fn pieces_from_points(pts: &[(Q, Q)]) -> Vec<Piece> {
    pts.windows(2)
        .map(|w| Piece {
            x0: w[0].0.clone(),
            x1: w[1].0.clone(),
            y0: w[0].1.clone(),
            y1: w[1].1.clone(),
            inner: Vec::new(),
        })
        .collect()
}

/// Merges consecutive pieces lying inside `iv` into one monotone piece.
fn merge_within(pieces: Vec<Piece>, iv: &Interval) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    for p in pieces {
        let inside = p.x0 >= iv.lo && p.x1 <= iv.hi;
        if let Some(last) = out.last_mut() {
            if inside && last.x0 >= iv.lo && last.x1 == p.x0 {
                last.inner.push((p.x0.clone(), p.y0.clone()));
                last.inner.extend(p.inner);
                last.x1 = p.x1;
                last.y1 = p.y1;
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// `g1` with piece `i` stretched to `widths[i]` (same image) and the `F`
/// map `f1` with `g = g1 ∘ f1`. Widths must sum to 1.
fn reslope(pieces: &[Piece], widths: &[Q]) -> Result<(PAMap, PAMap)> {
    let mut x = qi(0);
    let mut g1 = vec![(qi(0), pieces[0].y0.clone())];
    let mut f1 = vec![(qi(0), qi(0))];
    for (p, w) in pieces.iter().zip(widths) {
        let dy = &p.y1 - &p.y0;
        for (ix, iy) in &p.inner {
            f1.push((ix.clone(), &x + (iy - &p.y0) / &dy * w));
        }
        x += w;
        g1.push((x.clone(), p.y1.clone()));
        f1.push((p.x1.clone(), x.clone()));
    }
    if !x.is_one() {
        return domain("new piece widths do not sum to 1");
    }
    Ok((PAMap::new(g1)?, PAMap::new(f1)?))
}

fn slope_exp(dy: &Q, dx: &Q) -> Result<i64> {
    let s = (dy / dx).abs();
    log2_exact(&s)?.ok_or_else(|| Error::Domain(format!("slope {} is not a power of two", s)))
}

fn width(p: &Piece) -> Q {
    &p.x1 - &p.x0
}

/// Checks that `legs` are sorted, disjoint, affine under `g` and share one image.
fn affine_legs(g: &PAMap, legs: &[Interval]) -> Result<(Interval, Vec<i64>)> {
    if legs.is_empty() {
        return domain("no legs given");
    }
    for w in legs.windows(2) {
        if w[0].hi > w[1].lo {
            return domain("legs must be sorted and disjoint");
        }
    }
    let mut y: Option<Interval> = None;
    let mut exps = Vec::new();
    for leg in legs {
        if leg.is_degenerate() || leg.lo < qi(0) || leg.hi > qi(1) {
            return domain(format!("bad leg {}", leg));
        }
        if g.points().iter().any(|p| p.0 > leg.lo && p.0 < leg.hi) {
            return domain(format!("g is not affine on {}", leg));
        }
        let (a, b) = (g.at(&leg.lo), g.at(&leg.hi));
        let img = if a <= b { Interval::new(a.clone(), b.clone()) } else { Interval::new(b.clone(), a.clone()) };
        if img.is_degenerate() {
            return domain(format!("g is constant on {}", leg));
        }
        exps.push(slope_exp(&(b - a), &leg.len())?);
        match &y {
            None => y = Some(img),
            Some(y0) if *y0 != img => return domain("legs do not share a common image"),
            _ => {}
        }
    }
    Ok((y.unwrap(), exps))
}

// ---------------------------------------------------------------------------
// Factorizations

/// Changes the leg slopes from `2^k_i` to `2^l_i` (same signs) keeping
/// everything else: returns `(g1, f1)` with `g = g1 ∘ f1`.
pub fn rebalance_slopes(g: &PAMap, legs: &[Interval], new_exponents: &[i64]) -> Result<(PAMap, PAMap)> {
    if legs.len() != new_exponents.len() {
        return domain("one exponent per leg is required");
    }
    let (y, old) = affine_legs(g, legs)?;
    let s_old: Q = old.iter().map(|&k| pow2(-k)).sum();
    let s_new: Q = new_exponents.iter().map(|&k| pow2(-k)).sum();
    if s_old != s_new {
        return domain(format!(
            "exponent sums differ: {} vs {}",
            fmt_q(&s_old),
            fmt_q(&s_new)
        ));
    }
    let cuts: Vec<Q> = legs.iter().flat_map(|l| [l.lo.clone(), l.hi.clone()]).collect();
    let pieces = segments_cut_at(g, &cuts);
    let widths: Vec<Q> = pieces
        .iter()
        .map(|p| match legs.iter().position(|l| p.x0 >= l.lo && p.x1 <= l.hi) {
            Some(i) => y.len() * pow2(-new_exponents[i]),
            None => width(p),
        })
        .collect();
    reslope(&pieces, &widths)
}

/// Exponents `l_i` with `Σ 2^-l_i = 1`, each `2^-l_i` close to `weights[i]`.
fn fit_exponents(weights: &[Q]) -> Result<Vec<i64>> {
    let total: Q = weights.iter().sum();
    if !total.is_one() {
        return domain("band weights must sum to 1");
    }
    let mut l: Vec<i64> = weights.iter().map(|w| crate::numeric::ceil_log2(&(Q::one() / w))).collect();
    let mut sum: Q = l.iter().map(|&k| pow2(-k)).sum();
    while sum < qi(1) {
        let room = qi(1) - &sum;
        let pick = (0..l.len())
            .filter(|&i| pow2(-l[i]) <= room)
            .max_by(|&i, &j| {
                let di = &weights[i] - pow2(-l[i]);
                let dj = &weights[j] - pow2(-l[j]);
                di.cmp(&dj).then(j.cmp(&i))
            })
            .expect("a doubling candidate always exists");
        sum += pow2(-l[pick]);
        l[pick] -= 1;
    }
    Ok(l)
}

/// Straightens every leg over the band `y`: `g1` is affine on each leg and
/// `g = g1 ∘ f1`.
pub fn eliminate_type1_in_band(g: &PAMap, y: &Interval) -> Result<(PAMap, PAMap)> {
    if y.is_degenerate() {
        return domain("band must be nondegenerate");
    }
    if g.slopes().iter().any(|s| s.is_zero()) {
        return domain("plateaus are not supported");
    }
    let legs = preimage_interval(g, y);
    if legs.is_empty() || legs.iter().any(|l| !l.onto || l.domain.is_degenerate()) {
        return domain(format!("band hypothesis fails on {}: some leg is not onto", y));
    }
    let kinked = legs
        .iter()
        .any(|l| g.points().iter().any(|p| p.0 > l.domain.lo && p.0 < l.domain.hi));
    if !kinked {
        return Ok((g.clone(), PAMap::identity()));
    }
    let weights: Vec<Q> = legs.iter().map(|l| l.domain.len() / y.len()).collect();
    let exps = fit_exponents(&weights)?;
    let cuts: Vec<Q> = legs.iter().flat_map(|l| [l.domain.lo.clone(), l.domain.hi.clone()]).collect();
    let mut pieces = segments_cut_at(g, &cuts);
    for l in &legs {
        pieces = merge_within(pieces, &l.domain);
    }
    let widths: Vec<Q> = pieces
        .iter()
        .map(|p| match legs.iter().position(|l| p.x0 == l.domain.lo && p.x1 == l.domain.hi) {
            Some(i) => y.len() * pow2(-exps[i]),
            None => width(p),
        })
        .collect();
    reslope(&pieces, &widths)
}

/// `(L, K)` with `s = L·2^-K` and `L` odd.
fn odd_part(s: &Q) -> (Q, i64) {
    let mut k = 0i64;
    let mut l = s.clone();
    while !l.is_integer() {
        l *= qi(2);
        k += 1;
    }
    while l.numer() % 2 == num::BigInt::zero() {
        l /= qi(2);
        k -= 1;
    }
    (l, k)
}

/// Indices from `cands` (ascending exponent) whose terms `2^-k` add up to `target`.
fn greedy_subset(exps: &[i64], cands: &[usize], target: &Q) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = cands.to_vec();
    order.sort_by_key(|&i| (exps[i], i));
    let mut acc = qi(0);
    let mut out = Vec::new();
    for i in order {
        if acc == *target {
            break;
        }
        let t = pow2(-exps[i]);
        if &acc + &t <= *target {
            acc += t;
            out.push(i);
        }
    }
    (acc == *target).then_some(out)
}

/// Rewrites the leg slopes so that `Σ 2^-k_i` over the legs becomes a single
/// power of two, compensating on the other legs of each sub-band.
pub fn normalize_partial_band(g: &PAMap, legs: &[Interval]) -> Result<(PAMap, PAMap)> {
    let (y, mut k) = affine_legs(g, legs)?;
    let (l0, _) = odd_part(&k.iter().map(|&e| pow2(-e)).sum());
    if l0.is_one() {
        return Ok((g.clone(), PAMap::identity()));
    }
    let mut levels: Vec<Q> = g
        .points()
        .iter()
        .map(|p| p.1.clone())
        .filter(|v| *v > y.lo && *v < y.hi)
        .collect();
    levels.push(y.lo.clone());
    levels.push(y.hi.clone());
    levels.sort();
    levels.dedup();
    let mut pts = insert_crossings(g.points(), &levels);
    let leg_cuts: Vec<Q> = legs.iter().flat_map(|l| [l.lo.clone(), l.hi.clone()]).collect();
    for c in leg_cuts {
        if !pts.iter().any(|p| p.0 == c) {
            pts.push((c.clone(), g.at(&c)));
        }
    }
    pts.sort();
    let pieces = pieces_from_points(&pts);
    // Role of each piece: leg index, outside piece of a sub-band, or untouched.
    enum Role {
        Leg(usize),
        Outside(usize),
        Keep,
    }
    let roles: Vec<Role> = pieces
        .iter()
        .map(|p| {
            if let Some(i) = legs.iter().position(|l| p.x0 >= l.lo && p.x1 <= l.hi) {
                return Role::Leg(i);
            }
            let (lo, hi) = if p.y0 < p.y1 { (&p.y0, &p.y1) } else { (&p.y1, &p.y0) };
            if *lo >= y.lo && *hi <= y.hi {
                Role::Outside(levels.partition_point(|v| v <= lo) - 1)
            } else {
                Role::Keep
            }
        })
        .collect();
    let mut pexp: Vec<i64> = pieces
        .iter()
        .map(|p| slope_exp(&(&p.y1 - &p.y0), &width(p)))
        .collect::<Result<_>>()?;
    let nbands = levels.len() - 1;
    let mut outside: Vec<Vec<usize>> = vec![Vec::new(); nbands];
    for (i, r) in roles.iter().enumerate() {
        if let Role::Outside(j) = r {
            outside[*j].push(i);
        }
    }
    if outside.iter().any(|o| o.is_empty()) {
        return domain("some fiber over the band lies entirely in the legs");
    }
    loop {
        let s: Q = k.iter().map(|&e| pow2(-e)).sum();
        let (l, kk) = odd_part(&s);
        if l.is_one() {
            break;
        }
        let all: Vec<usize> = (0..k.len()).filter(|&i| k[i] >= kk).collect();
        let phi1 = greedy_subset(&k, &all, &pow2(-kk)).ok_or_else(|| Error::Domain("no Φ₁ subset".into()))?;
        let (_, kk2) = odd_part(&(&s - pow2(-kk)));
        let rest: Vec<usize> = (0..k.len()).filter(|i| !phi1.contains(i) && k[*i] >= kk2).collect();
        let phi2 = greedy_subset(&k, &rest, &pow2(-kk2)).ok_or_else(|| Error::Domain("no Φ₂ subset".into()))?;
        for &i in &phi1 {
            k[i] += kk2 + 1 - kk;
        }
        for &i in &phi2 {
            k[i] += 1;
        }
        for o in &outside {
            let cands: Vec<usize> = o.iter().copied().filter(|&i| pexp[i] >= kk).collect();
            let psi = greedy_subset(&pexp, &cands, &pow2(-kk)).ok_or_else(|| Error::Domain("no Ψ subset".into()))?;
            for i in psi {
                pexp[i] -= 1;
            }
        }
    }
    let widths: Vec<Q> = pieces
        .iter()
        .zip(&roles)
        .enumerate()
        .map(|(i, (p, r))| {
            let dy = (&p.y1 - &p.y0).abs();
            match r {
                Role::Leg(j) => dy * pow2(-k[*j]),
                Role::Outside(_) => dy * pow2(-pexp[i]),
                Role::Keep => width(p),
            }
        })
        .collect();
    reslope(&pieces, &widths)
}

/// Factors an m-fold window of `g` on `i`: `g = g1 ∘ w1` with `w1` an
/// m-fold window on `i` and `g1` affine on `i`.
pub fn factor_out_window(g: &PAMap, iv: &Interval) -> Result<(PAMap, PAMap)> {
    if iv.is_degenerate() || iv.lo < qi(0) || iv.hi > qi(1) {
        return domain("window interval must be a nondegenerate subinterval of [0,1]");
    }
    let mut pts = vec![(iv.lo.clone(), g.at(&iv.lo))];
    pts.extend(g.points().iter().filter(|p| p.0 > iv.lo && p.0 < iv.hi).cloned());
    pts.push((iv.hi.clone(), g.at(&iv.hi)));
    let (lo, hi) = {
        let ys: Vec<&Q> = pts.iter().map(|p| &p.1).collect();
        ((*ys.iter().min().unwrap()).clone(), (*ys.iter().max().unwrap()).clone())
    };
    let y = Interval::new(lo.clone(), hi.clone());
    if y.is_degenerate() {
        return domain("g is constant on the interval");
    }
    let mut exps = Vec::new();
    for w in pts.windows(2) {
        let ends_ok = (w[0].1 == lo && w[1].1 == hi) || (w[0].1 == hi && w[1].1 == lo);
        if !ends_ok {
            return domain("g is not a window on the interval: a leg does not cross the whole image");
        }
        exps.push(slope_exp(&(&w[1].1 - &w[0].1), &(&w[1].0 - &w[0].0))?);
    }
    let ratio = iv.len() / y.len();
    let kk = match log2_exact(&ratio)? {
        Some(e) if e <= 0 => -e,
        _ => return domain("window legs do not satisfy Σ 2^-k = 1 after removing a common factor"),
    };
    let m = exps.len();
    if m == 1 {
        return Ok((g.clone(), PAMap::identity()));
    }
    let window_exps: Vec<i64> = exps.iter().map(|e| e - kk).collect();
    let d_up = pts[1].1 > pts[0].1;
    let r_up = if iv.lo > qi(0) || iv.hi == qi(1) { true } else { m % 2 == 1 };
    let s_up = d_up == r_up;
    let w1 = make_window(&WindowSpec::new(iv.clone(), window_exps, r_up))?;
    let (a, b) = if s_up { (lo, hi) } else { (hi, lo) };
    let mut g1: Vec<(Q, Q)> = g.points().iter().filter(|p| p.0 < iv.lo).cloned().collect();
    g1.push((iv.lo.clone(), a));
    g1.push((iv.hi.clone(), b));
    g1.extend(g.points().iter().filter(|p| p.0 > iv.hi).cloned());
    let g1 = PAMap::new(g1)?;
    if compose(&g1, &w1) != *g {
        return domain("window orientation is incompatible with the interval position");
    }
    Ok((g1, w1))
}

// ---------------------------------------------------------------------------
// Decomposition

/// Rank of each turning value among the distinct turning values.
fn shape(g: &PAMap) -> Vec<usize> {
    let vals: Vec<Q> = turning_points(g).into_iter().map(|p| p.1).collect();
    ranks(&vals)
}

fn ranks<T: Ord + Clone>(vals: &[T]) -> Vec<usize> {
    let mut d: Vec<T> = vals.to_vec();
    d.sort();
    d.dedup();
    vals.iter().map(|v| d.binary_search(v).unwrap()).collect()
}

struct Base {
    ranks: Vec<usize>,
    word: Vec<Factor>,
    map: PAMap,
}

fn base_table() -> &'static [Base] {
    static TABLE: OnceLock<Vec<Base>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cores: Vec<(Vec<Factor>, PAMap)> = vec![
            (vec![], PAMap::identity()),
            (vec![Factor::W2Full], PAMap::tent()),
            (vec![Factor::W2RightQuarter], w2_right_quarter()),
            (vec![Factor::BasicW3], basic_w3()),
        ];
        let mut out: Vec<Base> = Vec::new();
        for (word, map) in cores {
            for (l, r) in [(false, false), (true, false), (false, true), (true, true)] {
                let mut w = Vec::new();
                let mut m = map.clone();
                if l {
                    w.push(Factor::G0Minus);
                    m = compose(&PAMap::reflection(), &m);
                }
                w.extend(word.iter().cloned());
                if r {
                    w.push(Factor::G0Minus);
                    m = compose(&m, &PAMap::reflection());
                }
                if w.is_empty() {
                    w.push(Factor::G0Plus);
                }
                let rk = shape(&m);
                if !out.iter().any(|b| b.ranks == rk) {
                    out.push(Base { ranks: rk, word: w, map: m });
                }
            }
        }
        out
    })
}

/// The `x` in `[a, b]` where the monotone piece of `h` takes the value `y`.
fn solve_on_lap(h: &PAMap, a: &Q, b: &Q, y: &Q) -> Result<Q> {
    if h.at(a) == *y {
        return Ok(a.clone());
    }
    if h.at(b) == *y {
        return Ok(b.clone());
    }
    for i in 0..h.num_segments() {
        let (x0, y0, x1, y1) = h.segment(i);
        if x1 <= a || x0 >= b {
            continue;
        }
        let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
        if y >= lo && y <= hi && y0 != y1 {
            return Ok(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    domain(format!("value {} not attained on the lap", fmt_q(y)))
}

/// Element of `F` sending the turning values of `from` onto those of `to`.
fn level_map(from: &PAMap, to: &PAMap) -> Result<PAMap> {
    let mut a: Vec<(Q, Q)> = turning_points(from)
        .into_iter()
        .map(|p| p.1)
        .zip(turning_points(to).into_iter().map(|p| p.1))
        .collect();
    a.sort();
    a.dedup();
    let mut pts = vec![a[0].clone()];
    for p in &a[1..] {
        let prev = pts.last().unwrap().clone();
        pts.extend(connect(&prev, p)?);
    }
    PAMap::new(pts)
}

/// `phi` in `F` with `g = v ∘ phi`, when `g` and `v` have identical turning values.
fn right_cofactor(g: &PAMap, v: &PAMap) -> Result<PAMap> {
    let tg = turning_points(g);
    let tv = turning_points(v);
    if tg.len() != tv.len() || tg.iter().zip(&tv).any(|(a, b)| a.1 != b.1) {
        return domain("maps do not share their turning values");
    }
    let mut pts: Vec<(Q, Q)> = Vec::new();
    for i in 0..tg.len() - 1 {
        let (ga, gb) = (&tg[i].0, &tg[i + 1].0);
        let (va, vb) = (&tv[i].0, &tv[i + 1].0);
        for p in g.points().iter().filter(|p| &p.0 >= ga && &p.0 <= gb) {
            pts.push((p.0.clone(), solve_on_lap(v, va, vb, &p.1)?));
        }
        for p in v.points().iter().filter(|p| &p.0 > va && &p.0 < vb) {
            pts.push((solve_on_lap(g, ga, gb, &p.1)?, p.0.clone()));
        }
    }
    pts.sort();
    pts.dedup();
    PAMap::new(pts)
}

/// `ψ ∘ h ∘ φ = g` for `h` with the same shape as `g`, as a factor list.
fn conjugate_factors(g: &PAMap, word: Vec<Factor>, h: &PAMap) -> Result<Vec<Factor>> {
    let psi = level_map(h, g)?;
    let phi = right_cofactor(g, &compose(&psi, h))?;
    let mut out = vec![Factor::FMap(psi)];
    out.extend(word);
    out.push(Factor::FMap(phi));
    Ok(out)
}

/// A word and its composition `h` whose turning values have ranks `r`.
fn build(r: &[usize]) -> Result<(Vec<Factor>, PAMap)> {
    if let Some(b) = base_table().iter().find(|b| b.ranks == r) {
        return Ok((b.word.clone(), b.map.clone()));
    }
    let n = r.len();
    if n < 4 {
        return domain("shape without a base case");
    }
    let t = |i: usize| r[i] as i64;
    let (keep, window): (Vec<usize>, Box<dyn Fn(&PAMap, &dyn Fn(usize) -> Q) -> Result<PAMap>>) =
        if (t(2) - t(0)) * (t(1) - t(0)) <= 0 {
            (
                (1..n).collect(),
                Box::new(|h1: &PAMap, level: &dyn Fn(usize) -> Q| {
                    let tp = turning_points(h1);
                    let b = solve_on_lap(h1, &tp[0].0, &tp[1].0, &level(0))?;
                    make_window(&WindowSpec::new(Interval::new(qi(0), b), vec![1, 1], false))
                }),
            )
        } else if (t(n - 3) - t(n - 1)) * (t(n - 2) - t(n - 1)) <= 0 {
            (
                (0..n - 1).collect(),
                Box::new(move |h1: &PAMap, level: &dyn Fn(usize) -> Q| {
                    let tp = turning_points(h1);
                    let k = tp.len();
                    let b = solve_on_lap(h1, &tp[k - 2].0, &tp[k - 1].0, &level(n - 1))?;
                    make_window(&WindowSpec::new(Interval::new(b, qi(1)), vec![1, 1], true))
                }),
            )
        } else {
            let i = (0..n - 3)
                .find(|&i| {
                    let (a, b, c, d) = (t(i), t(i + 1), t(i + 2), t(i + 3));
                    (a <= c && c < b && b <= d) || (a >= c && c > b && b >= d)
                })
                .ok_or_else(|| Error::Domain("no reducible configuration".into()))?;
            (
                (0..n).filter(|&j| j != i + 1 && j != i + 2).collect(),
                Box::new(move |h1: &PAMap, level: &dyn Fn(usize) -> Q| {
                    let tp = turning_points(h1);
                    let s = solve_on_lap(h1, &tp[i].0, &tp[i + 1].0, &level(i + 2))?;
                    let e = solve_on_lap(h1, &tp[i].0, &tp[i + 1].0, &level(i + 1))?;
                    make_window(&WindowSpec::new(Interval::new(s, e), vec![1, 2, 2], true))
                }),
            )
        };
    let kept: Vec<usize> = keep.iter().map(|&j| r[j]).collect();
    let (w1, h1) = build(&ranks(&kept))?;
    let tv: Vec<Q> = turning_points(&h1).into_iter().map(|p| p.1).collect();
    // Value of h1 for every original rank that survives.
    let mut by_rank: Vec<Option<Q>> = vec![None; r.iter().max().unwrap() + 1];
    for (j, &idx) in keep.iter().enumerate() {
        by_rank[r[idx]] = Some(tv[j].clone());
    }
    let level = |idx: usize| -> Q {
        let rk = r[idx];
        if let Some(v) = &by_rank[rk] {
            return v.clone();
        }
        // Missing ranks in a gap get evenly spaced dyadic levels.
        let lo = (0..rk).rev().find(|&j| by_rank[j].is_some()).unwrap();
        let hi = (rk + 1..by_rank.len()).find(|&j| by_rank[j].is_some()).unwrap();
        let (a, b) = (by_rank[lo].clone().unwrap(), by_rank[hi].clone().unwrap());
        let denom = pow2(crate::numeric::ceil_log2(&qi((hi - lo) as i64)));
        &a + (b - &a) * qi((rk - lo) as i64) / denom
    };
    let w = window(&h1, &level)?;
    let (ww, hw) = build(&shape(&w))?;
    let mut word = w1;
    word.extend(conjugate_factors(&w, ww, &hw)?);
    Ok((word, compose(&h1, &w)))
}

/// Merges adjacent `F` factors and drops identities.
fn tidy(factors: Vec<Factor>) -> Vec<Factor> {
    let mut out: Vec<Factor> = Vec::new();
    for f in factors {
        match (out.last_mut(), f) {
            (Some(Factor::FMap(prev)), Factor::FMap(m)) => *prev = compose(prev, &m),
            (_, Factor::G0Plus) => {}
            (_, f) => out.push(f),
        }
        if matches!(out.last(), Some(Factor::FMap(m)) if m.is_identity()) {
            out.pop();
        }
    }
    if out.is_empty() {
        out.push(Factor::G0Plus);
    }
    out
}

/// Writes `g ∈ G` as a composition of the five basic maps and `F` maps.
pub fn decompose(g: &PAMap) -> Result<DecompositionWord> {
    if !is_in_g(g) {
        return domain("decompose needs a map in G");
    }
    let (word, h) = build(&shape(g))?;
    let factors = tidy(conjugate_factors(g, word, &h)?);
    Ok(DecompositionWord { factors })
}

// ---------------------------------------------------------------------------
// Generator words for F

enum Tree {
    Leaf,
    Node(Box<Tree>, Box<Tree>),
}

fn is_standard(lo: &Q, hi: &Q) -> bool {
    let len = hi - lo;
    match log2_exact(&len) {
        Ok(Some(_)) => (lo / &len).is_integer(),
        _ => false,
    }
}

fn subdivide(f: &PAMap, lo: Q, hi: Q, depth: usize, out: &mut Vec<(Q, Q)>) -> Result<()> {
    let affine = !f.points().iter().any(|p| p.0 > lo && p.0 < hi);
    if affine && is_standard(&f.at(&lo), &f.at(&hi)) {
        out.push((lo, hi));
        return Ok(());
    }
    if depth > 256 {
        return domain("subdivision too deep");
    }
    let mid = (&lo + &hi) / qi(2);
    subdivide(f, lo, mid.clone(), depth + 1, out)?;
    subdivide(f, mid, hi, depth + 1, out)
}

fn tree_of(leaves: &[(Q, Q)], pos: &mut usize, lo: Q, hi: Q) -> Tree {
    if leaves[*pos] == (lo.clone(), hi.clone()) {
        *pos += 1;
        return Tree::Leaf;
    }
    let mid = (&lo + &hi) / qi(2);
    let l = tree_of(leaves, pos, lo, mid.clone());
    let r = tree_of(leaves, pos, mid, hi);
    Tree::Node(Box::new(l), Box::new(r))
}

/// Rotations taking a tree to the right vine, as `(n, inverse)` steps of
/// `x_n` in application order.
fn vine_steps(mut t: Tree) -> Vec<usize> {
    let mut s = 0usize;
    let mut out = Vec::new();
    loop {
        match t {
            Tree::Leaf => return out,
            Tree::Node(l, r) => match *l {
                Tree::Leaf => {
                    t = *r;
                    s += 1;
                }
                Tree::Node(ll, lr) => {
                    out.push(s);
                    t = Tree::Node(ll, Box::new(Tree::Node(lr, r)));
                }
            },
        }
    }
}

fn push_reduced(out: &mut Vec<FLetter>, l: FLetter) {
    if out.last() == Some(&l.inverse()) {
        out.pop();
    } else {
        out.push(l);
    }
}

/// `x_n^e` as letters: `x_0 = f_A`, `x_n = f_A^-(n-1) ∘ f_B ∘ f_A^(n-1)`.
fn x_letters(n: usize, inverse: bool, out: &mut Vec<FLetter>) {
    let (a, b) = if inverse { (FLetter::AInv, FLetter::BInv) } else { (FLetter::A, FLetter::B) };
    if n == 0 {
        push_reduced(out, a);
        return;
    }
    for _ in 1..n {
        push_reduced(out, FLetter::AInv);
    }
    push_reduced(out, b);
    for _ in 1..n {
        push_reduced(out, FLetter::A);
    }
}

/// Word in `f_A^±1`, `f_B^±1` (right to left) whose composition is `f`.
pub fn f_to_generator_word(f: &PAMap) -> Result<Vec<FLetter>> {
    if !is_in_f(f) {
        return domain("generator words exist only for maps in F");
    }
    let mut dom = Vec::new();
    subdivide(f, qi(0), qi(1), 0, &mut dom)?;
    let rng: Vec<(Q, Q)> = dom.iter().map(|(a, b)| (f.at(a), f.at(b))).collect();
    let steps_d = vine_steps(tree_of(&dom, &mut 0, qi(0), qi(1)));
    let steps_r = vine_steps(tree_of(&rng, &mut 0, qi(0), qi(1)));
    // P_T is the product of x_s^-1 over its steps; f = P_R^-1 ∘ P_D.
    let mut word = Vec::new();
    for &s in &steps_r {
        x_letters(s, false, &mut word);
    }
    for &s in steps_d.iter().rev() {
        x_letters(s, true, &mut word);
    }
    Ok(word)
}

// ---------------------------------------------------------------------------
// Evolution and characteristic sequences

/// Signed band-index sequence `±l_1 … l_n` over `m` bands.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CharSeq {
    pub sign: i8,
    pub indices: Vec<usize>,
    pub m: usize,
    pub n: usize,
}

impl CharSeq {
    pub fn size(&self) -> usize {
        self.m * self.n
    }
}

impl fmt::Display for CharSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{}«{}»", if self.sign > 0 { '+' } else { '-' }, idx.join(","))
    }
}

/// Evolution sequence of `g` over the bands cut at `levels` (`0 = c_0 < … < c_m = 1`).
pub fn evolution_sequence(g: &PAMap, levels: &[Q]) -> Result<CharSeq> {
    if levels.len() < 2 || !levels[0].is_zero() || !levels.last().unwrap().is_one() {
        return domain("band cuts must run from 0 to 1");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return domain("band cuts must be strictly increasing");
    }
    if g.slopes().iter().any(|s| s.is_zero()) {
        return domain("plateaus are not supported");
    }
    if let Some(p) = g.points().iter().find(|p| levels.binary_search(&p.1).is_err()) {
        return domain(format!("breakpoint value {} lies inside a band", fmt_q(&p.1)));
    }
    let pts = insert_crossings(g.points(), levels);
    let indices: Vec<usize> = pts
        .windows(2)
        .map(|w| {
            let lo = if w[0].1 < w[1].1 { &w[0].1 } else { &w[1].1 };
            levels.partition_point(|v| v <= lo)
        })
        .collect();
    let sign = if pts[1].1 > pts[0].1 { 1 } else { -1 };
    Ok(CharSeq { sign, n: indices.len(), indices, m: levels.len() - 1 })
}

/// `C(g)`: bands cut only at breakpoint values.
pub fn characteristic_sequence(g: &PAMap) -> Result<CharSeq> {
    evolution_sequence(g, &g.band_levels())
}

/// Turning values together with 0 and 1.
fn turning_levels(g: &PAMap) -> Vec<Q> {
    let mut a: Vec<Q> = turning_points(g).into_iter().map(|p| p.1).collect();
    a.push(qi(0));
    a.push(qi(1));
    a.sort();
    a.dedup();
    a
}

/// The class representative with every removable type-I breakpoint straightened.
pub fn class_representative(g: &PAMap) -> Result<PAMap> {
    if !is_in_g(g) {
        return domain("class characteristic sequences are defined on G");
    }
    let a = turning_levels(g);
    let mut h = g.clone();
    for w in a.windows(2) {
        h = eliminate_type1_in_band(&h, &Interval::new(w[0].clone(), w[1].clone()))?.0;
    }
    Ok(h)
}

/// `C([g])`: the characteristic sequence once every leg between consecutive
/// turning values is straight. Only the order pattern of the turning values
/// matters, so `g` need not preserve measure.
pub fn class_characteristic_sequence(g: &PAMap) -> Result<CharSeq> {
    if !g.is_onto() {
        return domain("class characteristic sequences need an onto map");
    }
    if g.slopes().iter().any(|s| s.is_zero()) {
        return domain("plateaus are not supported");
    }
    let skeleton = PAMap::new(turning_points(g))?;
    evolution_sequence(&skeleton, &turning_levels(g))
}

pub fn same_equivalence_class(g1: &PAMap, g2: &PAMap) -> Result<bool> {
    Ok(class_characteristic_sequence(g1)? == class_characteristic_sequence(g2)?)
}

/// `f2 ∈ F` with `f1 ∘ g ∘ f2 ∈ G`: each piece of `g` over a linear piece of
/// `f1` is stretched horizontally by that piece's slope.
pub fn normalize_right(f1: &PAMap, g: &PAMap) -> Result<PAMap> {
    if !is_in_f(f1) || !is_in_g(g) {
        return domain("normalize_right needs f1 in F and g in G");
    }
    let cuts = f1.xs();
    let pts = insert_crossings(g.points(), &cuts);
    let slopes = f1.slopes();
    let mut x = qi(0);
    let mut out = vec![(qi(0), qi(0))];
    for w in pts.windows(2) {
        let lo = if w[0].1 < w[1].1 { &w[0].1 } else { &w[1].1 };
        let band = cuts.partition_point(|c| c <= lo) - 1;
        x += (&w[1].0 - &w[0].0) * &slopes[band];
        out.push((x.clone(), w[1].0.clone()));
    }
    PAMap::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::random_g;
    use crate::map_core::count_type2;
    use crate::numeric::q;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(q(a.0, a.1), q(b.0, b.1))
    }

    fn w2(delta: Q) -> PAMap {
        make_window(&WindowSpec::new(Interval::new(delta, qi(1)), vec![1, 1], true)).unwrap()
    }

    #[test]
    fn rebalance_examples() {
        let w4 = make_window(&WindowSpec::new(Interval::unit(), vec![2, 2, 2, 2], true)).unwrap();
        let legs: Vec<Interval> = (0..4).map(|i| iv((i, 4), (i + 1, 4))).collect();
        let (g1, f1) = rebalance_slopes(&w4, &legs, &[1, 2, 3, 3]).unwrap();
        assert_eq!(compose(&g1, &f1), w4);
        assert!(is_in_f(&f1) && is_in_g(&g1));
        let (g1, f1) = rebalance_slopes(&w4, &legs, &[2, 2, 2, 2]).unwrap();
        assert_eq!((g1, f1.is_identity()), (w4.clone(), true));
        assert!(rebalance_slopes(&w4, &legs, &[1, 2, 3, 4]).is_err());

        let g = make_window(&WindowSpec::new(Interval::unit(), vec![1, 2, 2], true)).unwrap();
        let legs = vec![iv((0, 1), (1, 2)), iv((1, 2), (3, 4)), iv((3, 4), (1, 1))];
        let (g1, f1) = rebalance_slopes(&g, &legs, &[2, 2, 1]).unwrap();
        assert!(!f1.is_identity());
        assert_eq!(compose(&g1, &f1), g);
    }

    #[test]
    fn straighten_kinked_band() {
        // Tent with a kink on the rising leg: slopes 4 then 1 up to 1, then down.
        let g = PAMap::from_fracs(&[(0, 1, 0, 1), (1, 4, 1, 2), (3, 8, 1, 1), (5, 8, 0, 1), (3, 4, 1, 2), (1, 1, 1, 1)]);
        assert!(is_in_g(&g));
        let (g1, f1) = eliminate_type1_in_band(&g, &Interval::unit()).unwrap();
        assert_eq!(compose(&g1, &f1), g);
        assert!(is_in_f(&f1) && is_in_g(&g1));
        assert_eq!(g1, PAMap::from_fracs(&[(0, 1, 0, 1), (1, 2, 1, 1), (3, 4, 0, 1), (1, 1, 1, 1)]));
        let (t1, f) = eliminate_type1_in_band(&PAMap::tent(), &Interval::unit()).unwrap();
        assert!(f.is_identity() && t1 == PAMap::tent());
        assert!(eliminate_type1_in_band(&PAMap::tent(), &iv((1, 4), (1, 2))).is_ok());
        assert!(eliminate_type1_in_band(&w2(q(3, 4)), &iv((1, 2), (1, 1))).is_err());
    }

    #[test]
    fn partial_band_normalization() {
        let g = PAMap::from_fracs(&[(0, 1, 0, 1), (1, 4, 1, 1), (3, 8, 0, 1), (7, 8, 1, 1), (1, 1, 0, 1)]);
        assert!(is_in_g(&g));
        let legs = vec![iv((0, 1), (1, 4)), iv((1, 4), (3, 8))];
        let (g1, f1) = normalize_partial_band(&g, &legs).unwrap();
        assert_eq!(compose(&g1, &f1), g);
        assert_eq!(
            g1,
            PAMap::from_fracs(&[(0, 1, 0, 1), (1, 8, 1, 1), (1, 4, 0, 1), (3, 4, 1, 1), (1, 1, 0, 1)])
        );
        let (h, f) = normalize_partial_band(&g1, &[iv((0, 1), (1, 8)), iv((1, 8), (1, 4))]).unwrap();
        assert!(f.is_identity() && h == g1);
    }

    #[test]
    fn window_factoring() {
        let g = PAMap::from_fracs(&[(0, 1, 1, 1), (1, 2, 0, 1), (3, 4, 1, 1), (1, 1, 0, 1)]);
        let (g1, w1) = factor_out_window(&g, &iv((1, 2), (1, 1))).unwrap();
        assert_eq!(w1, w2(q(1, 2)));
        assert_eq!(g1, PAMap::from_fracs(&[(0, 1, 1, 1), (1, 2, 0, 1), (1, 1, 1, 1)]));
        assert_eq!(compose(&g1, &w1), g);
        let (g1, w1) = factor_out_window(&g, &iv((0, 1), (1, 2))).unwrap();
        assert!(w1.is_identity() && g1 == g);
        assert!(factor_out_window(&g, &iv((1, 4), (3, 4))).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&PAMap::reflection()).unwrap();
        assert_eq!(d.factors, vec![Factor::G0Minus]);
        let d = decompose(&PAMap::tent()).unwrap();
        assert_eq!(d.factors, vec![Factor::W2Full]);
        let d = decompose(&PAMap::identity()).unwrap();
        assert_eq!(d.factors, vec![Factor::G0Plus]);
        let w5 = make_window(&WindowSpec::new(Interval::unit(), vec![2, 2, 2, 3, 3], true)).unwrap();
        let d = decompose(&w5).unwrap();
        assert_eq!(d.compose(), w5);
        assert!(d.factors.iter().all(|f| f.is_basic() || matches!(f, Factor::FMap(m) if is_in_f(m))));
        let text = d.to_text();
        assert_eq!(DecompositionWord::parse(&text).unwrap(), d);
        let e = d.expand_f().unwrap();
        assert_eq!(e.compose(), w5);
        assert_eq!(DecompositionWord::parse(&e.to_text()).unwrap(), e);
    }

    #[test]
    fn decompose_random_maps() {
        for seed in 0..25 {
            let g = random_g(seed, 1 + (seed as usize % 5)).unwrap();
            let d = decompose(&g).unwrap();
            assert_eq!(d.compose(), g, "seed {}", seed);
        }
    }

    #[test]
    fn generator_words() {
        assert_eq!(f_to_generator_word(&PAMap::f_a()).unwrap(), vec![FLetter::A]);
        assert_eq!(f_to_generator_word(&PAMap::f_b()).unwrap(), vec![FLetter::B]);
        assert!(f_to_generator_word(&PAMap::identity()).unwrap().is_empty());
        let ba = compose(&PAMap::f_b(), &PAMap::f_a());
        let w = f_to_generator_word(&ba).unwrap();
        assert_eq!(compose_letters(&w), ba);
        let f = PAMap::from_fracs(&[(0, 1, 0, 1), (1, 8, 1, 4), (3, 8, 1, 2), (1, 2, 3, 4), (1, 1, 1, 1)]);
        assert!(is_in_f(&f));
        assert_eq!(compose_letters(&f_to_generator_word(&f).unwrap()), f);
        assert!(f_to_generator_word(&PAMap::tent()).is_err());
    }

    #[test]
    fn sequences() {
        let t = characteristic_sequence(&PAMap::tent()).unwrap();
        assert_eq!((t.to_string(), t.m, t.n), ("+«1,1»".to_string(), 1, 2));
        assert_eq!(characteristic_sequence(&PAMap::identity()).unwrap().to_string(), "+«1»");
        assert_eq!(characteristic_sequence(&PAMap::reflection()).unwrap().to_string(), "-«1»");
        let c = characteristic_sequence(&w2_right_quarter()).unwrap();
        assert_eq!((c.to_string(), c.m), ("+«1,2,2»".to_string(), 2));
        let e = evolution_sequence(&PAMap::reflection(), &[qi(0), qi(1)]).unwrap();
        assert_eq!(e.to_string(), "-«1»");
        let eq3 = PAMap::period_family(&q(1, 4)).unwrap();
        let e = evolution_sequence(&eq3, &[qi(0), q(1, 4), q(3, 4), qi(1)]).unwrap();
        assert_eq!((e.indices.len(), e.m), (7, 3));
        assert!(evolution_sequence(&PAMap::tent(), &[qi(0), q(1, 3), qi(1)]).is_ok());
        assert!(evolution_sequence(&w2_right_quarter(), &[qi(0), q(1, 2), qi(1)]).is_err());
    }

    #[test]
    fn class_sequences() {
        let ta = compose(&PAMap::tent(), &PAMap::f_a());
        assert!(characteristic_sequence(&ta).unwrap().size() > 2);
        assert_eq!(class_characteristic_sequence(&ta).unwrap().to_string(), "+«1,1»");
        assert_eq!(class_characteristic_sequence(&PAMap::reflection()).unwrap().to_string(), "-«1»");
        assert!(same_equivalence_class(&w2(q(1, 2)), &w2(q(1, 4))).unwrap());
        assert!(same_equivalence_class(&w2(q(1, 2)), &w2_right_quarter()).unwrap());
        assert!(!same_equivalence_class(&PAMap::tent(), &w2_right_quarter()).unwrap());
        assert_ne!(w2(q(1, 2)), w2(q(1, 4)));
    }

    #[test]
    fn right_normalization() {
        let f2 = normalize_right(&PAMap::identity(), &PAMap::tent()).unwrap();
        assert!(f2.is_identity());
        for (f1, g) in [(PAMap::f_a(), PAMap::tent()), (PAMap::f_b(), w2_right_quarter())] {
            let f2 = normalize_right(&f1, &g).unwrap();
            assert!(is_in_f(&f2));
            let h = compose(&compose(&f1, &g), &f2);
            assert!(is_in_g(&h));
            assert!(same_equivalence_class(&g, &h).unwrap());
        }
    }

    #[test]
    fn type2_superadditivity() {
        for seed in 0..20 {
            let a = random_g(seed, 2).unwrap();
            let b = random_g(seed + 100, 2).unwrap();
            assert!(count_type2(&compose(&a, &b)) >= count_type2(&a) + count_type2(&b));
        }
    }

    #[test]
    fn window_after_tent_pair_is_one_class() {
        let g1 = compose(&w2(q(1, 2)), &PAMap::tent());
        let g2 = compose(&w2(q(1, 4)), &PAMap::tent());
        let psi = level_map(&g2, &g1).unwrap();
        let phi = right_cofactor(&g1, &compose(&psi, &g2)).unwrap();
        assert!(is_in_f(&psi) && is_in_f(&phi));
        assert_eq!(compose_all(&[psi, g2.clone(), phi]), g1);
        assert!(same_equivalence_class(&g1, &g2).unwrap());
        let h1 = compose(&PAMap::tent(), &w2(q(1, 2)));
        let h2 = compose(&PAMap::tent(), &w2(q(1, 4)));
        assert!(!same_equivalence_class(&h1, &h2).unwrap());
    }

    #[test]
    fn decompose_factors_are_basic_or_f() {
        for seed in 0..40 {
            let g = random_g(seed * 7 + 3, 6).unwrap();
            let d = decompose(&g).unwrap();
            assert_eq!(d.compose(), g);
            for f in &d.factors {
                match f {
                    Factor::FMap(m) => assert!(is_in_f(m)),
                    b => assert!(b.is_basic()),
                }
            }
        }
    }
}
