//! Markov skeletons, their index maps and transition matrices, exact
//! stationary vectors, and synthesis of measure-preserving maps with a
//! prescribed index map.

use num::{One, Signed, Zero};

use crate::algebra::same_equivalence_class;
use crate::dynamics::markov_partition;
use crate::error::{domain, Error, Result};
use crate::map_core::{compose, is_in_g, is_lambda_preserving, PAMap};
use crate::numeric::{fmt_q, parse_q, pow2, qi, Q};

/// Partition `x̂_0 < … < x̂_N` of `[0,1]` with `s(x̂_i)` on the partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovSkeleton {
    pub points: Vec<Q>,
    pub values: Vec<Q>,
}

impl MarkovSkeleton {
    pub fn new(points: Vec<Q>, values: Vec<Q>) -> Result<MarkovSkeleton> {
        if points.len() < 2 || points.len() != values.len() {
            return domain("a skeleton needs at least two points and one value per point");
        }
        if !points[0].is_zero() || !points.last().unwrap().is_one() {
            return domain("skeleton partition must run from 0 to 1");
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return domain("skeleton partition must be strictly increasing");
        }
        Ok(MarkovSkeleton { points, values })
    }

    /// Skeleton of `g` over its Markov partition.
    pub fn from_map(g: &PAMap) -> Result<MarkovSkeleton> {
        let points = markov_partition(g)?;
        let values = points.iter().map(|x| g.at(x)).collect();
        MarkovSkeleton::new(points, values)
    }

    /// The piecewise-affine map through the skeleton points.
    pub fn to_map(&self) -> Result<PAMap> {
        PAMap::new(self.points.iter().cloned().zip(self.values.iter().cloned()).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("skeleton/1\n");
        for (x, y) in self.points.iter().zip(&self.values) {
            s.push_str(&format!("{} {}\n", fmt_q(x), fmt_q(y)));
        }
        s
    }

    pub fn parse(text: &str) -> Result<MarkovSkeleton> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, "skeleton/1")) => {}
            Some((n, l)) => {
                return Err(Error::Parse { line: n, msg: format!("expected header skeleton/1, got {:?}", l) })
            }
            None => return Err(Error::Parse { line: 1, msg: "empty input".into() }),
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut last = 1;
        for (n, l) in lines {
            last = n;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse { line: n, msg: "expected two rationals".into() });
            }
            let pe = |e: Error| Error::Parse { line: n, msg: e.to_string() };
            points.push(parse_q(f[0]).map_err(pe)?);
            values.push(parse_q(f[1]).map_err(pe)?);
        }
        MarkovSkeleton::new(points, values).map_err(|e| Error::Parse { line: last, msg: e.to_string() })
    }
}

/// `s*(i) = j` when `s(x̂_i) = x̂_j`.
pub type IndexMap = Vec<usize>;

pub fn index_map(sk: &MarkovSkeleton) -> Result<IndexMap> {
    sk.values
        .iter()
        .map(|v| {
            sk.points
                .binary_search(v)
                .map_err(|_| Error::Domain(format!("value {} is not a partition point", fmt_q(v))))
        })
        .collect()
}

/// `*s(i) = N − s*(N−i)`.
pub fn reverse_index(s: &[usize]) -> IndexMap {
    let n = s.len() - 1;
    (0..=n).map(|i| n - s[n - i]).collect()
}

/// Dense 0/1 adjacency: row `i` is piece `I_{i+1}`, column `j` is piece `I_{j+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AStar {
    pub rows: Vec<Vec<bool>>,
}

impl AStar {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn from_matrix(m: &[Vec<Q>]) -> AStar {
        AStar { rows: m.iter().map(|r| r.iter().map(|v| !v.is_zero()).collect()).collect() }
    }

    pub fn to_matrix(&self) -> Vec<Vec<Q>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&b| if b { qi(1) } else { qi(0) }).collect())
            .collect()
    }

    fn column(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.rows[i][j]).collect()
    }
}

pub fn a_star(s: &[usize]) -> Result<AStar> {
    let n = s.len().checked_sub(1).filter(|&n| n > 0).ok_or_else(|| Error::Domain("index map too short".into()))?;
    if s.iter().any(|&v| v > n) {
        return domain("index map value out of range");
    }
    let rows = (1..=n)
        .map(|i| {
            let (lo, hi) = (s[i - 1].min(s[i]), s[i - 1].max(s[i]));
            (1..=n).map(|j| lo < j && j <= hi).collect()
        })
        .collect();
    Ok(AStar { rows })
}

/// Recovers `s*` from `A*`; the candidate with smaller `s*(0)` wins.
pub fn index_map_from_a_star(a: &AStar) -> Result<IndexMap> {
    let n = a.n();
    let span = |i: usize| -> Option<(usize, usize)> {
        let cols: Vec<usize> = (0..n).filter(|&j| a.rows[i][j]).collect();
        let (lo, hi) = (cols.first()?, cols.last()?);
        (hi - lo + 1 == cols.len()).then_some((*lo, hi + 1))
    };
    let spans: Vec<(usize, usize)> = (0..n)
        .map(|i| span(i).ok_or_else(|| Error::Domain(format!("row {} is not a nonempty run", i + 1))))
        .collect::<Result<_>>()?;
    for start in [spans[0].0, spans[0].1] {
        let mut s = vec![start];
        for &(lo, hi) in &spans {
            let p = *s.last().unwrap();
            if p == lo {
                s.push(hi);
            } else if p == hi {
                s.push(lo);
            } else {
                break;
            }
        }
        if s.len() == n + 1 {
            return Ok(s);
        }
    }
    domain("adjacency rows do not chain into an index map")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecurrenceClass {
    Irreducible,
    MultipleRecurrent(usize),
    HasTransient,
}

/// Communicating classes of the chain `j → i` when `A*_{i,j} = 1`, each
/// sorted, ordered by smallest member, with a recurrence flag.
pub fn communicating_classes(a: &AStar) -> Vec<(Vec<usize>, bool)> {
    let n = a.n();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|j| (0..n).map(|i| a.rows[i][j]).collect()).collect();
    for k in 0..n {
        for u in 0..n {
            if reach[u][k] {
                for v in 0..n {
                    if reach[k][v] {
                        reach[u][v] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for u in 0..n {
        if assigned[u] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&v| v == u || (reach[u][v] && reach[v][u])).collect();
        for &v in &class {
            assigned[v] = true;
        }
        let closed = class.iter().all(|&v| (0..n).all(|w| !reach[v][w] || class.contains(&w)));
        let recurrent = closed && (class.len() > 1 || reach[u][u]);
        out.push((class, recurrent));
    }
    out
}

pub fn classify(a: &AStar) -> RecurrenceClass {
    let classes = communicating_classes(a);
    if classes.iter().any(|c| !c.1) {
        RecurrenceClass::HasTransient
    } else if classes.len() == 1 {
        RecurrenceClass::Irreducible
    } else {
        RecurrenceClass::MultipleRecurrent(classes.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeMode {
    PowersOfTwo,
    Uniform,
}

/// `A_{i,j} = 1/|a_{i,j}|` on the support of `A*`; every column sums to 1.
pub type SlopeMatrix = Vec<Vec<Q>>;

pub fn default_slopes(a: &AStar, mode: SlopeMode) -> Result<SlopeMatrix> {
    let n = a.n();
    let mut m = vec![vec![qi(0); n]; n];
    for j in 0..n {
        let col = a.column(j);
        let c = col.len();
        if c == 0 {
            return domain(format!("column {} is empty", j + 1));
        }
        for (r, &i) in col.iter().enumerate() {
            m[i][j] = match mode {
                SlopeMode::Uniform => Q::new(1.into(), (c as i64).into()),
                SlopeMode::PowersOfTwo if c == 1 => qi(1),
                SlopeMode::PowersOfTwo => pow2(-((r + 1).min(c - 1) as i64)),
            };
        }
    }
    Ok(m)
}

fn check_stochastic(a: &[Vec<Q>]) -> Result<()> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return domain("matrix must be square and nonempty");
    }
    for j in 0..n {
        let s: Q = a.iter().map(|r| &r[j]).sum();
        if !s.is_one() {
            return domain(format!("column {} sums to {}, not 1", j + 1, fmt_q(&s)));
        }
    }
    if a.iter().flatten().any(|v| v.is_negative()) {
        return domain("matrix entries must be nonnegative");
    }
    Ok(())
}

/// Basis of the null space of `m` by exact Gauss-Jordan elimination.
pub fn nullspace(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = Q::one() / &a[r][c];
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let d = &f * &a[r][k];
                    a[i][k] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![qi(0); cols];
            v[free] = qi(1);
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][free].clone();
            }
            v
        })
        .collect()
}

fn normalized(v: Vec<Q>) -> Vec<Q> {
    let s: Q = v.iter().sum();
    v.into_iter().map(|x| x / &s).collect()
}

/// Exact solution of `v = A v`, `Σ v = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stationary {
    pub class: RecurrenceClass,
    /// Unique solution, or the uniform combination of the basis.
    pub vector: Vec<Q>,
    /// One normalized stationary vector per recurrent class.
    pub basis: Vec<Vec<Q>>,
}

pub fn stationary(a: &[Vec<Q>]) -> Result<Stationary> {
    check_stochastic(a)?;
    let star = AStar::from_matrix(a);
    let classes = communicating_classes(&star);
    let class = classify(&star);
    if class == RecurrenceClass::HasTransient {
        let transient: Vec<String> = classes
            .iter()
            .filter(|c| !c.1)
            .flat_map(|c| c.0.iter().map(|i| (i + 1).to_string()))
            .collect();
        return Err(Error::NoPositiveSolution(format!("transient states {}", transient.join(","))));
    }
    let n = a.len();
    let mut basis = Vec::new();
    for (members, _) in &classes {
        let sub: Vec<Vec<Q>> = members
            .iter()
            .map(|&i| {
                members
                    .iter()
                    .map(|&j| if i == j { &a[i][j] - qi(1) } else { a[i][j].clone() })
                    .collect()
            })
            .collect();
        let ns = nullspace(&sub);
        if ns.len() != 1 {
            return domain("recurrent class without a one-dimensional eigenspace");
        }
        let local = normalized(ns.into_iter().next().unwrap());
        let mut v = vec![qi(0); n];
        for (k, &i) in members.iter().enumerate() {
            v[i] = local[k].clone();
        }
        basis.push(v);
    }
    let k = Q::from_integer((basis.len() as i64).into());
    let vector = (0..n).map(|i| basis.iter().map(|b| &b[i]).sum::<Q>() / &k).collect();
    Ok(Stationary { class, vector, basis })
}

/// Dyadic, palindromic class weights `C(K−1, k)/2^(K−1)`.
fn class_weights(k: usize) -> Vec<Q> {
    let mut w = vec![qi(1)];
    for _ in 1..k {
        let mut next = vec![qi(0); w.len() + 1];
        for (i, x) in w.iter().enumerate() {
            next[i] += x / qi(2);
            next[i + 1] += x / qi(2);
        }
        w = next;
    }
    w
}

/// A synthesized map together with its partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugateMap {
    pub t: PAMap,
    pub partition: Vec<Q>,
    pub in_g: bool,
    /// For slope `−1` pieces off the diagonal: whether `|(t∘t)'| > 1` on every segment.
    pub square_expanding: Option<bool>,
}

fn check_support(s: &[usize], a: &[Vec<Q>]) -> Result<AStar> {
    let star = a_star(s)?;
    if star.n() != a.len() {
        return domain("matrix size does not match the index map");
    }
    if AStar::from_matrix(a) != star {
        return domain("matrix support differs from the adjacency of the index map");
    }
    if (1..s.len()).any(|i| s[i] == s[i - 1]) {
        return domain("index map has a constant piece");
    }
    Ok(star)
}

/// Piece lengths: the stationary vector, with dyadic class weights when
/// several recurrent classes exist.
fn piece_lengths(a: &[Vec<Q>]) -> Result<Vec<Q>> {
    let st = stationary(a)?;
    if st.basis.len() == 1 {
        return Ok(st.vector);
    }
    let w = class_weights(st.basis.len());
    Ok((0..a.len()).map(|i| st.basis.iter().zip(&w).map(|(b, c)| &b[i] * c).sum()).collect())
}

fn synthesize(s: &[usize], a: &[Vec<Q>]) -> Result<(PAMap, Vec<Q>)> {
    let v = piece_lengths(a)?;
    let n = v.len();
    let mut x = vec![qi(0)];
    for l in &v {
        let next = x.last().unwrap() + l;
        x.push(next);
    }
    let mut pts = vec![(qi(0), x[s[0]].clone())];
    for i in 1..=n {
        let (p, c) = (s[i - 1], s[i]);
        let mut cur = x[i - 1].clone();
        let targets: Vec<usize> = if p < c { (p + 1..=c).collect() } else { (c + 1..=p).rev().collect() };
        for j in targets {
            cur += &a[i - 1][j - 1] * &v[j - 1];
            let y = if p < c { x[j].clone() } else { x[j - 1].clone() };
            pts.push((cur.clone(), y));
        }
        if cur != x[i] {
            return domain("stationary lengths are inconsistent with the matrix");
        }
    }
    Ok((PAMap::new(pts)?, x))
}

/// The expanding map `t` with `t* = s*` and slopes `1/A_{i,j}`.
pub fn construct_conjugate(s: &[usize], a: &[Vec<Q>]) -> Result<ConjugateMap> {
    check_support(s, a)?;
    check_stochastic(a)?;
    if a.iter().flatten().any(|v| v.is_one()) {
        return Err(Error::Unsupported(
            "a column with a single entry forces slope ±1; use the slope-one construction".into(),
        ));
    }
    let (t, partition) = synthesize(s, a)?;
    debug_assert_eq!(is_lambda_preserving(&t), Ok(true));
    Ok(ConjugateMap { in_g: is_in_g(&t), t, partition, square_expanding: None })
}

/// Synthesis when exactly one column `j0` has a single entry `i0` and row
/// `i0` has no other entry; `t` has slope `±1` on `I_{i0}`.
pub fn construct_conjugate_slope1(s: &[usize], a: &[Vec<Q>]) -> Result<ConjugateMap> {
    let star = check_support(s, a)?;
    check_stochastic(a)?;
    let n = star.n();
    let singles: Vec<usize> = (0..n).filter(|&j| star.column(j).len() == 1).collect();
    if singles.len() != 1 {
        return Err(Error::Unsupported(format!(
            "exactly one column with a single entry is required, found {}",
            singles.len()
        )));
    }
    let j0 = singles[0];
    let i0 = star.column(j0)[0];
    if (0..n).any(|j| j != j0 && star.rows[i0][j]) {
        return Err(Error::Unsupported(format!(
            "row {} maps onto more than column {}",
            i0 + 1,
            j0 + 1
        )));
    }
    let (t, partition) = synthesize(s, a)?;
    debug_assert_eq!(is_lambda_preserving(&t), Ok(true));
    let square_expanding = (i0 != j0).then(|| {
        compose(&t, &t).slopes().iter().all(|k| k.abs() > qi(1))
    });
    Ok(ConjugateMap { in_g: is_in_g(&t), t, partition, square_expanding })
}

/// Equal index maps up to reversal; a conjugacy test only for expanding Markov maps.
pub fn conjugate_by_index(s1: &[usize], s2: &[usize]) -> bool {
    s1 == s2 || (s1.len() == s2.len() && s1 == reverse_index(s2).as_slice())
}

/// `true` when both maps have the same index map over their Markov
/// partitions, which implies they share an equivalence class.
pub fn same_class_from_index(g1: &PAMap, g2: &PAMap) -> Result<bool> {
    let s1 = index_map(&MarkovSkeleton::from_map(g1)?)?;
    let s2 = index_map(&MarkovSkeleton::from_map(g2)?)?;
    if s1 != s2 {
        return Ok(false);
    }
    debug_assert!(same_equivalence_class(g1, g2)?);
    Ok(true)
}

/// Rows of canonical rationals; `2^-k` tokens are accepted too.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<Q>>> {
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for (n, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') || l == "matrix/1" {
            continue;
        }
        let row = l
            .split_whitespace()
            .map(|t| {
                let v = match t.strip_prefix("2^") {
                    Some(e) => e.parse::<i64>().map(pow2).map_err(|_| Error::Domain(format!("bad token {:?}", t))),
                    None => parse_q(t),
                };
                v.map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })
            })
            .collect::<Result<Vec<Q>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse { line: n + 1, msg: "ragged matrix row".into() });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty matrix".into() });
    }
    if rows.len() != rows[0].len() {
        return Err(Error::Parse { line: text.lines().count(), msg: "matrix must be square".into() });
    }
    Ok(rows)
}

pub fn format_matrix(m: &[Vec<Q>]) -> String {
    m.iter()
        .map(|r| r.iter().map(fmt_q).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}
