//! The `dyadic` command line: one subcommand per library operation.
//!
//! Exit codes: 0 success, 1 domain or parse error, 2 usage error.
//! `DYADIC_SEGMENT_BUDGET` sets the default `--segment-budget`.

use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::algebra::{
    characteristic_sequence, class_characteristic_sequence, decompose, evolution_sequence,
    same_equivalence_class, CharSeq, DecompositionWord,
};
use crate::conjugacy::{
    a_star, classify, construct_conjugate, construct_conjugate_slope1, default_slopes,
    index_map, index_map_from_a_star, parse_matrix, stationary, AStar, MarkovSkeleton,
    RecurrenceClass, SlopeMode,
};
use crate::construct::{
    approximate_in_g, approximate_increasing_in_f, make_leo, make_window, random_g,
    solve_dynamic_matching, target_entropy, WindowSpec,
};
use crate::dynamics::{
    entropy, is_leo, is_tm, j_collection, markov_partition, orbit_budget, periodic_points,
    ComplementMode, Entropy, DEFAULT_NMAX, DEFAULT_ORBIT_BUDGET,
};
use crate::error::Error;
use crate::map_core::{
    compose_budget, count_type2, is_in_f, is_in_g, is_lambda_preserving, iterate, parse_pamap,
    sup_distance, Interval, PAMap, DEFAULT_SEGMENT_BUDGET,
};
use crate::numeric::{fmt_q, parse_q, Q};
use crate::plot::{render_svg, PlotOptions};

pub const BUDGET_ENV: &str = "DYADIC_SEGMENT_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Parser, Debug)]
#[command(name = "dyadic", version, about = "Exact tools for measure-preserving dyadic interval maps")]
struct Cli {
    /// Output style: human-readable `key: value` lines or JSON.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Maximum number of segments for compositions (default from DYADIC_SEGMENT_BUDGET, else 1000000).
    #[arg(long, global = true)]
    segment_budget: Option<usize>,
    /// Write the map, word, skeleton or SVG to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Eps {
    /// Approximation tolerance.
    #[arg(long, default_value = "1/8")]
    eps: String,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Membership in G, F and PA(λ), and type-II count.
    Check { map: String },
    Eval { map: String, x: String },
    /// `maps[0] ∘ maps[1] ∘ …`.
    Compose {
        #[arg(required = true, num_args = 2..)]
        maps: Vec<String>,
    },
    Iterate { map: String, n: usize },
    Orbit {
        map: String,
        x: String,
        #[arg(long, default_value_t = DEFAULT_ORBIT_BUDGET)]
        budget: usize,
    },
    /// Markov partition and skeleton.
    Markov { map: String },
    /// Periodic points of each minimal period up to `--nmax`.
    Periods {
        map: String,
        #[arg(long, default_value_t = DEFAULT_NMAX)]
        nmax: usize,
        /// Comma-separated periods to report (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    Jcollection { map: String },
    /// Topological mixing and locally-eventually-onto tests.
    Mixing { map: String },
    Entropy { map: String },
    ApproxF {
        map: String,
        #[command(flatten)]
        eps: Eps,
    },
    ApproxG {
        map: String,
        #[command(flatten)]
        eps: Eps,
    },
    Leoize {
        map: String,
        #[command(flatten)]
        eps: Eps,
    },
    /// Builds an m-fold window map.
    Window {
        /// Window interval as `lo,hi`.
        #[arg(long)]
        interval: String,
        /// Leg exponents `k_1,…,k_m` with Σ 2^-k = 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        exponents: Vec<i64>,
        /// First leg decreasing.
        #[arg(long)]
        falling: bool,
        /// Reflection outside the window instead of the identity.
        #[arg(long)]
        reflected: bool,
    },
    TargetEntropy {
        map: String,
        #[arg(long)]
        c: String,
        #[command(flatten)]
        eps: Eps,
    },
    /// Dynamic matching of rates `alpha` to targets `beta`.
    Matching {
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        beta: Vec<String>,
    },
    Decompose {
        map: String,
        /// Replace F maps by generator words.
        #[arg(long)]
        expand: bool,
    },
    /// Composes a `word/1` file back into a map.
    Recompose { word: String },
    /// Whether two maps in G lie in one equivalence class.
    Eqclass { map1: String, map2: String },
    /// Characteristic sequence, or the evolution sequence over `--levels`.
    Charseq {
        map: String,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<String>,
    },
    /// Measure-preserving map with the index map of a skeleton or matrix.
    Conjugate {
        input: String,
        /// Slope matrix A; default slopes from `--mode` otherwise.
        #[arg(long)]
        slopes: Option<String>,
        #[arg(long, value_enum, default_value = "powers-of-two")]
        mode: ModeArg,
    },
    Classify { input: String },
    Stationary {
        matrix: String,
        #[arg(long, value_enum, default_value = "powers-of-two")]
        mode: ModeArg,
    },
    /// SVG graph of a map.
    Plot {
        map: String,
        #[arg(long)]
        diagonal: bool,
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
    /// Random element of G.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        complexity: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    PowersOfTwo,
    Uniform,
}

impl From<ModeArg> for SlopeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PowersOfTwo => SlopeMode::PowersOfTwo,
            ModeArg::Uniform => SlopeMode::Uniform,
        }
    }
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Out = std::result::Result<Report, Failure>;

/// Ordered `key: value` pairs with a JSON twin.
struct Report {
    text: Vec<(String, String)>,
    json: serde_json::Map<String, Value>,
    /// Raw text printed after the pairs (maps, words, matrices).
    body: Option<String>,
    /// The body is a `pamap/1` or `word/1` document; pairs become `#` comments.
    document: bool,
}

impl Report {
    fn new() -> Report {
        Report { text: Vec::new(), json: serde_json::Map::new(), body: None, document: false }
    }

    fn kv(mut self, k: &str, text: impl Into<String>, v: Value) -> Report {
        self.text.push((k.to_string(), text.into()));
        self.json.insert(k.to_string(), v);
        self
    }

    /// A bare text line with a named JSON field.
    fn line(mut self, k: &str, text: String, v: Value) -> Report {
        self.text.push((String::new(), text));
        self.json.insert(k.to_string(), v);
        self
    }

    fn flag(self, k: &str, b: bool) -> Report {
        self.kv(k, b.to_string(), json!(b))
    }

    fn q(self, k: &str, v: &Q) -> Report {
        self.kv(k, fmt_q(v), json!(fmt_q(v)))
    }

    fn map(self, k: &str, g: &PAMap) -> Report {
        let text = g.to_pamap_string();
        self.body(k, text)
    }

    fn body(mut self, k: &str, text: String) -> Report {
        self.json.insert(k.to_string(), json!(text));
        self.body = Some(text);
        self.document = true;
        self
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                serde_json::to_string_pretty(&Value::Object(self.json.clone())).unwrap() + "\n"
            }
            Format::Text => {
                let mut s = String::new();
                for (k, v) in &self.text {
                    if k.is_empty() {
                        s.push_str(v);
                        s.push('\n');
                    } else if self.document {
                        s.push_str(&format!("# {}: {}\n", k, v));
                    } else {
                        s.push_str(&format!("{}: {}\n", k, v));
                    }
                }
                if let Some(b) = &self.body {
                    s.push_str(b);
                }
                s
            }
        }
    }
}

fn read_input(path: &str) -> std::result::Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(format!("stdin: {}", e)))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {}", path, e)))
}

fn read_map(path: &str) -> std::result::Result<PAMap, Failure> {
    Ok(parse_pamap(&read_input(path)?)?)
}

fn arg_q(s: &str) -> std::result::Result<Q, Failure> {
    parse_q(s).map_err(|e| Failure::Usage(e.to_string()))
}

fn arg_qs(v: &[String]) -> std::result::Result<Vec<Q>, Failure> {
    v.iter().map(|s| arg_q(s)).collect()
}

fn qs_text(v: &[Q]) -> String {
    v.iter().map(fmt_q).collect::<Vec<_>>().join(" ")
}

fn qs_json(v: &[Q]) -> Value {
    json!(v.iter().map(fmt_q).collect::<Vec<_>>())
}

fn interval_json(iv: &Interval) -> Value {
    json!([fmt_q(&iv.lo), fmt_q(&iv.hi)])
}

fn charseq_json(c: &CharSeq) -> Value {
    json!({"sign": c.sign, "indices": c.indices, "m": c.m, "n": c.n, "text": c.to_string()})
}

fn class_text(c: &RecurrenceClass) -> String {
    match c {
        RecurrenceClass::Irreducible => "irreducible".into(),
        RecurrenceClass::MultipleRecurrent(k) => format!("multiple-recurrent {}", k),
        RecurrenceClass::HasTransient => "has-transient".into(),
    }
}

/// Index map and slope matrix from a skeleton, a 0/1 adjacency or a slope matrix.
fn markov_input(text: &str, mode: SlopeMode) -> std::result::Result<(Vec<usize>, Vec<Vec<Q>>), Failure> {
    if text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) == Some("skeleton/1") {
        let s = index_map(&MarkovSkeleton::parse(text)?)?;
        let a = default_slopes(&a_star(&s)?, mode)?;
        return Ok((s, a));
    }
    let a = slope_matrix(text, mode)?;
    let s = index_map_from_a_star(&AStar::from_matrix(&a))?;
    Ok((s, a))
}

/// A column-stochastic matrix as given, or default slopes on a 0/1 adjacency.
fn slope_matrix(text: &str, mode: SlopeMode) -> std::result::Result<Vec<Vec<Q>>, Failure> {
    if text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) == Some("skeleton/1") {
        return Ok(default_slopes(&a_star(&index_map(&MarkovSkeleton::parse(text)?)?)?, mode)?);
    }
    let m = parse_matrix(text)?;
    let n = m.len();
    let one = Q::from_integer(1.into());
    let stochastic = (0..n).all(|j| m.iter().map(|r| &r[j]).sum::<Q>() == one);
    let binary = m.iter().flatten().all(|v| v.is_integer() && (v.numer().sign() != num::bigint::Sign::Minus) && v <= &one);
    if stochastic || !binary {
        Ok(m)
    } else {
        Ok(default_slopes(&AStar::from_matrix(&m), mode)?)
    }
}

fn eps(e: &Eps) -> std::result::Result<Q, Failure> {
    arg_q(&e.eps)
}

fn execute(cli: &Cli, budget: usize) -> Out {
    Ok(match &cli.cmd {
        Cmd::Check { map } => {
            let g = read_map(map)?;
            Report::new()
                .flag("in_g", is_in_g(&g))
                .flag("in_f", is_in_f(&g))
                .flag("lambda_preserving", is_lambda_preserving(&g)?)
                .flag("onto", g.is_onto())
                .kv("type2", count_type2(&g).to_string(), json!(count_type2(&g)))
                .kv("segments", g.num_segments().to_string(), json!(g.num_segments()))
        }
        Cmd::Eval { map, x } => {
            let g = read_map(map)?;
            Report::new().q("value", &g.eval(&arg_q(x)?)?)
        }
        Cmd::Compose { maps } => {
            let gs = maps.iter().map(|m| read_map(m)).collect::<std::result::Result<Vec<_>, _>>()?;
            let mut h = gs.last().unwrap().clone();
            for g in gs.iter().rev().skip(1) {
                h = compose_budget(g, &h, budget)?;
            }
            Report::new().map("map", &h)
        }
        Cmd::Iterate { map, n } => Report::new().map("map", &iterate(&read_map(map)?, *n, budget)?),
        Cmd::Orbit { map, x, budget } => {
            let r = orbit_budget(&read_map(map)?, &arg_q(x)?, *budget)?;
            Report::new()
                .kv("preperiod", r.preperiod.to_string(), json!(r.preperiod))
                .kv("period", r.period.to_string(), json!(r.period))
                .kv("orbit", qs_text(&r.orbit), qs_json(&r.orbit))
        }
        Cmd::Markov { map } => {
            let g = read_map(map)?;
            let p = markov_partition(&g)?;
            let sk = MarkovSkeleton::from_map(&g)?;
            let s = index_map(&sk)?;
            Report::new()
                .kv("partition", qs_text(&p), qs_json(&p))
                .kv("index_map", s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "), json!(s))
                .body("skeleton", sk.to_text())
        }
        Cmd::Periods { map, nmax, only } => {
            let g = read_map(map)?;
            let r = periodic_points(&g, *nmax, budget)?;
            let wanted: Vec<usize> = if only.is_empty() { (1..=*nmax).collect() } else { only.clone() };
            if let Some(bad) = wanted.iter().find(|&&n| n == 0 || n > *nmax) {
                return Err(Failure::Usage(format!("period {} is outside 1..={}", bad, nmax)));
            }
            let mut summary = Vec::new();
            let mut detail = serde_json::Map::new();
            let mut lines = Vec::new();
            for n in wanted {
                let e = &r.by_period[&n];
                summary.push(format!("{}: {}", n, if e.is_empty() { "none" } else { "present" }));
                detail.insert(
                    n.to_string(),
                    json!({
                        "present": !e.is_empty(),
                        "points": qs_json(&e.points),
                        "intervals": e.intervals.iter().map(interval_json).collect::<Vec<_>>(),
                    }),
                );
                let ivs: Vec<String> = e.intervals.iter().map(|i| i.to_string()).collect();
                lines.push(format!("period {}: points {} intervals {}", n, e.points.len(), if ivs.is_empty() { "-".into() } else { ivs.join(" ") }));
            }
            let mut rep = Report::new().line("summary", summary.join("; "), json!(summary.join("; ")));
            rep.json.insert("periods".into(), Value::Object(detail));
            rep.body = Some(lines.join("\n") + "\n");
            rep
        }
        Cmd::Jcollection { map } => {
            let j = j_collection(&read_map(map)?)?;
            let mode = match j.mode {
                ComplementMode::Identity => "identity",
                ComplementMode::Reflection => "reflection",
            };
            Report::new()
                .kv(
                    "intervals",
                    j.intervals.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                    json!(j.intervals.iter().map(interval_json).collect::<Vec<_>>()),
                )
                .kv("mode", mode, json!(mode))
        }
        Cmd::Mixing { map } => {
            let g = read_map(map)?;
            Report::new().flag("tm", is_tm(&g)?).flag("leo", is_leo(&g)?)
        }
        Cmd::Entropy { map } => match entropy(&read_map(map)?)? {
            Entropy::Exact(v) => Report::new().q("entropy", &v).flag("exact", true),
            Entropy::Approx(f) => Report::new().kv("entropy", format!("{:.12}", f), json!(f)).flag("exact", false),
        },
        Cmd::ApproxF { map, eps: e } => {
            let a = read_map(map)?;
            let f = approximate_increasing_in_f(&a, &eps(e)?)?;
            Report::new().q("sup_distance", &sup_distance(&a, &f)).map("map", &f)
        }
        Cmd::ApproxG { map, eps: e } => {
            let h = read_map(map)?;
            let g = approximate_in_g(&h, &eps(e)?)?;
            Report::new().q("sup_distance", &sup_distance(&h, &g)).flag("in_g", is_in_g(&g)).map("map", &g)
        }
        Cmd::Leoize { map, eps: e } => {
            let h = read_map(map)?;
            let g = make_leo(&h, &eps(e)?)?;
            Report::new().q("sup_distance", &sup_distance(&h, &g)).flag("leo", is_leo(&g)?).map("map", &g)
        }
        Cmd::Window { interval, exponents, falling, reflected } => {
            let (lo, hi) = interval
                .split_once(',')
                .ok_or_else(|| Failure::Usage("--interval expects lo,hi".into()))?;
            let mut spec = WindowSpec::new(Interval::new(arg_q(lo)?, arg_q(hi)?), exponents.clone(), !falling);
            if *reflected {
                spec = spec.reflected();
            }
            Report::new().map("map", &make_window(&spec)?)
        }
        Cmd::TargetEntropy { map, c, eps: e } => {
            let h = read_map(map)?;
            let g = target_entropy(&h, &arg_q(c)?, &eps(e)?)?;
            let ent = entropy(&g)?;
            let rep = match &ent {
                Entropy::Exact(v) => Report::new().q("entropy", v),
                Entropy::Approx(f) => Report::new().kv("entropy", format!("{:.12}", f), json!(f)),
            };
            rep.q("sup_distance", &sup_distance(&h, &g)).map("map", &g)
        }
        Cmd::Matching { alpha, beta } => {
            let (a, b) = (arg_qs(alpha)?, arg_qs(beta)?);
            let sched = solve_dynamic_matching(&a, &b)?;
            let delivered = sched.delivered(&a);
            let entries: Vec<Value> = sched
                .entries
                .iter()
                .map(|(d, p)| json!({"duration": fmt_q(d), "perm": p.iter().map(|i| i + 1).collect::<Vec<_>>()}))
                .collect();
            let mut rep = Report::new()
                .flag("feasible", true)
                .kv("delivered", qs_text(&delivered), qs_json(&delivered));
            rep.json.insert("schedule".into(), json!(entries));
            rep.body = Some(sched.to_string());
            rep
        }
        Cmd::Decompose { map, expand } => {
            let g = read_map(map)?;
            let mut w = decompose(&g)?;
            if *expand {
                w = w.expand_f()?;
            }
            Report::new()
                .kv("factors", w.len().to_string(), json!(w.len()))
                .body("word", w.to_text())
        }
        Cmd::Recompose { word } => {
            let w = DecompositionWord::parse(&read_input(word)?)?;
            Report::new().map("map", &w.compose())
        }
        Cmd::Eqclass { map1, map2 } => {
            let (g1, g2) = (read_map(map1)?, read_map(map2)?);
            let (c1, c2) = (class_characteristic_sequence(&g1)?, class_characteristic_sequence(&g2)?);
            Report::new()
                .flag("same_class", same_equivalence_class(&g1, &g2)?)
                .kv("class_sequence_1", c1.to_string(), charseq_json(&c1))
                .kv("class_sequence_2", c2.to_string(), charseq_json(&c2))
        }
        Cmd::Charseq { map, levels } => {
            let g = read_map(map)?;
            if levels.is_empty() {
                let c = characteristic_sequence(&g)?;
                let k = class_characteristic_sequence(&g)?;
                Report::new()
                    .kv("sequence", c.to_string(), charseq_json(&c))
                    .kv("size", c.size().to_string(), json!(c.size()))
                    .kv("class_sequence", k.to_string(), charseq_json(&k))
            } else {
                let c = evolution_sequence(&g, &arg_qs(levels)?)?;
                Report::new()
                    .kv("sequence", c.to_string(), charseq_json(&c))
                    .kv("size", c.size().to_string(), json!(c.size()))
            }
        }
        Cmd::Conjugate { input, slopes, mode } => {
            let (s, mut a) = markov_input(&read_input(input)?, (*mode).into())?;
            if let Some(p) = slopes {
                a = parse_matrix(&read_input(p)?)?;
            }
            let single = (0..a.len()).any(|j| a.iter().filter(|r| r[j] != Q::from_integer(0.into())).count() == 1);
            let c = if single { construct_conjugate_slope1(&s, &a)? } else { construct_conjugate(&s, &a)? };
            let mut rep = Report::new()
                .kv("index_map", s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "), json!(s))
                .kv("partition", qs_text(&c.partition), qs_json(&c.partition))
                .flag("in_g", c.in_g);
            if let Some(b) = c.square_expanding {
                rep = rep.flag("square_expanding", b);
            }
            rep.map("map", &c.t)
        }
        Cmd::Classify { input } => {
            let text = read_input(input)?;
            let star = if text.trim_start().starts_with("skeleton/1") {
                a_star(&index_map(&MarkovSkeleton::parse(&text)?)?)?
            } else {
                AStar::from_matrix(&parse_matrix(&text)?)
            };
            let c = classify(&star);
            Report::new().kv("class", class_text(&c), json!(class_text(&c)))
        }
        Cmd::Stationary { matrix, mode } => {
            let a = slope_matrix(&read_input(matrix)?, (*mode).into())?;
            let st = stationary(&a)?;
            let mut rep = Report::new().line("vector", qs_text(&st.vector), qs_json(&st.vector));
            rep.json.insert("class".into(), json!(class_text(&st.class)));
            if st.basis.len() > 1 {
                rep = rep.kv(
                    "basis",
                    st.basis.iter().map(|b| qs_text(b)).collect::<Vec<_>>().join(" | "),
                    json!(st.basis.iter().map(|b| qs_json(b)).collect::<Vec<_>>()),
                );
            }
            rep
        }
        Cmd::Plot { map, diagonal, iterate } => {
            let g = read_map(map)?;
            let opts = PlotOptions { diagonal: *diagonal, iterate: *iterate, segment_budget: budget, ..Default::default() };
            let mut r = Report::new();
            r.body = Some(render_svg(&g, &opts)?);
            r.json.insert("svg".into(), json!(r.body.clone()));
            r
        }
        Cmd::Random { seed, complexity } => Report::new().map("map", &random_g(*seed, *complexity)?),
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{}", e) } else { write!(err, "{}", e) };
            return code;
        }
    };
    let budget = cli.segment_budget.unwrap_or_else(|| {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_SEGMENT_BUDGET)
    });
    match execute(&cli, budget) {
        Ok(mut rep) => {
            if let (Some(path), Some(body)) = (&cli.output, rep.body.clone()) {
                rep.body = None;
                if let Err(e) = std::fs::write(path, body) {
                    let _ = writeln!(err, "error: {}: {}", path, e);
                    return 2;
                }
                rep.document = false;
                rep = rep.kv("written", path.clone(), json!(path));
            }
            let _ = out.write_all(rep.render(cli.format).as_bytes());
            0
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {}", m);
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {}", e);
            1
        }
    }
}
