use std::fs;
use std::path::{Path, PathBuf};

use dyadic_maps::cli::run;
use dyadic_maps::prelude::*;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn dyadic(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("dyadic").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TENT: &str = "pamap/1\n0 0\n1/2 1\n1 0\n";

const SLOPES: &str = "\
2^-1 2^-1 0 0 0 0
0 0 2^-1 2^-1 2^-1 2^-1
0 0 0 0 0 2^-2
0 0 0 0 0 2^-3
0 2^-1 2^-1 2^-1 2^-1 2^-3
2^-1 0 0 0 0 0
";

#[test]
fn check_tent() {
    let d = TempDir::new().unwrap();
    let t = write(&d, "tent.pamap", TENT);
    let r = dyadic(&["check", s(&t)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("in_g: true"));
    assert!(r.out.contains("in_f: false"));
    assert!(r.out.contains("type2: 1"));
}

#[test]
fn periods_of_the_family() {
    let d = TempDir::new().unwrap();
    let g = PAMap::period_family(&q(1, 32)).unwrap();
    let p = write(&d, "g.pamap", &g.to_pamap_string());
    let r = dyadic(&["periods", s(&p), "--nmax", "7", "--only", "3,5,7"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.lines().next().unwrap(), "3: none; 5: present; 7: present");

    let r = dyadic(&["periods", s(&p), "--nmax", "7", "--only", "9"]);
    assert_eq!(r.code, 2);
}

#[test]
fn stationary_vector() {
    let d = TempDir::new().unwrap();
    let m = write(&d, "a.txt", SLOPES);
    let r = dyadic(&["stationary", s(&m)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.trim(), "1/4 1/4 1/32 1/64 21/64 1/8");

    let r = dyadic(&["--format", "structured", "stationary", s(&m)]);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["class"], "irreducible");
    assert_eq!(v["vector"][4], "21/64");
}

#[test]
fn conjugate_from_matrix() {
    let d = TempDir::new().unwrap();
    let m = write(&d, "a.txt", SLOPES);
    let out = d.path().join("t.pamap");
    let r = dyadic(&["conjugate", s(&m), "-o", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("in_g: true"));
    let t = parse_pamap(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(is_in_g(&t));
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let bad = write(&d, "bad.pamap", "pamap/1\n0 0\n# note\n1/2 x\n1 1\n");
    let r = dyadic(&["check", s(&bad)]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("line 4"), "{}", r.err);

    let r = dyadic(&["check", s(&d.path().join("missing.pamap"))]);
    assert_eq!(r.code, 2);

    assert_eq!(dyadic(&["no-such-command"]).code, 2);
    assert_eq!(dyadic(&["--help"]).code, 0);

    let r = dyadic(&["matching", "--alpha", "1/2,1/2", "--beta", "3/4,1/4"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("infeasible"));
}

#[test]
fn map_round_trips() {
    let d = TempDir::new().unwrap();
    let g = random_g(11, 3).unwrap();
    let p = write(&d, "g.pamap", &g.to_pamap_string());

    // `#` pairs precede the document, so stdout parses as a map.
    let r = dyadic(&["compose", s(&p), s(&p)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(parse_pamap(&r.out).unwrap(), compose(&g, &g));

    let w = d.path().join("g.word");
    let r = dyadic(&["decompose", s(&p), "-o", s(&w)]);
    assert_eq!(r.code, 0, "{}", r.err);
    let r = dyadic(&["recompose", s(&w)]);
    assert_eq!(parse_pamap(&r.out).unwrap(), g);

    let r = dyadic(&["markov", s(&p)]);
    assert!(MarkovSkeleton::parse(&r.out).is_ok(), "{}", r.out);
}

#[test]
fn approximation_commands() {
    let d = TempDir::new().unwrap();
    let t = write(&d, "tent.pamap", TENT);
    let r = dyadic(&["--format", "structured", "target-entropy", s(&t), "--c", "2", "--eps", "1/4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    let e = parse_q(v["entropy"].as_str().unwrap()).unwrap();
    assert!(abs(&(e - qi(2))) < q(1, 4));
    let g = parse_pamap(v["map"].as_str().unwrap()).unwrap();
    assert!(is_leo(&g).unwrap());

    let id = write(&d, "id.pamap", "pamap/1\n0 0\n1 1\n");
    let r = dyadic(&["mixing", s(&id)]);
    assert_eq!(r.out, "tm: false\nleo: false\n");
    let r = dyadic(&["leoize", s(&id), "--eps", "1/4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("# leo: true"));
}

#[test]
fn equivalence_and_sequences() {
    let d = TempDir::new().unwrap();
    let a = dyadic(&["window", "--interval", "1/2,1", "--exponents", "1,1"]);
    let b = dyadic(&["window", "--interval", "1/4,1", "--exponents", "1,1"]);
    let pa = write(&d, "a.pamap", &a.out);
    let pb = write(&d, "b.pamap", &b.out);
    let r = dyadic(&["eqclass", s(&pa), s(&pb)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("same_class: true\n"));

    let r = dyadic(&["charseq", s(&pa)]);
    assert!(r.out.contains("sequence: +«1,2,2»"), "{}", r.out);
}

#[test]
fn svg_is_deterministic() {
    let d = TempDir::new().unwrap();
    let t = write(&d, "tent.pamap", TENT);
    let a = dyadic(&["plot", s(&t), "--diagonal", "--iterate", "2"]);
    let b = dyadic(&["plot", s(&t), "--diagonal", "--iterate", "2"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.out, b.out);
    assert!(a.out.starts_with("<svg"));
    assert_eq!(a.out.matches("<polyline").count(), 2);
}

#[test]
fn random_maps_are_reproducible() {
    let a = dyadic(&["random", "--seed", "4", "--complexity", "2"]);
    let b = dyadic(&["random", "--seed", "4", "--complexity", "2"]);
    assert_eq!(a.out, b.out);
    assert!(is_in_g(&parse_pamap(&a.out).unwrap()));
}
