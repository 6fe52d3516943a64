use std::path::PathBuf;
use std::process::{Command, Output};

use strymgen_core::spec::parse_spec;

fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn strymgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strymgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_sum_has_one_for() {
    let o = strymgen(&["gen", path("benchmarks/sum.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let fors = text
        .lines()
        .filter(|l| l.trim_start().starts_with("for "))
        .count();
    assert_eq!(fors, 1, "{text}");
    assert!(stderr(&o).contains("scope_check: ok"));
    assert!(stderr(&o).contains("type_check: ok"));
}

#[test]
fn gen_filter_take_has_one_guarded_while() {
    let o = strymgen(&["gen", path("tests/data/filter_take.json").to_str().unwrap()]);
    assert!(o.status.success());
    let whiles: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| l.trim_start().starts_with("while "))
        .map(str::to_string)
        .collect();
    assert_eq!(whiles.len(), 1);
    assert!(
        whiles[0].contains("&&") && whiles[0].contains("!nr_"),
        "{}",
        whiles[0]
    );
}

#[test]
fn gen_out_writes_the_file() {
    let out = std::env::temp_dir().join(format!("strymgen-gen-{}.ir", std::process::id()));
    let o = strymgen(&[
        "gen",
        path("benchmarks/cart.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let ir = std::fs::read_to_string(&out).unwrap();
    std::fs::remove_file(&out).unwrap();
    assert!(strymgen_core::ir::parse_program(&ir).is_ok());
    assert!(stdout(&o).contains("alloc_scan: 0"));
}

#[test]
fn invalid_input_exits_2() {
    let o = strymgen(&["gen", path("tests/data/invalid.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("$.ops[0]"), "{}", stderr(&o));

    let o = strymgen(&["gen", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = strymgen(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_rejects_unbounded() {
    let f = std::env::temp_dir().join(format!("strymgen-iota-{}.json", std::process::id()));
    std::fs::write(&f, r#"{"source": {"iota": 0}, "reduce": "sum"}"#).unwrap();
    let lax = strymgen(&["gen", f.to_str().unwrap()]);
    let strict = strymgen(&["gen", f.to_str().unwrap(), "--strict"]);
    std::fs::remove_file(&f).unwrap();
    assert!(lax.status.success());
    assert!(stderr(&lax).contains("warning"));
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn check_dot_product() {
    let o = strymgen(&[
        "check",
        path("benchmarks/dotProduct.json").to_str().unwrap(),
        "--inputs",
        path("tests/data/dot_inputs.json").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("value 32"), "{}", stdout(&o));
}

#[test]
fn check_all_benchmarks_on_random_inputs() {
    for f in std::fs::read_dir(path("benchmarks")).unwrap() {
        let f = f.unwrap().path();
        let o = strymgen(&[
            "check",
            f.to_str().unwrap(),
            "--trials",
            "100",
            "--seed",
            "7",
            "--json",
        ]);
        assert!(o.status.success(), "{}: {}", f.display(), stderr(&o));
        let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(rows.as_array().unwrap().len(), 100);
    }
}

#[test]
fn mutated_program_fails_check() {
    let o = strymgen(&[
        "check",
        path("benchmarks/dotProduct.json").to_str().unwrap(),
        "--mutate",
        "--trials",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mismatch"), "{}", stderr(&o));
}

#[test]
fn benchmark_files_round_trip() {
    let mut n = 0;
    for f in std::fs::read_dir(path("benchmarks")).unwrap() {
        let text = std::fs::read_to_string(f.unwrap().path()).unwrap();
        let spec = parse_spec(&text).unwrap();
        assert_eq!(format!("{spec}\n"), text);
        assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
        n += 1;
    }
    assert_eq!(n, 10);
}

#[test]
fn bench_is_deterministic_and_serializes() {
    let args = [
        "bench", "sum", "cart", "--scale", "1000", "--seed", "42", "--json",
    ];
    let (a, b) = (strymgen(&args), strymgen(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(rows[1]["name"], "cart");
    assert_eq!(rows[1]["value"], rows[1]["oracle_value"]);

    let tsv = strymgen(&["bench", "dotProduct", "--scale", "1000"]);
    assert_eq!(stdout(&tsv).lines().count(), 2);
    assert_eq!(strymgen(&["bench", "nope"]).status.code(), Some(2));
}
