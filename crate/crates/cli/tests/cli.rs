use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polepid_core::robustness::read_grid_csv;
use polepid_core::PerformanceReport;
use serde_json::Value;

fn polepid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polepid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bench_list_has_nine_plants() {
    let o = polepid(&["bench", "list"]);
    assert_eq!(code(&o), 0);
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let ids: Vec<String> = rd.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(ids, (1..=9).map(|i| format!("G{i}")).collect::<Vec<_>>());
}

#[test]
fn bench_list_json() {
    let o = polepid(&["bench", "list", "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);
    assert_eq!(v[7]["delay_class"], "delay-dominant");
}

#[test]
fn unknown_plant_is_a_config_error() {
    let o = polepid(&["design", "--plant", "G0"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("G1..G9"), "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&polepid(&["--help"])), 0);
    assert_eq!(code(&polepid(&["--version"])), 0);
    assert_eq!(code(&polepid(&["--bogus"])), 2);
    assert_eq!(
        code(&polepid(&["metrics", "--plant", "G5", "--gains", "1,2"])),
        2
    );
    assert_eq!(
        code(&polepid(&[
            "metrics",
            "--plant",
            "G5",
            "--gains",
            "0.35,0.36,1.02",
            "--npade",
            "0"
        ])),
        2
    );
    // unstable loop: numeric failure
    assert_eq!(
        code(&polepid(&[
            "metrics", "--plant", "G5", "--gains", "10,10,10"
        ])),
        4
    );
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = polepid(&["--out", out, "design", "--plant", "G8", "--samples", "3"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn zero_samples_give_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = polepid(&[
        "--out",
        dir.path().to_str().unwrap(),
        "study",
        "table1",
        "--samples",
        "0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("table1.csv")).unwrap();
    let h = rd.headers().unwrap().clone();
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 27);
    for r in &rows {
        for c in ["s1", "s2", "s3", "s4", "max_count"] {
            let k = h.iter().position(|x| x == c).unwrap();
            assert_eq!(&r[k], "0");
        }
    }
}

#[test]
fn metrics_json_parses_back() {
    let o = polepid(&[
        "metrics",
        "--plant",
        "G5",
        "--gains",
        "0.3531,0.3623,1.0217",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let r: PerformanceReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.is_finite());
    assert_eq!(r.npade, 3);
    let csv_out = polepid(&[
        "metrics",
        "--plant",
        "G5",
        "--gains",
        "0.3531,0.3623,1.0217",
    ]);
    let mut rd = csv::Reader::from_reader(csv_out.stdout.as_slice());
    let back: PerformanceReport = rd.deserialize().next().unwrap().unwrap();
    assert_eq!(back, r);
}

#[test]
fn negative_gains_are_accepted() {
    let o = polepid(&[
        "metrics",
        "--plant",
        "G9",
        "--gains",
        "-0.2768,0.1922,0.7399",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn design_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = polepid(&[
            "--out",
            d.path().to_str().unwrap(),
            "design",
            "--plant",
            "G9",
            "--samples",
            "3000",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["region.csv", "centroid.json", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let s = read_json(&a.path().join("summary.json"));
    assert!(s["timings"]["explore_ms"].as_f64().unwrap() >= 0.0);
    let r: PerformanceReport =
        serde_json::from_str(&fs::read_to_string(a.path().join("report.json")).unwrap()).unwrap();
    assert!(r.is_finite());
}

#[test]
fn explore_then_centroid_matches_design() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let design = d.path().join("design");
    let o = polepid(&[
        "--out",
        design.to_str().unwrap(),
        "design",
        "--plant",
        "G5",
        "--samples",
        "3000",
    ]);
    assert_eq!(code(&o), 0);
    let c = read_json(&design.join("centroid.json"));
    let src = c["source"].as_str().unwrap().to_string();

    let o = polepid(&[
        "--out",
        out,
        "explore",
        "--plant",
        "G5",
        "--samples",
        "3000",
        "--source",
        &src,
        "--stable-only",
    ]);
    assert_eq!(code(&o), 0);
    let region = d.path().join("region.csv").to_str().unwrap().to_string();
    let o = polepid(&[
        "centroid", "--plant", "G5", "--input", &region, "--source", &src, "--ptype", "all-real",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["kp", "ki", "kd", "n_stable", "median_distance"] {
        assert_eq!(v[k], c[k], "{k}");
    }
}

#[test]
fn perturbation_outputs_parse() {
    let d = tempfile::tempdir().unwrap();
    let o = polepid(&[
        "--out",
        d.path().to_str().unwrap(),
        "perturb",
        "--plant",
        "G9",
        "--gains=-0.2768,0.1922,0.7399",
        "--count",
        "40",
        "--grid",
        "3",
        "--pair",
        "T,zeta_ol",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&d.path().join("perturb_summary.json"));
    assert_eq!(s["count"], 40);
    let rows = csv::Reader::from_path(d.path().join("perturb.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 40);
    let grid = read_grid_csv(fs::File::open(d.path().join("grid.csv")).unwrap()).unwrap();
    assert_eq!(grid.len(), 9);
    // the centre cell is the nominal plant
    assert!(grid[4].stable);
}

const TABLE2_CSV: &str = "\
plant,ptype,source,n_stable,median_distance,kp,ki,kd,max_real_part,verified
G1,all-real,S2,1,1.0,3.1883,0.7876,7.5194,-0.1,true
G2,all-real,S2,1,1.0,0.6856,0.6052,1.2991,-0.1,true
G3,all-real,S2,1,1.0,6.2367,0.7632,17.0616,-0.1,true
G4,all-real,S2,1,1.0,-0.0842,0.5029,1.5163,-0.1,true
G5,all-real,S2,1,1.0,0.3531,0.3623,1.0217,-0.1,true
G6,all-real,S2,1,1.0,2.4796,0.2550,7.9074,-0.1,true
G7,all-real,S2,1,1.0,-1.0152,0.3795,1.1933,-0.1,true
G8,all-real,S2,1,1.0,-0.2052,0.0199,1.3696,-0.1,true
G9,all-real,S2,1,1.0,-0.2768,0.1922,0.7399,-0.1,true
G9,mixed,,0,,,,,,false
";

#[test]
fn rules_fit_and_predict() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("table2.csv");
    fs::write(&input, TABLE2_CSV).unwrap();
    let out = d.path().join("fit");
    let o = polepid(&[
        "--out",
        out.to_str().unwrap(),
        "rules",
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--search",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(out.join("table4.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(&rows[1][0], "Ki");
    let adj: f64 = rows[1][4].parse().unwrap();
    assert!((adj - 0.9258).abs() < 5e-4, "{adj}");
    assert!(out.join("basis_search.csv").is_file());

    let fit = out.join("tuning_rule.json");
    let o = polepid(&[
        "rules",
        "predict",
        "--fit",
        fit.to_str().unwrap(),
        "--plant",
        "G5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(g["ki"].as_f64().unwrap().is_finite());
    let o = polepid(&[
        "rules",
        "predict",
        "--fit",
        fit.to_str().unwrap(),
        "--l-over-t",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn stats_kruskal_on_grouped_csv() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("g.csv");
    fs::write(&input, "group,kp\na,1\na,2\na,3\nb,4\nb,5\nb,6\n").unwrap();
    let o = polepid(&["stats", "kruskal", "--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["h"].as_f64().unwrap() - 27.0 / 7.0).abs() < 1e-12);
    assert_eq!(v["groups"], serde_json::json!(["a", "b"]));
    let o = polepid(&[
        "stats",
        "kruskal",
        "--input",
        input.to_str().unwrap(),
        "--column",
        "nope",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_writes_trace() {
    let o = polepid(&[
        "simulate",
        "--plant",
        "G5",
        "--gains",
        "0.3531,0.3623,1.0217",
        "--horizon",
        "40",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let y: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((y - 1.0).abs() < 1e-3, "final value {y}");
}

#[test]
fn json_model_file_is_accepted() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("plant.json");
    fs::write(&p, r#"{"K":1.0,"L":1.0,"T":1.0,"zeta_ol":1.0}"#).unwrap();
    let o = polepid(&[
        "metrics",
        "--plant",
        p.to_str().unwrap(),
        "--gains",
        "0.3531,0.3623,1.0217",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
