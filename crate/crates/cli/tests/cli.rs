#[path = "../../core/tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;

use std::path::Path;
use std::process::{Command, Output};

use gridswitch_core::fixtures::{single_feeder_block, six_block};
use gridswitch_core::objective::ComponentDocument;
use gridswitch_core::quadratize::AuxSidecar;
use gridswitch_core::{
    brute_force_min, parse_qubo, Assignment, Block, BlockId, Feeder, Grid, GridDocument,
    HuboDocument, Poly,
};

fn gridswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridswitch"))
        .args(args)
        .output()
        .unwrap()
}

fn write_grid(dir: &Path, name: &str, g: &Grid) -> String {
    let p = dir.join(name);
    std::fs::write(&p, g.to_json()).unwrap();
    p.display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn hubo(dir: &Path, component: &str) -> Poly {
    let text = std::fs::read_to_string(dir.join(format!("hubo_{component}.json"))).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["component"], component);
    let doc = HuboDocument {
        offset: v["offset"].as_f64().unwrap(),
        terms: serde_json::from_value(v["terms"].clone()).unwrap(),
    };
    Poly::from_hubo(&doc)
}

#[test]
fn build_six_block_radial_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let out = tmp.path().join("b");
    let o = gridswitch(&[
        "build",
        "--grid",
        &grid,
        "--c-penalty",
        "5",
        "--L",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bit 0: q1_2"));
    let radial = hubo(&out, "radial");
    let labels: Vec<Vec<usize>> = radial
        .terms()
        .map(|(m, _)| m.vars().iter().map(|v| v.0).collect())
        .collect();
    // q2_3 q3_6 and q2_5 q5_6
    assert_eq!(labels, vec![vec![2, 4], vec![3, 6]]);
    assert!(radial.terms().all(|(_, c)| c == 5.0));
    let doc: ComponentDocument =
        serde_json::from_str(&std::fs::read_to_string(out.join("hubo_total.json")).unwrap())
            .unwrap();
    assert_eq!(doc.exponent_l, 2);
}

#[test]
fn build_single_block_is_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &single_feeder_block());
    let out = tmp.path().join("b");
    assert!(gridswitch(&["build", "--grid", &grid, "--out", s(&out)])
        .status
        .success());
    let total = hubo(&out, "total");
    assert_eq!(total.degree(), 0);
    assert!(total.constant_term() > 0.0);
}

#[test]
fn built_qubo_has_the_hubo_minimum() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let out = tmp.path().join("b");
    assert!(
        gridswitch(&["build", "--grid", &grid, "--quadratize", "--out", s(&out)])
            .status
            .success()
    );
    let text = std::fs::read_to_string(out.join("model.qubo")).unwrap();
    let sidecar: AuxSidecar =
        serde_json::from_str(&std::fs::read_to_string(out.join("model.aux.json")).unwrap())
            .unwrap();
    let model = parse_qubo(&text, &sidecar).unwrap();
    let hubo_min = brute_force_min(&hubo(&out, "total"), 7).unwrap().best_value;
    // exact minimum over all 26 variables: every original assignment, then the auxiliaries
    let qubo_min = (0..1u64 << 7)
        .map(|i| oracle::min_over_aux(&model, &Assignment::from_index(i, 7)))
        .fold(f64::INFINITY, f64::min);
    assert!((hubo_min - qubo_min).abs() <= 1e-9 * hubo_min.abs());
}

#[test]
fn solve_brute_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let run = |tag: &str| {
        let out = tmp.path().join(tag);
        let o = gridswitch(&[
            "solve",
            "--grid",
            &grid,
            "--method",
            "brute",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("solve_report.json")).unwrap())
                .unwrap();
        (
            stdout(&o),
            report["best_bits"].clone(),
            report["best_value"].clone(),
        )
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a.0.contains("physical: "));
    assert!(a.0.contains("paper: "));
}

#[test]
fn solve_sa_reports_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let run = |tag: &str| {
        let out = tmp.path().join(tag);
        let args = [
            "solve",
            "--grid",
            &grid,
            "--method",
            "sa-hubo",
            "--seed",
            "42",
            "--restarts",
            "10",
            "--out",
            s(&out),
        ];
        assert!(gridswitch(&args).status.success());
        let text = std::fs::read_to_string(out.join("solve_report.json")).unwrap();
        text.lines()
            .filter(|l| !l.contains("elapsed_seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let o = gridswitch(&[
        "validate", "--grid", &grid, "--bits", "0100111", "--mode", "physical",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = gridswitch(&[
        "validate", "--grid", &grid, "--bits", "0100111", "--mode", "paper",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).matches("MAXCONN_TERM blocks").count(), 3);
    let o = gridswitch(&["validate", "--grid", &grid, "--bits", "0000000"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    for b in ["[1]", "[3]", "[4]", "[5]"] {
        assert!(text.contains(&format!("BLACKOUT blocks {b}")), "{text}");
    }
    assert!(text.contains("paper mode"));
    let o = gridswitch(&["validate", "--grid", &grid, "--bits", "01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bits"));
    let o = gridswitch(&["validate", "--grid", &grid, "--bits", "01x0111"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumerate_writes_sorted_table() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let out = tmp.path().join("t.csv");
    let o = gridswitch(&[
        "enumerate",
        "--grid",
        &grid,
        "--mode",
        "physical",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("scanned 128"));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bits,loss"));
    let losses: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!losses.is_empty());
    assert!(losses.windows(2).all(|w| w[0] <= w[1]));
    let again = tmp.path().join("t2.csv");
    gridswitch(&[
        "enumerate",
        "--grid",
        &grid,
        "--mode",
        "physical",
        "--out",
        s(&again),
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn enumerate_infeasible_grid_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = six_block().to_document();
    for b in &mut doc.blocks {
        b.max_current = 1.0;
    }
    let grid = write_grid(tmp.path(), "g.json", &Grid::from_document(doc).unwrap());
    let out = tmp.path().join("t.csv");
    let o = gridswitch(&[
        "enumerate",
        "--grid",
        &grid,
        "--mode",
        "physical",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "bits,loss\n");
}

#[test]
fn input_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    let mut doc = six_block().to_document();
    doc.blocks[2].resistance = -1.0;
    std::fs::write(&bad, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = tmp.path().join("b");
    let o = gridswitch(&["build", "--grid", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resistance"), "{}", stderr(&o));

    std::fs::write(
        &bad,
        r#"{"blocks":[{"id":1,"load_current":1}],"feeders":[],"switches":[]}"#,
    )
    .unwrap();
    let o = gridswitch(&["build", "--grid", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resistance"), "{}", stderr(&o));

    let grid = write_grid(tmp.path(), "g.json", &six_block());
    let o = gridswitch(&["build", "--grid", &grid, "--L", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--L"));
    let o = gridswitch(&[
        "solve",
        "--grid",
        &grid,
        "--method",
        "sa-hubo",
        "--t0",
        "0.001",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = gridswitch(&[
        "build",
        "--grid",
        s(&tmp.path().join("missing.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--grid"));
}

#[test]
fn brute_force_guard_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocks = 8u32;
    let doc = GridDocument {
        blocks: (1..=blocks)
            .map(|id| Block {
                id: BlockId(id),
                load_current: 1.0,
                resistance: 0.1,
                max_current: 100.0,
                max_voltage: 200.0,
                max_cum_drop: 50.0,
            })
            .collect(),
        feeders: vec![Feeder {
            block: BlockId(1),
            voltage: 100.0,
        }],
        switches: (1..=blocks)
            .flat_map(|a| ((a + 1)..=blocks).map(move |b| [a, b]))
            .take(25)
            .collect(),
        reference_voltage: None,
    };
    let g = Grid::from_document(doc).unwrap();
    assert_eq!(g.n_vars(), 25);
    let grid = write_grid(tmp.path(), "big.json", &g);
    let out = tmp.path().join("s");
    let o = gridswitch(&[
        "solve",
        "--grid",
        &grid,
        "--method",
        "brute",
        "--c-penalty",
        "1",
        "--L",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = gridswitch(&[
        "enumerate",
        "--grid",
        &grid,
        "--mode",
        "physical",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}
