//! End-to-end runs of the `aopt` binary and its file formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aopt::cli::files::{load_problem, InstanceFile, SolveReport};
use aopt::cli::trace::{read_trace, trace_to_string};
use aopt::instances::gen_random;
use aopt::{solve, Algorithm, DesignProblem, SolverConfig};
use nalgebra::DMatrix;
use tempfile::tempdir;

fn aopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = aopt(args);
    assert!(
        out.status.success(),
        "aopt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn zero_target_file(dir: &Path) -> String {
    let p = DesignProblem::new(
        DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]),
        DMatrix::zeros(2, 1),
        DMatrix::identity(2, 2),
        0.01,
    )
    .unwrap();
    let path = dir.join("zero.json");
    fs::write(
        &path,
        InstanceFile::from_problem(&p, "test").to_json().unwrap(),
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn quadreg_dimensions() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("q.json");
    ok(&[
        "gen",
        "quadreg",
        "--d",
        "2",
        "--grid",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    let p = load_problem(&path).unwrap();
    assert_eq!((p.m(), p.n()), (9, 6));
}

#[test]
fn random_generation_is_byte_identical_and_round_trips() {
    let a = ok(&["gen", "random", "--m", "12", "--n", "3", "--seed", "5"]).stdout;
    let b = ok(&["gen", "random", "--m", "12", "--n", "3", "--seed", "5"]).stdout;
    assert_eq!(a, b);
    let file: InstanceFile = serde_json::from_slice(&a).unwrap();
    let p = file.to_problem().unwrap();
    let direct = gen_random(12, 3, 5).unwrap();
    assert_eq!(p.a(), direct.a());
    assert_eq!(p.k(), direct.k());
    assert_eq!(p.sigma(), direct.sigma());
    assert_eq!(p.sigma2n(), direct.sigma2n());
}

#[test]
fn zero_target_solve_writes_one_row() {
    let dir = tempdir().unwrap();
    let inst = zero_target_file(dir.path());
    let trace = dir.path().join("t.csv");
    let out = ok(&[
        "solve",
        "--instance",
        &inst,
        "--algo",
        "fista",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let report: SolveReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.phi, 0.0);
    assert!(report.converged);
    let t = read_trace(fs::File::open(&trace).unwrap()).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.records[0].objective, 0.0);
}

#[test]
fn trace_csv_reload_is_lossless() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let trace = dir.path().join("t.csv");
    ok(&[
        "gen",
        "random",
        "--m",
        "15",
        "--n",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ]);
    ok(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--algo",
        "abcd-rp",
        "--max-iter",
        "40",
        "--seed",
        "3",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&trace).unwrap();
    let t = read_trace(text.as_bytes()).unwrap();
    assert_eq!(trace_to_string(&t).unwrap(), text);

    let p = load_problem(&inst).unwrap();
    let cfg = SolverConfig::new(Algorithm::AbcdRandPerm)
        .with_max_iter(40)
        .with_seed(3);
    assert_eq!(solve(&p, &cfg).unwrap().trace, t);
}

#[test]
fn zero_target_bench_is_flat() {
    let dir = tempdir().unwrap();
    let inst = zero_target_file(dir.path());
    let out = dir.path().join("runs");
    ok(&[
        "bench",
        "--instance",
        &inst,
        "--iters",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    for alg in Algorithm::ALL {
        let t = read_trace(fs::File::open(out.join(format!("{alg}.csv"))).unwrap()).unwrap();
        assert!(t.records.iter().all(|r| r.objective == 0.0), "{alg}");
    }
}

#[test]
fn bench_outputs() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let out = dir.path().join("runs");
    ok(&[
        "gen",
        "random",
        "--m",
        "20",
        "--n",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ]);
    ok(&[
        "bench",
        "--instance",
        inst.to_str().unwrap(),
        "--iters",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["rho"].as_f64().unwrap() > 0.0);
    let svg = fs::read_to_string(out.join("efficiency.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let legend = &svg[svg.find("class=\"legend\"").expect("legend")..];
    for alg in Algorithm::ALL {
        assert!(legend.contains(alg.as_str()), "{alg} missing from legend");
    }
}

#[test]
fn bad_arguments_fail() {
    let dir = tempdir().unwrap();
    let inst = zero_target_file(dir.path());
    let out = aopt(&["solve", "--instance", &inst, "--algo", "newton"]);
    assert!(!out.status.success());
    let out = aopt(&["gen", "random", "--m", "0", "--n", "3"]);
    assert!(!out.status.success());
    let out = aopt(&["solve", "--instance", "/nonexistent.json", "--algo", "fb"]);
    assert!(!out.status.success());
}
