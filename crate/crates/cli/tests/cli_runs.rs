//! End-to-end runs of the binary: generation round-trips, the full
//! preconditioner roster, report determinism, exit codes, and analysis
//! output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_copre"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_status(out: &Output, expected: i32) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn read_floats(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('%'))
        .skip_while(|l| l.split_whitespace().count() > 1)
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

/// Generates a manufactured 1D problem, solves it unpreconditioned, and
/// returns the max-norm gap to the recorded analytic solution.
fn manufactured_gap(dir: &Path, cells: &str, prefix: &str) -> f64 {
    let out = run(
        &[
            "generate", "--dim", "1", "--cells", cells, "--unit-box", "--manufactured",
            "--out", prefix,
        ],
        dir,
    );
    assert_status(&out, 0);
    for suffix in [".mtx", ".rhs", ".spec.json", ".exact"] {
        assert!(dir.join(format!("{prefix}{suffix}")).exists(), "missing {suffix}");
    }

    let n: u64 = cells.parse().unwrap();
    let report = format!("{prefix}.json");
    let solution = format!("{prefix}.vec");
    let out = run(
        &[
            "solve", "--matrix", &format!("{prefix}.mtx"), "--rhs", &format!("{prefix}.rhs"),
            "--precond", "none", "--report", &report, "--solution", &solution,
        ],
        dir,
    );
    assert_status(&out, 0);

    // Conjugate gradients on an n-dimensional SPD system terminates within n
    // steps; the tridiagonal's n distinct eigenvalues make the cap tight.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(report)).unwrap()).unwrap();
    assert_eq!(report["solve"]["converged"], serde_json::Value::Bool(true));
    assert!(report["solve"]["iterations"].as_u64().unwrap() <= n);

    let x = read_floats(&dir.join(solution));
    let exact = read_floats(&dir.join(format!("{prefix}.exact")));
    assert_eq!(x.len(), exact.len());
    x.iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
}

#[test]
fn manufactured_solutions_converge_at_second_order() {
    let dir = tempfile::tempdir().unwrap();
    // The solver tolerance (1e-10) sits far below the discretization gap, so
    // the measured gap is the scheme's own error and must shrink as h^2.
    let coarse = manufactured_gap(dir.path(), "100", "rod100");
    let fine = manufactured_gap(dir.path(), "201", "rod201");
    assert!(coarse < 2e-4, "coarse-grid gap {coarse} is not O(h^2)-sized");
    let ratio = coarse / fine;
    assert!(
        (3.0..5.0).contains(&ratio),
        "halving h scaled the gap by {ratio}, expected about 4"
    );
}

#[test]
fn every_roster_entry_is_constructible_from_flags_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "generate",
            "--dim",
            "2",
            "--cells",
            "12",
            "--field",
            "checkerboard:1,1e4",
            "--out",
            "cb",
        ],
        dir.path(),
    );
    assert_status(&out, 0);

    for precond in [
        "none",
        "ilu0",
        "iluk",
        "amg-gs",
        "amg-ilu0",
        "combined",
        "additive",
        "wrong-order",
    ] {
        let report = format!("{precond}.json");
        let out = run(
            &[
                "solve",
                "--matrix",
                "cb.mtx",
                "--rhs",
                "cb.rhs",
                "--precond",
                precond,
                "--report",
                &report,
            ],
            dir.path(),
        );
        assert_status(&out, 0);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(report)).unwrap())
                .unwrap();
        assert_eq!(report["config"]["precond"], precond);
        assert_eq!(report["solve"]["converged"], serde_json::Value::Bool(true));
        let uses_amg = precond.starts_with("amg")
            || matches!(precond, "combined" | "additive" | "wrong-order");
        assert_eq!(report["hierarchy"].is_object(), uses_amg, "{precond}");
        // Standalone settings default to two cycles, combinations to one.
        let combination = matches!(precond, "combined" | "additive" | "wrong-order");
        let expected_cycles = if combination { 1 } else { 2 };
        assert_eq!(
            report["config"]["amg_cycles"].as_u64().unwrap(),
            expected_cycles,
            "{precond}"
        );
    }
}

#[test]
fn identical_runs_write_identical_reports_except_timing() {
    let dir = tempfile::tempdir().unwrap();
    assert_status(
        &run(
            &["generate", "--dim", "2", "--cells", "10", "--field", "lognormal:1.5", "--seed", "9", "--out", "p"],
            dir.path(),
        ),
        0,
    );
    for report in ["a.json", "b.json"] {
        assert_status(
            &run(
                &[
                    "solve", "--matrix", "p.mtx", "--rhs", "p.rhs", "--precond", "combined",
                    "--report", report,
                ],
                dir.path(),
            ),
            0,
        );
    }
    let strip_timing = |path: PathBuf| -> String {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("_seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_timing(dir.path().join("a.json")),
        strip_timing(dir.path().join("b.json")),
        "reports differ beyond the timing fields"
    );
}

#[test]
fn exit_codes_separate_usage_convergence_and_breakdown() {
    let dir = tempfile::tempdir().unwrap();

    // Missing input file.
    let out = run(&["solve", "--matrix", "nope.mtx"], dir.path());
    assert_status(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.mtx"));

    // Unknown flag value.
    assert_status(&run(&["solve", "--matrix", "x", "--precond", "magic"], dir.path()), 1);

    // Out of iterations: exit 2, and the report is still written.
    assert_status(
        &run(
            &["generate", "--dim", "2", "--cells", "14", "--out", "p"],
            dir.path(),
        ),
        0,
    );
    let out = run(
        &[
            "solve", "--matrix", "p.mtx", "--precond", "none", "--maxit", "3",
            "--report", "stalled.json",
        ],
        dir.path(),
    );
    assert_status(&out, 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stalled.json")).unwrap())
            .unwrap();
    assert_eq!(report["solve"]["converged"], serde_json::Value::Bool(false));
    assert_eq!(report["solve"]["iterations"].as_u64(), Some(3));

    // Factorization breakdown on a symmetric indefinite matrix: exit 3.
    std::fs::write(
        dir.path().join("indef.mtx"),
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n2 1 2.0\n2 2 1.0\n",
    )
    .unwrap();
    let out = run(
        &["solve", "--matrix", "indef.mtx", "--precond", "ilu0"],
        dir.path(),
    );
    assert_status(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("breakdown"));
}

#[test]
fn analyze_reports_the_certificate_and_finds_the_recorded_witness() {
    let dir = tempfile::tempdir().unwrap();
    assert_status(
        &run(
            &[
                "generate", "--dim", "2", "--cells", "12", "--field", "checkerboard:1,1e4",
                "--out", "cb",
            ],
            dir.path(),
        ),
        0,
    );
    let out = run(
        &[
            "analyze", "--matrix", "cb.mtx", "--scan", "2,4,8,16", "--report", "analysis.json",
        ],
        dir.path(),
    );
    assert_status(&out, 0);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("analysis.json")).unwrap())
            .unwrap();
    let cert = &report["certificate"];
    assert_eq!(cert["smoother_non_expansive"], serde_json::Value::Bool(true));
    assert!(cert["rho"].as_f64().unwrap() < 1.0);
    let kappa = cert["kappa_combined"].as_f64().unwrap();
    let bound = cert["kappa_bound"].as_f64().unwrap();
    assert!(kappa <= bound + 1e-8, "kappa {kappa} above bound {bound}");

    // Recorded outcome for this problem: the reversed combination first goes
    // indefinite at scale 4.
    let witness = &report["witness"];
    assert_eq!(witness["sigma"].as_f64(), Some(4.0));
    assert_eq!(witness["report"]["spd"], serde_json::Value::Bool(false));
    assert!(witness["report"]["lambda_min"].as_f64().unwrap() < 0.0);
}
