//! End-to-end tests of the binary: exit codes, determinism, and the file
//! format contracts.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::identity_params;
use mmcd::io::mxt::write_mxt;
use mmcd::model::{sample, DistributionSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmcd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_sample_mxt(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let stack = sample(&DistributionSpec::matrix_normal(identity_params(2, 3)), n, seed).unwrap();
    let path = dir.join("input.mxt");
    std::fs::write(&path, write_mxt(&stack)).unwrap();
    path
}

#[test]
fn fit_is_byte_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_mxt(dir.path(), 40, 5);
    let out1 = dir.path().join("fit1.json");
    let out2 = dir.path().join("fit2.json");
    for out in [&out1, &out2] {
        let status = run(&[
            "fit",
            input.to_str().unwrap(),
            "--m",
            "40",
            "--seed",
            "7",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "fit output not byte-identical across runs");

    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    // Default subset size is the breakdown-maximizing one.
    let d = mmcd::aspect_ratio_floor(2, 3);
    assert_eq!(
        doc["h_subset"].as_array().unwrap().len(),
        (40 + d + 2) / 2
    );
    assert_eq!(doc["config"]["seed"], 7);
}

#[test]
fn infeasible_subset_sizes_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // n = 3 < d + 2 = 4 for 2x3 observations.
    let input = write_sample_mxt(dir.path(), 3, 5);
    let out = run(&["fit", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let input = write_sample_mxt(dir.path(), 30, 5);
    let out = run(&["fit", input.to_str().unwrap(), "--h", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn parse_failures_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.mxt");
    std::fs::write(&path, "#mxt v1 n=1 p=2 q=2\n1.0 2.0\n3.0 nope\n").unwrap();
    let out = run(&["fit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr was: {stderr}");
}

#[test]
fn detect_emits_constant_cutoff_and_unflagged_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_mxt(dir.path(), 40, 9);
    let fit_path = dir.path().join("fit.json");
    assert!(run(&[
        "fit",
        input.to_str().unwrap(),
        "--m",
        "40",
        "--seed",
        "3",
        "-o",
        fit_path.to_str().unwrap(),
    ])
    .status
    .success());

    // Append the fitted mean as one more observation; it can never be
    // flagged.
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fit_path).unwrap()).unwrap();
    let mean = &doc["reweighted"]["mean"];
    let stack = mmcd::io::mxt::parse_mxt(&std::fs::read_to_string(&input).unwrap()).unwrap();
    let mut data = stack.matrices().to_vec();
    data.push(nalgebra::DMatrix::from_fn(2, 3, |i, j| {
        mean[i][j].as_f64().unwrap()
    }));
    let with_mean = mmcd::stack::MatrixStack::new(data).unwrap();
    std::fs::write(&input, write_mxt(&with_mean)).unwrap();

    let csv_path = dir.path().join("detect.csv");
    let out = run(&[
        "detect",
        input.to_str().unwrap(),
        "--fit",
        fit_path.to_str().unwrap(),
        "-o",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,mmd2,cutoff,flag");
    assert_eq!(lines.len(), 42);
    let expected_cutoff = mmcd::chi2::chi2_quantile(0.975, 6).unwrap();
    let mut cutoffs = std::collections::HashSet::new();
    for line in &lines[1..] {
        cutoffs.insert(line.split(',').nth(2).unwrap().to_string());
    }
    assert_eq!(cutoffs.len(), 1, "cutoff column must be constant");
    let parsed: f64 = cutoffs.iter().next().unwrap().parse().unwrap();
    assert_eq!(parsed, expected_cutoff);
    // The appended mean observation is the last row and is not flagged.
    assert!(lines[41].ends_with("false"));

    // Malformed fit file exits 2.
    let bad_fit = dir.path().join("bad.json");
    std::fs::write(&bad_fit, "{oops").unwrap();
    let out = run(&[
        "detect",
        input.to_str().unwrap(),
        "--fit",
        bad_fit.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn explain_levels_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_mxt(dir.path(), 30, 21);
    let fit_path = dir.path().join("fit.json");
    assert!(run(&[
        "fit",
        input.to_str().unwrap(),
        "--m",
        "30",
        "--seed",
        "4",
        "-o",
        fit_path.to_str().unwrap(),
    ])
    .status
    .success());

    let run_explain = |level: &str| -> Vec<String> {
        let out_path = dir.path().join(format!("explain_{level}.csv"));
        let out = run(&[
            "explain",
            input.to_str().unwrap(),
            "--fit",
            fit_path.to_str().unwrap(),
            "--level",
            level,
            "--index",
            "2",
            "-o",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(&out_path)
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    };

    let cell = run_explain("cell");
    let row = run_explain("row");
    let col = run_explain("col");

    // Cell level: p rows of q values plus the trailing comment.
    assert_eq!(cell.len(), 3);
    let cells: Vec<Vec<f64>> = cell[..2]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(cells[0].len(), 3);
    let comment = &cell[2];
    assert!(comment.starts_with("# total="));
    let total: f64 = comment
        .split("total=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();

    // Row level sums to the total within 1e-8 relative.
    let row_values: Vec<f64> = row[1..row.len() - 1]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(row_values.len(), 2);
    let row_sum: f64 = row_values.iter().sum();
    assert!((row_sum - total).abs() <= 1e-8 * (1.0 + total.abs()));

    // Column level equals the column sums of the cell level.
    let col_values: Vec<f64> = col[1..col.len() - 1]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(col_values.len(), 3);
    for (j, v) in col_values.iter().enumerate() {
        let s: f64 = cells.iter().map(|r| r[j]).sum();
        assert!((v - s).abs() <= 1e-10 * (1.0 + s.abs()));
    }

    // Out-of-range index exits 3.
    let out = run(&[
        "explain",
        input.to_str().unwrap(),
        "--fit",
        fit_path.to_str().unwrap(),
        "--level",
        "row",
        "--index",
        "99",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_runs_scenarios_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.cfg");
    // The reference shift setting at reduced trial count.
    std::fs::write(
        &scenario,
        "p = 5\nq = 20\nn = 100\nreps = 10\nseed = 5\nsigma_row = rnd\nsigma_col = mix:0.7\n\
         contamination = shift\nepsilon = 0.1\ngamma = 1\nm = 60\n",
    )
    .unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run(&[
        "simulate",
        scenario.to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
    // Header + 10 reps x 4 default estimators; all metric fields finite.
    assert_eq!(data_rows, 1 + 10 * 4);
    for line in text.lines().skip(1).filter(|l| !l.starts_with('#')) {
        for field in line.split(',').skip(3) {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite());
        }
    }
    assert!(text.contains("# summary estimator=mmcd_reweighted metric=recall"));

    // Unknown estimator exits 2 naming the offender.
    std::fs::write(
        &scenario,
        "p = 2\nq = 3\nn = 60\nreps = 1\nestimators = sorcery\n",
    )
    .unwrap();
    let out = run(&["simulate", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sorcery"));

    // Unknown key exits 2 naming the key.
    std::fs::write(&scenario, "p = 2\nq = 3\nn = 60\nreps = 1\nwarp = 9\n").unwrap();
    let out = run(&["simulate", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp"));
}

#[test]
fn csv_input_is_column_stacked() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("input.csv");
    // 20 observations of a 2x2 shape.
    let mut text = String::new();
    let stack = sample(&DistributionSpec::matrix_normal(identity_params(2, 2)), 20, 3).unwrap();
    for m in stack.iter() {
        let v = mmcd::stack::vec_column_stacked(m);
        let row: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&csv, &text).unwrap();

    // Missing shape flags exit 2.
    let out = run(&["fit", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let fit_path = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        csv.to_str().unwrap(),
        "--rows",
        "2",
        "--cols",
        "2",
        "--m",
        "20",
        "-o",
        fit_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert_eq!(doc["p"], 2);
    assert_eq!(doc["q"], 2);
}

#[test]
fn thread_cap_env_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_mxt(dir.path(), 40, 5);
    let out1 = dir.path().join("fit1.json");
    let out2 = dir.path().join("fit2.json");
    for (out, threads) in [(&out1, "1"), (&out2, "2")] {
        let status = bin()
            .env("MMCD_THREADS", threads)
            .args([
                "fit",
                input.to_str().unwrap(),
                "--m",
                "40",
                "--seed",
                "11",
                "-o",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(status.status.success());
    }
    // Same bytes regardless of the degree of parallelism.
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap()
    );
}
