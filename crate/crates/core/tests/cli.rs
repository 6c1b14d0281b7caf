use std::path::Path;
use std::process::{Command, Output};

fn fracvisco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracvisco"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = fracvisco(&[
            "--mode", "table", "--h-list", "2,4", "--dt-list", "4,8", "--reproducible",
            "--out", dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for norm in ["l2", "h1", "energy"] {
        let name = format!("example1_k1_table_{norm}.csv");
        assert_eq!(read(a.path(), &name), read(b.path(), &name));
    }
    let l2 = read(a.path(), "example1_k1_table_l2.csv");
    let body: Vec<&str> = l2.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["h,1/4,1/8", body[1], body[2]]);
    assert!(body[1].starts_with("1/2,") && body[2].starts_with("1/4,"));
    // Four significant digits with a two-digit exponent.
    let cell = body[1].split(',').nth(1).unwrap();
    assert_eq!(cell.len(), "4.823e-01".len(), "{cell}");
    assert!(l2.contains("# version = fracvisco"));
}

#[test]
fn config_errors_exit_with_status_one() {
    let out = fracvisco(&["--alpha", "1.2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    let out = fracvisco(&["--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_checks_exit_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = fracvisco(&["--mode", "spatial", "--h-list", "2,4", "--dt-list", "8", "--out", d, "--check"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn single_mode_dumps_mesh_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, snap) = (dir.path().join("mesh.txt"), dir.path().join("snap.txt"));
    let out = fracvisco(&[
        "--mode", "single", "--h-list", "2", "--dt-list", "4", "--degree", "2",
        "--out", dir.path().to_str().unwrap(),
        "--mesh-dump", mesh.to_str().unwrap(),
        "--dump", snap.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mesh = std::fs::read_to_string(mesh).unwrap();
    let first: Vec<usize> = mesh.lines().next().unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, [9, 8, 8]);
    assert_eq!(mesh.lines().count(), 1 + 9 + 8 + 8);

    let snap = std::fs::read_to_string(snap).unwrap();
    let lines: Vec<&str> = snap.lines().collect();
    assert_eq!(lines.len(), 5);
    // P2 on 2x2 cells: 25 scalar nodes, two components.
    for (n, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields[0], n.to_string());
        assert_eq!(fields[1].parse::<f64>().unwrap(), n as f64 / 4.0);
        assert_eq!(fields.len(), 2 + 50);
    }

    let csv = read(dir.path(), "example1_k2_single.csv");
    assert!(csv.contains("h,dt,err_l2,err_h1,err_energy,rate_l2,rate_h1,rate_energy,runtime_s"));
}

#[test]
fn diagonal_mode_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracvisco(&[
        "--mode", "diagonal", "--example", "example2", "--h-list", "2,4,8", "--reproducible",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = read(dir.path(), "example2_k1_diagonal.csv");
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[0], r[1], "dt = h along the diagonal");
        assert_eq!(r[8], "", "no timings in reproducible mode");
    }
    let dat = read(dir.path(), "example2_k1_diagonal_h1.dat");
    let points: Vec<(f64, f64)> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (h, e) = l.split_once(' ').unwrap();
            (h.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(points.len(), 3);
    for (p, r) in points.iter().zip(&rows) {
        assert_eq!(p.1, r[3].parse::<f64>().unwrap());
    }
}

#[test]
fn config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        format!(
            "mode = \"spatial\"\nh_list = [2, 4]\ndt_list = [8]\nreproducible = true\nout = \"{}\"\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let out = fracvisco(&["--config", cfg.to_str().unwrap(), "--degree", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "example1_k2_spatial.csv");
    assert!(csv.contains("# degree = 2"));
    assert!(csv.contains("# h_list = 2,4"));

    std::fs::write(&cfg, "mode = \"spatial\"\nunknown_key = 1\n").unwrap();
    let out = fracvisco(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
