use std::process::{Command, Output};

use mevp::basis::{gauss_rule, psi_table};

fn mevp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mevp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_passes_on_small_meshes() {
    let o = mevp(&["verify", "--elements", "1024", "--dg-stress", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("0 failed"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = mevp(&["verify", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    for args in [
        &["bench", "scale", "--iterations", "0"][..],
        &["bench", "scale", "--dg-stress", "5", "--elements", "4"],
        &["bench", "variants", "--map", "fly", "--elements", "4"],
        &["bench", "scale", "--layout", "diagonal"],
    ] {
        assert_eq!(mevp(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn tables_prints_the_linear_basis_and_two_point_rule() {
    let o = mevp(&["tables", "--dg-stress", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Gauss rule: 2 points per direction"));
    let lines: Vec<&str> = out.lines().collect();
    let start = lines.iter().position(|l| l.starts_with("PSI stress: 3 x 4")).unwrap();
    let table = psi_table(3, 2).unwrap();
    for j in 0..3 {
        let printed: Vec<f64> = lines[start + 1 + j]
            .split_whitespace()
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(printed.len(), 4);
        for (g, v) in printed.iter().enumerate() {
            assert!((v - table.get(j, g)).abs() < 1e-8);
        }
    }
    let rule = gauss_rule(2).unwrap();
    assert!(out.contains(&format!("{:?}", rule.points_1d())));
}

#[test]
fn bench_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scale.csv");
    let o = mevp(&[
        "bench", "scale", "--elements", "16,25", "--iterations", "2", "--threads", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("vortex,16,8,6,row,pre,parallel,2,f64,2,"));

    let o = mevp(&["bench", "variants", "--elements", "36", "--iterations", "1", "--precision", "f32"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 8);
}
