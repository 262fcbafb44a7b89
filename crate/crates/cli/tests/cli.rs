use std::path::Path;
use std::process::Command;

use nllc::field::Region;

fn nllc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nllc")).args(args).output().expect("spawn nllc")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const ZERO: &str = r#"
seed = 3
[kernel]
preset = "zero"
[domain]
cells = 8
radius = 1.0
[sweep]
eps = [0.5, 0.25]
[solver]
tol = 1e-10
"#;

#[test]
fn zero_kernel_minimize_returns_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ZERO);
    let out = dir.path().join("out");
    let o = nllc(&["minimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("minimize.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,method,iterations,residual,energy,margin,lipschitz,termination");
    for row in lines {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[7], "Converged");
        let energy: f64 = cols[4].parse().unwrap();
        assert!(energy.abs() < 1e-12, "{row}");
    }
    let f = std::fs::File::open(out.join("u_eps0p5.nllc")).unwrap();
    let u = nllc::field::read_field(&mut std::io::BufReader::new(f)).unwrap();
    assert_eq!(u.m, 2);
    for (c, r) in u.regions.iter().enumerate() {
        if *r == Region::Interior {
            assert!(u.values[c * u.m..(c + 1) * u.m].iter().all(|v| v.abs() < 1e-12));
        }
    }
}

#[test]
fn negative_eps_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &ZERO.replace("[0.5, 0.25]", "[0.5, -0.25]"));
    let o = nllc(&["minimize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sweep.eps"), "{err}");
    assert!(err.contains("error[config]"), "{err}");
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &ZERO.replace("radius = 1.0", "radius = 1.0\nwidth = 3"));
    let o = nllc(&["kernel-report", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("width") && err.contains("line 8"), "{err}");
}

#[test]
fn missing_config_flag_exits_with_config_status() {
    let o = nllc(&["kernel-report"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unresolved_kernel_is_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let body = ZERO.replace("preset = \"zero\"", "preset = \"gaussian\"\na = 1.0").replace("[0.5, 0.25]", "[0.01]");
    let cfg = write_config(dir.path(), &body);
    let o = nllc(&["minimize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain.cells"));
}

#[test]
fn numerical_failure_exits_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[kernel]
preset = "gaussian"
a = 1.0
mass = 8.0
[domain]
cells = 8
radius = 1.0
[boundary]
preset = "smooth"
slope = 0.6
[sweep]
eps = [0.5]
[solver]
max_iter = 1
tol = 1e-14
"#;
    let cfg = write_config(dir.path(), body);
    let o = nllc(&["minimize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    // artifacts are still written for inspection
    assert!(dir.path().join("minimize.csv").exists());
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
seed = 11
[kernel]
preset = "gaussian"
a = 1.0
mass = 8.0
[domain]
cells = 8
radius = 1.0
[boundary]
preset = "smooth"
slope = 0.6
[sweep]
eps = [0.5]
[solver]
tol = 1e-9
random_starts = 2
"#;
    let cfg = write_config(dir.path(), body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, w) in [(&a, "1"), (&b, "2")] {
        let o = Command::new(env!("CARGO_BIN_EXE_nllc"))
            .args(["minimize", "--config", &cfg, "--out", d.to_str().unwrap()])
            .env("NLLC_WORKERS", w)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["minimize.csv", "energy.csv", "history_eps0p5.csv", "u_eps0p5.nllc"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn report_subcommands_write_headed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let body = ZERO.replace("preset = \"zero\"", "preset = \"annulus\"\nr1 = 0.5\nr2 = 1.0");
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().to_str().unwrap();
    for sub in ["kernel-report", "potential-report"] {
        let o = nllc(&[sub, "--config", &cfg, "--out", out]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let k = std::fs::read_to_string(dir.path().join("kernel_report.txt")).unwrap();
    assert!(k.contains("annulus_r1 = ") && k.contains("published_flagged = true"));
    assert!(k.contains("shell_moment_lattice"));
    let prof = std::fs::read_to_string(dir.path().join("potential_profile.csv")).unwrap();
    assert!(prof.starts_with("r,psi_s,psi_b\n"));
    assert!(prof.lines().count() > 10);
}
