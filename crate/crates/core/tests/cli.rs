use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn carpetdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carpetdim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = carpetdim(&["validate", data("s1.carpet").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = carpetdim(&["validate", data("s1-broken.carpet").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("(H3)"));
}

#[test]
fn dim_prints_solution_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("sol.csv");
    let o = carpetdim(&["dim", data("s1.carpet").to_str().unwrap(), "--out", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let d: f64 = text.split("D=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((d - 1.4310189624616765).abs() < 1e-5);
    assert!(text.contains("t*=0.56926885"));
    let rec = std::fs::read_to_string(rec).unwrap();
    assert!(rec.starts_with("# carpetdim"));
    assert!(rec.contains("\nquantity,value\n"));
}

#[test]
fn measure_words() {
    let o = carpetdim(&["measure", data("s1.carpet").to_str().unwrap(), "--words", "1.2,2.1 1.1"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    let m: f64 = lines[0].split('\t').nth(1).unwrap().parse().unwrap();
    assert!((m - 0.5501230188244575 / 3.0).abs() < 1e-9);
}

#[test]
fn uniqueness_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("u.csv");
    let o = carpetdim(&["uniqueness", data("s1.carpet").to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("unique=true"));
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,P,dPdt,d2Pdt2,beta,rho");
    assert_eq!(rows.len(), 51);
    for r in &rows[1..] {
        let d2: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!(d2 < 0.0);
    }
}

#[test]
fn variational_level_two() {
    let o = carpetdim(&["variational", data("s1.carpet").to_str().unwrap(), "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value=1.43101896"));
}

#[test]
fn render_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let b = dir.path().join("b.csv");
    let o = carpetdim(&[
        "render",
        data("s1.carpet").to_str().unwrap(),
        "--depth",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--boundaries",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 26);
    assert!(text.contains("word,x0,y0,x1,y1\n"));
    let b = std::fs::read_to_string(b).unwrap();
    assert_eq!(b.lines().filter(|l| !l.starts_with('#')).count(), 1 + 25 * 32);
}

#[test]
fn boxcount_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_carpetdim"))
            .args(["boxcount", data("s1.carpet").to_str().unwrap(), "--samples", "20000", "--seed", "4"])
            .env("CARPETDIM_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("# seed=4"));
}

#[test]
fn sweep_is_deterministic() {
    let file = data("s1.carpet");
    let args = [
        "sweep",
        file.to_str().unwrap(),
        "--from",
        "0",
        "--to",
        "0.05",
        "--steps",
        "3",
        "--seed",
        "2",
        "--grid",
        "10",
    ];
    let a = carpetdim(&args);
    let b = carpetdim(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("epsilon,D,t_star,unique,mu_1.1,mu_1.2,mu_1.3,mu_2.1,mu_2.2\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",true") || l.contains(",true,")).count(), 3);
}

#[test]
fn error_exit_codes() {
    assert_eq!(carpetdim(&["dim", "/nonexistent/file.carpet"]).status.code(), Some(3));
    assert_eq!(carpetdim(&["frobnicate"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.carpet");
    std::fs::write(&junk, "carpet v1\nrow 1 b: banana\n").unwrap();
    assert_eq!(carpetdim(&["dim", junk.to_str().unwrap()]).status.code(), Some(3));
    let o = carpetdim(&["dim", data("s1-broken.carpet").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[hypothesis]"));
    assert_eq!(carpetdim(&["--version"]).status.code(), Some(0));
}

#[test]
fn in_process_run_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = carpetdim::cli::run(["carpetdim", "validate", data("s1.carpet").to_str().unwrap()], &mut out, &mut err);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().starts_with("PASS"));
}
