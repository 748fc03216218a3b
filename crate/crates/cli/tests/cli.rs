use std::process::{Command, Output};

use forge_core::design::Design;

fn forge(args: &[&str], seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_forge"));
    c.args(args).env_remove("FORGE_SEED");
    if let Some(s) = seed {
        c.env("FORGE_SEED", s);
    }
    c.output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(forge(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(forge(&["analyze"], None).status.code(), Some(2));
    assert_eq!(forge(&["analyze", "no-such-design"], None).status.code(), Some(2));
    assert_eq!(forge(&["verify-f4"], None).status.code(), Some(2));
    let o = forge(&["diversity", "alamouti", "--q", "2,2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn verification_failure_exits_1() {
    // Regular PAM on every symbol of a rate-2 design cannot give full diversity.
    let o = forge(&["diversity", "pavan-rate2-2x2", "--q", "2"], None);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn catalog_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = forge(&["catalog", "--out-dir", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let listing: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(listing.len(), forge_core::constructions::CATALOG_NAMES.len());
    for entry in listing {
        let path = entry["path"].as_str().unwrap();
        let again = forge(&["generate", path], None);
        assert_eq!(again.status.code(), Some(0));
        assert_eq!(stdout(&again), std::fs::read_to_string(path).unwrap());
        Design::from_json(&stdout(&again)).unwrap();
    }
}

#[test]
fn recipe_file_generates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    std::fs::write(&p, r#"{"construction":"new_fgd","m":2,"rate":"5/4"}"#).unwrap();
    let o = forge(&["generate", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let d = Design::from_json(&stdout(&o)).unwrap();
    assert_eq!(d.k(), 10);
    let a = forge(&["analyze", p.to_str().unwrap(), "--regime", "reduced"], None);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["selected"]["expression"], "3M^1.5 + M^0.5");
    assert_eq!(v["selected"]["exponent"], "3/2");
}

#[test]
fn outputs_are_reproducible() {
    for args in [
        &["analyze", "fgd-17-8"][..],
        &["table1", "--format", "json"],
        &["qr-structure", "pavan-rate2-2x2", "--trials", "10"],
        &["build-constellation", "alamouti", "--q", "2"],
    ] {
        let a = forge(args, None);
        let b = forge(args, None);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn env_seed_changes_random_choices() {
    let args = ["build-constellation", "two-by-two-l1", "--q", "2"];
    let a = forge(&args, Some("5"));
    let b = forge(&args, Some("6"));
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    assert_ne!(a.stdout, b.stdout);
    let explicit = forge(&["build-constellation", "two-by-two-l1", "--q", "2", "--seed", "5"], Some("6"));
    assert_eq!(explicit.stdout, a.stdout);
    assert_eq!(forge(&args, Some("x")).status.code(), Some(2));
}

#[test]
fn table_markdown_and_csv() {
    let md = stdout(&forge(&["table1"], None));
    assert!(md.contains("| 4 | 17/8 | *3M^5.5 | *3M^5 |"));
    let csv = stdout(&forge(&["table1", "--format", "csv"], None));
    assert!(csv.lines().any(|l| l == "8,2,3M^10,3M^9.5,4M^10,*2M^8,*2M^7.5,"));
}

#[test]
fn verify_f4_and_decode_count() {
    let o = forge(&["verify-f4", "--m", "1"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equivalence"]["pairs"], 64);
    let o = forge(&["decode-count", "alamouti", "--m-size", "4", "--trials", "5", "--format", "csv"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("alamouti,4,5,8,16,8,5,true"));
}

#[test]
fn saved_constellation_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    let o = forge(&["build-constellation", "alamouti", "--q", "2", "--out", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let o = forge(&["diversity", "alamouti", "--constellation", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
}
