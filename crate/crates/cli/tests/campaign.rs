use std::path::Path;

use standin::TestSet;
use standin_cli::campaign::{exit_status, prepare, run_wired};
use standin_cli::{emit_report, run_campaign, CampaignConfig, CampaignReport, Format, Mode, Status};

const XOR: &str = r#"
schema_version = 1
name = "xor"
seed = 7

[context]
kind = "function"
domain = "bit-pairs"
codomain = "ints:0:1"

[[tuples]]
name = "candidate"
systems = ["xor-wrong-11"]

[[tuples]]
name = "reference"
systems = ["xor"]

[property]
kind = "matches"
reference = "xor"

[generator]
strategy = "exhaustive"

[classifier]
kind = "by-value"

[audit]
requirements = ["monotonicity", "consistency", "union-compatibility", "accuracy-trend"]
trials = 100
sampler = "class-aligned"

[report]
sweep = [1, 2, 3, 4]
"#;

fn config(text: &str) -> CampaignConfig {
    CampaignConfig::parse(text).unwrap()
}

fn run(text: &str) -> CampaignReport {
    run_campaign(&config(text), Path::new("."), Mode::Run).unwrap()
}

fn one_tuple(text: &str) -> String {
    let start = text.find("[[tuples]]\nname = \"reference\"").unwrap();
    let end = start + text[start..].find("[property]").unwrap();
    format!("{}{}", &text[..start], &text[end..])
}

#[test]
fn xor_campaign_sections() {
    let r = run(XOR);
    assert_eq!(r.status, Status::Completed);
    assert_eq!(r.cases.len(), 4);
    let rep = r.replacement.as_ref().unwrap();
    assert!(!rep.holds && rep.conclusive);
    assert_eq!(rep.violations.len(), 1);
    assert_eq!(rep.violations[0].case.payload, standin::Value::ints([1, 1]));
    assert!(r.reverse_replacement.as_ref().unwrap().holds);
    assert!(!r.equivalence.as_ref().unwrap().equivalent);
    assert_eq!(r.tuples[0].score.as_ref().unwrap().point_estimate, Some(0.75));
    let audits = r.audits.as_ref().unwrap();
    for a in audits {
        // the first failure widens the interval: 3 of 3 passing is tighter than 3 of 4
        let expect = a.requirement != standin::metrics::Requirement::AccuracyTrend;
        assert_eq!(a.passed, expect, "{:?}", a);
    }
    assert_eq!(exit_status(&r, Mode::Run), 1);
    assert_eq!(exit_status(&r, Mode::Audit), 1);
}

#[test]
fn one_tuple_has_no_replacement_section() {
    let r = run(&one_tuple(XOR));
    assert_eq!(r.tuples.len(), 1);
    assert!(r.replacement.is_none() && r.equivalence.is_none());
    assert!(r.efficiency.is_some() && r.tuples[0].score.is_some());
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert!(json["replacement"].is_null());
    assert!(json["reverse_replacement"].is_null());
    assert!(json["equivalence"].is_null());
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let a = run(XOR).to_json().unwrap();
    let b = run(XOR).to_json().unwrap();
    assert_eq!(a, b);
    let back = CampaignReport::from_json(&a).unwrap();
    assert_eq!(back, run(XOR));
    assert_eq!(back.to_json().unwrap(), a);
}

const REPORT_KEYS: [&str; 14] = [
    "schema_version",
    "status",
    "error",
    "config",
    "test_set",
    "cases",
    "tuples",
    "efficiency",
    "replacement",
    "reverse_replacement",
    "equivalence",
    "audits",
    "plot",
    "timing",
];

#[test]
fn every_field_is_present() {
    let no_audit = XOR[..XOR.find("[audit]").unwrap()].to_string() + "[report]\n";
    for text in [XOR.to_string(), one_tuple(XOR), no_audit] {
        let json: serde_json::Value = serde_json::from_str(&run(&text).to_json().unwrap()).unwrap();
        let obj = json.as_object().unwrap();
        for k in REPORT_KEYS {
            assert!(obj.contains_key(k), "missing {k}");
        }
        assert_eq!(obj.len(), REPORT_KEYS.len());
        for tuple in json["tuples"].as_array().unwrap() {
            assert!(tuple.as_object().unwrap().contains_key("anomalies"));
        }
    }
}

#[test]
fn cases_appear_once_sorted() {
    let text = XOR.replace("strategy = \"exhaustive\"", "strategy = \"random\"\ncount = 40");
    let r = run(&text);
    assert_eq!(r.cases.len(), 40);
    let ids: Vec<&str> = r.cases.iter().map(|c| c.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(ids, sorted);
    // forty draws hit all four inputs, which makes the comparison exhaustive
    let distinct: std::collections::BTreeSet<_> = r.cases.iter().map(|c| &c.payload).collect();
    assert_eq!(distinct.len(), 4);
    assert!(r.replacement.as_ref().unwrap().conclusive);
    let two = run(&XOR.replace("strategy = \"exhaustive\"", "strategy = \"random\"\ncount = 2"));
    assert!(!two.replacement.unwrap().conclusive);
}

#[test]
fn seed_override_changes_random_sets() {
    let text = XOR.replace("strategy = \"exhaustive\"", "strategy = \"random\"\ncount = 12");
    let mut c = config(&text);
    let a = run_campaign(&c, Path::new("."), Mode::Run).unwrap();
    c.seed = 8;
    let b = run_campaign(&c, Path::new("."), Mode::Run).unwrap();
    let payloads = |r: &CampaignReport| r.cases.iter().map(|c| c.payload.clone()).collect::<Vec<_>>();
    assert_ne!(payloads(&a), payloads(&b));
    assert_eq!(b.config.seed, 8);
}

#[test]
fn csv_has_one_row_per_case() {
    let r = run(XOR);
    let csv = r.to_csv().unwrap();
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["id", "class", "candidate.verdict", "candidate.ticks", "reference.verdict", "reference.ticks"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), r.cases.len());
    assert!(rows.iter().any(|row| &row[2] == "fail"));
}

#[test]
fn nested_sweep_has_rising_efficiency() {
    let r = run(XOR);
    for tuple in ["candidate", "reference"] {
        let effs: Vec<f64> = r.plot.iter().filter(|p| p.tuple == tuple).map(|p| p.eff).collect();
        assert_eq!(effs.len(), 4);
        // each prefix adds one new value class out of four
        for (i, e) in effs.iter().enumerate() {
            assert!((e - (i + 1) as f64 / 4.0).abs() < 1e-12);
        }
        assert!(effs.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn empty_campaign_writes_valid_files() {
    let c = config(XOR);
    let wiring = prepare(&c, Path::new("."), Mode::Run).unwrap();
    let r = run_wired(&c, wiring, Mode::Run, Some(TestSet::empty("empty")));
    assert_eq!(r.status, Status::Completed, "{:?}", r.error);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, &Format::ALL, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back = CampaignReport::from_json(&json).unwrap();
    assert_eq!(back.config, c);
    assert!(back.cases.is_empty());
    for f in ["cases.csv", "plotdata.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 1, "{f} should hold only a header");
    }
    assert!(r.replacement.unwrap().warnings[0].contains("vacuously"));
}

#[test]
fn runtime_failure_aborts_with_partial_report() {
    // identity answers pairs, which lie outside the declared codomain
    let text = XOR.replace("systems = [\"xor-wrong-11\"]", "systems = [\"identity\"]");
    let r = run(&text);
    assert_eq!(r.status, Status::Aborted);
    assert!(r.error.as_deref().unwrap().contains("output domain"));
    assert_eq!(r.test_set.as_ref().unwrap().size, 4);
    assert!(r.cases.is_empty());
    assert_eq!(exit_status(&r, Mode::Run), 3);
    CampaignReport::from_json(&r.to_json().unwrap()).unwrap();
}

#[test]
fn unresolved_references_are_config_errors() {
    let cases = [
        XOR.replace("\"xor-wrong-11\"", "\"nand\""),
        XOR.replace("reference = \"xor\"", ""),
        XOR.replace("kind = \"by-value\"", "kind = \"scenario-bands\""),
        XOR.replace("\"xor-wrong-11\"", "\"table:no/such/file.tsv\""),
        XOR.replace("strategy = \"exhaustive\"", "strategy = \"random\""),
        XOR.replace("kind = \"matches\"", "kind = \"collision-free\""),
        XOR.replace("systems = [\"xor\"]", "systems = [\"xor\", \"xor\"]"),
    ];
    for text in cases {
        let err = run_campaign(&config(&text), Path::new("."), Mode::Run).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}

#[test]
fn table_systems_resolve_beside_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.tsv"), "0 0\t0\n0 1\t1\n1 0\t1\n1 1\t0\n").unwrap();
    let text = XOR.replace("\"xor-wrong-11\"", "\"table:xor.tsv\"");
    let r = run_campaign(&config(&text), dir.path(), Mode::Replace).unwrap();
    assert!(r.equivalence.as_ref().unwrap().equivalent);
    assert!(r.equivalence.as_ref().unwrap().conclusive);
    assert!(r.audits.is_none());
    assert_eq!(exit_status(&r, Mode::Replace), 0);
}

const CROSSING: &str = r#"
schema_version = 1
name = "crossing"
seed = 1

[context]
kind = "traffic"
network = "builtin:crossing"
vehicles = 3

[[tuples]]
name = "cautious"
systems = ["cautious"]

[[tuples]]
name = "greedy"
systems = ["greedy"]

[property]
kind = "collision-free"

[generator]
strategy = "exhaustive"

[classifier]
kind = "scenario-bands"
"#;

#[test]
fn crossing_campaign_matches_the_engine_suite() {
    let r = run(CROSSING);
    assert_eq!(r.status, Status::Completed, "{:?}", r.error);
    assert_eq!(r.cases.len(), 3438);
    let rep = r.replacement.as_ref().unwrap();
    assert!(rep.holds);
    // traffic runs carry state over ticks, so even full enumeration is not conclusive
    assert!(!rep.conclusive);
    let rev = r.reverse_replacement.as_ref().unwrap();
    assert!(!rev.holds);
    assert!(rev.violations[0].candidate.evidence.as_deref().unwrap().contains("vehicles"));
    assert_eq!(r.tuples[0].score.as_ref().unwrap().n_fail, 0);
    assert_eq!(exit_status(&r, Mode::Run), 0);
    assert_eq!(exit_status(&r, Mode::Replace), 0);
}
