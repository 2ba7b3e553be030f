//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;

use common::mock_http::{self, MockServer, Reply};
use common::{mutants, oracle};
use retriage::bench::{run_batch, BatchConfig, MetricsReport, SourceFile};
use retriage::cli;
use retriage::pipeline::AnalysisConfig;
use retriage::report::Report;
use retriage::triage::{CauseType, Classification};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rules_off() -> BatchConfig {
    let mut b = BatchConfig::default();
    b.analysis.rules = BTreeSet::new();
    b
}

fn reference_corpus() -> Outcome {
    let start = Instant::now();
    let files = common::canonical_files();
    let labels = common::canonical_labels();
    let result = run_batch(files, Some(&labels), &BatchConfig::default());
    let elapsed = start.elapsed();
    let findings: usize = result.files.iter().filter_map(|f| f.analysis()).map(|a| a.verdicts.len()).sum();
    ensure(findings >= 8, || format!("only {findings} findings"))?;
    let likely: Vec<String> = result
        .files
        .iter()
        .filter_map(|f| f.analysis())
        .flat_map(|a| a.verdicts.iter())
        .filter(|v| v.classification == Classification::LikelyTruePositive)
        .map(|v| format!("{}:{}", v.finding.file, v.finding.function))
        .collect();
    ensure(likely == ["simple_dao.sol:withdraw"], || format!("likely true positives: {likely:?}"))?;
    for (file, function, cause) in common::DESIGNATED {
        let Some(cause) = cause else { continue };
        let analysis = result
            .files
            .iter()
            .find(|f| f.file == file)
            .and_then(|f| f.analysis())
            .ok_or_else(|| format!("{file} not analyzed"))?;
        let hit = common::verdicts_of(analysis, function)
            .iter()
            .any(|v| v.classification == Classification::SuppressedFalsePositive && v.causes.contains_key(&cause));
        ensure(hit, || format!("{file}:{function} lacks a suppressed finding with {cause}"))?;
    }
    let internal = result.files.iter().find(|f| f.file == "internal_transfer.sol").and_then(|f| f.analysis());
    let both = internal.is_some_and(|a| {
        common::verdicts_of(a, "_withdraw").iter().any(|v| {
            v.causes.contains_key(&CauseType::GasStipendTransferSend) && v.causes.contains_key(&CauseType::NonCallable)
        })
    });
    ensure(both, || "internal_transfer.sol lacks gas stipend plus non-callable".into())?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{findings} findings, 1 likely true positive, {elapsed:.2?}"))
}

fn precision_of(m: &MetricsReport) -> (usize, usize) {
    (m.tp_count, m.flagged_count)
}

fn precision_property() -> Outcome {
    let labels = common::canonical_labels();
    let on = run_batch(common::canonical_files(), Some(&labels), &BatchConfig::default()).metrics;
    let off = run_batch(common::canonical_files(), Some(&labels), &rules_off()).metrics;
    ensure(precision_of(&on) == (1, 1), || format!("rules on: {:?}", precision_of(&on)))?;
    ensure(precision_of(&off) == (1, 8), || format!("rules off: {:?}", precision_of(&off)))?;
    let corpora = [
        ("canonical", common::canonical_files(), labels.clone()),
        ("derived", common::derived_files(), common::derived_labels()),
    ];
    for (name, files, labels) in corpora {
        let on = run_batch(files.clone(), Some(&labels), &BatchConfig::default()).metrics;
        let off = run_batch(files, Some(&labels), &rules_off()).metrics;
        let (p_on, p_off) = (on.precision.unwrap_or(0.0), off.precision.unwrap_or(0.0));
        ensure(p_on >= p_off, || format!("{name}: precision {p_on} with rules < {p_off} without"))?;
        let lost: Vec<String> = on
            .records
            .iter()
            .filter(|r| r.label == retriage::bench::Label::TP && r.classification != Some(Classification::LikelyTruePositive))
            .map(|r| r.describe())
            .collect();
        ensure(lost.is_empty(), || format!("{name}: suppressed true positives {lost:?}"))?;
    }
    Ok("1/1 with rules, 1/8 without, no true positive suppressed".into())
}

fn metamorphic() -> Outcome {
    let all = mutants::all();
    ensure(all.len() >= 16, || format!("only {} mutants", all.len()))?;
    let rules_covered: BTreeSet<CauseType> = all.iter().map(|m| m.rule).collect();
    ensure(rules_covered.len() == CauseType::ALL.len(), || format!("rules covered: {rules_covered:?}"))?;
    let mut failures = Vec::new();
    for m in &all {
        let src = (m.mutate)(&common::canonical_source(m.base));
        let a = match retriage::pipeline::analyze_source(m.base, &src, &AnalysisConfig::default()) {
            Ok(a) => a,
            Err(e) => {
                failures.push(format!("{}: {e}", m.name));
                continue;
            }
        };
        let vs = common::verdicts_of(&a, m.function);
        if vs.is_empty() {
            failures.push(format!("{}: no finding in {}", m.name, m.function));
            continue;
        }
        for v in &vs {
            let matched = v.rule_trace.iter().any(|r| r.rule == m.rule && r.matched);
            if matched != m.rule_matches {
                failures.push(format!("{}: {} matched={matched} at line {}", m.name, m.rule, v.finding.call_site.location.line));
            }
        }
        if let Some(suppressed) = m.suppressed {
            let any_likely = vs.iter().any(|v| v.classification == Classification::LikelyTruePositive);
            if any_likely == suppressed {
                failures.push(format!("{}: expected suppressed={suppressed}", m.name));
            }
            if suppressed && m.rule_matches && !vs.iter().all(|v| v.causes.contains_key(&m.rule)) {
                failures.push(format!("{}: suppressed without {}", m.name, m.rule));
            }
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} mutants across {} rules", all.len(), rules_covered.len()))
}

fn flow_oracle() -> Outcome {
    let run = oracle::run(200, 0x5eed);
    ensure(run.disagreements.is_empty(), || {
        format!("{} disagreements, first: {}", run.disagreements.len(), run.disagreements[0])
    })?;
    Ok(format!("{} CFGs, {} call sites, 0 disagreements", run.cfgs, run.sites))
}

fn shuffled_report(seed: u64) -> String {
    let mut files: Vec<SourceFile> = common::canonical_files();
    files.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
    let mut cfg = BatchConfig::default();
    cfg.workers = 3;
    let result = run_batch(files, None, &cfg);
    Report::new("1970-01-01T00:00:00Z".into(), &result.files).to_json()
}

fn determinism() -> Outcome {
    let (a, b) = (shuffled_report(1), shuffled_report(2));
    ensure(a == b, || "reports differ between shuffled runs".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn run_cli(args: &[&str]) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(args.iter().copied(), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

fn derived_metrics() -> Outcome {
    let dir = common::corpus_dir("derived");
    let labels = dir.join("labels.csv");
    let (code, out, err) = run_cli(&[
        "retriage",
        "bench",
        dir.to_str().expect("utf-8 path"),
        "--labels",
        labels.to_str().expect("utf-8 path"),
        "--format",
        "json",
    ]);
    ensure(code == 0, || format!("bench exited {code}: {err}"))?;
    let v: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let expect_counts = [
        ("analyzed_count", 18),
        ("failed_count", 1),
        ("duplicate_count", 1),
        ("reported_count", 18),
        ("reported_contracts", 17),
        ("flagged_count", 6),
        ("tp_count", 4),
        ("suppressed_count", 12),
    ];
    for (key, want) in expect_counts {
        ensure(v[key] == want, || format!("{key} = {}, want {want}", v[key]))?;
    }
    // 4 / 6 and 17 / 18, rounded to six places
    ensure(v["precision"] == 0.666667, || format!("precision {}", v["precision"]))?;
    ensure(v["reported_rate"] == 0.944444, || format!("reported_rate {}", v["reported_rate"]))?;
    let causes = [
        ("identity_control", 2),
        ("address_control", 1),
        ("reentrancy_lock", 1),
        ("no_state_change", 3),
        ("no_financial_risk", 4),
        ("special_transfer_value", 1),
        ("gas_stipend_transfer_send", 2),
        ("non_callable", 1),
    ];
    for (key, want) in causes {
        ensure(v["per_cause_counts"][key] == want, || format!("{key} = {}, want {want}", v["per_cause_counts"][key]))?;
    }
    Ok("counts, precision 0.666667 and reported_rate 0.944444 match".into())
}

fn timeout_behavior() -> Outcome {
    let slow = common::pathological_source(PATHOLOGICAL_FUNCTIONS, PATHOLOGICAL_DEPTH, PATHOLOGICAL_WIDTH);
    let mut files = common::canonical_files();
    files.push(SourceFile { name: "slow.sol".into(), bytes: slow.into_bytes() });
    let mut cfg = BatchConfig::default();
    cfg.analysis.timeout = Some(Duration::from_secs(1));
    let start = Instant::now();
    let result = run_batch(files, None, &cfg);
    let elapsed = start.elapsed();
    let m = &result.metrics;
    let slow_failed = result.files.iter().any(|f| {
        f.file == "slow.sol" && matches!(f.status, retriage::bench::FileStatus::Failed { timed_out: true, .. })
    });
    ensure(slow_failed, || format!("pathological file was not timed out after {elapsed:.2?}"))?;
    ensure(m.failed_count == 1 && m.analyzed_count == 8, || {
        format!("failed {} analyzed {}", m.failed_count, m.analyzed_count)
    })?;
    Ok(format!("1 failed, 8 analyzed, batch finished in {elapsed:.2?}"))
}

// about 400 KB and 25 levels deep: inside the parser limits, yet many
// seconds of flow queries without a budget
const PATHOLOGICAL_FUNCTIONS: usize = 2;
const PATHOLOGICAL_DEPTH: usize = 25;
const PATHOLOGICAL_WIDTH: usize = 3000;

fn fetch_cmd(endpoint: &str, out: &Path, address: &str) -> (i32, String) {
    let config = out.parent().expect("parent").join("fetch.toml");
    std::fs::write(
        &config,
        format!("[fetch]\nendpoint = \"{endpoint}\"\napi_key_env = \"ACCEPTANCE_EXPLORER_KEY\"\nretries = 2\nbackoff_ms = 10\n"),
    )
    .expect("write config");
    let o = Command::new(env!("CARGO_BIN_EXE_retriage"))
        .args(["fetch", address, "--out"])
        .arg(out)
        .arg("--config")
        .arg(&config)
        .env("ACCEPTANCE_EXPLORER_KEY", "test-key")
        .output()
        .expect("spawn cli");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn leftovers(dir: &Path) -> Vec<String> {
    std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default()
}

fn fetch_client() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();

    let server = MockServer::start(vec![Reply::Json(200, mock_http::verified_body())], 4);
    let out = tmp.path().join("ok");
    let (code, err) = fetch_cmd(&server.endpoint(), &out, mock_http::ADDRESS);
    ensure(code == 0, || format!("success path exited {code}: {err}"))?;
    let mut names = leftovers(&out);
    names.sort();
    ensure(names == [format!("{}.json", mock_http::ADDRESS), "Dai.sol".to_string()], || format!("wrote {names:?}"))?;
    let reqs = server.requests();
    ensure(reqs.len() == 1 && reqs[0].contains("apikey=test-key"), || format!("requests {reqs:?}"))?;
    notes.push("ok=0");

    let cases: [(&str, Vec<Reply>, i32); 4] = [
        ("not verified", vec![Reply::Json(200, mock_http::not_verified_body())], 4),
        ("rate limit body", vec![Reply::Json(200, mock_http::rate_limit_body())], 5),
        ("http 429", vec![Reply::Json(429, "{}".into())], 5),
        ("dropped connection", vec![Reply::Drop], 3),
    ];
    for (name, script, want) in cases {
        let server = MockServer::start(script, 8);
        let out = tmp.path().join(name.replace(' ', "_"));
        let (code, err) = fetch_cmd(&server.endpoint(), &out, mock_http::ADDRESS);
        ensure(code == want, || format!("{name}: exited {code}, want {want}: {err}"))?;
        let left = leftovers(&out);
        ensure(left.is_empty(), || format!("{name}: left {left:?}"))?;
        notes.push(name);
    }

    // unsafe paths in a multi-file answer must not leave staged files behind
    let server = MockServer::start(vec![Reply::Json(200, mock_http::traversal_body())], 4);
    let out = tmp.path().join("traversal");
    let (code, _) = fetch_cmd(&server.endpoint(), &out, mock_http::ADDRESS);
    ensure(code != 0, || "traversal path accepted".into())?;
    ensure(leftovers(&out).is_empty() && !tmp.path().join("escape.sol").exists(), || "traversal left files".into())?;

    let server = MockServer::start(vec![Reply::Json(200, mock_http::verified_body())], 4);
    let out = tmp.path().join("bad");
    let (code, _) = fetch_cmd(&server.endpoint(), &out, "0x1234");
    ensure(code == 2, || format!("bad address exited {code}"))?;
    ensure(server.requests().is_empty(), || "bad address reached the network".into())?;

    Ok(format!("exit codes 0/4/5/5/3/2 as documented, no partial output ({})", notes.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("reference corpus fidelity", reference_corpus),
        ("precision improvement", precision_property),
        ("metamorphic rule mutants", metamorphic),
        ("flow oracle equivalence", flow_oracle),
        ("determinism under shuffling", determinism),
        ("derived corpus metrics", derived_metrics),
        ("timeout handling", timeout_behavior),
        ("fetch client exit codes", fetch_client),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
