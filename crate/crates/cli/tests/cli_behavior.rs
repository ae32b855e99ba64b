//! End-to-end behavior of the `restyle` binary: exit codes, file formats,
//! fixture reproduction, determinism, and the full pipeline smoke run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_restyle"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

#[test]
fn help_exits_zero_unknown_subcommand_exits_one() {
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("Usage: restyle"));

    let unknown = bin().arg("no-such-command").output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    for sub in [
        "filter",
        "partition",
        "rewrite",
        "train-formality",
        "score-formality",
        "train-lm",
        "select",
        "augment",
        "evaluate",
        "correlate",
        "stats",
    ] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{sub} --help should exit 0");
    }
}

#[test]
fn rewrite_reproduces_fixtures_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let formal_out = dir.path().join("formal.txt");
    run_ok(bin().args([
        "rewrite",
        "--direction",
        "formal",
        "--input",
        fixture("informal_input.txt").to_str().unwrap(),
        "--output",
        formal_out.to_str().unwrap(),
    ]));
    assert_eq!(read(&formal_out), read(&fixture("expected_formalized.txt")));

    let detok_out = dir.path().join("formal_detok.txt");
    run_ok(bin().args([
        "rewrite",
        "--direction",
        "formal",
        "--detok",
        "--input",
        fixture("informal_input.txt").to_str().unwrap(),
        "--output",
        detok_out.to_str().unwrap(),
    ]));
    assert_eq!(read(&detok_out), read(&fixture("expected_formalized_detok.txt")));

    let informal_out = dir.path().join("informal.txt");
    run_ok(bin().args([
        "rewrite",
        "--direction",
        "informal",
        "--seed",
        "7",
        "--p-uppercase",
        "0.4",
        "--p-repetition",
        "0.4",
        "--input",
        fixture("formal_input.txt").to_str().unwrap(),
        "--output",
        informal_out.to_str().unwrap(),
    ]));
    assert_eq!(read(&informal_out), read(&fixture("expected_informalized_seed7.txt")));
}

#[test]
fn rewrite_same_seed_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("t1.txt");
    let out8 = dir.path().join("t8.txt");
    for (threads, out) in [("1", &out1), ("8", &out8)] {
        run_ok(bin().args([
            "rewrite",
            "--direction",
            "informal",
            "--seed",
            "99",
            "--threads",
            threads,
            "--input",
            fixture("formal_input.txt").to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(read(&out1), read(&out8));
}

#[test]
fn filter_applies_bounds_and_reports_reasons() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(
        &input,
        "one two three four\n\
         this sentence has exactly five\n\
         is this a question ?\n\
         see http://example.com for details please\n\
         this one is perfectly ordinary text\n",
    )
    .unwrap();
    let kept = dir.path().join("kept.txt");
    let rejected = dir.path().join("rejected.txt");
    let out = run_ok(bin().args([
        "filter",
        "--input",
        input.to_str().unwrap(),
        "--output",
        kept.to_str().unwrap(),
        "--rejected",
        rejected.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kept: 2"));
    assert!(stdout.contains("rejected_question: 1"));
    assert!(stdout.contains("rejected_url: 1"));
    assert!(stdout.contains("rejected_too_short: 1"));
    let kept_lines = read(&kept);
    assert!(kept_lines.contains("exactly five"));
    assert!(kept_lines.contains("perfectly ordinary"));
    let rejected_lines = read(&rejected);
    assert!(rejected_lines.contains("question\tis this a question ?"));

    // invalid bounds are a usage error
    let bad = bin()
        .args([
            "filter",
            "--input",
            input.to_str().unwrap(),
            "--output",
            kept.to_str().unwrap(),
            "--min-tokens",
            "10",
            "--max-tokens",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("never.txt");
    let out = bin()
        .args([
            "rewrite",
            "--direction",
            "formal",
            "--input",
            dir.path().join("missing.txt").to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!output.exists(), "failed run must not create output");
}

fn write_labeled_training(path: &Path) {
    // informal-ish sentences labeled low, formal-ish high
    let informal = [
        "u r gr8",
        "i luv this so much!!!",
        "OMG that was AWESOME",
        "wanna hang out coz im bored",
        "didn't see that comin",
        "ur the best dude!!!",
        "that show was gr8 lol",
        "dont worry about it",
        "he's gonna be ok i think",
        "nooooo way that happened",
    ];
    let formal = [
        "I did not expect that outcome .",
        "You are a remarkable person .",
        "We would like to see the results .",
        "That performance was excellent .",
        "He will arrive on Monday .",
        "The answer is not obvious .",
        "She appreciates your message .",
        "They are going to attend the meeting .",
        "It is a reasonable proposal .",
        "I cannot agree with that analysis .",
    ];
    let mut text = String::new();
    for s in informal {
        text.push_str(&format!("-2.0\t{s}\n"));
    }
    for s in formal {
        text.push_str(&format!("1.5\t{s}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn formality_train_score_partition_flow() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.tsv");
    write_labeled_training(&train);
    let model = dir.path().join("model.json");
    run_ok(bin().args([
        "train-formality",
        "--train",
        train.to_str().unwrap(),
        "--model-out",
        model.to_str().unwrap(),
    ]));

    let input = dir.path().join("score_in.txt");
    fs::write(&input, "u r gr8 lol\nI would be delighted to attend .\n").unwrap();
    let scores_path = dir.path().join("scores.txt");
    run_ok(bin().args([
        "score-formality",
        "--model",
        model.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        scores_path.to_str().unwrap(),
    ]));
    let scores: Vec<f64> = read(&scores_path)
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 2);
    assert!(
        scores[0] < scores[1],
        "informal sentence should score below formal one: {scores:?}"
    );

    let informal_path = dir.path().join("informal.txt");
    let formal = dir.path().join("formal.txt");
    let out = run_ok(bin().args([
        "partition",
        "--input",
        input.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--informal",
        informal_path.to_str().unwrap(),
        "--formal",
        formal.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("informal: 1"));
    assert!(stdout.contains("formal: 1"));
    assert!(read(&informal_path).contains("gr8"));
    assert!(read(&formal).contains("delighted"));
}

#[test]
fn lm_train_and_select_flow() {
    let dir = tempfile::tempdir().unwrap();
    let in_domain = dir.path().join("in.txt");
    let out_domain = dir.path().join("out.txt");
    let mut in_text = String::new();
    let mut out_text = String::new();
    for _ in 0..30 {
        in_text.push_str("the cat sat on the mat\nthe dog ran to the rug\n");
        out_text.push_str("markets moved sharply lower today\nanalysts expect further declines\n");
    }
    fs::write(&in_domain, in_text).unwrap();
    fs::write(&out_domain, out_text).unwrap();

    let in_arpa = dir.path().join("in.arpa");
    let out_arpa = dir.path().join("out.arpa");
    for (corpus, arpa) in [(&in_domain, &in_arpa), (&out_domain, &out_arpa)] {
        let out = run_ok(bin().args([
            "train-lm",
            "--input",
            corpus.to_str().unwrap(),
            "--arpa-out",
            arpa.to_str().unwrap(),
            "--order",
            "3",
        ]));
        assert!(String::from_utf8_lossy(&out.stdout).contains("smoothing: kneser_ney"));
    }

    let pool = dir.path().join("pool.txt");
    fs::write(
        &pool,
        "the cat sat on the rug\nanalysts expect the cat\nmarkets moved lower\nthe dog ran to the mat\n",
    )
    .unwrap();
    let selected = dir.path().join("selected.txt");
    let scores = dir.path().join("ml_scores.tsv");
    run_ok(bin().args([
        "select",
        "--in-domain-lm",
        in_arpa.to_str().unwrap(),
        "--out-domain-lm",
        out_arpa.to_str().unwrap(),
        "--pool",
        pool.to_str().unwrap(),
        "--top-k",
        "2",
        "--output",
        selected.to_str().unwrap(),
        "--scores-out",
        scores.to_str().unwrap(),
    ]));
    let picked = read(&selected);
    assert!(picked.contains("the cat sat on the rug"));
    assert!(picked.contains("the dog ran to the mat"));
    assert!(!picked.contains("markets moved lower"));

    // both rules at once is a usage error
    let bad = bin()
        .args([
            "select",
            "--in-domain-lm",
            in_arpa.to_str().unwrap(),
            "--out-domain-lm",
            out_arpa.to_str().unwrap(),
            "--pool",
            pool.to_str().unwrap(),
            "--top-k",
            "2",
            "--max-score",
            "0.0",
            "--output",
            selected.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn augment_flow_and_assembly_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono.txt");
    fs::write(
        &mono,
        "u r the best coz i luv u and ur friends\n\
         fine\n\
         i didn't know u were gonna be there omg\n",
    )
    .unwrap();
    let pairs = dir.path().join("self_train.tsv");
    let out = run_ok(bin().args([
        "augment",
        "self-train",
        "--input",
        mono.to_str().unwrap(),
        "--output",
        pairs.to_str().unwrap(),
        "--min-edit",
        "10",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("input: 3"));
    // "fine" -> "Fine" is distance 1, filtered by the >10 rule
    let pair_lines: Vec<String> = read(&pairs).lines().map(String::from).collect();
    assert_eq!(pair_lines.len(), 2);
    assert!(pair_lines.iter().all(|l| l.ends_with("self_train")));

    let bt = dir.path().join("bt.tsv");
    run_ok(bin().args([
        "augment",
        "back-translate",
        "--seed",
        "3",
        "--input",
        fixture("formal_input.txt").to_str().unwrap(),
        "--output",
        bt.to_str().unwrap(),
    ]));
    let bt_lines: Vec<String> = read(&bt).lines().map(String::from).collect();
    assert_eq!(bt_lines.len(), 4, "back-translation keeps every input");
    assert!(bt_lines.iter().all(|l| l.ends_with("back_translation")));
    // authentic formal sentence stays on the target side
    assert!(bt_lines[0].split('\t').nth(2).unwrap().contains("did not know"));

    let assembled = dir.path().join("assembled.tsv");
    let out = run_ok(bin().args([
        "augment",
        "assemble",
        "--base",
        pairs.to_str().unwrap(),
        "--dup-factor",
        "6",
        "--extra",
        bt.to_str().unwrap(),
        "--output",
        assembled.to_str().unwrap(),
    ]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("assembled: 16")); // 2*6 + 4
    assert_eq!(read(&assembled).lines().count(), 16);
}

fn write_eval_inputs(dir: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    let test = dir.join("test.tsv");
    fs::write(
        &test,
        "e1\tu r late\tYou are late .\tYou arrive late .\n\
         e2\ti didn't know\tI did not know .\n\
         e3\tthat was gr8\tThat was great .\n",
    )
    .unwrap();
    let good = dir.join("good.txt");
    fs::write(&good, "You are late .\nI did not know .\nThat was great .\n").unwrap();
    let copy = dir.join("copy.txt");
    fs::write(&copy, "u r late\ni didn't know\nthat was gr8\n").unwrap();
    let judgments = dir.join("judgments.tsv");
    let mut j = String::new();
    for (sentence, good_rank, copy_rank) in [("e1", 1.0, 2.0), ("e2", 1.0, 2.0), ("e3", 2.0, 1.0)] {
        for judge in ["j1", "j2"] {
            j.push_str(&format!("{sentence}\tgood\t{judge}\toverall_rank\t{good_rank}\n"));
            j.push_str(&format!("{sentence}\tcopy\t{judge}\toverall_rank\t{copy_rank}\n"));
        }
    }
    // per-sentence formality judgments for the correlate flow
    for (sentence, value) in [("e1", 1.5), ("e2", 0.5), ("e3", -0.5)] {
        j.push_str(&format!("{sentence}\tgood\tj1\tformality\t{value}\n"));
        j.push_str(&format!("{sentence}\tcopy\tj1\tformality\t{}\n", value - 1.0));
    }
    fs::write(&judgments, j).unwrap();
    (test, good, copy, judgments)
}

#[test]
fn evaluate_and_correlate_flow() {
    let dir = tempfile::tempdir().unwrap();
    let (test, good, copy, judgments) = write_eval_inputs(dir.path());

    let report_json = dir.path().join("report.json");
    let report_text = dir.path().join("report.txt");
    let out = run_ok(bin().args([
        "evaluate",
        "--seed",
        "5",
        "--test",
        test.to_str().unwrap(),
        "--system",
        &format!("good={}", good.display()),
        "--system",
        &format!("copy={}", copy.display()),
        "--judgments",
        judgments.to_str().unwrap(),
        "--baseline",
        "copy",
        "--report-json",
        report_json.to_str().unwrap(),
        "--report-text",
        report_text.to_str().unwrap(),
    ]));
    assert!(out.stdout.is_empty(), "text went to the file, not stdout");
    let text = read(&report_text);
    assert!(text.contains("original_source"));
    assert!(text.contains("fluency (LM proxy)"));
    assert!(text.contains("meaning (lexical proxy)"));
    let json: serde_json::Value = serde_json::from_str(&read(&report_json)).unwrap();
    let systems = json["systems"].as_array().unwrap();
    assert_eq!(systems.len(), 2);
    assert_eq!(systems[0]["system_id"], "good");
    assert!((systems[0]["bleu"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert_eq!(systems[1]["pinc"].as_f64().unwrap(), 0.0);
    // mean rank over judges then sentences: good = (1+1+2)/3
    let good_rank = systems[0]["overall_rank"].as_f64().unwrap();
    assert!((good_rank - 4.0 / 3.0).abs() < 1e-9);
    // source row has no meaning/combined
    assert!(json["source_row"]["meaning"].is_null());
    assert!(json["source_row"]["combined"].is_null());

    let corr_text = dir.path().join("corr.txt");
    let corr_json = dir.path().join("corr.json");
    run_ok(bin().args([
        "correlate",
        "--seed",
        "5",
        "--auto",
        report_json.to_str().unwrap(),
        "--judgments",
        judgments.to_str().unwrap(),
        "--resamples",
        "300",
        "--report-json",
        corr_json.to_str().unwrap(),
        "--report-text",
        corr_text.to_str().unwrap(),
    ]));
    let corr: serde_json::Value = serde_json::from_str(&read(&corr_json)).unwrap();
    let rows = corr["rows"].as_array().unwrap();
    let metrics: Vec<&str> = rows.iter().map(|r| r["metric"].as_str().unwrap()).collect();
    assert!(metrics.contains(&"bleu"));
    assert!(metrics.contains(&"ter"));
    assert!(metrics.contains(&"pinc"));
    // per-sentence BLEU tracks quality, rank 1 = best, so BLEU-vs-rank is negative
    let bleu_row = rows.iter().find(|r| r["metric"] == "bleu").unwrap();
    assert!(bleu_row["rho"].as_f64().unwrap() < 0.0);
}

#[test]
fn evaluate_misaligned_output_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let (test, good, _copy, _j) = write_eval_inputs(dir.path());
    let short = dir.path().join("short.txt");
    fs::write(&short, "You are late .\n").unwrap();
    let out = bin()
        .args([
            "evaluate",
            "--test",
            test.to_str().unwrap(),
            "--system",
            &format!("good={}", good.display()),
            "--system",
            &format!("short={}", short.display()),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr should name the offending line: {stderr}");
}

#[test]
fn stats_reports_known_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("parallel.tsv");
    // char distances 10 and 30 -> mean 20, population std 10
    fs::write(
        &input,
        format!("s1\t{}\ta\ns2\t{}\tb\n", "a".repeat(11), "b".repeat(31)),
    )
    .unwrap();
    let json = dir.path().join("stats.json");
    let out = run_ok(bin().args([
        "stats",
        "--input",
        input.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("edit_distance_mean: 20.0000"));
    assert!(stdout.contains("edit_distance_std: 10.0000"));
    let parsed: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    assert_eq!(parsed["examples"], 2);
}

#[test]
fn shipped_lexicons_keep_formalize_idempotent() {
    use restyle_cli::formats::{load_lexicons, LexiconPaths};
    use restyle_core::rules::{formalize, is_all_caps_word};
    use restyle_core::text::tokenize;

    let lex = load_lexicons(&LexiconPaths::default()).unwrap();
    // every lexicon key plus caps/runs/punctuation shapes, combined pairwise
    let mut pool: Vec<String> = lex.contractions().keys().cloned().collect();
    pool.extend(lex.slang().keys().cloned());
    pool.extend(lex.swear().iter().cloned());
    pool.extend(lex.proper_nouns().keys().cloned());
    pool.extend(
        ["HELLO", "soooo", "!!!", "????", "...", "I", "i", "ok!!", "1000", "WOW"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut violations = 0;
    for (i, a) in pool.iter().enumerate() {
        let b = &pool[(i * 7 + 3) % pool.len()];
        let c = &pool[(i * 13 + 11) % pool.len()];
        let s = tokenize(&format!("{a} {b} {c}"));
        let once = formalize(&s, &lex);
        if formalize(&once, &lex) != once {
            violations += 1;
            eprintln!("not idempotent: {:?} -> {:?}", s.raw(), once.raw());
        }
        for tok in once.tokens() {
            assert!(!is_all_caps_word(tok), "all-caps {tok:?} from {:?}", s.raw());
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("restyle.toml");
    fs::write(&config, "seed = 7\np_uppercase = 0.4\np_repetition = 0.4\n").unwrap();

    let from_config = dir.path().join("a.txt");
    run_ok(bin().args([
        "rewrite",
        "--direction",
        "informal",
        "--config",
        config.to_str().unwrap(),
        "--input",
        fixture("formal_input.txt").to_str().unwrap(),
        "--output",
        from_config.to_str().unwrap(),
    ]));
    // identical to the committed fixture, which used explicit flags
    assert_eq!(read(&from_config), read(&fixture("expected_informalized_seed7.txt")));

    let flag_wins = dir.path().join("b.txt");
    run_ok(bin().args([
        "rewrite",
        "--direction",
        "informal",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "1234",
        "--input",
        fixture("formal_input.txt").to_str().unwrap(),
        "--output",
        flag_wins.to_str().unwrap(),
    ]));
    assert_ne!(read(&flag_wins), read(&from_config));

    let bad_config = dir.path().join("bad.toml");
    fs::write(&bad_config, "unknown_key = 1\n").unwrap();
    let out = bin()
        .args([
            "rewrite",
            "--direction",
            "formal",
            "--config",
            bad_config.to_str().unwrap(),
            "--input",
            fixture("formal_input.txt").to_str().unwrap(),
            "--output",
            dir.path().join("c.txt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
