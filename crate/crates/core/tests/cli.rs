mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use evolen::encoder::{encode_dp, load_tokenizer};
use evolen::genome_io::parse_fasta;
use evolen::pipeline::{run_pipeline, Manifest, PipelineConfig, RunStatus, Variant, MANIFEST_FILE};

use common::{synthetic, write_inputs, SyntheticSpec};

fn evolen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evolen"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = evolen(args);
    assert!(
        out.status.success(),
        "evolen {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small() -> SyntheticSpec {
    SyntheticSpec {
        length: 60_000,
        ..Default::default()
    }
}

#[test]
fn staged_commands_match_library_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = synthetic(31, &small());
    let f = write_inputs(d, &s);
    let pools = d.join("pools");

    ok(&["stratify", "--fasta", p(&f.fasta), "--phylop", p(&f.phylop), "--out-dir", p(&pools)]);
    for cat in ["conserved", "neutral", "accelerated"] {
        assert!(pools.join(format!("{cat}.fa")).exists());
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&fs::read(pools.join("stratify_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["bin_counts"]["conserved"], s.conserved_bins.len());

    for (short, cat) in [("con", "conserved"), ("neu", "neutral"), ("acc", "accelerated")] {
        ok(&[
            "train",
            "--pool",
            p(&pools.join(format!("{cat}.fa"))),
            "--vocab-size",
            "128",
            "--label",
            short,
            "--out",
            p(&d.join(format!("{short}.json"))),
        ]);
    }
    let tok = d.join("merged/tokenizer.json");
    ok(&[
        "merge",
        "--con",
        p(&d.join("con.json")),
        "--neu",
        p(&d.join("neu.json")),
        "--acc",
        p(&d.join("acc.json")),
        "--target",
        "128",
        "--out",
        p(&tok),
    ]);
    assert!(d.join("merged/merge_report.json").exists());

    let mut cfg = PipelineConfig::new(&f.fasta, d.join("lib"));
    cfg.phylop = Some(f.phylop.clone());
    cfg.vocab_size = 128;
    run_pipeline(&cfg).unwrap();
    assert_eq!(
        fs::read(&tok).unwrap(),
        fs::read(d.join("lib/tokenizer.json")).unwrap(),
        "staged CLI and library pipeline disagree"
    );

    let enc = d.join("tokens.tsv");
    ok(&["encode", "--tokenizer", p(&tok), "--fasta", p(&f.fasta), "--out", p(&enc)]);
    let text = fs::read_to_string(&enc).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seq_id\tstart\tend\ttoken"));
    let vocab = load_tokenizer(&fs::read(&tok).unwrap()).unwrap();
    let expected = encode_dp(&vocab, &s.genome[0].bases);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), expected.len());
    let last: Vec<&str> = rows.last().unwrap().split('\t').collect();
    assert_eq!(last[2], s.genome[0].bases.len().to_string());
    let joined: String = rows.iter().map(|r| r.split('\t').nth(3).unwrap()).collect();
    assert_eq!(joined, s.genome[0].bases);
}

#[test]
fn eval_subcommands_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = synthetic(32, &small());
    let f = write_inputs(d, &s);
    let mut cfg = PipelineConfig::new(&f.fasta, d.join("run"));
    cfg.phylop = Some(f.phylop.clone());
    cfg.vocab_size = 128;
    run_pipeline(&cfg).unwrap();
    let tok = d.join("run/tokenizer.json");
    let manifest = d.join("run").join(MANIFEST_FILE);
    let genome = ["--fasta", p(&f.fasta), "--phylop", p(&f.phylop)];

    let out = d.join("motifs.tsv");
    ok(&["eval", "motifs", "--tokenizer", p(&tok), "--manifest", p(&manifest), "--meme", p(&f.motifs), "--out", p(&out)]);
    let t = fs::read_to_string(&out).unwrap();
    assert!(t.starts_with("tokenizer\tmotifs\t"));
    assert!(t.lines().nth(1).unwrap().starts_with("evolen\t20\t"));

    let out = d.join("regions.tsv");
    let mut args = vec!["eval", "regions", "--tokenizer", p(&tok), "--regions", p(&f.regions), "--out", p(&out)];
    args.extend(genome);
    ok(&args);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 5);
    assert_eq!(fs::read_to_string(d.join("regions.jsd.tsv")).unwrap().lines().count(), 7);

    let out = d.join("phylop.tsv");
    let mut args = vec!["eval", "phylop", "--tokenizer", p(&tok), "--out", p(&out), "--label", "mine"];
    args.extend(genome);
    ok(&args);
    let t = fs::read_to_string(&out).unwrap();
    assert_eq!(t.lines().count(), 4);
    assert!(t.lines().nth(1).unwrap().starts_with("mine\tconserved\t"));

    let out = d.join("enrichment.tsv");
    let mut args = vec!["eval", "enrichment", "--tokenizer", p(&tok), "--regions", p(&f.regions), "--out", p(&out)];
    args.extend(genome);
    ok(&args);
    let t = fs::read_to_string(&out).unwrap();
    assert_eq!(t.lines().count(), 13);
    assert!(t.contains("evolen\tintron\tneutral\t"));
    let bg = t.lines().find(|l| l.contains("\tintron\tneutral\t")).unwrap();
    assert!(bg.ends_with("\t0.0000"), "{bg}");
    assert_eq!(fs::read_to_string(d.join("enrichment.separation.tsv")).unwrap().lines().count(), 5);

    // A tampered tokenizer is refused when a manifest is given.
    let mut bytes = fs::read(&tok).unwrap();
    bytes.push(b' ');
    let bad = d.join("run/tokenizer_edit.json");
    fs::write(&bad, &bytes).unwrap();
    fs::copy(&bad, &tok).unwrap();
    let out = evolen(&["eval", "motifs", "--tokenizer", p(&tok), "--manifest", p(&manifest), "--meme", p(&f.motifs), "--out", p(&d.join("x.tsv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));
}

#[test]
fn pipeline_config_with_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = synthetic(33, &small());
    write_inputs(d, &s);
    let cfg = r#"{
        "fasta": "genome.fa",
        "phylop": "phylop.bedGraph",
        "regions": "regions.bed",
        "motifs": "motifs.meme",
        "output_dir": "out",
        "vocab_size": 128,
        "variant": "no_priority"
    }"#;
    fs::write(d.join("config.json"), cfg).unwrap();
    ok(&["pipeline", "--config", p(&d.join("config.json")), "--threads", "2"]);
    let m = Manifest::load(&d.join("out").join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    assert_eq!(m.variant, Variant::NoPriority);
    for a in &m.artifacts {
        let bytes = fs::read(d.join("out").join(&a.name)).unwrap();
        assert_eq!(evolen::pipeline::sha256_hex(&bytes), a.sha256, "{}", a.name);
    }
    for name in ["tokenizer.json", "merge_report.json", "eval_summary.json", "enrichment.tsv", "motifs.tsv"] {
        assert!(m.artifact(name).is_some(), "{name} missing");
    }
    let pools = parse_fasta(fs::File::open(d.join("out/conserved.fa")).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(pools.len(), s.conserved_bins.len());
}

#[test]
fn failed_stage_marks_manifest_stale() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let s = synthetic(34, &small());
    let f = write_inputs(d, &s);
    // Every motif is wider than the consensus limit, so the motif eval fails.
    let long = common::one_hot_pwm("long", &"ACGT".repeat(5));
    evolen::genome_io::write_meme(fs::File::create(&f.motifs).unwrap(), &[long]).unwrap();

    let mut cfg = PipelineConfig::new(&f.fasta, d.join("out"));
    cfg.phylop = Some(f.phylop.clone());
    cfg.motifs = Some(f.motifs.clone());
    cfg.vocab_size = 64;
    let err = run_pipeline(&cfg).err().unwrap();
    assert_eq!(err.stage_name(), Some("eval"));
    let m = Manifest::load(&d.join("out").join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.status, RunStatus::Stale);
    assert_eq!(m.failed_stage.as_deref(), Some("eval"));
    assert!(m.artifact("tokenizer.json").is_some());
    assert!(m.artifact("eval_summary.json").is_none());

    // The CLI reports the failure with a non-zero exit.
    let cfg_path = d.join("c.json");
    fs::write(&cfg_path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let out = evolen(&["pipeline", "--config", p(&cfg_path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval"));
}

#[test]
fn invalid_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("bad.fa"), ">a\nACGU\n").unwrap();
    fs::write(d.join("t.bg"), "a\t0\t4\t1\n").unwrap();
    let out = evolen(&["stratify", "--fasta", p(&d.join("bad.fa")), "--phylop", p(&d.join("t.bg")), "--out-dir", p(d)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.fa") && err.contains('2'), "{err}");

    let cfg = d.join("c.json");
    fs::write(&cfg, r#"{"fasta": "x.fa", "output_dir": "o", "variant": "full"}"#).unwrap();
    let out = evolen(&["pipeline", "--config", p(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("phylop"));
}
