use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mtkit(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtkit"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .env_remove("MTKIT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn async_eight_workers_near_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = mtkit(
        dir.path(),
        &["optlab", "simulate", "--workers", "8", "--cluster-mode", "async", "--calibrate-single", "22260s"],
    );
    ok(&out);
    let report = json(&dir.path().join("optlab-simulate.json"));
    let t = report["first_epoch_seconds"].as_f64().unwrap();
    assert!((t - 3360.0).abs() / 3360.0 < 0.15, "{t}");
    assert!(dir.path().join("trace.csv").exists());
    let manifest = json(&dir.path().join("optlab-simulate.manifest.json"));
    assert_eq!(manifest["config"]["Simulate"]["warmup_iters"], 6000);
}

#[test]
fn identical_files_score_100() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("hyp.txt");
    fs::write(&text, "the hotel is close to the beach .\nfree parking is available on site .\n").unwrap();
    let t = text.to_str().unwrap();
    let out = mtkit(&dir.path().join("out"), &["bleu", "corpus", "--candidates", t, "--references", t]);
    assert!(ok(&out).starts_with("BLEU = 100.00"));
    let report = json(&dir.path().join("out/bleu-corpus.json"));
    assert_eq!(report["score"], 100.0);
    let manifest = json(&dir.path().join("out/bleu-corpus.manifest.json"));
    assert_eq!(manifest["inputs"][t].as_str().unwrap().len(), 64);
}

#[test]
fn zero_merges_give_characters() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("c.en"), dir.path().join("c.de"));
    fs::write(&src, "Hello world.\n").unwrap();
    fs::write(&tgt, "Hallo Welt.\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&mtkit(
        &out_dir,
        &["bpe", "train", "--merges", "0", "--source", src.to_str().unwrap(), "--target", tgt.to_str().unwrap()],
    ));
    let model = out_dir.join("bpe.model");
    ok(&mtkit(
        &out_dir,
        &["bpe", "apply", "--model", model.to_str().unwrap(), "--input", src.to_str().unwrap()],
    ));
    let tokens = fs::read_to_string(out_dir.join("tokens.txt")).unwrap();
    assert_eq!(tokens.trim(), "h■|C e■|L l■|L l■|L o|L w■|L o■|L r■|L l■|L d|L ■.|N");
    let tok_path = out_dir.join("tokens.txt");
    ok(&mtkit(&out_dir, &["bpe", "detok", "--input", tok_path.to_str().unwrap()]));
    assert_eq!(fs::read_to_string(out_dir.join("detok.txt")).unwrap(), "Hello world.\n");
}

#[test]
fn separate_mode_writes_two_models() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("c.en"), dir.path().join("c.de"));
    fs::write(&src, "low lower lowest\nnew newer\n").unwrap();
    fs::write(&tgt, "tief tiefer\nneu neuer\n").unwrap();
    ok(&mtkit(
        dir.path(),
        &[
            "bpe", "train", "--merges", "5", "--mode", "separate", "--source", src.to_str().unwrap(), "--target",
            tgt.to_str().unwrap(),
        ],
    ));
    assert!(dir.path().join("bpe.en.model").exists());
    assert!(dir.path().join("bpe.de.model").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = mtkit(dir.path(), &["bleu", "corpus", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&usage.stderr);
    assert!(stderr.contains("--candidates"), "{stderr}");
    let missing = mtkit(dir.path(), &["bleu", "corpus", "--candidates", "/nonexistent", "--references", "/nonexistent"]);
    assert_eq!(missing.status.code(), Some(1));
    let bad_sizes = dir.path().join("a.txt");
    fs::write(&bad_sizes, "x\ny\n").unwrap();
    let p = bad_sizes.to_str().unwrap();
    let domain = mtkit(dir.path(), &["corpus", "subsample", "--source", p, "--target", p, "--sizes", "2,1"]);
    assert_eq!(domain.status.code(), Some(1));
}

#[test]
fn split_is_reproducible_from_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("c.en"), dir.path().join("c.de"));
    fs::write(&src, (0..20).map(|i| format!("sentence {i}\n")).collect::<String>()).unwrap();
    fs::write(&tgt, (0..20).map(|i| format!("Satz {i}\n")).collect::<String>()).unwrap();
    let args = ["--seed", "9", "corpus", "split", "--validation", "5", "--source", src.to_str().unwrap(), "--target", tgt.to_str().unwrap()];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&mtkit(&a, &args));
    let manifest = json(&a.join("corpus-split.manifest.json"));
    let argv: Vec<String> = manifest["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    // replay the recorded command line into a second directory
    let mut replay: Vec<String> = argv[1..].to_vec();
    let at = replay.iter().position(|a| a == "--out-dir").unwrap();
    replay[at + 1] = b.to_str().unwrap().to_string();
    let out = Command::new(env!("CARGO_BIN_EXE_mtkit")).args(&replay).output().unwrap();
    ok(&out);
    for f in ["train.en", "train.de", "valid.en", "valid.de", "valid.ids", "corpus-split.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.join("valid.ids")).unwrap().lines().count(), 5);
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn entity_mask_and_unmask() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.en");
    fs::write(&input, "The station is a 55-minute drive and 2.5 km from the beach.\n").unwrap();
    ok(&mtkit(dir.path(), &["ner", "mask", "--input", input.to_str().unwrap(), "--locale", "en"]));
    let masked = fs::read_to_string(dir.path().join("masked.txt")).unwrap();
    assert!(masked.contains("⟦DUR_0⟧") && masked.contains("⟦DIST_1⟧"), "{masked}");
    let translated = dir.path().join("mt.de");
    fs::write(&translated, "Der Bahnhof ist eine ⟦DUR_0⟧ Fahrt und ⟦DIST_1⟧ vom Strand entfernt.\n").unwrap();
    let maps = dir.path().join("placeholders.jsonl");
    ok(&mtkit(
        dir.path(),
        &["ner", "unmask", "--input", translated.to_str().unwrap(), "--maps", maps.to_str().unwrap(), "--locale", "de"],
    ));
    let text = fs::read_to_string(dir.path().join("unmasked.txt")).unwrap();
    assert!(text.contains("55") && text.contains("2,5 km"), "{text}");
}

#[test]
fn correlation_flags_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let mut sheet = String::from("sentence_id,rater_id,system,adequacy,fluency\n");
    for (system, score) in [("a", 2), ("b", 3), ("c", 4)] {
        for s in 0..3 {
            for r in ["r1", "r2"] {
                sheet.push_str(&format!("s{s},{r},{system},{score},{score}\n"));
            }
        }
    }
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, sheet).unwrap();
    let bleu = dir.path().join("bleu.csv");
    fs::write(&bleu, "system,bleu\na,30\nb,35\nc,33\n").unwrap();
    let out = ok(&mtkit(
        dir.path(),
        &["eval", "correlate", "--scores", scores.to_str().unwrap(), "--bleu", bleu.to_str().unwrap()],
    ));
    assert!(out.contains("disagreement"), "{out}");
    let plot = fs::read_to_string(dir.path().join("bleu-vs-human.csv")).unwrap();
    assert!(plot.starts_with("system,bleu,adequacy,fluency"), "{plot}");
}

#[test]
fn bsf_pipeline_on_synthetic_data() {
    use mtkit::bsf::{parking_corpus, parking_lexicon, SyntheticConfig};

    let dir = tempfile::tempdir().unwrap();
    let data = parking_corpus(&SyntheticConfig::default());
    let write_tsv = |name: &str, rows: Vec<(String, String)>| {
        let path = dir.path().join(name);
        fs::write(&path, rows.iter().map(|(t, l)| format!("{t}\t{l}\n")).collect::<String>()).unwrap();
        path
    };
    let mut paths = Vec::new();
    for lang in ["en", "de"] {
        let train = write_tsv(&format!("train.{lang}.tsv"), data.training(lang));
        let lex = dir.path().join(format!("lexicon.{lang}.txt"));
        fs::write(&lex, parking_lexicon(lang).approved.join("\n")).unwrap();
        let out = dir.path().join(format!("model-{lang}"));
        ok(&mtkit(&out, &["bsf", "train", "--data", train.to_str().unwrap()]));
        let heldout = write_tsv(&format!("heldout.{lang}.tsv"), data.heldout(lang));
        let model = out.join("classifier.model");
        let table = ok(&mtkit(&out, &["bsf", "eval", "--model", model.to_str().unwrap(), "--data", heldout.to_str().unwrap()]));
        assert!(table.contains("macro"), "{table}");
        paths.push((model, lex));
    }
    let pairs = dir.path().join("pairs.tsv");
    fs::write(
        &pairs,
        data.bilingual().iter().map(|p| format!("{}\t{}\t{}\n", p.id, p.source, p.target)).collect::<String>(),
    )
    .unwrap();
    let out = dir.path().join("report");
    ok(&mtkit(
        &out,
        &[
            "bsf", "report", "--pairs", pairs.to_str().unwrap(),
            "--source-lexicon", paths[0].1.to_str().unwrap(),
            "--target-lexicon", paths[1].1.to_str().unwrap(),
            "--source-model", paths[0].0.to_str().unwrap(),
            "--target-model", paths[1].0.to_str().unwrap(),
        ],
    ));
    let flagged = fs::read_to_string(out.join("flagged.tsv")).unwrap();
    for id in data.planted_flips() {
        assert!(flagged.contains(&format!("{id}\t")), "{id} not flagged");
    }

    let text = dir.path().join("mono.en");
    fs::write(&text, data.monolingual("en").iter().map(|s| s.join(" ") + "\n").collect::<String>()).unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "parking\n").unwrap();
    let emb_dir = dir.path().join("emb");
    ok(&mtkit(&emb_dir, &["bsf", "embed", "--input", text.to_str().unwrap(), "--dim", "16", "--epochs", "2"]));
    let emb = emb_dir.join("embeddings.txt");
    ok(&mtkit(&emb_dir, &["bsf", "expand", "--embeddings", emb.to_str().unwrap(), "--seeds", seeds.to_str().unwrap(), "--k", "5"]));
    let candidates = fs::read_to_string(emb_dir.join("candidates.txt")).unwrap();
    assert_eq!(candidates.lines().filter(|l| !l.starts_with('#')).count(), 5);
    ok(&mtkit(&emb_dir, &["bsf", "match", "--input", text.to_str().unwrap(), "--lexicon", seeds.to_str().unwrap()]));
    assert!(!fs::read_to_string(emb_dir.join("matched.txt")).unwrap().is_empty());
}
