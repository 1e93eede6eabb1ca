use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use attrex::eval::{self, EvalReport, OracleMode, TripletSet};
use attrex::io::{read_jsonl, write_jsonl, write_records};
use attrex::supervision::{
    build_labels, predicate_vocabulary, synth_corpus, DialogueRecord,
    EntailmentScorer, FileScorer, FillerSplit, LabeledUtterance, LexicalScorer, PersonaRecord,
    SubstringScorer, SynthConfig,
};
use attrex::train::{build_lexicon, examples_from_corpus, EpochMetrics, Trainer};
use attrex::{Checkpoint, Extractor, PredicateVocabulary, TripletText};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunSettings;
use crate::failure::Failure;
use crate::{
    BuildDataArgs, EvaluateArgs, ExtractArgs, OracleArg, ScorerArg, SplitArg, SynthArgs, TrainArgs,
};

type CmdResult = Result<(), Failure>;

fn meta(command: &str, config: Value, seed: Option<u64>) -> Value {
    json!({
        "tool": "attrex",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "seed": seed,
    })
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<(Option<Value>, Vec<LabeledUtterance>), Failure> {
    Ok(read_jsonl(path)?)
}

/// Predicates named in a corpus meta header, if any.
fn meta_predicates(meta: &Option<Value>) -> Result<Option<PredicateVocabulary>, Failure> {
    match meta.as_ref().and_then(|m| m.get("predicates")) {
        None => Ok(None),
        Some(v) => {
            let names: Vec<String> = serde_json::from_value(v.clone())
                .map_err(|e| Failure::data(format!("corpus meta predicates: {e}")))?;
            Ok(Some(PredicateVocabulary::new(names)?))
        }
    }
}

fn same_predicates(a: &PredicateVocabulary, b: &PredicateVocabulary) -> bool {
    let names = |p: &PredicateVocabulary| p.names().iter().cloned().collect::<BTreeSet<_>>();
    names(a) == names(b)
}

fn corpus_predicates(
    meta: &Option<Value>,
    corpus: &[LabeledUtterance],
) -> Result<PredicateVocabulary, Failure> {
    if let Some(p) = meta_predicates(meta)? {
        return Ok(p);
    }
    let names: BTreeSet<&str> = corpus
        .iter()
        .flat_map(|u| u.triplets.iter().map(|t| t.predicate.trim()))
        .collect();
    if names.is_empty() {
        return Err(Failure::data("corpus names no predicates"));
    }
    Ok(PredicateVocabulary::new(names)?)
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    let config = SynthConfig {
        seed: a.seed,
        dialogues: a.dialogues,
        user_turns: a.user_turns,
        predicates: a.predicates,
        persona_size: a.persona_size,
        none_ratio: a.none_ratio,
        multi_ratio: a.multi_ratio,
        split: match a.split {
            SplitArg::Train => FillerSplit::Train,
            SplitArg::HeldOut => FillerSplit::HeldOut,
        },
        ..SynthConfig::default()
    };
    let corpus = synth_corpus(&config)?;
    create_dir(&a.out_dir)?;
    let m = meta("synth", serde_json::to_value(&config).expect("config"), Some(a.seed));
    let mut gold_meta = m.clone();
    gold_meta["predicates"] = json!(corpus.predicates);
    write_jsonl(&a.out_dir.join("dialogues.jsonl"), Some(&m), &corpus.dialogues)?;
    write_jsonl(&a.out_dir.join("personas.jsonl"), Some(&m), &corpus.personas)?;
    write_jsonl(&a.out_dir.join("gold.jsonl"), Some(&gold_meta), &corpus.gold)?;
    log::info!(
        "{} dialogues, {} user turns, {} persona sentences",
        corpus.dialogues.len(),
        corpus.gold.len(),
        corpus.personas.len()
    );
    Ok(())
}

pub fn build_data(a: &BuildDataArgs) -> CmdResult {
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(Failure::usage(format!("--threshold {} must lie in (0, 1)", a.threshold)));
    }
    let (_, dialogues): (_, Vec<DialogueRecord>) = read_jsonl(&a.dialogues)?;
    let (_, personas): (_, Vec<PersonaRecord>) = read_jsonl(&a.personas)?;
    if dialogues.is_empty() {
        log::warn!("{}: no dialogues", a.dialogues.display());
    }
    let mut file_scorer = None;
    let substring;
    let lexical = LexicalScorer::default();
    let scorer: &dyn EntailmentScorer = match a.scorer {
        ScorerArg::Lexical => &lexical,
        ScorerArg::Substring => {
            substring = SubstringScorer::new(&personas);
            &substring
        }
        ScorerArg::File => {
            let path = a
                .scores
                .as_ref()
                .ok_or_else(|| Failure::usage("--scorer file needs --scores"))?;
            file_scorer.insert(FileScorer::load(path)?)
        }
    };
    let (corpus, report) = build_labels(&dialogues, &personas, scorer, a.threshold)?;
    if report.skipped_dialogues > 0 {
        log::warn!("skipped {} dialogues", report.skipped_dialogues);
    }
    let predicates: Vec<String> = if personas.is_empty() {
        Vec::new()
    } else {
        predicate_vocabulary(&personas)?.names().to_vec()
    };
    let config = json!({
        "dialogues": a.dialogues,
        "personas": a.personas,
        "scorer": format!("{:?}", a.scorer).to_lowercase(),
        "scores": a.scores,
        "threshold": a.threshold,
    });
    let mut m = meta("build-data", config, None);
    m["predicates"] = json!(predicates);
    write_jsonl(&a.out, Some(&m), &corpus)?;
    let mut report_value = json!({ "meta": m, "report": report });
    if let Some(f) = &file_scorer {
        report_value["report"]["missing_scores"] = json!(f.missing_lookups());
    }
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    write_json(&report_path, &report_value)?;
    eprintln!(
        "{} user utterances: {} labeled, {} unlabeled, {} triplets; {} dialogues skipped",
        report.user_utterances, report.labeled, report.unlabeled, report.triplets, report.skipped_dialogues
    );
    Ok(())
}

fn train_flags(a: &TrainArgs) -> Result<Vec<(String, String)>, Failure> {
    let mut flags = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k.to_string(), v));
        }
    };
    push("max_epochs", a.epochs.map(|v| v.to_string()));
    push("seed", a.seed.map(|v| v.to_string()));
    push("batch_size", a.batch_size.map(|v| v.to_string()));
    push("lr_start", a.lr_start.map(|v| v.to_string()));
    push("lr_end", a.lr_end.map(|v| v.to_string()));
    push("dropout", a.dropout.map(|v| v.to_string()));
    push("word_dropout", a.word_dropout.map(|v| v.to_string()));
    push("hidden", a.hidden.map(|v| v.to_string()));
    push("hops", a.hops.map(|v| v.to_string()));
    push("word_dim", a.word_dim.map(|v| v.to_string()));
    push("char_dim", a.char_dim.map(|v| v.to_string()));
    push("lambda_loss", a.lambda.map(|v| v.to_string()));
    push("freeze_embeddings", a.freeze_embeddings.then(|| "true".into()));
    push("record_timing", a.timing.then(|| "true".into()));
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--set {s}: expected KEY=VALUE")))?;
        flags.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(flags)
}

fn checkpoint_name(epoch: usize) -> String {
    format!("checkpoint-{epoch:03}.json")
}

fn write_metrics(path: &Path, meta: &Value, history: &[EpochMetrics]) -> CmdResult {
    Ok(write_jsonl(path, Some(meta), history)?)
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let flags = train_flags(a)?;
    let (corpus_meta, corpus) = read_corpus(&a.train)?;

    let (mut model, mut settings, mut trainer, mut history) = match &a.resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            let record = ckpt
                .optimizer
                .clone()
                .ok_or_else(|| Failure::data(format!("{}: no optimizer state", path.display())))?;
            let base: RunSettings = serde_json::from_value(ckpt.meta["config"]["settings"].clone())
                .map_err(|e| Failure::data(format!("{}: run settings: {e}", path.display())))?;
            let settings = RunSettings::resolve(base.clone(), a.config.as_deref(), &flags)?;
            let mut expected = base.model.clone();
            expected.predicates = settings.model.predicates;
            if settings.model != expected || settings.min_freq != base.min_freq {
                return Err(Failure::usage("model settings cannot change on resume"));
            }
            let history: Vec<EpochMetrics> = serde_json::from_value(ckpt.meta["history"].clone())
                .map_err(|e| Failure::data(format!("{}: history: {e}", path.display())))?;
            let model: Extractor = ckpt.to_model()?;
            let trainer = Trainer::resume(settings.train.clone(), &model, &record)?;
            (model, settings, trainer, history)
        }
        None => {
            let settings = RunSettings::resolve(RunSettings::default(), a.config.as_deref(), &flags)?;
            let predicates = corpus_predicates(&corpus_meta, &corpus)?;
            let lexicon = build_lexicon(&corpus, settings.min_freq);
            let mut rng = ChaCha8Rng::seed_from_u64(settings.train.seed);
            rng.set_stream(u64::MAX);
            let mut model = Extractor::new(settings.model.clone(), lexicon, predicates, &mut rng)?;
            if let Some(path) = &a.embeddings {
                let n = model
                    .params
                    .embedding
                    .load_pretrained(path, model.lexicon.vocab())?;
                log::info!("loaded {n} pretrained vectors");
            }
            let trainer = Trainer::new(settings.train.clone(), &model)?;
            (model, settings, trainer, Vec::new())
        }
    };
    settings.model = model.config.clone();
    if let Some(p) = meta_predicates(&corpus_meta)? {
        if !same_predicates(&p, &model.predicates) {
            return Err(Failure::data("corpus predicates differ from the model's"));
        }
    }
    let (examples, prep) = examples_from_corpus(&corpus, &model.lexicon, &model.predicates)?;
    if prep.empty_utterances > 0 {
        log::warn!("skipped {} empty utterances", prep.empty_utterances);
    }
    if prep.duplicate_predicates > 0 {
        log::warn!("dropped {} triplets repeating a predicate", prep.duplicate_predicates);
    }
    if examples.is_empty() {
        return Err(Failure::data("training corpus is empty"));
    }

    create_dir(&a.out_dir)?;
    let run_config = json!({
        "train": a.train,
        "embeddings": a.embeddings,
        "settings": settings,
    });
    let run_meta = meta("train", run_config, Some(settings.train.seed));
    let save = |model: &Extractor, trainer: &Trainer<f64>, history: &[EpochMetrics]| -> CmdResult {
        let mut ckpt = Checkpoint::from_model(model);
        ckpt.optimizer = Some(trainer.to_record());
        ckpt.meta = run_meta.clone();
        ckpt.meta["history"] = json!(history);
        let epoch = trainer.epochs_completed;
        ckpt.save(&a.out_dir.join(checkpoint_name(epoch)))?;
        ckpt.save(&a.out_dir.join("last.json"))?;
        write_metrics(&a.out_dir.join("metrics.jsonl"), &run_meta, history)
    };
    if a.resume.is_none() {
        save(&model, &trainer, &history)?;
    }
    let start = trainer.epochs_completed;
    let end = match a.stop_after {
        Some(n) => settings.train.max_epochs.min(start + n),
        None => settings.train.max_epochs,
    };
    for epoch in start..end {
        let m = trainer.train_epoch(&mut model, &examples, epoch)?;
        log::info!(
            "epoch {} loss {:.5} (predicate {:.5}, entity {:.5}) lr {:.2e}",
            m.epoch,
            m.total_loss,
            m.predicate_loss,
            m.entity_loss,
            m.lr
        );
        history.push(m);
        save(&model, &trainer, &history)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ExtractRecord<'a> {
    utterance: &'a str,
    triplets: Vec<TripletText>,
}

fn load_model(path: &Path) -> Result<(Extractor, Value), Failure> {
    let ckpt = Checkpoint::load(path)?;
    let model = ckpt.to_model()?;
    Ok((model, ckpt.meta))
}

pub fn extract(a: &ExtractArgs) -> CmdResult {
    let (model, ckpt_meta) = load_model(&a.checkpoint)?;
    let lines: Vec<String> = match (&a.text, &a.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
            .lines()
            .map(str::to_string)
            .collect(),
        (None, None) => return Err(Failure::usage("give --text or --input")),
    };
    let mut records = Vec::with_capacity(lines.len());
    for line in &lines {
        let ex = model.extract(line)?;
        records.push(ExtractRecord {
            utterance: line,
            triplets: ex.triplets.iter().map(|t| t.to_text(&model.predicates)).collect(),
        });
    }
    match &a.out {
        Some(path) => {
            let config = json!({ "checkpoint": a.checkpoint, "input": a.input, "text": a.text });
            let m = meta("extract", config, ckpt_meta.get("seed").and_then(Value::as_u64));
            write_jsonl(path, Some(&m), &records)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_records(&mut lock, None, &records)
                .and_then(|_| lock.flush())
                .map_err(|e| Failure::data(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn prediction_sets(
    path: &Path,
    test: &[LabeledUtterance],
) -> Result<Vec<TripletSet>, Failure> {
    let (_, preds): (_, Vec<LabeledUtterance>) = read_jsonl(path)?;
    if preds.len() != test.len() {
        return Err(Failure::data(format!(
            "{} predictions for {} test utterances",
            preds.len(),
            test.len()
        )));
    }
    for (i, (p, g)) in preds.iter().zip(test).enumerate() {
        if p.utterance.trim() != g.utterance.trim() {
            return Err(Failure::data(format!("prediction {} is for a different utterance", i + 1)));
        }
    }
    Ok(preds.iter().map(|u| eval::triplet_set(&u.triplets)).collect())
}

pub fn evaluate(a: &EvaluateArgs) -> CmdResult {
    let (test_meta, test) = read_corpus(&a.test)?;
    let model = match &a.checkpoint {
        Some(p) => Some(load_model(p)?.0),
        None => None,
    };
    let predicates = match &model {
        Some(m) => m.predicates.clone(),
        None => corpus_predicates(&test_meta, &test)?,
    };
    if let Some(p) = meta_predicates(&test_meta)? {
        if !same_predicates(&p, &predicates) {
            return Err(Failure::data(format!(
                "test corpus predicates {:?} differ from the model's {:?}",
                p.names(),
                predicates.names()
            )));
        }
    }
    let gold = eval::gold_sets(&test, &predicates)?;
    let end_to_end: EvalReport = match (&a.predictions, &model) {
        (Some(path), _) => eval::evaluate(&prediction_sets(path, &test)?, &gold, &predicates)?,
        (None, Some(m)) => eval::evaluate_model(m, &test)?,
        (None, None) => return Err(Failure::usage("give --checkpoint or --predictions")),
    };
    println!("end-to-end\n{}", end_to_end.to_table());
    let mut out = json!({ "end_to_end": end_to_end });
    if let Some(mode) = a.oracle {
        let m = model
            .as_ref()
            .ok_or_else(|| Failure::usage("--oracle needs --checkpoint"))?;
        let mode = match mode {
            OracleArg::Classifier => OracleMode::Classifier,
            OracleArg::Generator => OracleMode::Generator,
        };
        let report = eval::oracle_eval(m, &test, mode)?;
        println!("oracle {mode:?}\n{}", report.to_table());
        if mode == OracleMode::Generator && report.f1 < end_to_end.f1 {
            log::warn!(
                "oracle generator F1 {:.4} is below end-to-end F1 {:.4}",
                report.f1,
                end_to_end.f1
            );
        }
        out["oracle"] = json!({ "mode": mode, "report": report });
    }
    if let Some(path) = &a.out {
        let config = json!({
            "checkpoint": a.checkpoint,
            "test": a.test,
            "predictions": a.predictions,
            "oracle": a.oracle.map(|o| format!("{o:?}").to_lowercase()),
        });
        out["meta"] = meta("evaluate", config, None);
        write_json(path, &out)?;
    }
    Ok(())
}
