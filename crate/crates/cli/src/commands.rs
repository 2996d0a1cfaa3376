use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tqa_core::dataset::{parse_dataset_tsv, ExampleRecord};
use tqa_core::eval::{
    apply_corrections, breakdown_by, evaluate_run, AnswerMap, CorrectionImpact, CorrectionsOverlay, EvalReport,
    EvalSummary, Metric, RunRates,
};
use tqa_core::generation::{
    build_training_set, BuildOptions, ExampleOutcome, InstructionConfig, LlmClient, RunLog, TrainingRecord,
};
use tqa_core::io::{load_table, read_answer_map, read_jsonl, read_text, to_jsonl, write_atomic, write_jsonl, AnswerLine};
use tqa_core::program::TraceEntry;
use tqa_core::selector::{
    build_selector_dataset, select_answer, selection_error_report, CandidatePair, FixedScorer, HeuristicScorer,
    Preference, PromptedScorer, SelectorScorer,
};
use tqa_core::table::{write_table, NormalizationConfig, TableFormat};
use tqa_core::{execute as run_program, parse_program, AnswerValue, Table};

use crate::config::{require_dir, RunConfig};
use crate::{EvaluateArgs, ExecuteArgs, GenerateArgs, NormalizeArgs, PipelineArgs, ScorerKind, SelectArgs};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn sibling_md(path: &Path) -> PathBuf {
    path.with_extension("md")
}

fn read_dataset(path: &Path) -> Result<Vec<ExampleRecord>> {
    parse_dataset_tsv(&read_text(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Loads each distinct table once, normalized.
struct Tables<'a> {
    dir: &'a Path,
    cfg: NormalizationConfig,
    cache: HashMap<String, Table>,
}

impl<'a> Tables<'a> {
    fn new(dir: &'a Path, cfg: NormalizationConfig) -> Result<Self> {
        require_dir(dir)?;
        Ok(Tables {
            dir,
            cfg,
            cache: HashMap::new(),
        })
    }

    fn get(&mut self, table_ref: &str) -> Result<&Table> {
        if !self.cache.contains_key(table_ref) {
            let t = load_table(&self.dir.join(table_ref), &self.cfg)?;
            self.cache.insert(table_ref.to_owned(), t);
        }
        Ok(&self.cache[table_ref])
    }

    fn pair_with(&mut self, examples: &[ExampleRecord]) -> Result<Vec<(ExampleRecord, Table)>> {
        examples
            .iter()
            .map(|e| Ok((e.clone(), self.get(&e.table_ref)?.clone())))
            .collect()
    }
}

fn table_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if e.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            table_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

pub fn normalize(a: NormalizeArgs) -> Result<()> {
    let cfg = a.flags.config();
    let jobs: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        let mut files = Vec::new();
        table_files(&a.input, &mut files)?;
        files
            .into_iter()
            .map(|f| {
                let rel = f.strip_prefix(&a.input).expect("listed under input").to_path_buf();
                (f, a.out.join(rel))
            })
            .collect()
    } else {
        vec![(a.input.clone(), a.out.clone())]
    };
    for (src, dst) in &jobs {
        let t = load_table(src, &cfg)?;
        create_parent(dst)?;
        write_atomic(dst, write_table(&t, TableFormat::from_path(dst)).as_bytes())?;
    }
    eprintln!("normalized {} table(s)", jobs.len());
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct ProgramLine {
    id: String,
    table_ref: String,
    program: String,
}

#[derive(Serialize)]
struct ExecLine {
    id: String,
    values: AnswerValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceEntry>>,
}

pub fn execute(a: ExecuteArgs) -> Result<()> {
    let programs: Vec<ProgramLine> = read_jsonl(&a.programs)?;
    let mut seen = BTreeSet::new();
    if let Some(p) = programs.iter().find(|p| !seen.insert(p.id.as_str())) {
        bail!("{}: duplicate id {:?}", a.programs.display(), p.id);
    }
    let mut tables = Tables::new(&a.tables, a.normalize.config())?;
    let mut lines = Vec::with_capacity(programs.len());
    let mut failures = 0;
    for p in &programs {
        let t = tables.get(&p.table_ref)?;
        let outcome = parse_program(&p.program)
            .map_err(|e| format!("parse error: {e}"))
            .and_then(|prog| run_program(&prog, t).map_err(|e| format!("execution error: {e}")));
        lines.push(match outcome {
            Ok(r) => ExecLine {
                id: p.id.clone(),
                values: r.answer,
                error: None,
                trace: a.trace.then_some(r.trace),
            },
            Err(e) => {
                failures += 1;
                ExecLine {
                    id: p.id.clone(),
                    values: AnswerValue::default(),
                    error: Some(e),
                    trace: None,
                }
            }
        });
    }
    create_parent(&a.out)?;
    write_jsonl(&a.out, &lines)?;
    eprintln!("executed {} program(s), {failures} with errors", lines.len());
    Ok(())
}

/// Scores `preds` (and optionally a second run) against `golds`, applying
/// the overlay first when there is one.
fn build_report(
    preds: &AnswerMap,
    preds_b: Option<&AnswerMap>,
    golds: &AnswerMap,
    overlay: Option<&CorrectionsOverlay>,
    metric: Metric,
) -> Result<EvalReport> {
    let (primary, corrections, golds): (EvalSummary, _, AnswerMap) = match overlay {
        Some(o) => {
            let (impact, after) = CorrectionImpact::measure(preds, golds, o).context("scoring predictions")?;
            (after, Some(impact), apply_corrections(golds, o).0)
        }
        None => (evaluate_run(preds, golds).context("scoring predictions")?, None, golds.clone()),
    };
    let mut warnings = primary.warnings.clone();
    if let Some(c) = &corrections {
        if !c.unknown_ids.is_empty() {
            warnings.push(format!("corrections for unknown ids ignored: {}", c.unknown_ids.join(", ")));
        }
    }
    let (secondary, breakdown) = match preds_b {
        Some(pb) => {
            let b = evaluate_run(pb, &golds).context("scoring the second run")?;
            warnings.extend(b.warnings.iter().map(|w| format!("second run: {w}")));
            let cells = breakdown_by(&primary.records, &b.records, metric)?;
            (Some(RunRates::from(&b)), Some(cells))
        }
        None => (None, None),
    };
    Ok(EvalReport {
        metric,
        primary: RunRates::from(&primary),
        corrections,
        secondary,
        breakdown,
        warnings,
    })
}

fn write_report(report: &EvalReport, out: Option<&Path>) -> Result<()> {
    let md = report.to_markdown();
    if let Some(path) = out {
        create_parent(path)?;
        write_atomic(path, format!("{}\n", report.to_json()).as_bytes())?;
        write_atomic(&sibling_md(path), md.as_bytes())?;
    }
    print!("{md}");
    Ok(())
}

fn read_overlay(path: Option<&PathBuf>) -> Result<Option<CorrectionsOverlay>> {
    Ok(match path {
        Some(p) => Some(CorrectionsOverlay(read_answer_map(p)?)),
        None => None,
    })
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let preds = read_answer_map(&a.pred)?;
    let preds_b = a.pred_b.as_deref().map(read_answer_map).transpose()?;
    let golds: AnswerMap = match (&a.gold, &a.dataset) {
        (Some(g), _) => read_answer_map(g)?,
        (None, Some(d)) => read_dataset(d)?.into_iter().map(|e| (e.id, e.gold)).collect(),
        (None, None) => bail!("no golds given (--gold or --dataset)"),
    };
    let overlay = read_overlay(a.corrections.as_ref())?;
    let report = build_report(&preds, preds_b.as_ref(), &golds, overlay.as_ref(), a.metric)?;
    write_report(&report, a.out.as_deref())
}

pub fn select(a: SelectArgs) -> Result<()> {
    let pairs: Vec<CandidatePair> = read_jsonl(&a.pairs)?;
    let mut seen = BTreeSet::new();
    if let Some(p) = pairs.iter().find(|p| !seen.insert(p.id.as_str())) {
        bail!("{}: duplicate id {:?}", a.pairs.display(), p.id);
    }
    let scorer: Box<dyn SelectorScorer> = match a.scorer {
        ScorerKind::Heuristic => Box::new(HeuristicScorer),
        ScorerKind::Code => Box::new(FixedScorer(Preference::Code)),
        ScorerKind::E2e => Box::new(FixedScorer(Preference::E2e)),
        ScorerKind::Prompted => Box::new(PromptedScorer {
            client: a.model.client()?,
            max_table_rows: a.max_table_rows,
        }),
    };
    let mut tables = match &a.tables {
        Some(dir) => Some(Tables::new(dir, NormalizationConfig::default())?),
        None => None,
    };
    let mut selections = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let table = match tables.as_mut() {
            Some(ts) if !p.table_ref.is_empty() => Some(ts.get(&p.table_ref)?),
            _ => None,
        };
        selections.push(select_answer(scorer.as_ref(), p, table));
    }
    create_parent(&a.out)?;
    write_jsonl(&a.out, &selections)?;
    let failed = selections.iter().filter(|s| s.scorer_error.is_some()).count();
    eprintln!("selected {} answer(s), {failed} scorer failure(s)", selections.len());

    if let Some(gold_path) = &a.gold {
        let golds = read_answer_map(gold_path)?;
        let stats = selection_error_report(&selections, &pairs, &golds)?;
        if let Some(path) = &a.report {
            create_parent(path)?;
            write_json(path, &stats)?;
            write_atomic(&sibling_md(path), stats.to_markdown().as_bytes())?;
        }
        print!("{}", stats.to_markdown());
        if let Some(path) = &a.training_out {
            let ds = build_selector_dataset(&pairs, &golds)?;
            create_parent(path)?;
            write_jsonl(path, &ds.items)?;
            eprintln!("selector training set: {} kept, {} dropped", ds.items.len(), ds.dropped());
        }
    }
    Ok(())
}

fn run_log(outcomes: &[ExampleOutcome]) -> RunLog {
    outcomes.iter().fold(RunLog::default(), |acc, o| acc.merge(RunLog::of(o)))
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let examples = read_dataset(&a.dataset)?;
    let with_tables = Tables::new(&a.tables, a.normalize.config())?.pair_with(&examples)?;
    let client = a.model.client()?;
    let cfg = InstructionConfig {
        max_table_rows: a.max_table_rows,
        ..Default::default()
    };
    let opts = BuildOptions {
        max_refine_rounds: a.max_refine_rounds,
        concurrency: a.concurrency.max(1),
    };
    let run = build_training_set(&with_tables, client.as_ref(), &cfg, &opts);
    create_parent(&a.out)?;
    write_jsonl(&a.out, &run.records)?;
    if let Some(path) = &a.outcomes {
        create_parent(path)?;
        write_jsonl(path, &run.outcomes)?;
    }
    println!("{}", serde_json::to_string_pretty(&run.log)?);
    Ok(())
}

/// Files the pipeline writes under its output directory.
const TABLES_DIR: &str = "tables";
const OUTCOMES: &str = "outcomes.jsonl";
const TRAINING: &str = "training.jsonl";
const PROGRAMS: &str = "programs.jsonl";
const PREDICTIONS: &str = "predictions.jsonl";
const RUN_LOG: &str = "run_log.json";
const REPORT: &str = "report.json";

pub fn pipeline(a: PipelineArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&a)?;
    let examples = read_dataset(&cfg.dataset)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    // normalize: every referenced table, written under out/tables
    let mut tables = Tables::new(&cfg.tables, cfg.normalization)?;
    let refs: BTreeSet<&str> = examples.iter().map(|e| e.table_ref.as_str()).collect();
    for r in &refs {
        let dst = out.join(TABLES_DIR).join(r);
        create_parent(&dst)?;
        let text = write_table(tables.get(r)?, TableFormat::from_path(&dst));
        write_atomic(&dst, text.as_bytes())?;
    }

    let ids: BTreeSet<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    let mut done: BTreeMap<String, ExampleOutcome> = BTreeMap::new();
    let mut records: BTreeMap<String, TrainingRecord> = BTreeMap::new();
    if a.resume && out.join(OUTCOMES).is_file() {
        for o in read_jsonl::<ExampleOutcome>(&out.join(OUTCOMES))? {
            if ids.contains(o.id.as_str()) {
                done.insert(o.id.clone(), o);
            }
        }
        if out.join(TRAINING).is_file() {
            for r in read_jsonl::<TrainingRecord>(&out.join(TRAINING))? {
                if done.contains_key(&r.id) {
                    records.insert(r.id.clone(), r);
                }
            }
        }
        eprintln!("resuming: {} of {} examples already processed", done.len(), examples.len());
    }

    // generate, execute, refine
    let todo: Vec<ExampleRecord> = examples.iter().filter(|e| !done.contains_key(&e.id)).cloned().collect();
    if !todo.is_empty() {
        let client: Box<dyn LlmClient> = cfg.model.client()?;
        let opts = BuildOptions {
            max_refine_rounds: cfg.max_refine_rounds,
            concurrency: cfg.concurrency,
        };
        let run = build_training_set(&tables.pair_with(&todo)?, client.as_ref(), &cfg.instruction, &opts);
        done.extend(run.outcomes.into_iter().map(|o| (o.id.clone(), o)));
        records.extend(run.records.into_iter().map(|r| (r.id.clone(), r)));
    }

    let outcomes: Vec<ExampleOutcome> = examples.iter().map(|e| done[&e.id].clone()).collect();
    let training: Vec<TrainingRecord> = examples.iter().filter_map(|e| records.get(&e.id).cloned()).collect();
    let programs: Vec<ProgramLine> = examples
        .iter()
        .zip(&outcomes)
        .filter_map(|(e, o)| {
            o.program_text.as_ref().map(|p| ProgramLine {
                id: e.id.clone(),
                table_ref: e.table_ref.clone(),
                program: p.clone(),
            })
        })
        .collect();
    let predictions: Vec<AnswerLine> = outcomes
        .iter()
        .map(|o| AnswerLine {
            id: o.id.clone(),
            values: o.final_answer.clone(),
            trace: None,
        })
        .collect();
    let log = run_log(&outcomes);
    write_atomic(&out.join(OUTCOMES), to_jsonl(&outcomes).as_bytes())?;
    write_jsonl(&out.join(TRAINING), &training)?;
    write_jsonl(&out.join(PROGRAMS), &programs)?;
    write_jsonl(&out.join(PREDICTIONS), &predictions)?;
    write_json(&out.join(RUN_LOG), &log)?;

    // evaluate
    let preds: AnswerMap = predictions.into_iter().map(|l| (l.id, l.values)).collect();
    let golds: AnswerMap = examples.iter().map(|e| (e.id.clone(), e.gold.clone())).collect();
    let overlay = read_overlay(cfg.corrections.as_ref())?;
    let report = build_report(&preds, None, &golds, overlay.as_ref(), cfg.metric)?;
    write_report(&report, Some(&out.join(REPORT)))?;
    eprintln!(
        "run log: {} first-pass correct, {} refined correct, {} discarded as trivial copies, {} failed",
        log.first_pass_correct, log.refined_correct, log.discarded_trivial, log.failed
    );
    Ok(())
}
