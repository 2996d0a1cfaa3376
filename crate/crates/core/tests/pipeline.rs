mod common;

use common::fixture;
use tqa_core::dataset::parse_dataset_tsv;
use tqa_core::generation::{build_training_set, BuildOptions, InstructionConfig, RunLog, ScriptedClient};
use tqa_core::io::{load_table, read_text};
use tqa_core::table::NormalizationConfig;

fn examples() -> Vec<(tqa_core::ExampleRecord, tqa_core::Table)> {
    let ds = parse_dataset_tsv(&read_text(&fixture("pipeline/dataset.tsv")).unwrap()).unwrap();
    ds.into_iter()
        .map(|e| {
            let t = load_table(&fixture(&format!("tables/{}", e.table_ref)), &NormalizationConfig::default()).unwrap();
            (e, t)
        })
        .collect()
}

/// The fixture script with the last correct reply of each example moved to
/// the front.
fn all_correct_script() -> ScriptedClient {
    let mut lines = Vec::new();
    for line in read_text(&fixture("pipeline/script.jsonl")).unwrap().lines() {
        let mut entry: serde_json::Value = serde_json::from_str(line).unwrap();
        let replies = entry["replies"].as_array().unwrap().clone();
        entry["replies"] = serde_json::json!([replies.last().unwrap()]);
        lines.push(entry.to_string());
    }
    // the away-wins script only ever copies the gold; give it a real program
    let away = lines.iter_mut().find(|l| l.contains("away wins")).unwrap();
    let program = "# PLAN: Count away wins.\n# FILTER: Away.\nfilter Opponent contains \"at \"\n\
# FILTER: Wins.\nfilter Result contains \"W\"\n# AGGREGATE: Count.\naggregate count Result\nanswer scalar\n";
    *away = serde_json::json!({"match": "how many away wins were there?", "replies": [program]}).to_string();
    ScriptedClient::from_jsonl(&lines.join("\n")).unwrap()
}

#[test]
fn fully_scripted_first_pass() {
    let client = all_correct_script();
    let run = build_training_set(&examples(), &client, &InstructionConfig::default(), &BuildOptions::default());
    assert_eq!(run.records.len(), 5);
    assert_eq!(
        run.log,
        RunLog {
            first_pass_correct: 5,
            completions: 5,
            ..Default::default()
        }
    );
}

#[test]
fn gold_copying_client_yields_nothing() {
    let exs = examples();
    let mut lines = Vec::new();
    for (e, _) in &exs {
        let lits: Vec<String> = e.gold.values().iter().map(|v| format!("{v:?}")).collect();
        let reply = format!("# PLAN: Known answer.\nanswer {}\n", lits.join(" "));
        lines.push(serde_json::json!({"match": e.question, "replies": [reply.clone(), reply]}).to_string());
    }
    let client = ScriptedClient::from_jsonl(&lines.join("\n")).unwrap();
    let run = build_training_set(&exs, &client, &InstructionConfig::default(), &BuildOptions::default());
    assert!(run.records.is_empty());
    assert_eq!(run.log.discarded_trivial, exs.len());
    assert_eq!(run.log.trivial_rejections, 2 * exs.len());
}
