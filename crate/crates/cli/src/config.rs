use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tqa_core::eval::Metric;
use tqa_core::generation::{
    HttpChatClient, HttpChatConfig, InstructionConfig, LlmClient, RetryPolicy, RetryingClient, ScriptedClient,
};
use tqa_core::table::NormalizationConfig;

use crate::{ModelFlags, NormalizeFlags, PipelineArgs};

/// Pipeline settings as read from TOML. Relative paths are resolved against
/// the directory of the file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub tables: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub corrections: Option<PathBuf>,
    pub scripted_client: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub max_refine_rounds: Option<usize>,
    pub metric: Option<Metric>,
    pub concurrency: Option<usize>,
    pub normalization: NormalizationConfig,
    pub instruction: InstructionConfig,
}

#[derive(Debug)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub tables: PathBuf,
    pub out_dir: PathBuf,
    pub corrections: Option<PathBuf>,
    pub model: ModelFlags,
    pub max_refine_rounds: usize,
    pub metric: Metric,
    pub concurrency: usize,
    pub normalization: NormalizationConfig,
    pub instruction: InstructionConfig,
}

impl RunConfig {
    /// Merges the config file (if any) with command-line overrides and checks
    /// that every input path exists.
    pub fn resolve(args: &PipelineArgs) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let file: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| base.join(p));
        let mut instruction = file.instruction;
        if let Some(n) = args.max_table_rows {
            instruction.max_table_rows = n;
        }
        let cfg = RunConfig {
            dataset: args.dataset.clone().or(rel(file.dataset)).context("no dataset given (--dataset or `dataset` in the config)")?,
            tables: args.tables.clone().or(rel(file.tables)).context("no table directory given (--tables or `tables` in the config)")?,
            out_dir: args.out.clone().or(rel(file.out_dir)).context("no output directory given (--out or `out_dir` in the config)")?,
            corrections: args.corrections.clone().or(rel(file.corrections)),
            model: ModelFlags {
                endpoint: args.model.endpoint.clone().or(file.endpoint),
                model: args.model.model.clone().or(file.model),
                scripted_client: args.model.scripted_client.clone().or(rel(file.scripted_client)),
            },
            max_refine_rounds: args.max_refine_rounds.or(file.max_refine_rounds).unwrap_or(1),
            metric: args.metric.or(file.metric).unwrap_or_default(),
            concurrency: args.concurrency.or(file.concurrency).unwrap_or(1).max(1),
            normalization: file.normalization,
            instruction,
        };
        for (what, path) in [("dataset", Some(&cfg.dataset)), ("corrections", cfg.corrections.as_ref())] {
            if let Some(p) = path {
                if !p.is_file() {
                    bail!("{what} file {} does not exist", p.display());
                }
            }
        }
        require_dir(&cfg.tables)?;
        Ok(cfg)
    }
}

pub fn require_dir(p: &Path) -> Result<()> {
    if !p.is_dir() {
        bail!("table directory {} does not exist", p.display());
    }
    Ok(())
}

impl NormalizeFlags {
    pub fn config(&self) -> NormalizationConfig {
        NormalizationConfig {
            strip_thousands: !self.keep_thousands,
            normalize_unicode: !self.keep_unicode,
            standardize_column_names: !self.keep_names,
            extract_leading_number: !self.keep_annotations,
        }
    }
}

impl ModelFlags {
    /// A script wins over an endpoint. Endpoint and model fall back to the
    /// `TQA_LLM_*` environment variables.
    pub fn client(&self) -> Result<Box<dyn LlmClient>> {
        if let Some(path) = &self.scripted_client {
            let c = ScriptedClient::from_path(path).map_err(anyhow::Error::msg)?;
            return Ok(Box::new(c));
        }
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let Some(base) = self.endpoint.clone().or_else(|| env("TQA_LLM_BASE_URL")) else {
            bail!(
                "no model endpoint: pass --endpoint or set TQA_LLM_BASE_URL \
                 (or use --scripted-client FILE for an offline run)"
            );
        };
        let Some(model) = self.model.clone().or_else(|| env("TQA_LLM_MODEL")) else {
            bail!("no model name: pass --model or set TQA_LLM_MODEL");
        };
        let mut cfg = HttpChatConfig::new(base, model);
        cfg.api_key = env("TQA_LLM_API_KEY");
        Ok(Box::new(RetryingClient::new(HttpChatClient::new(cfg), RetryPolicy::default())))
    }
}
