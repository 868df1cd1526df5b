//! Flat TOML run configuration.
//!
//! Every key is optional. Data comes either from four CSV paths
//! (`meth`, `mrna`, `mirna`, `labels`) or from the `synth_*` keys, never
//! both; with neither, the default synthetic configuration is used.
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use motgnn::boosting::GbtConfig;
use motgnn::data::{SplitRatios, SynthConfig};
use motgnn::model::{ExperimentConfig, TrainConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Table;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Files {
        meth: PathBuf,
        mrna: PathBuf,
        mirna: PathBuf,
        labels: PathBuf,
    },
    Synth {
        #[serde(flatten)]
        config: SynthConfig,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: DataSource,
    /// Min-max normalize each modality after loading files.
    pub normalize: bool,
    pub experiment: ExperimentConfig,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::Synth {
                config: SynthConfig::default(),
                seed: 42,
            },
            normalize: true,
            experiment: ExperimentConfig::default(),
            out: None,
            jobs: 1,
        }
    }
}

const FILE_KEYS: [&str; 4] = ["meth", "mrna", "mirna", "labels"];

struct Reader {
    table: Table,
    problems: Vec<String>,
}

impl Reader {
    fn take<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let value = self.table.remove(key)?;
        match value.clone().try_into() {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("`{key}`: {}", e.message().trim()));
                None
            }
        }
    }

    fn set<T: DeserializeOwned>(&mut self, key: &str, slot: &mut T) {
        if let Some(v) = self.take(key) {
            *slot = v;
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses and validates; every problem found is reported in one error.
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let table: Table = text.parse().context("malformed TOML")?;
        let mut r = Reader {
            table,
            problems: Vec::new(),
        };
        let mut cfg = RunConfig::default();

        let files: Vec<Option<String>> = FILE_KEYS.iter().map(|k| r.take::<String>(k)).collect();
        let mut synth = SynthConfig::default();
        let mut synth_seed = 42u64;
        let synth_keys = [
            "synth_n_samples",
            "synth_n_features",
            "synth_n_informative",
            "synth_effect_size",
            "synth_imbalance",
            "synth_seed",
        ];
        let any_synth = synth_keys.iter().any(|k| r.table.contains_key(*k));
        r.set("synth_n_samples", &mut synth.n_samples);
        r.set("synth_n_features", &mut synth.n_features);
        r.set("synth_n_informative", &mut synth.n_informative);
        r.set("synth_effect_size", &mut synth.effect_size);
        r.set("synth_imbalance", &mut synth.imbalance);
        r.set("synth_seed", &mut synth_seed);

        let given: Vec<&str> = FILE_KEYS
            .iter()
            .zip(&files)
            .filter(|(_, v)| v.is_some())
            .map(|(k, _)| *k)
            .collect();
        if !given.is_empty() && any_synth {
            r.problems.push("give either data file paths or synth_* keys, not both".into());
        }
        if !given.is_empty() && given.len() < FILE_KEYS.len() {
            let missing: Vec<&str> = FILE_KEYS.iter().filter(|k| !given.contains(k)).copied().collect();
            r.problems.push(format!("missing data file keys: {}", missing.join(", ")));
        }
        if given.len() == FILE_KEYS.len() {
            let p: Vec<PathBuf> = files.into_iter().flatten().map(|f| base_dir.join(f)).collect();
            cfg.data = DataSource::Files {
                meth: p[0].clone(),
                mrna: p[1].clone(),
                mirna: p[2].clone(),
                labels: p[3].clone(),
            };
        } else {
            if synth.n_features.iter().zip(&synth.n_informative).any(|(p, k)| k > p) {
                r.problems.push("synth_n_informative exceeds synth_n_features".into());
            }
            if synth.n_samples < 10 {
                r.problems.push("synth_n_samples must be at least 10".into());
            }
            if !(synth.effect_size.is_finite() && synth.effect_size >= 0.0) {
                r.problems.push("synth_effect_size must be non-negative".into());
            }
            if !(synth.imbalance.is_finite() && synth.imbalance > 0.0) {
                r.problems.push("synth_imbalance must be positive".into());
            }
            cfg.data = DataSource::Synth {
                config: synth,
                seed: synth_seed,
            };
        }
        r.set("normalize", &mut cfg.normalize);

        let e = &mut cfg.experiment;
        r.set("n_repeats", &mut e.n_repeats);
        r.set("seed", &mut e.base_seed);
        r.set("top_k", &mut e.top_k);
        r.set("confidence", &mut e.confidence);
        let mut ratios = [e.ratios.train, e.ratios.validation, e.ratios.test];
        r.set("split_ratios", &mut ratios);
        e.ratios = SplitRatios {
            train: ratios[0],
            validation: ratios[1],
            test: ratios[2],
        };

        let g: &mut GbtConfig = &mut e.gbt;
        r.set("num_trees", &mut g.num_trees);
        r.set("max_depth", &mut g.max_depth);
        r.set("gbt_lambda", &mut g.lambda);
        r.set("gamma", &mut g.gamma);
        r.set("gbt_learning_rate", &mut g.learning_rate);
        r.set("min_child_hessian", &mut g.min_child_hessian);

        let t: &mut TrainConfig = &mut e.train;
        r.set("learning_rate", &mut t.learning_rate);
        r.set("batch_size", &mut t.batch_size);
        r.set("max_epochs", &mut t.max_epochs);
        r.set("dropout", &mut t.dropout);
        r.set("l2_lambda", &mut t.l2_lambda);
        r.set("patience", &mut t.patience);
        r.set("min_delta", &mut t.min_delta);
        r.set("hidden_width", &mut t.hidden_width);
        r.set("recalibrate_batch_norm", &mut t.recalibrate_batch_norm);

        if let Some(out) = r.take::<String>("out") {
            cfg.out = Some(base_dir.join(out));
        }
        r.set("jobs", &mut cfg.jobs);

        let mut problems = std::mem::take(&mut r.problems);
        problems.extend(r.table.keys().map(|k| format!("unknown key `{k}`")));
        problems.extend(cfg.semantic_problems());
        if !problems.is_empty() {
            bail!("{}", problems.join("; "));
        }
        Ok(cfg)
    }

    fn semantic_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.experiment.validate() {
            out.push(e.to_string().trim_start_matches("invalid configuration: ").to_string());
        }
        let r = self.experiment.ratios;
        if [r.train, r.validation, r.test].iter().any(|v| !(v.is_finite() && *v > 0.0))
            || ((r.train + r.validation + r.test) - 1.0).abs() > 1e-9
        {
            out.push("split_ratios must be three positive values summing to 1".into());
        }
        if self.jobs == 0 {
            out.push("jobs must be positive".into());
        }
        out
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        jobs: Option<usize>,
        out: Option<PathBuf>,
        top_k: Option<usize>,
    ) -> Result<RunConfig> {
        if let Some(s) = seed {
            self.experiment.base_seed = s;
        }
        if let Some(j) = jobs {
            self.jobs = j;
        }
        if let Some(o) = out {
            self.out = Some(o);
        }
        if let Some(k) = top_k {
            self.experiment.top_k = k;
        }
        let problems = self.semantic_problems();
        if !problems.is_empty() {
            bail!("{}", problems.join("; "));
        }
        Ok(self)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("no output directory: pass --out or set `out` in the config"),
        }
    }
}
