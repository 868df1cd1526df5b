use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use motgnn::data::{
    align_samples, generate_synthetic, load_labels_csv, load_omics_csv, minmax_normalize, write_labels_csv,
    write_omics_csv, MultiOmicsDataset, SynthConfig,
};
use motgnn::interpret::{rank_biomarkers, RankedFeature};
use motgnn::model::{load_checkpoint, run_baseline_experiment, run_experiment, save_checkpoint, Baseline};
use motgnn::MODALITY_NAMES;
use serde::Serialize;

use crate::config::{DataSource, RunConfig};
use crate::fsio::{write_atomic, write_with};
use crate::report::{baseline_json, experiment_json};

pub const REPORT_FILE: &str = "report.json";
pub const BASELINE_FILE: &str = "baseline_report.json";
pub const RANKINGS_FILE: &str = "rankings.csv";
pub const RIG_FILE: &str = "rig.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const LABELS_FILE: &str = "labels.csv";

pub fn modality_file(name: &str) -> String {
    format!("{name}.csv")
}

pub fn load_dataset(config: &RunConfig) -> Result<MultiOmicsDataset> {
    match &config.data {
        DataSource::Synth { config: synth, seed } => Ok(generate_synthetic(synth, *seed)?.0),
        DataSource::Files {
            meth,
            mrna,
            mirna,
            labels,
        } => {
            let mats = [meth, mrna, mirna]
                .into_iter()
                .map(load_omics_csv)
                .collect::<motgnn::Result<Vec<_>>>()?;
            let labels = load_labels_csv(labels)?;
            let (ds, report) = align_samples(&mats[0], &mats[1], &mats[2], &labels)?;
            log::info!("{} samples retained, dropped per source {:?}", report.retained, report.dropped);
            if !config.normalize {
                return Ok(ds);
            }
            let [a, b, c] = ds.modalities();
            let normalized = [minmax_normalize(a).0, minmax_normalize(b).0, minmax_normalize(c).0];
            Ok(MultiOmicsDataset::new(normalized, ds.labels().to_vec())?)
        }
    }
}

fn rankings_csv(rows: &[(&str, &[RankedFeature])], out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["modality", "rank", "feature", "score"])?;
    for (modality, list) in rows {
        for f in *list {
            w.write_record([modality, f.rank.to_string().as_str(), &f.feature, f.score.to_string().as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    seed: u64,
    config: &'a SynthConfig,
    planted: BTreeMap<&'static str, &'a [usize]>,
    planted_features: BTreeMap<&'static str, Vec<&'a str>>,
}

/// Writes the three modality CSVs, the label CSV and the planted-feature
/// ground truth.
pub fn cmd_synth(config: &SynthConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let (ds, planted) = generate_synthetic(config, seed)?;
    let mut written = Vec::new();
    for (m, name) in ds.modalities().iter().zip(MODALITY_NAMES) {
        let path = out.join(modality_file(name));
        write_with(&path, |buf| Ok(write_omics_csv(m, buf)?))?;
        written.push(path);
    }
    let path = out.join(LABELS_FILE);
    write_with(&path, |buf| Ok(write_labels_csv(ds.sample_ids(), ds.labels(), buf)?))?;
    written.push(path);
    let truth = GroundTruth {
        seed,
        config,
        planted: MODALITY_NAMES.iter().zip(&planted.columns).map(|(n, c)| (*n, c.as_slice())).collect(),
        planted_features: MODALITY_NAMES
            .iter()
            .zip(&planted.columns)
            .enumerate()
            .map(|(i, (n, cols))| {
                let names = ds.modality(i).feature_names();
                (*n, cols.iter().map(|&c| names[c].as_str()).collect())
            })
            .collect(),
    };
    let path = out.join(GROUND_TRUTH_FILE);
    write_atomic(&path, (serde_json::to_string_pretty(&truth)? + "\n").as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Repeated-split experiment: report, consensus rankings, per-repeat graphs
/// and checkpoints.
pub fn cmd_experiment(config: &RunConfig) -> Result<PathBuf> {
    let out = config.out_dir()?;
    let ds = load_dataset(config)?;
    let run = run_experiment(&ds, &config.experiment, config.jobs)?;
    let report = &run.report;

    for (rec, model) in report.repeats.iter().zip(&run.models) {
        for (g, name) in model.graphs.iter().zip(MODALITY_NAMES) {
            let stem = out.join("graphs").join(format!("seed{}_{name}", rec.seed));
            write_with(&stem.with_extension("edges.csv"), |b| Ok(g.write_edge_list(b)?))?;
            write_with(&stem.with_extension("nodes.csv"), |b| Ok(g.write_node_map(b)?))?;
        }
        let path = out.join("checkpoints").join(format!("seed{}.json", rec.seed));
        write_with(&path, |b| Ok(save_checkpoint(model, b)?))?;
    }
    let rows: Vec<(&str, &[RankedFeature])> =
        MODALITY_NAMES.iter().map(|n| (*n, report.biomarkers[*n].as_slice())).collect();
    write_with(&out.join(RANKINGS_FILE), |b| rankings_csv(&rows, b))?;
    let path = out.join(REPORT_FILE);
    write_atomic(&path, experiment_json(config, report)?.as_bytes())?;
    for m in crate::report::METRICS {
        let s = &report.aggregate[m];
        log::info!("{m}: {:.3} ± {:.3} [{:.3}, {:.3}]", s.mean, s.sd, s.ci_low, s.ci_high);
    }
    Ok(path)
}

/// One baseline over the same split seeds as [`cmd_experiment`].
pub fn cmd_baseline(config: &RunConfig, which: Baseline) -> Result<PathBuf> {
    let out = config.out_dir()?;
    let ds = load_dataset(config)?;
    let report = run_baseline_experiment(&ds, &config.experiment, which, config.jobs)?;
    let path = out.join(BASELINE_FILE);
    write_atomic(&path, baseline_json(config, &report)?.as_bytes())?;
    Ok(path)
}

#[derive(Serialize)]
struct RigDoc {
    rig: BTreeMap<&'static str, f64>,
}

/// Rankings and graph importance read from a stored model.
pub fn cmd_explain(checkpoint: &Path, top_k: usize, out: &Path) -> Result<()> {
    let file = File::open(checkpoint).with_context(|| format!("cannot open checkpoint {}", checkpoint.display()))?;
    let model = load_checkpoint(BufReader::new(file)).with_context(|| format!("bad checkpoint {}", checkpoint.display()))?;
    let ranked: Vec<Vec<RankedFeature>> = model
        .feature_importance()?
        .iter()
        .map(|s| rank_biomarkers(s, top_k))
        .collect();
    let rows: Vec<(&str, &[RankedFeature])> =
        MODALITY_NAMES.iter().zip(&ranked).map(|(n, r)| (*n, r.as_slice())).collect();
    write_with(&out.join(RANKINGS_FILE), |b| rankings_csv(&rows, b))?;
    let rig = model.relative_graph_importance()?;
    let doc = RigDoc {
        rig: MODALITY_NAMES.iter().copied().zip(rig).collect(),
    };
    write_atomic(&out.join(RIG_FILE), (serde_json::to_string_pretty(&doc)? + "\n").as_bytes())?;
    Ok(())
}
