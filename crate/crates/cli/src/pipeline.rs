//! End-to-end pipeline: ingest -> augment -> train generator -> sample ->
//! evaluate -> train/load predictor -> predict novel molecules -> filter ->
//! candidates CSV. Every artifact is reproducible from (config, seed,
//! input files); the run manifest pairs each artifact with the resolved
//! config hash.

use std::path::{Path, PathBuf};

use hemgen_core::dataset::{self, N_TARGETS};
use hemgen_core::genmetrics::{self, Direction, EvalReport};
use hemgen_core::gnn::{self, PredictorCheckpoint};
use hemgen_core::rng::derive_seed;
use hemgen_core::seqmodel::{self, SampleOptions, TrainingHistory};
use hemgen_core::smiles::{augment_dataset, canonical_form, is_valid};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Stage tags used for seed derivation and error labels.
pub const STAGES: [&str; 8] = [
    "ingest",
    "augment",
    "train-gen",
    "sample",
    "evaluate",
    "train-pred",
    "predict",
    "filter",
];

pub fn stage_seed(root: u64, stage: &str) -> u64 {
    derive_seed(root, stage)
}

/// Read molecules from either a dataset CSV (SMILES column) or a plain
/// one-SMILES-per-line file.
pub fn read_smiles_input(path: &Path) -> Result<Vec<String>, CliError> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let report = dataset::ingest(path, false).map_err(|e| CliError::stage("ingest", e))?;
        Ok(report.records.into_iter().map(|r| r.smiles).collect())
    } else {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Stage("ingest".into(), format!("{}: {e}", path.display())))?;
        Ok(text
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect())
    }
}

pub fn write_smiles(path: &Path, smiles: &[String]) -> Result<(), CliError> {
    let mut text = smiles.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// Write a predictions/candidates CSV with the documented header
/// `smiles,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50`.
pub fn write_predictions_csv(
    path: &Path,
    rows: &[(String, [f64; N_TARGETS])],
) -> Result<(), CliError> {
    let mut out = String::from("smiles,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50\n");
    for (smiles, props) in rows {
        out.push_str(smiles);
        for v in props {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(path.display().to_string(), e))
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<(String, [f64; N_TARGETS])>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "smiles,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50" {
        return Err(CliError::Stage(
            "filter".into(),
            format!("unexpected predictions header: {header}"),
        ));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 1 + N_TARGETS {
            return Err(CliError::Stage(
                "filter".into(),
                format!("line {}: expected {} columns", i + 2, 1 + N_TARGETS),
            ));
        }
        let mut props = [0.0; N_TARGETS];
        for (t, cell) in parts[1..].iter().enumerate() {
            props[t] = cell.parse().map_err(|_| {
                CliError::Stage("filter".into(), format!("line {}: bad number {cell}", i + 2))
            })?;
        }
        rows.push((parts[0].to_string(), props));
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifacts: Vec<(String, String)>, // (file name, config hash)
}

/// Artifacts produced by a full pipeline run.
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub report: EvalReport,
    pub n_candidates: usize,
    pub history: TrainingHistory,
}

pub fn run_pipeline(config: &RunConfig) -> Result<RunArtifacts, CliError> {
    let out = &config.out_dir;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(out.display().to_string(), e))?;
    let hash = config.hash();
    let mut artifacts: Vec<(String, String)> = Vec::new();
    let record_artifact = |name: &str| (name.to_string(), hash.clone());

    // Resolved config next to the outputs.
    std::fs::write(out.join("config_resolved.toml"), config.to_toml())
        .map_err(|e| CliError::Io("config_resolved.toml".into(), e))?;
    artifacts.push(record_artifact("config_resolved.toml"));

    // Stage 1: ingest.
    let ingest_report = dataset::ingest(&config.dataset, config.drop_invalid_rows)
        .map_err(|e| CliError::stage("ingest", e))?;
    if !ingest_report.invalid_rows.is_empty() && !config.drop_invalid_rows {
        let lines: Vec<String> = ingest_report
            .invalid_rows
            .iter()
            .map(|(l, s)| format!("line {l}: {s}"))
            .collect();
        return Err(CliError::Stage(
            "ingest".into(),
            format!(
                "invalid SMILES rows (pass drop_invalid_rows = true to skip them): {}",
                lines.join("; ")
            ),
        ));
    }
    let records = ingest_report.records;
    let training_smiles: Vec<String> = records.iter().map(|r| r.smiles.clone()).collect();

    // Stage 2: augment.
    let augmented = augment_dataset(
        &training_smiles,
        config.augmentation_factor,
        stage_seed(config.seed, "augment"),
    )
    .map_err(|e| CliError::stage("augment", e))?;
    write_smiles(&out.join("augmented.smi"), &augmented)?;
    artifacts.push(record_artifact("augmented.smi"));

    // Stage 3: train the generator.
    let gen_config = config
        .generator
        .to_config(stage_seed(config.seed, "train-gen"))?;
    let (gen_ckpt, history) = seqmodel::train(&gen_config, &augmented, config.val_fraction)
        .map_err(|e| CliError::stage("train-gen", e))?;
    gen_ckpt
        .save(&out.join("generator.ckpt"))
        .map_err(|e| CliError::stage("train-gen", e))?;
    artifacts.push(record_artifact("generator.ckpt"));
    write_history_csv(&out.join("gen_history.csv"), &history)?;
    artifacts.push(record_artifact("gen_history.csv"));

    // Stage 4: sample.
    let samples = seqmodel::sample(
        &gen_ckpt,
        &SampleOptions {
            n: config.sampling.n,
            temperature: config.sampling.temperature,
            seed: stage_seed(config.seed, "sample"),
            greedy: config.sampling.greedy,
        },
    )
    .map_err(|e| CliError::stage("sample", e))?;
    write_smiles(&out.join("samples.smi"), &samples)?;
    artifacts.push(record_artifact("samples.smi"));

    // Stage 5: evaluate.
    let mut report = genmetrics::evaluate(&samples, &training_smiles)
        .map_err(|e| CliError::stage("evaluate", e))?;

    // Stage 6: train or load the predictor.
    let pred_ckpt: PredictorCheckpoint = match &config.predictor_checkpoint {
        Some(path) => PredictorCheckpoint::load(path).map_err(|e| CliError::stage("train-pred", e))?,
        None => {
            let pred_config = config
                .predictor
                .to_config(stage_seed(config.seed, "train-pred"));
            let (ckpt, pred_history) =
                gnn::train_predictor(&pred_config, &records, stage_seed(config.seed, "split"))
                    .map_err(|e| CliError::stage("train-pred", e))?;
            write_pred_history_csv(&out.join("pred_history.csv"), &pred_history)?;
            artifacts.push(record_artifact("pred_history.csv"));
            ckpt.save(&out.join("predictor.ckpt"))
                .map_err(|e| CliError::stage("train-pred", e))?;
            artifacts.push(record_artifact("predictor.ckpt"));
            ckpt
        }
    };

    // Stage 7: predict the nine targets for novel valid molecules
    // (molecule-level dedupe, first writing kept).
    let train_canon: std::collections::BTreeSet<String> = training_smiles
        .iter()
        .filter_map(|s| canonical_form(s).ok())
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut novel: Vec<String> = Vec::new();
    for s in samples.iter().filter(|s| is_valid(s)) {
        let canon = canonical_form(s).expect("valid molecule");
        if !train_canon.contains(&canon) && seen.insert(canon) {
            novel.push(s.clone());
        }
    }
    let predictions = gnn::predict(&pred_ckpt, &novel).map_err(|e| CliError::stage("predict", e))?;
    let rows: Vec<(String, [f64; N_TARGETS])> =
        novel.iter().cloned().zip(predictions.iter().copied()).collect();
    write_predictions_csv(&out.join("predictions.csv"), &rows)?;
    artifacts.push(record_artifact("predictions.csv"));
    report.property_summaries = Some(genmetrics::summarize_properties(&predictions));

    std::fs::write(out.join("eval_report.json"), report_json(&report, &hash))
        .map_err(|e| CliError::Io("eval_report.json".into(), e))?;
    artifacts.push(record_artifact("eval_report.json"));
    std::fs::write(out.join("eval_report.csv"), report.to_csv())
        .map_err(|e| CliError::Io("eval_report.csv".into(), e))?;
    artifacts.push(record_artifact("eval_report.csv"));

    // Stage 8: filter high-performance candidates.
    let direction = parse_direction(&config.filter.direction)?;
    let kept = genmetrics::filter_by_property(
        &novel,
        &predictions,
        &config.filter.target,
        config.filter.threshold,
        direction,
    )
    .map_err(|e| CliError::stage("filter", e))?;
    let candidate_rows: Vec<(String, [f64; N_TARGETS])> = kept
        .into_iter()
        .map(|(_, smiles, props)| (smiles, props))
        .collect();
    write_predictions_csv(&out.join("candidates.csv"), &candidate_rows)?;
    artifacts.push(record_artifact("candidates.csv"));

    let manifest = RunManifest {
        config_hash: hash.clone(),
        artifacts,
    };
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| CliError::Io("manifest.json".into(), e))?;

    Ok(RunArtifacts {
        out_dir: out.clone(),
        report,
        n_candidates: candidate_rows.len(),
        history,
    })
}

pub fn parse_direction(s: &str) -> Result<Direction, CliError> {
    match s {
        "above" | ">" => Ok(Direction::Above),
        "below" | "<" => Ok(Direction::Below),
        other => Err(CliError::Config(format!(
            "direction must be 'above' or 'below', got '{other}'"
        ))),
    }
}

/// Embed the config hash in the JSON report.
fn report_json(report: &EvalReport, hash: &str) -> String {
    let mut value: serde_json::Value =
        serde_json::from_str(&report.to_json()).expect("report is valid json");
    value["config_hash"] = serde_json::Value::String(hash.to_string());
    serde_json::to_string_pretty(&value).expect("report serializes")
}

pub fn write_history_csv(path: &Path, history: &TrainingHistory) -> Result<(), CliError> {
    let mut out = String::from("epoch,train_loss,val_loss,wall_time_s\n");
    for (e, loss) in history.train_loss.iter().enumerate() {
        let val = history.val_loss[e]
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{e},{loss},{val},{}\n", history.wall_time_s[e]));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn write_pred_history_csv(
    path: &Path,
    history: &gnn::PredictorHistory,
) -> Result<(), CliError> {
    let mut out = String::from("epoch,train_rmse,test_rmse\n");
    for (e, rmse) in history.train_rmse.iter().enumerate() {
        out.push_str(&format!("{e},{rmse},{}\n", history.test_rmse[e]));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// Summary of useful numbers for `report` and logging.
pub fn summarize(report: &EvalReport, n_candidates: usize) -> String {
    let mut s = String::new();
    s.push_str(&format!("generated:          {}\n", report.n_generated));
    s.push_str(&format!("validity:           {:.4}\n", report.validity));
    s.push_str(&format!("novelty:            {:.4}\n", report.novelty));
    if let Some(v) = report.novelty_among_valid {
        s.push_str(&format!("novelty (of valid): {v:.4}\n"));
    }
    if let Some(v) = report.uniqueness {
        s.push_str(&format!("uniqueness:         {v:.4}\n"));
    }
    if let Some(v) = report.mean_intra_tanimoto {
        s.push_str(&format!("intra tanimoto:     {v:.4}\n"));
    }
    if let Some(v) = report.mean_tanimoto_vs_training {
        s.push_str(&format!("vs-train tanimoto:  {v:.4}\n"));
    }
    s.push_str(&format!("filtered candidates: {n_candidates}\n"));
    s
}

/// Records sorted check results for `verify-theory`.
#[derive(Debug, Serialize)]
pub struct TheoryReport {
    pub coherence: hemgen_core::theory::CoherenceReport,
    pub gershgorin_batches: usize,
    pub gershgorin_all_in_interval: bool,
    pub gershgorin_worst_margin: f64,
    pub rademacher: f64,
    pub generalization: f64,
    pub residual_max_sq: f64,
    pub residual_bound: f64,
    pub residual_within_bound: bool,
    pub residual_vacuous: bool,
    pub all_pass: bool,
}

pub fn verify_theory(
    v: usize,
    d: usize,
    d_t: usize,
    epsilon: f64,
    seed: u64,
) -> Result<TheoryReport, CliError> {
    use hemgen_core::embeddings::{random_fixed_embedding, sha_fixed_embedding};
    use hemgen_core::rng::SplitMix64;
    use hemgen_core::theory;

    let tag = |e: theory::TheoryError| CliError::stage("verify-theory", e);
    let coherence = theory::sha_coherence_report(v, d, d_t, epsilon).map_err(tag)?;

    let d_f = d - d_t;
    let sha = sha_fixed_embedding(v, d, d_t).map_err(|e| CliError::stage("verify-theory", e))?;
    let random = random_fixed_embedding(v, d_f, d_f, derive_seed(seed, "random-emb"))
        .map_err(|e| CliError::stage("verify-theory", e))?;
    let mut rng = SplitMix64::new(derive_seed(seed, "gershgorin"));
    let mut all_in = true;
    let mut worst_margin = f64::INFINITY;
    let n_batches = 200;
    for b in 0..n_batches {
        let source = if b % 2 == 0 { &sha } else { &random };
        let n = 2 + rng.gen_range(63);
        let batch: Vec<usize> = (0..n).map(|_| rng.gen_range(v)).collect();
        let check = theory::gershgorin_check(source, &batch).map_err(tag)?;
        all_in &= check.in_interval;
        let margin = (check.lambda_min - check.interval_low)
            .min(check.interval_high - check.lambda_max);
        worst_margin = worst_margin.min(margin);
    }

    let inputs = theory::BoundInputs {
        n: 303,
        v,
        d_t,
        d_param: 1e5,
        b_t: 1.0,
        b_theta: 10.0,
        l_f: 1.0,
        l_loss: 1.0,
        delta: 0.05,
    };
    let rademacher = theory::rademacher_bound(&inputs).map_err(tag)?;
    let generalization = theory::generalization_bound(&inputs).map_err(tag)?;

    let e_t = random_fixed_embedding(v, d_t.max(1), d_t.max(1), derive_seed(seed, "e-t"))
        .map_err(|e| CliError::stage("verify-theory", e))?;
    let residual = theory::residual_decomposition(&e_t, &sha).map_err(tag)?;
    let residual_max_sq = residual
        .residual_sq
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    // Token rows lie in the span of the fixed block by construction, so the
    // fixed-part residual vanishes and the bound reduces to the trainable
    // norm bound.
    let residual_within_bound = residual_max_sq <= residual.bound + 1e-9;

    let all_pass = coherence.pass && all_in && residual_within_bound;
    Ok(TheoryReport {
        coherence,
        gershgorin_batches: n_batches,
        gershgorin_all_in_interval: all_in,
        gershgorin_worst_margin: worst_margin,
        rademacher,
        generalization,
        residual_max_sq,
        residual_bound: residual.bound,
        residual_within_bound,
        residual_vacuous: residual.vacuous,
        all_pass,
    })
}
