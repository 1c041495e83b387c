//! Library-level evaluation of generated SMILES sets: validity, novelty,
//! uniqueness, mean Tanimoto similarities, and structural profiles.
//!
//! Set membership is molecule-level: strings are canonicalized first, so
//! two writings of one molecule count once. Novelty is normalized by the
//! total number of generated strings (valid novel count over all drawn
//! samples); the companion `novelty_among_valid` figure divides by the
//! valid count instead.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{target_index, N_TARGETS, TARGET_NAMES};
use crate::smiles::{
    canonicalize, descriptors, is_valid, morgan_fingerprint, parse, tanimoto, FunctionalGroup,
    MolGraph, DEFAULT_NBITS, DEFAULT_RADIUS,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("input list is empty")]
    EmptyInput,
    #[error("no valid molecules in input")]
    NoValidMolecules,
    #[error("fewer than two distinct molecules; no pairs to average")]
    EmptyPairSet,
    #[error("unknown target '{0}'")]
    UnknownTarget(String),
    #[error("molecule and prediction counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Fraction of strings that parse and pass the valence check.
pub fn validity(generated: &[String]) -> Result<f64, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n_valid = generated.iter().filter(|s| is_valid(s)).count();
    Ok(n_valid as f64 / generated.len() as f64)
}

/// Fraction of all generated strings that are valid and absent from the
/// training set (molecule-level membership).
pub fn novelty(generated: &[String], training: &[String]) -> Result<f64, MetricsError> {
    if generated.is_empty() || training.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let train_set = canonical_set(training);
    let novel = generated
        .iter()
        .filter(|s| is_valid(s))
        .filter(|s| !train_set.contains(&canonicalize(&parse(s).unwrap())))
        .count();
    Ok(novel as f64 / generated.len() as f64)
}

/// Novelty normalized by the valid count instead of the total count.
pub fn novelty_among_valid(generated: &[String], training: &[String]) -> Result<f64, MetricsError> {
    if generated.is_empty() || training.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let train_set = canonical_set(training);
    let mut n_valid = 0usize;
    let mut novel = 0usize;
    for s in generated.iter().filter(|s| is_valid(s)) {
        n_valid += 1;
        if !train_set.contains(&canonicalize(&parse(s).unwrap())) {
            novel += 1;
        }
    }
    if n_valid == 0 {
        return Err(MetricsError::NoValidMolecules);
    }
    Ok(novel as f64 / n_valid as f64)
}

/// Distinct canonical forms among valid molecules over the valid count.
pub fn uniqueness(generated: &[String]) -> Result<f64, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let valid: Vec<&String> = generated.iter().filter(|s| is_valid(s)).collect();
    if valid.is_empty() {
        return Err(MetricsError::NoValidMolecules);
    }
    let distinct: BTreeSet<String> = valid
        .iter()
        .map(|s| canonicalize(&parse(s).unwrap()))
        .collect();
    Ok(distinct.len() as f64 / valid.len() as f64)
}

fn canonical_set(strings: &[String]) -> BTreeSet<String> {
    strings
        .iter()
        .filter_map(|s| parse(s).ok().map(|g| canonicalize(&g)))
        .collect()
}

fn valid_graphs(strings: &[String]) -> Vec<MolGraph> {
    strings
        .iter()
        .filter(|s| is_valid(s))
        .map(|s| parse(s).unwrap())
        .collect()
}

/// Mean pairwise Tanimoto. One-set form averages over unordered distinct
/// pairs; two-set form averages over the full cross product.
pub fn mean_tanimoto(set_a: &[String], set_b: Option<&[String]>) -> Result<f64, MetricsError> {
    let graphs_a = valid_graphs(set_a);
    if graphs_a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let fps_a: Vec<_> = graphs_a
        .iter()
        .map(|g| morgan_fingerprint(g, DEFAULT_RADIUS, DEFAULT_NBITS))
        .collect();
    match set_b {
        None => {
            if fps_a.len() < 2 {
                return Err(MetricsError::EmptyPairSet);
            }
            let mut total = 0.0;
            let mut count = 0usize;
            for i in 0..fps_a.len() {
                for j in (i + 1)..fps_a.len() {
                    total += tanimoto(&fps_a[i], &fps_a[j]).expect("equal widths");
                    count += 1;
                }
            }
            Ok(total / count as f64)
        }
        Some(b) => {
            let graphs_b = valid_graphs(b);
            if graphs_b.is_empty() {
                return Err(MetricsError::EmptyInput);
            }
            let fps_b: Vec<_> = graphs_b
                .iter()
                .map(|g| morgan_fingerprint(g, DEFAULT_RADIUS, DEFAULT_NBITS))
                .collect();
            let mut total = 0.0;
            for fa in &fps_a {
                for fb in &fps_b {
                    total += tanimoto(fa, fb).expect("equal widths");
                }
            }
            Ok(total / (fps_a.len() * fps_b.len()) as f64)
        }
    }
}

pub const MW_BIN_WIDTH: f64 = 50.0;

/// Histograms and functional-group totals over the valid molecules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralProfile {
    /// (lower bin edge, count), 50 Da bins, empty bins omitted.
    pub mw_histogram: Vec<(f64, usize)>,
    /// (ring count, molecules with that count).
    pub ring_histogram: Vec<(usize, usize)>,
    pub group_counts: BTreeMap<String, usize>,
    pub n_molecules: usize,
}

pub fn structural_profile(molecules: &[String]) -> Result<StructuralProfile, MetricsError> {
    let graphs = valid_graphs(molecules);
    if graphs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut mw_bins: BTreeMap<u64, usize> = BTreeMap::new();
    let mut ring_bins: BTreeMap<usize, usize> = BTreeMap::new();
    let mut groups: BTreeMap<String, usize> = FunctionalGroup::ALL
        .iter()
        .map(|g| (g.name().to_string(), 0))
        .collect();
    for g in &graphs {
        let d = descriptors(g);
        let bin = (d.molecular_weight / MW_BIN_WIDTH).floor() as u64;
        *mw_bins.entry(bin).or_insert(0) += 1;
        *ring_bins.entry(d.ring_count).or_insert(0) += 1;
        for (group, count) in d.group_counts {
            *groups.get_mut(group.name()).unwrap() += count;
        }
    }
    Ok(StructuralProfile {
        mw_histogram: mw_bins
            .into_iter()
            .map(|(b, c)| (b as f64 * MW_BIN_WIDTH, c))
            .collect(),
        ring_histogram: ring_bins.into_iter().collect(),
        group_counts: groups,
        n_molecules: graphs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Above,
    Below,
}

/// Keep molecules whose named predicted target passes the threshold.
/// Returns (index, smiles, full prediction vector) for reporting.
pub fn filter_by_property(
    molecules: &[String],
    predictions: &[[f64; N_TARGETS]],
    target: &str,
    threshold: f64,
    direction: Direction,
) -> Result<Vec<(usize, String, [f64; N_TARGETS])>, MetricsError> {
    let t = target_index(target).ok_or_else(|| MetricsError::UnknownTarget(target.into()))?;
    if molecules.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch(
            molecules.len(),
            predictions.len(),
        ));
    }
    Ok(molecules
        .iter()
        .zip(predictions)
        .enumerate()
        .filter(|(_, (_, pred))| match direction {
            Direction::Above => pred[t] > threshold,
            Direction::Below => pred[t] < threshold,
        })
        .map(|(i, (s, pred))| (i, s.clone(), *pred))
        .collect())
}

/// Per-target summary statistics of predicted properties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub target: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize_properties(predictions: &[[f64; N_TARGETS]]) -> Vec<PropertySummary> {
    if predictions.is_empty() {
        return Vec::new();
    }
    let n = predictions.len() as f64;
    (0..N_TARGETS)
        .map(|t| {
            let values: Vec<f64> = predictions.iter().map(|p| p[t]).collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            PropertySummary {
                target: TARGET_NAMES[t].to_string(),
                mean,
                std: var.sqrt(),
                min: values.iter().cloned().fold(f64::INFINITY, f64::min),
                max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Full evaluation of a generated library against its training set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_generated: usize,
    pub validity: f64,
    pub novelty: f64,
    pub novelty_among_valid: Option<f64>,
    pub uniqueness: Option<f64>,
    pub mean_intra_tanimoto: Option<f64>,
    pub mean_tanimoto_vs_training: Option<f64>,
    pub profile: Option<StructuralProfile>,
    pub property_summaries: Option<Vec<PropertySummary>>,
}

pub fn evaluate(generated: &[String], training: &[String]) -> Result<EvalReport, MetricsError> {
    let validity_ratio = validity(generated)?;
    let novelty_ratio = novelty(generated, training)?;
    let valid: Vec<String> = generated
        .iter()
        .filter(|s| is_valid(s))
        .cloned()
        .collect();
    let (novelty_valid, uniq, intra, vs_train, profile) = if valid.is_empty() {
        (None, None, None, None, None)
    } else {
        (
            Some(novelty_among_valid(generated, training)?),
            Some(uniqueness(generated)?),
            mean_tanimoto(&valid, None).ok(),
            Some(mean_tanimoto(&valid, Some(training))?),
            Some(structural_profile(&valid)?),
        )
    };
    Ok(EvalReport {
        n_generated: generated.len(),
        validity: validity_ratio,
        novelty: novelty_ratio,
        novelty_among_valid: novelty_valid,
        uniqueness: uniq,
        mean_intra_tanimoto: intra,
        mean_tanimoto_vs_training: vs_train,
        profile,
        property_summaries: None,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat CSV: one `metric,value` row per scalar, histograms as
    /// `section,edge,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        out.push_str(&format!("n_generated,{}\n", self.n_generated));
        out.push_str(&format!("validity,{}\n", self.validity));
        out.push_str(&format!("novelty,{}\n", self.novelty));
        if let Some(v) = self.novelty_among_valid {
            out.push_str(&format!("novelty_among_valid,{v}\n"));
        }
        if let Some(v) = self.uniqueness {
            out.push_str(&format!("uniqueness,{v}\n"));
        }
        if let Some(v) = self.mean_intra_tanimoto {
            out.push_str(&format!("mean_intra_tanimoto,{v}\n"));
        }
        if let Some(v) = self.mean_tanimoto_vs_training {
            out.push_str(&format!("mean_tanimoto_vs_training,{v}\n"));
        }
        if let Some(p) = &self.profile {
            for (edge, count) in &p.mw_histogram {
                out.push_str(&format!("mw_histogram,{edge},{count}\n"));
            }
            for (rings, count) in &p.ring_histogram {
                out.push_str(&format!("ring_histogram,{rings},{count}\n"));
            }
            for (group, count) in &p.group_counts {
                out.push_str(&format!("group,{group},{count}\n"));
            }
        }
        if let Some(summaries) = &self.property_summaries {
            for s in summaries {
                out.push_str(&format!(
                    "property,{},{},{},{},{}\n",
                    s.target, s.mean, s.std, s.min, s.max
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn validity_counts_parseable() {
        let g = strings(&["CCO", "C(", "CCC", "X"]);
        assert_eq!(validity(&g).unwrap(), 0.5);
        assert_eq!(validity(&strings(&["CCO", "CCC"])).unwrap(), 1.0);
        assert_eq!(validity(&strings(&[])), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn novelty_uses_canonical_membership() {
        let train = strings(&["CCO"]);
        // "OCC" is the same molecule as "CCO": not novel.
        assert_eq!(novelty(&strings(&["OCC"]), &train).unwrap(), 0.0);
        assert_eq!(novelty(&strings(&["CCC"]), &train).unwrap(), 1.0);
        // Normalized by |G|, not |valid|: one novel valid of two drawn.
        assert_eq!(novelty(&strings(&["CCC", "C("]), &train).unwrap(), 0.5);
        assert_eq!(
            novelty_among_valid(&strings(&["CCC", "C("]), &train).unwrap(),
            1.0
        );
    }

    #[test]
    fn novelty_never_exceeds_validity() {
        let train = strings(&["CCO", "CCC"]);
        let gens = [
            strings(&["CCO", "CCN", "C(", "X"]),
            strings(&["OCC", "NCC", "CCC"]),
        ];
        for g in &gens {
            let v = validity(g).unwrap();
            let n = novelty(g, &train).unwrap();
            assert!(n <= v + 1e-15, "novelty {n} > validity {v}");
        }
    }

    #[test]
    fn uniqueness_collapses_rewritings() {
        assert_eq!(
            uniqueness(&strings(&["CCO", "CCO", "CCC"])).unwrap(),
            2.0 / 3.0
        );
        assert_eq!(uniqueness(&strings(&["CCO", "OCC"])).unwrap(), 0.5);
        assert_eq!(uniqueness(&strings(&["CCO", "CCC", "CCN"])).unwrap(), 1.0);
        assert_eq!(
            uniqueness(&strings(&["(("])),
            Err(MetricsError::NoValidMolecules)
        );
    }

    #[test]
    fn subset_of_training_is_zero_novel() {
        let train = strings(&["CCO", "CCC", "CCN"]);
        let g = strings(&["CCO", "CCN"]);
        assert_eq!(novelty(&g, &train).unwrap(), 0.0);
    }

    #[test]
    fn mean_tanimoto_forms() {
        // Single molecule intra: no pairs.
        assert_eq!(
            mean_tanimoto(&strings(&["CCO"]), None),
            Err(MetricsError::EmptyPairSet)
        );
        // Two copies of the same molecule across sets: similarity 1.
        let a = strings(&["CCO"]);
        let b = strings(&["OCC"]);
        assert_eq!(mean_tanimoto(&a, Some(&b)).unwrap(), 1.0);
        // Intra of a two-element set is the single pair similarity.
        let ab = strings(&["CCO", "CCC"]);
        let intra = mean_tanimoto(&ab, None).unwrap();
        assert!(intra > 0.0 && intra < 1.0);
    }

    #[test]
    fn inter_with_duplicates_at_least_intra() {
        let set = strings(&["CCO", "CCO", "CCC"]);
        let intra = mean_tanimoto(&set, None).unwrap();
        let inter = mean_tanimoto(&set, Some(&set)).unwrap();
        assert!(inter >= intra);
    }

    #[test]
    fn profile_counts_sum_to_valid() {
        let mols = strings(&["c1ccccc1", "CCO", "C(", "CC(=O)C"]);
        let p = structural_profile(&mols).unwrap();
        assert_eq!(p.n_molecules, 3);
        let mw_total: usize = p.mw_histogram.iter().map(|(_, c)| c).sum();
        let ring_total: usize = p.ring_histogram.iter().map(|(_, c)| c).sum();
        assert_eq!(mw_total, 3);
        assert_eq!(ring_total, 3);
        assert_eq!(p.group_counts["ketone"], 1);
        assert_eq!(p.group_counts["aromatic_ring"], 1);
        assert!(p.mw_histogram.iter().any(|&(e, _)| e == 0.0));
    }

    #[test]
    fn profile_invariant_under_permutation() {
        let a = strings(&["CCO", "c1ccccc1", "CC(=O)C"]);
        let b = strings(&["CC(=O)C", "CCO", "c1ccccc1"]);
        assert_eq!(structural_profile(&a).unwrap(), structural_profile(&b).unwrap());
    }

    #[test]
    fn filter_by_detonation_velocity() {
        let mols = strings(&["CCO", "CCC", "CCN"]);
        let mut preds = [[0.0; N_TARGETS]; 3];
        preds[0][5] = 8.5;
        preds[1][5] = 9.25;
        preds[2][5] = 9.37;
        let kept =
            filter_by_property(&mols, &preds, "D", 9.0, Direction::Above).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].1, "CCC");
        // Threshold below everything keeps all.
        let all =
            filter_by_property(&mols, &preds, "D", f64::NEG_INFINITY, Direction::Above).unwrap();
        assert_eq!(all.len(), 3);
        // Empty input, empty output.
        let none: Vec<String> = vec![];
        assert!(filter_by_property(&none, &[], "D", 9.0, Direction::Above)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn filter_errors() {
        let mols = strings(&["CCO"]);
        assert_eq!(
            filter_by_property(&mols, &[], "D", 9.0, Direction::Above),
            Err(MetricsError::LengthMismatch(1, 0))
        );
        assert_eq!(
            filter_by_property(&mols, &[[0.0; N_TARGETS]], "nope", 9.0, Direction::Above),
            Err(MetricsError::UnknownTarget("nope".into()))
        );
    }

    #[test]
    fn exact_counting_semantics() {
        // validity*n, novelty*n, uniqueness*|valid| are integers.
        let train = strings(&["CCO"]);
        let g = strings(&["CCO", "OCC", "CCC", "C(", "CCN", "CCN"]);
        let n = g.len() as f64;
        let v = validity(&g).unwrap() * n;
        let nov = novelty(&g, &train).unwrap() * n;
        assert!((v - v.round()).abs() < 1e-9);
        assert!((nov - nov.round()).abs() < 1e-9);
        let n_valid = g.iter().filter(|s| is_valid(s)).count() as f64;
        let u = uniqueness(&g).unwrap() * n_valid;
        assert!((u - u.round()).abs() < 1e-9);
    }

    #[test]
    fn evaluate_produces_full_report() {
        let train = strings(&["CCO", "CCC"]);
        let g = strings(&["CCO", "CCN", "C(", "OCC"]);
        let report = evaluate(&g, &train).unwrap();
        assert_eq!(report.n_generated, 4);
        assert_eq!(report.validity, 0.75);
        assert_eq!(report.novelty, 0.25);
        assert!(report.uniqueness.is_some());
        let json = report.to_json();
        assert!(json.contains("\"validity\""));
        let csv = report.to_csv();
        assert!(csv.starts_with("metric,value\n"));
        assert!(csv.contains("mw_histogram"));
    }
}
