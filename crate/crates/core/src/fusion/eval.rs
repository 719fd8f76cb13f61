use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FusionConfig, Mode, Task};
use super::system::{extract_dataset, train_on_windows, Channel, ExtractedWindow, TrainedSystem};
use crate::classify::ClassifierKind;
use crate::data::{SessionDataset, TrialRecord};
use crate::seed::{derive, stage};
use crate::{Error, Result};

/// Count matrix: entry `(i, j)` counts true class `i` predicted as `j`.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::InvalidInput(format!("class index {} outside 0..{n_classes}", p.max(l))));
        }
        m[l][p] += 1;
    }
    Ok(m)
}

pub fn accuracy_of(confusion: &[Vec<usize>]) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    let hits: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Accuracy of one candidate classifier across all folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub name: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub task: Task,
    /// Name of the reported classifier, e.g. `FACIAL/KNN` or `FUSED/QDA`.
    pub classifier: String,
    pub accuracy: f64,
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_fold: Vec<f64>,
    pub chance_level: f64,
    pub candidates: Vec<CandidateScore>,
    pub rejected_windows: usize,
}

impl EvalReport {
    /// Plain-text confusion table with true classes as rows.
    pub fn confusion_table(&self) -> String {
        let w = self.class_names.iter().map(String::len).max().unwrap_or(4).max(5);
        let mut s = format!("{:>w$}", "true\\pred");
        for n in &self.class_names {
            let _ = write!(s, " {n:>w$}");
        }
        s.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            let _ = write!(s, "{name:>w$}");
            let pad = "true\\pred".len().max(w) - w;
            s.push_str(&" ".repeat(pad));
            for c in row {
                let _ = write!(s, " {c:>w$}");
            }
            s.push('\n');
        }
        s
    }
}

/// Named predictions of one candidate classifier for a fold's test windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub name: String,
    pub predictions: Vec<usize>,
}

/// Fold index of every trial. Trials of each task class are shuffled with
/// the configured seed and dealt round-robin, the deal continuing across
/// classes so fold sizes stay balanced.
pub fn assign_folds(trials: &[(String, usize)], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, stage::FOLDS, 0));
    let mut out = vec![0; trials.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..trials.len()).filter(|&i| trials[i].1 == class).collect();
        if idx.len() < folds {
            return Err(Error::InvalidInput(format!(
                "stratified {folds}-fold split infeasible: class {class} has {} trials",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            out[i] = next % folds;
            next += 1;
        }
    }
    Ok(out)
}

/// Candidates evaluated by the pipeline for each mode.
pub fn default_candidates(system: &TrainedSystem, test: &[&ExtractedWindow]) -> Result<Vec<Candidate>> {
    let feats: Vec<_> = test.iter().map(|w| system.window_features(w)).collect::<Result<_>>()?;
    let run = |name: String, f: &dyn Fn(&super::system::WindowFeatures) -> Result<usize>| -> Result<Candidate> {
        Ok(Candidate {
            name,
            predictions: feats.iter().map(f).collect::<Result<_>>()?,
        })
    };
    let single = |ch: Channel| -> Result<Vec<Candidate>> {
        ClassifierKind::ALL
            .iter()
            .map(|&k| {
                let prefix = match ch {
                    Channel::Facial => "FACIAL",
                    Channel::Physio => "PHYSIO",
                };
                run(format!("{prefix}/{k}"), &|f| Ok(system.predict_channel(ch, k, f)?.class))
            })
            .collect()
    };
    match system.config.mode {
        Mode::FacialOnly => single(Channel::Facial),
        Mode::PhysioOnly => single(Channel::Physio),
        Mode::DecisionVote => Ok(vec![run("VOTE".into(), &|f| Ok(system.predict_decision_vote(f)?.class))?]),
        Mode::FeatureFusion => Ok(vec![run(format!("FUSED/{}", system.config.fusion_classifier), &|f| {
            Ok(system.predict_feature_fusion(f)?.class)
        })?]),
    }
}

/// Trial-level stratified k-fold evaluation of the configured mode. Single-
/// channel modes report the best of their three classifiers.
pub fn crossvalidate(dataset: &SessionDataset, config: &FusionConfig) -> Result<EvalReport> {
    let ext = extract_dataset(dataset, config)?;
    let mut report = crossvalidate_windows(&ext.windows, config, |train, test| {
        let system = train_on_windows(train, config)?;
        default_candidates(&system, test)
    })?;
    report.rejected_windows = ext.rejected.len();
    Ok(report)
}

/// Cross-validation with a caller-supplied train-and-predict step. `fit_predict`
/// receives the training windows and the held-out windows of one fold and
/// returns one or more named candidates.
pub fn crossvalidate_windows<F>(windows: &[ExtractedWindow], config: &FusionConfig, fit_predict: F) -> Result<EvalReport>
where
    F: Fn(&[&ExtractedWindow], &[&ExtractedWindow]) -> Result<Vec<Candidate>> + Sync,
{
    config.validate()?;
    let task = config.task;
    let n = task.n_classes();
    let mut trials: Vec<(String, usize)> = Vec::new();
    for w in windows {
        if !trials.iter().any(|(id, _)| *id == w.trial_id) {
            trials.push((w.trial_id.clone(), task.class_of(w.label)));
        }
    }
    let fold_of_trial = assign_folds(&trials, n, config.folds, config.seed)?;
    let fold_of = |w: &ExtractedWindow| {
        let i = trials.iter().position(|(id, _)| *id == w.trial_id).expect("trial listed");
        fold_of_trial[i]
    };

    let results: Vec<(Vec<usize>, Vec<Candidate>)> = (0..config.folds)
        .into_par_iter()
        .map(|k| {
            let (test, train): (Vec<&ExtractedWindow>, Vec<&ExtractedWindow>) =
                windows.iter().partition(|w| fold_of(w) == k);
            let truth: Vec<usize> = test.iter().map(|w| task.class_of(w.label)).collect();
            let cands = fit_predict(&train, &test)?;
            if let Some(c) = cands.iter().find(|c| c.predictions.len() != truth.len()) {
                return Err(Error::DimensionMismatch {
                    expected: truth.len(),
                    got: c.predictions.len(),
                });
            }
            Ok((truth, cands))
        })
        .collect::<Result<_>>()?;

    let names: Vec<String> = results
        .first()
        .map(|(_, c)| c.iter().map(|c| c.name.clone()).collect())
        .unwrap_or_default();
    if names.is_empty() {
        return Err(Error::InvalidInput("no candidate predictions".into()));
    }
    let mut best: Option<(usize, Vec<Vec<usize>>, Vec<f64>)> = None;
    let mut candidates = Vec::new();
    for (ci, name) in names.iter().enumerate() {
        let mut total = vec![vec![0; n]; n];
        let mut per_fold = Vec::new();
        for (truth, cands) in &results {
            let c = cands
                .get(ci)
                .filter(|c| c.name == *name)
                .ok_or_else(|| Error::InvalidInput("folds returned different candidates".into()))?;
            let m = confusion_matrix(&c.predictions, truth, n)?;
            per_fold.push(accuracy_of(&m));
            for (row, mrow) in total.iter_mut().zip(&m) {
                for (a, b) in row.iter_mut().zip(mrow) {
                    *a += b;
                }
            }
        }
        let acc = accuracy_of(&total);
        candidates.push(CandidateScore {
            name: name.clone(),
            accuracy: acc,
        });
        if best.as_ref().is_none_or(|(b, _, _)| acc > candidates[*b].accuracy) {
            best = Some((ci, total, per_fold));
        }
    }
    let (bi, confusion, per_fold) = best.expect("at least one candidate");
    Ok(EvalReport {
        mode: config.mode,
        task,
        classifier: names[bi].clone(),
        accuracy: accuracy_of(&confusion),
        class_names: task.class_names(),
        confusion,
        per_fold,
        chance_level: task.chance_level(),
        candidates,
        rejected_windows: 0,
    })
}

/// The session with trial labels shuffled among trials (seeded), for null checks.
pub fn permute_labels(dataset: &SessionDataset, seed: u64) -> SessionDataset {
    let mut labels: Vec<_> = dataset.trials.iter().map(|t| t.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(seed, stage::PERMUTE, 0)));
    SessionDataset {
        subject_id: dataset.subject_id.clone(),
        trials: dataset
            .trials
            .iter()
            .zip(labels)
            .map(|(t, label)| TrialRecord { label, ..t.clone() })
            .collect(),
    }
}
