use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use emoglass::data::{EmotionLabel, SessionDataset};
use emoglass::fusion::{
    crossvalidate, extract_dataset, load_system, save_system, train_system, FusionConfig, Mode, TrainedSystem,
};
use emoglass::io::{load_session, save_session, MANIFEST_FILE};
use emoglass::physio::physio_feature_names;
use emoglass::synth::synth_session;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Provenance, RunConfig};
use crate::{
    ExtractArgs, Failure, InspectArgs, PipelineArgs, PredictArgs, SynthArgs, TrainArgs, WindowArgs, XvalArgs,
};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const FEATURES_FILE: &str = "physio_features.csv";
pub const WINDOW_INDEX_FILE: &str = "windows.csv";
pub const EXTRACT_CONFIG_FILE: &str = "extract_config.json";
pub const MODEL_FILE: &str = "model.sys";
pub const REPORT_FILE: &str = "xval_report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PREDICT_CONFIG_FILE: &str = "predictions_config.json";

fn progress(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn load_dataset(cfg: &RunConfig, p: &Path) -> Result<SessionDataset, Failure> {
    let path = manifest_path(p);
    progress(cfg, format!("loading {}", path.display()));
    load_session(&path).map_err(Failure::io)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

/// Provenance document with extra top-level entries.
fn provenance_doc(command: &str, cfg: &RunConfig, extra: Vec<(&str, Value)>) -> String {
    let mut doc = serde_json::to_value(Provenance::new(command, cfg)).expect("plain data serializes");
    for (k, v) in extra {
        doc[k] = v;
    }
    to_json(&doc)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<(), Failure> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Failure::config(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn apply_windows(p: &mut FusionConfig, a: &WindowArgs) -> Result<(), Failure> {
    positive("obs", a.obs)?;
    positive("scsr-cutoff", a.scsr_cutoff)?;
    positive("scvsr-cutoff", a.scvsr_cutoff)?;
    if a.stride.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
        return Err(Failure::config("--stride must be non-negative"));
    }
    if a.count == Some(0) || a.filter_order == Some(0) {
        return Err(Failure::config("--count and --filter-order must be at least 1"));
    }
    let w = &mut p.windows;
    w.length_s = a.obs.unwrap_or(w.length_s);
    w.stride_s = a.stride.unwrap_or(w.stride_s);
    w.count = a.count.unwrap_or(w.count);
    let f = &mut p.filters;
    f.scsr.cutoff_hz = a.scsr_cutoff.unwrap_or(f.scsr.cutoff_hz);
    f.scvsr.cutoff_hz = a.scvsr_cutoff.unwrap_or(f.scvsr.cutoff_hz);
    if let Some(order) = a.filter_order {
        f.scsr.order = order;
        f.scvsr.order = order;
    }
    Ok(())
}

fn apply_pipeline(p: &mut FusionConfig, a: &PipelineArgs) -> Result<(), Failure> {
    apply_windows(p, &a.windows)?;
    p.mode = a.mode.unwrap_or(p.mode);
    p.task = a.task.unwrap_or(p.task);
    p.channel_classifier = a.classifier.unwrap_or(p.channel_classifier);
    p.fusion_classifier = a.fusion_classifier.unwrap_or(p.fusion_classifier);
    p.knn_k = a.knn_k.unwrap_or(p.knn_k);
    p.gmm_components = a.gmm_components.unwrap_or(p.gmm_components);
    p.relieff_k = a.relieff_k.unwrap_or(p.relieff_k);
    p.relieff_threshold = a.relieff_threshold.unwrap_or(p.relieff_threshold);
    p.pca_energy = a.pca_energy.unwrap_or(p.pca_energy);
    p.folds = a.folds.unwrap_or(p.folds);
    p.validate().map_err(Failure::config)
}

pub fn synth(mut cfg: RunConfig, a: &SynthArgs) -> Result<(), Failure> {
    let s = &mut cfg.synth;
    s.n_trials = a.trials.unwrap_or(s.n_trials);
    s.trial_s = a.trial_s.unwrap_or(s.trial_s);
    s.physio_rate_hz = a.physio_rate.unwrap_or(s.physio_rate_hz);
    s.frame_rate_hz = a.frame_rate.unwrap_or(s.frame_rate_hz);
    s.frame_width = a.width.unwrap_or(s.frame_width);
    s.frame_height = a.height.unwrap_or(s.frame_height);
    s.facial_snr = a.facial_snr.unwrap_or(s.facial_snr);
    s.physio_snr = a.physio_snr.unwrap_or(s.physio_snr);
    if a.uninformative_physio {
        *s = s.clone().with_uninformative_physio();
    }
    s.validate().map_err(Failure::config)?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Failure::config("synth needs --out <dir>"))?;

    progress(&cfg, format!("generating {} trials", cfg.synth.n_trials));
    let (dataset, truth) = synth_session(&cfg.synth).map_err(Failure::config)?;
    progress(&cfg, format!("writing {}", out.display()));
    let manifest = save_session(&dataset, &out).map_err(Failure::io)?;
    write_file(&out.join(GROUND_TRUTH_FILE), &to_json(&truth))?;
    write_file(&out.join(RUN_CONFIG_FILE), &provenance_doc("synth", &cfg, vec![]))?;
    println!("{}: {} trials", manifest.display(), dataset.trials.len());
    Ok(())
}

pub fn extract(mut cfg: RunConfig, a: &ExtractArgs) -> Result<(), Failure> {
    apply_windows(&mut cfg.pipeline, &a.windows)?;
    let dataset = load_dataset(&cfg, &a.dataset)?;
    let ext = extract_dataset(&dataset, &cfg.pipeline).map_err(Failure::training)?;
    for r in &ext.rejected {
        eprintln!("rejected window {} @ {} s: {}", r.trial_id, r.offset_s, r.reason);
    }

    let mut features = String::from("trial_id,offset_s");
    for n in physio_feature_names() {
        let _ = write!(features, ",{n}");
    }
    features.push_str(",label\n");
    for w in &ext.windows {
        let _ = write!(features, "{},{}", csv_field(&w.trial_id), w.offset_s);
        for v in &w.physio {
            let _ = write!(features, ",{v}");
        }
        let _ = writeln!(features, ",{}", w.label);
    }

    // Index of every sliced window, in trial then offset order, whether kept or not.
    let mut index = String::from("trial_id,offset_s,label,status\n");
    for t in &dataset.trials {
        let mut rows: Vec<(f64, &str)> = ext
            .windows
            .iter()
            .filter(|w| w.trial_id == t.trial_id)
            .map(|w| (w.offset_s, "ok"))
            .chain(ext.rejected.iter().filter(|r| r.trial_id == t.trial_id).map(|r| (r.offset_s, "rejected")))
            .collect();
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (offset, status) in rows {
            let _ = writeln!(index, "{},{offset},{},{status}", csv_field(&t.trial_id), t.label);
        }
    }

    let out = cfg.out_dir();
    write_file(&out.join(FEATURES_FILE), &features)?;
    write_file(&out.join(WINDOW_INDEX_FILE), &index)?;
    write_file(&out.join(EXTRACT_CONFIG_FILE), &provenance_doc("extract", &cfg, vec![]))?;
    println!(
        "{} windows extracted, {} rejected -> {}",
        ext.windows.len(),
        ext.rejected.len(),
        out.join(FEATURES_FILE).display()
    );
    Ok(())
}

pub fn train(mut cfg: RunConfig, a: &TrainArgs) -> Result<(), Failure> {
    apply_pipeline(&mut cfg.pipeline, &a.pipeline)?;
    let dataset = load_dataset(&cfg, &a.dataset)?;
    progress(&cfg, format!("training {} / {}", cfg.pipeline.mode, cfg.pipeline.task));
    let system = train_system(&dataset, &cfg.pipeline).map_err(Failure::training)?;
    let path = a.model.clone().unwrap_or_else(|| cfg.out_dir().join(MODEL_FILE));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    }
    save_system(&system, &path).map_err(Failure::io)?;
    println!("{}", describe_system(&system));
    println!("saved {}", path.display());
    Ok(())
}

pub fn xval(mut cfg: RunConfig, a: &XvalArgs) -> Result<(), Failure> {
    apply_pipeline(&mut cfg.pipeline, &a.pipeline)?;
    let dataset = load_dataset(&cfg, &a.dataset)?;
    progress(&cfg, format!("{}-fold cross-validation", cfg.pipeline.folds));
    let report = crossvalidate(&dataset, &cfg.pipeline).map_err(Failure::training)?;

    let mut s = String::new();
    let _ = writeln!(s, "mode          {}", report.mode);
    let _ = writeln!(s, "task          {}", report.task);
    let _ = writeln!(s, "classifier    {}", report.classifier);
    let _ = writeln!(s, "accuracy      {:.4}", report.accuracy);
    let _ = writeln!(s, "chance_level  {}", report.chance_level);
    let folds: Vec<String> = report.per_fold.iter().map(|v| format!("{v:.4}")).collect();
    let _ = writeln!(s, "per_fold      {}", folds.join(" "));
    let _ = writeln!(s, "rejected      {}", report.rejected_windows);
    for c in &report.candidates {
        let _ = writeln!(s, "  {:<14}{:.4}", c.name, c.accuracy);
    }
    s.push('\n');
    s.push_str(&report.confusion_table());
    print!("{s}");

    let path = cfg.out_dir().join(REPORT_FILE);
    let doc = provenance_doc("xval", &cfg, vec![("report", serde_json::to_value(&report).expect("serializes"))]);
    write_file(&path, &doc)
}

pub fn predict(mut cfg: RunConfig, a: &PredictArgs) -> Result<(), Failure> {
    let mut system = load_system(&a.model).map_err(Failure::io)?;
    if let Some(mode) = a.mode {
        if mode == Mode::FeatureFusion && system.fused.is_none() {
            return Err(Failure::config("the saved system was trained without a feature-fusion stage"));
        }
        system.config.mode = mode;
    }
    // The saved pipeline is authoritative; only the seed and output settings come from this run.
    cfg.pipeline = system.config.clone();
    let dataset = load_dataset(&cfg, &a.dataset)?;
    let ext = extract_dataset(&dataset, &system.config).map_err(Failure::training)?;
    for r in &ext.rejected {
        eprintln!("rejected window {} @ {} s: {}", r.trial_id, r.offset_s, r.reason);
    }

    let task = system.config.task;
    let names = task.class_names();
    let mut csv = String::from("trial_id,offset_s,true_label,predicted_label\n");
    let mut hits = 0;
    for w in &ext.windows {
        let p = system.predict(w).map_err(Failure::training)?;
        let truth = task.class_of(w.label);
        hits += usize::from(p.class == truth);
        let _ = writeln!(csv, "{},{},{},{}", csv_field(&w.trial_id), w.offset_s, names[truth], names[p.class]);
    }

    let out = cfg.out_dir();
    write_file(&out.join(PREDICTIONS_FILE), &csv)?;
    let model = Value::String(a.model.display().to_string());
    write_file(&out.join(PREDICT_CONFIG_FILE), &provenance_doc("predict", &cfg, vec![("model", model)]))?;
    let n = ext.windows.len();
    let acc = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    println!("accuracy {acc:.4} ({hits}/{n} windows) -> {}", out.join(PREDICTIONS_FILE).display());
    Ok(())
}

fn describe_system(s: &TrainedSystem) -> String {
    let c = &s.config;
    let kept: Vec<String> = physio_feature_names()
        .into_iter()
        .zip(&s.relieff_mask)
        .filter(|(_, &k)| k)
        .map(|(n, _)| n)
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "format_version  {}", s.format_version);
    let _ = writeln!(out, "mode            {}", c.mode);
    let _ = writeln!(out, "task            {} ({} classes)", c.task, c.task.n_classes());
    let _ = writeln!(out, "classifiers     channel {} / fused {}", c.channel_classifier, c.fusion_classifier);
    let _ = writeln!(out, "seed            {}", c.seed);
    let _ = writeln!(
        out,
        "fisherface      {}x{} -> {} PCA -> {} LDA",
        s.fisher.width,
        s.fisher.height,
        s.fisher.basis.n_components(),
        s.fisher.w_lda.cols
    );
    let _ = writeln!(out, "physio          {}/{} kept: {}", kept.len(), s.relieff_mask.len(), kept.join(" "));
    if let Some(f) = &s.fused {
        let _ = writeln!(out, "fused           {} -> {} PCA", f.pca.dim(), f.pca.n_components());
    }
    out.pop();
    out
}

fn describe_dataset(d: &SessionDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "subject         {}", d.subject_id);
    let _ = writeln!(out, "trials          {}", d.trials.len());
    for l in EmotionLabel::ALL {
        let _ = writeln!(out, "  {:<14}{}", l.as_str(), d.trials.iter().filter(|t| t.label == l).count());
    }
    if let Some(t) = d.trials.first() {
        let _ = writeln!(out, "physio_rate_hz  {}", t.eda.rate_hz);
        let _ = writeln!(out, "frame_rate_hz   {}", t.frames.rate_hz);
        let _ = writeln!(out, "frame_size      {}x{}", t.frames.width, t.frames.height);
    }
    let dur = d.trials.iter().map(|t| t.duration_s());
    let (lo, hi) = dur.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let _ = write!(out, "duration_s      {lo} .. {hi}");
    out
}

pub fn inspect(a: &InspectArgs) -> Result<(), Failure> {
    let is_dataset = a.path.is_dir() || a.path.file_name().is_some_and(|n| n == MANIFEST_FILE);
    if is_dataset {
        let d = load_session(manifest_path(&a.path)).map_err(Failure::io)?;
        println!("{}", describe_dataset(&d));
    } else {
        let s = load_system(&a.path).map_err(Failure::io)?;
        println!("{}", describe_system(&s));
    }
    Ok(())
}
