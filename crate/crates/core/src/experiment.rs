//! Train → attack → defend orchestration and its `key = value` config format.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attack::{craft_from, AttackConfig, AttackResult};
use crate::mnist::{load_test, Image, LabeledDataset, MnistFiles};
use crate::model::{load_checkpoint, Model};
use crate::report;
use crate::rotation::{sweep, Interpolation, RotationConfig, SweepRecord};
use crate::{Error, Result, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub source_class: usize,
    pub target_class: usize,
    pub sample_count: usize,
    pub epsilon_step: f64,
    pub iterations: usize,
    pub rotation: RotationConfig,
    pub data_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub output_dir: PathBuf,
    pub files: MnistFiles,
}

impl Default for ExperimentConfig {
    /// Digit 1 attacked toward 8 on ten images.
    fn default() -> Self {
        let attack = AttackConfig::new(8);
        ExperimentConfig {
            seed: 42,
            source_class: 1,
            target_class: 8,
            sample_count: 10,
            epsilon_step: attack.epsilon_step,
            iterations: attack.iterations,
            rotation: RotationConfig::default(),
            data_dir: PathBuf::from("data/mnist"),
            checkpoint: PathBuf::from("lenet5.ckpt"),
            output_dir: PathBuf::from("results"),
            files: MnistFiles::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "seed",
    "source_class",
    "target_class",
    "sample_count",
    "epsilon_step",
    "iterations",
    "angle_min",
    "angle_max",
    "angle_step",
    "fill_value",
    "interpolation",
    "data_dir",
    "checkpoint",
    "output_dir",
    "train_images",
    "train_labels",
    "test_images",
    "test_labels",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::validation(format!("cannot parse {key} = {value:?}")))
}

impl ExperimentConfig {
    pub fn attack(&self) -> AttackConfig {
        AttackConfig {
            epsilon_step: self.epsilon_step,
            iterations: self.iterations,
            target_class: self.target_class,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source_class >= NUM_CLASSES || self.target_class >= NUM_CLASSES {
            return Err(Error::validation("source_class and target_class must be digits"));
        }
        if self.source_class == self.target_class {
            return Err(Error::validation("source_class and target_class must differ"));
        }
        if self.sample_count == 0 {
            return Err(Error::validation("sample_count must be at least 1"));
        }
        self.attack().validate()?;
        self.rotation.validate()
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// missing keys keep their defaults and unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("line {}: expected `key = value`", n + 1)))?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        let unknown: Vec<&str> = entries
            .keys()
            .map(String::as_str)
            .filter(|k| !KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::validation(format!(
                "unknown config keys: {}",
                unknown.join(", ")
            )));
        }

        let mut cfg = ExperimentConfig::default();
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "seed" => cfg.seed = parse_value(key, v)?,
                "source_class" => cfg.source_class = parse_value(key, v)?,
                "target_class" => cfg.target_class = parse_value(key, v)?,
                "sample_count" => cfg.sample_count = parse_value(key, v)?,
                "epsilon_step" => cfg.epsilon_step = parse_value(key, v)?,
                "iterations" => cfg.iterations = parse_value(key, v)?,
                "angle_min" => cfg.rotation.angle_min = parse_value(key, v)?,
                "angle_max" => cfg.rotation.angle_max = parse_value(key, v)?,
                "angle_step" => cfg.rotation.angle_step = parse_value(key, v)?,
                "fill_value" => cfg.rotation.fill_value = parse_value(key, v)?,
                "interpolation" => {
                    cfg.rotation.interpolation = match v {
                        "bilinear" => Interpolation::Bilinear,
                        other => return Err(Error::validation(format!("unsupported interpolation {other:?}"))),
                    }
                }
                "data_dir" => cfg.data_dir = PathBuf::from(v),
                "checkpoint" => cfg.checkpoint = PathBuf::from(v),
                "output_dir" => cfg.output_dir = PathBuf::from(v),
                "train_images" => cfg.files.train_images = v.to_string(),
                "train_labels" => cfg.files.train_labels = v.to_string(),
                "test_images" => cfg.files.test_images = v.to_string(),
                "test_labels" => cfg.files.test_labels = v.to_string(),
                _ => unreachable!("keys were checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        ExperimentConfig::parse(&text)
    }
}

/// One row of the results table. Confidences are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub image_index: usize,
    pub true_label: usize,
    pub target_label: usize,
    /// True-class confidence on the clean image.
    pub orig_conf: f64,
    /// Target-class confidence on the adversarial image.
    pub adv_conf_target: f64,
    pub adv_conf_true: f64,
    pub best_angle: i32,
    /// True-class confidence at the best angle.
    pub rot_conf_true: f64,
    /// Signed `orig_conf - rot_conf_true`.
    pub changing_rate: f64,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub samples: usize,
    pub attack_success_rate: f64,
    pub recovery_rate: f64,
    /// Rows whose rotated true-class confidence is at least 90%.
    pub high_confidence_recoveries: usize,
    pub mean_best_angle: f64,
    pub min_best_angle: i32,
    pub max_best_angle: i32,
    pub mean_changing_rate: f64,
}

impl Summary {
    pub fn from_rows(records: &[ExperimentRecord], attacks: &[AttackResult]) -> Self {
        let n = records.len().max(1) as f64;
        Summary {
            samples: records.len(),
            attack_success_rate: attacks.iter().filter(|a| a.success).count() as f64 / attacks.len().max(1) as f64,
            recovery_rate: records.iter().filter(|r| r.recovered).count() as f64 / n,
            high_confidence_recoveries: records.iter().filter(|r| r.rot_conf_true >= 90.0).count(),
            mean_best_angle: records.iter().map(|r| f64::from(r.best_angle)).sum::<f64>() / n,
            min_best_angle: records.iter().map(|r| r.best_angle).min().unwrap_or(0),
            max_best_angle: records.iter().map(|r| r.best_angle).max().unwrap_or(0),
            mean_changing_rate: records.iter().map(|r| r.changing_rate).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ExperimentRecord>,
    pub attacks: Vec<AttackResult>,
    pub sweeps: Vec<SweepRecord>,
    pub summary: Summary,
}

/// Test-set indices of `class` that the model classifies correctly.
pub fn correctly_classified(model: &Model, data: &LabeledDataset, class: usize) -> Result<Vec<usize>> {
    let candidates: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels()[i] as usize == class)
        .collect();
    let hits = crate::par::map_slice(&candidates, |&i| Ok(model.predict(&data.images()[i])? == class))?;
    Ok(candidates
        .into_iter()
        .zip(hits)
        .filter_map(|(i, hit)| hit.then_some(i))
        .collect())
}

/// Seeded pick of `count` distinct indices.
pub fn sample_indices(pool: &[usize], count: usize, seed: u64) -> Result<Vec<usize>> {
    if pool.len() < count {
        return Err(Error::validation(format!(
            "only {} eligible images, {count} requested",
            pool.len()
        )));
    }
    let mut picked = pool.to_vec();
    picked.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    picked.truncate(count);
    Ok(picked)
}

/// Attacks and defends a single clean image.
pub fn evaluate_image(
    model: &Model,
    image_index: usize,
    image: &Image,
    true_label: usize,
    attack: &AttackConfig,
    rotation: &RotationConfig,
) -> Result<(ExperimentRecord, AttackResult, SweepRecord)> {
    let clean = model.predict_proba(image)?;
    let result = craft_from(model, image, true_label, attack)?;
    let adv = model.predict_proba(&result.adversarial)?;
    let record = sweep(model, &result.adversarial, true_label, rotation)?;
    let orig_conf = 100.0 * clean.get(true_label);
    let rot_conf_true = 100.0 * record.best_confidence;
    let row = ExperimentRecord {
        image_index,
        true_label,
        target_label: attack.target_class,
        orig_conf,
        adv_conf_target: 100.0 * adv.get(attack.target_class),
        adv_conf_true: 100.0 * adv.get(true_label),
        best_angle: record.best_angle,
        rot_conf_true,
        changing_rate: orig_conf - rot_conf_true,
        recovered: record.recovered,
    };
    Ok((row, result, record))
}

/// Runs the protocol against an already loaded model and test set.
pub fn run_with(model: &Model, test: &LabeledDataset, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let eligible = correctly_classified(model, test, config.source_class)?;
    let picked = sample_indices(&eligible, config.sample_count, config.seed)?;
    let attack = config.attack();
    let rows = crate::par::map_slice(&picked, |&i| {
        evaluate_image(
            model,
            i,
            &test.images()[i],
            config.source_class,
            &attack,
            &config.rotation,
        )
    })?;

    let mut outcome = ExperimentOutcome {
        records: Vec::with_capacity(rows.len()),
        attacks: Vec::with_capacity(rows.len()),
        sweeps: Vec::with_capacity(rows.len()),
        summary: Summary::from_rows(&[], &[]),
    };
    for (record, attack, sweep) in rows {
        outcome.records.push(record);
        outcome.attacks.push(attack);
        outcome.sweeps.push(sweep);
    }
    outcome.summary = Summary::from_rows(&outcome.records, &outcome.attacks);
    Ok(outcome)
}

/// Loads the checkpoint and test set named in `config` and runs the protocol.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let model = load_checkpoint(&config.checkpoint)?;
    let test = load_test(&config.data_dir, &config.files)?;
    run_with(&model, &test, config)
}

/// Writes `records.csv`, one `sweep_<index>.csv` per image and `summary.txt`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    report::emit_records_csv(&outcome.records, &dir.join("records.csv"))?;
    for (row, sweep) in outcome.records.iter().zip(&outcome.sweeps) {
        report::emit_sweep_csv(sweep, &dir.join(format!("sweep_{}.csv", row.image_index)))?;
    }
    report::write_summary(&outcome.summary, &dir.join("summary.txt"))
}
