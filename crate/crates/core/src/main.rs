use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rotguard::attack::{craft_from, AttackConfig};
use rotguard::experiment::{correctly_classified, run_experiment, sample_indices, write_outputs, ExperimentConfig};
use rotguard::mnist::{load_test, load_train_file, split_train_validation, MnistFiles};
use rotguard::model::{load_checkpoint, save_checkpoint, Model, TrainConfig};
use rotguard::report;
use rotguard::rotation::{defend, RotationConfig};
use rotguard::{Error, Result};

/// LeNet-5 on MNIST, targeted iterative FGSM, and a rotation-sweep defense.
#[derive(Parser)]
#[command(name = "rotguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding the four MNIST IDX files.
    #[arg(long, default_value = "data/mnist")]
    data_dir: PathBuf,
    #[arg(long)]
    train_images: Option<String>,
    #[arg(long)]
    train_labels: Option<String>,
    #[arg(long)]
    test_images: Option<String>,
    #[arg(long)]
    test_labels: Option<String>,
}

impl DataArgs {
    fn files(&self) -> MnistFiles {
        let d = MnistFiles::default();
        MnistFiles {
            train_images: self.train_images.clone().unwrap_or(d.train_images),
            train_labels: self.train_labels.clone().unwrap_or(d.train_labels),
            test_images: self.test_images.clone().unwrap_or(d.test_images),
            test_labels: self.test_labels.clone().unwrap_or(d.test_labels),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Stop once validation accuracy reaches this value.
        #[arg(long, default_value_t = 1.0)]
        target_accuracy: f64,
        /// Use only the first N training and validation samples.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, short, default_value = "lenet5.ckpt")]
        out: PathBuf,
    },
    /// Report test accuracy and the layer table.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "lenet5.ckpt")]
        checkpoint: PathBuf,
        /// Evaluate only the first N test images.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Craft a targeted adversarial example from a test image.
    Attack {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "lenet5.ckpt")]
        checkpoint: PathBuf,
        /// Test-set index to attack.
        #[arg(long, conflicts_with = "class", required_unless_present = "class")]
        index: Option<usize>,
        /// Pick a correctly classified test image of this class.
        #[arg(long)]
        class: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value = "attack_out")]
        out_dir: PathBuf,
    },
    /// Sweep rotations of an image file and report the best angle.
    Defend {
        #[arg(long, default_value = "lenet5.ckpt")]
        checkpoint: PathBuf,
        /// A `.csv` (28 rows of 28 values) or 8-bit `.pgm` image.
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        label: usize,
        #[arg(long, default_value_t = 0)]
        angle_min: i32,
        #[arg(long, default_value_t = 90)]
        angle_max: i32,
        #[arg(long, default_value_t = 1)]
        angle_step: u32,
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
        /// Where to write the per-angle probability table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full attack and defense protocol from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        context: format!("creating {}", dir.display()),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            epochs,
            batch_size,
            learning_rate,
            seed,
            target_accuracy,
            limit,
            out,
        } => {
            let config = TrainConfig {
                epochs,
                batch_size,
                learning_rate,
                seed,
                validation_target_accuracy: target_accuracy,
            };
            config.validate()?;
            let (mut train, mut validation) =
                split_train_validation(load_train_file(&data.data_dir, &data.files())?, seed)?;
            if let Some(n) = limit {
                train = train.subset(&(0..n.min(train.len())).collect::<Vec<_>>())?;
                validation = validation.subset(&(0..n.min(validation.len())).collect::<Vec<_>>())?;
            }
            let mut model = Model::new(seed);
            let report = model.train(&train, &validation, &config, |s| {
                let acc = s.validation_accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}"));
                println!("epoch {:>2}  loss {:.4}  val_acc {acc}", s.epoch + 1, s.mean_loss);
            })?;
            save_checkpoint(&model, &out)?;
            if report.reached_target {
                println!("reached validation target after {} epochs", report.epochs.len());
            }
            println!("wrote {}", out.display());
        }
        Command::Eval {
            data,
            checkpoint,
            limit,
        } => {
            let model = load_checkpoint(&checkpoint)?;
            let mut test = load_test(&data.data_dir, &data.files())?;
            if let Some(n) = limit {
                test = test.subset(&(0..n.min(test.len())).collect::<Vec<_>>())?;
            }
            println!("{:<6} {:<14} {:>8} {:>12}", "layer", "output", "params", "connections");
            for l in Model::summary() {
                let shape = l
                    .output_shape
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("x");
                println!("{:<6} {:<14} {:>8} {:>12}", l.name, shape, l.params, l.connections);
            }
            println!("test_accuracy = {:.4} ({} images)", model.accuracy(&test)?, test.len());
        }
        Command::Attack {
            data,
            checkpoint,
            index,
            class,
            seed,
            target,
            epsilon,
            iterations,
            out_dir,
        } => {
            let model = load_checkpoint(&checkpoint)?;
            let test = load_test(&data.data_dir, &data.files())?;
            let index = match (index, class) {
                (Some(i), _) => i,
                (None, Some(c)) => sample_indices(&correctly_classified(&model, &test, c)?, 1, seed)?[0],
                (None, None) => unreachable!("clap requires --index or --class"),
            };
            let (image, label) = test
                .get(index)
                .ok_or_else(|| Error::Validation(format!("test index {index} out of range")))?;
            let config = AttackConfig {
                epsilon_step: epsilon,
                iterations,
                target_class: target,
            };
            let result = craft_from(&model, image, label as usize, &config)?;
            create_dir(&out_dir)?;
            report::write_image_csv(&result.adversarial, &out_dir.join("adversarial.csv"))?;
            report::write_pgm(&result.adversarial, &out_dir.join("adversarial.pgm"))?;
            report::write_pgm(image, &out_dir.join("original.pgm"))?;
            report::write_trace_csv(&result.trace, &out_dir.join("trace.csv"))?;
            println!("image_index = {index}");
            println!("true_label = {label}");
            println!("target_label = {target}");
            println!("success = {}", result.success);
            println!("target_confidence = {:.4}", result.final_target_confidence());
            println!("l0 = {}", result.metrics.l0);
            println!("l2 = {:.4}", result.metrics.l2);
            println!("linf = {:.4}", result.metrics.linf);
        }
        Command::Defend {
            checkpoint,
            image,
            label,
            angle_min,
            angle_max,
            angle_step,
            fill,
            out,
        } => {
            let model = load_checkpoint(&checkpoint)?;
            let img = report::read_image(&image)?;
            let config = RotationConfig {
                angle_min,
                angle_max,
                angle_step,
                fill_value: fill,
                ..RotationConfig::default()
            };
            let (recovered, record) = defend(&model, &img, label, &config)?;
            if let Some(path) = out {
                report::emit_sweep_csv(&record, &path)?;
            }
            println!("best_angle = {}", record.best_angle);
            println!("true_confidence = {:.4}", record.best_confidence);
            println!(
                "prediction = {}",
                record.curve_at(record.best_angle).map_or(label, |p| p.argmax())
            );
            println!("recovered = {recovered}");
        }
        Command::Experiment { config } => {
            let config = ExperimentConfig::from_file(&config)?;
            let outcome = run_experiment(&config)?;
            write_outputs(&outcome, &config.output_dir)?;
            print!("{}", report::summary_text(&outcome.summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
